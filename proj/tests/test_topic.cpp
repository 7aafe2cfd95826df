#include <cmath>
#include <map>
#include <vector>

#include "doctest.h"
#include "testsupport.hpp"
#include "wfibp/stats.hpp"
#include "wfibp/topic.hpp"

using namespace wfibp;
using namespace wfibp::topic;

namespace {

Corpus tiny_corpus(int D, std::vector<std::vector<std::vector<int>>> words) {
  Corpus c;
  c.D = D;
  for (auto& per_time : words) {
    std::vector<Document> docs;
    for (std::size_t i = 0; i < per_time.size(); ++i)
      docs.push_back({static_cast<int>(i), per_time[i]});
    c.docs_by_time.push_back(std::move(docs));
  }
  return c;
}

AllocationSeries all_active(std::vector<int> N, int K) {
  AllocationSeries z(N);
  for (int k = 0; k < K; ++k) z.add_feature(k);
  for (int t = 0; t < z.num_times(); ++t)
    for (int i = 0; i < z.rows_at(t); ++i)
      for (FeatureId k = 0; k < K; ++k) z.set(t, i, k, true);
  return z;
}

}  // namespace

TEST_SUITE("topic") {

TEST_CASE("corpus generation: lengths, degenerate documents, assignments") {
  Rng rng(81);
  TimeGrid grid({0.0, 0.1});
  const std::vector<int> N = {40, 40};
  TopicGenParams gp;
  gp.alpha = 2.0;
  gp.beta = 1.0;
  const double gamma = 4.0;
  auto [corpus, truth] = generate_corpus(3, grid, N, 20, 0.2, gamma, gp, rng);
  corpus.validate();

  // E[W_it] = sum_k z phi within Monte Carlo error, pooled over documents.
  double want = 0.0, got = 0.0;
  for (int t = 0; t < 2; ++t)
    for (int i = 0; i < N[t]; ++i) {
      for (FeatureId k : truth.joint.Z.feature_ids())
        if (truth.joint.Z.get(t, i, k)) want += truth.phi.at({k, t});
      got += static_cast<double>(corpus.docs_by_time[t][i].words.size());
    }
  CHECK(std::fabs(got - want) < 4 * std::sqrt(want + 1.0));

  // Documents with no active topic have zero words; words of a document with
  // one active topic are all assigned to it.
  for (int t = 0; t < 2; ++t)
    for (int i = 0; i < N[t]; ++i) {
      std::vector<FeatureId> active;
      for (FeatureId k : truth.joint.Z.feature_ids())
        if (truth.joint.Z.get(t, i, k)) active.push_back(k);
      if (active.empty()) CHECK(corpus.docs_by_time[t][i].words.empty());
      if (active.size() == 1)
        for (FeatureId a : truth.assignments[t][i]) CHECK(a == active[0]);
    }
}

TEST_CASE("assignment sampling: support and degenerate cases") {
  Rng rng(82);
  Corpus c = tiny_corpus(4, {{{0, 1, 2}, {3, 3}}});
  AllocationSeries z(std::vector<int>{2});
  z.add_feature(0);
  z.add_feature(1);
  z.set(0, 0, 0, true);  // doc 0: only topic 0
  z.set(0, 1, 0, true);  // doc 1: topics 0 and 1
  z.set(0, 1, 1, true);

  TopicState st(c, 0.3, 2.0, 5.0, 1.0);
  st.set_phi(0, 0, 1.5);
  st.set_phi(1, 0, 0.7);
  for (int l = 0; l < 3; ++l) st.set_assignment(0, 0, l, 0);
  st.set_assignment(0, 1, 0, 0);
  st.set_assignment(0, 1, 1, 1);

  // Single active topic: always reassigned to it.
  for (int rep = 0; rep < 30; ++rep)
    CHECK(sample_assignment(st, z, 0, 0, 1, rng) == 0);
  // Two active topics: assignment stays within the active set.
  for (int rep = 0; rep < 200; ++rep) {
    const FeatureId k = sample_assignment(st, z, 0, 1, 0, rng);
    CHECK((k == 0 || k == 1));
  }
  CHECK(st.check_counts());
}

TEST_CASE("assignment conditional matches Polya-urn enumeration") {
  // One document, two words; enumerate the collapsed joint over (a0, a1).
  const int D = 3;
  const double eta = 0.4, phi0 = 1.3, phi1 = 0.6;
  const std::vector<int> words = {0, 2};
  Corpus c = tiny_corpus(D, {{words}});
  AllocationSeries z = all_active({1}, 2);

  auto log_joint = [&](int a0, int a1) {
    // Word part: integrate rho per topic (Polya urn); doc part: Dirichlet-
    // multinomial with concentrations phi over the active topics.
    double lp = 0.0;
    for (int k = 0; k < 2; ++k) {
      std::vector<int> wk;
      if (a0 == k) wk.push_back(words[0]);
      if (a1 == k) wk.push_back(words[1]);
      std::map<int, int> cnt;
      int pos = 0;
      for (int w : wk) {
        lp += std::log((cnt[w] + eta) / (D * eta + pos));
        ++cnt[w];
        ++pos;
      }
    }
    const int n0 = (a0 == 0) + (a1 == 0);
    const int n1 = (a0 == 1) + (a1 == 1);
    lp += std::lgamma(phi0 + phi1) - std::lgamma(phi0 + phi1 + 2.0);
    lp += std::lgamma(phi0 + n0) - std::lgamma(phi0);
    lp += std::lgamma(phi1 + n1) - std::lgamma(phi1);
    return lp;
  };

  // Conditional P(a0 = 0 | a1 = 1).
  const double p = std::exp(log_joint(0, 1)) /
                   (std::exp(log_joint(0, 1)) + std::exp(log_joint(1, 1)));

  Rng rng(83);
  TopicState st(c, eta, 2.0, 5.0, 1.0);
  st.set_phi(0, 0, phi0);
  st.set_phi(1, 0, phi1);
  int hits = 0;
  const int n = 40000;
  for (int r = 0; r < n; ++r) {
    st.set_assignment(0, 0, 0, 0);
    st.set_assignment(0, 0, 1, 1);
    hits += sample_assignment(st, z, 0, 0, 0, rng) == 0;
  }
  const double phat = hits / double(n);
  CHECK(std::fabs(phat - p) < 3 * std::sqrt(p * (1 - p) / n));
}

TEST_CASE("phi target value and prior recovery") {
  // Unnormalized target at phi = 1, one active document with n = 0,
  // gamma = 1: Gamma(1,1) density e^{-1} times NB(0; 1, 1/2) = 1/2.
  Corpus c = tiny_corpus(3, {{{}}});
  AllocationSeries z = all_active({1}, 1);
  TopicState st(c, 0.3, 1.0, 5.0, 1.0);
  st.set_phi(0, 0, 1.0);
  CHECK(phi_log_target(st, z, 0, 0, 1.0) ==
        doctest::Approx(std::log(std::exp(-1.0) * 0.5)));

  // No documents: the MH chain's stationary law is the Gamma(gamma, 1) prior.
  Corpus c0 = tiny_corpus(3, {{}});
  AllocationSeries z0(std::vector<int>{0});
  z0.add_feature(0);
  TopicState st0(c0, 0.3, 2.5, 5.0, 1.0);
  st0.set_phi(0, 0, 1.0);
  Rng rng(84);
  double sum = 0.0, sq = 0.0;
  const int iters = 60000, burn = 2000;
  for (int it = 0; it < iters; ++it) {
    mh_update_phi(st0, z0, 0, 0, rng);
    if (it < burn) continue;
    const double v = st0.phi(0, 0);
    sum += v;
    sq += v * v;
  }
  const int n = iters - burn;
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  CHECK(mean == doctest::Approx(2.5).epsilon(0.05));   // Gamma(2.5,1) mean
  CHECK(var == doctest::Approx(2.5).epsilon(0.15));    // and variance
}

TEST_CASE("gamma prior recovery under empty phi set") {
  Corpus c0 = tiny_corpus(3, {{}});
  TopicState st(c0, 0.3, 3.0, 5.0, 1.0);
  Rng rng(85);
  double sum = 0.0, sq = 0.0;
  const int iters = 60000, burn = 2000;
  for (int it = 0; it < iters; ++it) {
    mh_update_gamma(st, rng);
    if (it < burn) continue;
    sum += st.gamma();
    sq += st.gamma() * st.gamma();
  }
  const int n = iters - burn;
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  CHECK(mean == doctest::Approx(5.0).epsilon(0.05));  // Gamma(5,1)
  CHECK(var == doctest::Approx(5.0).epsilon(0.15));
}

TEST_CASE("topic-entry update: forced activation and reduced odds") {
  Rng rng(86);
  TimeGrid grid({0.0});
  Corpus c = tiny_corpus(3, {{{0, 1}, {}}});
  mcmc::InferenceState st;
  st.grid = grid;
  st.N = {2};
  st.Z = AllocationSeries(std::vector<int>{2});
  st.slices.s = {0.0};
  st.add_feature(0, {0.55});
  st.Z.set(0, 0, 0, true);
  st.Z.set(0, 1, 0, true);

  TopicHook hook(c, 0.3, 2.0, 5.0, 1.0);
  Rng r0 = rng.substream("reset");
  hook.reset(&st, r0);

  // Document 0 has words on topic 0: the entry is forced active.
  for (int rep = 0; rep < 30; ++rep)
    CHECK(mcmc::gibbs_update_entry(st, 0, 0, 0, hook, rng, true));

  // Document 1 has no words: with phi = 0 the odds reduce to Bernoulli(x).
  hook.state().set_phi(0, 0, 0.0);
  int ones = 0;
  const int n = 40000;
  for (int rep = 0; rep < n; ++rep) {
    st.Z.set(0, 1, 0, true);
    ones += mcmc::gibbs_update_entry(st, 0, 1, 0, hook, rng, true);
  }
  CHECK(std::fabs(ones / double(n) - 0.55) < 3 * std::sqrt(0.55 * 0.45 / n));

  // x = 1 activates with probability 1 regardless of phi.
  st.x.at(0)[0] = 1.0;
  hook.state().set_phi(0, 0, 3.0);
  for (int rep = 0; rep < 30; ++rep) {
    st.Z.set(0, 1, 0, false);
    CHECK(mcmc::gibbs_update_entry(st, 0, 1, 0, hook, rng, true));
  }
}

TEST_CASE("estimators") {
  Corpus c = tiny_corpus(4, {{{0, 0, 1}}});
  AllocationSeries z = all_active({1}, 2);
  TopicState st(c, 0.5, 2.0, 5.0, 1.0);
  st.set_phi(0, 0, 1.0);
  st.set_phi(1, 0, 2.0);
  st.set_assignment(0, 0, 0, 0);
  st.set_assignment(0, 0, 1, 0);
  st.set_assignment(0, 0, 2, 0);

  auto rho = estimate_rho(st, {0, 1});
  // Topic 1 has no assignments: uniform 1/D.
  for (double v : rho[1]) CHECK(v == doctest::Approx(0.25));
  // Rows normalize.
  for (FeatureId k : {0, 1}) {
    double s = 0.0;
    for (double v : rho[k]) s += v;
    CHECK(s == doctest::Approx(1.0));
  }
  CHECK(rho[0][0] == doctest::Approx((2 + 0.5) / (3 + 2.0)));

  auto theta = estimate_theta(st, z, 0, 0, {0, 1});
  CHECK(theta[0] == doctest::Approx((3 + 1.0) / (3 + 1.0 + 0 + 2.0)));
  CHECK(theta[1] == doctest::Approx(2.0 / 6.0));

  // Single active topic: theta concentrates on it.
  AllocationSeries z1(std::vector<int>{1});
  z1.add_feature(0);
  z1.add_feature(1);
  z1.set(0, 0, 1, true);
  TopicState st1(c, 0.5, 2.0, 5.0, 1.0);
  st1.set_phi(1, 0, 2.0);
  for (int l = 0; l < 3; ++l) st1.set_assignment(0, 0, l, 1);
  auto th1 = estimate_theta(st1, z1, 0, 0, {0, 1});
  CHECK(th1[1] == doctest::Approx(1.0));
  CHECK(th1[0] == doctest::Approx(0.0));
}

TEST_CASE("perplexity") {
  // Uniform 1/D predictions give perplexity D.
  std::vector<HeldoutWord> words;
  for (int j = 0; j < 10; ++j) words.push_back({0, 0, j % 5});
  PerplexityAccumulator acc(words);
  acc.add_sample([](int, int, int) { return 1.0 / 50.0; });
  acc.add_sample([](int, int, int) { return 1.0 / 50.0; });
  CHECK(acc.perplexity() == doctest::Approx(50.0));

  // Certain predictions give 1.
  PerplexityAccumulator sure(words);
  sure.add_sample([](int, int, int) { return 1.0; });
  CHECK(sure.perplexity() == doctest::Approx(1.0));

  // Two words at 1/2 and 1/8: exp(-(log .5 + log .125)/2) = 4.
  PerplexityAccumulator two({{0, 0, 0}, {0, 0, 1}});
  two.add_sample([](int, int, int w) { return w == 0 ? 0.5 : 0.125; });
  CHECK(two.perplexity() == doctest::Approx(4.0));

  // Zero-probability words are reported as infinite, not masked.
  PerplexityAccumulator zero({{0, 0, 0}});
  zero.add_sample([](int, int, int) { return 0.0; });
  CHECK(std::isinf(zero.perplexity()));

  PerplexityAccumulator empty{std::vector<HeldoutWord>{}};
  empty.add_sample([](int, int, int) { return 0.5; });
  CHECK_THROWS_AS(empty.perplexity(), std::invalid_argument);
}

TEST_CASE("count caches stay consistent through full sweeps") {
  Rng rng(87);
  TimeGrid grid({0.0, 0.1});
  const std::vector<int> N = {6, 6};
  TopicGenParams gp;
  auto [corpus, truth] = generate_corpus(3, grid, N, 12, 0.3, 3.0, gp, rng);
  auto st = testsupport::state_from_joint(truth.joint, N);
  TopicHook hook(corpus, 0.3, 3.0, 5.0, 1.0);
  Rng r0 = rng.substream("reset");
  hook.reset(&st, r0);
  for (int it = 0; it < 20; ++it) {
    Rng ri = rng.substream("it", it);
    hook.update_params(ri);
    CHECK(hook.state().check_counts());
  }
}

TEST_CASE("geweke: fixed-K topic sampler leaves the joint invariant") {
  const bool ok = stats::with_retry(88, [](std::uint64_t seed) {
    auto reports = testsupport::topic_geweke(seed, 3000);
    bool pass = true;
    for (const auto& r : reports) {
      INFO(r.statistic, ": fwd=", r.forward_mean, " chain=", r.chain_mean,
           " z=", r.z);
      pass = pass && r.z < 3.5;
    }
    return pass;
  });
  CHECK(ok);
}

}  // TEST_SUITE
