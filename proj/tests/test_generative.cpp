#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "wfibp/generative.hpp"
#include "wfibp/measures.hpp"
#include "wfibp/stats.hpp"

using namespace wfibp;
using namespace wfibp::gen;

namespace {

std::vector<double> masses_at(const FeatureSystem& sys, int t, double u) {
  std::vector<double> m;
  for (const auto& f : sys.features)
    if (f.x[t] >= u) m.push_back(f.x[t]);
  return m;
}

}  // namespace

TEST_SUITE("generative") {

TEST_CASE("single-time grid reduces to the truncated process") {
  Rng rng(41);
  const measures::PRFParams prf{1.0, 1.0};
  const double u = 0.1;
  TimeGrid grid({0.0});
  std::vector<double> sys_masses, proc_masses;
  for (int r = 0; r < 3000; ++r) {
    Rng rs = rng.substream("s", r);
    auto sys = simulate_prf_system(prf, u, grid, 1e-3, rs);
    for (const auto& f : sys.features) sys_masses.push_back(f.x[0]);
    Rng rp = rng.substream("p", r);
    for (const auto& a :
         measures::sample_truncated_process(prf.alpha, prf.beta, u, rp).atoms)
      proc_masses.push_back(a.mass);
  }
  const double ratio =
      static_cast<double>(sys_masses.size()) / proc_masses.size();
  CHECK(ratio > 0.9);
  CHECK(ratio < 1.1);
  CHECK_FALSE(stats::ks_two_sample(sys_masses, proc_masses).reject);
}

TEST_CASE("stationary atom counts at every grid time (beta = 1)") {
  Rng rng(42);
  const measures::PRFParams prf{1.0, 1.0};
  const double u = 0.05;
  TimeGrid grid({0.0, 0.1, 0.2});
  const double lambda = prf.alpha * std::log(1.0 / u);
  const int reps = 500;
  std::vector<double> counts(grid.num_times(), 0.0);
  std::vector<double> sq(grid.num_times(), 0.0);
  for (int r = 0; r < reps; ++r) {
    Rng rrep = rng.substream("r", r);
    auto sys = simulate_prf_system(prf, u, grid, 1e-3, rrep);
    for (int t = 0; t < grid.num_times(); ++t) {
      const double c = static_cast<double>(masses_at(sys, t, u).size());
      counts[t] += c;
      sq[t] += c * c;
    }
  }
  for (int t = 0; t < grid.num_times(); ++t) {
    const double mean = counts[t] / reps;
    const double var = sq[t] / reps - mean * mean;
    INFO("t=", t, " mean=", mean, " lambda=", lambda);
    CHECK(std::fabs(mean - lambda) < 3 * std::sqrt(var / reps));
  }
}

TEST_CASE("newborn candidates never reach u before their origin") {
  Rng rng(43);
  const measures::PRFParams prf{2.0, 1.0};
  TimeGrid grid({0.0, 0.05, 0.1, 0.15});
  const double u = 0.08;
  for (int r = 0; r < 200; ++r) {
    Rng rrep = rng.substream("r", r);
    auto sys = simulate_prf_system(prf, u, grid, 1e-3, rrep);
    for (const auto& f : sys.features) {
      if (f.birth_interval < 0) continue;
      for (int t = 0; t <= f.birth_interval; ++t) CHECK(f.x[t] < u);
    }
  }
}

TEST_CASE("time-marginal invariance of the atom-mass distribution") {
  Rng rng(44);
  const measures::PRFParams prf{1.0, 1.0};
  const double u = 0.05;
  TimeGrid grid({0.0, 0.1, 0.2});
  std::vector<double> at_first, at_last;
  for (int r = 0; r < 2500; ++r) {
    Rng rrep = rng.substream("r", r);
    auto sys = simulate_prf_system(prf, u, grid, 1e-3, rrep);
    for (double m : masses_at(sys, 0, u)) at_first.push_back(m);
    for (double m : masses_at(sys, grid.num_times() - 1, u)) at_last.push_back(m);
  }
  CHECK_FALSE(stats::ks_two_sample(at_first, at_last).reject);
}

TEST_CASE("joint simulation: single time equals a plain IBP draw") {
  Rng rng(45);
  const measures::PRFParams prf{1.5, 1.0};
  TimeGrid grid({0.0});
  std::vector<double> joint_cols, ibp_cols, joint_actives, ibp_actives;
  for (int r = 0; r < 2000; ++r) {
    Rng rj = rng.substream("j", r);
    auto js = simulate_joint(prf, grid, {4}, 1e-3, rj);
    joint_cols.push_back(js.Z.num_features());
    double a = 0.0;
    for (FeatureId k : js.Z.feature_ids()) a += js.Z.count(0, k);
    joint_actives.push_back(a);
    Rng ri = rng.substream("i", r);
    auto z = measures::sample_ibp(prf.alpha, prf.beta, 4, ri);
    ibp_cols.push_back(z.cols());
    double b = 0.0;
    for (int c = 0; c < z.cols(); ++c) b += z.col_sum(c);
    ibp_actives.push_back(b);
  }
  CHECK_FALSE(stats::ks_two_sample(joint_cols, ibp_cols).reject);
  CHECK_FALSE(stats::ks_two_sample(joint_actives, ibp_actives).reject);
}

TEST_CASE("joint simulation: tiny alpha yields empty allocations") {
  Rng rng(46);
  const measures::PRFParams prf{1e-12, 1.0};
  TimeGrid grid({0.0, 0.1});
  for (int r = 0; r < 20; ++r) {
    Rng rj = rng.substream("r", r);
    auto js = simulate_joint(prf, grid, {3, 3}, 1e-3, rj);
    CHECK(js.Z.num_features() == 0);
  }
}

TEST_CASE("joint simulation: marginal per-object feature counts match the IBP") {
  const bool ok = stats::with_retry(47, [](std::uint64_t seed) {
    Rng rng(seed);
    const measures::PRFParams prf{1.0, 1.0};
    TimeGrid grid({0.0, 0.1, 0.2});
    const std::vector<int> N = {5, 5, 5};
    std::vector<double> joint_counts, ibp_counts;
    for (int r = 0; r < 1000; ++r) {
      Rng rj = rng.substream("j", r);
      auto js = simulate_joint(prf, grid, N, 1e-3, rj);
      for (int t = 0; t < grid.num_times(); ++t)
        for (int i = 0; i < N[t]; ++i) {
          double c = 0.0;
          for (FeatureId k : js.Z.feature_ids()) c += js.Z.get(t, i, k);
          joint_counts.push_back(c);
        }
      Rng ri = rng.substream("i", r);
      for (int t = 0; t < grid.num_times(); ++t) {
        auto z = measures::sample_ibp(prf.alpha, prf.beta, N[t], ri);
        for (int i = 0; i < N[t]; ++i) ibp_counts.push_back(z.row_sum(i));
      }
    }
    return !stats::ks_two_sample(joint_counts, ibp_counts).reject;
  });
  CHECK(ok);
}

TEST_CASE("acceptance product equals the unseen probability") {
  // For a fixed candidate trajectory, P(feature unseen at all earlier times)
  // is the product of (1-x(t))^N_t; estimate it by direct Bernoulli draws.
  Rng rng(48);
  const std::vector<double> x = {0.3, 0.1};
  const std::vector<int> N = {4, 3};
  double product = 1.0;
  for (std::size_t t = 0; t < x.size(); ++t)
    product *= std::pow(1.0 - x[t], N[t]);
  const int reps = 100000;
  int unseen = 0;
  for (int r = 0; r < reps; ++r) {
    bool any = false;
    for (std::size_t t = 0; t < x.size() && !any; ++t)
      for (int i = 0; i < N[t] && !any; ++i) any = rng.bernoulli(x[t]);
    unseen += !any;
  }
  const double phat = static_cast<double>(unseen) / reps;
  const double se = std::sqrt(product * (1 - product) / reps);
  CHECK(std::fabs(phat - product) < 3 * se);
}

TEST_CASE("fixed-K generator: stationary marginals and allocation rates") {
  Rng rng(49);
  const double alpha = 2.0, beta = 1.0;
  const int K = 4;
  TimeGrid grid({0.0, 0.1, 0.2});
  const std::vector<int> N = {6, 6, 6};
  std::vector<double> masses_t2;
  double active = 0.0, cells = 0.0;
  for (int r = 0; r < 2500; ++r) {
    Rng rj = rng.substream("r", r);
    auto js = fixed_k_generate(alpha, beta, K, grid, N, 1e-3, rj);
    CHECK(js.Z.num_features() == K);
    for (const auto& f : js.system.features) masses_t2.push_back(f.x[2]);
    for (int t = 0; t < grid.num_times(); ++t)
      for (FeatureId k : js.Z.feature_ids()) {
        active += js.Z.count(t, k);
        cells += N[t];
      }
  }
  // Marginal at the last grid time stays Beta(alpha beta / K, beta).
  CHECK_FALSE(stats::ks_beta(masses_t2, alpha * beta / K, beta).reject);
  // Expected active fraction per cell is mean of that Beta.
  const double a = alpha * beta / K;
  const double target = a / (a + beta);
  CHECK(std::fabs(active / cells - target) < 0.01);

  // K = 1: the single allocation column tracks its trajectory.
  auto js = fixed_k_generate(1.0, 1.0, 1, TimeGrid({0.0}), {20000}, 1e-3, rng);
  const double x0 = js.system.features[0].x[0];
  const double frac = js.Z.count(0, js.Z.feature_ids()[0]) / 20000.0;
  CHECK(std::fabs(frac - x0) < 3 * std::sqrt(x0 * (1 - x0) / 20000.0) + 1e-6);
}

}  // TEST_SUITE
