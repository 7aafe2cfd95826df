#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "wfibp/measures.hpp"
#include "wfibp/numerics.hpp"
#include "wfibp/stats.hpp"

using namespace wfibp;
using namespace wfibp::measures;

TEST_SUITE("measures") {

TEST_CASE("levy density values and integral") {
  CHECK(levy_density(0.5, 1.0, 1.0) == doctest::Approx(2.0));
  CHECK(levy_density(0.999, 1.0, 2.0) == doctest::Approx(0.001001).epsilon(1e-3));
  CHECK_THROWS_AS(levy_density(0.0, 1.0, 1.0), std::invalid_argument);

  // alpha = 1, c = 1 over [1/e, 1): closed form alpha * log(1/u) = 1.
  CHECK(levy_integral(1.0, 1.0, std::exp(-1.0), 1.0) ==
        doctest::Approx(1.0).epsilon(1e-6));
  CHECK(levy_integral(1.0, 1.0, 0.3, 0.3) == doctest::Approx(0.0));
}

TEST_CASE("truncated process: support, emptiness, mean counts") {
  Rng rng(21);
  // u near 1: total mass vanishes.
  for (int i = 0; i < 50; ++i) {
    auto atoms = sample_truncated_process(1.0, 1.0, 1.0 - 1e-12, rng);
    CHECK(atoms.size() == 0);
  }
  // All masses >= u for any seed.
  for (int i = 0; i < 50; ++i) {
    Rng r = rng.substream("sup", i);
    auto atoms = sample_truncated_process(2.0, 0.5, 0.07, r);
    for (const auto& a : atoms.atoms) {
      CHECK(a.mass >= 0.07);
      CHECK(a.mass < 1.0);
    }
  }
  CHECK_THROWS_AS(sample_truncated_process(1.0, 1.0, 0.0, rng),
                  std::invalid_argument);
  CHECK_THROWS_AS(sample_truncated_process(1.0, 1.0, 1.0, rng),
                  std::invalid_argument);

  // alpha = 1, c = 1, u = 1/e: Poisson mean equals the unit integral.
  const int reps = 10000;
  double count = 0.0, sq = 0.0;
  for (int i = 0; i < reps; ++i) {
    Rng r = rng.substream("mean", i);
    const double k = static_cast<double>(
        sample_truncated_process(1.0, 1.0, std::exp(-1.0), r).size());
    count += k;
    sq += k * k;
  }
  const double mean = count / reps;
  const double var = sq / reps - mean * mean;
  CHECK(std::fabs(mean - 1.0) < 3 * std::sqrt(var / reps));
}

TEST_CASE("truncated process matches quadrature for c < 1 and c > 1") {
  Rng rng(22);
  for (double c : {0.4, 2.5, 7.0}) {
    const double alpha = 1.3, u = 0.04;
    const double lambda = levy_integral(alpha, c, u, 1.0);
    const int reps = 6000;
    double count = 0.0, sq = 0.0;
    for (int i = 0; i < reps; ++i) {
      Rng r = rng.substream("c", static_cast<std::uint64_t>(c * 100) * 100000 + i);
      const double k =
          static_cast<double>(sample_truncated_process(alpha, c, u, r).size());
      count += k;
      sq += k * k;
    }
    const double mean = count / reps;
    const double var = sq / reps - mean * mean;
    CHECK(std::fabs(mean - lambda) < 3 * std::sqrt(var / reps) + 1e-9);
  }
}

TEST_CASE("truncated process: lowering u never lowers expected count") {
  Rng rng(23);
  auto mean_count = [&](double u, std::uint64_t salt) {
    double s = 0.0;
    const int reps = 4000;
    for (int i = 0; i < reps; ++i) {
      Rng r = rng.substream("mono", salt * 100000 + i);
      s += static_cast<double>(sample_truncated_process(1.0, 1.0, u, r).size());
    }
    return s / reps;
  };
  const double lo = mean_count(0.05, 1);
  const double hi = mean_count(0.2, 2);
  CHECK(lo > hi - 0.1);
}

TEST_CASE("poisson field property over disjoint intervals") {
  Rng rng(24);
  const double alpha = 1.0, beta = 1.0, u = 0.02;
  std::vector<AtomSet> reps;
  for (int i = 0; i < 3000; ++i) {
    Rng r = rng.substream("field", i);
    reps.push_back(sample_truncated_process(alpha, beta, u, r));
  }
  const std::vector<std::pair<double, double>> intervals = {
      {0.02, 0.1}, {0.1, 0.4}, {0.4, 1.0}};
  auto reports = stats::poisson_field_check(reps, intervals, alpha, beta);
  for (const auto& rep : reports) {
    INFO(rep.name, " z=", rep.z_score);
    CHECK_FALSE(rep.reject);
  }
}

TEST_CASE("ibp: first customer, empty alpha, expected columns") {
  Rng rng(25);
  // alpha -> 0 gives the empty matrix.
  auto z0 = sample_ibp(0.0, 1.0, 5, rng);
  CHECK(z0.cols() == 0);
  CHECK_THROWS_AS(sample_ibp(1.0, 1.0, 0, rng), std::invalid_argument);

  // N = 1: column count ~ Poisson(alpha), all entries active. Cross-check
  // the mean against the beta-binomial pre-limit with K = 10^4 features.
  const double alpha = 2.0, beta = 1.5;
  const int reps = 8000;
  double cols = 0.0, colsq = 0.0;
  for (int i = 0; i < reps; ++i) {
    Rng r = rng.substream("one", i);
    auto z = sample_ibp(alpha, beta, 1, r);
    cols += z.cols();
    colsq += static_cast<double>(z.cols()) * z.cols();
    for (int c = 0; c < z.cols(); ++c) CHECK(z.get(0, c));
  }
  const double mean = cols / reps;
  const double var = colsq / reps - mean * mean;
  CHECK(std::fabs(mean - alpha) < 3 * std::sqrt(var / reps));

  const int K = 10000;
  double bb = 0.0, bbsq = 0.0;
  Rng rb = rng.substream("betabin");
  for (int i = 0; i < 2000; ++i) {
    int active = 0;
    for (int k = 0; k < K; ++k)
      if (rb.bernoulli(rb.beta(alpha * beta / K, beta))) ++active;
    bb += active;
    bbsq += static_cast<double>(active) * active;
  }
  const double bb_mean = bb / 2000;
  const double bb_var = bbsq / 2000 - bb_mean * bb_mean;
  CHECK(std::fabs(mean - bb_mean) <
        3 * std::sqrt(var / reps + bb_var / 2000) + 0.05);

  // E[total columns] = alpha sum_i beta / (beta + i - 1).
  const int N = 6;
  double expect = 0.0;
  for (int i = 1; i <= N; ++i) expect += alpha * beta / (beta + i - 1);
  double tot = 0.0, totsq = 0.0;
  for (int i = 0; i < reps; ++i) {
    Rng r = rng.substream("tot", i);
    const double c = sample_ibp(alpha, beta, N, r).cols();
    tot += c;
    totsq += c * c;
  }
  const double tmean = tot / reps;
  const double tvar = totsq / reps - tmean * tmean;
  CHECK(std::fabs(tmean - expect) < 3 * std::sqrt(tvar / reps));
}

TEST_CASE("ibp row-exchangeability proxy") {
  Rng rng(26);
  std::vector<double> first, last;
  const int N = 8;
  for (int i = 0; i < 6000; ++i) {
    Rng r = rng.substream("xch", i);
    auto z = sample_ibp(1.5, 2.0, N, r);
    first.push_back(z.row_sum(0));
    last.push_back(z.row_sum(N - 1));
  }
  CHECK_FALSE(stats::ks_two_sample(first, last).reject);
}

TEST_CASE("posterior beta draw") {
  Rng rng(27);
  CHECK_THROWS_AS(posterior_beta_draw(0, 4, 1.0, rng), std::invalid_argument);
  CHECK_THROWS_AS(posterior_beta_draw(5, 4, 1.0, rng), std::invalid_argument);

  // n = N, beta = 1: Beta(N, 1) has mean N/(N+1).
  const int N = 7;
  double s = 0.0;
  const int n = 50000;
  for (int i = 0; i < n; ++i) s += posterior_beta_draw(N, N, 1.0, rng);
  CHECK(s / n == doctest::Approx(N / double(N + 1)).epsilon(0.01));

  // Grid oracle: Bernoulli-likelihood x Levy-density posterior is
  // proportional to the Beta(n, beta + N - n) density.
  const double beta = 1.7;
  const int nn = 3, NN = 9;
  double ratio0 = -1.0;
  for (int g = 1; g < 1000; ++g) {
    const double x = g / 1000.0;
    const double unnorm = levy_density(x, 1.0, beta) * std::pow(x, nn) *
                          std::pow(1.0 - x, NN - nn);
    const double target = std::pow(x, nn - 1.0) *
                          std::pow(1.0 - x, beta + NN - nn - 1.0);
    const double ratio = unnorm / target;
    if (ratio0 < 0.0) ratio0 = ratio;
    CHECK(ratio == doctest::Approx(ratio0).epsilon(1e-9));
  }
}

TEST_CASE("bernoulli rows") {
  Rng rng(28);
  auto z = bernoulli_rows({0.0, 1.0, 0.3}, 10000, rng);
  CHECK(z.col_sum(0) == 0);
  CHECK(z.col_sum(1) == 10000);
  const double phat = z.col_sum(2) / 10000.0;
  CHECK(std::fabs(phat - 0.3) < 3 * std::sqrt(0.3 * 0.7 / 10000));
  CHECK_THROWS_AS(bernoulli_rows({1.2}, 3, rng), std::invalid_argument);
}

}  // TEST_SUITE
