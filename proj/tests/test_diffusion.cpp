#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "wfibp/diffusion.hpp"
#include "wfibp/numerics.hpp"
#include "wfibp/rng.hpp"
#include "wfibp/stats.hpp"

using namespace wfibp;
using namespace wfibp::diffusion;

TEST_SUITE("diffusion") {

TEST_CASE("drift boundary values") {
  const double mu = 0.7, beta = 1.9;
  CHECK(drift(0.0, mu, beta) == doctest::Approx(mu / 2));
  CHECK(drift(1.0, mu, beta) == doctest::Approx(-beta / 2));
  CHECK(drift(0.5, 1.0, 1.0) == doctest::Approx(0.0));
  CHECK_THROWS_AS(drift(-0.1, mu, beta), std::invalid_argument);
  CHECK_THROWS_AS(drift(1.1, mu, beta), std::invalid_argument);
}

TEST_CASE("diffusion coefficient") {
  CHECK(diffusion_coeff(0.0) == doctest::Approx(0.0));
  CHECK(diffusion_coeff(1.0) == doctest::Approx(0.0));
  CHECK(diffusion_coeff(0.5) == doctest::Approx(0.5));
  CHECK_THROWS_AS(diffusion_coeff(2.0), std::invalid_argument);
}

TEST_CASE("speed density closed form and quadrature oracle") {
  CHECK(speed_density(0.5, 0.0, 1.0) == doctest::Approx(2.0));
  CHECK(speed_density(0.5, 0.0, 2.0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(speed_density(0.0, 0.0, 1.0), std::invalid_argument);

  // mu = 0, beta = 3 at x = 0.25: integrate 2 gamma / sigma^2 from 0
  // numerically and exponentiate over sigma^2.
  const double beta = 3.0, x = 0.25;
  const double I = num::integrate(
      [beta](double y) { return -beta / (1.0 - y); }, 0.0, x, 1e-12);
  const double oracle = std::exp(I) / (x * (1.0 - x));
  CHECK(speed_density(x, 0.0, beta) == doctest::Approx(oracle).epsilon(1e-8));
}

TEST_CASE("discrete chain transition rows") {
  {
    DiscreteWFParams p{5, 0.0, 0.0};
    auto pmf = discrete_step_distribution(0, p);
    CHECK(pmf[0] == doctest::Approx(1.0));
    pmf = discrete_step_distribution(5, p);
    CHECK(pmf[5] == doctest::Approx(1.0));
  }
  {
    DiscreteWFParams p{2, 0.0, 0.0};
    auto pmf = discrete_step_distribution(1, p);
    REQUIRE(pmf.size() == 3);
    CHECK(pmf[0] == doctest::Approx(0.25));
    CHECK(pmf[1] == doctest::Approx(0.5));
    CHECK(pmf[2] == doctest::Approx(0.25));
  }
  {
    DiscreteWFParams p{40, 0.01, 0.02};
    auto pmf = discrete_step_distribution(13, p);
    const double total = std::accumulate(pmf.begin(), pmf.end(), 0.0);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(discrete_step_distribution(41, p), std::invalid_argument);
  }
}

TEST_CASE("diffusion-limit consistency of the discrete chain") {
  // One-step mean/variance of Y/G at G=200 match gamma(x) dt and
  // sigma^2(x) dt with dt = 1/G, within 3 Monte Carlo standard errors.
  const int G = 200;
  const double mu = 1.2, beta = 0.8;
  DiscreteWFParams p{G, mu / (2.0 * G), beta / (2.0 * G)};
  const double x = 0.3;
  const int i = static_cast<int>(x * G);
  auto pmf = discrete_step_distribution(i, p);

  Rng rng(11);
  const int n = 100000;
  double sum = 0.0, sq = 0.0;
  for (int r = 0; r < n; ++r) {
    const double step = rng.categorical(pmf) / static_cast<double>(G) -
                        static_cast<double>(i) / G;
    sum += step;
    sq += step * step;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  const double dt = 1.0 / G;
  const double x0 = static_cast<double>(i) / G;
  const double target_mean = drift(x0, mu, beta) * dt;
  const double target_var = x0 * (1.0 - x0) * dt;
  const double se_mean = std::sqrt(var / n);
  const double se_var = var * std::sqrt(2.0 / n);
  CHECK(std::fabs(mean - target_mean) < 3 * se_mean);
  CHECK(std::fabs(var - target_var) < 3 * se_var + 1e-7);
}

TEST_CASE("forward simulation boundaries and range") {
  Rng rng(7);
  DiffusionParams p{0.0, 1.0, 1e-3};

  auto zero = simulate_forward(0.0, p, 0.5, rng);
  CHECK(zero.absorbed);
  for (double v : zero.values) CHECK(v == 0.0);

  DiffusionParams q{0.0, 0.0, 1e-3};
  auto one = simulate_forward(1.0, q, 0.5, rng);
  for (double v : one.values) CHECK(v == 1.0);

  // Range and absorption monotonicity across random parameter draws.
  for (int rep = 0; rep < 30; ++rep) {
    Rng r = rng.substream("rep", rep);
    DiffusionParams pr{r.uniform() < 0.5 ? 0.0 : r.uniform(0.0, 2.0),
                       r.uniform(0.0, 2.0), 1e-3};
    auto traj = simulate_forward(r.uniform(), pr, 0.2, r);
    bool seen_zero = false;
    for (double v : traj.values) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
      if (pr.mu == 0.0) {
        if (seen_zero) CHECK(v == 0.0);
        if (v == 0.0) seen_zero = true;
      }
    }
    CHECK(traj.times.size() == traj.values.size());
  }

  CHECK_THROWS_AS(simulate_forward(0.5, p, -1.0, rng), std::invalid_argument);
  CHECK_THROWS_AS(simulate_forward(0.5, DiffusionParams{0, 1, -1e-3}, 1.0, rng),
                  std::invalid_argument);
}

TEST_CASE("determinism: identical seeds give bit-identical paths") {
  DiffusionParams p{1.0, 1.0, 1e-3};
  Rng a(123), b(123);
  auto ta = simulate_forward(0.3, p, 0.7, a);
  auto tb = simulate_forward(0.3, p, 0.7, b);
  REQUIRE(ta.values.size() == tb.values.size());
  for (std::size_t i = 0; i < ta.values.size(); ++i)
    CHECK(ta.values[i] == tb.values[i]);

  Rng c(123), d(123);
  CHECK(simulate_endpoint(0.3, p, 0.7, c) == ta.back());
  (void)d;
}

TEST_CASE("stationarity: Beta(1,1) start preserved under WF(1,1)") {
  const bool ok = stats::with_retry(2024, [&](std::uint64_t seed) {
    Rng rng(seed);
    DiffusionParams p{1.0, 1.0, 1e-3};
    std::vector<double> endpoints;
    endpoints.reserve(4000);
    for (int i = 0; i < 4000; ++i) {
      Rng r = rng.substream("path", i);
      const double x0 = stationary_sample(1.0, 1.0, r);
      endpoints.push_back(simulate_endpoint(x0, p, 0.5, r));
    }
    return !stats::ks_beta(endpoints, 1.0, 1.0).reject;
  });
  CHECK(ok);
}

TEST_CASE("backward simulation") {
  Rng rng(17);
  auto single = simulate_backward(0.4, 1.0, 0.0, 1e-3, rng);
  REQUIRE(single.values.size() == 1);
  CHECK(single.values[0] == doctest::Approx(0.4));

  auto zero = simulate_backward(0.0, 1.0, 0.3, 1e-3, rng);
  for (double v : zero.values) CHECK(v == 0.0);

  auto traj = simulate_backward(0.6, 1.5, 0.2, 1e-3, rng);
  CHECK(traj.back() == doctest::Approx(0.6));
  CHECK_FALSE(traj.absorbed);
  for (std::size_t i = 1; i < traj.times.size(); ++i)
    CHECK(traj.times[i] > traj.times[i - 1]);
}

TEST_CASE("backward endpoints match forward law from truncated atoms") {
  // Reversibility oracle: starting points drawn from the normalized
  // speed-density law on [u,1), a forward ensemble and a reversed-origin
  // backward ensemble must agree in distribution.
  const bool ok = stats::with_retry(31, [&](std::uint64_t seed) {
    Rng rng(seed);
    const double beta = 1.0, u = 0.05, dur = 0.1;
    auto draw_start = [&](Rng& r) {
      for (;;) {
        auto atoms = measures::sample_truncated_process(1.0, beta, u, r);
        if (!atoms.atoms.empty()) return atoms.atoms.front().mass;
      }
    };
    std::vector<double> fwd_end, bwd_origin;
    for (int i = 0; i < 4000; ++i) {
      Rng rf = rng.substream("f", i);
      DiffusionParams p{0.0, beta, 1e-3};
      fwd_end.push_back(simulate_endpoint(draw_start(rf), p, dur, rf));
      Rng rb = rng.substream("b", i);
      bwd_origin.push_back(
          simulate_backward(draw_start(rb), beta, dur, 1e-3, rb).front());
    }
    return !stats::ks_two_sample(fwd_end, bwd_origin).reject;
  });
  CHECK(ok);
}

TEST_CASE("stationary sample moments and preconditions") {
  Rng rng(5);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) sum += stationary_sample(1.0, 1.0, rng);
  const double se = std::sqrt(1.0 / 12 / n);
  CHECK(std::fabs(sum / n - 0.5) < 3 * se);

  double sq = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = stationary_sample(2.0, 2.0, rng);
    s2 += x;
    sq += x * x;
  }
  const double var = sq / n - (s2 / n) * (s2 / n);
  CHECK(var == doctest::Approx(0.05).epsilon(0.05));

  CHECK_THROWS_AS(stationary_sample(0.0, 1.0, rng), std::invalid_argument);
  CHECK_THROWS_AS(stationary_sample(1.0, 0.0, rng), std::invalid_argument);
}

}  // TEST_SUITE
