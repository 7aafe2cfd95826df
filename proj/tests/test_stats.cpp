#include <cmath>
#include <vector>

#include "doctest.h"
#include "wfibp/rng.hpp"
#include "wfibp/stats.hpp"

using namespace wfibp;
using namespace wfibp::stats;

TEST_SUITE("stats") {

TEST_CASE("ks_beta: null calibration, power, degenerate input") {
  Rng rng(31);
  // Null: p-values roughly uniform (mean near 1/2), few rejections at 1%.
  double psum = 0.0;
  int rejects = 0;
  const int runs = 100;
  for (int r = 0; r < runs; ++r) {
    Rng rr = rng.substream("null", r);
    std::vector<double> s;
    for (int i = 0; i < 2000; ++i) s.push_back(rr.beta(2.0, 3.0));
    auto rep = ks_beta(s, 2.0, 3.0);
    psum += rep.p_value;
    rejects += rep.reject;
  }
  CHECK(std::fabs(psum / runs - 0.5) < 0.12);
  CHECK(rejects <= 5);

  // Power: Beta(a+2, b) at n = 10^4 rejects at 1%.
  std::vector<double> shifted;
  for (int i = 0; i < 10000; ++i) shifted.push_back(rng.beta(4.0, 3.0));
  CHECK(ks_beta(shifted, 2.0, 3.0).reject);

  // Constant sample: p ~ 0.
  std::vector<double> constant(500, 0.42);
  CHECK(ks_beta(constant, 2.0, 3.0).p_value < 1e-6);

  std::vector<double> tiny(10, 0.5);
  CHECK_THROWS_AS(ks_beta(tiny, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("two_sample_energy: identical data, power, calibration") {
  Rng rng(32);
  std::vector<std::vector<double>> a, b;
  for (int i = 0; i < 200; ++i) a.push_back({rng.normal(), rng.normal()});
  b = a;
  auto same = two_sample_energy(a, b, 200, rng);
  CHECK(same.p_value == doctest::Approx(1.0));

  // Shifted Gaussians, n = 500: reject at 1%.
  std::vector<std::vector<double>> c, d;
  for (int i = 0; i < 500; ++i) {
    c.push_back({rng.normal()});
    d.push_back({rng.normal() + 0.5});
  }
  CHECK(two_sample_energy(c, d, 500, rng).reject);

  // Calibration under the null.
  double psum = 0.0;
  for (int r = 0; r < 40; ++r) {
    Rng rr = rng.substream("cal", r);
    std::vector<std::vector<double>> x, y;
    for (int i = 0; i < 100; ++i) {
      x.push_back({rr.normal()});
      y.push_back({rr.normal()});
    }
    psum += two_sample_energy(x, y, 200, rr).p_value;
  }
  CHECK(std::fabs(psum / 40 - 0.5) < 0.15);

  std::vector<std::vector<double>> bad = {{1.0, 2.0}};
  CHECK_THROWS_AS(two_sample_energy(c, bad, 10, rng), std::invalid_argument);
}

TEST_CASE("coverage_check") {
  CHECK(coverage_check({1.0, 2.0}, {1.0, 2.0}, {0.0, 0.0}) == doctest::Approx(1.0));
  CHECK(coverage_check({1.0, 2.0}, {1.5, 2.5}, {0.0, 0.0}) == doctest::Approx(0.0));
  CHECK(coverage_check({0.0, 0.0, 10.0}, {0.1, 0.0, 0.0}, {0.1, 0.1, 1.0}) ==
        doctest::Approx(2.0 / 3));
  CHECK_THROWS_AS(coverage_check({1.0}, {1.0, 2.0}, {0.1, 0.1}),
                  std::invalid_argument);
}

TEST_CASE("report serializes to json") {
  TestReport r;
  r.name = "demo";
  r.statistic = 0.5;
  r.p_value = 0.2;
  r.reject = false;
  r.replicates = 10;
  const std::string j = r.to_json();
  CHECK(j.find("\"name\":\"demo\"") != std::string::npos);
  CHECK(j.find("\"reject\":false") != std::string::npos);
}

}  // TEST_SUITE
