#include "wfibp/measures.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "wfibp/numerics.hpp"

namespace wfibp::measures {

void PRFParams::validate() const {
  if (!(alpha > 0.0) || !(beta > 0.0))
    throw std::invalid_argument("PRFParams: alpha and beta must be > 0");
}

double levy_density(double x, double alpha, double c) {
  if (!(x > 0.0 && x < 1.0))
    throw std::invalid_argument("levy_density: x must be in (0,1)");
  return alpha * std::exp(-std::log(x) + (c - 1.0) * std::log1p(-x));
}

double levy_integral(double alpha, double c, double a, double b) {
  if (!(a > 0.0 && b <= 1.0 && a <= b))
    throw std::invalid_argument("levy_integral: need 0 < a <= b <= 1");
  if (a == b) return 0.0;
  // Integrable at 1 only for c > 0; stop a hair short of the endpoint.
  const double hi = std::min(b, 1.0 - 1e-13);
  if (hi <= a) return 0.0;
  return num::integrate(
      [alpha, c](double x) { return levy_density(x, alpha, c); }, a, hi, 1e-11);
}

AtomSet sample_truncated_process(double alpha, double c, double u, Rng& rng,
                                 FeatureId first_id) {
  if (!(u > 0.0 && u < 1.0))
    throw std::invalid_argument("sample_truncated_process: u must be in (0,1)");
  if (!(alpha > 0.0) || !(c > 0.0))
    throw std::invalid_argument("sample_truncated_process: alpha, c must be > 0");

  AtomSet out;
  FeatureId id = first_id;

  if (c >= 1.0) {
    // Envelope alpha / x on [u,1): total mass alpha log(1/u), inverse CDF
    // x = u^U, acceptance (1-x)^(c-1) <= 1.
    const double mass = alpha * std::log(1.0 / u);
    const long n = rng.poisson(mass);
    for (long k = 0; k < n; ++k) {
      const double x = std::pow(u, rng.uniform());
      const double acc = std::exp((c - 1.0) * std::log1p(-std::min(x, 1.0 - 1e-16)));
      if (rng.uniform() < acc) out.atoms.push_back({id++, x});
    }
    return out;
  }

  // c < 1: (1-x)^(c-1) is increasing, so split at 1/2.
  // Piece 1 on [u, 1/2]: envelope alpha 2^(1-c) / x, acceptance (2(1-x))^(c-1).
  if (u < 0.5) {
    const double mass1 = alpha * std::pow(2.0, 1.0 - c) * std::log(0.5 / u);
    const long n1 = rng.poisson(mass1);
    for (long k = 0; k < n1; ++k) {
      const double x = u * std::exp(rng.uniform() * std::log(0.5 / u));
      const double acc = std::exp((c - 1.0) * std::log(2.0 * (1.0 - x)));
      if (rng.uniform() < acc) out.atoms.push_back({id++, x});
    }
  }
  // Piece 2 on (max(u,1/2), 1): envelope 2 alpha (1-x)^(c-1), acceptance
  // 1/(2x) <= 1. Inverse CDF: 1-x = w^(1/c) scaled to the piece.
  const double lo = std::max(u, 0.5);
  const double wlo = std::pow(1.0 - lo, c);  // CDF weight of the piece
  const double mass2 = 2.0 * alpha * wlo / c;
  const long n2 = rng.poisson(mass2);
  for (long k = 0; k < n2; ++k) {
    const double x = 1.0 - std::pow(rng.uniform() * wlo, 1.0 / c);
    if (x < lo || x >= 1.0) continue;  // guard the open endpoint
    const double acc = 1.0 / (2.0 * x);
    if (rng.uniform() < acc) out.atoms.push_back({id++, x});
  }
  return out;
}

BinaryMatrix sample_ibp(double alpha, double beta, int n_rows, Rng& rng) {
  if (n_rows < 1) throw std::invalid_argument("sample_ibp: N must be >= 1");
  if (!(alpha >= 0.0) || !(beta > 0.0))
    throw std::invalid_argument("sample_ibp: bad parameters");

  std::vector<std::vector<int>> dish_customers;  // per dish, rows that took it
  for (int i = 1; i <= n_rows; ++i) {
    const double denom = beta + i - 1.0;
    for (auto& customers : dish_customers) {
      const double p = static_cast<double>(customers.size()) / denom;
      if (rng.bernoulli(p)) customers.push_back(i - 1);
    }
    const long fresh = alpha > 0.0 ? rng.poisson(alpha * beta / denom) : 0;
    for (long d = 0; d < fresh; ++d) dish_customers.push_back({i - 1});
  }

  BinaryMatrix z(n_rows, static_cast<int>(dish_customers.size()));
  for (int k = 0; k < z.cols(); ++k)
    for (int r : dish_customers[k]) z.set(r, k, true);
  return z;
}

double posterior_beta_draw(int n, int N, double beta, Rng& rng) {
  if (n < 1 || n > N)
    throw std::invalid_argument(
        "posterior_beta_draw: a seen feature needs 1 <= n <= N");
  if (!(beta > 0.0)) throw std::invalid_argument("posterior_beta_draw: beta <= 0");
  return rng.beta(static_cast<double>(n), beta + N - n);
}

BinaryMatrix bernoulli_rows(const std::vector<double>& masses, int n_rows,
                            Rng& rng) {
  for (double m : masses)
    if (!(m >= 0.0 && m <= 1.0))
      throw std::invalid_argument("bernoulli_rows: mass outside [0,1]");
  BinaryMatrix z(n_rows, static_cast<int>(masses.size()));
  for (int r = 0; r < n_rows; ++r)
    for (int k = 0; k < z.cols(); ++k)
      if (rng.bernoulli(masses[k])) z.set(r, k, true);
  return z;
}

}  // namespace wfibp::measures
