#include "wfibp/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace wfibp::diffusion {

namespace {

void check_unit_interval(double x, const char* where) {
  if (!(x >= 0.0 && x <= 1.0))
    throw std::invalid_argument(std::string(where) + ": x outside [0,1]");
}

}  // namespace

void DiffusionParams::validate(double duration) const {
  if (mu < 0.0 || beta < 0.0)
    throw std::invalid_argument("DiffusionParams: mu and beta must be >= 0");
  if (!(duration > 0.0))
    throw std::invalid_argument("DiffusionParams: nonpositive duration");
  if (!(step > 0.0) || step > duration)
    throw std::invalid_argument("DiffusionParams: step must be in (0, duration]");
}

void DiscreteWFParams::validate() const {
  if (G < 1) throw std::invalid_argument("DiscreteWFParams: G must be >= 1");
  if (muG < 0.0 || muG > 1.0 || betaG < 0.0 || betaG > 1.0)
    throw std::invalid_argument("DiscreteWFParams: muG, betaG must be in [0,1]");
}

double default_step(double duration) {
  return std::min(1e-3, duration / 50.0);
}

double drift(double x, double mu, double beta) {
  check_unit_interval(x, "drift");
  return 0.5 * (mu * (1.0 - x) - beta * x);
}

double diffusion_coeff(double x) {
  check_unit_interval(x, "diffusion_coeff");
  return std::sqrt(x * (1.0 - x));
}

double speed_density(double x, double mu, double beta) {
  if (!(x > 0.0 && x < 1.0))
    throw std::invalid_argument("speed_density: x must be in (0,1)");
  return std::exp((mu - 1.0) * std::log(x) + (beta - 1.0) * std::log1p(-x));
}

std::vector<double> discrete_step_distribution(int i, const DiscreteWFParams& p) {
  p.validate();
  if (i < 0 || i > p.G)
    throw std::invalid_argument("discrete_step_distribution: i out of range");
  const double psi =
      (static_cast<double>(i) * (1.0 - p.betaG) + (p.G - i) * p.muG) / p.G;
  std::vector<double> pmf(p.G + 1, 0.0);
  if (psi <= 0.0) {
    pmf[0] = 1.0;
    return pmf;
  }
  if (psi >= 1.0) {
    pmf[p.G] = 1.0;
    return pmf;
  }
  const double lp = std::log(psi);
  const double lq = std::log1p(-psi);
  const double lgn = std::lgamma(p.G + 1.0);
  for (int j = 0; j <= p.G; ++j) {
    const double logpmf = lgn - std::lgamma(j + 1.0) - std::lgamma(p.G - j + 1.0) +
                          j * lp + (p.G - j) * lq;
    pmf[j] = std::exp(logpmf);
  }
  return pmf;
}

double em_step(double x, double mu, double beta, double h, Rng& rng) {
  const double g = 0.5 * (mu * (1.0 - x) - beta * x);
  const double s = std::sqrt(std::max(x * (1.0 - x), 0.0));
  double y = x + g * h + s * std::sqrt(h) * rng.normal();
  if (y <= 0.0) return 0.0;
  if (y >= 1.0) return 1.0;
  return y;
}

double simulate_endpoint(double x0, const DiffusionParams& params,
                         double duration, Rng& rng) {
  check_unit_interval(x0, "simulate_endpoint");
  params.validate(duration);
  const bool absorbing = params.mu == 0.0;
  const int n_steps =
      std::max(1, static_cast<int>(std::ceil(duration / params.step - 1e-12)));
  double x = x0;
  double t = 0.0;
  for (int k = 1; k <= n_steps; ++k) {
    if (absorbing && x == 0.0) break;
    const double next_t = (k == n_steps) ? duration : k * params.step;
    x = em_step(x, params.mu, params.beta, next_t - t, rng);
    t = next_t;
  }
  return x;
}

Trajectory simulate_forward(double x0, const DiffusionParams& params,
                            double duration, Rng& rng) {
  check_unit_interval(x0, "simulate_forward");
  params.validate(duration);
  const bool absorbing = params.mu == 0.0;

  Trajectory traj;
  const int n_steps =
      std::max(1, static_cast<int>(std::ceil(duration / params.step - 1e-12)));
  traj.times.reserve(n_steps + 1);
  traj.values.reserve(n_steps + 1);
  traj.times.push_back(0.0);
  traj.values.push_back(x0);

  double x = x0;
  double t = 0.0;
  for (int k = 1; k <= n_steps; ++k) {
    const double next_t = (k == n_steps) ? duration : k * params.step;
    const double h = next_t - t;
    if (absorbing && x == 0.0) {
      traj.absorbed = true;
    } else {
      x = em_step(x, params.mu, params.beta, h, rng);
      if (absorbing && x == 0.0) traj.absorbed = true;
    }
    t = next_t;
    traj.times.push_back(t);
    traj.values.push_back(x);
  }
  return traj;
}

Trajectory simulate_backward(double x_end, double beta, double duration,
                             double step, Rng& rng) {
  check_unit_interval(x_end, "simulate_backward");
  if (beta <= 0.0)
    throw std::invalid_argument("simulate_backward: beta must be > 0");
  if (duration == 0.0) {
    Trajectory traj;
    traj.times = {0.0};
    traj.values = {x_end};
    return traj;
  }
  DiffusionParams p{0.0, beta, step};
  Trajectory traj = simulate_forward(x_end, p, duration, rng);
  std::reverse(traj.values.begin(), traj.values.end());
  // Leading zeros now mean "born inside the interval", not absorption.
  traj.absorbed = false;
  return traj;
}

double simulate_backward_endpoint(double x_end, double beta, double duration,
                                  double step, Rng& rng) {
  check_unit_interval(x_end, "simulate_backward_endpoint");
  if (beta <= 0.0)
    throw std::invalid_argument("simulate_backward_endpoint: beta must be > 0");
  if (duration == 0.0) return x_end;
  DiffusionParams p{0.0, beta, step};
  return simulate_endpoint(x_end, p, duration, rng);
}

double stationary_sample(double mu, double beta, Rng& rng) {
  if (!(mu > 0.0) || !(beta > 0.0))
    throw std::invalid_argument(
        "stationary_sample: no stationary law unless mu > 0 and beta > 0");
  return rng.beta(mu, beta);
}

}  // namespace wfibp::diffusion
