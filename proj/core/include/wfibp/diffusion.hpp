#pragma once

// Wright-Fisher numerics: the discrete-population chain, Euler-Maruyama
// simulation of the diffusion limit forward and backward in time, and the
// stationary / speed densities.
//
// Integration is Euler-Maruyama with post-step clamping to [0,1]. With mu = 0
// a post-step value <= 0 is set to exactly 0 and the path is absorbed there;
// values >= 1 are clamped to 1 (non-absorbing while beta > 0, since the drift
// -beta/2 pushes inward).

#include <vector>

#include "wfibp/rng.hpp"

namespace wfibp::diffusion {

struct DiffusionParams {
  double mu = 0.0;    // rescaled mutation rate, diffusion-time units
  double beta = 0.0;  // rescaled back-mutation rate
  double step = 1e-3; // internal integration step

  void validate(double duration) const;
};

struct Trajectory {
  std::vector<double> times;   // strictly increasing
  std::vector<double> values;  // in [0,1], one per time
  bool absorbed = false;       // hit 0 with mu = 0 and stayed

  double front() const { return values.front(); }
  double back() const { return values.back(); }
};

struct DiscreteWFParams {
  int G = 1;           // population size
  double muG = 0.0;    // per-generation mutation probability
  double betaG = 0.0;  // per-generation back-mutation probability

  void validate() const;
};

/// Default internal step: min(1e-3, duration / 50).
double default_step(double duration);

/// Drift term (1/2)[mu (1-x) - beta x].
double drift(double x, double mu, double beta);

/// Diffusion term sqrt(x (1-x)).
double diffusion_coeff(double x);

/// Speed density exp(I(x)) / sigma^2(x) = x^(mu-1) (1-x)^(beta-1),
/// with I(x) the integral of 2 gamma / sigma^2. For mu = 0 this is
/// x^(-1) (1-x)^(beta-1), the form used by the PRF equilibrium.
double speed_density(double x, double mu, double beta);

/// Row i of the discrete chain's transition matrix: Binomial(G, Psi_i) pmf
/// over {0..G} with Psi_i = [i (1-betaG) + (G-i) muG] / G.
std::vector<double> discrete_step_distribution(int i, const DiscreteWFParams& p);

/// One Euler-Maruyama step of length h from x; clamps into [0,1].
double em_step(double x, double mu, double beta, double h, Rng& rng);

/// Endpoint of the diffusion after `duration`, same discretization as
/// simulate_forward but without materializing the path.
double simulate_endpoint(double x0, const DiffusionParams& params,
                         double duration, Rng& rng);

/// Full path at internal-step resolution over [0, duration].
Trajectory simulate_forward(double x0, const DiffusionParams& params,
                            double duration, Rng& rng);

/// WF(0, beta) path conditioned to end at x_end, returned in original time
/// order (values[0] is the inferred value `duration` before the endpoint).
/// Realized by running the same dynamics from x_end and reversing the index;
/// valid because WF(0, beta) is reversible with respect to its speed density.
/// Leading zeros mean the feature was born inside the interval, so the
/// absorbed flag is never set on the returned path. duration = 0 yields the
/// single-point path {x_end}.
Trajectory simulate_backward(double x_end, double beta, double duration,
                             double step, Rng& rng);

/// Endpoint-only version of simulate_backward (the value at the reversed
/// origin).
double simulate_backward_endpoint(double x_end, double beta, double duration,
                                  double step, Rng& rng);

/// Draw from the stationary law Beta(mu, beta); requires mu, beta > 0.
double stationary_sample(double mu, double beta, Rng& rng);

}  // namespace wfibp::diffusion
