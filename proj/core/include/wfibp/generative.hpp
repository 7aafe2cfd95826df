#pragma once

// Forward simulation of the dynamic feature model: truncated PRF systems over
// a time grid, joint (X, Z) simulation with birth compensation, and the
// fixed-K counterpart.

#include <vector>

#include "wfibp/allocation.hpp"
#include "wfibp/grid.hpp"
#include "wfibp/measures.hpp"
#include "wfibp/rng.hpp"

namespace wfibp::gen {

using measures::PRFParams;

struct FeatureTrack {
  FeatureId id = 0;
  std::vector<double> x;    // one value per grid time
  int birth_interval = -1;  // -1: present at t_0; j >= 0: first sampled at t_{j+1}
};

struct FeatureSystem {
  TimeGrid grid;
  std::vector<FeatureTrack> features;
};

/// Features of the truncated PRF over the grid: atoms above u at t_0 are
/// propagated forward; at each later grid time candidate newborns are drawn,
/// propagated backward to t_0 and rejected if their value reaches u at any
/// earlier grid time.
FeatureSystem simulate_prf_system(const PRFParams& params, double u,
                                  const TimeGrid& grid, double step, Rng& rng);

struct JointSample {
  FeatureSystem system;
  AllocationSeries Z;
};

/// Joint draw of the allocation matrices Z_t and the features appearing in
/// them: IBP at t_0, posterior beta masses, WF(0, beta) propagation, and at
/// each later time candidate IBP columns accepted with the product
/// probability prod_t (1 - x(t))^(N_t) over earlier times.
JointSample simulate_joint(const PRFParams& params, const TimeGrid& grid,
                           const std::vector<int>& N, double step, Rng& rng);

/// Fixed-K model: each X_k starts at Beta(mu_k, beta) and evolves as
/// WF(mu_k, beta) with mu_k = alpha beta / K unless overridden; allocations
/// are Bernoulli(X_k(t)). Exactly K columns at all times.
JointSample fixed_k_generate(double alpha, double beta, int K,
                             const TimeGrid& grid, const std::vector<int>& N,
                             double step, Rng& rng, double mu_override = -1.0);

}  // namespace wfibp::gen
