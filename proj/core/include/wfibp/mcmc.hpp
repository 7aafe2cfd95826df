#pragma once

// Exact posterior sampler: per-time slice variables, per-entry Gibbs for Z,
// conditional SMC (Particle Gibbs) for the seen feature trajectories,
// thinning for the unseen ones, and the fixed-K alternative without slices
// or birth/death.

#include <functional>
#include <map>
#include <vector>

#include "wfibp/allocation.hpp"
#include "wfibp/grid.hpp"
#include "wfibp/likelihood.hpp"
#include "wfibp/measures.hpp"
#include "wfibp/rng.hpp"

namespace wfibp::mcmc {

struct PgConfig {
  int particles = 50;  // M >= 2
  // Only multinomial resampling is implemented; the tag records the choice.
  enum class Resampling { kMultinomial } resampling = Resampling::kMultinomial;

  void validate() const;
};

/// Per-time auxiliary truncation levels s_t with the convention
/// x*(t) = 1 when no feature is active at t.
struct SliceVars {
  std::vector<double> s;
};

struct McmcConfig {
  double alpha = 1.0;
  double beta = 1.0;
  double step = 1e-3;  // diffusion integration step
  PgConfig pg;
  int iterations = 2000;
  int burn_in = 200;
  int sample_thin = 1;
  int init_features = 1;
  bool static_baseline = false;  // freeze masses; fixed-K only
  double fixed_k_mu = -1.0;      // per-feature drift; < 0 means alpha*beta/K

  void validate() const;
};

struct InferenceState {
  TimeGrid grid;
  std::vector<int> N;  // objects per time
  AllocationSeries Z;
  std::map<FeatureId, std::vector<double>> x;  // masses on the grid
  SliceVars slices;
  FeatureId next_id = 0;

  int num_times() const { return grid.num_times(); }

  /// Minimum mass among features active at t (n_kt > 0); 1 if none.
  double xstar(int t) const;

  /// Same, with entry (t, i implicit, k) forced to v. The caller supplies the
  /// current entry value so the count can be adjusted.
  double xstar_if(int t, FeatureId k, bool current, bool v) const;

  std::vector<FeatureId> materialized() const;
  std::vector<FeatureId> seen_features() const;

  void add_feature(FeatureId id, std::vector<double> path);
  void remove_feature(FeatureId id);
};

/// Fresh state with `init_features` features whose masses are frozen at a
/// Beta(mu0, beta) draw across the grid and whose Z entries are Bernoulli
/// draws from those masses. K >= 1 selects the fixed-K model (exactly K
/// features). With ensure_row_support, every object row ends up with at
/// least one active feature (the topic model needs an assignable topic per
/// document).
InferenceState make_initial_state(const TimeGrid& grid,
                                  const std::vector<int>& N,
                                  const McmcConfig& cfg, int K, Rng& rng,
                                  bool ensure_row_support = false);

/// s_t ~ Uniform[0, x*(t)].
double sample_slice(const InferenceState& state, int t, Rng& rng);

/// One Gibbs update of Z_{ikt}. Odds are
///   x L1 / x*_1  :  (1-x) L0 / x*_0
/// with the x* factors dropped in fixed-K mode. Returns the new value.
bool gibbs_update_entry(InferenceState& state, int t, int i, FeatureId k,
                        LikelihoodHook& hook, Rng& rng, bool fixed_k);

struct PgCounts {
  std::vector<int> n;  // n_{kt} per grid time
  std::vector<int> N;  // N_t per grid time
};

/// Conditional SMC for a feature seen at t_0 (Algorithm-1 style): free
/// particles start from Beta(mu + n_0, beta + N_0 - n_0), propagate as
/// WF(mu, beta), are weighted by x^n (1-x)^(N-n) and multinomially resampled
/// with the reference slot kept intact; one ancestral path is returned.
/// mu = 0 is the nonparametric case (requires n_0 >= 1), mu > 0 the fixed-K
/// one. Weights reset to uniform after each resampling step.
std::vector<double> pg_update_seen(const std::vector<double>& reference,
                                   const PgCounts& counts, double mu,
                                   double beta, const TimeGrid& grid,
                                   double step, const PgConfig& cfg, Rng& rng);

/// Features first seen at t_j (Algorithm-2 style): particles start from the
/// posterior beta at t_j, collect unseen-ness weights (1-x)^(N_t) while
/// propagating backward to t_0, then run forward as in pg_update_seen with
/// the backward weight folded into the first resampling.
std::vector<double> pg_update_first_seen(const std::vector<double>& reference,
                                         int first_seen,
                                         const PgCounts& counts, double beta,
                                         const TimeGrid& grid, double step,
                                         const PgConfig& cfg, Rng& rng);

/// Unseen features alive at t_0 (Algorithm-3 style): atoms from the truncated
/// posterior process at t_0, propagated forward, retained with probability
/// (1-x)^(N_t) at each later time.
std::vector<std::vector<double>> thin_unseen_alive(
    const SliceVars& slices, const std::vector<int>& N,
    const measures::PRFParams& params, const TimeGrid& grid, double step,
    Rng& rng);

/// Unseen features first above the slice at t_{j+1} (Algorithm-4 style):
/// atoms at t_{j+1}, propagated backward; rejected outright if the backward
/// value reaches s_t at an earlier time, otherwise accepted with probability
/// (1-x)^(N_t) there; forward from t_{j+1} as in thin_unseen_alive.
std::vector<std::vector<double>> thin_unseen_born(
    int interval, const SliceVars& slices, const std::vector<int>& N,
    const measures::PRFParams& params, const TimeGrid& grid, double step,
    Rng& rng);

struct Sample {
  int iteration = 0;
  const InferenceState* state = nullptr;
  std::vector<FeatureId> seen;
  std::vector<std::pair<std::string, double>> scalars;
};
using SampleSink = std::function<void(const Sample&)>;

/// Full nonparametric loop. Per iteration: S | Z,X -> X_unseen | S (thinning)
/// -> Z | X,S,D (Gibbs) -> prune -> rho | X,Z (hook) -> X_seen | Z (PG).
/// The slice and unseen draws immediately precede the Z sweep that consumes
/// them. Emits one sample per kept iteration after burn-in. start_iteration
/// allows checkpoint resume; the caller must pass the run-level rng.
void run_mcmc(InferenceState& state, LikelihoodHook& hook,
              const McmcConfig& cfg, Rng& rng, const SampleSink& sink,
              int start_iteration = 0);

/// Fixed-K loop: no slices, no birth/death; PG over all K features with
/// WF(mu_K, beta) dynamics, or a pooled conjugate Beta redraw per feature when
/// static_baseline is set.
void run_fixed_k(InferenceState& state, LikelihoodHook& hook, int K,
                 const McmcConfig& cfg, Rng& rng, const SampleSink& sink,
                 int start_iteration = 0);

}  // namespace wfibp::mcmc
