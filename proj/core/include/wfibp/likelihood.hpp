#pragma once

// Contract between the sampler and an observation model. The sampler owns Z,
// the feature masses and the slices; the hook owns the data and any
// likelihood-side parameters (factor matrices, topic proportions, ...).

#include <string>
#include <utility>
#include <vector>

#include "wfibp/allocation.hpp"
#include "wfibp/rng.hpp"

namespace wfibp::mcmc {

struct InferenceState;

class LikelihoodHook {
 public:
  virtual ~LikelihoodHook() = default;

  /// Rebuild every cache from the bound state (called before a run starts and
  /// after checkpoints are restored).
  virtual void reset(const InferenceState* state, Rng& rng) = 0;

  /// log p(D | Z with entry (t,i,k) = v), up to an additive constant shared
  /// between the v=0 and v=1 evaluations of one entry. May return -infinity.
  /// Evaluating v=1 on a column that is inactive at time t may draw fresh
  /// auxiliary parameters from their prior; they take effect only if the
  /// activation is committed.
  virtual double entry_loglik(int t, int i, FeatureId k, bool v, Rng& rng) = 0;

  /// The value the Gibbs step settled on. Always called once per entry after
  /// the entry_loglik pair, whether or not the value changed.
  virtual void commit_entry(int t, int i, FeatureId k, bool v) = 0;

  virtual void on_feature_added(FeatureId k) { (void)k; }
  virtual void on_feature_removed(FeatureId k) { (void)k; }

  /// rho | X, Z: the likelihood-owned parameter sweep.
  virtual void update_params(Rng& rng) = 0;

  /// Named scalars to emit with each posterior sample.
  virtual std::vector<std::pair<std::string, double>> scalars() const {
    return {};
  }
};

/// Constant likelihood; the sampler then targets the prior. Used by the
/// joint-distribution tests.
class FlatHook final : public LikelihoodHook {
 public:
  void reset(const InferenceState*, Rng&) override {}
  double entry_loglik(int, int, FeatureId, bool, Rng&) override { return 0.0; }
  void commit_entry(int, int, FeatureId, bool) override {}
  void update_params(Rng&) override {}
};

}  // namespace wfibp::mcmc
