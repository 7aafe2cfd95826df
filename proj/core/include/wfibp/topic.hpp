#pragma once

// WF-IBP focused topic model: corpus generation, collapsed Gibbs for word
// assignments, Metropolis-Hastings for the topic proportions phi and their
// concentration gamma, estimators, and held-out perplexity.
//
// Document lengths follow the negative binomial with pmf
// Gamma(r+n) / (Gamma(r) n!) 2^-(r+n) (success probability 1/2, mean r).

#include <map>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "wfibp/allocation.hpp"
#include "wfibp/generative.hpp"
#include "wfibp/grid.hpp"
#include "wfibp/likelihood.hpp"
#include "wfibp/matrix.hpp"
#include "wfibp/mcmc.hpp"
#include "wfibp/rng.hpp"

namespace wfibp::topic {

struct Document {
  int doc_id = 0;
  std::vector<int> words;  // dictionary ids in [0, D)
};

struct Corpus {
  int D = 0;
  std::vector<std::vector<Document>> docs_by_time;
  std::vector<std::string> vocab;  // id -> token; optional
  std::vector<long> vocab_counts;

  std::vector<int> counts_per_time() const;
  long total_words() const;
  void validate() const;
};

struct CorpusTruth {
  gen::JointSample joint;                        // Z and trajectories
  std::map<FeatureId, std::vector<double>> rho;  // topic-word distributions
  std::map<std::pair<FeatureId, int>, double> phi;
  std::vector<std::vector<std::vector<FeatureId>>> assignments;  // [t][i][l]
};

struct TopicGenParams {
  double alpha = 1.0;
  double beta = 1.0;
  double step = 1e-3;
  double mu_override = -1.0;  // fixed-K drift; < 0 means alpha*beta/K
  double u = 0.01;            // truncation for the nonparametric draw
};

/// K >= 1 draws Z from the fixed-K model, K = 0 from the joint WF-IBP
/// construction. rho_k ~ Dirichlet(eta), phi_kt ~ Gamma(gamma, 1),
/// theta ~ Dirichlet(z o phi), W ~ NB(sum z phi, 1/2); documents with no
/// active topic have length zero.
std::pair<Corpus, CorpusTruth> generate_corpus(int K, const TimeGrid& grid,
                                               const std::vector<int>& N,
                                               int D, double eta, double gamma,
                                               const TopicGenParams& params,
                                               Rng& rng);

/// Collapsed Gibbs state for the assignments plus the uncollapsed phi, gamma.
class TopicState {
 public:
  TopicState(const Corpus& corpus, double eta, double gamma_init,
             double gamma_hyper_a, double gamma_hyper_b);

  int dictionary_size() const { return D_; }
  int num_times() const { return static_cast<int>(docs_.size()); }
  int num_docs(int t) const { return static_cast<int>(docs_[t].size()); }
  int num_words(int t, int i) const {
    return static_cast<int>(docs_[t][i].words.size());
  }

  double gamma() const { return gamma_; }
  double eta() const { return eta_; }

  bool has_phi(FeatureId k, int t) const { return phi_.count({k, t}) > 0; }
  double phi(FeatureId k, int t) const { return phi_.at({k, t}); }
  void set_phi(FeatureId k, int t, double v) { phi_[{k, t}] = v; }
  void erase_phi(FeatureId k, int t) { phi_.erase({k, t}); }
  const std::map<std::pair<FeatureId, int>, double>& all_phi() const {
    return phi_;
  }

  FeatureId assignment(int t, int i, int l) const { return docs_[t][i].assign[l]; }
  /// Reassigns word (t,i,l), updating every count cache.
  void set_assignment(int t, int i, int l, FeatureId k);
  int word(int t, int i, int l) const { return docs_[t][i].words[l]; }

  /// n_ikt: words of document i at time t assigned to topic k.
  int doc_topic_count(int t, int i, FeatureId k) const;
  long topic_count(FeatureId k) const;        // n_k across all times
  int word_topic_count(FeatureId k, int w) const;  // n^w_k

  /// Drops all caches for a topic (it must have no assignments left).
  void drop_topic(FeatureId k);

  /// Recomputes all caches from the assignments; returns false if any cached
  /// value disagreed (used by the consistency tests).
  bool check_counts() const;

  void set_gamma(double g) { gamma_ = g; }
  double gamma_hyper_a() const { return ga_; }
  double gamma_hyper_b() const { return gb_; }

 private:
  struct Doc {
    std::vector<int> words;
    std::vector<FeatureId> assign;  // -1 until initialized
    std::unordered_map<FeatureId, int> nk;
  };

  int D_;
  double eta_, gamma_, ga_, gb_;
  std::vector<std::vector<Doc>> docs_;
  std::unordered_map<FeatureId, std::vector<int>> nw_;
  std::unordered_map<FeatureId, long> nk_;
  std::map<std::pair<FeatureId, int>, double> phi_;

  friend class TopicHook;
};

/// Collapsed assignment draw: P(k) proportional to
/// (n^w_k + eta) (n^i_kt + phi_kt z_ikt) / (n_k + eta D), all counts
/// excluding the current assignment; support is the document's active topics.
FeatureId sample_assignment(TopicState& state, const AllocationSeries& Z,
                            int t, int i, int l, Rng& rng);

/// Log-scale Gaussian random-walk MH (sd 0.2, Jacobian-corrected) on the
/// target Gamma(gamma,1) prior x prod_i NB(n_ikt; phi z_ikt, 1/2).
/// Returns true when the proposal was accepted.
bool mh_update_phi(TopicState& state, const AllocationSeries& Z, FeatureId k,
                   int t, Rng& rng, double proposal_sd = 0.2);

/// Same move on gamma with target hyper-prior x prod Gamma(phi; gamma, 1).
bool mh_update_gamma(TopicState& state, Rng& rng, double proposal_sd = 0.2);

/// Unnormalized log target of phi_kt given the counts (exposed for tests).
double phi_log_target(const TopicState& state, const AllocationSeries& Z,
                      FeatureId k, int t, double phi);

/// rho_hat[k][w] = (n^w_k + eta) / (n_k + D eta) for the given topics.
std::map<FeatureId, std::vector<double>> estimate_rho(
    const TopicState& state, const std::vector<FeatureId>& topics);

/// theta_hat over the document's active topics; uniform over them when the
/// denominator vanishes. Inactive topics get zero.
std::map<FeatureId, double> estimate_theta(const TopicState& state,
                                           const AllocationSeries& Z, int t,
                                           int i,
                                           const std::vector<FeatureId>& topics);

struct HeldoutWord {
  int t = 0;
  int doc = 0;
  int word = 0;
};

/// Accumulates p_hat(w) = (1/S) sum_s sum_k theta_hat rho_hat over posterior
/// samples, then exp(-sum log p_hat / n_words). A zero-probability word makes
/// the result infinite rather than being masked.
class PerplexityAccumulator {
 public:
  explicit PerplexityAccumulator(std::vector<HeldoutWord> words);

  /// prob(t, doc, word) evaluates the current sample's word probability.
  void add_sample(const std::function<double(int, int, int)>& prob);

  int samples() const { return samples_; }
  double perplexity() const;

 private:
  std::vector<HeldoutWord> words_;
  std::vector<double> prob_sums_;
  int samples_ = 0;
};

/// Likelihood hook wiring the topic model into the samplers. The per-entry
/// likelihood is NB(n_ikt; phi z, 1/2): entries with words are forced active
/// and an inactive column proposes phi_kt from its Gamma(gamma, 1) prior when
/// the Gibbs sweep evaluates activation.
class TopicHook final : public mcmc::LikelihoodHook {
 public:
  TopicHook(const Corpus& corpus, double eta, double gamma_init,
            double gamma_hyper_a, double gamma_hyper_b);

  void reset(const mcmc::InferenceState* state, Rng& rng) override;
  double entry_loglik(int t, int i, FeatureId k, bool v, Rng& rng) override;
  void commit_entry(int t, int i, FeatureId k, bool v) override;
  void on_feature_added(FeatureId k) override;
  void on_feature_removed(FeatureId k) override;
  void update_params(Rng& rng) override;
  std::vector<std::pair<std::string, double>> scalars() const override;

  TopicState& state() { return ts_; }
  const TopicState& state() const { return ts_; }

  /// Current-sample word probability sum_k theta_hat_ikt rho_hat_kw.
  double predict(int t, int i, int w) const;

  /// Replaces the corpus words/assignments (joint-distribution checks).
  void resimulate_data(Rng& rng);

 private:
  const mcmc::InferenceState* st_ = nullptr;
  TopicState ts_;
  double pending_phi_ = -1.0;
  int pending_t_ = -1;
  FeatureId pending_k_ = -1;
};

}  // namespace wfibp::topic
