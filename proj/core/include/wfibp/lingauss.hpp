#pragma once

// Linear-Gaussian observation model: O_t = Z_t A + noise, conjugate
// posteriors for the factor matrix A and its prior scale, and the collapsed
// likelihood (A integrated out) used by the Gibbs sweep.

#include <vector>

#include "wfibp/allocation.hpp"
#include "wfibp/likelihood.hpp"
#include "wfibp/matrix.hpp"
#include "wfibp/mcmc.hpp"
#include "wfibp/rng.hpp"

namespace wfibp::lingauss {

struct FactorMatrix {
  Matrix A;              // K x D, feature parameters as rows
  double sigma_a = 1.0;  // prior scale
};

struct GaussObservations {
  std::vector<Matrix> O;  // per time, N_t x D
  double sigma_x = 0.5;
};

struct GaussPosterior {
  Matrix mu;     // K x D
  Matrix sigma;  // K x K, per-column covariance of A
};

struct InverseGamma {
  double shape = 1.0;
  double rate = 1.0;  // density ~ x^-(shape+1) exp(-rate / x)

  double mean() const { return rate / (shape - 1.0); }
};

/// O_t = Z_t A + eps, eps entries iid Normal(0, sigma_x^2). Columns of Z_t
/// follow feature_ids() order and must match A's rows.
GaussObservations generate(const AllocationSeries& Z, const Matrix& A,
                           double sigma_x, Rng& rng);

/// mu^A = (Z^T Z + (sx^2/sa^2) I)^-1 Z^T O, Sigma^A = sx^2 (Z^T Z + ...)^-1,
/// computed via Cholesky on the stacked matrices.
GaussPosterior posterior_A(const Matrix& Zbar, const Matrix& Obar,
                           double sigma_x, double sigma_a);

/// Gamma^-1(1 + KD/2, 1 + (1/2) sum A_kd^2).
InverseGamma posterior_sigmaA(const Matrix& A);

double inverse_gamma_draw(const InverseGamma& ig, Rng& rng);

/// log integral P(O | Z, A) P(A | sigma_a) dA over the stacked matrices.
double collapsed_loglik(const Matrix& Obar, const Matrix& Zbar, double sigma_x,
                        double sigma_a);

/// Likelihood hook backed by cached Z^T Z / Z^T O sufficient statistics with
/// rank-one updates per entry flip; caches are re-synced from scratch on
/// every parameter sweep.
class LinGaussHook final : public mcmc::LikelihoodHook {
 public:
  LinGaussHook(std::vector<Matrix> observations, double sigma_x,
               double sigma_a_init = 1.0);

  void reset(const mcmc::InferenceState* state, Rng& rng) override;
  double entry_loglik(int t, int i, FeatureId k, bool v, Rng& rng) override;
  void commit_entry(int t, int i, FeatureId k, bool v) override;
  void on_feature_added(FeatureId k) override;
  void on_feature_removed(FeatureId k) override;
  void update_params(Rng& rng) override;
  std::vector<std::pair<std::string, double>> scalars() const override;

  double sigma_a() const { return sigma_a_; }
  void set_sigma_a(double v) { sigma_a_ = v; }
  const Matrix& factor() const { return a_; }
  double current_loglik() const;
  Matrix posterior_mean() const;

  /// Replaces the data (joint-distribution checks resimulate O | Z, A).
  void set_observations(std::vector<Matrix> observations);

  /// Stacked views over the current column order.
  Matrix stacked_Z() const;
  Matrix stacked_O() const;

 private:
  void rebuild();
  double loglik_from(const Matrix& ztz, const Matrix& zto) const;
  int col_of(FeatureId k) const;

  const mcmc::InferenceState* st_ = nullptr;
  std::vector<Matrix> obs_;
  double sigma_x_;
  double sigma_a_;
  Matrix a_;  // last drawn factor matrix

  std::vector<FeatureId> ids_;  // column order (mirrors Z)
  Matrix ztz_, zto_;
  double tr_oo_ = 0.0;
  int total_rows_ = 0;
  int dim_ = 0;
};

}  // namespace wfibp::lingauss
