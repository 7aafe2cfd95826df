#include "wfibp/lingauss.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

namespace wfibp::lingauss {

namespace {

constexpr double kTwoPi = 6.283185307179586477;

Matrix regularized_gram(const Matrix& ztz, double sigma_x, double sigma_a) {
  Matrix m = ztz;
  const double ridge = sigma_x * sigma_x / (sigma_a * sigma_a);
  for (int i = 0; i < m.rows(); ++i) m(i, i) += ridge;
  return m;
}

void check_finite(const Matrix& m, const char* name) {
  for (double v : m.data())
    if (!std::isfinite(v))
      throw std::invalid_argument(std::string(name) + ": non-finite entry");
}

}  // namespace

GaussObservations generate(const AllocationSeries& Z, const Matrix& A,
                           double sigma_x, Rng& rng) {
  if (Z.num_features() != A.rows())
    throw std::invalid_argument("generate: Z columns and A rows must match");
  if (sigma_x < 0.0) throw std::invalid_argument("generate: negative sigma_x");
  check_finite(A, "generate A");
  GaussObservations out;
  out.sigma_x = sigma_x;
  for (int t = 0; t < Z.num_times(); ++t) {
    Matrix zt(Z.rows_at(t), Z.num_features());
    const auto bm = Z.matrix_at(t);
    for (int i = 0; i < bm.rows(); ++i)
      for (int c = 0; c < bm.cols(); ++c) zt(i, c) = bm.get(i, c);
    Matrix o = zt * A;
    for (double& v : o.data()) v += sigma_x * rng.normal();
    out.O.push_back(std::move(o));
  }
  return out;
}

GaussPosterior posterior_A(const Matrix& Zbar, const Matrix& Obar,
                           double sigma_x, double sigma_a) {
  if (Zbar.rows() != Obar.rows())
    throw std::invalid_argument("posterior_A: row mismatch");
  if (!(sigma_x > 0.0) || !(sigma_a > 0.0))
    throw std::invalid_argument("posterior_A: scales must be > 0");
  check_finite(Zbar, "posterior_A Z");
  check_finite(Obar, "posterior_A O");
  const Matrix m = regularized_gram(Zbar.gram(), sigma_x, sigma_a);
  Cholesky chol(m);
  GaussPosterior post;
  post.mu = chol.solve(Zbar.transpose() * Obar);
  post.sigma = chol.inverse().scaled(sigma_x * sigma_x);
  return post;
}

InverseGamma posterior_sigmaA(const Matrix& A) {
  check_finite(A, "posterior_sigmaA");
  double ss = 0.0;
  for (double v : A.data()) ss += v * v;
  return InverseGamma{1.0 + 0.5 * A.rows() * A.cols(), 1.0 + 0.5 * ss};
}

double inverse_gamma_draw(const InverseGamma& ig, Rng& rng) {
  return ig.rate / rng.gamma(ig.shape, 1.0);
}

double collapsed_loglik(const Matrix& Obar, const Matrix& Zbar, double sigma_x,
                        double sigma_a) {
  if (Zbar.rows() != Obar.rows())
    throw std::invalid_argument("collapsed_loglik: row mismatch");
  if (!(sigma_x > 0.0) || !(sigma_a > 0.0))
    throw std::invalid_argument("collapsed_loglik: scales must be > 0");
  check_finite(Zbar, "collapsed_loglik Z");
  check_finite(Obar, "collapsed_loglik O");
  const int P = Zbar.rows();
  const int K = Zbar.cols();
  const int D = Obar.cols();
  const double sx2 = sigma_x * sigma_x;

  double tr_oo = 0.0;
  for (double v : Obar.data()) tr_oo += v * v;

  double logdet = 0.0;
  double quad = 0.0;
  if (K > 0) {
    const Matrix m = regularized_gram(Zbar.gram(), sigma_x, sigma_a);
    Cholesky chol(m);
    logdet = chol.log_det();
    const Matrix zto = Zbar.transpose() * Obar;
    const Matrix x = chol.solve(zto);
    for (std::size_t i = 0; i < zto.data().size(); ++i)
      quad += zto.data()[i] * x.data()[i];
  }
  return -0.5 * (P - K) * D * std::log(kTwoPi * sx2) -
         0.5 * K * D * std::log(kTwoPi * sigma_a * sigma_a) - 0.5 * D * logdet -
         (tr_oo - quad) / (2.0 * sx2);
}

LinGaussHook::LinGaussHook(std::vector<Matrix> observations, double sigma_x,
                           double sigma_a_init)
    : obs_(std::move(observations)), sigma_x_(sigma_x), sigma_a_(sigma_a_init) {
  if (!(sigma_x_ > 0.0) || !(sigma_a_ > 0.0))
    throw std::invalid_argument("LinGaussHook: scales must be > 0");
  if (obs_.empty()) throw std::invalid_argument("LinGaussHook: no observations");
  dim_ = obs_.front().cols();
  for (const auto& o : obs_) {
    if (o.cols() != dim_)
      throw std::invalid_argument("LinGaussHook: inconsistent data dimension");
    check_finite(o, "LinGaussHook data");
  }
}

void LinGaussHook::set_observations(std::vector<Matrix> observations) {
  obs_ = std::move(observations);
  rebuild();
}

void LinGaussHook::reset(const mcmc::InferenceState* state, Rng&) {
  st_ = state;
  if (static_cast<int>(obs_.size()) != st_->num_times())
    throw std::invalid_argument("LinGaussHook: data/grid time mismatch");
  for (int t = 0; t < st_->num_times(); ++t)
    if (obs_[t].rows() != st_->N[t])
      throw std::invalid_argument("LinGaussHook: data row mismatch");
  rebuild();
}

int LinGaussHook::col_of(FeatureId k) const {
  for (std::size_t c = 0; c < ids_.size(); ++c)
    if (ids_[c] == k) return static_cast<int>(c);
  throw std::out_of_range("LinGaussHook: unknown feature");
}

void LinGaussHook::rebuild() {
  if (st_ == nullptr) return;
  ids_ = st_->Z.feature_ids();
  const int K = static_cast<int>(ids_.size());
  total_rows_ = std::accumulate(st_->N.begin(), st_->N.end(), 0);
  ztz_ = Matrix(K, K);
  zto_ = Matrix(K, dim_);
  tr_oo_ = 0.0;
  for (const auto& o : obs_)
    for (double v : o.data()) tr_oo_ += v * v;
  for (int t = 0; t < st_->num_times(); ++t) {
    const auto zt = st_->Z.matrix_at(t);
    for (int i = 0; i < zt.rows(); ++i)
      for (int a = 0; a < K; ++a) {
        if (!zt.get(i, a)) continue;
        for (int b = 0; b < K; ++b) ztz_(a, b) += zt.get(i, b);
        for (int d = 0; d < dim_; ++d) zto_(a, d) += obs_[t](i, d);
      }
  }
}

double LinGaussHook::loglik_from(const Matrix& ztz, const Matrix& zto) const {
  const int K = ztz.rows();
  const double sx2 = sigma_x_ * sigma_x_;
  double logdet = 0.0, quad = 0.0;
  if (K > 0) {
    Cholesky chol(regularized_gram(ztz, sigma_x_, sigma_a_));
    logdet = chol.log_det();
    const Matrix x = chol.solve(zto);
    for (std::size_t i = 0; i < zto.data().size(); ++i)
      quad += zto.data()[i] * x.data()[i];
  }
  return -0.5 * (total_rows_ - K) * dim_ * std::log(kTwoPi * sx2) -
         0.5 * K * dim_ * std::log(kTwoPi * sigma_a_ * sigma_a_) -
         0.5 * dim_ * logdet - (tr_oo_ - quad) / (2.0 * sx2);
}

double LinGaussHook::current_loglik() const { return loglik_from(ztz_, zto_); }

double LinGaussHook::entry_loglik(int t, int i, FeatureId k, bool v, Rng&) {
  const bool cur = st_->Z.get(t, i, k);
  if (v == cur) return loglik_from(ztz_, zto_);
  const int c = col_of(k);
  const double delta = v ? 1.0 : -1.0;
  const int K = static_cast<int>(ids_.size());

  Matrix ztz = ztz_;
  Matrix zto = zto_;
  // Rank-one update from the current (pre-flip) row.
  for (int b = 0; b < K; ++b) {
    const double zb = st_->Z.get(t, i, ids_[b]) ? 1.0 : 0.0;
    ztz(c, b) += delta * zb;
    ztz(b, c) += delta * zb;
  }
  ztz(c, c) += delta * delta;
  for (int d = 0; d < dim_; ++d) zto(c, d) += delta * obs_[t](i, d);
  return loglik_from(ztz, zto);
}

void LinGaussHook::commit_entry(int t, int i, FeatureId k, bool v) {
  // The sampler has already written v into Z; detect a real change through
  // the cached diagonal (ztz(c,c) equals the total count of the column).
  const int c = col_of(k);
  double n_cached = ztz_(c, c);
  double n_actual = 0.0;
  for (int tt = 0; tt < st_->num_times(); ++tt) n_actual += st_->Z.count(tt, k);
  if (n_cached == n_actual) return;  // value unchanged
  const double delta = v ? 1.0 : -1.0;
  const int K = static_cast<int>(ids_.size());
  // Post-flip row: ztz' = ztz + delta (e_c z^T + z e_c^T) - delta^2 e_c e_c^T.
  for (int b = 0; b < K; ++b) {
    const double zb = st_->Z.get(t, i, ids_[b]) ? 1.0 : 0.0;
    ztz_(c, b) += delta * zb;
    ztz_(b, c) += delta * zb;
  }
  ztz_(c, c) -= delta * delta;
  for (int d = 0; d < dim_; ++d) zto_(c, d) += delta * obs_[t](i, d);
}

void LinGaussHook::on_feature_added(FeatureId) { rebuild(); }
void LinGaussHook::on_feature_removed(FeatureId) { rebuild(); }

void LinGaussHook::update_params(Rng& rng) {
  rebuild();  // re-sync caches; rank-one drift stays bounded per iteration
  const int K = static_cast<int>(ids_.size());
  if (K == 0) {
    a_ = Matrix();
    sigma_a_ = std::sqrt(inverse_gamma_draw(InverseGamma{1.0, 1.0}, rng));
    return;
  }
  Cholesky chol(regularized_gram(ztz_, sigma_x_, sigma_a_));
  const Matrix mu = chol.solve(zto_);
  Matrix e(K, dim_);
  for (double& v : e.data()) v = rng.normal();
  // A = mu + sigma_x L^-T E draws each column from N(mu_col, sx^2 M^-1).
  a_ = mu + chol.solve_lt(e).scaled(sigma_x_);
  const double sa2 = inverse_gamma_draw(posterior_sigmaA(a_), rng);
  sigma_a_ = std::sqrt(sa2);
}

std::vector<std::pair<std::string, double>> LinGaussHook::scalars() const {
  return {{"sigma_a", sigma_a_},
          {"loglik", current_loglik()},
          {"k_features", static_cast<double>(ids_.size())}};
}

Matrix LinGaussHook::posterior_mean() const {
  const int K = static_cast<int>(ids_.size());
  if (K == 0) return Matrix();
  Cholesky chol(regularized_gram(ztz_, sigma_x_, sigma_a_));
  return chol.solve(zto_);
}

Matrix LinGaussHook::stacked_Z() const {
  const int K = static_cast<int>(ids_.size());
  Matrix z(total_rows_, K);
  int r = 0;
  for (int t = 0; t < st_->num_times(); ++t) {
    const auto zt = st_->Z.matrix_at(t);
    for (int i = 0; i < zt.rows(); ++i, ++r)
      for (int c = 0; c < K; ++c) z(r, c) = zt.get(i, c);
  }
  return z;
}

Matrix LinGaussHook::stacked_O() const {
  Matrix o(total_rows_, dim_);
  int r = 0;
  for (int t = 0; t < st_->num_times(); ++t)
    for (int i = 0; i < obs_[t].rows(); ++i, ++r)
      for (int d = 0; d < dim_; ++d) o(r, d) = obs_[t](i, d);
  return o;
}

}  // namespace wfibp::lingauss
