#include "wfibp/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "wfibp/numerics.hpp"

namespace wfibp::stats {

std::string TestReport::to_json() const {
  std::ostringstream os;
  os.precision(12);
  os << "{\"name\":\"" << name << "\",\"statistic\":" << statistic
     << ",\"p_value\":" << p_value << ",\"z_score\":" << z_score
     << ",\"reject\":" << (reject ? "true" : "false") << ",\"level\":" << level
     << ",\"replicates\":" << replicates << "}";
  return os.str();
}

namespace {

double ks_asymptotic_p(double d, double n_eff) {
  const double sn = std::sqrt(n_eff);
  return num::kolmogorov_q((sn + 0.12 + 0.11 / sn) * d);
}

}  // namespace

TestReport ks_beta(const std::vector<double>& samples, double a, double b,
                   double level) {
  if (samples.size() < 100)
    throw std::invalid_argument("ks_beta: need at least 100 samples");
  std::vector<double> s = samples;
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  double d = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double cdf = num::beta_cdf(std::clamp(s[i], 0.0, 1.0), a, b);
    d = std::max(d, std::fabs(cdf - static_cast<double>(i) / n));
    d = std::max(d, std::fabs(static_cast<double>(i + 1) / n - cdf));
  }
  TestReport r;
  r.name = "ks_beta";
  r.statistic = d;
  r.p_value = ks_asymptotic_p(d, n);
  r.level = level;
  r.reject = r.p_value < level;
  r.replicates = static_cast<int>(s.size());
  return r;
}

TestReport ks_two_sample(const std::vector<double>& xs,
                         const std::vector<double>& ys, double level) {
  if (xs.empty() || ys.empty())
    throw std::invalid_argument("ks_two_sample: empty sample");
  std::vector<double> a = xs, b = ys;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / a.size() -
                              static_cast<double>(j) / b.size()));
  }
  const double n_eff = static_cast<double>(a.size()) * b.size() /
                       static_cast<double>(a.size() + b.size());
  TestReport r;
  r.name = "ks_two_sample";
  r.statistic = d;
  r.p_value = ks_asymptotic_p(d, n_eff);
  r.level = level;
  r.reject = r.p_value < level;
  r.replicates = static_cast<int>(a.size() + b.size());
  return r;
}

std::vector<TestReport> poisson_field_check(
    const std::vector<measures::AtomSet>& replicates,
    const std::vector<std::pair<double, double>>& intervals, double alpha,
    double beta, double level) {
  if (replicates.size() < 100)
    throw std::invalid_argument("poisson_field_check: need >= 100 replicates");
  for (const auto& [a, b] : intervals)
    if (!(a > 0.0 && b <= 1.0 && a <= b))
      throw std::invalid_argument("poisson_field_check: interval outside (0,1]");

  const int R = static_cast<int>(replicates.size());
  const int I = static_cast<int>(intervals.size());
  std::vector<std::vector<double>> counts(I, std::vector<double>(R, 0.0));
  for (int r = 0; r < R; ++r)
    for (const auto& atom : replicates[r].atoms)
      for (int q = 0; q < I; ++q)
        if (atom.mass >= intervals[q].first && atom.mass < intervals[q].second)
          counts[q][r] += 1.0;

  std::vector<TestReport> out;
  std::vector<double> means(I, 0.0), vars(I, 0.0);
  for (int q = 0; q < I; ++q) {
    const auto& c = counts[q];
    const double mean = std::accumulate(c.begin(), c.end(), 0.0) / R;
    double var = 0.0;
    for (double v : c) var += (v - mean) * (v - mean);
    var /= (R - 1);
    means[q] = mean;
    vars[q] = var;
    const double lambda =
        measures::levy_integral(alpha, beta, intervals[q].first, intervals[q].second);
    const double se = std::sqrt(std::max(var, lambda) / R);
    TestReport rep;
    std::ostringstream nm;
    nm << "poisson_count[" << intervals[q].first << "," << intervals[q].second << ")";
    rep.name = nm.str();
    rep.statistic = mean;
    rep.z_score = se > 0.0 ? (mean - lambda) / se : 0.0;
    rep.p_value = std::nan("");
    rep.level = level;
    rep.reject = std::fabs(rep.z_score) > 3.0;
    rep.replicates = R;
    out.push_back(rep);
  }
  // Independence across disjoint interval pairs: sample covariance ~ 0.
  for (int q = 0; q < I; ++q)
    for (int w = q + 1; w < I; ++w) {
      if (intervals[q].second > intervals[w].first &&
          intervals[w].second > intervals[q].first)
        continue;  // overlapping; independence not expected
      double cov = 0.0;
      for (int r = 0; r < R; ++r)
        cov += (counts[q][r] - means[q]) * (counts[w][r] - means[w]);
      cov /= (R - 1);
      const double se = std::sqrt(vars[q] * vars[w] / R);
      TestReport rep;
      std::ostringstream nm;
      nm << "poisson_indep[" << q << "," << w << "]";
      rep.name = nm.str();
      rep.statistic = cov;
      rep.z_score = se > 0.0 ? cov / se : 0.0;
      rep.p_value = std::nan("");
      rep.level = level;
      rep.reject = std::fabs(rep.z_score) > 3.0;
      rep.replicates = R;
      out.push_back(rep);
    }
  return out;
}

namespace {

// Energy V-statistic from a precomputed pooled distance matrix, given group
// sizes n, m and an index permutation (first n indices form group A).
double energy_from_dists(const std::vector<float>& dist, int total,
                         const std::vector<int>& order, int n) {
  const int m = total - n;
  double saa = 0.0, sbb = 0.0, sab = 0.0;
  for (int i = 0; i < total; ++i) {
    const bool ia = i < n;
    const int oi = order[i];
    const std::size_t row = static_cast<std::size_t>(oi) * total;
    for (int j = i + 1; j < total; ++j) {
      const double d = dist[row + order[j]];
      const bool ja = j < n;
      if (ia && ja)
        saa += d;
      else if (!ia && !ja)
        sbb += d;
      else
        sab += d;
    }
  }
  // V-statistic: diagonal terms are zero, off-diagonal counted twice.
  return 2.0 * sab / (static_cast<double>(n) * m) -
         2.0 * saa / (static_cast<double>(n) * n) -
         2.0 * sbb / (static_cast<double>(m) * m);
}

}  // namespace

TestReport two_sample_energy(const std::vector<std::vector<double>>& a,
                             const std::vector<std::vector<double>>& b,
                             int permutations, Rng& rng, double level) {
  if (a.empty() || b.empty())
    throw std::invalid_argument("two_sample_energy: empty sample");
  const std::size_t dim = a.front().size();
  for (const auto& v : a)
    if (v.size() != dim)
      throw std::invalid_argument("two_sample_energy: dimension mismatch");
  for (const auto& v : b)
    if (v.size() != dim)
      throw std::invalid_argument("two_sample_energy: dimension mismatch");

  const int n = static_cast<int>(a.size());
  const int m = static_cast<int>(b.size());
  const int total = n + m;
  std::vector<const std::vector<double>*> pool(total);
  for (int i = 0; i < n; ++i) pool[i] = &a[i];
  for (int j = 0; j < m; ++j) pool[n + j] = &b[j];

  std::vector<float> dist(static_cast<std::size_t>(total) * total, 0.0f);
  for (int i = 0; i < total; ++i)
    for (int j = i + 1; j < total; ++j) {
      double s = 0.0;
      for (std::size_t d = 0; d < dim; ++d)
        s += num::sq((*pool[i])[d] - (*pool[j])[d]);
      const float e = static_cast<float>(std::sqrt(s));
      dist[static_cast<std::size_t>(i) * total + j] = e;
      dist[static_cast<std::size_t>(j) * total + i] = e;
    }

  std::vector<int> order(total);
  for (int i = 0; i < total; ++i) order[i] = i;
  const double observed = energy_from_dists(dist, total, order, n);

  int geq = 0;
  for (int p = 0; p < permutations; ++p) {
    for (int i = total - 1; i > 0; --i) {
      const int j = static_cast<int>(rng.uniform() * (i + 1));
      std::swap(order[i], order[j]);
    }
    if (energy_from_dists(dist, total, order, n) >= observed) ++geq;
  }

  TestReport r;
  r.name = "two_sample_energy";
  r.statistic = observed;
  r.p_value = (1.0 + geq) / (1.0 + permutations);
  r.level = level;
  r.reject = r.p_value < level;
  r.replicates = total;
  return r;
}

double coverage_check(const std::vector<double>& truth,
                      const std::vector<double>& mean,
                      const std::vector<double>& sd) {
  if (truth.size() != mean.size() || truth.size() != sd.size())
    throw std::invalid_argument("coverage_check: grid mismatch");
  if (truth.empty()) throw std::invalid_argument("coverage_check: empty grids");
  int in_band = 0;
  for (std::size_t i = 0; i < truth.size(); ++i)
    if (std::fabs(truth[i] - mean[i]) <= 2.0 * sd[i]) ++in_band;
  return static_cast<double>(in_band) / truth.size();
}

}  // namespace wfibp::stats
