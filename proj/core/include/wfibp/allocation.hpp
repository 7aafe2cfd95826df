#pragma once

// Binary feature-allocation matrices Z_t across time points with a shared
// feature-id column space, plus the cached counts n_{kt}.

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "wfibp/binmat.hpp"

namespace wfibp {

using FeatureId = std::int64_t;

class AllocationSeries {
 public:
  AllocationSeries() = default;
  explicit AllocationSeries(std::vector<int> rows_per_time)
      : N_(std::move(rows_per_time)), z_(N_.size()), n_(N_.size()) {
    for (int n : N_)
      if (n < 0) throw std::invalid_argument("AllocationSeries: negative N_t");
  }

  int num_times() const { return static_cast<int>(N_.size()); }
  int rows_at(int t) const { return N_[t]; }
  const std::vector<int>& rows() const { return N_; }
  int num_features() const { return static_cast<int>(ids_.size()); }
  const std::vector<FeatureId>& feature_ids() const { return ids_; }
  bool has_feature(FeatureId k) const { return col_of_.count(k) > 0; }

  bool get(int t, int i, FeatureId k) const {
    return z_[t][idx(t, i, col(k))] != 0;
  }

  void set(int t, int i, FeatureId k, bool v) {
    auto& cell = z_[t][idx(t, i, col(k))];
    if (cell == static_cast<std::uint8_t>(v)) return;
    n_[t][col(k)] += v ? 1 : -1;
    cell = v ? 1 : 0;
  }

  /// n_{kt}: number of objects possessing feature k at time t.
  int count(int t, FeatureId k) const { return n_[t][col(k)]; }

  /// Seen anywhere: n_{kt} > 0 for some t.
  bool seen(FeatureId k) const {
    const int c = col(k);
    for (int t = 0; t < num_times(); ++t)
      if (n_[t][c] > 0) return true;
    return false;
  }

  /// First time index with n_{kt} > 0, or -1 if unseen everywhere.
  int first_seen_time(FeatureId k) const {
    const int c = col(k);
    for (int t = 0; t < num_times(); ++t)
      if (n_[t][c] > 0) return t;
    return -1;
  }

  /// Adds an all-zero column for feature k (id-sorted column order).
  void add_feature(FeatureId k) {
    if (has_feature(k)) throw std::invalid_argument("add_feature: id exists");
    const auto pos =
        std::lower_bound(ids_.begin(), ids_.end(), k) - ids_.begin();
    ids_.insert(ids_.begin() + pos, k);
    for (int t = 0; t < num_times(); ++t) {
      auto& zt = z_[t];
      std::vector<std::uint8_t> nz(static_cast<std::size_t>(N_[t]) * ids_.size(), 0);
      for (int i = 0; i < N_[t]; ++i)
        for (std::size_t c = 0; c < ids_.size() - 1; ++c) {
          const std::size_t src_c = c < static_cast<std::size_t>(pos) ? c : c + 1;
          nz[i * ids_.size() + src_c] = zt[i * (ids_.size() - 1) + c];
        }
      zt.swap(nz);
      n_[t].insert(n_[t].begin() + pos, 0);
    }
    reindex();
  }

  void remove_feature(FeatureId k) {
    const int c = col(k);
    for (int t = 0; t < num_times(); ++t) {
      auto& zt = z_[t];
      std::vector<std::uint8_t> nz(static_cast<std::size_t>(N_[t]) * (ids_.size() - 1), 0);
      for (int i = 0; i < N_[t]; ++i)
        for (std::size_t cc = 0; cc + 1 < ids_.size(); ++cc) {
          const std::size_t src_c = cc < static_cast<std::size_t>(c) ? cc : cc + 1;
          nz[i * (ids_.size() - 1) + cc] = zt[i * ids_.size() + src_c];
        }
      zt.swap(nz);
      n_[t].erase(n_[t].begin() + c);
    }
    ids_.erase(ids_.begin() + c);
    reindex();
  }

  /// Dense matrix view of time t with columns in feature_ids() order.
  BinaryMatrix matrix_at(int t) const {
    BinaryMatrix m(N_[t], num_features());
    for (int i = 0; i < N_[t]; ++i)
      for (int c = 0; c < num_features(); ++c)
        m.set(i, c, z_[t][idx(t, i, c)] != 0);
    return m;
  }

  /// Recomputes all counts from the raw entries (consistency checks).
  std::vector<std::vector<int>> recount() const {
    std::vector<std::vector<int>> fresh(num_times(),
                                        std::vector<int>(num_features(), 0));
    for (int t = 0; t < num_times(); ++t)
      for (int i = 0; i < N_[t]; ++i)
        for (int c = 0; c < num_features(); ++c)
          fresh[t][c] += z_[t][idx(t, i, c)] != 0;
    return fresh;
  }
  const std::vector<std::vector<int>>& counts() const { return n_; }

 private:
  std::size_t idx(int t, int i, int c) const {
    return static_cast<std::size_t>(i) * ids_.size() + c;
  }
  int col(FeatureId k) const {
    auto it = col_of_.find(k);
    if (it == col_of_.end())
      throw std::out_of_range("AllocationSeries: unknown feature id");
    return it->second;
  }
  void reindex() {
    col_of_.clear();
    for (std::size_t c = 0; c < ids_.size(); ++c)
      col_of_[ids_[c]] = static_cast<int>(c);
  }

  std::vector<int> N_;
  std::vector<FeatureId> ids_;  // sorted
  std::unordered_map<FeatureId, int> col_of_;
  std::vector<std::vector<std::uint8_t>> z_;  // z_[t], row-major N_t x ids
  std::vector<std::vector<int>> n_;           // n_[t][col]
};

}  // namespace wfibp
