#pragma once

#include <stdexcept>
#include <vector>

namespace wfibp {

/// Observation times t_0 < ... < t_T in diffusion-time units.
struct TimeGrid {
  std::vector<double> times;

  TimeGrid() = default;
  explicit TimeGrid(std::vector<double> t) : times(std::move(t)) { validate(); }

  static TimeGrid regular(int num_times, double interval, double t0 = 0.0) {
    if (num_times < 1) throw std::invalid_argument("TimeGrid: need >= 1 time");
    if (num_times > 1 && !(interval > 0.0))
      throw std::invalid_argument("TimeGrid: interval must be > 0");
    std::vector<double> t(num_times);
    for (int j = 0; j < num_times; ++j) t[j] = t0 + j * interval;
    return TimeGrid(std::move(t));
  }

  void validate() const {
    if (times.empty()) throw std::invalid_argument("TimeGrid: empty grid");
    for (std::size_t j = 1; j < times.size(); ++j)
      if (!(times[j] > times[j - 1]))
        throw std::invalid_argument("TimeGrid: times must be strictly increasing");
  }

  int num_times() const { return static_cast<int>(times.size()); }
  int num_intervals() const { return num_times() - 1; }
  /// Duration of interval j, between times[j] and times[j+1].
  double interval(int j) const { return times[j + 1] - times[j]; }
};

}  // namespace wfibp
