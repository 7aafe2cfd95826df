#pragma once

// Run configuration: one JSON document drives generation, inference and the
// perplexity pipeline. Defaults mirror the synthetic experiment settings.

#include <cstdint>
#include <string>
#include <vector>

#include "wfibp/grid.hpp"
#include "wfibp/mcmc.hpp"

namespace wfibp::io {

struct LikelihoodConfig {
  enum class Type { kLinGauss, kTopic };
  Type type = Type::kLinGauss;
  int D = 30;  // observation dimension / dictionary size

  // linear-Gaussian block
  double sigma_x = 0.5;  // fixed noise scale
  double sigma_a = 1.0;  // initial prior scale (then resampled via IG(1,1))

  // topic block
  double eta = 0.1;
  double gamma_hyper_a = 5.0;
  double gamma_hyper_b = 1.0;
  double gamma_init = 5.0;
};

struct RunConfig {
  double alpha = 1.0;
  double beta = 1.0;
  std::vector<double> grid_times;  // resolved observation times
  double step = -1.0;              // <= 0: min(1e-3, shortest interval / 50)
  int K = 0;                       // 0 = nonparametric
  double fixed_k_mu = -1.0;        // < 0: alpha beta / K
  int particles = 50;
  int iterations = 2000;
  int burn_in = 200;
  int sample_thin = 1;
  int init_features = 1;
  std::uint64_t seed = 0;
  bool static_baseline = false;
  std::vector<int> N;  // objects (or documents) per time
  LikelihoodConfig likelihood;
  int checkpoint_every = 200;

  /// Parses a config file; JSON syntax errors are reported with line and
  /// column, semantic errors with the offending key.
  static RunConfig from_file(const std::string& path);
  static RunConfig from_json_text(const std::string& text,
                                  const std::string& origin);

  /// Resolved config as canonical JSON (embedded in the run manifest).
  std::string to_json() const;

  void validate() const;
  TimeGrid grid() const { return TimeGrid(grid_times); }
  double resolved_step() const;
  mcmc::McmcConfig mcmc_config() const;
};

}  // namespace wfibp::io
