#pragma once

// Shared machinery for the unit and acceptance suites: state construction
// from generated samples, autocorrelation-aware standard errors, and the
// joint-distribution (successive-conditional) checkers for the feature and
// topic samplers.

#include <string>
#include <vector>

#include "wfibp/generative.hpp"
#include "wfibp/mcmc.hpp"
#include "wfibp/rng.hpp"

namespace wfibp::testsupport {

mcmc::InferenceState state_from_joint(const gen::JointSample& js,
                                      const std::vector<int>& N);

double mean_of(const std::vector<double>& v);

/// Standard error of the mean via batch means (handles autocorrelation).
double batch_se(const std::vector<double>& v, int batches = 50);

/// Plain iid standard error.
double iid_se(const std::vector<double>& v);

struct GewekeReport {
  std::string statistic;
  double forward_mean = 0.0;
  double chain_mean = 0.0;
  double z = 0.0;  // |difference| in combined standard errors
};

/// Forward vs successive-conditional comparison for the nonparametric
/// feature sampler with the collapsed linear-Gaussian likelihood on a
/// 2-object, 2-time toy. Returns one report per tracked statistic.
std::vector<GewekeReport> lingauss_geweke(std::uint64_t seed, int rounds);

/// Same for the fixed-K topic sampler on a 2-document, 2-topic, D = 5 toy.
std::vector<GewekeReport> topic_geweke(std::uint64_t seed, int rounds);

}  // namespace wfibp::testsupport
