#pragma once

// Samplers for the beta-process / PRF atom layer: the Levy density, exact
// simulation of the truncated Poisson process by adaptive thinning, the
// sequential two-parameter IBP, conjugate posterior beta draws, and Bernoulli
// allocation rows.

#include <cstdint>
#include <vector>

#include "wfibp/binmat.hpp"
#include "wfibp/rng.hpp"

namespace wfibp::measures {

using FeatureId = std::int64_t;

struct PRFParams {
  double alpha = 1.0;  // immigration / mass parameter
  double beta = 1.0;   // concentration

  void validate() const;
};

struct Atom {
  FeatureId id;
  double mass;  // in (0,1)
};

struct AtomSet {
  std::vector<Atom> atoms;

  std::size_t size() const { return atoms.size(); }
};

/// alpha x^(-1) (1-x)^(c-1); c = beta for the prior process, c = beta + N_t
/// for the posterior one.
double levy_density(double x, double alpha, double c);

/// Integral of the Levy density over [a, b] in (0, 1), by quadrature.
double levy_integral(double alpha, double c, double a, double b);

/// Exact draw of a Poisson process on [u, 1) with intensity
/// alpha x^(-1) (1-x)^(c-1) dx, via thinning of piecewise inverse-CDF
/// envelopes. Ids are assigned sequentially from first_id.
AtomSet sample_truncated_process(double alpha, double c, double u, Rng& rng,
                                 FeatureId first_id = 0);

/// Sequential two-parameter IBP: customer i takes existing dish k with
/// probability m_k / (beta + i - 1) and Poisson(alpha beta / (beta + i - 1))
/// new dishes. Columns are ordered by customer of first appearance.
BinaryMatrix sample_ibp(double alpha, double beta, int n_rows, Rng& rng);

/// Beta(n, beta + N - n) draw for a feature seen n times among N objects.
double posterior_beta_draw(int n, int N, double beta, Rng& rng);

/// Independent Bernoulli(mass_k) entries, one column per mass.
BinaryMatrix bernoulli_rows(const std::vector<double>& masses, int n_rows,
                            Rng& rng);

}  // namespace wfibp::measures
