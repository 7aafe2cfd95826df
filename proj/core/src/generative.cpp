#include "wfibp/generative.hpp"

#include <cmath>
#include <stdexcept>

#include "wfibp/diffusion.hpp"

namespace wfibp::gen {

namespace {

double fwd(double x, double mu, double beta, double dur, double step, Rng& rng) {
  if (!(dur > 0.0)) return x;
  diffusion::DiffusionParams p{mu, beta, std::min(step, dur)};
  return diffusion::simulate_endpoint(x, p, dur, rng);
}

double bwd(double x_end, double beta, double dur, double step, Rng& rng) {
  if (!(dur > 0.0)) return x_end;
  return diffusion::simulate_backward_endpoint(x_end, beta, dur,
                                               std::min(step, dur), rng);
}

}  // namespace

FeatureSystem simulate_prf_system(const PRFParams& params, double u,
                                  const TimeGrid& grid, double step, Rng& rng) {
  params.validate();
  grid.validate();
  if (!(u > 0.0 && u < 1.0))
    throw std::invalid_argument("simulate_prf_system: u must be in (0,1)");
  if (!(step > 0.0)) step = diffusion::default_step(1.0);

  const int T1 = grid.num_times();
  FeatureSystem sys;
  sys.grid = grid;
  FeatureId next_id = 0;

  // Features above u at t_0, propagated forward.
  {
    Rng r0 = rng.substream("atoms", 0);
    auto atoms = measures::sample_truncated_process(params.alpha, params.beta,
                                                    u, r0, next_id);
    for (const auto& a : atoms.atoms) {
      FeatureTrack f;
      f.id = a.id;
      f.birth_interval = -1;
      f.x.assign(T1, 0.0);
      f.x[0] = a.mass;
      Rng rf = rng.substream("traj", static_cast<std::uint64_t>(a.id));
      for (int j = 0; j + 1 < T1; ++j)
        f.x[j + 1] = fwd(f.x[j], 0.0, params.beta, grid.interval(j), step, rf);
      sys.features.push_back(std::move(f));
      next_id = a.id + 1;
    }
  }

  // Candidate newborns at each later grid time, compensating for the features
  // below u at earlier times.
  for (int j = 1; j < T1; ++j) {
    Rng rj = rng.substream("atoms", static_cast<std::uint64_t>(j));
    auto atoms = measures::sample_truncated_process(params.alpha, params.beta,
                                                    u, rj, next_id);
    for (const auto& a : atoms.atoms) {
      FeatureTrack f;
      f.id = a.id;
      f.birth_interval = j - 1;
      f.x.assign(T1, 0.0);
      f.x[j] = a.mass;
      next_id = a.id + 1;
      Rng rf = rng.substream("traj", static_cast<std::uint64_t>(a.id));
      bool rejected = false;
      for (int b = j - 1; b >= 0; --b) {
        f.x[b] = bwd(f.x[b + 1], params.beta, grid.interval(b), step, rf);
        if (f.x[b] >= u) {
          rejected = true;  // already representable at an earlier time
          break;
        }
      }
      if (rejected) continue;
      for (int b = j; b + 1 < T1; ++b)
        f.x[b + 1] = fwd(f.x[b], 0.0, params.beta, grid.interval(b), step, rf);
      sys.features.push_back(std::move(f));
    }
  }
  return sys;
}

JointSample simulate_joint(const PRFParams& params, const TimeGrid& grid,
                           const std::vector<int>& N, double step, Rng& rng) {
  params.validate();
  grid.validate();
  if (static_cast<int>(N.size()) != grid.num_times())
    throw std::invalid_argument("simulate_joint: N must have one count per time");
  for (int n : N)
    if (n < 1) throw std::invalid_argument("simulate_joint: counts must be >= 1");
  if (!(step > 0.0)) step = diffusion::default_step(1.0);

  const int T1 = grid.num_times();
  JointSample out;
  out.system.grid = grid;
  out.Z = AllocationSeries(N);
  FeatureId next_id = 0;

  // Step 1-2: Z_{t_0} from the IBP, masses from the posterior beta process.
  {
    Rng r0 = rng.substream("ibp", 0);
    BinaryMatrix z0 = measures::sample_ibp(params.alpha, params.beta, N[0], r0);
    for (int c = 0; c < z0.cols(); ++c) {
      FeatureTrack f;
      f.id = next_id++;
      f.birth_interval = -1;
      f.x.assign(T1, 0.0);
      f.x[0] = measures::posterior_beta_draw(z0.col_sum(c), N[0], params.beta, r0);
      out.Z.add_feature(f.id);
      for (int i = 0; i < N[0]; ++i)
        if (z0.get(i, c)) out.Z.set(0, i, f.id, true);
      out.system.features.push_back(std::move(f));
    }
  }

  for (int j = 1; j < T1; ++j) {
    Rng rj = rng.substream("step", static_cast<std::uint64_t>(j));
    // Propagate every existing feature and draw its Z column at t_j.
    for (auto& f : out.system.features) {
      Rng rf = rj.substream("traj", static_cast<std::uint64_t>(f.id));
      f.x[j] = fwd(f.x[j - 1], 0.0, params.beta, grid.interval(j - 1), step, rf);
      for (int i = 0; i < N[j]; ++i)
        if (rf.bernoulli(f.x[j])) out.Z.set(j, i, f.id, true);
    }
    // Candidate columns for features seen for the first time at t_j.
    BinaryMatrix zc = measures::sample_ibp(params.alpha, params.beta, N[j], rj);
    for (int c = 0; c < zc.cols(); ++c) {
      FeatureTrack f;
      f.id = next_id++;
      f.birth_interval = j - 1;
      f.x.assign(T1, 0.0);
      f.x[j] = measures::posterior_beta_draw(zc.col_sum(c), N[j], params.beta, rj);
      Rng rf = rj.substream("ctraj", static_cast<std::uint64_t>(f.id));
      for (int b = j - 1; b >= 0; --b)
        f.x[b] = bwd(f.x[b + 1], params.beta, grid.interval(b), step, rf);
      double log_acc = 0.0;
      for (int b = 0; b < j; ++b)
        log_acc += N[b] * std::log1p(-std::min(f.x[b], 1.0 - 1e-16));
      if (std::log(rf.uniform_pos()) >= log_acc) continue;  // seen earlier
      out.Z.add_feature(f.id);
      for (int i = 0; i < N[j]; ++i)
        if (zc.get(i, c)) out.Z.set(j, i, f.id, true);
      // Later times are handled by the propagation loop of subsequent j.
      out.system.features.push_back(std::move(f));
    }
  }
  return out;
}

JointSample fixed_k_generate(double alpha, double beta, int K,
                             const TimeGrid& grid, const std::vector<int>& N,
                             double step, Rng& rng, double mu_override) {
  if (K < 1) throw std::invalid_argument("fixed_k_generate: K must be >= 1");
  if (!(alpha > 0.0) || !(beta > 0.0))
    throw std::invalid_argument("fixed_k_generate: alpha, beta must be > 0");
  grid.validate();
  if (static_cast<int>(N.size()) != grid.num_times())
    throw std::invalid_argument("fixed_k_generate: N must have one count per time");
  if (!(step > 0.0)) step = diffusion::default_step(1.0);

  const double mu = mu_override >= 0.0 ? mu_override : alpha * beta / K;
  const int T1 = grid.num_times();

  JointSample out;
  out.system.grid = grid;
  out.Z = AllocationSeries(N);
  for (int k = 0; k < K; ++k) {
    FeatureTrack f;
    f.id = k;
    f.birth_interval = -1;
    f.x.assign(T1, 0.0);
    Rng rf = rng.substream("feature", static_cast<std::uint64_t>(k));
    f.x[0] = diffusion::stationary_sample(mu, beta, rf);
    for (int j = 0; j + 1 < T1; ++j)
      f.x[j + 1] = fwd(f.x[j], mu, beta, grid.interval(j), step, rf);
    out.Z.add_feature(f.id);
    for (int t = 0; t < T1; ++t)
      for (int i = 0; i < N[t]; ++i)
        if (rf.bernoulli(f.x[t])) out.Z.set(t, i, f.id, true);
    out.system.features.push_back(std::move(f));
  }
  return out;
}

}  // namespace wfibp::gen
