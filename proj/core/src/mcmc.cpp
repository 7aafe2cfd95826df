#include "wfibp/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "wfibp/diffusion.hpp"

namespace wfibp::mcmc {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

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

/// log [ x^n (1-x)^(N-n) ] with the 0^0 = 1 convention.
double binom_logw(double x, int n, int N) {
  double lw = 0.0;
  if (n > 0) {
    if (x <= 0.0) return kNegInf;
    lw += n * std::log(x);
  }
  if (N - n > 0) {
    if (x >= 1.0) return kNegInf;
    lw += (N - n) * std::log1p(-x);
  }
  return lw;
}

/// log (1-x)^N; N = 0 contributes nothing even at x = 1.
double unseen_logw(double x, int N) {
  if (N == 0) return 0.0;
  if (x >= 1.0) return kNegInf;
  return N * std::log1p(-x);
}

/// Draw an index proportional to exp(logw); returns `fallback` when every
/// weight is zero (reference-only survival).
int draw_log_index(const std::vector<double>& logw, int fallback, Rng& rng) {
  double mx = kNegInf;
  for (double w : logw) mx = std::max(mx, w);
  if (mx == kNegInf) return fallback;
  std::vector<double> w(logw.size());
  for (std::size_t i = 0; i < logw.size(); ++i) w[i] = std::exp(logw[i] - mx);
  return rng.categorical(w);
}

}  // namespace

void PgConfig::validate() const {
  if (particles < 2)
    throw std::invalid_argument("PgConfig: need at least 2 particles");
}

void McmcConfig::validate() const {
  if (!(alpha > 0.0) || !(beta > 0.0))
    throw std::invalid_argument("McmcConfig: alpha, beta must be > 0");
  if (!(step > 0.0)) throw std::invalid_argument("McmcConfig: step must be > 0");
  if (iterations < 0 || burn_in < 0 || burn_in > iterations)
    throw std::invalid_argument("McmcConfig: need 0 <= burn_in <= iterations");
  if (sample_thin < 1)
    throw std::invalid_argument("McmcConfig: sample_thin must be >= 1");
  pg.validate();
}

double InferenceState::xstar(int t) const {
  double mn = 1.0;
  bool any = false;
  for (const auto& [k, path] : x) {
    if (Z.count(t, k) > 0) {
      mn = any ? std::min(mn, path[t]) : path[t];
      any = true;
    }
  }
  return any ? mn : 1.0;
}

double InferenceState::xstar_if(int t, FeatureId k, bool current, bool v) const {
  double mn = 1.0;
  bool any = false;
  for (const auto& [id, path] : x) {
    int n = Z.count(t, id);
    if (id == k) n += (v ? 1 : 0) - (current ? 1 : 0);
    if (n > 0) {
      mn = any ? std::min(mn, path[t]) : path[t];
      any = true;
    }
  }
  return any ? mn : 1.0;
}

std::vector<FeatureId> InferenceState::materialized() const {
  std::vector<FeatureId> ids;
  ids.reserve(x.size());
  for (const auto& [k, _] : x) ids.push_back(k);
  return ids;
}

std::vector<FeatureId> InferenceState::seen_features() const {
  std::vector<FeatureId> ids;
  for (const auto& [k, _] : x)
    if (Z.seen(k)) ids.push_back(k);
  return ids;
}

void InferenceState::add_feature(FeatureId id, std::vector<double> path) {
  if (static_cast<int>(path.size()) != num_times())
    throw std::invalid_argument("add_feature: path/grid mismatch");
  Z.add_feature(id);
  x.emplace(id, std::move(path));
  next_id = std::max(next_id, id + 1);
}

void InferenceState::remove_feature(FeatureId id) {
  Z.remove_feature(id);
  x.erase(id);
}

InferenceState make_initial_state(const TimeGrid& grid,
                                  const std::vector<int>& N,
                                  const McmcConfig& cfg, int K, Rng& rng,
                                  bool ensure_row_support) {
  grid.validate();
  if (static_cast<int>(N.size()) != grid.num_times())
    throw std::invalid_argument("make_initial_state: N/grid mismatch");
  InferenceState st;
  st.grid = grid;
  st.N = N;
  st.Z = AllocationSeries(N);
  st.slices.s.assign(grid.num_times(), 0.0);

  const int n_init = K >= 1 ? K : cfg.init_features;
  const double mu0 = K >= 1
                         ? (cfg.fixed_k_mu >= 0.0 ? cfg.fixed_k_mu
                                                  : cfg.alpha * cfg.beta / K)
                         : 1.0;
  Rng r = rng.substream("init");
  for (int k = 0; k < n_init; ++k) {
    const double mass = r.beta(std::max(mu0, 1e-12), cfg.beta);
    std::vector<double> path(grid.num_times(),
                             std::clamp(mass, 1e-9, 1.0 - 1e-9));
    st.add_feature(st.next_id, std::move(path));
  }
  // Prior-draw allocations. A dense deterministic start (such as all-active)
  // creates a grand-mean column that single-entry Gibbs cannot dismantle.
  const auto ids = st.materialized();
  for (int t = 0; t < grid.num_times(); ++t)
    for (int i = 0; i < N[t]; ++i) {
      bool any = false;
      for (FeatureId k : ids)
        if (r.bernoulli(st.x.at(k)[t])) {
          st.Z.set(t, i, k, true);
          any = true;
        }
      if (ensure_row_support && !any && !ids.empty()) {
        const FeatureId k =
            ids[static_cast<std::size_t>(r.uniform() * ids.size()) % ids.size()];
        st.Z.set(t, i, k, true);
      }
    }
  return st;
}

double sample_slice(const InferenceState& state, int t, Rng& rng) {
  return rng.uniform_pos() * state.xstar(t);
}

bool gibbs_update_entry(InferenceState& state, int t, int i, FeatureId k,
                        LikelihoodHook& hook, Rng& rng, bool fixed_k) {
  const double xk = state.x.at(k)[t];
  const bool cur = state.Z.get(t, i, k);
  const double l1 = hook.entry_loglik(t, i, k, true, rng);
  const double l0 = hook.entry_loglik(t, i, k, false, rng);

  double la = (xk > 0.0 ? std::log(xk) : kNegInf) + l1;
  double lb = (xk < 1.0 ? std::log1p(-xk) : kNegInf) + l0;
  if (!fixed_k) {
    la -= std::log(state.xstar_if(t, k, cur, true));
    lb -= std::log(state.xstar_if(t, k, cur, false));
  }

  bool v;
  if (la == kNegInf && lb == kNegInf) {
    v = cur;  // degenerate entry; keep state
  } else if (la == kNegInf) {
    v = false;
  } else if (lb == kNegInf) {
    v = true;
  } else {
    const double p1 = 1.0 / (1.0 + std::exp(lb - la));
    v = rng.uniform() < p1;
  }
  if (v != cur) state.Z.set(t, i, k, v);
  hook.commit_entry(t, i, k, v);
  return v;
}

std::vector<double> pg_update_seen(const std::vector<double>& reference,
                                   const PgCounts& counts, double mu,
                                   double beta, const TimeGrid& grid,
                                   double step, const PgConfig& cfg, Rng& rng) {
  cfg.validate();
  const int T1 = grid.num_times();
  if (static_cast<int>(reference.size()) != T1 ||
      static_cast<int>(counts.n.size()) != T1 ||
      static_cast<int>(counts.N.size()) != T1)
    throw std::invalid_argument("pg_update_seen: grid mismatch");
  const double a0 = mu + counts.n[0];
  const double b0 = beta + counts.N[0] - counts.n[0];
  if (!(a0 > 0.0))
    throw std::invalid_argument("pg_update_seen: feature unseen at t_0 with mu = 0");

  const int M = cfg.particles;
  std::vector<std::vector<double>> paths(M, std::vector<double>(T1, 0.0));
  paths[M - 1] = reference;
  for (int m = 0; m < M - 1; ++m) paths[m][0] = rng.beta(a0, b0);
  if (T1 == 1) {
    // The initial draw is already the exact posterior at t_0.
    const int r = static_cast<int>(rng.uniform() * M) % M;
    return paths[r];
  }

  std::vector<double> logw(M, 0.0);
  for (int j = 1; j < T1; ++j) {
    for (int m = 0; m < M - 1; ++m)
      paths[m][j] = fwd(paths[m][j - 1], mu, beta, grid.interval(j - 1), step, rng);
    for (int m = 0; m < M; ++m)
      logw[m] = binom_logw(paths[m][j], counts.n[j], counts.N[j]);
    if (j + 1 < T1) {
      // Multinomial resampling; the reference slot is kept intact and the
      // weights reset to uniform afterwards.
      double mx = kNegInf;
      for (double w : logw) mx = std::max(mx, w);
      std::vector<std::vector<double>> snapshot = paths;
      if (mx == kNegInf) {
        for (int m = 0; m < M - 1; ++m) paths[m] = snapshot[M - 1];
      } else {
        std::vector<double> w(M);
        for (int m = 0; m < M; ++m) w[m] = std::exp(logw[m] - mx);
        for (int m = 0; m < M - 1; ++m) paths[m] = snapshot[rng.categorical(w)];
      }
    } else {
      return paths[draw_log_index(logw, M - 1, rng)];
    }
  }
  return paths[M - 1];  // unreachable for T1 > 1
}

std::vector<double> pg_update_first_seen(const std::vector<double>& reference,
                                         int first_seen,
                                         const PgCounts& counts, double beta,
                                         const TimeGrid& grid, double step,
                                         const PgConfig& cfg, Rng& rng) {
  if (first_seen == 0)
    return pg_update_seen(reference, counts, 0.0, beta, grid, step, cfg, rng);
  cfg.validate();
  const int T1 = grid.num_times();
  if (first_seen < 0 || first_seen >= T1)
    throw std::invalid_argument("pg_update_first_seen: bad first_seen index");
  for (int t = 0; t < first_seen; ++t)
    if (counts.n[t] != 0)
      throw std::invalid_argument(
          "pg_update_first_seen: nonzero count before first_seen");
  if (counts.n[first_seen] < 1)
    throw std::invalid_argument("pg_update_first_seen: n at first_seen must be >= 1");

  const int M = cfg.particles;
  const int jf = first_seen;
  std::vector<std::vector<double>> paths(M, std::vector<double>(T1, 0.0));
  paths[M - 1] = reference;
  for (int m = 0; m < M - 1; ++m)
    paths[m][jf] = rng.beta(static_cast<double>(counts.n[jf]),
                            beta + counts.N[jf] - counts.n[jf]);

  // Backward sweep, collecting the unseen-ness weights (1-x)^(N_t).
  std::vector<double> backlog(M, 0.0);
  for (int j = jf - 1; j >= 0; --j) {
    for (int m = 0; m < M - 1; ++m)
      paths[m][j] = bwd(paths[m][j + 1], beta, grid.interval(j), step, rng);
    for (int m = 0; m < M; ++m)
      backlog[m] += unseen_logw(paths[m][j], counts.N[j]);
  }

  if (jf == T1 - 1) return paths[draw_log_index(backlog, M - 1, rng)];

  std::vector<double> logw(M, 0.0);
  for (int j = jf + 1; j < T1; ++j) {
    for (int m = 0; m < M - 1; ++m)
      paths[m][j] = fwd(paths[m][j - 1], 0.0, beta, grid.interval(j - 1), step, rng);
    for (int m = 0; m < M; ++m) {
      logw[m] = binom_logw(paths[m][j], counts.n[j], counts.N[j]);
      if (j == jf + 1) logw[m] += backlog[m];
    }
    if (j + 1 < T1) {
      double mx = kNegInf;
      for (double w : logw) mx = std::max(mx, w);
      std::vector<std::vector<double>> snapshot = paths;
      if (mx == kNegInf) {
        for (int m = 0; m < M - 1; ++m) paths[m] = snapshot[M - 1];
      } else {
        std::vector<double> w(M);
        for (int m = 0; m < M; ++m) w[m] = std::exp(logw[m] - mx);
        for (int m = 0; m < M - 1; ++m) paths[m] = snapshot[rng.categorical(w)];
      }
    } else {
      return paths[draw_log_index(logw, M - 1, rng)];
    }
  }
  return paths[M - 1];  // unreachable
}

std::vector<std::vector<double>> thin_unseen_alive(
    const SliceVars& slices, const std::vector<int>& N,
    const measures::PRFParams& params, const TimeGrid& grid, double step,
    Rng& rng) {
  const int T1 = grid.num_times();
  if (static_cast<int>(slices.s.size()) != T1 ||
      static_cast<int>(N.size()) != T1)
    throw std::invalid_argument("thin_unseen_alive: grid mismatch");
  std::vector<std::vector<double>> out;
  const double s0 = slices.s[0];
  if (!(s0 > 0.0 && s0 < 1.0)) return out;
  auto atoms = measures::sample_truncated_process(params.alpha,
                                                  params.beta + N[0], s0, rng);
  for (const auto& atom : atoms.atoms) {
    std::vector<double> path(T1, 0.0);
    path[0] = atom.mass;
    bool alive = true;
    for (int j = 1; j < T1; ++j) {
      path[j] = fwd(path[j - 1], 0.0, params.beta, grid.interval(j - 1), step, rng);
      const double la = unseen_logw(path[j], N[j]);
      if (la == kNegInf || std::log(rng.uniform_pos()) >= la) {
        alive = false;
        break;
      }
    }
    if (alive) out.push_back(std::move(path));
  }
  return out;
}

std::vector<std::vector<double>> thin_unseen_born(
    int interval, const SliceVars& slices, const std::vector<int>& N,
    const measures::PRFParams& params, const TimeGrid& grid, double step,
    Rng& rng) {
  const int T1 = grid.num_times();
  if (interval < 0 || interval >= grid.num_intervals())
    throw std::invalid_argument("thin_unseen_born: bad interval");
  if (static_cast<int>(slices.s.size()) != T1 ||
      static_cast<int>(N.size()) != T1)
    throw std::invalid_argument("thin_unseen_born: grid mismatch");

  std::vector<std::vector<double>> out;
  const int born = interval + 1;  // first time the atom can exceed the slice
  const double sb = slices.s[born];
  if (!(sb > 0.0 && sb < 1.0)) return out;
  auto atoms = measures::sample_truncated_process(
      params.alpha, params.beta + N[born], sb, rng);
  for (const auto& atom : atoms.atoms) {
    std::vector<double> path(T1, 0.0);
    path[born] = atom.mass;
    bool alive = true;
    // Backward: reject outright above an earlier slice (those features belong
    // to an earlier stage), otherwise thin by the unseen-ness probability.
    for (int b = born - 1; b >= 0; --b) {
      path[b] = bwd(path[b + 1], params.beta, grid.interval(b), step, rng);
      if (path[b] >= slices.s[b]) {
        alive = false;
        break;
      }
      const double la = unseen_logw(path[b], N[b]);
      if (la == kNegInf || std::log(rng.uniform_pos()) >= la) {
        alive = false;
        break;
      }
    }
    if (!alive) continue;
    for (int j = born + 1; j < T1; ++j) {
      path[j] = fwd(path[j - 1], 0.0, params.beta, grid.interval(j - 1), step, rng);
      const double la = unseen_logw(path[j], N[j]);
      if (la == kNegInf || std::log(rng.uniform_pos()) >= la) {
        alive = false;
        break;
      }
    }
    if (alive) out.push_back(std::move(path));
  }
  return out;
}

namespace {

void gibbs_sweep(InferenceState& st, LikelihoodHook& hook, Rng& rng,
                 bool fixed_k) {
  auto ids = st.materialized();
  // Feature ids are correlated with seen/unseen status (unseen ones are
  // freshly thinned), and a scan order correlated with the state biases the
  // birth/death balance even though each entry draw is an exact conditional.
  // A fresh random permutation per sweep removes the correlation.
  for (std::size_t i = ids.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.uniform() * i);
    std::swap(ids[i - 1], ids[j]);
  }
  for (int t = 0; t < st.num_times(); ++t) {
    const double s_t = fixed_k ? 0.0 : st.slices.s[t];
    for (int i = 0; i < st.N[t]; ++i)
      for (FeatureId k : ids)
        if (fixed_k || st.x.at(k)[t] >= s_t)
          gibbs_update_entry(st, t, i, k, hook, rng, fixed_k);
  }
}

void prune_unseen(InferenceState& st, LikelihoodHook& hook) {
  for (FeatureId k : st.materialized()) {
    if (!st.Z.seen(k)) {
      st.remove_feature(k);
      hook.on_feature_removed(k);
    }
  }
}

void emit(const InferenceState& st, LikelihoodHook& hook, int iter,
          const McmcConfig& cfg, const SampleSink& sink) {
  if (!sink) return;
  if (iter < cfg.burn_in) return;
  if ((iter - cfg.burn_in) % cfg.sample_thin != 0) return;
  Sample smp;
  smp.iteration = iter;
  smp.state = &st;
  smp.seen = st.seen_features();
  smp.scalars = hook.scalars();
  sink(smp);
}

}  // namespace

void run_mcmc(InferenceState& state, LikelihoodHook& hook,
              const McmcConfig& cfg, Rng& rng, const SampleSink& sink,
              int start_iteration) {
  cfg.validate();
  if (static_cast<int>(state.N.size()) != state.num_times())
    throw std::invalid_argument("run_mcmc: state N/grid mismatch");
  const measures::PRFParams prf{cfg.alpha, cfg.beta};
  const int T1 = state.num_times();

  {
    Rng r0 = rng.substream("reset");
    hook.reset(&state, r0);
  }
  prune_unseen(state, hook);

  for (int iter = start_iteration; iter < cfg.iterations; ++iter) {
    Rng rit = rng.substream("iter", static_cast<std::uint64_t>(iter));

    // S | Z, X.
    Rng rs = rit.substream("slice");
    for (int t = 0; t < T1; ++t) state.slices.s[t] = sample_slice(state, t, rs);

    // X_unseen | S via thinning; the previous unseen set was pruned.
    Rng rth = rit.substream("thin");
    for (auto& path : thin_unseen_alive(state.slices, state.N, prf, state.grid,
                                        cfg.step, rth)) {
      const FeatureId id = state.next_id;
      state.add_feature(id, std::move(path));
      hook.on_feature_added(id);
    }
    for (int j = 0; j < state.grid.num_intervals(); ++j) {
      Rng rj = rit.substream("thin_born", static_cast<std::uint64_t>(j));
      for (auto& path : thin_unseen_born(j, state.slices, state.N, prf,
                                         state.grid, cfg.step, rj)) {
        const FeatureId id = state.next_id;
        state.add_feature(id, std::move(path));
        hook.on_feature_added(id);
      }
    }

    // Z | X, S, D.
    Rng rz = rit.substream("gibbs");
    gibbs_sweep(state, hook, rz, /*fixed_k=*/false);
    prune_unseen(state, hook);

    // rho | X, Z.
    Rng rh = rit.substream("hook");
    hook.update_params(rh);

    // X_seen | Z via Particle Gibbs.
    for (FeatureId k : state.seen_features()) {
      Rng rk = rit.substream("pg", static_cast<std::uint64_t>(k));
      PgCounts counts;
      counts.n.resize(T1);
      counts.N = state.N;
      for (int t = 0; t < T1; ++t) counts.n[t] = state.Z.count(t, k);
      const int jf = state.Z.first_seen_time(k);
      auto& path = state.x.at(k);
      if (jf == 0)
        path = pg_update_seen(path, counts, 0.0, cfg.beta, state.grid, cfg.step,
                              cfg.pg, rk);
      else
        path = pg_update_first_seen(path, jf, counts, cfg.beta, state.grid,
                                    cfg.step, cfg.pg, rk);
    }

    emit(state, hook, iter, cfg, sink);
  }
}

void run_fixed_k(InferenceState& state, LikelihoodHook& hook, int K,
                 const McmcConfig& cfg, Rng& rng, const SampleSink& sink,
                 int start_iteration) {
  cfg.validate();
  if (K < 1) throw std::invalid_argument("run_fixed_k: K must be >= 1");
  if (state.Z.num_features() != K)
    throw std::invalid_argument("run_fixed_k: state must hold exactly K features");
  const double mu_k =
      cfg.fixed_k_mu >= 0.0 ? cfg.fixed_k_mu : cfg.alpha * cfg.beta / K;
  const int T1 = state.num_times();

  {
    Rng r0 = rng.substream("reset");
    hook.reset(&state, r0);
  }

  for (int iter = start_iteration; iter < cfg.iterations; ++iter) {
    Rng rit = rng.substream("iter", static_cast<std::uint64_t>(iter));

    // Z | X, D.
    Rng rz = rit.substream("gibbs");
    gibbs_sweep(state, hook, rz, /*fixed_k=*/true);

    // rho | X, Z.
    Rng rh = rit.substream("hook");
    hook.update_params(rh);

    // X | Z.
    for (FeatureId k : state.materialized()) {
      Rng rk = rit.substream("pg", static_cast<std::uint64_t>(k));
      PgCounts counts;
      counts.n.resize(T1);
      counts.N = state.N;
      for (int t = 0; t < T1; ++t) counts.n[t] = state.Z.count(t, k);
      auto& path = state.x.at(k);
      if (cfg.static_baseline) {
        // Frozen probability: conjugate pooled Beta redraw.
        int n_tot = 0, N_tot = 0;
        for (int t = 0; t < T1; ++t) {
          n_tot += counts.n[t];
          N_tot += counts.N[t];
        }
        const double v = rk.beta(mu_k + n_tot, cfg.beta + N_tot - n_tot);
        std::fill(path.begin(), path.end(), v);
      } else {
        path = pg_update_seen(path, counts, mu_k, cfg.beta, state.grid,
                              cfg.step, cfg.pg, rk);
      }
    }

    emit(state, hook, iter, cfg, sink);
  }
}

}  // namespace wfibp::mcmc
