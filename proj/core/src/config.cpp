#include "wfibp/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "wfibp/diffusion.hpp"

namespace wfibp::io {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& origin, const std::string& what) {
  throw std::invalid_argument(origin + ": " + what);
}

std::pair<int, int> line_col(const std::string& text, std::size_t byte) {
  int line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

double need_positive(const json& j, const char* key, double fallback,
                     const std::string& origin) {
  if (!j.contains(key)) return fallback;
  const double v = j.at(key).get<double>();
  if (!(v > 0.0)) fail(origin, std::string("'") + key + "' must be > 0");
  return v;
}

}  // namespace

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str(), path);
}

RunConfig RunConfig::from_json_text(const std::string& text,
                                    const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_col(text, e.byte > 0 ? e.byte - 1 : 0);
    fail(origin, "line " + std::to_string(line) + ", column " +
                     std::to_string(col) + ": " + e.what());
  }

  RunConfig cfg;
  try {
    cfg.alpha = need_positive(j, "alpha", cfg.alpha, origin);
    cfg.beta = need_positive(j, "beta", cfg.beta, origin);

    if (!j.contains("grid")) fail(origin, "missing 'grid'");
    const json& g = j.at("grid");
    if (g.contains("times")) {
      cfg.grid_times = g.at("times").get<std::vector<double>>();
    } else if (g.contains("num_times") && g.contains("interval")) {
      const int nt = g.at("num_times").get<int>();
      const double dt = g.at("interval").get<double>();
      if (nt < 1) fail(origin, "'grid.num_times' must be >= 1");
      if (nt > 1 && !(dt > 0.0)) fail(origin, "'grid.interval' must be > 0");
      for (int t = 0; t < nt; ++t) cfg.grid_times.push_back(t * dt);
    } else {
      fail(origin, "'grid' needs either 'times' or 'num_times'+'interval'");
    }

    if (j.contains("step")) cfg.step = j.at("step").get<double>();
    if (j.contains("K")) cfg.K = j.at("K").get<int>();
    if (j.contains("fixed_k_mu") && !j.at("fixed_k_mu").is_null())
      cfg.fixed_k_mu = j.at("fixed_k_mu").get<double>();
    if (j.contains("particles")) cfg.particles = j.at("particles").get<int>();
    if (j.contains("iterations")) cfg.iterations = j.at("iterations").get<int>();
    if (j.contains("burn_in")) cfg.burn_in = j.at("burn_in").get<int>();
    if (j.contains("sample_thin")) cfg.sample_thin = j.at("sample_thin").get<int>();
    if (j.contains("init_features"))
      cfg.init_features = j.at("init_features").get<int>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("static_baseline"))
      cfg.static_baseline = j.at("static_baseline").get<bool>();
    if (j.contains("checkpoint_every"))
      cfg.checkpoint_every = j.at("checkpoint_every").get<int>();

    if (j.contains("N")) {
      const json& n = j.at("N");
      if (n.is_number()) {
        cfg.N.assign(cfg.grid_times.size(), n.get<int>());
      } else {
        cfg.N = n.get<std::vector<int>>();
      }
    }

    if (j.contains("likelihood")) {
      const json& l = j.at("likelihood");
      const std::string type = l.value("type", "lingauss");
      if (type == "lingauss") {
        cfg.likelihood.type = LikelihoodConfig::Type::kLinGauss;
        cfg.likelihood.sigma_x =
            need_positive(l, "sigma_x", cfg.likelihood.sigma_x, origin);
        cfg.likelihood.sigma_a =
            need_positive(l, "sigma_a", cfg.likelihood.sigma_a, origin);
      } else if (type == "topic") {
        cfg.likelihood.type = LikelihoodConfig::Type::kTopic;
        cfg.likelihood.eta = need_positive(l, "eta", cfg.likelihood.eta, origin);
        if (l.contains("gamma_hyper")) {
          const auto h = l.at("gamma_hyper").get<std::vector<double>>();
          if (h.size() != 2) fail(origin, "'likelihood.gamma_hyper' needs [a, b]");
          cfg.likelihood.gamma_hyper_a = h[0];
          cfg.likelihood.gamma_hyper_b = h[1];
        }
        cfg.likelihood.gamma_init =
            need_positive(l, "gamma_init", cfg.likelihood.gamma_init, origin);
      } else {
        fail(origin, "'likelihood.type' must be 'lingauss' or 'topic'");
      }
      if (l.contains("D")) cfg.likelihood.D = l.at("D").get<int>();
    }
  } catch (const json::exception& e) {
    fail(origin, e.what());
  }

  cfg.validate();
  return cfg;
}

void RunConfig::validate() const {
  const TimeGrid check(grid_times);  // throws on non-increasing times
  (void)check;
  if (!(alpha > 0.0) || !(beta > 0.0))
    throw std::invalid_argument("config: 'alpha' and 'beta' must be > 0");
  if (K < 0) throw std::invalid_argument("config: 'K' must be >= 0");
  if (particles < 2) throw std::invalid_argument("config: 'particles' must be >= 2");
  if (iterations < 0) throw std::invalid_argument("config: 'iterations' must be >= 0");
  if (burn_in < 0 || burn_in > iterations)
    throw std::invalid_argument("config: need 0 <= 'burn_in' <= 'iterations'");
  if (sample_thin < 1)
    throw std::invalid_argument("config: 'sample_thin' must be >= 1");
  if (init_features < 1)
    throw std::invalid_argument("config: 'init_features' must be >= 1");
  if (checkpoint_every < 1)
    throw std::invalid_argument("config: 'checkpoint_every' must be >= 1");
  if (static_baseline && K < 1)
    throw std::invalid_argument("config: 'static_baseline' requires fixed K >= 1");
  if (!N.empty() && N.size() != grid_times.size())
    throw std::invalid_argument("config: 'N' must have one count per grid time");
  for (int n : N)
    if (n < 1) throw std::invalid_argument("config: counts in 'N' must be >= 1");
  if (likelihood.D < 2)
    throw std::invalid_argument("config: 'likelihood.D' must be >= 2");
}

double RunConfig::resolved_step() const {
  if (step > 0.0) return step;
  const TimeGrid g(grid_times);
  if (g.num_intervals() == 0) return 1e-3;
  double shortest = g.interval(0);
  for (int j = 1; j < g.num_intervals(); ++j)
    shortest = std::min(shortest, g.interval(j));
  return diffusion::default_step(shortest);
}

mcmc::McmcConfig RunConfig::mcmc_config() const {
  mcmc::McmcConfig m;
  m.alpha = alpha;
  m.beta = beta;
  m.step = resolved_step();
  m.pg.particles = particles;
  m.iterations = iterations;
  m.burn_in = burn_in;
  m.sample_thin = sample_thin;
  m.init_features = init_features;
  m.static_baseline = static_baseline;
  m.fixed_k_mu = fixed_k_mu;
  return m;
}

std::string RunConfig::to_json() const {
  json j;
  j["alpha"] = alpha;
  j["beta"] = beta;
  j["grid"]["times"] = grid_times;
  j["step"] = resolved_step();
  j["K"] = K;
  if (fixed_k_mu >= 0.0) j["fixed_k_mu"] = fixed_k_mu;
  j["particles"] = particles;
  j["iterations"] = iterations;
  j["burn_in"] = burn_in;
  j["sample_thin"] = sample_thin;
  j["init_features"] = init_features;
  j["seed"] = seed;
  j["static_baseline"] = static_baseline;
  j["checkpoint_every"] = checkpoint_every;
  j["N"] = N;
  json l;
  l["D"] = likelihood.D;
  if (likelihood.type == LikelihoodConfig::Type::kLinGauss) {
    l["type"] = "lingauss";
    l["sigma_x"] = likelihood.sigma_x;
    l["sigma_a"] = likelihood.sigma_a;
  } else {
    l["type"] = "topic";
    l["eta"] = likelihood.eta;
    l["gamma_hyper"] = {likelihood.gamma_hyper_a, likelihood.gamma_hyper_b};
    l["gamma_init"] = likelihood.gamma_init;
  }
  j["likelihood"] = l;
  return j.dump(2);
}

}  // namespace wfibp::io
