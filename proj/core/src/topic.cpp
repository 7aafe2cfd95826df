#include "wfibp/topic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace wfibp::topic {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLog2 = 0.69314718055994530942;

std::vector<double> dirichlet(Rng& rng, int dim, double conc) {
  std::vector<double> v(dim);
  double total = 0.0;
  for (double& x : v) {
    x = rng.gamma(conc, 1.0);
    total += x;
  }
  if (total <= 0.0) {
    // All components underflowed; fall back on a single unit mass.
    v.assign(dim, 0.0);
    v[static_cast<int>(rng.uniform() * dim) % dim] = 1.0;
    return v;
  }
  for (double& x : v) x /= total;
  return v;
}

/// NB(r, 1/2) via the Poisson-Gamma mixture; mean r.
long neg_binomial_half(double r, Rng& rng) {
  if (!(r > 0.0)) return 0;
  return rng.poisson(rng.gamma(r, 1.0));
}

}  // namespace

std::vector<int> Corpus::counts_per_time() const {
  std::vector<int> n;
  n.reserve(docs_by_time.size());
  for (const auto& ds : docs_by_time) n.push_back(static_cast<int>(ds.size()));
  return n;
}

long Corpus::total_words() const {
  long w = 0;
  for (const auto& ds : docs_by_time)
    for (const auto& d : ds) w += static_cast<long>(d.words.size());
  return w;
}

void Corpus::validate() const {
  if (D < 2) throw std::invalid_argument("Corpus: dictionary needs D >= 2");
  for (const auto& ds : docs_by_time)
    for (const auto& d : ds)
      for (int w : d.words)
        if (w < 0 || w >= D)
          throw std::invalid_argument("Corpus: word id outside dictionary");
}

std::pair<Corpus, CorpusTruth> generate_corpus(int K, const TimeGrid& grid,
                                               const std::vector<int>& N,
                                               int D, double eta, double gamma,
                                               const TopicGenParams& params,
                                               Rng& rng) {
  if (D < 2) throw std::invalid_argument("generate_corpus: D must be >= 2");
  if (!(eta > 0.0)) throw std::invalid_argument("generate_corpus: eta must be > 0");
  if (!(gamma > 0.0))
    throw std::invalid_argument("generate_corpus: gamma must be > 0");

  CorpusTruth truth;
  Rng rz = rng.substream("allocation");
  if (K >= 1) {
    truth.joint = gen::fixed_k_generate(params.alpha, params.beta, K, grid, N,
                                        params.step, rz, params.mu_override);
  } else {
    measures::PRFParams prf{params.alpha, params.beta};
    truth.joint = gen::simulate_joint(prf, grid, N, params.step, rz);
  }
  const AllocationSeries& Z = truth.joint.Z;
  const int T1 = grid.num_times();

  Rng rp = rng.substream("params");
  for (FeatureId k : Z.feature_ids()) {
    truth.rho[k] = dirichlet(rp, D, eta);
    for (int t = 0; t < T1; ++t)
      truth.phi[{k, t}] = rp.gamma(gamma, 1.0);
  }

  Corpus corpus;
  corpus.D = D;
  corpus.docs_by_time.assign(T1, {});
  truth.assignments.assign(T1, {});
  Rng rw = rng.substream("words");
  for (int t = 0; t < T1; ++t) {
    for (int i = 0; i < N[t]; ++i) {
      Document doc;
      doc.doc_id = i;
      std::vector<FeatureId> active;
      std::vector<double> conc;
      for (FeatureId k : Z.feature_ids())
        if (Z.get(t, i, k)) {
          active.push_back(k);
          conc.push_back(truth.phi.at({k, t}));
        }
      std::vector<FeatureId> assign;
      if (!active.empty()) {
        const double r = std::accumulate(conc.begin(), conc.end(), 0.0);
        const long W = neg_binomial_half(r, rw);
        // theta ~ Dirichlet over the active components.
        std::vector<double> theta(active.size());
        double tot = 0.0;
        for (std::size_t c = 0; c < active.size(); ++c) {
          theta[c] = rw.gamma(conc[c], 1.0);
          tot += theta[c];
        }
        if (tot <= 0.0) std::fill(theta.begin(), theta.end(), 1.0);
        for (long l = 0; l < W; ++l) {
          const int c = rw.categorical(theta);
          const FeatureId k = active[c];
          assign.push_back(k);
          doc.words.push_back(rw.categorical(truth.rho.at(k)));
        }
      }
      truth.assignments[t].push_back(std::move(assign));
      corpus.docs_by_time[t].push_back(std::move(doc));
    }
  }

  corpus.vocab.reserve(D);
  corpus.vocab_counts.assign(D, 0);
  for (int w = 0; w < D; ++w) corpus.vocab.push_back("w" + std::to_string(w));
  for (const auto& ds : corpus.docs_by_time)
    for (const auto& d : ds)
      for (int w : d.words) ++corpus.vocab_counts[w];
  return {std::move(corpus), std::move(truth)};
}

TopicState::TopicState(const Corpus& corpus, double eta, double gamma_init,
                       double gamma_hyper_a, double gamma_hyper_b)
    : D_(corpus.D),
      eta_(eta),
      gamma_(gamma_init),
      ga_(gamma_hyper_a),
      gb_(gamma_hyper_b) {
  corpus.validate();
  if (!(eta > 0.0) || !(gamma_init > 0.0) || !(gamma_hyper_a > 0.0) ||
      !(gamma_hyper_b > 0.0))
    throw std::invalid_argument("TopicState: hyperparameters must be > 0");
  docs_.resize(corpus.docs_by_time.size());
  for (std::size_t t = 0; t < docs_.size(); ++t) {
    docs_[t].resize(corpus.docs_by_time[t].size());
    for (std::size_t i = 0; i < docs_[t].size(); ++i) {
      docs_[t][i].words = corpus.docs_by_time[t][i].words;
      docs_[t][i].assign.assign(docs_[t][i].words.size(), -1);
    }
  }
}

void TopicState::set_assignment(int t, int i, int l, FeatureId k) {
  Doc& doc = docs_[t][i];
  const FeatureId old = doc.assign[l];
  const int w = doc.words[l];
  if (old == k) return;
  if (old >= 0) {
    --doc.nk[old];
    if (doc.nk[old] == 0) doc.nk.erase(old);
    --nw_[old][w];
    --nk_[old];
  }
  if (k >= 0) {
    ++doc.nk[k];
    auto it = nw_.find(k);
    if (it == nw_.end()) it = nw_.emplace(k, std::vector<int>(D_, 0)).first;
    ++it->second[w];
    ++nk_[k];
  }
  doc.assign[l] = k;
}

int TopicState::doc_topic_count(int t, int i, FeatureId k) const {
  const auto& nk = docs_[t][i].nk;
  auto it = nk.find(k);
  return it == nk.end() ? 0 : it->second;
}

long TopicState::topic_count(FeatureId k) const {
  auto it = nk_.find(k);
  return it == nk_.end() ? 0 : it->second;
}

int TopicState::word_topic_count(FeatureId k, int w) const {
  auto it = nw_.find(k);
  return it == nw_.end() ? 0 : it->second[w];
}

void TopicState::drop_topic(FeatureId k) {
  if (topic_count(k) != 0)
    throw std::logic_error("drop_topic: topic still has assignments");
  nw_.erase(k);
  nk_.erase(k);
  for (auto it = phi_.begin(); it != phi_.end();)
    it = it->first.first == k ? phi_.erase(it) : std::next(it);
}

bool TopicState::check_counts() const {
  std::unordered_map<FeatureId, std::vector<int>> nw;
  std::unordered_map<FeatureId, long> nk;
  for (const auto& ds : docs_) {
    for (const auto& d : ds) {
      std::unordered_map<FeatureId, int> dn;
      for (std::size_t l = 0; l < d.words.size(); ++l) {
        const FeatureId k = d.assign[l];
        if (k < 0) return false;
        auto it = nw.find(k);
        if (it == nw.end()) it = nw.emplace(k, std::vector<int>(D_, 0)).first;
        ++it->second[d.words[l]];
        ++nk[k];
        ++dn[k];
      }
      for (const auto& [k, c] : d.nk)
        if (dn[k] != c) return false;
      for (const auto& [k, c] : dn)
        if (c != 0 && (d.nk.count(k) == 0 || d.nk.at(k) != c)) return false;
    }
  }
  for (const auto& [k, c] : nk)
    if (topic_count(k) != c) return false;
  for (const auto& [k, c] : nk_)
    if (c != 0 && nk.count(k) == 0) return false;
  for (const auto& [k, v] : nw)
    for (int w = 0; w < D_; ++w)
      if (word_topic_count(k, w) != v[w]) return false;
  return true;
}

FeatureId sample_assignment(TopicState& state, const AllocationSeries& Z,
                            int t, int i, int l, Rng& rng) {
  const FeatureId old = state.assignment(t, i, l);
  const int w = state.word(t, i, l);
  if (old >= 0) state.set_assignment(t, i, l, -1);

  std::vector<FeatureId> active;
  std::vector<double> weight;
  const double d_eta = state.dictionary_size() * state.eta();
  for (FeatureId k : Z.feature_ids()) {
    if (!Z.get(t, i, k)) continue;
    const double word_part = (state.word_topic_count(k, w) + state.eta()) /
                             (state.topic_count(k) + d_eta);
    const double doc_part = state.doc_topic_count(t, i, k) + state.phi(k, t);
    active.push_back(k);
    weight.push_back(word_part * doc_part);
  }
  if (active.empty())
    throw std::runtime_error("sample_assignment: document has no active topic");
  const FeatureId k = active[rng.categorical(weight)];
  state.set_assignment(t, i, l, k);
  return k;
}

double phi_log_target(const TopicState& state, const AllocationSeries& Z,
                      FeatureId k, int t, double phi) {
  if (!(phi > 0.0)) return kNegInf;
  const double g = state.gamma();
  double lp = (g - 1.0) * std::log(phi) - phi - std::lgamma(g);
  for (int i = 0; i < Z.rows_at(t); ++i) {
    if (!Z.get(t, i, k)) continue;
    const int n = state.doc_topic_count(t, i, k);
    lp += std::lgamma(phi + n) - std::lgamma(phi) - std::lgamma(n + 1.0) -
          (phi + n) * kLog2;
  }
  return lp;
}

bool mh_update_phi(TopicState& state, const AllocationSeries& Z, FeatureId k,
                   int t, Rng& rng, double proposal_sd) {
  const double cur = state.phi(k, t);
  const double prop = cur * std::exp(proposal_sd * rng.normal());
  const double log_acc = phi_log_target(state, Z, k, t, prop) -
                         phi_log_target(state, Z, k, t, cur) +
                         std::log(prop) - std::log(cur);  // Jacobian
  if (std::log(rng.uniform_pos()) < log_acc) {
    state.set_phi(k, t, prop);
    return true;
  }
  return false;
}

bool mh_update_gamma(TopicState& state, Rng& rng, double proposal_sd) {
  auto log_target = [&state](double g) {
    if (!(g > 0.0)) return kNegInf;
    double lp = (state.gamma_hyper_a() - 1.0) * std::log(g) -
                state.gamma_hyper_b() * g;
    for (const auto& [kt, phi] : state.all_phi())
      lp += (g - 1.0) * std::log(phi) - std::lgamma(g);
    return lp;
  };
  const double cur = state.gamma();
  const double prop = cur * std::exp(proposal_sd * rng.normal());
  const double log_acc =
      log_target(prop) - log_target(cur) + std::log(prop) - std::log(cur);
  if (std::log(rng.uniform_pos()) < log_acc) {
    state.set_gamma(prop);
    return true;
  }
  return false;
}

std::map<FeatureId, std::vector<double>> estimate_rho(
    const TopicState& state, const std::vector<FeatureId>& topics) {
  std::map<FeatureId, std::vector<double>> rho;
  const int D = state.dictionary_size();
  for (FeatureId k : topics) {
    std::vector<double> row(D);
    const double denom = state.topic_count(k) + D * state.eta();
    for (int w = 0; w < D; ++w)
      row[w] = (state.word_topic_count(k, w) + state.eta()) / denom;
    rho[k] = std::move(row);
  }
  return rho;
}

std::map<FeatureId, double> estimate_theta(const TopicState& state,
                                           const AllocationSeries& Z, int t,
                                           int i,
                                           const std::vector<FeatureId>& topics) {
  std::map<FeatureId, double> theta;
  double denom = 0.0;
  int active = 0;
  for (FeatureId k : topics) {
    if (!Z.get(t, i, k)) {
      theta[k] = 0.0;
      continue;
    }
    ++active;
    const double v = state.doc_topic_count(t, i, k) + state.phi(k, t);
    theta[k] = v;
    denom += v;
  }
  if (denom <= 0.0) {
    // Degenerate document: uniform over its active topics.
    for (auto& [k, v] : theta)
      if (active > 0 && Z.get(t, i, k)) v = 1.0 / active;
    return theta;
  }
  for (auto& [k, v] : theta) v /= denom;
  return theta;
}

PerplexityAccumulator::PerplexityAccumulator(std::vector<HeldoutWord> words)
    : words_(std::move(words)), prob_sums_(words_.size(), 0.0) {}

void PerplexityAccumulator::add_sample(
    const std::function<double(int, int, int)>& prob) {
  for (std::size_t j = 0; j < words_.size(); ++j)
    prob_sums_[j] += prob(words_[j].t, words_[j].doc, words_[j].word);
  ++samples_;
}

double PerplexityAccumulator::perplexity() const {
  if (samples_ < 1) throw std::logic_error("perplexity: no samples");
  if (words_.empty()) throw std::invalid_argument("perplexity: empty test set");
  double log_sum = 0.0;
  for (double s : prob_sums_) {
    const double p = s / samples_;
    log_sum += std::log(p);  // p = 0 stays -inf; not masked
  }
  return std::exp(-log_sum / static_cast<double>(words_.size()));
}

TopicHook::TopicHook(const Corpus& corpus, double eta, double gamma_init,
                     double gamma_hyper_a, double gamma_hyper_b)
    : ts_(corpus, eta, gamma_init, gamma_hyper_a, gamma_hyper_b) {}

void TopicHook::reset(const mcmc::InferenceState* state, Rng& rng) {
  st_ = state;
  if (ts_.num_times() != st_->num_times())
    throw std::invalid_argument("TopicHook: corpus/grid time mismatch");
  for (int t = 0; t < ts_.num_times(); ++t)
    if (ts_.num_docs(t) != st_->N[t])
      throw std::invalid_argument("TopicHook: corpus/Z document mismatch");

  // phi exists exactly for the active columns.
  for (FeatureId k : st_->Z.feature_ids())
    for (int t = 0; t < ts_.num_times(); ++t) {
      const bool active = st_->Z.count(t, k) > 0;
      if (active && !ts_.has_phi(k, t))
        ts_.set_phi(k, t, rng.gamma(ts_.gamma(), 1.0));
      if (!active && ts_.has_phi(k, t)) ts_.erase_phi(k, t);
    }

  // Initialize only unassigned (or stale) slots, uniformly over the
  // document's active topics; valid existing assignments are kept so that
  // resumed and successive-conditional chains stay on their trajectory.
  for (int t = 0; t < ts_.num_times(); ++t)
    for (int i = 0; i < ts_.num_docs(t); ++i) {
      std::vector<FeatureId> active;
      for (FeatureId k : st_->Z.feature_ids())
        if (st_->Z.get(t, i, k)) active.push_back(k);
      for (int l = 0; l < ts_.num_words(t, i); ++l) {
        const FeatureId cur = ts_.assignment(t, i, l);
        if (cur >= 0 && st_->Z.has_feature(cur) && st_->Z.get(t, i, cur))
          continue;
        if (active.empty())
          throw std::runtime_error(
              "TopicHook: document with words but no active topic");
        const int c = static_cast<int>(rng.uniform() * active.size()) %
                      static_cast<int>(active.size());
        ts_.set_assignment(t, i, l, active[c]);
      }
    }
}

double TopicHook::entry_loglik(int t, int i, FeatureId k, bool v, Rng& rng) {
  const int n = ts_.doc_topic_count(t, i, k);
  if (!v) return n > 0 ? kNegInf : 0.0;
  if (n > 0) return 0.0;
  double phi;
  if (ts_.has_phi(k, t)) {
    phi = ts_.phi(k, t);
  } else {
    // Activating an inactive column jointly proposes phi_kt from its prior.
    if (pending_k_ != k || pending_t_ != t) {
      pending_phi_ = rng.gamma(ts_.gamma(), 1.0);
      pending_k_ = k;
      pending_t_ = t;
    }
    phi = pending_phi_;
  }
  return -phi * kLog2;  // NB(0; phi, 1/2) = 2^-phi
}

void TopicHook::commit_entry(int t, int i, FeatureId k, bool v) {
  (void)i;
  if (v) {
    if (!ts_.has_phi(k, t)) {
      const double phi = (pending_k_ == k && pending_t_ == t)
                             ? pending_phi_
                             : ts_.gamma();  // defensive; cannot normally happen
      ts_.set_phi(k, t, phi);
    }
  } else if (st_->Z.count(t, k) == 0 && ts_.has_phi(k, t)) {
    ts_.erase_phi(k, t);
  }
  pending_k_ = -1;
  pending_t_ = -1;
}

void TopicHook::on_feature_added(FeatureId) {}

void TopicHook::on_feature_removed(FeatureId k) { ts_.drop_topic(k); }

void TopicHook::update_params(Rng& rng) {
  // a | Z, phi, w.
  Rng ra = rng.substream("assign");
  for (int t = 0; t < ts_.num_times(); ++t)
    for (int i = 0; i < ts_.num_docs(t); ++i)
      for (int l = 0; l < ts_.num_words(t, i); ++l)
        sample_assignment(ts_, st_->Z, t, i, l, ra);
  // phi | a, Z and gamma | phi.
  Rng rp = rng.substream("phi");
  std::vector<std::pair<FeatureId, int>> keys;
  keys.reserve(ts_.all_phi().size());
  for (const auto& [kt, v] : ts_.all_phi()) keys.push_back(kt);
  for (const auto& [k, t] : keys) mh_update_phi(ts_, st_->Z, k, t, rp);
  mh_update_gamma(ts_, rp);
}

std::vector<std::pair<std::string, double>> TopicHook::scalars() const {
  long words = 0;
  for (int t = 0; t < ts_.num_times(); ++t)
    for (int i = 0; i < ts_.num_docs(t); ++i) words += ts_.num_words(t, i);
  return {{"gamma", ts_.gamma()},
          {"live_phi", static_cast<double>(ts_.all_phi().size())},
          {"total_words", static_cast<double>(words)}};
}

double TopicHook::predict(int t, int i, int w) const {
  const auto topics = st_->Z.feature_ids();
  const auto theta = estimate_theta(ts_, st_->Z, t, i, topics);
  const double d_eta = ts_.dictionary_size() * ts_.eta();
  double p = 0.0;
  for (FeatureId k : topics) {
    const auto it = theta.find(k);
    if (it == theta.end() || it->second == 0.0) continue;
    const double rho =
        (ts_.word_topic_count(k, w) + ts_.eta()) / (ts_.topic_count(k) + d_eta);
    p += it->second * rho;
  }
  return p;
}

void TopicHook::resimulate_data(Rng& rng) {
  // Joint-distribution checks redraw (a, w) | Z, phi with rho and theta
  // composed out: per-topic counts are NB(phi, 1/2), words follow a fresh
  // Dirichlet(eta) draw per topic.
  const int D = ts_.dictionary_size();
  std::map<FeatureId, std::vector<double>> rho;
  for (FeatureId k : st_->Z.feature_ids()) rho[k] = dirichlet(rng, D, ts_.eta());

  for (int t = 0; t < ts_.num_times(); ++t)
    for (int i = 0; i < ts_.num_docs(t); ++i) {
      // Clear the old assignments so the count caches empty out.
      for (int l = 0; l < ts_.num_words(t, i); ++l)
        ts_.set_assignment(t, i, l, -1);
      auto& doc = ts_.docs_[t][i];
      doc.words.clear();
      doc.assign.clear();
      std::vector<std::pair<FeatureId, int>> slots;  // (topic, word)
      for (FeatureId k : st_->Z.feature_ids()) {
        if (!st_->Z.get(t, i, k)) continue;
        const long n = neg_binomial_half(ts_.phi(k, t), rng);
        for (long l = 0; l < n; ++l)
          slots.emplace_back(k, rng.categorical(rho.at(k)));
      }
      doc.words.reserve(slots.size());
      for (const auto& [k, w] : slots) doc.words.push_back(w);
      doc.assign.assign(slots.size(), -1);
      for (std::size_t l = 0; l < slots.size(); ++l)
        ts_.set_assignment(t, i, static_cast<int>(l), slots[l].first);
    }
}

}  // namespace wfibp::topic
