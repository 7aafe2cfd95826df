#pragma once

// Command implementations behind the CLI: dataset generation, inference with
// checkpoint/resume, held-out perplexity, validation gates, and plot-data
// export. Everything is a library function so the tests drive the same code
// paths as the binary.

#include <string>
#include <vector>

#include "wfibp/binmat.hpp"
#include "wfibp/config.hpp"
#include "wfibp/matrix.hpp"
#include "wfibp/stats.hpp"
#include "wfibp/topic.hpp"

namespace wfibp::io {

/// Writes a synthetic dataset plus its truth bundle into `outdir`.
int cmd_generate(const RunConfig& cfg, const std::string& outdir);

/// Runs posterior inference over the dataset in `datadir`, persisting the
/// sample stream, summaries, a manifest and periodic checkpoints. With
/// `resume` set, continues from `outdir`/checkpoint.json when present.
int cmd_infer(const RunConfig& cfg, const std::string& datadir,
              const std::string& outdir, bool resume = false);

struct PerplexityOptions {
  std::vector<double> fractions = {0.5, 0.6, 0.7, 0.8};
  int splits = 3;
  bool compare_static = true;
};

/// Seeded word-holdout perplexity for a topic corpus: trains on the retained
/// words per fraction/split and scores the held-out ones, optionally also
/// for the static baseline. Writes perplexity.csv into `outdir`.
int cmd_perplexity(const RunConfig& cfg, const std::string& datadir,
                   const std::string& outdir, const PerplexityOptions& opt);

/// Statistical gates: suite in {"diffusion", "prf", "ibp", "all"}. Writes a
/// JSON report bundle, returns 0 on pass and 2 on gate failure.
int cmd_validate(const std::string& suite, std::uint64_t seed,
                 const std::string& outdir, int threads = 1);

/// Plot-ready CSVs (trajectory bands, topic-proportion curves, perplexity
/// box data) from an inference or perplexity run directory.
int cmd_export(const std::string& rundir, const std::string& outdir);

// Dataset plumbing shared with the tests.

void write_corpus(const topic::Corpus& corpus, const std::string& dir);

/// Reads corpus.jsonl + vocab.csv; words with corpus counts outside
/// [min_count, max_count] are dropped and the vocabulary remapped.
topic::Corpus read_corpus(const std::string& dir, long min_count = 0,
                          long max_count = -1);

std::vector<Matrix> read_observations(const std::string& dir, int num_times);

struct TruthZ {
  std::vector<int> N;
  std::vector<FeatureId> ids;
  std::vector<BinaryMatrix> z;  // per time, columns in ids order
};
TruthZ read_z_true(const std::string& path, const std::vector<int>& N);

/// Aligns inferred columns with true ones by the best single global
/// permutation (exhaustive up to 8 columns, greedy beyond).
struct ColumnMatch {
  std::vector<int> perm;  // true column c matched to inferred column perm[c]
  std::vector<double> frobenius_per_time;
  std::vector<double> hamming_per_time;  // majority-vote mismatch fraction
};
ColumnMatch match_columns(const std::vector<Matrix>& z_mean_per_time,
                          const std::vector<BinaryMatrix>& z_true_per_time);

}  // namespace wfibp::io
