#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tacsearch/dataset.hpp"
#include "tacsearch/env.hpp"
#include "tacsearch/policy.hpp"
#include "tacsearch/search.hpp"
#include "tacsearch/tnn.hpp"

namespace tacsearch {

enum class Mode { Baseline, Tnn };
std::string to_string(Mode m);
Mode parse_mode(const std::string& s);

/// Theorem-statement pairs for the axioms (index -1) and every corpus theorem.
/// Tactic predictions are empty until proofs are learned.
PolicyModel bootstrap_policy(const Environment& env, const Corpus& corpus);

/// Records the tactic and theorem choices of a proved tree under `index`.
void learn_proof(PolicyModel& policy, const SearchTree& tree, int index);

struct TheoremResult {
  std::string name;
  int index = 0;
  /// proved, timeout, saturated, looplimit or error
  std::string outcome;
  std::int64_t iterations = 0;
  double seconds = 0.0;
  double creation_seconds = 0.0;
  std::optional<std::string> script;
  /// The script replays and proves the statement with the items available to it.
  bool replay_ok = false;
  std::string error;

  bool solved() const { return outcome == "proved"; }
};

struct EvalRun {
  Mode mode = Mode::Baseline;
  std::vector<TheoremResult> results;

  std::size_t solved() const;
  double total_seconds() const;
  /// Share of the search time spent creating nodes and estimating goals.
  double creation_fraction() const;

  nlohmann::json to_json() const;
  static EvalRun from_json(const nlohmann::json& j);
};

struct EvalConfig {
  SearchConfig search;
  std::size_t workers = 1;
  /// Successful trees are written here as <index>_<name>.json when non-empty.
  std::string dump_dir;
};

class MissingWeights : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Attempts every theorem with only the items created before it.
EvalRun eval_corpus(const Environment& env, const Corpus& corpus, Mode mode, const PolicyModel& policy,
                    const Tnn* net, const EvalConfig& cfg);

struct Comparison {
  std::size_t solved_baseline = 0;
  std::size_t solved_tnn = 0;
  std::size_t solved_only_baseline = 0;
  std::size_t solved_only_tnn = 0;
  std::size_t solved_combined = 0;
};

Comparison compare(const EvalRun& baseline, const EvalRun& tnn);

struct EvalReport {
  EvalRun baseline;
  std::optional<EvalRun> tnn;
  std::optional<double> train_accuracy;
  std::optional<double> test_accuracy;
  std::size_t examples = 0;
  std::size_t positives = 0;

  Comparison comparison() const;
  /// Human-readable, with timings.
  std::string text() const;
  /// Line-based; leaves out wall times so reruns compare equal.
  std::string tsv() const;
};

std::string run_tsv(const EvalRun& run);

struct PipelineConfig {
  EvalConfig eval;
  std::uint64_t seed = 1;
  TrainSchedule schedule;
  ExtractOptions extract;
  double train_fraction = 0.9;
};

/// Bootstrap eval, policy training, example extraction, TNN training and
/// evaluation, then both final evals. Every stage reads its artifact from
/// `out_dir` when present and writes it otherwise.
EvalReport pipeline(const Environment& env, const Corpus& corpus, const std::string& out_dir,
                    const PipelineConfig& cfg);

/// Artifact names inside a pipeline directory.
namespace artifacts {
inline constexpr const char* kBootstrapRun = "eval_bootstrap.json";
inline constexpr const char* kBootstrapTrees = "trees_bootstrap";
inline constexpr const char* kPolicy = "policy.txt";
inline constexpr const char* kExamples = "examples.tsv";
inline constexpr const char* kSplitWeights = "tnn_split.txt";
inline constexpr const char* kAccuracy = "accuracy.json";
inline constexpr const char* kWeights = "tnn.txt";
inline constexpr const char* kBaselineRun = "eval_baseline.json";
inline constexpr const char* kTnnRun = "eval_tnn.json";
inline constexpr const char* kBaselineTrees = "trees_baseline";
inline constexpr const char* kTnnTrees = "trees_tnn";
inline constexpr const char* kReportText = "report.txt";
inline constexpr const char* kReportTsv = "report.tsv";
}  // namespace artifacts

struct ProveResult {
  SearchResult search;
  std::optional<std::string> suggestion;
  bool replay_ok = false;
};

/// Searches for a proof of `goal` with the whole corpus available.
ProveResult prove(const Environment& env, const Corpus& corpus, const Goal& goal, Mode mode,
                  const PolicyModel& policy, const Tnn* net, const SearchConfig& cfg);

/// Stage seed derived from the root seed.
std::uint64_t stage_seed(std::uint64_t root, std::uint64_t stage);

}  // namespace tacsearch
