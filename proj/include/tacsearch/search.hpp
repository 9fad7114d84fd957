#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "tacsearch/env.hpp"
#include "tacsearch/policy.hpp"
#include "tacsearch/script.hpp"
#include "tacsearch/tnn.hpp"

namespace tacsearch {

struct SearchConfig {
  double exploration = 2.0;
  double timeout = 30.0;  // seconds
  std::optional<std::int64_t> loop_limit;
  std::optional<int> suggest_depth;
  std::size_t tactic_k = 16;
  std::size_t theorem_k = 16;
  std::uint64_t seed = 0;
  int rewrite_budget = kDefaultRewriteBudget;
};

enum class NodeRole { Goal, Tactic, Argument, Output };
enum class NodeStatus { Open, Proved, Failed, Saturated };

std::string to_string(NodeRole r);
std::string to_string(NodeStatus s);

/// One node of the AND/OR search tree. Goal nodes branch over tactics (OR),
/// split tactics branch over theorem arguments (OR), output nodes hold the
/// goals produced by one tactic application (AND).
struct SearchNode {
  NodeRole role = NodeRole::Goal;
  NodeStatus status = NodeStatus::Open;
  int parent = -1;
  std::vector<int> children;
  std::int64_t visits = 0;
  double reward_sum = 0.0;
  /// Prediction rank among siblings (tactic and argument nodes).
  int rank = 0;
  /// Goal: tactic branches created. Tactic/argument: applied, or argument
  /// branches created for a split tactic.
  bool expanded = false;

  std::optional<Goal> goal;  // goal role
  double value = 0.0;        // goal role: estimate cached at creation

  std::string tactic;              // tactic and argument roles
  std::vector<std::string> args;   // theorem names: the argument list, or split candidates
  bool split = false;              // tactic role: arguments are separate branches
  std::string reason;              // why a leaf failed

  double average() const { return visits > 0 ? reward_sum / static_cast<double>(visits) : 0.0; }
  bool open() const { return status == NodeStatus::Open; }
};

class SearchTree {
 public:
  SearchTree() = default;

  /// Root output node holding the given goals with their estimates.
  static SearchTree with_roots(const std::vector<Goal>& goals, const std::vector<double>& values);

  int root() const { return 0; }
  std::size_t size() const { return nodes_.size(); }
  const SearchNode& node(int id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  SearchNode& node(int id) { return nodes_.at(static_cast<std::size_t>(id)); }
  const std::vector<SearchNode>& nodes() const { return nodes_; }

  /// New goal nodes start with one visit whose reward is their estimate.
  int add_goal(int output, Goal g, double value);
  /// Tactic and argument nodes start with one visit and a reward of 0.
  int add_tactic(int goal, std::string tactic, std::vector<std::string> args, bool split, int rank);
  int add_argument(int tactic, std::string theorem, int rank);
  int add_output(int parent);

  /// 0.5^(n+1) with n the open siblings ranked above this node.
  double prior(int id) const;

  /// Recomputes the status of `id` from its children and propagates changes
  /// towards the root.
  void refresh_status(int id);

  /// Goal node owning a tactic or argument node.
  int goal_of(int id) const;
  /// Output node below an applied tactic or argument node, or -1.
  int output_of(int id) const;

  nlohmann::json to_json() const;
  static SearchTree from_json(const nlohmann::json& j, const Signature& sig);

 private:
  int add(SearchNode n);
  NodeStatus derive_status(int id) const;

  std::vector<SearchNode> nodes_;
};

struct Branch {
  double average;
  double prior;
  double visits;
  bool open = true;
};

/// argmax over open branches of avg + c * prior * sqrt(visits) / parent_visits;
/// ties go to the lowest index.
std::size_t puct_select(double parent_visits, std::span<const Branch> branches, double c);
double puct_score(double parent_visits, const Branch& b, double c);

/// Open goal child with the fewest visits; ties go to the first.
int select_goal_branch(const SearchTree& tree, int output);

/// Product of the estimates; 1 for no goals.
double backup_leaf_reward(std::span<const double> values);

/// Propagates a reward from the end of `path` to its start. Tactic and argument
/// nodes pass it through unchanged; an output node multiplies it by the
/// average reward of each non-selected goal child (1 for proved ones).
void backup(SearchTree& tree, std::span<const int> path, double reward);

class NoOpenBranch : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class ValueFunction {
 public:
  virtual ~ValueFunction() = default;
  virtual double value(const Goal& g) const = 0;
};

/// Rewards every new goal with 1.
class UniformValue final : public ValueFunction {
 public:
  double value(const Goal&) const override { return 1.0; }
};

class TnnValue final : public ValueFunction {
 public:
  TnnValue(const Tnn& net, const Signature& sig) : net_(net), sig_(sig) {}
  double value(const Goal& g) const override { return confidence(net_, g, sig_); }

 private:
  const Tnn& net_;
  const Signature& sig_;
};

enum class SearchOutcome { Proved, Timeout, Saturated, LoopLimit };
std::string to_string(SearchOutcome o);

struct SearchStats {
  std::int64_t iterations = 0;
  std::size_t nodes = 0;
  double total_seconds = 0.0;
  double selection_seconds = 0.0;
  double tactic_seconds = 0.0;
  /// Predictions, node allocation and value estimates.
  double creation_seconds = 0.0;
  double backup_seconds = 0.0;

  double creation_fraction() const { return total_seconds > 0 ? creation_seconds / total_seconds : 0.0; }
};

struct SearchResult {
  SearchOutcome outcome = SearchOutcome::Timeout;
  SearchTree tree;
  SearchStats stats;
  std::optional<std::string> script;
};

/// Theorems, tactics and policy visible to one proof attempt.
struct ProofContext {
  const Environment& env;
  std::vector<Theorem> theorems;
  /// Policy pairs with index >= bound are invisible.
  int bound = INT32_MAX;
  const PolicyModel* policy = nullptr;
};

/// The selection / extension / backup loop over one tree.
class Prover {
 public:
  Prover(const ProofContext& ctx, const ValueFunction& value, SearchConfig cfg);

  void start(const std::vector<Goal>& roots);
  void start(SearchTree seeded);

  SearchTree& tree() { return tree_; }
  const SearchTree& tree() const { return tree_; }
  const SearchStats& stats() const { return stats_; }

  /// Root to leaf. Creates tactic and argument branches on first visit.
  std::vector<int> select_path();
  /// Applies the leaf's tactic, appends a new output node to `path` on
  /// progress and returns the leaf reward.
  double extend(std::vector<int>& path);
  /// One full iteration.
  void iterate();
  SearchResult run();

  /// Status of the root, or nullopt while the search can continue.
  std::optional<SearchOutcome> finished() const;

 private:
  void expand_goal(int goal);
  void expand_split(int tactic);
  std::vector<Theorem> resolve(const std::vector<std::string>& names) const;

  const ProofContext& ctx_;
  const ValueFunction& value_;
  SearchConfig cfg_;
  SearchTree tree_;
  SearchStats stats_;
  std::unordered_map<std::string, const Theorem*> by_name_;
};

SearchResult search(const std::vector<Goal>& roots, const ProofContext& ctx, const ValueFunction& value,
                    const SearchConfig& cfg);

struct ProofStep {
  int goal;
  /// Proved tactic or argument node applied to the goal.
  int leaf;
};

/// Steps of the proof found in a proved tree, in pre-order.
std::vector<ProofStep> proof_steps(const SearchTree& tree);

/// Proof of every root goal; throws if the root is not proved.
std::vector<Script> extract_proofs(const SearchTree& tree);
std::string extract_proof_script(const SearchTree& tree);

/// Most promising partial proof: at each goal the proved branch, otherwise the
/// most visited open branch that has been applied. Open goals become
/// `all_tac`. Nullopt when the root goal has no applied open branch.
std::optional<Script> suggest_script(const SearchTree& tree, std::optional<int> depth = std::nullopt);
std::optional<std::string> suggest(const SearchTree& tree, std::optional<int> depth = std::nullopt);

}  // namespace tacsearch
