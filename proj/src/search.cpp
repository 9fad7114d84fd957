#include "tacsearch/search.hpp"

#include <algorithm>
#include <cmath>

namespace tacsearch {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

bool closed(NodeStatus s) { return s == NodeStatus::Failed || s == NodeStatus::Saturated; }

}  // namespace

std::string to_string(NodeRole r) {
  switch (r) {
    case NodeRole::Goal: return "goal";
    case NodeRole::Tactic: return "tactic";
    case NodeRole::Argument: return "argument";
    case NodeRole::Output: return "output";
  }
  return "?";
}

std::string to_string(NodeStatus s) {
  switch (s) {
    case NodeStatus::Open: return "open";
    case NodeStatus::Proved: return "proved";
    case NodeStatus::Failed: return "failed";
    case NodeStatus::Saturated: return "saturated";
  }
  return "?";
}

std::string to_string(SearchOutcome o) {
  switch (o) {
    case SearchOutcome::Proved: return "proved";
    case SearchOutcome::Timeout: return "timeout";
    case SearchOutcome::Saturated: return "saturated";
    case SearchOutcome::LoopLimit: return "looplimit";
  }
  return "?";
}

// ---- tree ----

SearchTree SearchTree::with_roots(const std::vector<Goal>& goals, const std::vector<double>& values) {
  if (goals.empty()) throw std::invalid_argument("search needs at least one root goal");
  if (values.size() != goals.size()) throw std::invalid_argument("one estimate per root goal");
  SearchTree t;
  SearchNode root;
  root.role = NodeRole::Output;
  t.add(std::move(root));
  for (std::size_t i = 0; i < goals.size(); ++i) t.add_goal(0, goals[i], values[i]);
  return t;
}

int SearchTree::add(SearchNode n) {
  nodes_.push_back(std::move(n));
  const int id = static_cast<int>(nodes_.size()) - 1;
  if (nodes_.back().parent >= 0) nodes_[static_cast<std::size_t>(nodes_.back().parent)].children.push_back(id);
  return id;
}

int SearchTree::add_goal(int output, Goal g, double value) {
  SearchNode n;
  n.role = NodeRole::Goal;
  n.parent = output;
  n.goal = std::move(g);
  n.value = value;
  n.visits = 1;
  n.reward_sum = value;
  return add(std::move(n));
}

int SearchTree::add_tactic(int goal, std::string tactic, std::vector<std::string> args, bool split, int rank) {
  SearchNode n;
  n.role = NodeRole::Tactic;
  n.parent = goal;
  n.tactic = std::move(tactic);
  n.args = std::move(args);
  n.split = split;
  n.rank = rank;
  n.visits = 1;
  return add(std::move(n));
}

int SearchTree::add_argument(int tactic, std::string theorem, int rank) {
  SearchNode n;
  n.role = NodeRole::Argument;
  n.parent = tactic;
  n.tactic = node(tactic).tactic;
  n.args = {std::move(theorem)};
  n.rank = rank;
  n.visits = 1;
  return add(std::move(n));
}

int SearchTree::add_output(int parent) {
  SearchNode n;
  n.role = NodeRole::Output;
  n.parent = parent;
  return add(std::move(n));
}

double SearchTree::prior(int id) const {
  const auto& n = node(id);
  if (n.parent < 0) return 1.0;
  std::size_t higher = 0;
  for (int s : node(n.parent).children) {
    const auto& sib = node(s);
    if (s != id && sib.open() && sib.rank < n.rank) ++higher;
  }
  return policy_prior(higher);
}

int SearchTree::goal_of(int id) const {
  int p = node(id).parent;
  while (p >= 0 && node(p).role != NodeRole::Goal) p = node(p).parent;
  return p;
}

int SearchTree::output_of(int id) const {
  const auto& n = node(id);
  if (n.split) return -1;
  for (int c : n.children)
    if (node(c).role == NodeRole::Output) return c;
  return -1;
}

NodeStatus SearchTree::derive_status(int id) const {
  const auto& n = node(id);
  if (n.status != NodeStatus::Open) return n.status;
  switch (n.role) {
    case NodeRole::Output: {
      if (n.children.empty()) return NodeStatus::Open;
      bool all_proved = true;
      for (int c : n.children) {
        if (node(c).status == NodeStatus::Saturated) return NodeStatus::Saturated;
        if (node(c).status != NodeStatus::Proved) all_proved = false;
      }
      return all_proved ? NodeStatus::Proved : NodeStatus::Open;
    }
    case NodeRole::Goal:
    case NodeRole::Tactic: {
      if (!n.expanded) return NodeStatus::Open;
      if (n.role == NodeRole::Tactic && !n.split) {
        int out = output_of(id);
        return out < 0 ? NodeStatus::Open : node(out).status == NodeStatus::Failed ? NodeStatus::Saturated
                                                                                : node(out).status;
      }
      if (n.children.empty()) return n.role == NodeRole::Goal ? NodeStatus::Saturated : NodeStatus::Failed;
      bool all_closed = true;
      for (int c : n.children) {
        if (node(c).status == NodeStatus::Proved) return NodeStatus::Proved;
        if (!closed(node(c).status)) all_closed = false;
      }
      return all_closed ? NodeStatus::Saturated : NodeStatus::Open;
    }
    case NodeRole::Argument: {
      int out = output_of(id);
      return out < 0 ? NodeStatus::Open : node(out).status;
    }
  }
  return n.status;
}

void SearchTree::refresh_status(int id) {
  node(id).status = derive_status(id);
  for (int p = node(id).parent; p >= 0; p = node(p).parent) {
    const NodeStatus s = derive_status(p);
    if (s == node(p).status) break;
    node(p).status = s;
  }
}

nlohmann::json SearchTree::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& n = nodes_[i];
    nlohmann::json j;
    j["id"] = i;
    j["role"] = to_string(n.role);
    j["parent"] = n.parent;
    j["children"] = n.children;
    j["visits"] = n.visits;
    j["reward_sum"] = n.reward_sum;
    j["status"] = to_string(n.status);
    j["expanded"] = n.expanded;
    switch (n.role) {
      case NodeRole::Goal:
        j["payload"] = n.goal->text();
        j["value"] = n.value;
        break;
      case NodeRole::Tactic:
      case NodeRole::Argument: {
        TacticCall c{n.tactic, std::nullopt};
        if (n.role == NodeRole::Argument || (!n.split && !n.args.empty())) c.theorems = n.args;
        j["payload"] = n.split ? n.tactic + " X" : render_call(c);
        j["tactic"] = n.tactic;
        j["args"] = n.args;
        j["split"] = n.split;
        j["prior"] = prior(static_cast<int>(i));
        j["rank"] = n.rank;
        if (!n.reason.empty()) j["reason"] = n.reason;
        break;
      }
      case NodeRole::Output: {
        std::string payload;
        for (int c : n.children) {
          if (!payload.empty()) payload += " ; ";
          payload += nodes_[static_cast<std::size_t>(c)].goal->text();
        }
        j["payload"] = payload;
        break;
      }
    }
    arr.push_back(std::move(j));
  }
  return nlohmann::json{{"nodes", std::move(arr)}};
}

namespace {

NodeRole role_from(const std::string& s) {
  if (s == "goal") return NodeRole::Goal;
  if (s == "tactic") return NodeRole::Tactic;
  if (s == "argument") return NodeRole::Argument;
  if (s == "output") return NodeRole::Output;
  throw std::runtime_error("unknown node role '" + s + "'");
}

NodeStatus status_from(const std::string& s) {
  if (s == "open") return NodeStatus::Open;
  if (s == "proved") return NodeStatus::Proved;
  if (s == "failed") return NodeStatus::Failed;
  if (s == "saturated") return NodeStatus::Saturated;
  throw std::runtime_error("unknown node status '" + s + "'");
}

}  // namespace

SearchTree SearchTree::from_json(const nlohmann::json& j, const Signature& sig) {
  SearchTree t;
  const auto& arr = j.at("nodes");
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto& o = arr[i];
    if (o.at("id").get<std::size_t>() != i) throw std::runtime_error("tree dump: node ids out of order");
    SearchNode n;
    n.role = role_from(o.at("role").get<std::string>());
    n.parent = o.at("parent").get<int>();
    if (n.parent >= static_cast<int>(i)) throw std::runtime_error("tree dump: parent after child");
    n.children = o.at("children").get<std::vector<int>>();
    n.visits = o.at("visits").get<std::int64_t>();
    n.reward_sum = o.at("reward_sum").get<double>();
    n.status = status_from(o.at("status").get<std::string>());
    n.expanded = o.value("expanded", false);
    if (n.role == NodeRole::Goal) {
      n.goal = parse_goal(o.at("payload").get<std::string>(), sig);
      n.value = o.value("value", 0.0);
    } else if (n.role != NodeRole::Output) {
      n.tactic = o.at("tactic").get<std::string>();
      n.args = o.at("args").get<std::vector<std::string>>();
      n.split = o.value("split", false);
      n.rank = o.value("rank", 0);
      n.reason = o.value("reason", std::string{});
    }
    t.nodes_.push_back(std::move(n));
  }
  for (std::size_t i = 0; i < t.nodes_.size(); ++i)
    for (int c : t.nodes_[i].children)
      if (c <= static_cast<int>(i) || c >= static_cast<int>(t.nodes_.size()) ||
          t.nodes_[static_cast<std::size_t>(c)].parent != static_cast<int>(i))
        throw std::runtime_error("tree dump: inconsistent child link");
  if (t.nodes_.empty()) throw std::runtime_error("tree dump: no nodes");
  return t;
}

// ---- selection and backup ----

double puct_score(double parent_visits, const Branch& b, double c) {
  const double pv = parent_visits > 0 ? parent_visits : 1.0;
  return b.average + c * b.prior * std::sqrt(b.visits) / pv;
}

std::size_t puct_select(double parent_visits, std::span<const Branch> branches, double c) {
  std::optional<std::size_t> best;
  double best_score = 0.0;
  for (std::size_t i = 0; i < branches.size(); ++i) {
    if (!branches[i].open) continue;
    const double s = puct_score(parent_visits, branches[i], c);
    if (!best || s > best_score) {
      best = i;
      best_score = s;
    }
  }
  if (!best) throw NoOpenBranch("puct_select: no open branch");
  return *best;
}

int select_goal_branch(const SearchTree& tree, int output) {
  int best = -1;
  for (int c : tree.node(output).children) {
    const auto& n = tree.node(c);
    if (!n.open()) continue;
    if (best < 0 || n.visits < tree.node(best).visits) best = c;
  }
  if (best < 0) throw NoOpenBranch("select_goal_branch: no open goal");
  return best;
}

double backup_leaf_reward(std::span<const double> values) {
  double r = 1.0;
  for (double v : values) r *= v;
  return r;
}

void backup(SearchTree& tree, std::span<const int> path, double reward) {
  double r = reward;
  for (std::size_t i = path.size(); i-- > 0;) {
    auto& n = tree.node(path[i]);
    if (n.role == NodeRole::Output && i + 1 < path.size()) {
      const int selected = path[i + 1];
      for (int c : n.children) {
        if (c == selected) continue;
        const auto& g = tree.node(c);
        r *= g.status == NodeStatus::Proved ? 1.0 : g.average();
      }
    }
    n.visits += 1;
    n.reward_sum += r;
  }
}

// ---- prover ----

Prover::Prover(const ProofContext& ctx, const ValueFunction& value, SearchConfig cfg)
    : ctx_(ctx), value_(value), cfg_(std::move(cfg)) {
  if (!(cfg_.exploration > 0)) throw std::invalid_argument("exploration coefficient must be positive");
  if (!(cfg_.timeout > 0)) throw std::invalid_argument("timeout must be positive");
  for (const auto& th : ctx_.theorems) by_name_[th.name] = &th;
}

void Prover::start(const std::vector<Goal>& roots) {
  if (roots.empty()) throw std::invalid_argument("search needs at least one root goal");
  std::vector<double> values;
  for (const auto& g : roots) values.push_back(value_.value(g));
  tree_ = SearchTree::with_roots(roots, values);
  stats_ = {};
}

void Prover::start(SearchTree seeded) {
  tree_ = std::move(seeded);
  stats_ = {};
}

std::vector<Theorem> Prover::resolve(const std::vector<std::string>& names) const {
  std::vector<Theorem> out;
  for (const auto& n : names) {
    auto it = by_name_.find(n);
    if (it != by_name_.end()) out.push_back(*it->second);
  }
  return out;
}

void Prover::expand_goal(int id) {
  auto t0 = Clock::now();
  const Goal goal = *tree_.node(id).goal;
  std::vector<std::string> tactics;
  std::vector<std::string> theorems;
  if (ctx_.policy && !ctx_.policy->empty()) {
    for (auto& p : ctx_.policy->predict_tactics(goal, cfg_.tactic_k, ctx_.bound))
      if (ctx_.env.find_tactic(p.name)) tactics.push_back(std::move(p.name));
    for (auto& p : ctx_.policy->predict_theorems(goal, cfg_.theorem_k, ctx_.bound))
      if (by_name_.count(p.name)) theorems.push_back(std::move(p.name));
  }
  // Tactics the policy has never seen still get a branch, after the predicted ones.
  for (const auto& t : ctx_.env.tactics()) {
    if (tactics.size() >= cfg_.tactic_k) break;
    if (std::find(tactics.begin(), tactics.end(), t.name) == tactics.end()) tactics.push_back(t.name);
  }
  int rank = 0;
  for (const auto& name : tactics) {
    const Tactic* t = ctx_.env.find_tactic(name);
    std::vector<std::string> args;
    if (t->takes_theorem_list) args = theorems;
    tree_.add_tactic(id, name, std::move(args), t->split_arguments, rank++);
  }
  tree_.node(id).expanded = true;
  tree_.refresh_status(id);
  stats_.creation_seconds += seconds_since(t0);
}

void Prover::expand_split(int id) {
  auto t0 = Clock::now();
  const auto candidates = tree_.node(id).args;
  int rank = 0;
  for (const auto& th : candidates) tree_.add_argument(id, th, rank++);
  tree_.node(id).expanded = true;
  tree_.refresh_status(id);
  stats_.creation_seconds += seconds_since(t0);
}

std::vector<int> Prover::select_path() {
  std::vector<int> path{tree_.root()};
  for (;;) {
    const int id = path.back();
    const auto role = tree_.node(id).role;
    if (role == NodeRole::Output) {
      path.push_back(select_goal_branch(tree_, id));
      continue;
    }
    if (role == NodeRole::Goal || (role == NodeRole::Tactic && tree_.node(id).split)) {
      if (!tree_.node(id).expanded) {
        if (role == NodeRole::Goal) {
          expand_goal(id);
        } else {
          expand_split(id);
          if (tree_.node(id).children.empty()) return path;
        }
      }
      const auto& n = tree_.node(id);
      std::vector<Branch> branches;
      branches.reserve(n.children.size());
      for (int c : n.children) {
        const auto& ch = tree_.node(c);
        branches.push_back({ch.average(), ch.open() ? tree_.prior(c) : 0.0, static_cast<double>(ch.visits),
                            ch.open()});
      }
      const auto pick = puct_select(static_cast<double>(n.visits), branches, cfg_.exploration);
      path.push_back(n.children[pick]);
      continue;
    }
    // Non-split tactic or argument: a leaf until applied.
    if (!tree_.node(id).expanded) return path;
    const int out = tree_.output_of(id);
    if (out < 0) throw std::logic_error("open applied tactic without output node");
    path.push_back(out);
  }
}

double Prover::extend(std::vector<int>& path) {
  const int leaf = path.back();
  auto& n = tree_.node(leaf);
  n.expanded = true;
  if (n.role == NodeRole::Tactic && n.split) {
    // Split tactic without candidate arguments.
    n.status = NodeStatus::Failed;
    n.reason = "no arguments";
    tree_.refresh_status(n.parent);
    return 0.0;
  }
  const int goal_id = tree_.goal_of(leaf);
  const Goal goal = *tree_.node(goal_id).goal;
  const Tactic* tactic = ctx_.env.find_tactic(n.tactic);

  auto t0 = Clock::now();
  TacticOutcome outcome = tactic ? ctx_.env.apply(*tactic, resolve(n.args), goal, cfg_.rewrite_budget)
                                 : TacticOutcome::failed("unknown tactic");
  stats_.tactic_seconds += seconds_since(t0);

  auto& leaf_node = tree_.node(leaf);
  double reward = 0.0;
  if (outcome.is_proved()) {
    leaf_node.status = NodeStatus::Proved;
    reward = 1.0;
  } else if (outcome.is_failed()) {
    leaf_node.status = NodeStatus::Failed;
    leaf_node.reason = outcome.reason;
  } else {
    bool loop = false;
    for (int p : path) {
      const auto& pn = tree_.node(p);
      if (pn.role != NodeRole::Goal) continue;
      for (const auto& g : outcome.goals)
        if (g == *pn.goal) loop = true;
    }
    if (loop) {
      leaf_node.status = NodeStatus::Failed;
      leaf_node.reason = "loop";
    } else {
      auto t1 = Clock::now();
      const int out = tree_.add_output(leaf);
      std::vector<double> values;
      for (auto& g : outcome.goals) {
        double v = value_.value(g);
        values.push_back(v);
        tree_.add_goal(out, std::move(g), v);
      }
      reward = backup_leaf_reward(values);
      path.push_back(out);
      stats_.creation_seconds += seconds_since(t1);
    }
  }
  tree_.refresh_status(leaf);
  return reward;
}

void Prover::iterate() {
  auto t0 = Clock::now();
  auto path = select_path();
  stats_.selection_seconds += seconds_since(t0);
  const double reward = extend(path);
  auto t1 = Clock::now();
  backup(tree_, path, reward);
  stats_.backup_seconds += seconds_since(t1);
  ++stats_.iterations;
}

std::optional<SearchOutcome> Prover::finished() const {
  switch (tree_.node(tree_.root()).status) {
    case NodeStatus::Proved: return SearchOutcome::Proved;
    case NodeStatus::Saturated:
    case NodeStatus::Failed: return SearchOutcome::Saturated;
    default: return std::nullopt;
  }
}

SearchResult Prover::run() {
  const auto t0 = Clock::now();
  SearchOutcome outcome;
  for (;;) {
    if (auto f = finished()) {
      outcome = *f;
      break;
    }
    if (cfg_.loop_limit && stats_.iterations >= *cfg_.loop_limit) {
      outcome = SearchOutcome::LoopLimit;
      break;
    }
    if (seconds_since(t0) >= cfg_.timeout) {
      outcome = SearchOutcome::Timeout;
      break;
    }
    iterate();
  }
  stats_.total_seconds = seconds_since(t0);
  stats_.nodes = tree_.size();
  SearchResult res{outcome, tree_, stats_, std::nullopt};
  if (outcome == SearchOutcome::Proved) res.script = extract_proof_script(res.tree);
  return res;
}

SearchResult search(const std::vector<Goal>& roots, const ProofContext& ctx, const ValueFunction& value,
                    const SearchConfig& cfg) {
  Prover p(ctx, value, cfg);
  p.start(roots);
  return p.run();
}

// ---- proof and suggestion extraction ----

namespace {

TacticCall call_of(const SearchTree& tree, int leaf) {
  const auto& n = tree.node(leaf);
  TacticCall c{n.tactic, std::nullopt};
  if (n.role == NodeRole::Argument || !n.args.empty()) c.theorems = n.args;
  return c;
}

Script attach(const SearchTree& tree, int leaf, std::vector<Script> subscripts) {
  TacticCall c = call_of(tree, leaf);
  if (subscripts.empty()) return Script::call(std::move(c));
  if (subscripts.size() == 1) return Script::then(std::move(c), subscripts.front());
  return Script::then_list(std::move(c), std::move(subscripts));
}

int proved_leaf(const SearchTree& tree, int goal) {
  for (int t : tree.node(goal).children) {
    if (tree.node(t).status != NodeStatus::Proved) continue;
    if (!tree.node(t).split) return t;
    for (int a : tree.node(t).children)
      if (tree.node(a).status == NodeStatus::Proved) return a;
  }
  return -1;
}

Script proof_of(const SearchTree& tree, int goal) {
  const int leaf = proved_leaf(tree, goal);
  if (leaf < 0) throw std::logic_error("goal node " + std::to_string(goal) + " is not proved");
  std::vector<Script> subs;
  if (int out = tree.output_of(leaf); out >= 0)
    for (int g : tree.node(out).children) subs.push_back(proof_of(tree, g));
  return attach(tree, leaf, std::move(subs));
}

bool applied_open(const SearchTree& tree, int leaf) {
  return tree.node(leaf).open() && tree.output_of(leaf) >= 0;
}

// Most visited open tactic branch that has an applied leaf; -1 if none.
int promising_leaf(const SearchTree& tree, int goal) {
  int best_tactic = -1, best_leaf = -1;
  for (int t : tree.node(goal).children) {
    const auto& tn = tree.node(t);
    if (!tn.open()) continue;
    int leaf = -1;
    if (!tn.split) {
      if (applied_open(tree, t)) leaf = t;
    } else {
      for (int a : tn.children)
        if (applied_open(tree, a) && (leaf < 0 || tree.node(a).visits > tree.node(leaf).visits)) leaf = a;
    }
    if (leaf < 0) continue;
    if (best_tactic < 0 || tn.visits > tree.node(best_tactic).visits) {
      best_tactic = t;
      best_leaf = leaf;
    }
  }
  return best_leaf;
}

Script noop() { return Script::call(TacticCall{std::string(kNoOpTactic), std::nullopt}); }

std::optional<Script> suggest_goal(const SearchTree& tree, int goal, std::optional<int> depth) {
  if (depth && *depth <= 0) return std::nullopt;
  std::optional<int> next = depth;
  if (next) --*next;
  int leaf = tree.node(goal).status == NodeStatus::Proved ? proved_leaf(tree, goal) : promising_leaf(tree, goal);
  if (leaf < 0) return std::nullopt;
  std::vector<Script> subs;
  if (int out = tree.output_of(leaf); out >= 0)
    for (int g : tree.node(out).children) subs.push_back(suggest_goal(tree, g, next).value_or(noop()));
  return attach(tree, leaf, std::move(subs));
}

std::string render_roots(const std::vector<Script>& scripts) {
  if (scripts.size() == 1) return render_script(scripts.front());
  std::string s = "[";
  for (std::size_t i = 0; i < scripts.size(); ++i) {
    if (i) s += ", ";
    s += render_script(scripts[i]);
  }
  return s + "]";
}

}  // namespace

namespace {

void collect_steps(const SearchTree& tree, int goal, std::vector<ProofStep>& out) {
  const int leaf = proved_leaf(tree, goal);
  if (leaf < 0) throw std::logic_error("goal node " + std::to_string(goal) + " is not proved");
  out.push_back({goal, leaf});
  if (int o = tree.output_of(leaf); o >= 0)
    for (int g : tree.node(o).children) collect_steps(tree, g, out);
}

}  // namespace

std::vector<ProofStep> proof_steps(const SearchTree& tree) {
  if (tree.size() == 0 || tree.node(tree.root()).status != NodeStatus::Proved)
    throw std::logic_error("proof_steps: root is not proved");
  std::vector<ProofStep> out;
  for (int g : tree.node(tree.root()).children) collect_steps(tree, g, out);
  return out;
}

std::vector<Script> extract_proofs(const SearchTree& tree) {
  if (tree.size() == 0 || tree.node(tree.root()).status != NodeStatus::Proved)
    throw std::logic_error("extract_proof_script: root is not proved");
  std::vector<Script> out;
  for (int g : tree.node(tree.root()).children) out.push_back(proof_of(tree, g));
  return out;
}

std::string extract_proof_script(const SearchTree& tree) { return render_roots(extract_proofs(tree)); }

std::optional<Script> suggest_script(const SearchTree& tree, std::optional<int> depth) {
  if (tree.size() == 0) return std::nullopt;
  const auto& root = tree.node(tree.root());
  if (root.children.empty()) return std::nullopt;
  return suggest_goal(tree, root.children.front(), depth);
}

std::optional<std::string> suggest(const SearchTree& tree, std::optional<int> depth) {
  const auto& root = tree.node(tree.root());
  if (root.children.size() <= 1) {
    auto s = suggest_script(tree, depth);
    if (!s) return std::nullopt;
    return render_script(*s);
  }
  std::vector<Script> parts;
  bool any = false;
  for (int g : root.children) {
    auto s = suggest_goal(tree, g, depth);
    any = any || s.has_value();
    parts.push_back(s.value_or(noop()));
  }
  if (!any) return std::nullopt;
  return render_roots(parts);
}

}  // namespace tacsearch
