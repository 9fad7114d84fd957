#include "tacsearch/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace tacsearch {

nlohmann::json dump_to_json(const TreeDump& d) {
  nlohmann::json j = d.tree.to_json();
  j["attempt_id"] = d.attempt_id;
  j["theorem"] = d.theorem;
  j["outcome"] = d.outcome;
  return j;
}

TreeDump dump_from_json(const nlohmann::json& j, const Signature& sig) {
  try {
    TreeDump d;
    d.attempt_id = j.at("attempt_id").get<int>();
    d.theorem = j.value("theorem", std::string{});
    d.outcome = j.value("outcome", std::string{});
    d.tree = SearchTree::from_json(j, sig);
    return d;
  } catch (const MalformedDump&) {
    throw;
  } catch (const std::exception& e) {
    throw MalformedDump(std::string("malformed tree dump: ") + e.what());
  }
}

void write_dump(const TreeDump& d, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << dump_to_json(d).dump() << '\n';
}

TreeDump read_dump(const std::string& path, const Signature& sig) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw MalformedDump(path + ": " + e.what());
  }
  return dump_from_json(j, sig);
}

void Dataset::add(TrainExample e) {
  const std::string key = e.goal.text();
  auto it = index_.find(key);
  if (it == index_.end()) {
    index_.emplace(key, examples_.size());
    examples_.push_back(std::move(e));
    return;
  }
  auto& kept = examples_[it->second];
  if (kept.label == 0 && e.label == 1) kept = std::move(e);
}

std::size_t Dataset::positives() const {
  return static_cast<std::size_t>(
      std::count_if(examples_.begin(), examples_.end(), [](const TrainExample& e) { return e.label == 1; }));
}

const TrainExample* Dataset::find(const std::string& goal_text) const {
  auto it = index_.find(goal_text);
  return it == index_.end() ? nullptr : &examples_[it->second];
}

void Dataset::write(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& e : examples_) out << e.label << '\t' << e.visits << '\t' << e.attempt_id << '\t' << e.goal.text() << '\n';
}

Dataset Dataset::read(const std::string& path, const Signature& sig) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  Dataset ds;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string label, visits, attempt, goal;
    if (!std::getline(ss, label, '\t') || !std::getline(ss, visits, '\t') || !std::getline(ss, attempt, '\t') ||
        !std::getline(ss, goal))
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected 4 tab-separated fields");
    if (label != "0" && label != "1") throw std::runtime_error(path + ":" + std::to_string(lineno) + ": bad label");
    Goal g = parse_goal(goal, sig);
    Term enc = encode_goal(g, sig);
    ds.add(TrainExample{std::move(g), std::move(enc), label == "1", std::stoll(visits), std::stoi(attempt)});
  }
  return ds;
}

namespace {

std::vector<TrainExample> examples_of(const TreeDump& d, const Signature& sig, const ExtractOptions& opts) {
  std::vector<TrainExample> pos, neg;
  std::unordered_map<std::string, std::size_t> seen_pos, seen_neg;
  const auto& nodes = d.tree.nodes();
  for (const auto& n : nodes) {
    if (n.role != NodeRole::Goal) continue;
    if (!n.goal) throw MalformedDump("goal node without goal");
    Term enc = encode_goal(*n.goal, sig);
    if (operator_count(enc) >= opts.max_ops) continue;
    const std::string key = n.goal->text();
    const bool proved = n.status == NodeStatus::Proved;
    TrainExample e{*n.goal, std::move(enc), proved ? 1 : 0, n.visits, d.attempt_id};
    if (proved) {
      if (seen_pos.emplace(key, pos.size()).second) pos.push_back(std::move(e));
    } else if (auto it = seen_neg.find(key); it == seen_neg.end()) {
      seen_neg.emplace(key, neg.size());
      neg.push_back(std::move(e));
    } else if (neg[it->second].visits < e.visits) {
      neg[it->second].visits = e.visits;
    }
  }
  std::vector<TrainExample> negs;
  for (auto& e : neg)
    if (!seen_pos.count(e.goal.text())) negs.push_back(std::move(e));
  std::stable_sort(negs.begin(), negs.end(),
                   [](const TrainExample& a, const TrainExample& b) { return a.visits > b.visits; });
  if (negs.size() > opts.neg_cap) negs.erase(negs.begin() + static_cast<std::ptrdiff_t>(opts.neg_cap), negs.end());
  pos.insert(pos.end(), std::make_move_iterator(negs.begin()), std::make_move_iterator(negs.end()));
  return pos;
}

}  // namespace

Dataset extract_examples(const std::vector<TreeDump>& dumps, const Signature& sig, const ExtractOptions& opts) {
  std::vector<const TreeDump*> order;
  for (const auto& d : dumps) order.push_back(&d);
  std::stable_sort(order.begin(), order.end(),
                   [](const TreeDump* a, const TreeDump* b) { return a->attempt_id < b->attempt_id; });
  Dataset ds;
  for (const TreeDump* d : order)
    for (auto& e : examples_of(*d, sig, opts)) ds.add(std::move(e));
  return ds;
}

std::pair<std::vector<TrainExample>, std::vector<TrainExample>> split_dataset(const Dataset& ds, double train_fraction,
                                                                              std::uint64_t seed) {
  if (ds.size() < 10) throw DatasetTooSmall("dataset has " + std::to_string(ds.size()) + " examples, need at least 10");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw std::invalid_argument("train fraction must be in (0,1)");
  std::vector<std::size_t> idx(ds.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  for (std::size_t i = idx.size(); i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(idx[i - 1], idx[pick(rng)]);
  }
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(ds.size())));
  std::pair<std::vector<TrainExample>, std::vector<TrainExample>> out;
  for (std::size_t i = 0; i < idx.size(); ++i)
    (i < n_train ? out.first : out.second).push_back(ds.examples()[idx[i]]);
  return out;
}

double accuracy(const Tnn& net, const std::vector<TrainExample>& set) {
  if (set.empty()) throw std::invalid_argument("accuracy of an empty set");
  std::size_t hits = 0;
  for (const auto& e : set) {
    const int predicted = infer_value(net, e.encoded) >= 0.5 ? 1 : 0;
    if (predicted == e.label) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(set.size());
}

std::vector<TrainExample> oversample_positives(const std::vector<TrainExample>& set) {
  std::vector<TrainExample> out = set;
  std::vector<const TrainExample*> pos;
  std::size_t neg = 0;
  for (const auto& e : set) {
    if (e.label == 1)
      pos.push_back(&e);
    else
      ++neg;
  }
  for (std::size_t i = 0; !pos.empty() && pos.size() + i < neg; ++i) out.push_back(*pos[i % pos.size()]);
  return out;
}

std::vector<LabeledTerm> labeled_terms(const std::vector<TrainExample>& set) {
  std::vector<LabeledTerm> out;
  out.reserve(set.size());
  for (const auto& e : set) out.push_back({e.encoded, static_cast<double>(e.label)});
  return out;
}

}  // namespace tacsearch
