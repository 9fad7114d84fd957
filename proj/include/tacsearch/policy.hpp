#pragma once

#include <climits>
#include <cstdint>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "tacsearch/term.hpp"

namespace tacsearch {

/// Sorted, duplicate-free feature strings of a goal.
using FeatureVector = std::vector<std::string>;

/// Subterm prints of the conclusion and assumptions plus operator names.
FeatureVector extract_features(const Goal& g);

class EmptyModelError : public std::runtime_error {
 public:
  EmptyModelError() : std::runtime_error("policy model has no recorded pairs") {}
};

struct Prediction {
  std::string name;
  double score = 0.0;
  int index = -1;
};

/// Nearest-neighbour tactic and theorem predictor over recorded
/// (features, label) pairs. Each pair carries the corpus index after which it
/// becomes available; queries with bound `b` only see pairs with index < b.
class PolicyModel {
 public:
  enum class Kind { Tactic, Theorem };

  PolicyModel() = default;
  PolicyModel(const PolicyModel& o);
  PolicyModel(PolicyModel&& o) noexcept;
  PolicyModel& operator=(PolicyModel o) noexcept;

  void add(Kind kind, const FeatureVector& features, const std::string& label, int index);
  void add_tactic(const Goal& g, const std::string& tactic, int index) {
    add(Kind::Tactic, extract_features(g), tactic, index);
  }
  void add_theorem(const Goal& g, const std::string& theorem, int index) {
    add(Kind::Theorem, extract_features(g), theorem, index);
  }

  std::size_t size() const { return pairs_.size(); }
  bool empty() const { return pairs_.empty(); }
  std::size_t count(Kind kind) const;

  /// ln(N / df(f)); zero for features the model has never seen.
  double idf(const std::string& feature) const;

  /// Tf-idf weighted overlap between a query and one recorded pair.
  double similarity(const FeatureVector& query, std::size_t pair) const;

  std::vector<Prediction> predict_tactics(const Goal& g, std::size_t k, int bound = INT_MAX) const;
  std::vector<Prediction> predict_theorems(const Goal& g, std::size_t k, int bound = INT_MAX) const;
  std::vector<Prediction> predict(Kind kind, const FeatureVector& query, std::size_t k, int bound) const;

  void write(const std::string& path) const;
  static PolicyModel read(const std::string& path);

  struct Pair {
    Kind kind;
    std::string label;
    int index;
    std::vector<std::uint32_t> features;  // sorted feature ids
  };
  const std::vector<Pair>& pairs() const { return pairs_; }
  const std::string& feature_name(std::uint32_t id) const { return feature_names_[id]; }

 private:
  std::uint32_t intern(const std::string& f);
  std::vector<std::uint32_t> lookup(const FeatureVector& fv) const;
  void refresh_weights() const;

  std::vector<Pair> pairs_;
  std::vector<std::string> feature_names_;
  std::unordered_map<std::string, std::uint32_t> feature_ids_;
  std::vector<std::uint32_t> df_;

  // Squared idf per feature and per-pair weight sums, rebuilt after additions.
  mutable std::mutex cache_mutex_;
  mutable bool dirty_ = true;
  mutable std::vector<double> idf2_;
  mutable std::vector<double> pair_norm_;
};

/// Prior of a branch with `n` open, higher-ranked siblings: 0.5^(n+1).
double policy_prior(std::size_t n);

}  // namespace tacsearch
