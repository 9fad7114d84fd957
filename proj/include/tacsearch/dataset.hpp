#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "tacsearch/search.hpp"
#include "tacsearch/tnn.hpp"

namespace tacsearch {

/// A search tree saved after a proof attempt.
struct TreeDump {
  int attempt_id = 0;
  std::string theorem;
  std::string outcome;
  SearchTree tree;
};

nlohmann::json dump_to_json(const TreeDump& d);
TreeDump dump_from_json(const nlohmann::json& j, const Signature& sig);
void write_dump(const TreeDump& d, const std::string& path);
TreeDump read_dump(const std::string& path, const Signature& sig);

class MalformedDump : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainExample {
  Goal goal;
  Term encoded;
  int label = 0;
  std::int64_t visits = 0;
  int attempt_id = 0;
};

/// At most one example per goal text.
class Dataset {
 public:
  /// Inserts or merges; a positive label replaces a negative one.
  void add(TrainExample e);

  const std::vector<TrainExample>& examples() const { return examples_; }
  std::size_t size() const { return examples_.size(); }
  bool empty() const { return examples_.empty(); }
  std::size_t positives() const;
  std::size_t negatives() const { return size() - positives(); }
  const TrainExample* find(const std::string& goal_text) const;

  void write(const std::string& path) const;
  static Dataset read(const std::string& path, const Signature& sig);

 private:
  std::vector<TrainExample> examples_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct ExtractOptions {
  std::size_t max_ops = 80;
  std::size_t neg_cap = 600;
};

/// Goal nodes of each tree labeled by their proved status. Goals whose
/// encoding has max_ops operators or more are dropped, then only the neg_cap
/// most visited negatives of each tree are kept.
Dataset extract_examples(const std::vector<TreeDump>& dumps, const Signature& sig, const ExtractOptions& opts = {});

class DatasetTooSmall : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Uniform random partition; the first part has round(fraction * n) examples.
std::pair<std::vector<TrainExample>, std::vector<TrainExample>> split_dataset(const Dataset& ds, double train_fraction,
                                                                              std::uint64_t seed);

/// Fraction of examples with (infer_value >= 0.5) == label.
double accuracy(const Tnn& net, const std::vector<TrainExample>& set);

/// Duplicates positives (cycling) until both classes have equal size.
std::vector<TrainExample> oversample_positives(const std::vector<TrainExample>& set);

std::vector<LabeledTerm> labeled_terms(const std::vector<TrainExample>& set);

}  // namespace tacsearch
