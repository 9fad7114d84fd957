#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "tacsearch/term.hpp"

namespace tacsearch {

class TnnFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tree neural network. Every operator of arity a >= 1 owns one dense tanh
/// layer R^(a*d) -> R^d; a nullary operator owns a trainable embedding in R^d.
/// Embeddings are composed bottom-up along the term and a logistic head maps
/// the root embedding to a provability estimate.
class Tnn {
 public:
  struct Layer {
    int arity = 0;
    Eigen::MatrixXd weight;  // d x (arity*d); empty for nullary operators
    Eigen::VectorXd bias;    // the embedding itself for nullary operators
  };

  Tnn() = default;

  /// Random initialization: weights uniform in +-1/sqrt(fan_in), biases zero,
  /// nullary embeddings uniform in +-1. Unknown-operator slots are created for
  /// every arity up to `max_unknown_arity`.
  static Tnn create(int dim, const std::vector<Operator>& ops, int max_unknown_arity, std::uint64_t seed);
  /// Same shapes as `create`, all parameters zero.
  static Tnn zeros(int dim, const std::vector<Operator>& ops, int max_unknown_arity);

  static std::string unknown_name(int arity) { return "#unk" + std::to_string(arity); }

  int dim() const { return dim_; }
  int max_unknown_arity() const { return max_unknown_arity_; }

  /// Layer used for an operator occurrence: its own if known with matching
  /// arity, otherwise the unknown slot. Throws if no slot has that arity.
  const std::string& layer_name(const std::string& op, int arity) const;

  Eigen::VectorXd embed(const Term& t) const;
  /// Value in [0,1]; shared subterms are embedded once per call.
  double infer(const Term& t) const;
  /// Same as `infer` but without sharing; used to check the memoized path.
  double infer_unshared(const Term& t) const;

  std::map<std::string, Layer>& layers() { return layers_; }
  const std::map<std::string, Layer>& layers() const { return layers_; }
  Layer& head() { return head_; }
  const Layer& head() const { return head_; }

  std::size_t parameter_count() const;
  bool all_finite() const;

  void write(const std::string& path) const;
  std::string to_text() const;
  /// When a signature is given, operators it declares must have matching arity.
  static Tnn read(const std::string& path, const Signature* sig = nullptr);
  static Tnn from_text(const std::string& text, const Signature* sig = nullptr);

  /// Squared error (v - label)^2 for one term and its gradient, accumulated
  /// into `grad` (which must have this network's shapes). Operators in
  /// `masked` are routed to the unknown slots; with `unknown_only` set, only
  /// the unknown-slot parameters receive gradient.
  double accumulate_gradient(const Term& t, double label, Tnn& grad,
                             const std::unordered_set<std::string>* masked = nullptr,
                             bool unknown_only = false) const;

  /// this += scale * other, over identical shapes.
  void add_scaled(const Tnn& other, double scale);
  void set_zero();

 private:
  int dim_ = 0;
  int max_unknown_arity_ = 0;
  std::map<std::string, Layer> layers_;
  Layer head_;
};

struct TrainSchedule {
  int epochs = 100;
  double learning_rate = 0.08;
  std::vector<int> batch_sizes{16, 24, 32, 48, 64};
  std::uint64_t seed = 1;
  /// Fraction of training examples in which one operator is renamed to the
  /// unknown slot; those examples only train the unknown-slot parameters.
  double unknown_rate = 0.05;
  int dim = 16;

  /// Batch size used in a 0-based epoch.
  int batch_size_at(int epoch) const;
};

struct LabeledTerm {
  Term term;
  double label;
};

struct TrainOptions {
  /// Extra operators to allocate besides those occurring in the examples.
  std::vector<Operator> operators;
  /// Called after every epoch with the mean squared error over the whole
  /// training set (only computed when set).
  std::function<void(int epoch, double loss)> on_epoch;
};

Tnn train_tnn(const std::vector<LabeledTerm>& examples, const TrainSchedule& schedule,
              const TrainOptions& options = {});

double infer_value(const Tnn& net, const Term& t);
double confidence(const Tnn& net, const Goal& g, const Signature& sig);
double mean_squared_error(const Tnn& net, const std::vector<LabeledTerm>& examples);

/// Operators (name, arity) occurring in the terms, sorted by name.
std::vector<Operator> collect_operators(const std::vector<LabeledTerm>& examples);

}  // namespace tacsearch
