#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tacsearch {

/// A symbol of the ranked alphabet.
struct Operator {
  std::string name;
  int arity = 0;

  bool operator==(const Operator&) const = default;
};

/// Raised by the term and goal parsers. `offset()` is the byte offset in the
/// input where the problem was detected.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// Declared operators plus two implicit families of nullary symbols:
/// decimal numerals (`0`, `17`) and variables (lowercase-initial identifiers
/// that are not declared).
class Signature {
 public:
  Signature() = default;
  explicit Signature(const std::vector<Operator>& ops);

  /// Arithmetic over nat with SUM, function constants and the connectives
  /// `=`, `==>`, `/\`.
  static Signature standard();
  /// One `name arity` pair per line; blank lines and `#` comments ignored.
  static Signature read(const std::string& path);
  static Signature parse(std::string_view text);

  void add(const Operator& op);
  bool declared(std::string_view name) const;
  /// Arity of a declared operator, numeral or variable.
  std::optional<int> arity_of(std::string_view name) const;
  const std::map<std::string, int, std::less<>>& declared_operators() const { return ops_; }
  int max_arity() const;

  static bool is_numeral(std::string_view name);
  bool is_variable(std::string_view name) const;
  static bool valid_name(std::string_view name);

 private:
  std::map<std::string, int, std::less<>> ops_;
};

/// Immutable first-order term. Copies share structure. The canonical printed
/// form is computed once at construction and defines equality and hashing.
class Term {
 public:
  Term(std::string head, std::vector<Term> args = {});

  const std::string& head() const { return node_->head; }
  std::span<const Term> args() const { return node_->args; }
  const Term& arg(std::size_t i) const { return node_->args[i]; }
  std::size_t arity() const { return node_->args.size(); }
  bool is_leaf() const { return node_->args.empty(); }

  /// Canonical prefix form.
  const std::string& text() const { return node_->text; }
  /// Number of operator occurrences (tree nodes).
  std::size_t size() const { return node_->size; }
  std::size_t hash() const { return node_->hash; }

  bool operator==(const Term& o) const {
    return node_ == o.node_ || (node_->hash == o.node_->hash && node_->text == o.node_->text);
  }
  bool operator<(const Term& o) const { return text() < o.text(); }

 private:
  struct Node {
    std::string head;
    std::vector<Term> args;
    std::string text;
    std::size_t size;
    std::size_t hash;
  };
  std::shared_ptr<const Node> node_;
};

struct TermHash {
  std::size_t operator()(const Term& t) const { return t.hash(); }
};

/// A sequent: assumptions and a conclusion. Free variables are implicitly
/// universally quantified over the whole sequent.
struct Goal {
  std::vector<Term> assumptions;
  Term conclusion;

  Goal(std::vector<Term> assumptions, Term conclusion)
      : assumptions(std::move(assumptions)), conclusion(std::move(conclusion)) {}
  explicit Goal(Term conclusion) : conclusion(std::move(conclusion)) {}

  /// `c` without assumptions, otherwise `a1 a2 |- c`.
  std::string text() const;
  bool operator==(const Goal& o) const;
};

struct GoalHash {
  std::size_t operator()(const Goal& g) const;
};

Term parse_term(std::string_view text, const Signature& sig);
std::string print_term(const Term& t);
std::size_t operator_count(const Term& t);

/// Accepts `c`, `|- c` and `a1 a2 |- c`.
Goal parse_goal(std::string_view text, const Signature& sig);
std::string print_goal(const Goal& g);

inline constexpr std::string_view kImplies = "==>";
inline constexpr std::string_view kEquals = "=";
inline constexpr std::string_view kAnd = "/\\";

/// Right-folds the assumptions into the conclusion with `==>`.
Term encode_goal(const Goal& g, const Signature& sig);

/// Variables of `t` in order of first occurrence in the printed form.
std::vector<std::string> free_variables(const Term& t, const Signature& sig);
/// Replaces every occurrence of the variable `var` by `by`.
Term substitute(const Term& t, std::string_view var, const Term& by);
bool contains_variable(const Term& t, std::string_view var);

/// Names of all operators occurring in `t`, each once, in pre-order.
std::vector<std::string> operator_names(const Term& t);

}  // namespace tacsearch
