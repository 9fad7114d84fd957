#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tacsearch/term.hpp"

namespace tacsearch {

struct Theorem {
  std::string name;
  Goal statement;
  /// Position in the corpus; built-in axioms use -1.
  int index = -1;
};

enum class TacticKind { Solver, Rewrite, Induct, Kernel };

struct Tactic {
  std::string name;
  TacticKind kind;
  bool takes_theorem_list = false;
  /// A theorem-list tactic t with this flag is tried as t[x1], ..., t[xn]
  /// rather than t[x1, ..., xn].
  bool split_arguments = false;
};

struct TacticOutcome {
  enum class Kind { Proved, Progress, Failed };
  Kind kind = Kind::Failed;
  std::vector<Goal> goals;
  std::string reason;

  static TacticOutcome proved() { return {Kind::Proved, {}, {}}; }
  static TacticOutcome progress(std::vector<Goal> goals) { return {Kind::Progress, std::move(goals), {}}; }
  static TacticOutcome failed(std::string why) { return {Kind::Failed, {}, std::move(why)}; }

  bool is_proved() const { return kind == Kind::Proved; }
  bool is_progress() const { return kind == Kind::Progress; }
  bool is_failed() const { return kind == Kind::Failed; }
};

inline constexpr int kDefaultRewriteBudget = 1000;
/// Rewriting stops as exhausted and induction fails once a term grows beyond
/// this many nodes.
inline constexpr std::size_t kMaxTermSize = 400;

/// Peano arithmetic with SUM and a handful of function constants applied via
/// `@`. Immutable; all member functions are pure.
class Environment {
 public:
  Environment();

  const Signature& signature() const { return sig_; }
  const std::vector<Theorem>& axioms() const { return axioms_; }
  const std::vector<Tactic>& tactics() const { return tactics_; }
  const Tactic* find_tactic(std::string_view name) const;
  const Theorem* find_axiom(std::string_view name) const;

  TacticOutcome apply(const Tactic& t, std::span<const Theorem> args, const Goal& g,
                      int budget = kDefaultRewriteBudget) const;

  Goal parse_goal(std::string_view text) const { return tacsearch::parse_goal(text, sig_); }
  Term parse_term(std::string_view text) const { return tacsearch::parse_term(text, sig_); }

 private:
  Signature sig_;
  std::vector<Theorem> axioms_;
  std::vector<Tactic> tactics_;
};

/// Value of a variable-free nat term; nullopt if it cannot be evaluated, the
/// step budget runs out or the value overflows.
std::optional<std::uint64_t> evaluate_nat(const Term& t, int& budget);
/// Truth value of a variable-free formula built from `=`, `==>`, `/\`.
std::optional<bool> evaluate_formula(const Term& t, int& budget);

/// True iff both sides of an equation normalize to the same commutative
/// semiring polynomial. Subterms outside +, *, SUC and numerals are atoms.
bool ring_equal(const Term& lhs, const Term& rhs);
/// True iff lhs - rhs is a rational linear combination of the differences of
/// the given equations, all read as polynomials over the integers.
bool ring_equal_using(const Term& lhs, const Term& rhs, std::span<const Term> equations);

/// Leftmost-outermost rewriting to normal form.
struct RewriteRule {
  Term lhs;
  Term rhs;
  /// Literal rules (from assumptions) match only syntactically, without
  /// instantiating variables.
  bool literal = false;
};

struct RewriteResult {
  Term term;
  int steps = 0;
  bool exhausted = false;
};

/// Builds a rule from an assumption-free equality theorem; nullopt if the
/// statement is not a usable left-to-right equation.
std::optional<RewriteRule> rule_from_theorem(const Theorem& th, const Signature& sig);
/// Rules whose sides are equal up to a renaming of variables.
bool is_permutative(const RewriteRule& r, const Signature& sig);
RewriteResult rewrite_normalize(const Term& t, std::span<const RewriteRule> rules, const Signature& sig,
                                int budget);

using Corpus = std::vector<Theorem>;

/// `name<TAB>goal-text` per line; index = line order among theorems.
Corpus read_corpus(const std::string& path, const Signature& sig);
Corpus parse_corpus(std::string_view text, const Signature& sig);
void write_corpus(const Corpus& corpus, const std::string& path);

struct AvailableItems {
  std::vector<Theorem> theorems;
  std::span<const Tactic> tactics;
};

/// Axioms plus the corpus theorems strictly before `index`. `index` may equal
/// the corpus size, which makes the whole corpus available.
AvailableItems available_items(const Environment& env, const Corpus& corpus, std::size_t index);

}  // namespace tacsearch
