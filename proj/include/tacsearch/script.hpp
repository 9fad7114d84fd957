#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tacsearch/env.hpp"

namespace tacsearch {

/// `name` or `name [T1, T2]`.
struct TacticCall {
  std::string name;
  std::optional<std::vector<std::string>> theorems;

  bool operator==(const TacticCall&) const = default;
};

inline constexpr std::string_view kNoOpTactic = "all_tac";

/// A tactic followed by tacticals, applied left to right:
/// `t1 >> t2` runs t2 on every goal left by t1, `t >| [s1, ..., sn]` runs si on
/// the i-th goal.
struct Script {
  struct Step {
    enum class Kind { Then, ThenList };
    Kind kind;
    TacticCall tactic;              // Then
    std::vector<Script> branches;   // ThenList

    bool operator==(const Step&) const = default;
  };

  TacticCall first;
  std::vector<Step> steps;

  static Script call(TacticCall c) { return Script{std::move(c), {}}; }
  /// `c >> rest`
  static Script then(TacticCall c, const Script& rest);
  /// `c >| [branches...]`
  static Script then_list(TacticCall c, std::vector<Script> branches);

  bool operator==(const Script&) const = default;
};

std::string render_call(const TacticCall& c);
std::string render_script(const Script& s);

class ScriptParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Script parse_script(std::string_view text);

struct ReplayResult {
  bool ok = false;
  std::vector<Goal> open_goals;
  std::string error;

  bool proves() const { return ok && open_goals.empty(); }
};

/// Runs a script through the environment. Theorem arguments must be among
/// `available`; `all_tac` leaves its goal unchanged.
ReplayResult replay(const Script& s, const Goal& g, const Environment& env, std::span<const Theorem> available,
                    int budget = kDefaultRewriteBudget);

/// Theorem names referenced anywhere in the script.
std::vector<std::string> referenced_theorems(const Script& s);

}  // namespace tacsearch
