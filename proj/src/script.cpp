#include "tacsearch/script.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_map>

namespace tacsearch {

Script Script::then(TacticCall c, const Script& rest) {
  Script s{std::move(c), {}};
  s.steps.push_back({Step::Kind::Then, rest.first, {}});
  s.steps.insert(s.steps.end(), rest.steps.begin(), rest.steps.end());
  return s;
}

Script Script::then_list(TacticCall c, std::vector<Script> branches) {
  Script s{std::move(c), {}};
  s.steps.push_back({Step::Kind::ThenList, {}, std::move(branches)});
  return s;
}

std::string render_call(const TacticCall& c) {
  std::string out = c.name;
  if (c.theorems) {
    out += " [";
    for (std::size_t i = 0; i < c.theorems->size(); ++i) {
      if (i) out += ", ";
      out += (*c.theorems)[i];
    }
    out += ']';
  }
  return out;
}

std::string render_script(const Script& s) {
  std::string out = render_call(s.first);
  for (const auto& step : s.steps) {
    if (step.kind == Script::Step::Kind::Then) {
      out += " >> ";
      out += render_call(step.tactic);
    } else {
      out += " >| [";
      for (std::size_t i = 0; i < step.branches.size(); ++i) {
        if (i) out += ", ";
        out += render_script(step.branches[i]);
      }
      out += ']';
    }
  }
  return out;
}

namespace {

class ScriptParser {
 public:
  explicit ScriptParser(std::string_view s) : s_(s) {}

  Script chain() {
    Script out{call(), {}};
    for (;;) {
      auto tok = peek();
      if (tok == ">>") {
        next();
        out.steps.push_back({Script::Step::Kind::Then, call(), {}});
      } else if (tok == ">|") {
        next();
        expect("[");
        std::vector<Script> branches;
        if (peek() != "]") {
          branches.push_back(chain());
          while (peek() == ",") {
            next();
            branches.push_back(chain());
          }
        }
        expect("]");
        out.steps.push_back({Script::Step::Kind::ThenList, {}, std::move(branches)});
      } else {
        return out;
      }
    }
  }

  void finish() {
    if (!peek().empty()) throw ScriptParseError("trailing input at offset " + std::to_string(pos_));
  }

 private:
  TacticCall call() {
    auto name = next();
    if (name.empty() || !is_name(name)) throw ScriptParseError("expected tactic name at offset " + std::to_string(pos_));
    TacticCall c{std::string(name), std::nullopt};
    if (peek() == "[") {
      next();
      c.theorems.emplace();
      if (peek() != "]") {
        c.theorems->push_back(std::string(expect_name()));
        while (peek() == ",") {
          next();
          c.theorems->push_back(std::string(expect_name()));
        }
      }
      expect("]");
    }
    return c;
  }

  static bool is_name(std::string_view t) { return t != "[" && t != "]" && t != "," && t != ">>" && t != ">|"; }

  std::string_view expect_name() {
    auto t = next();
    if (t.empty() || !is_name(t)) throw ScriptParseError("expected theorem name at offset " + std::to_string(pos_));
    return t;
  }

  void expect(std::string_view want) {
    auto t = next();
    if (t != want)
      throw ScriptParseError("expected '" + std::string(want) + "' at offset " + std::to_string(pos_));
  }

  std::string_view peek() {
    auto save = pos_;
    auto t = next();
    pos_ = save;
    return t;
  }

  std::string_view next() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (pos_ >= s_.size()) return {};
    const std::size_t b = pos_;
    char c = s_[pos_];
    if (c == '[' || c == ']' || c == ',') {
      ++pos_;
      return s_.substr(b, 1);
    }
    if (c == '>' && pos_ + 1 < s_.size() && (s_[pos_ + 1] == '>' || s_[pos_ + 1] == '|')) {
      pos_ += 2;
      return s_.substr(b, 2);
    }
    while (pos_ < s_.size()) {
      char d = s_[pos_];
      if (std::isspace(static_cast<unsigned char>(d)) || d == '[' || d == ']' || d == ',') break;
      if (d == '>' && pos_ + 1 < s_.size() && (s_[pos_ + 1] == '>' || s_[pos_ + 1] == '|')) break;
      ++pos_;
    }
    return s_.substr(b, pos_ - b);
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

struct Replayer {
  const Environment& env;
  std::unordered_map<std::string, const Theorem*> theorems;
  int budget;
  std::string error;

  bool apply(const TacticCall& c, const Goal& g, std::vector<Goal>& out) {
    if (c.name == kNoOpTactic) {
      out.push_back(g);
      return true;
    }
    const Tactic* t = env.find_tactic(c.name);
    if (!t) return fail("unknown tactic " + c.name);
    std::vector<Theorem> args;
    if (c.theorems) {
      for (const auto& n : *c.theorems) {
        auto it = theorems.find(n);
        if (it == theorems.end()) return fail("theorem " + n + " is not available");
        args.push_back(*it->second);
      }
    }
    auto outcome = env.apply(*t, args, g, budget);
    if (outcome.is_failed()) return fail(render_call(c) + " failed on " + g.text() + ": " + outcome.reason);
    out.insert(out.end(), outcome.goals.begin(), outcome.goals.end());
    return true;
  }

  bool run(const Script& s, const Goal& g, std::vector<Goal>& out) {
    std::vector<Goal> goals;
    if (!apply(s.first, g, goals)) return false;
    for (const auto& step : s.steps) {
      std::vector<Goal> next;
      if (step.kind == Script::Step::Kind::Then) {
        for (const auto& h : goals)
          if (!apply(step.tactic, h, next)) return false;
      } else {
        if (step.branches.size() != goals.size())
          return fail(">| expects " + std::to_string(step.branches.size()) + " goals, got " +
                      std::to_string(goals.size()));
        for (std::size_t i = 0; i < goals.size(); ++i)
          if (!run(step.branches[i], goals[i], next)) return false;
      }
      goals = std::move(next);
    }
    out.insert(out.end(), goals.begin(), goals.end());
    return true;
  }

  bool fail(std::string why) {
    error = std::move(why);
    return false;
  }
};

void collect_theorems(const Script& s, std::vector<std::string>& out) {
  auto add = [&](const TacticCall& c) {
    if (!c.theorems) return;
    for (const auto& n : *c.theorems)
      if (std::find(out.begin(), out.end(), n) == out.end()) out.push_back(n);
  };
  add(s.first);
  for (const auto& step : s.steps) {
    add(step.tactic);
    for (const auto& b : step.branches) collect_theorems(b, out);
  }
}

}  // namespace

Script parse_script(std::string_view text) {
  ScriptParser p(text);
  Script s = p.chain();
  p.finish();
  return s;
}

ReplayResult replay(const Script& s, const Goal& g, const Environment& env, std::span<const Theorem> available,
                    int budget) {
  Replayer r{env, {}, budget, {}};
  for (const auto& th : available) r.theorems.emplace(th.name, &th);
  ReplayResult res;
  res.ok = r.run(s, g, res.open_goals);
  if (!res.ok) {
    res.error = r.error;
    res.open_goals.clear();
  }
  return res;
}

std::vector<std::string> referenced_theorems(const Script& s) {
  std::vector<std::string> out;
  collect_theorems(s, out);
  return out;
}

}  // namespace tacsearch
