#include "tacsearch/env.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

namespace tacsearch {

namespace {

constexpr std::uint64_t kMaxValue = std::uint64_t{1} << 62;

std::optional<std::uint64_t> checked_add(std::uint64_t a, std::uint64_t b) {
  if (a > kMaxValue - b) return std::nullopt;
  return a + b;
}

std::optional<std::uint64_t> checked_mul(std::uint64_t a, std::uint64_t b) {
  if (a != 0 && b > kMaxValue / a) return std::nullopt;
  return a * b;
}

using UnaryFn = std::function<std::optional<std::uint64_t>(std::uint64_t)>;

const std::unordered_map<std::string, UnaryFn>& function_constants() {
  static const std::unordered_map<std::string, UnaryFn> fns = {
      {"I", [](std::uint64_t x) -> std::optional<std::uint64_t> { return x; }},
      {"D", [](std::uint64_t x) { return checked_add(x, x); }},
      {"S", [](std::uint64_t x) { return checked_add(x, 1); }},
      {"Z", [](std::uint64_t) -> std::optional<std::uint64_t> { return 0; }},
      {"SQ", [](std::uint64_t x) { return checked_mul(x, x); }},
  };
  return fns;
}

bool is_equation(const Term& t) { return t.head() == kEquals && t.arity() == 2; }

bool is_reflexive(const Term& t) { return is_equation(t) && t.arg(0) == t.arg(1); }

// ---- commutative semiring normal form ----

using Monomial = std::vector<std::string>;  // sorted atom keys
using Polynomial = std::map<Monomial, std::uint64_t>;

bool poly_add_into(Polynomial& acc, const Polynomial& p) {
  for (const auto& [m, c] : p) {
    auto sum = checked_add(acc[m], c);
    if (!sum) return false;
    acc[m] = *sum;
  }
  return true;
}

std::optional<Polynomial> to_polynomial(const Term& t) {
  Polynomial p;
  if (t.is_leaf() && Signature::is_numeral(t.head())) {
    if (t.head().size() > 18) return std::nullopt;
    auto v = std::stoull(t.head());
    if (v != 0) p[{}] = v;
    return p;
  }
  if (t.head() == "SUC" && t.arity() == 1) {
    auto a = to_polynomial(t.arg(0));
    if (!a) return std::nullopt;
    if (!poly_add_into(*a, Polynomial{{Monomial{}, 1}})) return std::nullopt;
    return a;
  }
  if (t.head() == "+" && t.arity() == 2) {
    auto a = to_polynomial(t.arg(0));
    auto b = to_polynomial(t.arg(1));
    if (!a || !b || !poly_add_into(*a, *b)) return std::nullopt;
    return a;
  }
  if (t.head() == "*" && t.arity() == 2) {
    auto a = to_polynomial(t.arg(0));
    auto b = to_polynomial(t.arg(1));
    if (!a || !b) return std::nullopt;
    for (const auto& [ma, ca] : *a) {
      for (const auto& [mb, cb] : *b) {
        Monomial m;
        m.reserve(ma.size() + mb.size());
        std::merge(ma.begin(), ma.end(), mb.begin(), mb.end(), std::back_inserter(m));
        auto c = checked_mul(ca, cb);
        if (!c) return std::nullopt;
        auto s = checked_add(p[m], *c);
        if (!s) return std::nullopt;
        p[m] = *s;
      }
    }
    return p;
  }
  p[{t.text()}] = 1;
  return p;
}

// ---- matching and rewriting ----

using Bindings = std::vector<std::pair<std::string, Term>>;

bool match(const Term& pat, const Term& t, Bindings& b, const Signature& sig) {
  if (pat.is_leaf() && sig.is_variable(pat.head())) {
    for (const auto& [v, val] : b)
      if (v == pat.head()) return val == t;
    b.emplace_back(pat.head(), t);
    return true;
  }
  if (pat.head() != t.head() || pat.arity() != t.arity()) return false;
  for (std::size_t i = 0; i < pat.arity(); ++i)
    if (!match(pat.arg(i), t.arg(i), b, sig)) return false;
  return true;
}

Term instantiate(const Term& t, const Bindings& b, const Signature& sig) {
  if (t.is_leaf()) {
    if (sig.is_variable(t.head()))
      for (const auto& [v, val] : b)
        if (v == t.head()) return val;
    return t;
  }
  std::vector<Term> args;
  args.reserve(t.arity());
  for (const auto& a : t.args()) args.push_back(instantiate(a, b, sig));
  return Term(t.head(), std::move(args));
}

std::optional<Term> rewrite_step(const Term& t, std::span<const RewriteRule> rules, const Signature& sig) {
  for (const auto& r : rules) {
    if (r.literal) {
      if (r.lhs == t) return r.rhs;
      continue;
    }
    if (r.lhs.head() != t.head() || r.lhs.arity() != t.arity()) continue;
    Bindings b;
    if (match(r.lhs, t, b, sig)) return instantiate(r.rhs, b, sig);
  }
  for (std::size_t i = 0; i < t.arity(); ++i) {
    if (auto n = rewrite_step(t.arg(i), rules, sig)) {
      std::vector<Term> args(t.args().begin(), t.args().end());
      args[i] = std::move(*n);
      return Term(t.head(), std::move(args));
    }
  }
  return std::nullopt;
}

void collect_vars(const Term& t, const Signature& sig, std::vector<std::string>& out) {
  for (auto& v : free_variables(t, sig))
    if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
}

// Renames variables to positional placeholders so that permutative rules can be
// detected by comparing the shapes of both sides.
Term skeleton(const Term& t, const Signature& sig) {
  if (t.is_leaf()) return sig.is_variable(t.head()) ? Term("?") : t;
  std::vector<Term> args;
  for (const auto& a : t.args()) args.push_back(skeleton(a, sig));
  return Term(t.head(), std::move(args));
}

TacticOutcome finish_rewrite(const Goal& g, const RewriteResult& r) {
  if (r.exhausted) return TacticOutcome::failed("budget");
  if (r.steps == 0 || r.term == g.conclusion) return TacticOutcome::failed("no change");
  if (is_reflexive(r.term)) return TacticOutcome::proved();
  return TacticOutcome::progress({Goal(g.assumptions, r.term)});
}

bool in_assumptions(const Goal& g) {
  return std::find(g.assumptions.begin(), g.assumptions.end(), g.conclusion) != g.assumptions.end();
}

}  // namespace

std::optional<std::uint64_t> evaluate_nat(const Term& t, int& budget) {
  if (--budget < 0) return std::nullopt;
  const auto& h = t.head();
  if (t.is_leaf()) {
    if (!Signature::is_numeral(h) || h.size() > 18) return std::nullopt;
    auto v = std::stoull(h);
    if (v > kMaxValue) return std::nullopt;
    return v;
  }
  if (h == "SUC" && t.arity() == 1) {
    auto a = evaluate_nat(t.arg(0), budget);
    return a ? checked_add(*a, 1) : std::nullopt;
  }
  if ((h == "+" || h == "*") && t.arity() == 2) {
    auto a = evaluate_nat(t.arg(0), budget);
    if (!a) return std::nullopt;
    auto b = evaluate_nat(t.arg(1), budget);
    if (!b) return std::nullopt;
    return h == "+" ? checked_add(*a, *b) : checked_mul(*a, *b);
  }
  if (h == "@" && t.arity() == 2) {
    if (!t.arg(0).is_leaf()) return std::nullopt;
    auto it = function_constants().find(t.arg(0).head());
    if (it == function_constants().end()) return std::nullopt;
    auto x = evaluate_nat(t.arg(1), budget);
    return x ? it->second(*x) : std::nullopt;
  }
  if (h == "SUM" && t.arity() == 2) {
    auto n = evaluate_nat(t.arg(0), budget);
    if (!n || !t.arg(1).is_leaf()) return std::nullopt;
    auto it = function_constants().find(t.arg(1).head());
    if (it == function_constants().end()) return std::nullopt;
    if (*n > static_cast<std::uint64_t>(std::max(budget, 0))) return std::nullopt;
    std::uint64_t acc = 0;
    for (std::uint64_t x = 0; x < *n; ++x) {
      if (--budget < 0) return std::nullopt;
      auto fx = it->second(x);
      if (!fx) return std::nullopt;
      auto s = checked_add(acc, *fx);
      if (!s) return std::nullopt;
      acc = *s;
    }
    return acc;
  }
  return std::nullopt;
}

std::optional<bool> evaluate_formula(const Term& t, int& budget) {
  if (--budget < 0) return std::nullopt;
  if (t.arity() != 2) return std::nullopt;
  if (t.head() == kEquals) {
    auto a = evaluate_nat(t.arg(0), budget);
    auto b = a ? evaluate_nat(t.arg(1), budget) : std::nullopt;
    if (!a || !b) return std::nullopt;
    return *a == *b;
  }
  if (t.head() == kImplies || t.head() == kAnd) {
    auto a = evaluate_formula(t.arg(0), budget);
    auto b = a ? evaluate_formula(t.arg(1), budget) : std::nullopt;
    if (!a || !b) return std::nullopt;
    return t.head() == kAnd ? (*a && *b) : (!*a || *b);
  }
  return std::nullopt;
}

bool ring_equal(const Term& lhs, const Term& rhs) {
  auto a = to_polynomial(lhs);
  auto b = to_polynomial(rhs);
  return a && b && *a == *b;
}

namespace {

using Row = std::map<Monomial, __int128>;

constexpr __int128 kRowLimit = __int128{1} << 100;

std::optional<Row> difference(const Term& lhs, const Term& rhs) {
  auto a = to_polynomial(lhs);
  auto b = to_polynomial(rhs);
  if (!a || !b) return std::nullopt;
  Row r;
  for (const auto& [m, c] : *a) r[m] += static_cast<__int128>(c);
  for (const auto& [m, c] : *b) r[m] -= static_cast<__int128>(c);
  std::erase_if(r, [](const auto& e) { return e.second == 0; });
  return r;
}

__int128 gcd128(__int128 a, __int128 b) {
  if (a < 0) a = -a;
  if (b < 0) b = -b;
  while (b != 0) {
    auto t = a % b;
    a = b;
    b = t;
  }
  return a;
}

struct Pivoted {
  Monomial pivot;
  Row row;
};

// Cancels the pivot of `basis` in `r`; false on coefficient overflow.
bool eliminate(Row& r, const Pivoted& basis) {
  auto it = r.find(basis.pivot);
  if (it == r.end()) return true;
  const __int128 pc = basis.row.at(basis.pivot);
  const __int128 g = gcd128(pc, it->second);
  const __int128 mr = pc / g, mb = it->second / g;
  Row out;
  for (const auto& [m, c] : r) out[m] += c * mr;
  for (const auto& [m, c] : basis.row) out[m] -= c * mb;
  __int128 common = 0;
  for (auto e = out.begin(); e != out.end();) {
    if (e->second == 0) {
      e = out.erase(e);
      continue;
    }
    if (e->second > kRowLimit || e->second < -kRowLimit) return false;
    common = gcd128(common, e->second);
    ++e;
  }
  if (common > 1)
    for (auto& [m, c] : out) c /= common;
  r = std::move(out);
  return true;
}

bool reduce(Row& r, const std::vector<Pivoted>& basis) {
  for (const auto& b : basis)
    if (!eliminate(r, b)) return false;
  return true;
}

}  // namespace

bool ring_equal_using(const Term& lhs, const Term& rhs, std::span<const Term> equations) {
  auto target = difference(lhs, rhs);
  if (!target) return false;
  if (target->empty()) return true;
  // Each pivot occurs only in its own row, so one pass of reduce suffices.
  std::vector<Pivoted> basis;
  for (const auto& e : equations) {
    if (!is_equation(e)) continue;
    auto r = difference(e.arg(0), e.arg(1));
    if (!r || !reduce(*r, basis) || r->empty()) continue;
    Pivoted p{r->begin()->first, std::move(*r)};
    for (auto& b : basis)
      if (!eliminate(b.row, p)) return false;
    basis.push_back(std::move(p));
  }
  return reduce(*target, basis) && target->empty();
}

std::optional<RewriteRule> rule_from_theorem(const Theorem& th, const Signature& sig) {
  const auto& c = th.statement.conclusion;
  if (!th.statement.assumptions.empty() || !is_equation(c)) return std::nullopt;
  const Term& lhs = c.arg(0);
  const Term& rhs = c.arg(1);
  if (lhs.is_leaf() && sig.is_variable(lhs.head())) return std::nullopt;
  if (lhs == rhs) return std::nullopt;
  std::vector<std::string> lv;
  collect_vars(lhs, sig, lv);
  for (const auto& v : free_variables(rhs, sig))
    if (std::find(lv.begin(), lv.end(), v) == lv.end()) return std::nullopt;
  return RewriteRule{lhs, rhs, false};
}

bool is_permutative(const RewriteRule& r, const Signature& sig) {
  return !r.literal && skeleton(r.lhs, sig) == skeleton(r.rhs, sig);
}

RewriteResult rewrite_normalize(const Term& t, std::span<const RewriteRule> rules, const Signature& sig,
                                int budget) {
  RewriteResult res{t, 0, false};
  while (auto next = rewrite_step(res.term, rules, sig)) {
    if (res.steps >= budget || next->size() > kMaxTermSize) {
      res.exhausted = true;
      break;
    }
    res.term = std::move(*next);
    ++res.steps;
  }
  return res;
}

Environment::Environment() : sig_(Signature::standard()) {
  const std::pair<const char*, const char*> axioms[] = {
      {"ADD_0", "(= (+ 0 x) x)"},
      {"ADD_SUC", "(= (+ (SUC x) y) (SUC (+ x y)))"},
      {"MULT_0", "(= (* 0 x) 0)"},
      {"MULT_SUC", "(= (* (SUC x) y) (+ (* x y) y))"},
      {"SUM_0", "(= (SUM 0 f) 0)"},
      {"SUM_SUC", "(= (SUM (SUC n) f) (+ (SUM n f) (@ f n)))"},
      {"I_DEF", "(= (@ I x) x)"},
      {"D_DEF", "(= (@ D x) (+ x x))"},
      {"S_DEF", "(= (@ S x) (SUC x))"},
      {"Z_DEF", "(= (@ Z x) 0)"},
      {"SQ_DEF", "(= (@ SQ x) (* x x))"},
  };
  for (const auto& [name, text] : axioms) axioms_.push_back({name, Goal(tacsearch::parse_term(text, sig_)), -1});

  tactics_ = {
      {"arith_solver", TacticKind::Solver, false, false},
      {"ring_solver", TacticKind::Solver, false, false},
      {"conj_tac", TacticKind::Kernel, false, false},
      {"strip_tac", TacticKind::Kernel, false, false},
      {"cong_tac", TacticKind::Kernel, false, false},
      {"simp_tac", TacticKind::Rewrite, true, false},
      {"asm_rewrite_tac", TacticKind::Rewrite, false, false},
      {"rewrite_tac", TacticKind::Rewrite, true, true},
      {"Induct", TacticKind::Induct, false, false},
  };
}

const Tactic* Environment::find_tactic(std::string_view name) const {
  for (const auto& t : tactics_)
    if (t.name == name) return &t;
  return nullptr;
}

const Theorem* Environment::find_axiom(std::string_view name) const {
  for (const auto& a : axioms_)
    if (a.name == name) return &a;
  return nullptr;
}

TacticOutcome Environment::apply(const Tactic& t, std::span<const Theorem> args, const Goal& g,
                                 int budget) const {
  if (!args.empty() && !t.takes_theorem_list) return TacticOutcome::failed("unexpected arguments");
  if (budget <= 0) return TacticOutcome::failed("budget");
  const Term& c = g.conclusion;

  if (t.name == "arith_solver") {
    if (in_assumptions(g)) return TacticOutcome::proved();
    int b = budget;
    auto v = evaluate_formula(c, b);
    if (!v) return TacticOutcome::failed(b < 0 ? "budget" : "not evaluable");
    return *v ? TacticOutcome::proved() : TacticOutcome::failed("false");
  }
  if (t.name == "ring_solver") {
    if (in_assumptions(g)) return TacticOutcome::proved();
    if (!is_equation(c)) return TacticOutcome::failed("not an equation");
    return ring_equal_using(c.arg(0), c.arg(1), g.assumptions) ? TacticOutcome::proved()
                                                               : TacticOutcome::failed("not a ring identity");
  }
  if (t.name == "rewrite_tac") {
    if (args.empty()) return TacticOutcome::failed("no theorems");
    std::vector<RewriteRule> rules;
    for (const auto& th : args) {
      auto r = rule_from_theorem(th, sig_);
      if (!r) return TacticOutcome::failed("not an equation");
      rules.push_back(std::move(*r));
    }
    return finish_rewrite(g, rewrite_normalize(c, rules, sig_, budget));
  }
  if (t.name == "simp_tac") {
    std::vector<RewriteRule> rules;
    for (const auto& th : args) {
      auto r = rule_from_theorem(th, sig_);
      if (r && !is_permutative(*r, sig_)) rules.push_back(std::move(*r));
    }
    auto res = rewrite_normalize(c, rules, sig_, budget);
    if (res.exhausted) return TacticOutcome::failed("budget");
    if (is_equation(res.term) && ring_equal(res.term.arg(0), res.term.arg(1))) return TacticOutcome::proved();
    return finish_rewrite(g, res);
  }
  if (t.name == "asm_rewrite_tac") {
    std::vector<RewriteRule> rules;
    for (const auto& a : g.assumptions)
      if (is_equation(a) && a.arg(0) != a.arg(1)) rules.push_back({a.arg(0), a.arg(1), true});
    if (rules.empty()) return TacticOutcome::failed("no assumption equations");
    return finish_rewrite(g, rewrite_normalize(c, rules, sig_, budget));
  }
  if (t.name == "strip_tac") {
    if (c.head() != kImplies || c.arity() != 2) return TacticOutcome::failed("not an implication");
    auto assumptions = g.assumptions;
    if (std::find(assumptions.begin(), assumptions.end(), c.arg(0)) == assumptions.end())
      assumptions.push_back(c.arg(0));
    return TacticOutcome::progress({Goal(std::move(assumptions), c.arg(1))});
  }
  if (t.name == "conj_tac") {
    if (c.head() != kAnd || c.arity() != 2) return TacticOutcome::failed("not a conjunction");
    std::vector<Goal> out{Goal(g.assumptions, c.arg(0))};
    if (c.arg(1) != c.arg(0)) out.emplace_back(g.assumptions, c.arg(1));
    return TacticOutcome::progress(std::move(out));
  }
  if (t.name == "cong_tac") {
    if (!is_equation(c)) return TacticOutcome::failed("not an equation");
    const Term& l = c.arg(0);
    const Term& r = c.arg(1);
    if (l.is_leaf() || l.head() != r.head() || l.arity() != r.arity()) return TacticOutcome::failed("no common head");
    if (l == r) return TacticOutcome::proved();
    std::vector<Goal> out;
    for (std::size_t i = 0; i < l.arity(); ++i) {
      if (l.arg(i) == r.arg(i)) continue;
      Goal sub(g.assumptions, Term(std::string(kEquals), {l.arg(i), r.arg(i)}));
      if (std::find(out.begin(), out.end(), sub) == out.end()) out.push_back(std::move(sub));
    }
    return TacticOutcome::progress(std::move(out));
  }
  if (t.name == "Induct") {
    auto vars = free_variables(c, sig_);
    if (vars.empty()) return TacticOutcome::failed("no induction variable");
    const std::string& v = vars.front();
    // Assumptions that mention the variable become part of the induction
    // predicate; the others stay fixed.
    std::vector<Term> fixed, dependent;
    for (const auto& a : g.assumptions) (contains_variable(a, v) ? dependent : fixed).push_back(a);
    Term pred = encode_goal(Goal(dependent, c), sig_);
    if (2 * pred.size() > kMaxTermSize) return TacticOutcome::failed("term too large");
    Goal base(fixed, substitute(pred, v, Term("0")));
    auto step_assumptions = fixed;
    step_assumptions.push_back(pred);
    Goal step(std::move(step_assumptions), substitute(pred, v, Term("SUC", {Term(v)})));
    return TacticOutcome::progress({std::move(base), std::move(step)});
  }
  return TacticOutcome::failed("unknown tactic " + t.name);
}

Corpus parse_corpus(std::string_view text, const Signature& sig) {
  Corpus corpus;
  std::set<std::string> names;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw std::runtime_error("corpus line " + std::to_string(lineno) + ": missing TAB");
    std::string name = line.substr(0, tab);
    if (!names.insert(name).second)
      throw std::runtime_error("corpus line " + std::to_string(lineno) + ": duplicate name " + name);
    try {
      corpus.push_back({name, parse_goal(line.substr(tab + 1), sig), static_cast<int>(corpus.size())});
    } catch (const ParseError& e) {
      throw std::runtime_error("corpus line " + std::to_string(lineno) + " (" + name + "): " + e.what());
    }
  }
  return corpus;
}

Corpus read_corpus(const std::string& path, const Signature& sig) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_corpus(ss.str(), sig);
}

void write_corpus(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write corpus " + path);
  for (const auto& th : corpus) out << th.name << '\t' << th.statement.text() << '\n';
}

AvailableItems available_items(const Environment& env, const Corpus& corpus, std::size_t index) {
  if (index > corpus.size()) throw std::out_of_range("theorem index out of range");
  AvailableItems items{env.axioms(), env.tactics()};
  items.theorems.insert(items.theorems.end(), corpus.begin(),
                        corpus.begin() + static_cast<std::ptrdiff_t>(index));
  return items;
}

}  // namespace tacsearch
