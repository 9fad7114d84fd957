#include "tacsearch/corpus.hpp"

#include <functional>
#include <random>
#include <unordered_set>

namespace tacsearch {

bool ground_valid(const Goal& g, const Signature& sig, std::uint64_t max_value) {
  const Term formula = encode_goal(g, sig);
  const auto vars = free_variables(formula, sig);
  std::vector<std::uint64_t> vals(vars.size(), 0);
  for (;;) {
    Term inst = formula;
    for (std::size_t i = 0; i < vars.size(); ++i) inst = substitute(inst, vars[i], Term(std::to_string(vals[i])));
    int budget = 1'000'000;
    auto v = evaluate_formula(inst, budget);
    if (!v || !*v) return false;
    std::size_t k = 0;
    while (k < vals.size() && vals[k] == max_value) vals[k++] = 0;
    if (k == vals.size()) return true;
    ++vals[k];
  }
}

namespace {

const char* const kRingLemmas[][2] = {
    {"ADD_0R", "(= (+ x 0) x)"},
    {"ADD_SUC_R", "(= (+ x (SUC y)) (SUC (+ x y)))"},
    {"ADD_COMM", "(= (+ x y) (+ y x))"},
    {"ADD_ASSOC", "(= (+ x (+ y z)) (+ (+ x y) z))"},
    {"MULT_0R", "(= (* x 0) 0)"},
    {"MULT_SUC_R", "(= (* x (SUC y)) (+ x (* x y)))"},
    {"MULT_COMM", "(= (* x y) (* y x))"},
    {"MULT_ASSOC", "(= (* x (* y z)) (* (* x y) z))"},
    {"LEFT_ADD_DISTRIB", "(= (* x (+ y z)) (+ (* x y) (* x z)))"},
    {"RIGHT_ADD_DISTRIB", "(= (* (+ x y) z) (+ (* x z) (* y z)))"},
    {"MULT_1", "(= (* 1 x) x)"},
    {"MULT_1R", "(= (* x 1) x)"},
    {"MULT_2", "(= (* 2 x) (+ x x))"},
    {"ADD_1", "(= (+ x 1) (SUC x))"},
    {"ADD_SUC_SWAP", "(= (+ (SUC x) y) (+ x (SUC y)))"},
};

const char* const kSumFacts[][2] = {
    {"SUM_Z", "(= (SUM n Z) 0)"},
    {"SUM_Z_SUC", "(= (SUM (SUC n) Z) 0)"},
    {"SUM_SUC_I", "(= (SUM (SUC n) I) (+ (SUM n I) n))"},
    {"SUM_ADD_1_I", "(= (SUM (+ n 1) I) (+ (SUM n I) n))"},
    {"SUM_D", "(= (SUM n D) (* 2 (SUM n I)))"},
    {"SUM_S", "(= (SUM n S) (+ (SUM n I) n))"},
    {"SUM_I_DOUBLE", "(= (+ (SUM n I) (SUM n I)) (SUM n D))"},
    {"GAUSS_SUC", "(= (* 2 (SUM (SUC n) I)) (* n (SUC n)))"},
    {"GAUSS_SQ", "(= (+ (* 2 (SUM n I)) n) (* n n))"},
    {"SUM_D_SUC", "(= (SUM (SUC n) D) (* n (SUC n)))"},
    {"SUM_D_ADD", "(= (+ (SUM n D) (* 2 n)) (* n (SUC n)))"},
    {"SUM_Z_ADD_1", "(= (SUM (+ n 1) Z) 0)"},
    {"SUM_D_ADD_1", "(= (SUM (+ n 1) D) (* n (+ n 1)))"},
    {"SUM_S_SUC", "(= (SUM (SUC n) S) (+ (SUM n S) (SUC n)))"},
    {"SUM_S_GAUSS", "(= (* 2 (SUM (SUC n) S)) (* (SUC n) (+ n 2)))"},
    {"SUM_S_GAUSS_ADD_1", "(= (* 2 (SUM (+ n 1) S)) (* (+ n 1) (+ n 2)))"},
    {"SUM_Z_SUC_SUC", "(= (SUM (SUC (SUC n)) Z) 0)"},
    {"GAUSS_ADD_2", "(= (* 2 (SUM (+ n 2) I)) (* (+ n 1) (+ n 2)))"},
    {"SUM_SQ", "(= (* 6 (SUM (SUC n) SQ)) (* n (* (SUC n) (+ (* 2 n) 1))))"},
    {"SUM_SQ_ADD_1", "(= (* 6 (SUM (+ n 1) SQ)) (* n (* (+ n 1) (+ (* 2 n) 1))))"},
    {"SUM_D_TRIPLE", "(= (* 3 (SUM n D)) (* 6 (SUM n I)))"},
    {"SUM_S_D", "(= (+ (SUM n S) (SUM n S)) (+ (SUM n D) (* 2 n)))"},
};

class Generator {
 public:
  Generator(const Environment& env, std::uint64_t seed) : env_(env), rng_(seed) {}

  std::size_t pick(std::size_t n) { return static_cast<std::size_t>(rng_() % n); }

  Term parse(std::string_view s) const { return tacsearch::parse_term(s, env_.signature()); }

  Term var() { return Term(std::string(1, "xyz"[pick(3)])); }
  Term num(std::size_t max) { return Term(std::to_string(pick(max + 1))); }

  /// Small arithmetic term over x, y, z.
  Term filler() {
    switch (pick(7)) {
      case 0:
      case 1:
      case 2: return var();
      case 3: return num(3);
      case 4: return Term("SUC", {var()});
      case 5: return Term("+", {var(), num(2)});
      default: return Term("*", {num(3), var()});
    }
  }

  Term ground(int depth) {
    if (depth == 0) return num(4);
    switch (pick(6)) {
      case 0: return Term("+", {ground(depth - 1), ground(depth - 1)});
      case 1: return Term("*", {ground(depth - 1), ground(depth - 1)});
      case 2: return Term("SUC", {ground(depth - 1)});
      case 3: return Term("@", {Term(fn()), ground(depth - 1)});
      case 4: return Term("SUM", {num(4), Term(fn())});
      default: return num(4);
    }
  }

  std::string fn() {
    static const char* const fs[] = {"I", "D", "S", "Z", "SQ"};
    return fs[pick(5)];
  }

  static Term unfold(const std::string& f, const Term& a) {
    if (f == "I") return a;
    if (f == "D") return Term("*", {Term("2"), a});
    if (f == "S") return Term("+", {a, Term("1")});
    if (f == "Z") return Term("0");
    return Term("*", {a, a});
  }

  Term ring_instance() {
    const Term a = filler(), b = filler(), c = filler();
    auto two = [](Term l, Term r) { return Term("=", {std::move(l), std::move(r)}); };
    switch (pick(10)) {
      case 0: return two(Term("+", {a, b}), Term("+", {b, a}));
      case 1: return two(Term("*", {a, b}), Term("*", {b, a}));
      case 2: return two(Term("+", {a, Term("+", {b, c})}), Term("+", {Term("+", {a, b}), c}));
      case 3: return two(Term("*", {a, Term("+", {b, c})}), Term("+", {Term("*", {a, b}), Term("*", {a, c})}));
      case 4: return two(Term("*", {Term("+", {a, b}), c}), Term("+", {Term("*", {a, c}), Term("*", {b, c})}));
      case 5: return two(Term("*", {Term("SUC", {a}), b}), Term("+", {Term("*", {a, b}), b}));
      case 6: return two(Term("+", {Term("SUC", {a}), b}), Term("SUC", {Term("+", {a, b})}));
      case 7: {
        Term s = Term("+", {a, b});
        return two(Term("*", {s, s}),
                   Term("+", {Term("+", {Term("*", {a, a}), Term("*", {Term("2"), Term("*", {a, b})})}),
                              Term("*", {b, b})}));
      }
      case 8: return two(Term("+", {a, a}), Term("*", {Term("2"), a}));
      default: return two(Term("*", {a, Term("SUC", {b})}), Term("+", {a, Term("*", {a, b})}));
    }
  }

  Term ground_fact() {
    Term e = ground(2);
    int budget = 100000;
    auto v = evaluate_nat(e, budget);
    if (!v || *v > 1000) return Term("0");
    return Term("=", {e, Term(std::to_string(*v))});
  }

  Term definitional() {
    const std::string f = fn(), g = fn();
    const Term a = filler(), b = filler();
    switch (pick(4)) {
      case 0: return Term("=", {Term("@", {Term(f), a}), unfold(f, a)});
      case 1: return Term("=", {Term("@", {Term(f), Term("@", {Term(g), a})}), unfold(f, unfold(g, a))});
      case 2:
        return Term("=", {Term("+", {Term("@", {Term(f), a}), Term("@", {Term(g), b})}),
                          Term("+", {unfold(f, a), unfold(g, b)})});
      default:
        return Term("=", {Term("+", {Term("@", {Term(f), a}), Term("@", {Term(g), b})}),
                          Term("+", {unfold(g, b), unfold(f, a)})});
    }
  }

  Term implication() {
    const Term x("x");
    Term a = pick(2) ? num(3) : Term("SUC", {Term("y")});
    const Term b = pick(2) ? num(3) : Term("z");
    auto eq = [](Term l, Term r) { return Term("=", {std::move(l), std::move(r)}); };
    const Term hyp = eq(x, a);
    switch (pick(5)) {
      case 0: return Term("==>", {hyp, eq(Term("+", {x, b}), Term("+", {a, b}))});
      case 1: return Term("==>", {hyp, eq(Term("*", {b, x}), Term("*", {b, a}))});
      case 2: return Term("==>", {eq(x, Term("0")), eq(Term("*", {x, Term("y")}), Term("0"))});
      case 3: {
        const std::string f = fn();
        return Term("==>", {hyp, eq(Term("@", {Term(f), x}), Term("@", {Term(f), a}))});
      }
      default: {
        const std::string f = fn();
        return Term("==>", {hyp, eq(Term("@", {Term(f), x}), unfold(f, a))});
      }
    }
  }

 private:
  const Environment& env_;
  std::mt19937_64 rng_;
};

}  // namespace

Corpus generate_corpus(const Environment& env, std::size_t size, std::uint64_t seed) {
  const Signature& sig = env.signature();
  Generator gen(env, seed);
  Corpus corpus;
  std::unordered_set<std::string> seen{Goal(gen.parse(kRunningExample)).text()};
  for (const auto& ax : env.axioms()) seen.insert(ax.statement.text());

  auto add = [&](const std::string& name, Term t) {
    if (corpus.size() >= size) return false;
    if (t.head() == kEquals && t.arg(0) == t.arg(1)) return false;
    Goal g(std::move(t));
    if (!seen.insert(g.text()).second) return false;
    if (!ground_valid(g, sig)) return false;
    corpus.push_back({name, std::move(g), static_cast<int>(corpus.size())});
    return true;
  };

  const std::size_t fixed = std::size(kRingLemmas) + std::size(kSumFacts);
  const std::size_t random_total = size > fixed ? size - fixed : 0;
  // Shares of the generated part: ring instances, ground facts, definitional
  // facts, implications, conjunctions.
  const double shares[] = {0.25, 0.2, 0.25, 0.15, 0.15};
  std::size_t quota[5];
  std::size_t assigned = 0;
  for (int i = 0; i < 5; ++i) {
    quota[i] = static_cast<std::size_t>(shares[i] * static_cast<double>(random_total));
    assigned += quota[i];
  }
  quota[2] += random_total - assigned;

  auto fill = [&](const char* prefix, std::size_t want, const std::function<Term()>& make) {
    std::size_t made = 0;
    for (int attempts = 0; made < want && attempts < 200 * static_cast<int>(want + 1); ++attempts)
      if (add(prefix + std::to_string(made), make())) ++made;
  };

  for (const auto& [name, text] : kRingLemmas) add(name, gen.parse(text));
  fill("RING_", quota[0], [&] { return gen.ring_instance(); });
  fill("GROUND_", quota[1], [&] { return gen.ground_fact(); });
  fill("DEF_", quota[2], [&] { return gen.definitional(); });
  fill("IMP_", quota[3], [&] { return gen.implication(); });

  std::vector<Term> small;
  for (const auto& th : corpus)
    if (th.statement.assumptions.empty() && th.statement.conclusion.size() <= 9) small.push_back(th.statement.conclusion);
  if (!small.empty())
    fill("CONJ_", quota[4], [&] { return Term("/\\", {small[gen.pick(small.size())], small[gen.pick(small.size())]}); });

  for (const auto& [name, text] : kSumFacts) add(name, gen.parse(text));
  return corpus;
}

}  // namespace tacsearch
