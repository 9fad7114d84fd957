#include <doctest.h>

#include <random>

#include "../support/oracles.hpp"
#include "tacsearch/corpus.hpp"
#include "tacsearch/env.hpp"

using namespace tacsearch;

namespace {

const Environment& env() {
  static const Environment e;
  return e;
}

TacticOutcome run(const std::string& tactic, const std::string& goal, const std::vector<Theorem>& args = {}) {
  return env().apply(*env().find_tactic(tactic), args, env().parse_goal(goal));
}

Theorem lemma(const std::string& name, const std::string& text) {
  return {name, env().parse_goal(text), 0};
}

}  // namespace

TEST_CASE("induction on the running example") {
  auto out = run("Induct", "(= (* 2 (SUM (+ n 1) I)) (* n (+ n 1)))");
  REQUIRE(out.is_progress());
  REQUIRE(out.goals.size() == 2);
  CHECK(out.goals[0].assumptions.empty());
  CHECK(out.goals[0].conclusion.text() == "(= (* 2 (SUM (+ 0 1) I)) (* 0 (+ 0 1)))");
  REQUIRE(out.goals[1].assumptions.size() == 1);
  CHECK(out.goals[1].assumptions[0].text() == "(= (* 2 (SUM (+ n 1) I)) (* n (+ n 1)))");
  CHECK(out.goals[1].conclusion.text() == "(= (* 2 (SUM (+ (SUC n) 1) I)) (* (SUC n) (+ (SUC n) 1)))");

  CHECK(run("Induct", "(= (+ 1 1) 2)").is_failed());
}

TEST_CASE("solvers") {
  CHECK(run("arith_solver", "(= (+ 2 2) 4)").is_proved());
  CHECK(run("arith_solver", "(= (SUM 4 I) 6)").is_proved());
  auto f = run("arith_solver", "(= (+ 2 2) 5)");
  CHECK(f.is_failed());
  CHECK(f.reason == "false");
  CHECK(run("arith_solver", "(= (+ n 0) n)").is_failed());
  CHECK(run("arith_solver", "(= (+ n 0) n) |- (= (+ n 0) n)").is_proved());

  CHECK(run("ring_solver", "(= (* (+ x 1) (+ x 1)) (+ (* x x) (+ (* 2 x) 1)))").is_proved());
  CHECK(run("ring_solver", "(= (+ x y) (+ x x))").is_failed());
}

TEST_CASE("ring solver uses equational assumptions linearly") {
  // Step case after unfolding: 2*(S + n + SUC n) = SUC n * (SUC n + 1) given 2*(S + n) = n*(n+1).
  CHECK(run("ring_solver",
            "(= (* 2 (+ (SUM n I) n)) (* n (+ n 1))) |- "
            "(= (* 2 (+ (+ (SUM n I) n) (SUC n))) (* (SUC n) (+ (SUC n) 1)))")
            .is_proved());
  CHECK(run("ring_solver", "(= x (+ y 1)) (= y 2) |- (= (* 3 x) 9)").is_proved());
  CHECK(run("ring_solver", "(= (* x x) y) |- (= x y)").is_failed());
  CHECK(ring_equal_using(env().parse_term("(+ a b)"), env().parse_term("(+ b a)"), {}));
}

TEST_CASE("rewriting") {
  auto out = run("rewrite_tac", "(= (+ a 0) a)", {lemma("ADD_0R", "(= (+ x 0) x)")});
  CHECK(out.is_proved());

  auto step = run("rewrite_tac", "(= (@ D (+ a 0)) b)", {lemma("ADD_0R", "(= (+ x 0) x)")});
  REQUIRE(step.is_progress());
  CHECK(step.goals[0].conclusion.text() == "(= (@ D a) b)");

  CHECK(run("rewrite_tac", "(= a b)", {lemma("ADD_0R", "(= (+ x 0) x)")}).reason == "no change");
  CHECK(run("rewrite_tac", "(= (+ a 0) a)", {lemma("IMP", "(==> (= x 0) (= (+ x 0) 0))")}).reason ==
        "not an equation");

  // SUC x = x + 1 and x + 1 = SUC x together never terminate.
  std::vector<Theorem> looping{lemma("A", "(= (SUC x) (+ x 1))"), lemma("B", "(= (+ x 1) (SUC x))")};
  CHECK(run("rewrite_tac", "(= (SUC a) b)", looping).reason == "budget");
  CHECK(env().apply(*env().find_tactic("rewrite_tac"), looping, env().parse_goal("(= (SUC a) b)"), 5).reason ==
        "budget");
}

TEST_CASE("leftmost-outermost order") {
  Signature sig = Signature::standard();
  sig.add({"f", 1});
  sig.add({"g", 1});
  const std::vector<RewriteRule> rules{{parse_term("(f x)", sig), parse_term("(g x)", sig), false}};
  auto r = rewrite_normalize(parse_term("(f (f a))", sig), rules, sig, 10);
  CHECK(r.term.text() == "(g (g a))");
  CHECK(r.steps == 2);
  auto one = rewrite_normalize(parse_term("(f (f a))", sig), rules, sig, 1);
  CHECK(one.exhausted);
  CHECK(one.term.text() == "(g (f a))");
}

TEST_CASE("kernel tactics") {
  auto s = run("strip_tac", "(==> (= x 1) (= (+ x 1) 2))");
  REQUIRE(s.is_progress());
  CHECK(s.goals[0].assumptions.size() == 1);
  CHECK(s.goals[0].conclusion.text() == "(= (+ x 1) 2)");
  CHECK(run("strip_tac", "(= x x)").is_failed());

  auto c = run("conj_tac", "(/\\ (= 1 1) (= 2 2))");
  REQUIRE(c.is_progress());
  CHECK(c.goals.size() == 2);

  auto g = run("cong_tac", "(= (+ (@ D x) (@ SQ y)) (+ (* 2 x) (* y y)))");
  REQUIRE(g.is_progress());
  REQUIRE(g.goals.size() == 2);
  CHECK(g.goals[0].conclusion.text() == "(= (@ D x) (* 2 x))");
  CHECK(run("cong_tac", "(= (SUC x) (+ x 1))").is_failed());
}

TEST_CASE("theorem lists only for list tactics") {
  CHECK(run("arith_solver", "(= 1 1)", {lemma("ADD_0R", "(= (+ x 0) x)")}).reason == "unexpected arguments");
  CHECK(env().apply(*env().find_tactic("arith_solver"), {}, env().parse_goal("(= 1 1)"), 0).is_failed());
}

TEST_CASE("availability") {
  const Corpus corpus = parse_corpus("A\t(= (+ 0 0) 0)\nB\t(= (+ 1 0) 1)\nC\t(= (+ 2 0) 2)\n", env().signature());
  auto at0 = available_items(env(), corpus, 0);
  CHECK(at0.theorems.size() == env().axioms().size());
  for (const auto& th : at0.theorems) CHECK(th.index == -1);
  CHECK(available_items(env(), corpus, 2).theorems.size() == env().axioms().size() + 2);
  CHECK(available_items(env(), corpus, 3).theorems.size() == env().axioms().size() + 3);
  CHECK_THROWS_AS(available_items(env(), corpus, 4), std::out_of_range);
  CHECK(at0.tactics.size() == env().tactics().size());
}

TEST_CASE("availability grows monotonically") {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const Corpus corpus = generate_corpus(env(), 40, seed);
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      auto now = available_items(env(), corpus, i);
      auto next = available_items(env(), corpus, i + 1);
      REQUIRE(next.theorems.size() == now.theorems.size() + 1);
      for (std::size_t k = 0; k < now.theorems.size(); ++k) CHECK(next.theorems[k].name == now.theorems[k].name);
      for (const auto& th : now.theorems) CHECK(th.index < static_cast<int>(i));
    }
  }
}

TEST_CASE("tactics are pure, sound and make progress") {
  std::mt19937_64 rng(3);
  const Signature& sig = env().signature();
  const std::vector<Operator> ops{{"+", 2}, {"*", 2}, {"SUC", 1}, {"0", 0}, {"1", 0}, {"2", 0}, {"x", 0}, {"y", 0}};
  std::vector<Theorem> lemmas(env().axioms().begin(), env().axioms().end());
  for (const char* text : {"(= (+ x 0) x)", "(= (* x 1) x)", "(= (+ x y) (+ y x))", "(= (* 2 x) (+ x x))"})
    lemmas.push_back(lemma("L", text));

  int proved = 0, refuted_parents = 0;
  for (int i = 0; i < 400; ++i) {
    Term l = oracle::random_term(rng, ops, 3);
    Term r = oracle::random_term(rng, ops, 3);
    std::vector<Term> hyps;
    if (i % 3 == 0) hyps.push_back(Term("=", {oracle::random_term(rng, ops, 2), oracle::random_term(rng, ops, 2)}));
    const Goal g(hyps, i % 5 == 0 ? Term("==>", {Term("=", {l, Term("x")}), Term("=", {r, Term("y")})})
                                  : Term("=", {l, r}));
    const bool refuted = oracle::refute(g, sig).has_value();
    for (const auto& t : env().tactics()) {
      std::vector<Theorem> args;
      if (t.takes_theorem_list) args = lemmas;
      auto a = env().apply(t, args, g);
      auto b = env().apply(t, args, g);
      CHECK(static_cast<int>(a.kind) == static_cast<int>(b.kind));
      CHECK(a.goals == b.goals);
      CHECK(a.reason == b.reason);
      if (a.is_proved()) {
        ++proved;
        CHECK_MESSAGE(!refuted, t.name << " proved the false goal " << g.text());
      }
      if (a.is_progress()) {
        for (std::size_t k = 0; k < a.goals.size(); ++k) {
          CHECK_FALSE(a.goals[k] == g);
          for (std::size_t m = k + 1; m < a.goals.size(); ++m) CHECK_FALSE(a.goals[k] == a.goals[m]);
        }
        if (refuted) {
          ++refuted_parents;
          bool child_refuted = false;
          for (const auto& sub : a.goals) child_refuted = child_refuted || oracle::refute(sub, sig).has_value();
          CHECK_MESSAGE(child_refuted, t.name << " turned the false goal " << g.text() << " into true subgoals");
        }
      }
    }
  }
  CHECK(proved >= 10);
  CHECK(refuted_parents > 20);
}

TEST_CASE("corpus generation") {
  const Corpus c = generate_corpus(env(), 200, 1);
  CHECK(c.size() == 200);
  const Goal running = env().parse_goal(kRunningExample);
  for (std::size_t i = 0; i < c.size(); ++i) {
    CHECK(c[i].index == static_cast<int>(i));
    CHECK_FALSE(c[i].statement == running);
    CHECK_FALSE(oracle::refute(c[i].statement, env().signature()).has_value());
  }
  CHECK(generate_corpus(env(), 200, 1).size() == c.size());
  for (std::size_t i = 0; i < c.size(); ++i) CHECK(generate_corpus(env(), 200, 1)[i].statement == c[i].statement);
}

TEST_CASE("corpus files") {
  CHECK_THROWS(parse_corpus("NAME_ONLY\n", env().signature()));
  CHECK_THROWS(parse_corpus("A\t(= 1 1)\nA\t(= 2 2)\n", env().signature()));
  auto c = parse_corpus("# header\n\nA\t(= (+ 1 1) 2)\r\n", env().signature());
  REQUIRE(c.size() == 1);
  CHECK(c[0].name == "A");
}
