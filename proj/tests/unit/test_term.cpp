#include <doctest.h>

#include <random>

#include "../support/oracles.hpp"
#include "tacsearch/term.hpp"

using namespace tacsearch;

namespace {
const Signature sig = Signature::standard();
}

TEST_CASE("parse nullary and small applications") {
  Term zero = parse_term("0", sig);
  CHECK(zero.head() == "0");
  CHECK(zero.is_leaf());

  Term t = parse_term("(+ n 1)", sig);
  CHECK(t.head() == "+");
  REQUIRE(t.arity() == 2);
  CHECK(t.arg(0).head() == "n");
  CHECK(t.arg(1).head() == "1");
  CHECK(t.arg(0).is_leaf());
}

TEST_CASE("left subtree of the running example") {
  Term t = parse_term("(* 2 (SUM (+ n 1) I))", sig);
  CHECK(t.head() == "*");
  CHECK(t.arg(0).head() == "2");
  const Term& sum = t.arg(1);
  CHECK(sum.head() == "SUM");
  CHECK(sum.arg(0).text() == "(+ n 1)");
  CHECK(sum.arg(1).head() == "I");
  CHECK(operator_count(t) == 7);
}

TEST_CASE("printing") {
  CHECK(print_term(Term("0")) == "0");
  CHECK(print_term(parse_term("(+ n 1)", sig)) == "(+ n 1)");
  CHECK(print_term(parse_term("  ( +   n\n 1 ) ", sig)) == "(+ n 1)");
}

TEST_CASE("parse and print round-trip on random terms") {
  std::mt19937_64 rng(7);
  const auto ops = oracle::arithmetic_alphabet();
  for (int i = 0; i < 500; ++i) {
    Term t = oracle::random_term(rng, ops, 6);
    const std::string printed = print_term(t);
    Term back = parse_term(printed, sig);
    CHECK(back == t);
    CHECK(print_term(back) == printed);
    CHECK(operator_count(t) == oracle::count_tokens(printed));
  }
}

TEST_CASE("operator counts") {
  CHECK(operator_count(parse_term("0", sig)) == 1);
  CHECK(operator_count(parse_term("(+ n 1)", sig)) == 3);
}

TEST_CASE("goal encoding folds assumptions to the right") {
  const Term a1 = parse_term("(= x 1)", sig);
  const Term a2 = parse_term("(= y (SUC x))", sig);
  const Term c = parse_term("(= (+ x y) 3)", sig);
  CHECK(encode_goal(Goal(c), sig) == c);
  CHECK(encode_goal(Goal({a1}, c), sig).text() == "(==> (= x 1) (= (+ x y) 3))");
  const Term e = encode_goal(Goal({a1, a2}, c), sig);
  CHECK(e.text() == "(==> (= x 1) (==> (= y (SUC x)) (= (+ x y) 3)))");
  CHECK(operator_count(e) == operator_count(a1) + operator_count(a2) + operator_count(c) + 2);
}

TEST_CASE("encoded size is the sum of parts plus one per assumption") {
  std::mt19937_64 rng(11);
  const auto ops = oracle::arithmetic_alphabet();
  for (int i = 0; i < 200; ++i) {
    std::vector<Term> as;
    const auto k = rng() % 4;
    std::size_t expect = k;
    for (std::size_t j = 0; j < k; ++j) {
      as.push_back(oracle::random_term(rng, ops, 3));
      expect += operator_count(as.back());
    }
    Term c = oracle::random_term(rng, ops, 4);
    expect += operator_count(c);
    CHECK(operator_count(encode_goal(Goal(as, c), sig)) == expect);
  }
}

TEST_CASE("parse errors carry offsets") {
  try {
    parse_term("(+ n FOO)", sig);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 5);
  }
  CHECK_THROWS_AS(parse_term("(+ 1)", sig), ParseError);
  CHECK_THROWS_AS(parse_term("(SUC 1 2)", sig), ParseError);
  CHECK_THROWS_AS(parse_term("(+ 1 2", sig), ParseError);
  CHECK_THROWS_AS(parse_term("(+ 1 2))", sig), ParseError);
  CHECK_THROWS_AS(parse_term("", sig), ParseError);
  CHECK_THROWS_AS(parse_term("(n 1)", sig), ParseError);
}

TEST_CASE("goals") {
  Goal g = parse_goal("(= x 1) |- (= (+ x 1) 2)", sig);
  REQUIRE(g.assumptions.size() == 1);
  CHECK(g.assumptions[0].text() == "(= x 1)");
  CHECK(g.conclusion.text() == "(= (+ x 1) 2)");
  CHECK(parse_goal(print_goal(g), sig) == g);
  CHECK(parse_goal("|- (= 0 0)", sig) == parse_goal("(= 0 0)", sig));

  // Equality is the equality of printed forms.
  Goal h = parse_goal("(= x 1)   |-   (= (+ x 1)   2)", sig);
  CHECK(h == g);
  CHECK(GoalHash{}(h) == GoalHash{}(g));
  CHECK_FALSE(parse_goal("(= (+ x 1) 2)", sig) == g);
}

TEST_CASE("signature files") {
  Signature s = Signature::parse("# ops\nf 2\ng 1\n\nc 0  # constant\n");
  CHECK(s.declared("f"));
  CHECK(s.arity_of("g") == 1);
  CHECK(s.arity_of("c") == 0);
  CHECK(s.arity_of("x") == 0);
  CHECK(s.is_variable("x"));
  CHECK_FALSE(s.is_variable("c"));
  CHECK_THROWS(Signature::parse("f 2\nf 1\n"));
  CHECK_THROWS(Signature::parse("f(x) 2\n"));
}

TEST_CASE("variables and substitution") {
  Term t = parse_term("(+ (* n m) (SUC n))", sig);
  CHECK(free_variables(t, sig) == std::vector<std::string>{"n", "m"});
  CHECK(substitute(t, "n", Term("0")).text() == "(+ (* 0 m) (SUC 0))");
  CHECK(contains_variable(t, "m"));
  CHECK_FALSE(contains_variable(t, "k"));
}
