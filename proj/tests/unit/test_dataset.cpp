#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "../support/oracles.hpp"
#include "tacsearch/dataset.hpp"

using namespace tacsearch;

namespace {

const Signature sig = Signature::standard();

TreeDump dump_of(oracle::SyntheticTree& s, int id) { return TreeDump{id, "T" + std::to_string(id), "proved", s.tree}; }

std::filesystem::path temp(const std::string& name) { return std::filesystem::temp_directory_path() / name; }

}  // namespace

TEST_CASE("operator boundary") {
  oracle::SyntheticTree s(parse_goal("(= 1 1)", sig));
  const Goal at = oracle::goal_with_ops(80, 1);
  const Goal below = oracle::goal_with_ops(79, 2);
  REQUIRE(operator_count(encode_goal(at, sig)) == 80);
  REQUIRE(operator_count(encode_goal(below, sig)) == 79);
  s.add(at, 3, NodeStatus::Proved);
  s.add(below, 3, NodeStatus::Proved);
  Dataset ds = extract_examples({dump_of(s, 0)}, sig);
  CHECK(ds.find(at.text()) == nullptr);
  REQUIRE(ds.find(below.text()) != nullptr);
  CHECK(ds.find(below.text())->label == 1);

  ExtractOptions wide;
  wide.max_ops = 81;
  CHECK(extract_examples({dump_of(s, 0)}, sig, wide).find(at.text()) != nullptr);
}

TEST_CASE("assumptions count towards the size") {
  oracle::SyntheticTree s(parse_goal("(= 1 1)", sig));
  const Goal g = oracle::goal_with_ops(77, 1);
  Goal with_hyp({parse_term("(= x 0)", sig)}, g.conclusion);  // 77 + 3 + 1 = 81
  s.add(with_hyp, 2, NodeStatus::Open);
  s.add(g, 2, NodeStatus::Open);
  Dataset ds = extract_examples({dump_of(s, 0)}, sig);
  CHECK(ds.find(with_hyp.text()) == nullptr);
  CHECK(ds.find(g.text()) != nullptr);
}

TEST_CASE("negatives are capped to the most visited") {
  oracle::SyntheticTree s(parse_goal("(= 1 1)", sig));
  for (int i = 0; i < 700; ++i) s.add(oracle::goal_with_ops(5, i), 2 + i, NodeStatus::Open);
  for (int i = 0; i < 10; ++i) s.add(oracle::goal_with_ops(7, i), 1, NodeStatus::Proved);
  Dataset ds = extract_examples({dump_of(s, 0)}, sig);
  CHECK(ds.negatives() == 600);
  CHECK(ds.positives() == 10);
  for (int i = 0; i < 700; ++i) CHECK((ds.find(oracle::goal_with_ops(5, i).text()) != nullptr) == (i >= 100));
  CHECK(ds.find("(= 1 1)") == nullptr);
}

TEST_CASE("the cap applies per tree") {
  std::vector<TreeDump> dumps;
  std::vector<oracle::SyntheticTree> trees;
  for (int t = 0; t < 2; ++t) {
    oracle::SyntheticTree s(parse_goal("(= 1 " + std::to_string(t) + ")", sig));
    for (int i = 0; i < 650; ++i) s.add(oracle::goal_with_ops(5, t * 1000 + i), 2 + i, NodeStatus::Open);
    dumps.push_back(dump_of(s, t));
  }
  CHECK(extract_examples(dumps, sig).negatives() == 1200);
}

TEST_CASE("a goal proved anywhere is positive") {
  const Goal g = oracle::goal_with_ops(9, 1);
  oracle::SyntheticTree a(parse_goal("(= 1 1)", sig));
  a.add(g, 5, NodeStatus::Open);
  oracle::SyntheticTree b(parse_goal("(= 2 2)", sig));
  b.add(g, 1, NodeStatus::Proved);
  for (const auto& order : {std::vector<TreeDump>{dump_of(a, 0), dump_of(b, 1)}, std::vector<TreeDump>{dump_of(b, 1), dump_of(a, 0)}}) {
    Dataset ds = extract_examples(order, sig);
    REQUIRE(ds.find(g.text()) != nullptr);
    CHECK(ds.find(g.text())->label == 1);
    std::size_t copies = 0;
    for (const auto& e : ds.examples()) copies += e.goal == g;
    CHECK(copies == 1);
  }

  oracle::SyntheticTree both(parse_goal("(= 1 1)", sig));
  both.add(g, 5, NodeStatus::Open);
  both.add(g, 2, NodeStatus::Proved);
  Dataset one = extract_examples({dump_of(both, 0)}, sig);
  CHECK(one.find(g.text())->label == 1);

  Dataset manual;
  manual.add({g, encode_goal(g, sig), 0, 1, 0});
  manual.add({g, encode_goal(g, sig), 1, 1, 1});
  manual.add({g, encode_goal(g, sig), 0, 9, 2});
  CHECK(manual.size() == 1);
  CHECK(manual.examples()[0].label == 1);
}

TEST_CASE("extraction is idempotent") {
  oracle::SyntheticTree s(parse_goal("(= 1 1)", sig));
  for (int i = 0; i < 30; ++i) s.add(oracle::goal_with_ops(3 + i % 9, i), 1 + i, i % 4 ? NodeStatus::Open : NodeStatus::Proved);
  const auto d = dump_of(s, 0);
  Dataset once = extract_examples({d}, sig);
  Dataset twice = extract_examples({d, d}, sig);
  REQUIRE(once.size() == twice.size());
  for (std::size_t i = 0; i < once.size(); ++i) {
    CHECK(once.examples()[i].goal == twice.examples()[i].goal);
    CHECK(once.examples()[i].label == twice.examples()[i].label);
  }
}

TEST_CASE("dataset and dump files round-trip") {
  oracle::SyntheticTree s(parse_goal("(= 1 1)", sig));
  for (int i = 0; i < 12; ++i) s.add(oracle::goal_with_ops(4 + i, i), 1 + i, i % 3 ? NodeStatus::Open : NodeStatus::Proved);
  const auto dump_path = temp("tacsearch_dump.json").string();
  write_dump(dump_of(s, 7), dump_path);
  TreeDump back = read_dump(dump_path, sig);
  CHECK(back.attempt_id == 7);
  CHECK(back.tree.to_json() == s.tree.to_json());

  Dataset ds = extract_examples({back}, sig);
  const auto ds_path = temp("tacsearch_examples.tsv").string();
  ds.write(ds_path);
  Dataset again = Dataset::read(ds_path, sig);
  CHECK(again.size() == ds.size());
  CHECK(again.positives() == ds.positives());
  for (const auto& e : ds.examples()) {
    REQUIRE(again.find(e.goal.text()) != nullptr);
    CHECK(again.find(e.goal.text())->encoded == e.encoded);
  }

  { std::ofstream(dump_path) << "{\"nodes\": 3"; }
  CHECK_THROWS_AS(read_dump(dump_path, sig), MalformedDump);
  { std::ofstream(dump_path) << "{\"theorem\": \"x\"}"; }
  CHECK_THROWS_AS(read_dump(dump_path, sig), MalformedDump);
  std::filesystem::remove(dump_path);
  std::filesystem::remove(ds_path);
}

TEST_CASE("splitting") {
  Dataset ds;
  for (int i = 0; i < 100; ++i) {
    Goal g = oracle::goal_with_ops(5, i);
    ds.add({g, encode_goal(g, sig), i % 2, 1, 0});
  }
  auto [train, test] = split_dataset(ds, 0.9, 3);
  CHECK(train.size() == 90);
  CHECK(test.size() == 10);
  std::set<std::string> seen;
  for (const auto& e : train) seen.insert(e.goal.text());
  for (const auto& e : test) seen.insert(e.goal.text());
  CHECK(seen.size() == 100);

  auto [train2, test2] = split_dataset(ds, 0.9, 3);
  for (std::size_t i = 0; i < test.size(); ++i) CHECK(test[i].goal == test2[i].goal);

  Dataset small;
  for (int i = 0; i < 9; ++i) small.add({oracle::goal_with_ops(5, i), encode_goal(oracle::goal_with_ops(5, i), sig), 0, 1, 0});
  CHECK_THROWS_AS(split_dataset(small, 0.9, 1), DatasetTooSmall);
  CHECK_THROWS_AS(split_dataset(ds, 1.0, 1), std::invalid_argument);
}

TEST_CASE("accuracy and balancing") {
  std::vector<TrainExample> set;
  for (int i = 0; i < 10; ++i) set.push_back({oracle::goal_with_ops(5, i), encode_goal(oracle::goal_with_ops(5, i), sig), i < 3, 1, 0});
  Tnn zero = Tnn::zeros(4, {}, 2);
  // A zero network answers 0.5, which counts as a positive prediction.
  CHECK(accuracy(zero, set) == doctest::Approx(0.3));
  CHECK_THROWS(accuracy(zero, {}));

  auto balanced = oversample_positives(set);
  std::size_t pos = 0;
  for (const auto& e : balanced) pos += e.label;
  CHECK(pos == 7);
  CHECK(balanced.size() == 14);
  CHECK(labeled_terms(set).size() == 10);
}
