// Acceptance checks. `acceptance fast` runs criteria 1-6 and 10,
// `acceptance pipeline <dir>` runs a fresh pipeline in <dir> and checks 7-9.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "../support/oracles.hpp"
#include "tacsearch/corpus.hpp"
#include "tacsearch/harness.hpp"

using namespace tacsearch;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Report {
  int failures = 0;

  void line(int n, bool ok, const std::string& detail) {
    std::cout << "criterion " << n << ": " << (ok ? "PASS" : "FAIL") << "  " << detail << std::endl;
    failures += !ok;
  }
};

/// Collects named sub-checks for one criterion.
struct Checks {
  bool ok = true;
  std::ostringstream text;

  void check(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      text << "[failed: " << what << "] ";
    }
  }
  void note(const std::string& s) { text << s << ' '; }
};

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

const Environment& env() {
  static const Environment e;
  return e;
}

class ConstantValue final : public ValueFunction {
 public:
  explicit ConstantValue(double v) : v_(v) {}
  double value(const Goal&) const override { return v_; }

 private:
  double v_;
};

std::vector<Branch> branches_of(const SearchTree& t, int parent) {
  std::vector<Branch> out;
  for (int c : t.node(parent).children) {
    const auto& n = t.node(c);
    out.push_back({n.average(), n.open() ? t.prior(c) : 0.0, static_cast<double>(n.visits), n.open()});
  }
  return out;
}

// ---- 1 ----

void running_trace(Report& rep) {
  const auto t0 = Clock::now();
  Checks c;
  oracle::RunningTree r = oracle::running_tree(env());
  const ProofContext ctx{env(), std::vector<Theorem>(env().axioms().begin(), env().axioms().end()), INT32_MAX,
                         nullptr};
  ConstantValue stub(0.95);
  Prover prover(ctx, stub, SearchConfig{});
  prover.start(r.tree);
  SearchTree& t = prover.tree();

  const double c_puct = 2.0;
  auto pick = [&](int parent) {
    auto b = branches_of(t, parent);
    return t.node(parent).children[puct_select(static_cast<double>(t.node(parent).visits), b, c_puct)];
  };
  c.check(pick(r.goal) == r.induct, "tactic selection is Induct");
  c.check(select_goal_branch(t, r.induct_out) == r.base, "goal selection is the base case");
  c.check(pick(r.base) == r.rewrite, "base-goal selection is rewrite_tac");
  const int engine_arg = pick(r.rewrite);
  c.note(std::string("engine argument choice ") + (engine_arg == r.mult ? "MULT_CLAUSES" : "numeral_distrib") +
         ", figure MULT_CLAUSES (forced);");

  std::vector<int> path{r.root, r.goal, r.induct, r.induct_out, r.base, r.rewrite, r.mult};
  const double reward = prover.extend(path);
  c.check(path.size() == 8, "extension creates an output node");
  c.check(std::fabs(reward - 0.95) < 1e-12, "leaf reward 0.95");
  if (path.size() == 8) {
    const auto& out = t.node(path.back());
    c.check(out.children.size() == 1 &&
                t.node(out.children[0]).goal->text() == "(= (* 2 (SUM (+ 0 1) I)) 0)",
            "MULT_CLAUSES rewrites the base goal to one new goal");
  }
  backup(t, path, reward);

  struct Expect {
    const char* what;
    int id;
    std::int64_t visits;
    double average;
  };
  const Expect rows[] = {{"root goal", r.goal, 23, 0.043},
                         {"Induct", r.induct, 13, 3.0e-6},
                         {"base goal", r.base, 7, 0.18},
                         {"rewrite_tac", r.rewrite, 4, 0.23},
                         {"MULT_CLAUSES", r.mult, 2, 0.48}};
  for (const auto& e : rows) {
    const auto& n = t.node(e.id);
    const double shown = oracle::round_sig(n.average(), 2);
    c.note(std::string(e.what) + " " + std::to_string(n.visits) + "; " + fmt(shown, 2) + " (expected " +
           std::to_string(e.visits) + "; " + fmt(e.average, 2) + ");");
    c.check(n.visits == e.visits, std::string(e.what) + " visits");
    c.check(std::fabs(shown - e.average) <= 0.005, std::string(e.what) + " average");
  }
  const double secs = since(t0);
  c.check(secs < 1.0, "runtime < 1 s");
  rep.line(1, c.ok, c.text.str() + "runtime " + fmt(secs, 3) + " s");
}

// ---- 2 ----

void selection_scores(Report& rep) {
  const auto t0 = Clock::now();
  Checks c;
  oracle::RunningTree r = oracle::running_tree(env());
  const auto b = branches_of(r.tree, r.goal);
  const double pv = static_cast<double>(r.tree.node(r.goal).visits);
  c.check(puct_select(pv, b, 2.0) == 0, "Induct selected");
  const double expected[] = {0.157, 0.079, 0.016};
  const char* names[] = {"Induct", "simp_tac", "asm_rewrite_tac"};
  for (std::size_t i = 0; i < 3; ++i) {
    const double s = puct_score(pv, b[i], 2.0);
    c.note(std::string(names[i]) + " " + fmt(s, 3) + " (expected " + fmt(expected[i], 3) + ");");
    c.check(std::fabs(s - expected[i]) <= 1e-3, std::string(names[i]) + " score");
  }
  const double secs = since(t0);
  c.check(secs < 1.0, "runtime < 1 s");
  rep.line(2, c.ok, c.text.str() + "runtime " + fmt(secs, 3) + " s");
}

// ---- 3 ----

void backup_algebra(Report& rep) {
  const auto t0 = Clock::now();
  Checks c;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int sequences = 0;
  bool range = true, visits = true, product = true, logs = true;
  for (int tree_no = 0; tree_no < 100; ++tree_no) {
    SearchTree t = oracle::random_tree(rng, 3 + static_cast<int>(rng() % 30));
    oracle::RewardLog log(t);
    std::vector<std::int64_t> init(t.size());
    std::vector<std::int64_t> through(t.size(), 0);
    for (std::size_t i = 0; i < t.size(); ++i) init[i] = t.node(static_cast<int>(i)).visits;
    for (int k = 0; k < 10; ++k, ++sequences) {
      const auto path = oracle::random_path(rng, t);
      const double reward = u(rng);
      std::vector<double> before(t.size());
      for (std::size_t i = 0; i < t.size(); ++i) before[i] = t.node(static_cast<int>(i)).reward_sum;
      // Sibling averages as they stand before the backup.
      std::vector<double> factor(path.size(), 1.0);
      for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        const auto& n = t.node(path[i]);
        if (n.role != NodeRole::Output) continue;
        for (int ch : n.children)
          if (ch != path[i + 1]) factor[i] *= t.node(ch).status == NodeStatus::Proved ? 1.0 : t.node(ch).average();
      }
      log.record(t, path, reward);
      backup(t, path, reward);
      for (int id : path) ++through[static_cast<std::size_t>(id)];

      for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        if (t.node(path[i]).role != NodeRole::Output) continue;
        const double here = t.node(path[i]).reward_sum - before[static_cast<std::size_t>(path[i])];
        const double below = t.node(path[i + 1]).reward_sum - before[static_cast<std::size_t>(path[i + 1])];
        product = product && std::fabs(here - below * factor[i]) <= 1e-12;
      }
      for (std::size_t i = 0; i < t.size(); ++i) {
        const int id = static_cast<int>(i);
        const auto& n = t.node(id);
        range = range && n.average() >= 0.0 && n.average() <= 1.0 + 1e-12;
        visits = visits && n.visits == init[i] + through[i] &&
                 n.visits == static_cast<std::int64_t>(log.log.at(id).size());
        logs = logs && std::fabs(n.average() - log.mean(id)) <= 1e-12;
      }
    }
  }
  c.check(sequences == 1000, "1000 sequences");
  c.check(range, "averages in [0,1]");
  c.check(visits, "visit accounting");
  c.check(product, "output-node product formula");
  c.check(logs, "averages equal the reward-log means");
  const double secs = since(t0);
  c.check(secs < 10.0, "runtime < 10 s");
  rep.line(3, c.ok, c.text.str() + std::to_string(sequences) + " sequences, runtime " + fmt(secs, 3) + " s");
}

// ---- 4 ----

void gradient_check(Report& rep) {
  const auto t0 = Clock::now();
  Checks c;
  std::mt19937_64 rng(77);
  const auto ops = oracle::arithmetic_alphabet();
  Tnn net = Tnn::create(4, ops, 2, 5);
  const double h = 1e-5;
  double worst = 0.0;
  std::size_t compared = 0;
  for (int k = 0; k < 5; ++k) {
    Term t = oracle::random_term(rng, ops, 4);
    while (t.size() < 6) t = oracle::random_term(rng, ops, 4);
    const double label = k % 2;
    Tnn grad = Tnn::zeros(4, ops, 2);
    net.accumulate_gradient(t, label, grad);
    auto compare = [&](const std::string& name, const Tnn::Layer& g) {
      const Eigen::Index n = g.weight.size() + g.bias.size();
      for (Eigen::Index s = 0; s < n; ++s) {
        const double num =
            (oracle::shifted_loss(net, name, s, h, t, label) - oracle::shifted_loss(net, name, s, -h, t, label)) /
            (2 * h);
        const double ana = s < g.weight.size() ? g.weight(s / g.weight.cols(), s % g.weight.cols())
                                               : g.bias[s - g.weight.size()];
        const double scale = std::max(std::fabs(num), std::fabs(ana));
        if (scale == 0.0) continue;
        worst = std::max(worst, std::fabs(num - ana) / scale);
        ++compared;
      }
    };
    for (const auto& [name, g] : grad.layers()) compare(name, g);
    compare("#head", grad.head());
  }
  c.check(worst <= 1e-4, "relative error <= 1e-4");
  const double secs = since(t0);
  c.check(secs < 5.0, "runtime < 5 s");
  rep.line(4, c.ok,
           c.text.str() + std::to_string(compared) + " parameters, worst relative error " + fmt(worst, 3) +
               ", runtime " + fmt(secs, 3) + " s");
}

// ---- 5 ----

void learnability(Report& rep) {
  const auto t0 = Clock::now();
  Checks c;
  const auto train = oracle::marker_dataset(200, 101);
  const auto held_out = oracle::marker_dataset(200, 202);
  TrainSchedule s;
  c.check(s.epochs == 100 && s.learning_rate == 0.08 &&
              s.batch_sizes == std::vector<int>{16, 24, 32, 48, 64},
          "default schedule");
  Tnn net = train_tnn(train, s);
  std::size_t right = 0;
  for (const auto& ex : held_out) right += (net.infer(ex.term) >= 0.5) == (ex.label == 1.0);
  const double acc = static_cast<double>(right) / static_cast<double>(held_out.size());
  c.check(acc >= 0.95, "held-out accuracy >= 0.95");
  const double secs = since(t0);
  c.check(secs < 120.0, "runtime < 2 min");
  rep.line(5, c.ok, c.text.str() + "held-out accuracy " + fmt(acc, 4) + ", runtime " + fmt(secs, 3) + " s");
}

// ---- 6 ----

void extraction_filters(Report& rep) {
  const auto t0 = Clock::now();
  Checks c;
  const Signature& sig = env().signature();
  std::mt19937_64 rng(6);

  // Boundary: sizes around the limit.
  {
    oracle::SyntheticTree s(env().parse_goal("(= 0 0)"));
    for (std::size_t ops = 76; ops <= 84; ++ops)
      s.add(oracle::goal_with_ops(ops, static_cast<int>(ops)), 2, ops % 2 ? NodeStatus::Proved : NodeStatus::Open);
    Dataset ds = extract_examples({TreeDump{0, "B", "proved", s.tree}}, sig);
    for (std::size_t ops = 76; ops <= 84; ++ops) {
      const bool kept = ds.find(oracle::goal_with_ops(ops, static_cast<int>(ops)).text()) != nullptr;
      c.check(kept == (ops < 80), "size " + std::to_string(ops) + (ops < 80 ? " kept" : " dropped"));
    }
  }
  // Cap: random negative counts with distinct visit counts.
  for (int trial = 0; trial < 20; ++trial) {
    const int n = static_cast<int>(rng() % 1000);
    oracle::SyntheticTree s(env().parse_goal("(= 0 0)"));
    std::vector<int> visits(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) visits[static_cast<std::size_t>(i)] = 2 + i;
    std::shuffle(visits.begin(), visits.end(), rng);
    for (int i = 0; i < n; ++i) s.add(oracle::goal_with_ops(5, i), visits[static_cast<std::size_t>(i)], NodeStatus::Open);
    const int positives = static_cast<int>(rng() % 20);
    for (int i = 0; i < positives; ++i) s.add(oracle::goal_with_ops(7, i), 1, NodeStatus::Proved);
    Dataset ds = extract_examples({TreeDump{trial, "C", "proved", s.tree}}, sig);
    // The root goal is a negative with 1 visit, below every added one.
    const int total_neg = n + 1;
    const int kept = std::min(total_neg, 600);
    bool ok = ds.negatives() == static_cast<std::size_t>(kept) && ds.positives() == static_cast<std::size_t>(positives);
    for (int i = 0; i < n; ++i) {
      const bool expect = visits[static_cast<std::size_t>(i)] >= 2 + n - std::min(n, 600);
      ok = ok && (ds.find(oracle::goal_with_ops(5, i).text()) != nullptr) == expect;
    }
    c.check(ok, "cap trial " + std::to_string(trial) + " with " + std::to_string(n) + " negatives");
  }
  // Dedup with positive preference across trees.
  for (int trial = 0; trial < 20; ++trial) {
    const int goals = 30;
    const int trees = 2 + static_cast<int>(rng() % 4);
    std::vector<TreeDump> dumps;
    std::vector<bool> proved_somewhere(goals, false), present(goals, false);
    for (int k = 0; k < trees; ++k) {
      oracle::SyntheticTree s(env().parse_goal("(= 0 " + std::to_string(k) + ")"));
      for (int g = 0; g < goals; ++g) {
        if (rng() % 2) continue;
        const bool proved = rng() % 3 == 0;
        s.add(oracle::goal_with_ops(9, g), 1 + static_cast<int>(rng() % 9), proved ? NodeStatus::Proved : NodeStatus::Open);
        present[static_cast<std::size_t>(g)] = true;
        if (proved) proved_somewhere[static_cast<std::size_t>(g)] = true;
      }
      dumps.push_back({static_cast<int>(rng() % 100), "D", "proved", s.tree});
    }
    Dataset ds = extract_examples(dumps, sig);
    bool ok = true;
    std::set<std::string> texts;
    for (const auto& e : ds.examples()) ok = ok && texts.insert(e.goal.text()).second;
    for (int g = 0; g < goals; ++g) {
      const auto* e = ds.find(oracle::goal_with_ops(9, g).text());
      ok = ok && (e != nullptr) == present[static_cast<std::size_t>(g)];
      if (e) ok = ok && e->label == (proved_somewhere[static_cast<std::size_t>(g)] ? 1 : 0);
    }
    c.check(ok, "dedup trial " + std::to_string(trial));
  }
  const double secs = since(t0);
  c.check(secs < 5.0, "runtime < 5 s");
  rep.line(6, c.ok, c.text.str() + "boundary, 20 cap trials, 20 dedup trials, runtime " + fmt(secs, 3) + " s");
}

// ---- 10 ----

void confidence_latency(Report& rep) {
  Checks c;
  std::mt19937_64 rng(10);
  const auto ops = oracle::arithmetic_alphabet();
  Tnn net = Tnn::create(16, ops, 2, 3);
  std::vector<Goal> goals;
  while (goals.size() < 50) {
    Term l = oracle::random_term(rng, ops, 9);
    Term r = oracle::random_term(rng, ops, 9);
    Goal g(Term("=", {l, r}));
    const auto n = operator_count(encode_goal(g, env().signature()));
    if (n >= 150 && n <= 200) goals.push_back(g);
  }
  std::vector<double> ms;
  double sink = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const auto t0 = Clock::now();
    sink += confidence(net, goals[static_cast<std::size_t>(i) % goals.size()], env().signature());
    ms.push_back(since(t0) * 1000.0);
  }
  std::nth_element(ms.begin(), ms.begin() + 500, ms.end());
  const double median = ms[500];
  c.check(median <= 10.0, "median <= 10 ms");
  c.check(sink >= 0.0 && sink <= 1000.0, "values in [0,1]");
  rep.line(10, c.ok, c.text.str() + "median " + fmt(median, 3) + " ms over 1000 calls on goals of 150-200 operators");
}

// ---- 7-9 ----

void pipeline_group(Report& rep, const fs::path& dir) {
  fs::remove_all(dir);
  const Corpus corpus = generate_corpus(env(), 200, 1);
  PipelineConfig cfg;
  cfg.eval.search.timeout = 5.0;
  cfg.seed = 1;
  const auto tp = Clock::now();
  EvalReport report = pipeline(env(), corpus, dir.string(), cfg);
  const double pipeline_secs = since(tp);
  std::cout << report.text().substr(0, report.text().find("\n\n")) << std::endl;

  const PolicyModel policy = PolicyModel::read((dir / artifacts::kPolicy).string());
  std::optional<Tnn> net;
  if (fs::exists(dir / artifacts::kWeights)) net = Tnn::read((dir / artifacts::kWeights).string(), &env().signature());
  const Goal running = env().parse_goal(kRunningExample);

  std::vector<std::tuple<std::string, std::string, Goal, std::size_t>> scripts;  // label, script, goal, available

  // 7
  {
    Checks c;
    c.check(net.has_value(), "trained weights exist");
    const auto t0 = Clock::now();
    if (net) {
      SearchConfig full;
      full.loop_limit = 10000;
      full.timeout = 60;
      auto res = prove(env(), corpus, running, Mode::Tnn, policy, &*net, full);
      c.check(res.search.outcome == SearchOutcome::Proved, "proved within 10000 iterations");
      c.note("proved after " + std::to_string(res.search.stats.iterations) + " iterations;");
      if (res.search.script) scripts.emplace_back("running example", *res.search.script, running, corpus.size());

      SearchConfig truncated;
      truncated.loop_limit = 22;
      auto cut = prove(env(), corpus, running, Mode::Tnn, policy, &*net, truncated);
      const std::string s = cut.suggestion.value_or("");
      c.check(cut.search.outcome == SearchOutcome::LoopLimit, "loop limit 22 stops the search");
      c.check(!s.empty() && s.rfind("Induct", 0) == 0, "suggestion begins with Induct");
      c.note("suggestion: " + (s.empty() ? std::string("<none>") : s) + ";");
    }
    const double secs = since(t0);
    c.check(secs < 60.0, "runtime < 1 min");
    rep.line(7, c.ok, c.text.str() + "runtime " + fmt(secs, 3) + " s");
  }

  // 8
  {
    Checks c;
    c.check(report.tnn.has_value(), "tnn evaluation ran");
    const Comparison cmp = report.comparison();
    c.check(cmp.solved_tnn >= cmp.solved_baseline, "solved_tnn >= solved_baseline");
    c.check(cmp.solved_combined >= std::max(cmp.solved_tnn, cmp.solved_baseline), "combined >= max");
    if (cmp.solved_only_tnn > 0) c.check(cmp.solved_combined > cmp.solved_baseline, "union exceeds baseline");
    if (cmp.solved_only_baseline > 0) c.check(cmp.solved_combined > cmp.solved_tnn, "union exceeds tnn");
    c.check(pipeline_secs < 1800.0, "pipeline runtime < 30 min");
    rep.line(8, c.ok,
             c.text.str() + "baseline " + std::to_string(cmp.solved_baseline) + ", tnn " +
                 std::to_string(cmp.solved_tnn) + ", only baseline " + std::to_string(cmp.solved_only_baseline) +
                 ", only tnn " + std::to_string(cmp.solved_only_tnn) + ", combined " +
                 std::to_string(cmp.solved_combined) + " of " + std::to_string(corpus.size()) + "; pipeline " +
                 fmt(pipeline_secs, 4) + " s");
  }

  // 9
  {
    Checks c;
    std::ifstream in(dir / artifacts::kBootstrapRun);
    const EvalRun bootstrap = EvalRun::from_json(nlohmann::json::parse(in));
    std::vector<const EvalRun*> runs{&bootstrap, &report.baseline};
    if (report.tnn) runs.push_back(&*report.tnn);
    for (const EvalRun* run : runs)
      for (const auto& r : run->results)
        if (r.script)
          scripts.emplace_back((run == &bootstrap ? std::string("bootstrap") : to_string(run->mode)) + " " + r.name, *r.script,
                               corpus[static_cast<std::size_t>(r.index)].statement, static_cast<std::size_t>(r.index));
    std::size_t ok = 0;
    for (const auto& [label, text, goal, avail] : scripts) {
      const auto items = available_items(env(), corpus, avail);
      bool proves = false;
      try {
        proves = replay(parse_script(text), goal, env(), items.theorems).proves();
      } catch (const std::exception&) {
      }
      ok += proves;
      c.check(proves, label);
    }
    c.check(!scripts.empty(), "scripts were produced");
    rep.line(9, c.ok, c.text.str() + std::to_string(ok) + " of " + std::to_string(scripts.size()) + " scripts replay");
  }
}

}  // namespace

int main(int argc, char** argv) {
  const std::string group = argc > 1 ? argv[1] : "fast";
  Report rep;
  try {
    if (group == "fast") {
      running_trace(rep);
      selection_scores(rep);
      backup_algebra(rep);
      gradient_check(rep);
      learnability(rep);
      extraction_filters(rep);
      confidence_latency(rep);
    } else if (group == "pipeline") {
      if (argc < 3) {
        std::cerr << "usage: acceptance pipeline <dir>\n";
        return 2;
      }
      pipeline_group(rep, argv[2]);
    } else {
      std::cerr << "usage: acceptance fast | pipeline <dir>\n";
      return 2;
    }
  } catch (const std::exception& e) {
    std::cerr << "acceptance: " << e.what() << '\n';
    return 2;
  }
  return rep.failures == 0 ? 0 : 1;
}
