#include "tacsearch/harness.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <thread>

namespace tacsearch {

namespace fs = std::filesystem;

std::string to_string(Mode m) { return m == Mode::Baseline ? "baseline" : "tnn"; }

Mode parse_mode(const std::string& s) {
  if (s == "baseline") return Mode::Baseline;
  if (s == "tnn") return Mode::Tnn;
  throw std::invalid_argument("unknown mode '" + s + "' (expected baseline or tnn)");
}

std::uint64_t stage_seed(std::uint64_t root, std::uint64_t stage) {
  std::uint64_t z = root + 0x9e3779b97f4a7c15ULL * (stage + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

PolicyModel bootstrap_policy(const Environment& env, const Corpus& corpus) {
  PolicyModel p;
  for (const auto& ax : env.axioms()) p.add_theorem(ax.statement, ax.name, -1);
  for (const auto& th : corpus) p.add_theorem(th.statement, th.name, th.index);
  return p;
}

void learn_proof(PolicyModel& policy, const SearchTree& tree, int index) {
  for (const auto& step : proof_steps(tree)) {
    const Goal& g = *tree.node(step.goal).goal;
    const auto& leaf = tree.node(step.leaf);
    policy.add_tactic(g, leaf.tactic, index);
    if (leaf.role == NodeRole::Argument)
      for (const auto& th : leaf.args) policy.add_theorem(g, th, index);
  }
}

// ---- evaluation ----

std::size_t EvalRun::solved() const {
  std::size_t n = 0;
  for (const auto& r : results) n += r.solved();
  return n;
}

double EvalRun::total_seconds() const {
  double s = 0;
  for (const auto& r : results) s += r.seconds;
  return s;
}

double EvalRun::creation_fraction() const {
  double c = 0;
  for (const auto& r : results) c += r.creation_seconds;
  const double t = total_seconds();
  return t > 0 ? c / t : 0.0;
}

nlohmann::json EvalRun::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : results) {
    nlohmann::json j{{"name", r.name},           {"index", r.index},
                     {"outcome", r.outcome},     {"iterations", r.iterations},
                     {"seconds", r.seconds},     {"creation_seconds", r.creation_seconds},
                     {"replay_ok", r.replay_ok}, {"error", r.error}};
    if (r.script) j["script"] = *r.script;
    arr.push_back(std::move(j));
  }
  return {{"mode", to_string(mode)}, {"results", std::move(arr)}};
}

EvalRun EvalRun::from_json(const nlohmann::json& j) {
  EvalRun run;
  run.mode = parse_mode(j.at("mode").get<std::string>());
  for (const auto& o : j.at("results")) {
    TheoremResult r;
    r.name = o.at("name").get<std::string>();
    r.index = o.at("index").get<int>();
    r.outcome = o.at("outcome").get<std::string>();
    r.iterations = o.at("iterations").get<std::int64_t>();
    r.seconds = o.at("seconds").get<double>();
    r.creation_seconds = o.at("creation_seconds").get<double>();
    r.replay_ok = o.at("replay_ok").get<bool>();
    r.error = o.value("error", std::string{});
    if (o.contains("script")) r.script = o.at("script").get<std::string>();
    run.results.push_back(std::move(r));
  }
  return run;
}

namespace {

std::unique_ptr<ValueFunction> value_for(Mode mode, const Tnn* net, const Signature& sig) {
  if (mode == Mode::Baseline) return std::make_unique<UniformValue>();
  if (!net) throw MissingWeights("tnn mode needs trained weights");
  return std::make_unique<TnnValue>(*net, sig);
}

bool audit(const std::string& script, const Goal& goal, const Environment& env, std::span<const Theorem> available,
           int budget) {
  try {
    return replay(parse_script(script), goal, env, available, budget).proves();
  } catch (const std::exception&) {
    return false;
  }
}

TheoremResult attempt(const Environment& env, const Corpus& corpus, std::size_t i, const PolicyModel& policy, const ValueFunction& value, const EvalConfig& cfg) {
  const Theorem& th = corpus[i];
  TheoremResult r;
  r.name = th.name;
  r.index = static_cast<int>(i);
  try {
    const auto items = available_items(env, corpus, i);
    ProofContext ctx{env, items.theorems, static_cast<int>(i), &policy};
    SearchResult res = search({th.statement}, ctx, value, cfg.search);
    r.outcome = to_string(res.outcome);
    r.iterations = res.stats.iterations;
    r.seconds = res.stats.total_seconds;
    r.creation_seconds = res.stats.creation_seconds;
    if (res.script) {
      r.script = res.script;
      r.replay_ok = audit(*res.script, th.statement, env, items.theorems, cfg.search.rewrite_budget);
      if (!cfg.dump_dir.empty()) {
        TreeDump d{static_cast<int>(i), th.name, r.outcome, std::move(res.tree)};
        write_dump(d, (fs::path(cfg.dump_dir) / (std::to_string(i) + "_" + th.name + ".json")).string());
      }
    }
  } catch (const std::exception& e) {
    r.outcome = "error";
    r.error = e.what();
  }
  return r;
}

}  // namespace

EvalRun eval_corpus(const Environment& env, const Corpus& corpus, Mode mode, const PolicyModel& policy,
                    const Tnn* net, const EvalConfig& cfg) {
  const auto value = value_for(mode, net, env.signature());
  if (!cfg.dump_dir.empty()) fs::create_directories(cfg.dump_dir);
  EvalRun run;
  run.mode = mode;
  run.results.resize(corpus.size());
  const std::size_t workers = std::max<std::size_t>(1, std::min(cfg.workers, corpus.size()));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < corpus.size(); i = next++)
      run.results[i] = attempt(env, corpus, i, policy, *value, cfg);
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  return run;
}

Comparison compare(const EvalRun& baseline, const EvalRun& tnn) {
  std::set<std::string> b, t;
  for (const auto& r : baseline.results)
    if (r.solved()) b.insert(r.name);
  for (const auto& r : tnn.results)
    if (r.solved()) t.insert(r.name);
  Comparison c;
  c.solved_baseline = b.size();
  c.solved_tnn = t.size();
  for (const auto& n : b) c.solved_only_baseline += !t.count(n);
  for (const auto& n : t) c.solved_only_tnn += !b.count(n);
  c.solved_combined = c.solved_baseline + c.solved_only_tnn;
  return c;
}

// ---- reports ----

Comparison EvalReport::comparison() const {
  if (tnn) return compare(baseline, *tnn);
  Comparison c;
  c.solved_baseline = c.solved_only_baseline = c.solved_combined = baseline.solved();
  return c;
}

namespace {

std::string fixed(double v, int digits) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

}  // namespace

std::string run_tsv(const EvalRun& run) {
  std::string out;
  for (const auto& r : run.results) {
    out += to_string(run.mode) + '\t' + std::to_string(r.index) + '\t' + r.name + '\t' + r.outcome + '\t' +
           (r.script ? *r.script : "-") + '\n';
  }
  return out;
}

std::string EvalReport::text() const {
  const Comparison c = comparison();
  std::ostringstream s;
  s << "theorems            " << baseline.results.size() << '\n';
  s << "solved baseline     " << c.solved_baseline << " (" << c.solved_only_baseline << " only)\n";
  if (tnn) {
    s << "solved tnn          " << c.solved_tnn << " (" << c.solved_only_tnn << " only)\n";
    s << "solved combined     " << c.solved_combined << '\n';
  }
  if (examples) s << "examples            " << examples << " (" << positives << " positive)\n";
  if (train_accuracy) s << "train accuracy      " << fixed(*train_accuracy, 3) << '\n';
  if (test_accuracy) s << "test accuracy       " << fixed(*test_accuracy, 3) << '\n';
  auto timing = [&](const EvalRun& r) {
    s << to_string(r.mode) << ": " << fixed(r.total_seconds(), 2) << " s searching, node creation "
      << fixed(100.0 * r.creation_fraction(), 1) << "%\n";
  };
  timing(baseline);
  if (tnn) timing(*tnn);
  s << '\n';
  auto rows = [&](const EvalRun& r) {
    for (const auto& t : r.results)
      s << to_string(r.mode) << "  " << std::setw(4) << t.index << "  " << std::left << std::setw(20) << t.name
        << std::right << "  " << std::setw(9) << t.outcome << "  " << std::setw(6) << t.iterations << " it  "
        << fixed(t.seconds, 3) << " s\n";
  };
  rows(baseline);
  if (tnn) rows(*tnn);
  return s.str();
}

std::string EvalReport::tsv() const {
  const Comparison c = comparison();
  std::ostringstream s;
  s << "theorems\t" << baseline.results.size() << '\n';
  s << "solved_baseline\t" << c.solved_baseline << '\n';
  s << "solved_only_baseline\t" << c.solved_only_baseline << '\n';
  if (tnn) {
    s << "solved_tnn\t" << c.solved_tnn << '\n';
    s << "solved_only_tnn\t" << c.solved_only_tnn << '\n';
    s << "solved_combined\t" << c.solved_combined << '\n';
  }
  s << "examples\t" << examples << '\n';
  s << "positives\t" << positives << '\n';
  if (train_accuracy) s << "train_accuracy\t" << fixed(*train_accuracy, 6) << '\n';
  if (test_accuracy) s << "test_accuracy\t" << fixed(*test_accuracy, 6) << '\n';
  s << run_tsv(baseline);
  if (tnn) s << run_tsv(*tnn);
  return s.str();
}

// ---- pipeline ----

namespace {

void write_text(const fs::path& p, const std::string& text) {
  const fs::path tmp = p.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << text;
  }
  fs::rename(tmp, p);
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

EvalRun cached_eval(const fs::path& file, const fs::path& trees, const Environment& env, const Corpus& corpus,
                    Mode mode, const PolicyModel& policy, const Tnn* net, EvalConfig cfg) {
  if (fs::exists(file)) return EvalRun::from_json(nlohmann::json::parse(read_text(file)));
  fs::remove_all(trees);
  cfg.dump_dir = trees.string();
  EvalRun run = eval_corpus(env, corpus, mode, policy, net, cfg);
  write_text(file, run.to_json().dump(1) + "\n");
  return run;
}

std::vector<TreeDump> load_dumps(const fs::path& dir, const EvalRun& run, const Signature& sig) {
  std::vector<TreeDump> out;
  for (const auto& r : run.results)
    if (r.solved()) out.push_back(read_dump((dir / (std::to_string(r.index) + "_" + r.name + ".json")).string(), sig));
  return out;
}

}  // namespace

EvalReport pipeline(const Environment& env, const Corpus& corpus, const std::string& out_dir,
                    const PipelineConfig& cfg) {
  const fs::path dir(out_dir);
  fs::create_directories(dir);
  const Signature& sig = env.signature();
  EvalReport report;

  const PolicyModel boot = bootstrap_policy(env, corpus);
  const EvalRun first =
      cached_eval(dir / artifacts::kBootstrapRun, dir / artifacts::kBootstrapTrees, env, corpus, Mode::Baseline,
                  boot, nullptr, cfg.eval);

  PolicyModel policy;
  if (fs::exists(dir / artifacts::kPolicy)) {
    policy = PolicyModel::read((dir / artifacts::kPolicy).string());
  } else {
    policy = boot;
    for (const auto& d : load_dumps(dir / artifacts::kBootstrapTrees, first, sig))
      learn_proof(policy, d.tree, d.attempt_id);
    const fs::path tmp = dir / (std::string(artifacts::kPolicy) + ".tmp");
    policy.write(tmp.string());
    fs::rename(tmp, dir / artifacts::kPolicy);
  }

  Dataset ds;
  if (fs::exists(dir / artifacts::kExamples)) {
    ds = Dataset::read((dir / artifacts::kExamples).string(), sig);
  } else {
    ds = extract_examples(load_dumps(dir / artifacts::kBootstrapTrees, first, sig), sig, cfg.extract);
    const fs::path tmp = dir / (std::string(artifacts::kExamples) + ".tmp");
    ds.write(tmp.string());
    fs::rename(tmp, dir / artifacts::kExamples);
  }
  report.examples = ds.size();
  report.positives = ds.positives();

  if (ds.size() < 10) {
    // Too little data to train a network; only the baseline is evaluated.
    report.baseline = cached_eval(dir / artifacts::kBaselineRun, dir / artifacts::kBaselineTrees, env, corpus,
                                  Mode::Baseline, policy, nullptr, cfg.eval);
  } else {
    TrainSchedule schedule = cfg.schedule;
    if (fs::exists(dir / artifacts::kAccuracy)) {
      auto acc = nlohmann::json::parse(read_text(dir / artifacts::kAccuracy));
      report.train_accuracy = acc.at("train").get<double>();
      report.test_accuracy = acc.at("test").get<double>();
    } else {
      auto [train, test] = split_dataset(ds, cfg.train_fraction, stage_seed(cfg.seed, 1));
      schedule.seed = stage_seed(cfg.seed, 2);
      Tnn net = train_tnn(labeled_terms(train), schedule);
      net.write((dir / artifacts::kSplitWeights).string());
      report.train_accuracy = accuracy(net, train);
      report.test_accuracy = accuracy(net, test);
      write_text(dir / artifacts::kAccuracy,
                 nlohmann::json{{"train", *report.train_accuracy}, {"test", *report.test_accuracy}}.dump() + "\n");
    }

    Tnn net;
    if (fs::exists(dir / artifacts::kWeights)) {
      net = Tnn::read((dir / artifacts::kWeights).string(), &sig);
    } else {
      std::vector<TrainExample> all = ds.examples();
      schedule.seed = stage_seed(cfg.seed, 3);
      net = train_tnn(labeled_terms(all), schedule);
      const fs::path tmp = dir / (std::string(artifacts::kWeights) + ".tmp");
      net.write(tmp.string());
      fs::rename(tmp, dir / artifacts::kWeights);
    }

    report.baseline = cached_eval(dir / artifacts::kBaselineRun, dir / artifacts::kBaselineTrees, env, corpus,
                                  Mode::Baseline, policy, nullptr, cfg.eval);
    report.tnn = cached_eval(dir / artifacts::kTnnRun, dir / artifacts::kTnnTrees, env, corpus, Mode::Tnn, policy,
                             &net, cfg.eval);
  }

  write_text(dir / artifacts::kReportText, report.text());
  write_text(dir / artifacts::kReportTsv, report.tsv());
  return report;
}

// ---- single goals ----

ProveResult prove(const Environment& env, const Corpus& corpus, const Goal& goal, Mode mode,
                  const PolicyModel& policy, const Tnn* net, const SearchConfig& cfg) {
  const auto value = value_for(mode, net, env.signature());
  const auto items = available_items(env, corpus, corpus.size());
  ProofContext ctx{env, items.theorems, static_cast<int>(corpus.size()), &policy};
  ProveResult out{search({goal}, ctx, *value, cfg), std::nullopt, false};
  if (out.search.script) {
    out.replay_ok = audit(*out.search.script, goal, env, items.theorems, cfg.rewrite_budget);
  } else {
    out.suggestion = suggest(out.search.tree, cfg.suggest_depth);
  }
  return out;
}

}  // namespace tacsearch
