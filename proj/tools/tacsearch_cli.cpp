#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "tacsearch/corpus.hpp"
#include "tacsearch/dataset.hpp"
#include "tacsearch/harness.hpp"

namespace fs = std::filesystem;
using namespace tacsearch;

namespace {

struct Common {
  std::string corpus;
  std::string weights;
  std::string policy;
  double timeout = 0;
  std::int64_t loop_limit = 0;
  int suggest_depth = 0;
  std::uint64_t seed = 1;
  std::string mode = "baseline";
  std::string out;
  std::size_t workers = 1;
};

void add_common(CLI::App* app, Common& c, double default_timeout) {
  c.timeout = default_timeout;
  app->add_option("--corpus", c.corpus, "Corpus file (name<TAB>statement per line)");
  app->add_option("--weights", c.weights, "TNN weights file");
  app->add_option("--policy", c.policy, "Policy file; defaults to the corpus statements only");
  app->add_option("--timeout", c.timeout, "Seconds per proof attempt")->capture_default_str();
  app->add_option("--loop-limit", c.loop_limit, "Maximum search iterations (0: none)");
  app->add_option("--suggest-depth", c.suggest_depth, "Depth of suggested scripts (0: unlimited)");
  app->add_option("--seed", c.seed, "Root seed")->capture_default_str();
  app->add_option("--mode", c.mode, "baseline or tnn")->capture_default_str();
  app->add_option("--out", c.out, "Output file or directory");
  app->add_option("--workers", c.workers, "Concurrent proof attempts")->capture_default_str();
}

SearchConfig search_config(const Common& c) {
  SearchConfig cfg;
  cfg.timeout = c.timeout;
  if (c.loop_limit > 0) cfg.loop_limit = c.loop_limit;
  if (c.suggest_depth > 0) cfg.suggest_depth = c.suggest_depth;
  cfg.seed = c.seed;
  return cfg;
}

Corpus load_corpus(const Environment& env, const Common& c) {
  if (c.corpus.empty()) return {};
  return read_corpus(c.corpus, env.signature());
}

PolicyModel load_policy(const Environment& env, const Corpus& corpus, const Common& c) {
  if (!c.policy.empty()) return PolicyModel::read(c.policy);
  return bootstrap_policy(env, corpus);
}

std::optional<Tnn> load_weights(const Environment& env, const Common& c) {
  if (c.weights.empty()) return std::nullopt;
  return Tnn::read(c.weights, &env.signature());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tactic proof search guided by a tree neural network"};
  app.require_subcommand(1);
  const Environment env;

  Common eval_o, pipe_o, prove_o, suggest_o, conf_o, train_o, extract_o, gen_o;

  auto* eval = app.add_subcommand("eval", "Attempt every corpus theorem with earlier theorems available");
  add_common(eval, eval_o, 5.0);

  auto* pipe = app.add_subcommand("pipeline", "Run the full train and evaluate cycle");
  add_common(pipe, pipe_o, 5.0);
  std::size_t corpus_size = 200;
  pipe->add_option("--size", corpus_size, "Generated corpus size when --corpus is absent")->capture_default_str();

  auto* prove_cmd = app.add_subcommand("prove", "Search for a proof of one goal");
  add_common(prove_cmd, prove_o, 30.0);
  std::string goal_text;
  bool want_suggest = false;
  prove_cmd->add_option("goal", goal_text, "Goal text")->required();
  prove_cmd->add_flag("--suggest", want_suggest, "Print the most promising partial proof on failure");

  auto* suggest_cmd = app.add_subcommand("suggest", "Partial proof from a saved search tree");
  add_common(suggest_cmd, suggest_o, 30.0);
  std::string dump_path;
  suggest_cmd->add_option("tree", dump_path, "Tree dump written by prove")->required()->check(CLI::ExistingFile);

  auto* conf = app.add_subcommand("confidence", "Estimated provability of a goal");
  add_common(conf, conf_o, 30.0);
  std::string conf_goal;
  conf->add_option("goal", conf_goal, "Goal text")->required();

  auto* train = app.add_subcommand("train-tnn", "Train a TNN on an examples file");
  add_common(train, train_o, 30.0);
  std::string examples_path;
  int epochs = 100, dim = 16;
  train->add_option("examples", examples_path, "Examples file")->required()->check(CLI::ExistingFile);
  train->add_option("--epochs", epochs)->capture_default_str();
  train->add_option("--dim", dim)->capture_default_str();

  auto* extract = app.add_subcommand("extract", "Training examples from tree dumps");
  add_common(extract, extract_o, 30.0);
  std::vector<std::string> dump_inputs;
  extract->add_option("dumps", dump_inputs, "Tree dump files or directories")->required();

  auto* gen = app.add_subcommand("gen-corpus", "Write a generated toy corpus");
  add_common(gen, gen_o, 30.0);
  std::size_t gen_size = 200;
  gen->add_option("--size", gen_size)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    const Signature& sig = env.signature();
    if (*eval) {
      const Corpus corpus = load_corpus(env, eval_o);
      const PolicyModel policy = load_policy(env, corpus, eval_o);
      const Mode mode = parse_mode(eval_o.mode);
      auto net = load_weights(env, eval_o);
      EvalConfig cfg{search_config(eval_o), eval_o.workers, {}};
      if (!eval_o.out.empty()) {
        fs::create_directories(eval_o.out);
        cfg.dump_dir = (fs::path(eval_o.out) / "trees").string();
      }
      EvalReport report;
      report.baseline = eval_corpus(env, corpus, mode, policy, net ? &*net : nullptr, cfg);
      if (!eval_o.out.empty()) {
        std::ofstream(fs::path(eval_o.out) / "eval.json") << report.baseline.to_json().dump(1) << '\n';
        std::ofstream(fs::path(eval_o.out) / "report.tsv") << run_tsv(report.baseline);
      }
      std::cout << report.text();
    } else if (*pipe) {
      Corpus corpus = pipe_o.corpus.empty() ? generate_corpus(env, corpus_size, pipe_o.seed) : load_corpus(env, pipe_o);
      const std::string out = pipe_o.out.empty() ? "pipeline_out" : pipe_o.out;
      fs::create_directories(out);
      if (pipe_o.corpus.empty()) write_corpus(corpus, (fs::path(out) / "corpus.txt").string());
      PipelineConfig cfg;
      cfg.eval = {search_config(pipe_o), pipe_o.workers, {}};
      cfg.seed = pipe_o.seed;
      std::cout << pipeline(env, corpus, out, cfg).text();
    } else if (*prove_cmd) {
      const Corpus corpus = load_corpus(env, prove_o);
      const PolicyModel policy = load_policy(env, corpus, prove_o);
      auto net = load_weights(env, prove_o);
      const Goal goal = parse_goal(goal_text, sig);
      ProveResult res = prove(env, corpus, goal, parse_mode(prove_o.mode), policy, net ? &*net : nullptr,
                              search_config(prove_o));
      if (!prove_o.out.empty()) write_dump({0, goal.text(), to_string(res.search.outcome), res.search.tree}, prove_o.out);
      if (res.search.script) {
        std::cout << *res.search.script << '\n';
        std::cerr << "proved after " << res.search.stats.iterations << " iterations"
                  << (res.replay_ok ? "" : " (replay FAILED)") << '\n';
        return res.replay_ok ? 0 : 3;
      }
      std::cout << "no proof: " << to_string(res.search.outcome) << " after " << res.search.stats.iterations
                << " iterations\n";
      if (want_suggest) std::cout << (res.suggestion ? *res.suggestion : "no suggestion") << '\n';
      return 1;
    } else if (*suggest_cmd) {
      const TreeDump d = read_dump(dump_path, sig);
      std::optional<int> depth;
      if (suggest_o.suggest_depth > 0) depth = suggest_o.suggest_depth;
      auto s = suggest(d.tree, depth);
      if (!s) {
        std::cout << "no suggestion\n";
        return 1;
      }
      std::cout << *s << '\n';
    } else if (*conf) {
      auto net = load_weights(env, conf_o);
      if (!net) throw MissingWeights("confidence needs --weights");
      std::cout << confidence(*net, parse_goal(conf_goal, sig), sig) << '\n';
    } else if (*train) {
      const Dataset ds = Dataset::read(examples_path, sig);
      TrainSchedule schedule;
      schedule.epochs = epochs;
      schedule.dim = dim;
      schedule.seed = train_o.seed;
      const Tnn net = train_tnn(labeled_terms(ds.examples()), schedule);
      net.write(train_o.out.empty() ? "tnn.txt" : train_o.out);
      std::cout << "accuracy on training examples " << accuracy(net, ds.examples()) << '\n';
    } else if (*extract) {
      std::vector<TreeDump> dumps;
      for (const auto& in : dump_inputs) {
        if (fs::is_directory(in)) {
          std::vector<fs::path> files;
          for (const auto& e : fs::directory_iterator(in))
            if (e.path().extension() == ".json") files.push_back(e.path());
          std::sort(files.begin(), files.end());
          for (const auto& f : files) dumps.push_back(read_dump(f.string(), sig));
        } else {
          dumps.push_back(read_dump(in, sig));
        }
      }
      const Dataset ds = extract_examples(dumps, sig);
      ds.write(extract_o.out.empty() ? "examples.tsv" : extract_o.out);
      std::cout << ds.size() << " examples, " << ds.positives() << " positive\n";
    } else if (*gen) {
      const Corpus corpus = generate_corpus(env, gen_size, gen_o.seed);
      if (gen_o.out.empty()) {
        std::ostringstream s;
        for (const auto& th : corpus) s << th.name << '\t' << th.statement.text() << '\n';
        std::cout << s.str();
      } else {
        write_corpus(corpus, gen_o.out);
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
