#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tacsearch/corpus.hpp"
#include "tacsearch/harness.hpp"

namespace py = pybind11;
using namespace tacsearch;

namespace {

const Environment& env() {
  static const Environment e;
  return e;
}

py::dict theorem_dict(const Theorem& t) {
  py::dict d;
  d["name"] = t.name;
  d["statement"] = print_goal(t.statement);
  d["index"] = t.index;
  return d;
}

Corpus corpus_from(const std::vector<std::pair<std::string, std::string>>& rows) {
  Corpus c;
  for (const auto& [name, text] : rows) c.push_back({name, env().parse_goal(text), static_cast<int>(c.size())});
  return c;
}

std::vector<std::pair<std::string, std::string>> corpus_rows(const Corpus& c) {
  std::vector<std::pair<std::string, std::string>> rows;
  for (const auto& t : c) rows.emplace_back(t.name, print_goal(t.statement));
  return rows;
}

py::dict apply_tactic(const std::string& tactic, const std::string& goal, const std::vector<std::string>& args) {
  const Tactic* t = env().find_tactic(tactic);
  if (!t) throw std::invalid_argument("unknown tactic " + tactic);
  std::vector<Theorem> ths;
  for (const auto& name : args) {
    const Theorem* th = env().find_axiom(name);
    if (!th) throw std::invalid_argument("unknown axiom " + name);
    ths.push_back(*th);
  }
  const TacticOutcome out = env().apply(*t, ths, env().parse_goal(goal));
  py::dict d;
  d["kind"] = out.is_proved() ? "proved" : out.is_progress() ? "progress" : "failed";
  std::vector<std::string> goals;
  for (const auto& g : out.goals) goals.push_back(print_goal(g));
  d["goals"] = goals;
  d["reason"] = out.reason;
  return d;
}

py::dict prove_goal(const std::string& goal, const std::vector<std::pair<std::string, std::string>>& corpus,
                    const std::string& mode, const std::string& policy_path, const std::string& weights_path,
                    double timeout, std::int64_t loop_limit, std::uint64_t seed) {
  const Corpus c = corpus_from(corpus);
  const PolicyModel policy = policy_path.empty() ? bootstrap_policy(env(), c) : PolicyModel::read(policy_path);
  std::optional<Tnn> net;
  if (!weights_path.empty()) net = Tnn::read(weights_path, &env().signature());
  SearchConfig cfg;
  cfg.timeout = timeout;
  if (loop_limit > 0) cfg.loop_limit = loop_limit;
  cfg.seed = seed;
  ProveResult r;
  {
    py::gil_scoped_release release;
    r = prove(env(), c, env().parse_goal(goal), parse_mode(mode), policy, net ? &*net : nullptr, cfg);
  }
  py::dict d;
  d["outcome"] = to_string(r.search.outcome);
  d["script"] = r.search.script;
  d["suggestion"] = r.suggestion;
  d["replay_ok"] = r.replay_ok;
  d["iterations"] = r.search.stats.iterations;
  d["nodes"] = r.search.stats.nodes;
  d["seconds"] = r.search.stats.total_seconds;
  return d;
}

py::dict replay_script(const std::string& script, const std::string& goal,
                       const std::vector<std::pair<std::string, std::string>>& corpus) {
  const Corpus c = corpus_from(corpus);
  const auto items = available_items(env(), c, c.size());
  const ReplayResult r = replay(parse_script(script), env().parse_goal(goal), env(), items.theorems);
  py::dict d;
  d["ok"] = r.ok;
  d["proves"] = r.proves();
  std::vector<std::string> open;
  for (const auto& g : r.open_goals) open.push_back(print_goal(g));
  d["open_goals"] = open;
  d["error"] = r.error;
  return d;
}

double goal_confidence(const std::string& weights_path, const std::string& goal) {
  const Tnn net = Tnn::read(weights_path, &env().signature());
  return confidence(net, env().parse_goal(goal), env().signature());
}

py::dict run_pipeline(const std::vector<std::pair<std::string, std::string>>& corpus, const std::string& out_dir,
                      double timeout, std::int64_t loop_limit, std::uint64_t seed, int epochs, int dim,
                      std::size_t workers) {
  const Corpus c = corpus_from(corpus);
  PipelineConfig cfg;
  cfg.eval.search.timeout = timeout;
  if (loop_limit > 0) cfg.eval.search.loop_limit = loop_limit;
  cfg.eval.workers = workers;
  cfg.seed = seed;
  cfg.schedule.epochs = epochs;
  cfg.schedule.dim = dim;
  EvalReport rep;
  {
    py::gil_scoped_release release;
    rep = pipeline(env(), c, out_dir, cfg);
  }
  const Comparison cmp = rep.comparison();
  py::dict d;
  d["solved_baseline"] = cmp.solved_baseline;
  d["solved_tnn"] = cmp.solved_tnn;
  d["solved_only_baseline"] = cmp.solved_only_baseline;
  d["solved_only_tnn"] = cmp.solved_only_tnn;
  d["solved_combined"] = cmp.solved_combined;
  d["examples"] = rep.examples;
  d["positives"] = rep.positives;
  d["train_accuracy"] = rep.train_accuracy;
  d["test_accuracy"] = rep.test_accuracy;
  d["tsv"] = rep.tsv();
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Tactic tree search guided by a tree neural network";

  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<ScriptParseError>(m, "ScriptParseError", PyExc_ValueError);
  py::register_exception<TnnFormatError>(m, "TnnFormatError", PyExc_ValueError);
  py::register_exception<MissingWeights>(m, "MissingWeights", PyExc_ValueError);

  m.attr("RUNNING_EXAMPLE") = std::string(kRunningExample);

  m.def("normalize_goal", [](const std::string& text) { return print_goal(env().parse_goal(text)); },
        py::arg("text"));
  m.def("encode_goal", [](const std::string& text) {
    return print_term(encode_goal(env().parse_goal(text), env().signature()));
  }, py::arg("text"));
  m.def("operator_count", [](const std::string& text) {
    return operator_count(encode_goal(env().parse_goal(text), env().signature()));
  }, py::arg("text"));
  m.def("tactics", [] {
    std::vector<std::string> names;
    for (const auto& t : env().tactics()) names.push_back(t.name);
    return names;
  });
  m.def("axioms", [] {
    py::list out;
    for (const auto& t : env().axioms()) out.append(theorem_dict(t));
    return out;
  });
  m.def("apply_tactic", &apply_tactic, py::arg("tactic"), py::arg("goal"), py::arg("args") = std::vector<std::string>{});
  m.def("generate_corpus", [](std::size_t size, std::uint64_t seed) {
    return corpus_rows(generate_corpus(env(), size, seed));
  }, py::arg("size") = 200, py::arg("seed") = 1);
  m.def("prove", &prove_goal, py::arg("goal"), py::arg("corpus") = std::vector<std::pair<std::string, std::string>>{},
        py::arg("mode") = "baseline", py::arg("policy") = "", py::arg("weights") = "", py::arg("timeout") = 30.0,
        py::arg("loop_limit") = 0, py::arg("seed") = 0);
  m.def("replay", &replay_script, py::arg("script"), py::arg("goal"),
        py::arg("corpus") = std::vector<std::pair<std::string, std::string>>{});
  m.def("render_script", [](const std::string& s) { return render_script(parse_script(s)); }, py::arg("script"));
  m.def("confidence", &goal_confidence, py::arg("weights"), py::arg("goal"));
  m.def("pipeline", &run_pipeline, py::arg("corpus"), py::arg("out_dir"), py::arg("timeout") = 5.0,
        py::arg("loop_limit") = 0, py::arg("seed") = 1, py::arg("epochs") = 100, py::arg("dim") = 16,
        py::arg("workers") = 1);
}
