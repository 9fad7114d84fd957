#include "tacsearch/tnn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <string_view>
#include <unordered_map>

namespace tacsearch {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

Tnn::Layer make_layer(int arity, int dim) {
  Tnn::Layer l;
  l.arity = arity;
  l.weight = Eigen::MatrixXd::Zero(arity == 0 ? 0 : dim, arity * dim);
  l.bias = Eigen::VectorXd::Zero(dim);
  return l;
}

void collect(const Term& t, std::map<std::string, int>& out) {
  out.try_emplace(t.head(), static_cast<int>(t.arity()));
  for (const auto& a : t.args()) collect(a, out);
}

struct GraphNode {
  const std::string* layer;
  std::vector<int> kids;
  Eigen::VectorXd input;
  Eigen::VectorXd out;
};

}  // namespace

int TrainSchedule::batch_size_at(int epoch) const {
  const int phases = static_cast<int>(batch_sizes.size());
  const int per_phase = epochs / phases;
  return batch_sizes[std::min(epoch / per_phase, phases - 1)];
}

Tnn Tnn::zeros(int dim, const std::vector<Operator>& ops, int max_unknown_arity) {
  if (dim <= 0) throw std::invalid_argument("embedding dimension must be positive");
  Tnn net;
  net.dim_ = dim;
  net.max_unknown_arity_ = max_unknown_arity;
  for (const auto& op : ops) net.layers_.try_emplace(op.name, make_layer(op.arity, dim));
  net.layers_.try_emplace(std::string(kImplies), make_layer(2, dim));
  for (int a = 0; a <= max_unknown_arity; ++a) net.layers_.try_emplace(unknown_name(a), make_layer(a, dim));
  net.head_.arity = 1;
  net.head_.weight = Eigen::MatrixXd::Zero(1, dim);
  net.head_.bias = Eigen::VectorXd::Zero(1);
  return net;
}

Tnn Tnn::create(int dim, const std::vector<Operator>& ops, int max_unknown_arity, std::uint64_t seed) {
  Tnn net = zeros(dim, ops, max_unknown_arity);
  std::mt19937_64 rng(seed);
  for (auto& [_, l] : net.layers_) {
    if (l.arity == 0) {
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias[i] = u(rng);
    } else {
      const double r = 1.0 / std::sqrt(static_cast<double>(l.weight.cols()));
      std::uniform_real_distribution<double> u(-r, r);
      for (Eigen::Index i = 0; i < l.weight.rows(); ++i)
        for (Eigen::Index j = 0; j < l.weight.cols(); ++j) l.weight(i, j) = u(rng);
    }
  }
  const double r = 1.0 / std::sqrt(static_cast<double>(dim));
  std::uniform_real_distribution<double> u(-r, r);
  for (Eigen::Index j = 0; j < net.head_.weight.cols(); ++j) net.head_.weight(0, j) = u(rng);
  return net;
}

const std::string& Tnn::layer_name(const std::string& op, int arity) const {
  if (auto it = layers_.find(op); it != layers_.end() && it->second.arity == arity) return it->first;
  if (arity > max_unknown_arity_)
    throw std::out_of_range("operator '" + op + "' has arity " + std::to_string(arity) +
                            " beyond the unknown slots");
  return layers_.find(unknown_name(arity))->first;
}

namespace {

Eigen::VectorXd embed_node(const Tnn& net, const Term& t,
                           std::unordered_map<std::string_view, Eigen::VectorXd>* memo) {
  if (memo) {
    if (auto it = memo->find(t.text()); it != memo->end()) return it->second;
  }
  const auto& layer = net.layers().at(net.layer_name(t.head(), static_cast<int>(t.arity())));
  Eigen::VectorXd out;
  if (layer.arity == 0) {
    out = layer.bias;
  } else {
    const int d = net.dim();
    Eigen::VectorXd x(layer.arity * d);
    for (int i = 0; i < layer.arity; ++i) x.segment(i * d, d) = embed_node(net, t.arg(i), memo);
    out = (layer.weight * x + layer.bias).array().tanh().matrix();
  }
  if (memo) memo->emplace(t.text(), out);
  return out;
}

double head_value(const Tnn& net, const Eigen::VectorXd& e) {
  return sigmoid(net.head().weight.row(0).dot(e) + net.head().bias[0]);
}

}  // namespace

Eigen::VectorXd Tnn::embed(const Term& t) const {
  std::unordered_map<std::string_view, Eigen::VectorXd> memo;
  return embed_node(*this, t, &memo);
}

double Tnn::infer(const Term& t) const { return head_value(*this, embed(t)); }

double Tnn::infer_unshared(const Term& t) const { return head_value(*this, embed_node(*this, t, nullptr)); }

std::size_t Tnn::parameter_count() const {
  std::size_t n = static_cast<std::size_t>(head_.weight.size() + head_.bias.size());
  for (const auto& [_, l] : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

bool Tnn::all_finite() const {
  if (!head_.weight.allFinite() || !head_.bias.allFinite()) return false;
  for (const auto& [_, l] : layers_)
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  return true;
}

void Tnn::add_scaled(const Tnn& other, double scale) {
  for (auto& [name, l] : layers_) {
    const auto& o = other.layers_.at(name);
    l.weight += scale * o.weight;
    l.bias += scale * o.bias;
  }
  head_.weight += scale * other.head_.weight;
  head_.bias += scale * other.head_.bias;
}

void Tnn::set_zero() {
  for (auto& [_, l] : layers_) {
    l.weight.setZero();
    l.bias.setZero();
  }
  head_.weight.setZero();
  head_.bias.setZero();
}

double Tnn::accumulate_gradient(const Term& t, double label, Tnn& grad,
                                const std::unordered_set<std::string>* masked, bool unknown_only) const {
  const int d = dim_;
  std::vector<GraphNode> nodes;
  std::unordered_map<std::string_view, int> index;

  // Post-order over distinct subterms: children always precede parents.
  auto build = [&](auto&& self, const Term& u) -> int {
    if (auto it = index.find(u.text()); it != index.end()) return it->second;
    GraphNode n;
    const int arity = static_cast<int>(u.arity());
    n.layer = (masked && masked->count(u.head())) ? &layers_.find(unknown_name(arity))->first
                                                   : &layer_name(u.head(), arity);
    for (const auto& a : u.args()) n.kids.push_back(self(self, a));
    const auto& layer = layers_.at(*n.layer);
    if (arity == 0) {
      n.out = layer.bias;
    } else {
      n.input.resize(arity * d);
      for (int i = 0; i < arity; ++i) n.input.segment(i * d, d) = nodes[n.kids[i]].out;
      n.out = (layer.weight * n.input + layer.bias).array().tanh().matrix();
    }
    nodes.push_back(std::move(n));
    int id = static_cast<int>(nodes.size()) - 1;
    index.emplace(u.text(), id);
    return id;
  };
  const int root = build(build, t);

  const Eigen::VectorXd& e = nodes[root].out;
  const double v = head_value(*this, e);
  const double err = v - label;
  const double dz = 2.0 * err * v * (1.0 - v);

  auto trains = [&](const std::string& name) { return !unknown_only || name.rfind("#unk", 0) == 0; };

  if (!unknown_only) {
    grad.head_.weight.row(0) += dz * e.transpose();
    grad.head_.bias[0] += dz;
  }
  std::vector<Eigen::VectorXd> de(nodes.size(), Eigen::VectorXd::Zero(d));
  de[root] = dz * head_.weight.row(0).transpose();
  for (int i = root; i >= 0; --i) {
    const auto& n = nodes[i];
    const auto& layer = layers_.at(*n.layer);
    auto& g = grad.layers_.at(*n.layer);
    if (layer.arity == 0) {
      if (trains(*n.layer)) g.bias += de[i];
      continue;
    }
    Eigen::VectorXd pre = de[i].array() * (1.0 - n.out.array().square());
    if (trains(*n.layer)) {
      g.weight.noalias() += pre * n.input.transpose();
      g.bias += pre;
    }
    Eigen::VectorXd dx = layer.weight.transpose() * pre;
    for (std::size_t k = 0; k < n.kids.size(); ++k) de[n.kids[k]] += dx.segment(static_cast<Eigen::Index>(k) * d, d);
  }
  return err * err;
}

// ---- serialization ----

namespace {

void write_row(std::ostream& out, const double* data, Eigen::Index n) {
  char buf[32];
  for (Eigen::Index i = 0; i < n; ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", data[i]);
    if (i) out << ' ';
    out << buf;
  }
  out << '\n';
}

void write_layer(std::ostream& out, const Tnn::Layer& l) {
  for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
    Eigen::RowVectorXd row = l.weight.row(r);
    write_row(out, row.data(), row.size());
  }
  write_row(out, l.bias.data(), l.bias.size());
}

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  std::string next(const char* what) {
    std::string line;
    while (std::getline(in_, line)) {
      ++lineno_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) return line;
    }
    throw TnnFormatError(std::string("truncated weight file: expected ") + what + " after line " +
                         std::to_string(lineno_));
  }

  std::vector<double> row(Eigen::Index n, const char* what) {
    std::string line = next(what);
    std::vector<double> vals;
    const char* p = line.c_str();
    char* end = nullptr;
    for (;;) {
      while (*p == ' ' || *p == '\t') ++p;
      if (!*p) break;
      double x = std::strtod(p, &end);
      if (end == p) throw TnnFormatError("line " + std::to_string(lineno_) + ": bad number");
      vals.push_back(x);
      p = end;
    }
    if (static_cast<Eigen::Index>(vals.size()) != n)
      throw TnnFormatError("line " + std::to_string(lineno_) + ": expected " + std::to_string(n) +
                           " values for " + what + ", got " + std::to_string(vals.size()));
    return vals;
  }

  bool eof() {
    while (in_.peek() == '\n' || in_.peek() == '\r') {
      in_.get();
      ++lineno_;
    }
    return in_.peek() == std::char_traits<char>::eof();
  }
  std::size_t lineno() const { return lineno_; }

 private:
  std::istream& in_;
  std::size_t lineno_ = 0;
};

void read_layer(LineReader& r, Tnn::Layer& l, int dim, const char* what) {
  for (Eigen::Index i = 0; i < l.weight.rows(); ++i) {
    auto vals = r.row(l.weight.cols(), what);
    for (Eigen::Index j = 0; j < l.weight.cols(); ++j) l.weight(i, j) = vals[j];
  }
  auto b = r.row(l.bias.size(), what);
  for (Eigen::Index j = 0; j < l.bias.size(); ++j) l.bias[j] = b[j];
  (void)dim;
}

}  // namespace

std::string Tnn::to_text() const {
  std::ostringstream out;
  out << "tnn d=" << dim_ << '\n';
  for (const auto& [name, l] : layers_) {
    out << "op " << name << ' ' << l.arity << '\n';
    write_layer(out, l);
  }
  out << "head\n";
  write_layer(out, head_);
  return out.str();
}

void Tnn::write(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write weights " + path);
  out << to_text();
}

Tnn Tnn::from_text(const std::string& text, const Signature* sig) {
  std::istringstream in(text);
  LineReader r(in);
  std::string header;
  try {
    header = r.next("header");
  } catch (const TnnFormatError&) {
    throw TnnFormatError("empty weight file");
  }
  int dim = 0;
  if (std::sscanf(header.c_str(), "tnn d=%d", &dim) != 1 || dim <= 0)
    throw TnnFormatError("bad header '" + header + "'");
  Tnn net;
  net.dim_ = dim;
  bool have_head = false;
  while (!r.eof()) {
    std::string line = r.next("block");
    std::istringstream ls(line);
    std::string kw;
    ls >> kw;
    if (kw == "op") {
      std::string name;
      int arity = -1;
      if (!(ls >> name >> arity) || arity < 0) throw TnnFormatError("bad op line '" + line + "'");
      if (sig) {
        auto declared = sig->declared_operators().find(name);
        if (declared != sig->declared_operators().end() && declared->second != arity)
          throw TnnFormatError("shape mismatch: operator " + name + " has arity " + std::to_string(arity) +
                               " but the signature declares " + std::to_string(declared->second));
      }
      Layer l = make_layer(arity, dim);
      read_layer(r, l, dim, name.c_str());
      if (name.rfind("#unk", 0) == 0) net.max_unknown_arity_ = std::max(net.max_unknown_arity_, arity);
      net.layers_[name] = std::move(l);
    } else if (kw == "head") {
      net.head_.arity = 1;
      net.head_.weight = Eigen::MatrixXd::Zero(1, dim);
      net.head_.bias = Eigen::VectorXd::Zero(1);
      read_layer(r, net.head_, dim, "head");
      have_head = true;
    } else {
      throw TnnFormatError("unexpected line '" + line + "'");
    }
  }
  if (!have_head) throw TnnFormatError("truncated weight file: missing head block");
  for (int a = 0; a <= net.max_unknown_arity_; ++a)
    if (!net.layers_.count(unknown_name(a))) throw TnnFormatError("missing unknown slot " + unknown_name(a));
  if (!net.all_finite()) throw TnnFormatError("non-finite parameter");
  return net;
}

Tnn Tnn::read(const std::string& path, const Signature* sig) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open weights " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_text(ss.str(), sig);
}

// ---- training ----

std::vector<Operator> collect_operators(const std::vector<LabeledTerm>& examples) {
  std::map<std::string, int> ops;
  for (const auto& ex : examples) collect(ex.term, ops);
  std::vector<Operator> out;
  for (auto& [n, a] : ops) out.push_back({n, a});
  return out;
}

double mean_squared_error(const Tnn& net, const std::vector<LabeledTerm>& examples) {
  if (examples.empty()) return 0.0;
  double s = 0.0;
  for (const auto& ex : examples) {
    double e = net.infer(ex.term) - ex.label;
    s += e * e;
  }
  return s / static_cast<double>(examples.size());
}

Tnn train_tnn(const std::vector<LabeledTerm>& examples, const TrainSchedule& schedule,
              const TrainOptions& options) {
  if (examples.empty()) throw std::invalid_argument("train_tnn: no examples");
  if (schedule.batch_sizes.empty() || schedule.epochs <= 0 ||
      schedule.epochs % static_cast<int>(schedule.batch_sizes.size()) != 0)
    throw std::invalid_argument("train_tnn: epochs must be a positive multiple of the number of batch sizes");

  auto ops = collect_operators(examples);
  for (const auto& op : options.operators)
    if (std::none_of(ops.begin(), ops.end(), [&](const Operator& o) { return o.name == op.name; }))
      ops.push_back(op);
  int max_arity = 2;
  for (const auto& op : ops) max_arity = std::max(max_arity, op.arity);

  Tnn net = Tnn::create(schedule.dim, ops, max_arity, schedule.seed);
  Tnn grad = Tnn::zeros(schedule.dim, ops, max_arity);
  std::mt19937_64 rng(schedule.seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> coin(0.0, 1.0);

  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < schedule.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    const auto batch = static_cast<std::size_t>(schedule.batch_size_at(epoch));
    for (std::size_t start = 0, b = 0; start < order.size(); start += batch, ++b) {
      const std::size_t end = std::min(order.size(), start + batch);
      grad.set_zero();
      double loss = 0.0;
      for (std::size_t i = start; i < end; ++i) {
        const auto& ex = examples[order[i]];
        if (coin(rng) < schedule.unknown_rate) {
          auto names = operator_names(ex.term);
          std::unordered_set<std::string> masked{names[rng() % names.size()]};
          loss += net.accumulate_gradient(ex.term, ex.label, grad, &masked, true);
        } else {
          loss += net.accumulate_gradient(ex.term, ex.label, grad);
        }
      }
      if (!std::isfinite(loss))
        throw TrainingError("non-finite loss at epoch " + std::to_string(epoch + 1) + ", batch " +
                            std::to_string(b + 1));
      net.add_scaled(grad, -schedule.learning_rate / static_cast<double>(end - start));
    }
    if (options.on_epoch) options.on_epoch(epoch + 1, mean_squared_error(net, examples));
  }
  return net;
}

double infer_value(const Tnn& net, const Term& t) { return net.infer(t); }

double confidence(const Tnn& net, const Goal& g, const Signature& sig) {
  return net.infer(encode_goal(g, sig));
}

}  // namespace tacsearch
