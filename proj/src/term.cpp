#include "tacsearch/term.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <functional>
#include <sstream>
#include <unordered_set>

namespace tacsearch {

namespace {

bool is_delim(char c) {
  return c == '(' || c == ')' || std::isspace(static_cast<unsigned char>(c));
}

}  // namespace

Signature::Signature(const std::vector<Operator>& ops) {
  for (const auto& op : ops) add(op);
}

Signature Signature::standard() {
  return Signature({{"SUC", 1},
                    {"+", 2},
                    {"*", 2},
                    {"SUM", 2},
                    {"@", 2},
                    {"=", 2},
                    {"==>", 2},
                    {"/\\", 2},
                    {"I", 0},
                    {"D", 0},
                    {"S", 0},
                    {"Z", 0},
                    {"SQ", 0}});
}

Signature Signature::parse(std::string_view text) {
  Signature sig;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::string name;
    if (!(ls >> name)) continue;
    int arity = -1;
    if (!(ls >> arity) || arity < 0) throw std::runtime_error("signature: bad arity for " + name);
    sig.add({name, arity});
  }
  return sig;
}

Signature Signature::read(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open signature file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void Signature::add(const Operator& op) {
  if (!valid_name(op.name)) throw std::invalid_argument("invalid operator name '" + op.name + "'");
  if (op.arity < 0) throw std::invalid_argument("negative arity for " + op.name);
  auto it = ops_.find(op.name);
  if (it != ops_.end() && it->second != op.arity)
    throw std::invalid_argument("operator " + op.name + " declared with two arities");
  ops_[op.name] = op.arity;
}

bool Signature::declared(std::string_view name) const { return ops_.find(name) != ops_.end(); }

std::optional<int> Signature::arity_of(std::string_view name) const {
  if (auto it = ops_.find(name); it != ops_.end()) return it->second;
  if (is_numeral(name) || is_variable(name)) return 0;
  return std::nullopt;
}

int Signature::max_arity() const {
  int m = 0;
  for (const auto& [_, a] : ops_) m = std::max(m, a);
  return m;
}

bool Signature::is_numeral(std::string_view name) {
  return !name.empty() && std::all_of(name.begin(), name.end(),
                                      [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

bool Signature::is_variable(std::string_view name) const {
  if (name.empty() || !std::islower(static_cast<unsigned char>(name[0]))) return false;
  if (declared(name)) return false;
  return std::all_of(name.begin(), name.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\'';
  });
}

bool Signature::valid_name(std::string_view name) {
  if (name.empty() || name == "|-") return false;
  return std::none_of(name.begin(), name.end(), is_delim);
}

Term::Term(std::string head, std::vector<Term> args) {
  auto node = std::make_shared<Node>();
  node->size = 1;
  if (args.empty()) {
    node->text = head;
  } else {
    std::size_t len = head.size() + 2;
    for (const auto& a : args) len += a.text().size() + 1;
    node->text.reserve(len);
    node->text += '(';
    node->text += head;
    for (const auto& a : args) {
      node->text += ' ';
      node->text += a.text();
      node->size += a.size();
    }
    node->text += ')';
  }
  node->hash = std::hash<std::string>{}(node->text);
  node->head = std::move(head);
  node->args = std::move(args);
  node_ = std::move(node);
}

std::string Goal::text() const {
  if (assumptions.empty()) return conclusion.text();
  std::string s;
  for (const auto& a : assumptions) {
    s += a.text();
    s += ' ';
  }
  s += "|- ";
  s += conclusion.text();
  return s;
}

bool Goal::operator==(const Goal& o) const {
  return conclusion == o.conclusion && assumptions == o.assumptions;
}

std::size_t GoalHash::operator()(const Goal& g) const {
  std::size_t h = g.conclusion.hash();
  for (const auto& a : g.assumptions) h = h * 1000003u ^ a.hash();
  return h;
}

namespace {

class Parser {
 public:
  Parser(std::string_view text, const Signature& sig) : s_(text), sig_(sig) {}

  Term term() {
    skip_ws();
    if (pos_ >= s_.size()) throw ParseError("unexpected end of input", pos_);
    if (s_[pos_] == ')') throw ParseError("unexpected ')'", pos_);
    if (s_[pos_] == '(') {
      std::size_t open = pos_++;
      skip_ws();
      std::size_t head_pos = pos_;
      std::string head = token();
      if (head.empty()) throw ParseError("expected operator after '('", pos_);
      auto arity = sig_.arity_of(head);
      if (!arity || !sig_.declared(head)) throw ParseError("unknown operator '" + head + "'", head_pos);
      std::vector<Term> args;
      for (;;) {
        skip_ws();
        if (pos_ >= s_.size()) throw ParseError("unclosed '('", open);
        if (s_[pos_] == ')') break;
        args.push_back(term());
      }
      ++pos_;
      if (static_cast<int>(args.size()) != *arity || *arity == 0)
        throw ParseError("arity mismatch for '" + head + "': expected " + std::to_string(*arity) +
                             ", got " + std::to_string(args.size()),
                         head_pos);
      return Term(std::move(head), std::move(args));
    }
    std::size_t at = pos_;
    std::string name = token();
    auto arity = sig_.arity_of(name);
    if (!arity) throw ParseError("unknown operator '" + name + "'", at);
    if (*arity != 0)
      throw ParseError("arity mismatch for '" + name + "': expected " + std::to_string(*arity) + ", got 0",
                       at);
    return Term(std::move(name));
  }

  std::string peek_token() {
    skip_ws();
    std::size_t save = pos_;
    std::string t = token();
    pos_ = save;
    return t;
  }
  void skip_token() {
    skip_ws();
    token();
  }
  bool at_end() {
    skip_ws();
    return pos_ >= s_.size();
  }
  std::size_t pos() const { return pos_; }

 private:
  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  std::string token() {
    std::size_t b = pos_;
    while (pos_ < s_.size() && !is_delim(s_[pos_])) ++pos_;
    return std::string(s_.substr(b, pos_ - b));
  }

  std::string_view s_;
  const Signature& sig_;
  std::size_t pos_ = 0;
};

}  // namespace

Term parse_term(std::string_view text, const Signature& sig) {
  Parser p(text, sig);
  Term t = p.term();
  if (!p.at_end()) throw ParseError("trailing input", p.pos());
  return t;
}

std::string print_term(const Term& t) { return t.text(); }

std::size_t operator_count(const Term& t) { return t.size(); }

Goal parse_goal(std::string_view text, const Signature& sig) {
  Parser p(text, sig);
  std::vector<Term> terms;
  bool turnstile = false;
  while (!p.at_end()) {
    if (p.peek_token() == "|-") {
      if (turnstile) throw ParseError("second '|-'", p.pos());
      turnstile = true;
      p.skip_token();
      Term c = p.term();
      if (!p.at_end()) throw ParseError("trailing input after conclusion", p.pos());
      return Goal(std::move(terms), std::move(c));
    }
    terms.push_back(p.term());
  }
  if (terms.size() != 1) throw ParseError("expected a single conclusion or '|-'", p.pos());
  return Goal(std::move(terms.front()));
}

std::string print_goal(const Goal& g) { return g.text(); }

Term encode_goal(const Goal& g, const Signature& sig) {
  if (sig.arity_of(kImplies) != 2) throw std::invalid_argument("signature lacks binary ==>");
  Term t = g.conclusion;
  for (auto it = g.assumptions.rbegin(); it != g.assumptions.rend(); ++it)
    t = Term(std::string(kImplies), {*it, t});
  return t;
}

std::vector<std::string> free_variables(const Term& t, const Signature& sig) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  std::function<void(const Term&)> walk = [&](const Term& u) {
    if (u.is_leaf()) {
      if (sig.is_variable(u.head()) && seen.insert(u.head()).second) out.push_back(u.head());
      return;
    }
    for (const auto& a : u.args()) walk(a);
  };
  walk(t);
  return out;
}

Term substitute(const Term& t, std::string_view var, const Term& by) {
  if (t.is_leaf()) return t.head() == var ? by : t;
  if (!contains_variable(t, var)) return t;
  std::vector<Term> args;
  args.reserve(t.arity());
  for (const auto& a : t.args()) args.push_back(substitute(a, var, by));
  return Term(t.head(), std::move(args));
}

bool contains_variable(const Term& t, std::string_view var) {
  if (t.is_leaf()) return t.head() == var;
  return std::any_of(t.args().begin(), t.args().end(),
                     [&](const Term& a) { return contains_variable(a, var); });
}

std::vector<std::string> operator_names(const Term& t) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  std::function<void(const Term&)> walk = [&](const Term& u) {
    if (seen.insert(u.head()).second) out.push_back(u.head());
    for (const auto& a : u.args()) walk(a);
  };
  walk(t);
  return out;
}

}  // namespace tacsearch
