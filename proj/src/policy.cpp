#include "tacsearch/policy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace tacsearch {

FeatureVector extract_features(const Goal& g) {
  std::set<std::string> fs;
  std::function<void(const Term&)> walk = [&](const Term& t) {
    fs.insert(t.text());
    fs.insert(t.head());
    for (const auto& a : t.args()) walk(a);
  };
  for (const auto& a : g.assumptions) walk(a);
  walk(g.conclusion);
  return {fs.begin(), fs.end()};
}

PolicyModel::PolicyModel(const PolicyModel& o)
    : pairs_(o.pairs_), feature_names_(o.feature_names_), feature_ids_(o.feature_ids_), df_(o.df_) {}

PolicyModel::PolicyModel(PolicyModel&& o) noexcept
    : pairs_(std::move(o.pairs_)),
      feature_names_(std::move(o.feature_names_)),
      feature_ids_(std::move(o.feature_ids_)),
      df_(std::move(o.df_)) {}

PolicyModel& PolicyModel::operator=(PolicyModel o) noexcept {
  pairs_ = std::move(o.pairs_);
  feature_names_ = std::move(o.feature_names_);
  feature_ids_ = std::move(o.feature_ids_);
  df_ = std::move(o.df_);
  std::lock_guard lock(cache_mutex_);
  dirty_ = true;
  return *this;
}

std::uint32_t PolicyModel::intern(const std::string& f) {
  auto [it, inserted] = feature_ids_.try_emplace(f, static_cast<std::uint32_t>(feature_names_.size()));
  if (inserted) {
    feature_names_.push_back(f);
    df_.push_back(0);
  }
  return it->second;
}

std::vector<std::uint32_t> PolicyModel::lookup(const FeatureVector& fv) const {
  std::vector<std::uint32_t> ids;
  ids.reserve(fv.size());
  for (const auto& f : fv)
    if (auto it = feature_ids_.find(f); it != feature_ids_.end()) ids.push_back(it->second);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

void PolicyModel::add(Kind kind, const FeatureVector& features, const std::string& label, int index) {
  Pair p{kind, label, index, {}};
  for (const auto& f : features) p.features.push_back(intern(f));
  std::sort(p.features.begin(), p.features.end());
  p.features.erase(std::unique(p.features.begin(), p.features.end()), p.features.end());
  for (auto id : p.features) ++df_[id];
  pairs_.push_back(std::move(p));
  std::lock_guard lock(cache_mutex_);
  dirty_ = true;
}

std::size_t PolicyModel::count(Kind kind) const {
  return static_cast<std::size_t>(
      std::count_if(pairs_.begin(), pairs_.end(), [&](const Pair& p) { return p.kind == kind; }));
}

void PolicyModel::refresh_weights() const {
  std::lock_guard lock(cache_mutex_);
  if (!dirty_) return;
  const double n = static_cast<double>(pairs_.size());
  idf2_.assign(df_.size(), 0.0);
  for (std::size_t i = 0; i < df_.size(); ++i) {
    if (df_[i] == 0) continue;
    double w = std::log(n / df_[i]);
    idf2_[i] = w * w;
  }
  pair_norm_.assign(pairs_.size(), 0.0);
  for (std::size_t p = 0; p < pairs_.size(); ++p)
    for (auto id : pairs_[p].features) pair_norm_[p] += idf2_[id];
  dirty_ = false;
}

double PolicyModel::idf(const std::string& feature) const {
  auto it = feature_ids_.find(feature);
  if (it == feature_ids_.end() || df_[it->second] == 0) return 0.0;
  return std::log(static_cast<double>(pairs_.size()) / df_[it->second]);
}

namespace {

double overlap_score(const std::vector<std::uint32_t>& q, double q_norm, const std::vector<std::uint32_t>& r,
                     double r_norm, const std::vector<double>& idf2) {
  double shared = 0.0;
  auto a = q.begin();
  auto b = r.begin();
  while (a != q.end() && b != r.end()) {
    if (*a < *b) {
      ++a;
    } else if (*b < *a) {
      ++b;
    } else {
      shared += idf2[*a];
      ++a;
      ++b;
    }
  }
  double denom = q_norm + r_norm;
  return denom > 0.0 ? shared / denom : 0.0;
}

}  // namespace

double PolicyModel::similarity(const FeatureVector& query, std::size_t pair) const {
  refresh_weights();
  auto q = lookup(query);
  double qn = 0.0;
  for (auto id : q) qn += idf2_[id];
  return overlap_score(q, qn, pairs_.at(pair).features, pair_norm_[pair], idf2_);
}

std::vector<Prediction> PolicyModel::predict(Kind kind, const FeatureVector& query, std::size_t k,
                                             int bound) const {
  if (pairs_.empty()) throw EmptyModelError();
  refresh_weights();
  auto q = lookup(query);
  double qn = 0.0;
  for (auto id : q) qn += idf2_[id];

  std::map<std::string, Prediction> best;
  for (std::size_t p = 0; p < pairs_.size(); ++p) {
    const auto& pair = pairs_[p];
    if (pair.kind != kind || pair.index >= bound) continue;
    double s = overlap_score(q, qn, pair.features, pair_norm_[p], idf2_);
    auto [it, inserted] = best.try_emplace(pair.label, Prediction{pair.label, s, pair.index});
    if (!inserted && (s > it->second.score || (s == it->second.score && pair.index > it->second.index))) {
      it->second.score = s;
      it->second.index = pair.index;
    }
  }
  std::vector<Prediction> out;
  out.reserve(best.size());
  for (auto& [_, p] : best) out.push_back(std::move(p));
  std::sort(out.begin(), out.end(), [](const Prediction& a, const Prediction& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.index != b.index) return a.index > b.index;
    return a.name < b.name;
  });
  if (out.size() > k) out.resize(k);
  return out;
}

std::vector<Prediction> PolicyModel::predict_tactics(const Goal& g, std::size_t k, int bound) const {
  return predict(Kind::Tactic, extract_features(g), k, bound);
}

std::vector<Prediction> PolicyModel::predict_theorems(const Goal& g, std::size_t k, int bound) const {
  return predict(Kind::Theorem, extract_features(g), k, bound);
}

void PolicyModel::write(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write policy model " + path);
  for (const auto& p : pairs_) {
    out << (p.kind == Kind::Tactic ? 'T' : 'A') << '\t' << p.label << '\t' << p.index;
    for (auto id : p.features) out << '\t' << feature_names_[id];
    out << '\n';
  }
}

PolicyModel PolicyModel::read(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open policy model " + path);
  PolicyModel m;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t b = 0;
    for (;;) {
      auto e = line.find('\t', b);
      fields.push_back(line.substr(b, e == std::string::npos ? std::string::npos : e - b));
      if (e == std::string::npos) break;
      b = e + 1;
    }
    if (fields.size() < 3 || (fields[0] != "T" && fields[0] != "A"))
      throw std::runtime_error("policy model line " + std::to_string(lineno) + ": malformed");
    FeatureVector fv(fields.begin() + 3, fields.end());
    m.add(fields[0] == "T" ? Kind::Tactic : Kind::Theorem, fv, fields[1], std::stoi(fields[2]));
  }
  return m;
}

double policy_prior(std::size_t n) { return std::ldexp(1.0, -static_cast<int>(n + 1)); }

}  // namespace tacsearch
