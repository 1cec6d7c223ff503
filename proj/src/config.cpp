#include "ccm/config.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#ifndef CCM_PRESET_DIR
#define CCM_PRESET_DIR "configs"
#endif

namespace ccm {

ConfigError::ConfigError(const std::string& source, std::size_t line, std::size_t column, const std::string& msg)
    : std::runtime_error(source + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + msg),
      line_(line),
      column_(column) {}

namespace {

struct Value {
  std::string text;
  std::size_t line = 0;
  std::size_t column = 0;  // 1-based column of text[0]
};

using Section = std::map<std::string, Value>;

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s{
      {"model", {"states", "f", "B", "C"}},
      {"controller", {"lambda", "alpha1", "alpha2", "rho_degree", "pruning"}},
      {"observer", {"lambda", "alpha1", "alpha2", "rho_degree", "pruning"}},
      {"sim", {"dt", "T", "integrator", "rk45_abs_tol", "rk45_rel_tol", "noise_std", "seed", "x0", "xhat0"}},
      {"output", {"dir"}},
  };
  return s;
}

class Reader {
 public:
  Reader(std::string_view text, std::string source) : source_(std::move(source)) { read(text); }

  [[noreturn]] void fail(const Value& v, std::size_t offset, const std::string& msg) const {
    throw ConfigError(source_, v.line, v.column + offset, msg);
  }
  [[noreturn]] void fail(std::size_t line, std::size_t col, const std::string& msg) const {
    throw ConfigError(source_, line, col, msg);
  }

  const Value* find(const std::string& sec, const std::string& key) const {
    auto s = sections_.find(sec);
    if (s == sections_.end()) return nullptr;
    auto k = s->second.find(key);
    return k == s->second.end() ? nullptr : &k->second;
  }

  const Value& require(const std::string& sec, const std::string& key) const {
    if (const Value* v = find(sec, key)) return *v;
    fail(0, 0, "missing required key [" + sec + "] " + key);
  }

  double number(const Value& v) const {
    double d = 0.0;
    const char* b = v.text.data();
    const auto [ptr, ec] = std::from_chars(b, b + v.text.size(), d);
    if (ec != std::errc() || ptr != b + v.text.size()) fail(v, static_cast<std::size_t>(ptr - b), "expected a number");
    return d;
  }

  long long integer(const Value& v) const {
    long long d = 0;
    const char* b = v.text.data();
    const auto [ptr, ec] = std::from_chars(b, b + v.text.size(), d);
    if (ec != std::errc() || ptr != b + v.text.size()) fail(v, static_cast<std::size_t>(ptr - b), "expected an integer");
    return d;
  }

  const std::string& source() const { return source_; }

 private:
  void read(std::string_view text) {
    std::string current;
    std::size_t lineno = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      const std::size_t end = std::min(text.find('\n', pos), text.size());
      std::string line(text.substr(pos, end - pos));
      pos = end + 1;
      ++lineno;
      if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const auto first = line.find_first_not_of(" \t");
      if (first == std::string::npos) {
        if (end == text.size()) break;
        continue;
      }
      const auto last = line.find_last_not_of(" \t");
      if (line[first] == '[') {
        if (line[last] != ']') fail(lineno, last + 1, "expected ']' closing the section header");
        current = line.substr(first + 1, last - first - 1);
        if (!schema().count(current)) fail(lineno, first + 2, "unknown section [" + current + "]");
        if (sections_.count(current)) fail(lineno, first + 1, "duplicate section [" + current + "]");
        sections_[current];
      } else {
        const auto eq = line.find('=');
        if (eq == std::string::npos) fail(lineno, first + 1, "expected key = value");
        if (current.empty()) fail(lineno, first + 1, "key outside of a section");
        const auto kend = line.find_last_not_of(" \t", eq == 0 ? 0 : eq - 1);
        const std::string key = eq == first ? "" : line.substr(first, kend - first + 1);
        if (!schema().at(current).count(key)) {
          fail(lineno, first + 1, "unknown key '" + key + "' in [" + current + "]");
        }
        if (sections_[current].count(key)) fail(lineno, first + 1, "duplicate key '" + key + "'");
        const auto vstart = line.find_first_not_of(" \t", eq + 1);
        if (vstart == std::string::npos || vstart > last) fail(lineno, eq + 2, "empty value for '" + key + "'");
        sections_[current][key] = Value{line.substr(vstart, last - vstart + 1), lineno, vstart + 1};
      }
      if (end == text.size()) break;
    }
  }

  std::string source_;
  std::map<std::string, Section> sections_;
};

std::vector<std::pair<std::string, std::size_t>> split_keep_offsets(const std::string& s, char sep) {
  std::vector<std::pair<std::string, std::size_t>> out;
  std::size_t start = 0;
  while (true) {
    const auto end = s.find(sep, start);
    out.emplace_back(s.substr(start, end == std::string::npos ? std::string::npos : end - start), start);
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return out;
}

Eigen::MatrixXd matrix_value(const Reader& r, const Value& v) {
  try {
    return parse_matrix(v.text);
  } catch (const std::invalid_argument& e) {
    r.fail(v, 0, e.what());
  }
}

Eigen::VectorXd vector_value(const Reader& r, const Value& v, std::size_t n) {
  const Eigen::MatrixXd m = matrix_value(r, v);
  if (m.rows() != 1 || static_cast<std::size_t>(m.cols()) != n) {
    r.fail(v, 0, "expected " + std::to_string(n) + " numbers");
  }
  return m.row(0).transpose();
}

void synthesis_section(const Reader& r, const std::string& sec, SynthesisParams& p) {
  if (const Value* v = r.find(sec, "lambda")) p.lambda = r.number(*v);
  if (const Value* v = r.find(sec, "alpha1")) p.alpha1 = r.number(*v);
  if (const Value* v = r.find(sec, "alpha2")) p.alpha2 = r.number(*v);
  if (const Value* v = r.find(sec, "rho_degree")) p.rho_degree = static_cast<int>(r.integer(*v));
  if (const Value* v = r.find(sec, "pruning")) {
    if (v->text == "diagonal") {
      p.pruning = BasisPruning::Diagonal;
    } else if (v->text == "none") {
      p.pruning = BasisPruning::None;
    } else {
      r.fail(*v, 0, "pruning must be 'diagonal' or 'none'");
    }
  }
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    const Value* at = r.find(sec, "lambda");
    if (at) r.fail(*at, 0, "[" + sec + "] " + e.what());
    r.fail(0, 0, "[" + sec + "] " + e.what());
  }
}

}  // namespace

ProjectConfig parse_config(std::string_view text, const std::string& source) {
  const Reader r(text, source);
  ProjectConfig cfg;

  // model
  const Value& fv = r.require("model", "f");
  const auto parts = split_keep_offsets(fv.text, ';');
  const std::size_t n = parts.size();
  std::vector<std::string> names;
  if (const Value* sv = r.find("model", "states")) {
    std::istringstream in(sv->text);
    for (std::string w; in >> w;) names.push_back(w);
    if (names.size() != n) r.fail(*sv, 0, "need one state name per component of f");
  } else {
    names = default_variable_names(n);
  }
  std::vector<Polynomial> comps;
  for (const auto& [expr, off] : parts) {
    try {
      comps.push_back(parse_polynomial(expr, names));
    } catch (const ParseError& e) {
      r.fail(fv, off + e.column() - 1, std::string("in f: ") + e.what());
    }
  }
  const Value& bv = r.require("model", "B");
  const Value& cv = r.require("model", "C");
  Eigen::MatrixXd B = matrix_value(r, bv);
  Eigen::MatrixXd C = matrix_value(r, cv);
  if (static_cast<std::size_t>(B.rows()) != n) r.fail(bv, 0, "B must have one row per state");
  if (static_cast<std::size_t>(C.cols()) != n) r.fail(cv, 0, "C must have one column per state");
  cfg.model = SystemModel::make(PolyMatrix::column(std::move(comps)), std::move(B), std::move(C), names);

  synthesis_section(r, "controller", cfg.controller);
  synthesis_section(r, "observer", cfg.observer);

  // sim
  SimConfig& s = cfg.sim;
  if (const Value* v = r.find("sim", "dt")) s.dt = r.number(*v);
  if (const Value* v = r.find("sim", "T")) s.T = r.number(*v);
  if (const Value* v = r.find("sim", "integrator")) {
    if (v->text == "rk4") {
      s.integrator = Integrator::RK4;
    } else if (v->text == "rk45") {
      s.integrator = Integrator::RK45;
    } else {
      r.fail(*v, 0, "integrator must be 'rk4' or 'rk45'");
    }
  }
  if (const Value* v = r.find("sim", "rk45_abs_tol")) s.rk45_abs_tol = r.number(*v);
  if (const Value* v = r.find("sim", "rk45_rel_tol")) s.rk45_rel_tol = r.number(*v);
  if (const Value* v = r.find("sim", "noise_std")) s.noise_std = r.number(*v);
  if (const Value* v = r.find("sim", "seed")) {
    const long long seed = r.integer(*v);
    if (seed < 0) r.fail(*v, 0, "seed must be >= 0");
    s.seed = static_cast<std::uint64_t>(seed);
  }
  const Value* x0 = r.find("sim", "x0");
  if (x0 && x0->text == "oscillation") {
    if (n != 2) r.fail(*x0, 0, "x0 = oscillation needs a two-state model");
    cfg.x0_on_oscillation = true;
  } else if (x0) {
    s.x0 = vector_value(r, *x0, n);
  } else {
    s.x0 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  }
  if (const Value* v = r.find("sim", "xhat0")) {
    s.xhat0 = vector_value(r, *v, n);
  } else {
    s.xhat0 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  }
  try {
    s.validate();
  } catch (const SimError& e) {
    r.fail(0, 0, std::string("[sim] ") + e.what());
  }
  if (const Value* v = r.find("output", "dir")) cfg.output_dir = v->text;
  return cfg;
}

std::vector<std::string> preset_names() { return {"mg-slow", "mg-medium", "mg-fast"}; }

ProjectConfig load_config(const std::string& path) {
  std::filesystem::path p(path);
  if (!std::filesystem::exists(p)) {
    const auto presets = preset_names();
    if (std::find(presets.begin(), presets.end(), path) != presets.end()) {
      p = std::filesystem::path(CCM_PRESET_DIR) / (path + ".cfg");
    }
  }
  std::ifstream in(p);
  if (!in) throw ConfigError(path, 0, 0, "cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), p.string());
}

SimConfig resolve_sim(const ProjectConfig& cfg) {
  SimConfig s = cfg.sim;
  if (cfg.x0_on_oscillation) s.x0 = oscillation_state(cfg.model, s.dt);
  return s;
}

}  // namespace ccm
