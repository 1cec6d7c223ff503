#include <algorithm>
#include <charconv>
#include <optional>
#include <map>
#include <sstream>
#include <stdexcept>

#include "ccm/synth.hpp"

namespace ccm {

namespace {

std::vector<std::pair<std::string, std::size_t>> split_rows(std::string_view text) {
  std::vector<std::pair<std::string, std::size_t>> out;
  std::size_t start = 0;
  while (true) {
    const auto end = text.find(';', start);
    out.emplace_back(std::string(text.substr(start, end == std::string_view::npos ? text.npos : end - start)), start);
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return out;
}

}  // namespace

Eigen::MatrixXd parse_matrix(std::string_view text) {
  std::vector<std::vector<double>> rows;
  for (const auto& [row, off] : split_rows(text)) {
    std::string cleaned = row;
    std::replace(cleaned.begin(), cleaned.end(), ',', ' ');
    std::istringstream in(cleaned);
    std::vector<double> vals;
    for (std::string tok; in >> tok;) {
      double d = 0.0;
      const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), d);
      if (ec != std::errc() || ptr != tok.data() + tok.size()) {
        throw std::invalid_argument("bad matrix entry '" + tok + "'");
      }
      vals.push_back(d);
    }
    if (vals.empty()) throw std::invalid_argument("empty matrix row");
    if (!rows.empty() && vals.size() != rows.front().size()) throw std::invalid_argument("ragged matrix rows");
    rows.push_back(std::move(vals));
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return m;
}

// ccm-metric 1
// role = controller
// variables = phi psi
// lambda = 0.1
// ...
// W = w11 w12 w21 w22
// rho = <polynomial>
// digest = <hex>
// f = <poly> ; <poly>      optional model block
// B = 0 ; 1
// C = 0 1
// end

std::string format_matrix(const Eigen::MatrixXd& m) {
  std::string s;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (i) s += " ;";
    for (Eigen::Index j = 0; j < m.cols(); ++j) s += (i == 0 && j == 0 ? "" : " ") + format_double(m(i, j));
  }
  return s;
}

std::string serialize(const ContractionMetric& m, const SystemModel& model) {
  std::string text = serialize(m, model.state_names);
  std::string extra = "f =";
  for (std::size_t i = 0; i < model.n; ++i) extra += (i ? " ; " : " ") + to_string(model.f(i, 0), model.state_names);
  extra += "\nB = " + format_matrix(model.B) + "\nC = " + format_matrix(model.C) + "\n";
  text.insert(text.rfind("end\n"), extra);
  return text;
}

std::string serialize(const ContractionMetric& m, const std::vector<std::string>& names) {
  if (static_cast<std::size_t>(m.W.rows()) != names.size()) throw std::invalid_argument("one name per state required");
  std::ostringstream out;
  out << "ccm-metric 1\n";
  out << "role = " << to_string(m.role) << "\n";
  out << "variables =";
  for (const auto& n : names) out << ' ' << n;
  out << "\n";
  out << "lambda = " << format_double(m.lambda) << "\n";
  out << "alpha1 = " << format_double(m.alpha1) << "\n";
  out << "alpha2 = " << format_double(m.alpha2) << "\n";
  out << "W =";
  for (Eigen::Index i = 0; i < m.W.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.W.cols(); ++j) out << ' ' << format_double(m.W(i, j));
  }
  out << "\n";
  out << "rho = " << to_string(m.rho, names) << "\n";
  out << "digest = " << (m.digest.empty() ? "-" : m.digest) << "\n";
  out << "end\n";
  return out.str();
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> words(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

double number(const std::string& s, const std::string& key) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw std::runtime_error("metric: bad number '" + s + "' for " + key);
  }
  return v;
}

}  // namespace

LoadedMetric parse_metric(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& msg) {
    throw std::runtime_error("metric line " + std::to_string(lineno) + ": " + msg);
  };
  bool header = false;
  bool ended = false;
  std::map<std::string, std::string> kv;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (!header) {
      if (t != "ccm-metric 1") fail("expected 'ccm-metric 1' header");
      header = true;
      continue;
    }
    if (t == "end") {
      ended = true;
      break;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) fail("expected key = value");
    const std::string key = trim(std::string_view(t).substr(0, eq));
    static const char* known[] = {"role", "variables", "lambda", "alpha1", "alpha2", "W",
                                  "rho",  "digest",    "f",      "B",      "C"};
    if (std::find(std::begin(known), std::end(known), key) == std::end(known)) fail("unknown key '" + key + "'");
    if (kv.count(key)) fail("duplicate key '" + key + "'");
    kv[key] = trim(std::string_view(t).substr(eq + 1));
  }
  if (!header) throw std::runtime_error("metric: empty document");
  if (!ended) throw std::runtime_error("metric: missing 'end'");
  for (const char* k : {"role", "variables", "lambda", "alpha1", "alpha2", "W", "rho"}) {
    if (!kv.count(k)) throw std::runtime_error(std::string("metric: missing key '") + k + "'");
  }

  LoadedMetric out;
  ContractionMetric& m = out.metric;
  if (kv["role"] == "controller") {
    m.role = MetricRole::Controller;
  } else if (kv["role"] == "observer") {
    m.role = MetricRole::Observer;
  } else {
    throw std::runtime_error("metric: role must be controller or observer");
  }
  out.names = words(kv["variables"]);
  const auto n = static_cast<Eigen::Index>(out.names.size());
  if (n == 0) throw std::runtime_error("metric: no variables");
  m.lambda = number(kv["lambda"], "lambda");
  m.alpha1 = number(kv["alpha1"], "alpha1");
  m.alpha2 = number(kv["alpha2"], "alpha2");
  const auto w = words(kv["W"]);
  if (static_cast<Eigen::Index>(w.size()) != n * n) throw std::runtime_error("metric: W needs n*n entries");
  m.W.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) m.W(i, j) = number(w[static_cast<std::size_t>(i * n + j)], "W");
  }
  if (!m.W.isApprox(m.W.transpose(), 0.0)) throw std::runtime_error("metric: W is not symmetric");
  try {
    m.rho = parse_polynomial(kv["rho"], out.names);
  } catch (const ParseError& e) {
    throw std::runtime_error(std::string("metric: rho: ") + e.what());
  }
  if (kv.count("digest") && kv["digest"] != "-") m.digest = kv["digest"];

  const int model_keys = static_cast<int>(kv.count("f") + kv.count("B") + kv.count("C"));
  if (model_keys != 0 && model_keys != 3) throw std::runtime_error("metric: f, B and C must appear together");
  if (model_keys == 3) {
    std::vector<Polynomial> comps;
    for (const auto& [expr, off] : split_rows(kv["f"])) {
      try {
        comps.push_back(parse_polynomial(expr, out.names));
      } catch (const ParseError& e) {
        throw std::runtime_error(std::string("metric: f: ") + e.what());
      }
    }
    try {
      out.model = SystemModel::make(PolyMatrix::column(std::move(comps)), parse_matrix(kv["B"]), parse_matrix(kv["C"]),
                                    out.names);
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error(std::string("metric: model: ") + e.what());
    }
  }
  return out;
}

}  // namespace ccm
