#include <array>
#include <charconv>
#include <sstream>

#include "ccm/poly.hpp"
#include "ccm/sdp.hpp"

namespace ccm {

namespace {

void require_token(const std::string& s, const char* what) {
  if (s.empty()) throw SdpError(std::string("empty ") + what);
  for (char c : s) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      throw SdpError(std::string(what) + " '" + s + "' contains whitespace");
    }
  }
}

void write_terms(std::ostringstream& os, const std::vector<LinearTerm>& terms) {
  os << ' ' << terms.size();
  for (const auto& t : terms) {
    os << ' ' << t.entry.var << ',' << t.entry.row << ',' << t.entry.col << ',' << format_double(t.coef);
  }
}

double parse_double(std::string_view s, std::size_t line) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw SdpError("line " + std::to_string(line) + ": bad number '" + std::string(s) + "'");
  }
  return v;
}

int parse_int(std::string_view s, std::size_t line) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw SdpError("line " + std::to_string(line) + ": bad integer '" + std::string(s) + "'");
  }
  return v;
}

std::vector<LinearTerm> read_terms(std::istringstream& is, std::size_t line) {
  std::string tok;
  if (!(is >> tok)) throw SdpError("line " + std::to_string(line) + ": missing term count");
  const int n = parse_int(tok, line);
  std::vector<LinearTerm> terms;
  for (int i = 0; i < n; ++i) {
    if (!(is >> tok)) throw SdpError("line " + std::to_string(line) + ": missing term");
    std::string_view sv(tok);
    std::array<std::string_view, 4> parts;
    for (std::size_t p = 0; p < 3; ++p) {
      const auto comma = sv.find(',');
      if (comma == std::string_view::npos) throw SdpError("line " + std::to_string(line) + ": malformed term");
      parts[p] = sv.substr(0, comma);
      sv.remove_prefix(comma + 1);
    }
    parts[3] = sv;
    terms.push_back({EntryRef{parse_int(parts[0], line), parse_int(parts[1], line), parse_int(parts[2], line)},
                     parse_double(parts[3], line)});
  }
  return terms;
}

}  // namespace

std::string dump(const SdpProblem& prob) {
  std::ostringstream os;
  os << "ccm-sdp 1\n";
  for (const auto& v : prob.variables()) {
    require_token(v.name, "variable name");
    if (v.is_block) {
      os << "var " << v.name << " block " << v.dim << '\n';
    } else {
      os << "var " << v.name << " scalar " << (v.sign == ScalarSign::Free ? "free" : "nonneg") << '\n';
    }
  }
  for (const auto& eq : prob.equalities()) {
    require_token(eq.label, "equality label");
    os << "eq " << eq.label << ' ' << format_double(eq.rhs);
    write_terms(os, eq.terms);
    os << '\n';
  }
  if (prob.objective()) {
    os << "obj";
    write_terms(os, *prob.objective());
    os << '\n';
  }
  os << "end\n";
  return os.str();
}

SdpProblem load_sdp(std::string_view text) {
  SdpProblem prob;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  bool ended = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (ended) throw SdpError("line " + std::to_string(lineno) + ": content after 'end'");
    std::istringstream is(line);
    std::string kw;
    is >> kw;
    if (!header) {
      std::string ver;
      is >> ver;
      if (kw != "ccm-sdp" || ver != "1") throw SdpError("missing 'ccm-sdp 1' header");
      header = true;
      continue;
    }
    if (kw == "var") {
      std::string name, kind, arg;
      if (!(is >> name >> kind >> arg)) throw SdpError("line " + std::to_string(lineno) + ": malformed var");
      if (kind == "block") {
        prob.add_block(name, parse_int(arg, lineno));
      } else if (kind == "scalar" && (arg == "free" || arg == "nonneg")) {
        prob.add_scalar(name, arg == "free" ? ScalarSign::Free : ScalarSign::NonNegative);
      } else {
        throw SdpError("line " + std::to_string(lineno) + ": unknown variable kind");
      }
    } else if (kw == "eq") {
      std::string label, rhs;
      if (!(is >> label >> rhs)) throw SdpError("line " + std::to_string(lineno) + ": malformed eq");
      const double r = parse_double(rhs, lineno);
      prob.add_equality(read_terms(is, lineno), r, label);
    } else if (kw == "obj") {
      prob.set_objective(read_terms(is, lineno));
    } else if (kw == "end") {
      ended = true;
    } else {
      throw SdpError("line " + std::to_string(lineno) + ": unknown keyword '" + kw + "'");
    }
  }
  if (!header) throw SdpError("missing 'ccm-sdp 1' header");
  if (!ended) throw SdpError("missing 'end'");
  return prob;
}

}  // namespace ccm
