#include "ccm/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace ccm {

namespace fs = std::filesystem;

bool TraceTable::has(const std::string& name) const {
  return std::find(header.begin(), header.end(), name) != header.end();
}

const std::vector<double>& TraceTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw ReportError(path + ": no column '" + name + "'");
  return columns[static_cast<std::size_t>(it - header.begin())];
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  for (std::string cell; std::getline(ss, cell, ',');) out.push_back(cell);
  return out;
}

double cell_value(const std::string& s, const std::string& where) {
  if (s == "nan") return std::nan("");
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw ReportError(where + ": bad number '" + s + "'");
  return v;
}

std::string py_str(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\\' || c == '\'') out += '\\';
    out += c;
  }
  return out + "'";
}

std::string preamble(const std::vector<const TraceTable*>& traces) {
  std::ostringstream s;
  s << "import numpy as np\nimport matplotlib\nmatplotlib.use('Agg')\nimport matplotlib.pyplot as plt\n\n";
  s << "traces = [";
  for (std::size_t i = 0; i < traces.size(); ++i) {
    s << (i ? ", " : "") << py_str(fs::absolute(traces[i]->path).string());
  }
  s << "]\n";
  s << "data = [np.genfromtxt(p, delimiter=',', names=True) for p in traces]\n\n";
  return s.str();
}

std::vector<std::string> state_columns(const TraceTable& t) {
  // between 't' and the first *_hat column
  std::vector<std::string> out;
  for (std::size_t i = 1; i < t.header.size(); ++i) {
    const std::string& h = t.header[i];
    if (h.size() > 4 && h.compare(h.size() - 4, 4, "_hat") == 0) break;
    out.push_back(h);
  }
  return out;
}

std::string py_list(const std::vector<std::string>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + py_str(v[i]);
  return s + "]";
}

void write_file(const fs::path& p, const std::string& text, std::vector<std::string>& written) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw ReportError("cannot write " + p.string());
  out << text;
  written.push_back(p.string());
}

}  // namespace

TraceTable read_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ReportError("cannot open trace " + path);
  TraceTable t;
  t.path = path;
  std::string line;
  if (!std::getline(in, line)) throw ReportError(path + ": empty trace");
  t.header = split(line);
  if (t.header.empty() || t.header.front() != "t") throw ReportError(path + ": header must start with 't'");
  t.columns.assign(t.header.size(), {});
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != t.header.size()) {
      throw ReportError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(t.header.size()) +
                        " fields");
    }
    for (std::size_t i = 0; i < cells.size(); ++i) {
      t.columns[i].push_back(cell_value(cells[i], path + ":" + std::to_string(lineno)));
    }
  }
  return t;
}

std::vector<std::string> write_report(const std::vector<TraceTable>& traces, const std::string& outdir) {
  if (traces.empty()) throw ReportError("no traces given");
  for (const auto& t : traces) {
    if (t.header != traces.front().header) {
      throw ReportError("inconsistent trace headers: " + t.path + " vs " + traces.front().path);
    }
  }
  fs::create_directories(outdir);
  std::vector<std::string> written;
  const std::vector<std::string> states = state_columns(traces.front());

  for (const auto& t : traces) {
    const std::string stem = fs::path(t.path).stem().string();
    const std::vector<const TraceTable*> one{&t};

    std::ostringstream st;
    st << preamble(one) << "d = data[0]\nstates = " << py_list(states) << "\n";
    st << "fig, ax = plt.subplots(figsize=(7, 4))\n"
          "for s in states:\n"
          "    ax.plot(d['t'], d[s], label=s)\n"
          "    ax.plot(d['t'], d[s + '_hat'], '--', label=s + ' estimate')\n"
          "ax.set_xlabel('t')\nax.set_ylabel('state')\nax.legend()\nax.grid(True, alpha=0.3)\n"
       << "fig.tight_layout()\nfig.savefig(" << py_str(stem + "_states.png") << ", dpi=150)\n";
    write_file(fs::path(outdir) / (stem + "_states.py"), st.str(), written);

    std::ostringstream ds;
    ds << preamble(one) << "d = data[0]\n";
    ds << "fig, ax = plt.subplots(figsize=(7, 4))\n"
          "ax.semilogy(d['t'], d['d'], label='d(t)')\n"
          "if np.isfinite(d['d_bound']).any():\n"
          "    ax.semilogy(d['t'], d['d_bound'], 'k--', label='bound')\n"
          "ax.set_xlabel('t')\nax.set_ylabel('distance')\nax.legend()\nax.grid(True, which='both', alpha=0.3)\n"
       << "fig.tight_layout()\nfig.savefig(" << py_str(stem + "_distance.png") << ", dpi=150)\n";
    write_file(fs::path(outdir) / (stem + "_distance.py"), ds.str(), written);

    if (t.has("y") && t.has("y_clean") && t.column("y") != t.column("y_clean")) {
      std::ostringstream ns;
      ns << preamble(one) << "d = data[0]\n";
      ns << "fig, ax = plt.subplots(figsize=(7, 4))\n"
            "ax.plot(d['t'], d['y'], lw=0.5, alpha=0.6, label='measured y')\n"
            "ax.plot(d['t'], d['y_clean'], label='noise-free y')\n"
            "ax.set_xlabel('t')\nax.legend()\nax.grid(True, alpha=0.3)\n"
         << "fig.tight_layout()\nfig.savefig(" << py_str(stem + "_noise.png") << ", dpi=150)\n";
      write_file(fs::path(outdir) / (stem + "_noise.py"), ns.str(), written);
    }
  }

  if (traces.size() > 1) {
    std::vector<const TraceTable*> all;
    for (const auto& t : traces) all.push_back(&t);
    std::ostringstream ps;
    ps << preamble(all) << "states = " << py_list(states) << "\n";
    ps << "fig, ax = plt.subplots(figsize=(7, 4))\n"
          "for p, d in zip(traces, data):\n"
          "    r = np.sqrt(sum(d[s] ** 2 for s in states))\n"
          "    ax.plot(d['t'], r, label=p.split('/')[-1])\n"
          "ax.set_xlabel('t')\nax.set_ylabel('|x|')\nax.legend()\nax.grid(True, alpha=0.3)\n"
          "fig.tight_layout()\nfig.savefig('peaking.png', dpi=150)\n";
    write_file(fs::path(outdir) / "peaking.py", ps.str(), written);
  }
  return written;
}

}  // namespace ccm
