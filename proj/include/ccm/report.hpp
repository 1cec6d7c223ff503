#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ccm {

class ReportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TraceTable {
  std::string path;
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;

  std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
  /// Column by name; throws ReportError when absent.
  const std::vector<double>& column(const std::string& name) const;
  bool has(const std::string& name) const;
};

TraceTable read_trace_csv(const std::string& path);

/// Writes matplotlib scripts (one figure each) into `outdir` and returns
/// their paths: states and log-distance per trace, y vs y_clean for noisy
/// traces, a peaking comparison when several traces are given.
/// All traces must share a header.
std::vector<std::string> write_report(const std::vector<TraceTable>& traces, const std::string& outdir);

}  // namespace ccm
