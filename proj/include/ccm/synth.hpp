#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ccm/poly.hpp"
#include "ccm/sdp.hpp"
#include "ccm/sos.hpp"

namespace ccm {

/// dx/dt = f(x) + B u,  y = C x
struct SystemModel {
  std::size_t n = 0;
  std::size_t m = 0;
  std::size_t p = 0;
  PolyMatrix f;  // n x 1
  Eigen::MatrixXd B;
  Eigen::MatrixXd C;
  std::vector<std::string> state_names;

  static SystemModel make(PolyMatrix f, Eigen::MatrixXd B, Eigen::MatrixXd C,
                          std::vector<std::string> names = {});
  /// Compressor surge model: f = [-psi - 3/2 phi^2 - 1/2 phi^3; phi], B = [0;1], C = [0 1].
  static SystemModel moore_greitzer();

  PolyMatrix A() const { return jacobian(f); }
  Eigen::VectorXd rhs(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const;
  void validate() const;
};

enum class MetricRole { Controller, Observer };
std::string to_string(MetricRole r);

struct SynthesisParams {
  double lambda = 0.1;
  double alpha1 = 0.1;
  double alpha2 = 1.3;
  int rho_degree = 2;
  BasisPruning pruning = BasisPruning::Diagonal;
  SdpOptions sdp;
  double cert_tol = 1e-6;

  void validate() const;
};

/// Constant metric W with multiplier rho(x). For the controller role the
/// contraction metric is M = W^{-1}; for the observer role W itself is the metric.
struct ContractionMetric {
  MetricRole role = MetricRole::Controller;
  Eigen::MatrixXd W;
  Polynomial rho;
  double lambda = 0.0;
  double alpha1 = 0.0;
  double alpha2 = 0.0;
  std::string digest;  // of the certificate Gram matrices

  /// W^{-1} for the controller role, W for the observer role.
  Eigen::MatrixXd M() const;
  /// Upper-triangular Theta with Theta' Theta = M.
  Eigen::MatrixXd Theta() const;
  /// Contraction LMI at x; negative semidefinite when the condition holds.
  Eigen::MatrixXd lmi(const SystemModel& model, const Eigen::VectorXd& x) const;
};

/// Program plus handles to its decision variables.
struct MetricProgram {
  SosProgram program;
  DecisionMatrix W;
  ParamPoly rho;
  std::size_t condition_index = 0;  // constraint indices inside program
  std::size_t rho_index = 0;
};

/// -delta'(W A' + A W - rho B B' + 2 lambda W)delta in Sigma^2, rho in Sigma^2,
/// alpha1 I <= W <= alpha2 I.
MetricProgram controller_program(const PolyMatrix& A, const Eigen::MatrixXd& B, const SynthesisParams& params);
MetricProgram controller_program(const SystemModel& model, const SynthesisParams& params);
/// -delta'(A' W + W A - rho C' C + 2 lambda W)delta in Sigma^2, rho in Sigma^2,
/// alpha1 I <= W <= alpha2 I.
MetricProgram observer_program(const PolyMatrix& A, const Eigen::MatrixXd& C, const SynthesisParams& params);
MetricProgram observer_program(const SystemModel& model, const SynthesisParams& params);

enum class SynthesisStatus { Feasible, Infeasible, Inconclusive };
std::string to_string(SynthesisStatus s);

struct SynthesisResult {
  SynthesisStatus status = SynthesisStatus::Inconclusive;
  MetricRole role = MetricRole::Controller;
  std::optional<ContractionMetric> metric;
  SdpSolution sdp;  // carries the infeasibility certificate when Infeasible
  std::size_t num_equalities = 0;
  std::size_t num_blocks = 0;
  std::size_t num_scalars = 0;
  std::vector<int> gram_sizes;
  double wall_seconds = 0.0;
  std::string message;
};

SynthesisResult synthesize(const SystemModel& model, MetricRole role, const SynthesisParams& params);

struct Box {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;
  static Box cube(std::size_t n, double lo, double hi);
};

struct VerifyReport {
  double max_violation = 0.0;  // largest eigenvalue of the LMI over the grid
  Eigen::VectorXd worst_point;
  std::size_t points = 0;
  double w_min_eig = 0.0;
  double w_max_eig = 0.0;
  bool bounds_ok = false;
  bool passed(double tol) const { return max_violation <= tol && bounds_ok; }
};

/// Evaluates the metric LMI at every point of a grid with `grid` points per
/// axis (1 means the box centre). Parallel over points, max-reduced.
VerifyReport verify_pointwise(const ContractionMetric& metric, const SystemModel& model, const Box& box, int grid,
                              double bound_tol = 1e-6, unsigned threads = 0);

/// FNV-1a over the raw bytes of the given matrices, hex encoded.
std::string gram_digest(const std::vector<Eigen::MatrixXd>& grams);

/// "a b; c d": rows split on ';', entries on whitespace or ','.
Eigen::MatrixXd parse_matrix(std::string_view text);
std::string format_matrix(const Eigen::MatrixXd& m);

// Metric text format. The model variant also records f, B and C so the file
// can be verified on its own.
std::string serialize(const ContractionMetric& m, const std::vector<std::string>& names);
std::string serialize(const ContractionMetric& m, const SystemModel& model);
struct LoadedMetric {
  ContractionMetric metric;
  std::vector<std::string> names;
  std::optional<SystemModel> model;
};
LoadedMetric parse_metric(std::string_view text);

}  // namespace ccm
