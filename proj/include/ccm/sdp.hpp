#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace ccm {

class SdpError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ScalarSign { Free, NonNegative };

/// A declared decision variable: either a symmetric PSD block or a scalar.
struct SdpVariable {
  std::string name;
  int dim = 1;
  bool is_block = true;
  ScalarSign sign = ScalarSign::Free;  // scalars only
};

/// Reference to one entry of a variable. Block entries are normalized to
/// row <= col and denote the single matrix entry X(row, col); scalars use (0, 0).
struct EntryRef {
  int var = 0;
  int row = 0;
  int col = 0;

  static EntryRef scalar(int var) { return {var, 0, 0}; }
  static EntryRef entry(int var, int row, int col) {
    return row <= col ? EntryRef{var, row, col} : EntryRef{var, col, row};
  }

  friend auto operator<=>(const EntryRef&, const EntryRef&) = default;
};

struct LinearTerm {
  EntryRef entry;
  double coef = 0.0;
};

struct SdpEquality {
  std::string label;
  std::vector<LinearTerm> terms;
  double rhs = 0.0;
};

/// Block-diagonal semidefinite program: PSD blocks and scalar variables tied
/// by linear equalities, with an optional linear objective to minimize.
class SdpProblem {
 public:
  int add_block(std::string name, int dim);
  int add_scalar(std::string name, ScalarSign sign = ScalarSign::Free);
  void add_equality(std::vector<LinearTerm> terms, double rhs, std::string label = {});
  void set_objective(std::vector<LinearTerm> terms);

  const std::vector<SdpVariable>& variables() const { return vars_; }
  const std::vector<SdpEquality>& equalities() const { return eqs_; }
  const std::optional<std::vector<LinearTerm>>& objective() const { return objective_; }

  std::optional<int> find_variable(std::string_view name) const;
  int num_blocks() const;
  int num_scalars() const;

  /// Throws SdpError when an equality names an undeclared variable or an
  /// entry outside its block.
  void validate() const;

  friend bool operator==(const SdpProblem& a, const SdpProblem& b);

 private:
  void check_term(const LinearTerm& t) const;

  std::vector<SdpVariable> vars_;
  std::vector<SdpEquality> eqs_;
  std::optional<std::vector<LinearTerm>> objective_;
};

enum class SdpStatus { Feasible, Infeasible, Marginal };

std::string_view to_string(SdpStatus s);

struct SdpOptions {
  double feas_tol = 1e-8;
  double gap_tol = 1e-8;
  int max_iter = 200;
};

struct SdpSolution {
  SdpStatus status = SdpStatus::Marginal;
  /// One matrix per variable (scalars are 1x1). Populated when Feasible.
  std::vector<Eigen::MatrixXd> values;
  double objective = 0.0;
  /// Feasible: relative duality gap. Infeasible: certificate residual.
  double gap = 0.0;
  int iterations = 0;
  /// Infeasible only: equality multipliers v with rhs'v = -1 whose
  /// transpose image lies in the dual cone (a Farkas ray).
  Eigen::VectorXd certificate;
  std::string message;

  double value(const EntryRef& e) const { return values.at(static_cast<std::size_t>(e.var))(e.row, e.col); }
};

SdpSolution solve(const SdpProblem& prob, const SdpOptions& opts = {});

struct ConstraintCheck {
  std::string name;
  double residual = 0.0;
  bool pass = false;
};

struct CheckReport {
  bool pass = true;
  std::vector<ConstraintCheck> items;

  std::vector<ConstraintCheck> failures() const;
};

/// Recomputes eigenvalue floors, sign constraints and equality residuals of a
/// Feasible solution, or validates the Farkas ray of an Infeasible one.
CheckReport check_solution(const SdpProblem& prob, const SdpSolution& sol, double tol);

/// Line-oriented text form; see docs/formats.md.
std::string dump(const SdpProblem& prob);
SdpProblem load_sdp(std::string_view text);

}  // namespace ccm
