#pragma once

#include <map>
#include <string>
#include <vector>

#include "ccm/poly.hpp"
#include "ccm/sdp.hpp"

namespace ccm {

class SosError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// constant + sum coef * entry, over entries of SDP decision variables.
class AffineExpr {
 public:
  AffineExpr() = default;
  AffineExpr(double c) : constant_(c) {}  // NOLINT(google-explicit-constructor)
  static AffineExpr entry(const EntryRef& e, double coef = 1.0);

  double constant() const { return constant_; }
  const std::map<EntryRef, double>& terms() const { return terms_; }
  bool is_zero() const { return constant_ == 0.0 && terms_.empty(); }
  bool is_constant() const { return terms_.empty(); }

  AffineExpr& operator+=(const AffineExpr& o);
  AffineExpr& operator-=(const AffineExpr& o);
  AffineExpr& operator*=(double s);
  AffineExpr operator-() const { return AffineExpr(*this) *= -1.0; }
  friend AffineExpr operator+(AffineExpr a, const AffineExpr& b) { return a += b; }
  friend AffineExpr operator-(AffineExpr a, const AffineExpr& b) { return a -= b; }
  friend AffineExpr operator*(AffineExpr a, double s) { return a *= s; }
  friend AffineExpr operator*(double s, AffineExpr a) { return a *= s; }
  friend bool operator==(const AffineExpr&, const AffineExpr&) = default;

  double eval(const SdpSolution& sol) const;

 private:
  double constant_ = 0.0;
  std::map<EntryRef, double> terms_;
};

/// Polynomial whose coefficients are affine in decision variables.
class ParamPoly {
 public:
  using TermMap = std::map<Monomial, AffineExpr, GradedLex>;

  explicit ParamPoly(std::size_t nvars = 0) : nvars_(nvars) {}
  static ParamPoly from(const Polynomial& p);

  std::size_t nvars() const { return nvars_; }
  const TermMap& terms() const { return terms_; }
  int degree() const;

  void add_term(const Monomial& m, const AffineExpr& c);

  ParamPoly& operator+=(const ParamPoly& q);
  ParamPoly& operator-=(const ParamPoly& q);
  ParamPoly& operator*=(double s);
  friend ParamPoly operator+(ParamPoly p, const ParamPoly& q) { return p += q; }
  friend ParamPoly operator-(ParamPoly p, const ParamPoly& q) { return p -= q; }
  friend ParamPoly operator*(ParamPoly p, double s) { return p *= s; }
  friend ParamPoly operator*(const Polynomial& p, const ParamPoly& q);
  friend ParamPoly operator*(const ParamPoly& q, const Polynomial& p) { return p * q; }
  friend ParamPoly operator*(const AffineExpr& a, const Polynomial& p);
  friend bool operator==(const ParamPoly&, const ParamPoly&) = default;

  ParamPoly embed(std::size_t new_nvars, std::size_t offset = 0) const;
  Polynomial evaluate(const SdpSolution& sol) const;

 private:
  std::size_t nvars_ = 0;
  TermMap terms_;
};

ParamPoly operator*(const AffineExpr& a, const Polynomial& p);

enum class SosKind { Scalar, QuadraticForm };

/// expression in Sigma^2. For QuadraticForm the last `num_delta` variables are
/// the delta variables and the expression must be homogeneous of degree 2 in them.
struct SosConstraint {
  std::string name;
  ParamPoly expression;
  SosKind kind = SosKind::Scalar;
  std::size_t num_delta = 0;
};

/// Symmetric decision matrix whose entries are free scalars of the program.
struct DecisionMatrix {
  std::string name;
  int dim = 0;
  std::vector<EntryRef> entries;  // row-major upper triangle

  AffineExpr at(int i, int j) const;
  Eigen::MatrixXd value(const SdpSolution& sol) const;
};

/// lower * I <= matrix <= upper * I
struct MatrixBound {
  DecisionMatrix matrix;
  double lower = 0.0;
  double upper = 0.0;
};

enum class BasisPruning { None, Diagonal };

/// Gram basis per the half-degree construction rule, optionally pruned of
/// monomials whose diagonal Gram entry is forced to zero.
/// Throws SosError for an odd leading degree or a non-homogeneous delta form.
std::vector<Monomial> gram_basis(const SosConstraint& c, BasisPruning pruning = BasisPruning::None);

/// Declares decision variables and collects constraints.
class SosProgram {
 public:
  AffineExpr add_scalar(const std::string& name);
  DecisionMatrix add_symmetric(const std::string& name, int dim);
  /// Polynomial in `nvars` variables with a free coefficient per monomial of
  /// degree <= `degree`.
  ParamPoly add_polynomial(const std::string& name, std::size_t nvars, int degree);

  void add_constraint(SosConstraint c) { constraints_.push_back(std::move(c)); }
  void add_bound(MatrixBound b) { bounds_.push_back(std::move(b)); }

  const SdpProblem& declarations() const { return decls_; }
  const std::vector<SosConstraint>& constraints() const { return constraints_; }
  const std::vector<MatrixBound>& bounds() const { return bounds_; }

 private:
  SdpProblem decls_;
  std::vector<SosConstraint> constraints_;
  std::vector<MatrixBound> bounds_;
};

struct CompiledConstraint {
  std::string name;
  int gram_var = -1;  // -1 when the basis is empty
  std::vector<Monomial> basis;
};

struct CompiledSos {
  SdpProblem problem;
  std::vector<CompiledConstraint> constraints;
};

CompiledSos compile(const SosProgram& program, BasisPruning pruning = BasisPruning::Diagonal);

struct SosCertificate {
  std::vector<Monomial> basis;
  Eigen::MatrixXd gram;
};

/// Gram block of constraint `index`, symmetrized, with eigenvalues below
/// `cert_tol` clipped to zero.
SosCertificate recover_certificate(const CompiledSos& compiled, std::size_t index, const SdpSolution& sol,
                                   double cert_tol = 1e-9);

/// Reproduction residual basis' G basis - p, largest coefficient.
double reproduction_residual(const Polynomial& p, const SosCertificate& cert);

/// True when the reproduction residual (relative to max(1, largest
/// coefficient of p)) and the Gram eigenvalue floor both pass at tol.
bool check_certificate(const Polynomial& p, const SosCertificate& cert, double tol);

}  // namespace ccm
