#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace ccm {

/// Exponent vector over a fixed number of variables.
class Monomial {
 public:
  Monomial() = default;
  explicit Monomial(std::size_t nvars) : exps_(nvars, 0) {}
  explicit Monomial(std::vector<int> exponents);
  Monomial(std::initializer_list<int> exponents) : Monomial(std::vector<int>(exponents)) {}

  static Monomial variable(std::size_t nvars, std::size_t index, int power = 1);

  std::size_t nvars() const { return exps_.size(); }
  int operator[](std::size_t i) const { return exps_[i]; }
  std::span<const int> exponents() const { return exps_; }
  int degree() const;
  bool is_constant() const { return degree() == 0; }

  Monomial operator*(const Monomial& other) const;

  friend bool operator==(const Monomial&, const Monomial&) = default;

 private:
  std::vector<int> exps_;
};

/// Graded lexicographic order: lower total degree first; ties broken so that
/// larger exponents on earlier variables come first (x1 < x2 within a degree).
struct GradedLex {
  bool operator()(const Monomial& a, const Monomial& b) const;
};

/// All monomials in `nvars` variables with min_degree <= degree <= max_degree,
/// in graded lexicographic order.
std::vector<Monomial> monomials_up_to(std::size_t nvars, int max_degree, int min_degree = 0);

/// Sparse multivariate polynomial with double coefficients. Stored
/// coefficients are never exactly zero.
class Polynomial {
 public:
  using TermMap = std::map<Monomial, double, GradedLex>;

  explicit Polynomial(std::size_t nvars = 0) : nvars_(nvars) {}

  static Polynomial constant(std::size_t nvars, double c);
  static Polynomial variable(std::size_t nvars, std::size_t index);
  static Polynomial monomial(const Monomial& m, double c = 1.0);

  std::size_t nvars() const { return nvars_; }
  const TermMap& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool is_zero() const { return terms_.empty(); }
  int degree() const;
  /// Highest total degree restricted to the variables [first, first+count).
  int partial_degree(std::size_t first, std::size_t count) const;
  double coefficient(const Monomial& m) const;

  /// Accumulates c into the coefficient of m.
  void add_term(const Monomial& m, double c);

  Polynomial operator-() const;
  Polynomial& operator+=(const Polynomial& q);
  Polynomial& operator-=(const Polynomial& q);
  Polynomial& operator*=(double s);
  friend Polynomial operator+(Polynomial p, const Polynomial& q) { return p += q; }
  friend Polynomial operator-(Polynomial p, const Polynomial& q) { return p -= q; }
  friend Polynomial operator*(const Polynomial& p, const Polynomial& q);
  friend Polynomial operator*(Polynomial p, double s) { return p *= s; }
  friend Polynomial operator*(double s, Polynomial p) { return p *= s; }

  Polynomial pow(int k) const;
  Polynomial derivative(std::size_t var) const;

  double eval(std::span<const double> point) const;
  double eval(const Eigen::VectorXd& point) const {
    return eval(std::span<const double>(point.data(), static_cast<std::size_t>(point.size())));
  }

  /// Coefficients c_k of p(a + s*b) = sum_k c_k s^k.
  std::vector<double> along_line(std::span<const double> a, std::span<const double> b) const;

  /// Embeds into a larger variable set: variable i maps to variable offset+i.
  Polynomial embed(std::size_t new_nvars, std::size_t offset = 0) const;

  /// Drops terms with |coefficient| <= tol.
  Polynomial pruned(double tol) const;

  /// Largest absolute coefficient (0 for the zero polynomial).
  double max_abs_coefficient() const;

  friend bool operator==(const Polynomial&, const Polynomial&) = default;

 private:
  void require_same_arity(const Polynomial& q) const;

  std::size_t nvars_ = 0;
  TermMap terms_;
};

/// Exact value of the integral over s in [0,1] of p(a + s*b).
double line_integral_unit(const Polynomial& p, std::span<const double> a, std::span<const double> b);
double line_integral_unit(const Polynomial& p, const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// Dense matrix of polynomials over a common variable set.
class PolyMatrix {
 public:
  PolyMatrix() = default;
  PolyMatrix(std::size_t rows, std::size_t cols, std::size_t nvars);
  static PolyMatrix column(std::vector<Polynomial> entries);
  static PolyMatrix constant(const Eigen::MatrixXd& m, std::size_t nvars);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t nvars() const { return nvars_; }

  Polynomial& operator()(std::size_t i, std::size_t j) { return entries_[i * cols_ + j]; }
  const Polynomial& operator()(std::size_t i, std::size_t j) const { return entries_[i * cols_ + j]; }

  bool is_symmetric() const;
  int degree() const;
  PolyMatrix transpose() const;
  Eigen::MatrixXd eval(std::span<const double> point) const;
  Eigen::MatrixXd eval(const Eigen::VectorXd& point) const {
    return eval(std::span<const double>(point.data(), static_cast<std::size_t>(point.size())));
  }

  friend bool operator==(const PolyMatrix&, const PolyMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::size_t nvars_ = 0;
  std::vector<Polynomial> entries_;
};

/// Jacobian of a column vector field: entry (i,j) = d f_i / d x_j.
PolyMatrix jacobian(const PolyMatrix& f);

// ---------------------------------------------------------------------------
// Text format: `coeff*x1^a*x2^b` terms joined by + / -.

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t column)
      : std::runtime_error(what + " at column " + std::to_string(column)), column_(column) {}
  std::size_t column() const { return column_; }

 private:
  std::size_t column_;
};

/// Default names x1..xn.
std::vector<std::string> default_variable_names(std::size_t nvars);

/// Shortest decimal form that parses back to the identical double.
std::string format_double(double v);

std::string to_string(const Polynomial& p, std::span<const std::string> names);
std::string to_string(const Polynomial& p);

/// Parses a polynomial expression. Accepts numbers, the given variable names,
/// + - * ^, division by constants and parentheses. Column numbers in errors
/// are 1-based.
Polynomial parse_polynomial(std::string_view text, std::span<const std::string> names);

}  // namespace ccm
