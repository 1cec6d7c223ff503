#include "ccm/poly.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ccm {

Monomial::Monomial(std::vector<int> exponents) : exps_(std::move(exponents)) {
  for (int e : exps_) {
    if (e < 0) throw std::invalid_argument("Monomial: negative exponent");
  }
}

Monomial Monomial::variable(std::size_t nvars, std::size_t index, int power) {
  if (index >= nvars) throw std::invalid_argument("Monomial::variable: index out of range");
  Monomial m(nvars);
  m.exps_[index] = power;
  return m;
}

int Monomial::degree() const { return std::accumulate(exps_.begin(), exps_.end(), 0); }

Monomial Monomial::operator*(const Monomial& other) const {
  if (other.nvars() != nvars()) throw std::invalid_argument("Monomial: arity mismatch");
  Monomial r(*this);
  for (std::size_t i = 0; i < exps_.size(); ++i) r.exps_[i] += other.exps_[i];
  return r;
}

bool GradedLex::operator()(const Monomial& a, const Monomial& b) const {
  const int da = a.degree();
  const int db = b.degree();
  if (da != db) return da < db;
  const auto ea = a.exponents();
  const auto eb = b.exponents();
  if (ea.size() != eb.size()) return ea.size() < eb.size();
  for (std::size_t i = 0; i < ea.size(); ++i) {
    if (ea[i] != eb[i]) return ea[i] > eb[i];
  }
  return false;
}

namespace {

void enumerate_exponents(std::size_t var, int remaining, std::vector<int>& cur,
                         std::vector<Monomial>& out) {
  if (var + 1 == cur.size()) {
    cur[var] = remaining;
    out.emplace_back(cur);
    cur[var] = 0;
    return;
  }
  for (int e = remaining; e >= 0; --e) {
    cur[var] = e;
    enumerate_exponents(var + 1, remaining - e, cur, out);
  }
  cur[var] = 0;
}

}  // namespace

std::vector<Monomial> monomials_up_to(std::size_t nvars, int max_degree, int min_degree) {
  std::vector<Monomial> out;
  if (nvars == 0) {
    if (min_degree <= 0 && max_degree >= 0) out.emplace_back(0);
    return out;
  }
  std::vector<int> cur(nvars, 0);
  for (int d = std::max(0, min_degree); d <= max_degree; ++d) {
    enumerate_exponents(0, d, cur, out);
  }
  return out;
}

// --- Polynomial -------------------------------------------------------------

Polynomial Polynomial::constant(std::size_t nvars, double c) {
  Polynomial p(nvars);
  p.add_term(Monomial(nvars), c);
  return p;
}

Polynomial Polynomial::variable(std::size_t nvars, std::size_t index) {
  Polynomial p(nvars);
  p.add_term(Monomial::variable(nvars, index), 1.0);
  return p;
}

Polynomial Polynomial::monomial(const Monomial& m, double c) {
  Polynomial p(m.nvars());
  p.add_term(m, c);
  return p;
}

int Polynomial::degree() const {
  // Terms are graded, so the last one has the highest degree.
  return terms_.empty() ? 0 : terms_.rbegin()->first.degree();
}

int Polynomial::partial_degree(std::size_t first, std::size_t count) const {
  int best = 0;
  for (const auto& [m, c] : terms_) {
    int d = 0;
    for (std::size_t i = first; i < first + count && i < nvars_; ++i) d += m[i];
    best = std::max(best, d);
  }
  return best;
}

double Polynomial::coefficient(const Monomial& m) const {
  auto it = terms_.find(m);
  return it == terms_.end() ? 0.0 : it->second;
}

void Polynomial::add_term(const Monomial& m, double c) {
  if (m.nvars() != nvars_) throw std::invalid_argument("Polynomial: monomial arity mismatch");
  if (c == 0.0) return;
  auto [it, inserted] = terms_.try_emplace(m, c);
  if (!inserted) {
    it->second += c;
    if (it->second == 0.0) terms_.erase(it);
  }
}

void Polynomial::require_same_arity(const Polynomial& q) const {
  if (q.nvars_ != nvars_) {
    throw std::invalid_argument("Polynomial: arity mismatch (" + std::to_string(nvars_) + " vs " +
                                std::to_string(q.nvars_) + ")");
  }
}

Polynomial Polynomial::operator-() const {
  Polynomial r(*this);
  for (auto& [m, c] : r.terms_) c = -c;
  return r;
}

Polynomial& Polynomial::operator+=(const Polynomial& q) {
  require_same_arity(q);
  for (const auto& [m, c] : q.terms_) add_term(m, c);
  return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& q) {
  require_same_arity(q);
  for (const auto& [m, c] : q.terms_) add_term(m, -c);
  return *this;
}

Polynomial& Polynomial::operator*=(double s) {
  if (s == 0.0) {
    terms_.clear();
    return *this;
  }
  for (auto it = terms_.begin(); it != terms_.end();) {
    it->second *= s;
    // underflow can produce an exact zero
    if (it->second == 0.0) {
      it = terms_.erase(it);
    } else {
      ++it;
    }
  }
  return *this;
}

Polynomial operator*(const Polynomial& p, const Polynomial& q) {
  p.require_same_arity(q);
  Polynomial r(p.nvars_);
  for (const auto& [mp, cp] : p.terms_) {
    for (const auto& [mq, cq] : q.terms_) r.add_term(mp * mq, cp * cq);
  }
  return r;
}

Polynomial Polynomial::pow(int k) const {
  if (k < 0) throw std::invalid_argument("Polynomial::pow: negative exponent");
  Polynomial result = constant(nvars_, 1.0);
  Polynomial base = *this;
  while (k > 0) {
    if (k & 1) result = result * base;
    k >>= 1;
    if (k > 0) base = base * base;
  }
  return result;
}

Polynomial Polynomial::derivative(std::size_t var) const {
  if (var >= nvars_) throw std::invalid_argument("Polynomial::derivative: variable out of range");
  Polynomial r(nvars_);
  for (const auto& [m, c] : terms_) {
    const int e = m[var];
    if (e == 0) continue;
    std::vector<int> exps(m.exponents().begin(), m.exponents().end());
    exps[var] -= 1;
    r.add_term(Monomial(std::move(exps)), c * e);
  }
  return r;
}

double Polynomial::eval(std::span<const double> point) const {
  if (point.size() != nvars_) throw std::invalid_argument("Polynomial::eval: arity mismatch");
  double acc = 0.0;
  for (const auto& [m, c] : terms_) {
    double t = c;
    for (std::size_t i = 0; i < nvars_; ++i) {
      for (int k = 0; k < m[i]; ++k) t *= point[i];
    }
    acc += t;
  }
  return acc;
}

std::vector<double> Polynomial::along_line(std::span<const double> a, std::span<const double> b) const {
  if (a.size() != nvars_ || b.size() != nvars_) {
    throw std::invalid_argument("Polynomial::along_line: arity mismatch");
  }
  std::vector<double> out(static_cast<std::size_t>(degree()) + 1, 0.0);
  std::vector<double> term;
  std::vector<double> next;
  for (const auto& [m, c] : terms_) {
    term.assign(1, c);
    for (std::size_t i = 0; i < nvars_; ++i) {
      for (int k = 0; k < m[i]; ++k) {
        // multiply by (a_i + b_i s)
        next.assign(term.size() + 1, 0.0);
        for (std::size_t j = 0; j < term.size(); ++j) {
          next[j] += term[j] * a[i];
          next[j + 1] += term[j] * b[i];
        }
        term.swap(next);
      }
    }
    for (std::size_t j = 0; j < term.size(); ++j) out[j] += term[j];
  }
  return out;
}

Polynomial Polynomial::embed(std::size_t new_nvars, std::size_t offset) const {
  if (offset + nvars_ > new_nvars) throw std::invalid_argument("Polynomial::embed: does not fit");
  Polynomial r(new_nvars);
  for (const auto& [m, c] : terms_) {
    std::vector<int> exps(new_nvars, 0);
    for (std::size_t i = 0; i < nvars_; ++i) exps[offset + i] = m[i];
    r.add_term(Monomial(std::move(exps)), c);
  }
  return r;
}

Polynomial Polynomial::pruned(double tol) const {
  Polynomial r(nvars_);
  for (const auto& [m, c] : terms_) {
    if (std::abs(c) > tol) r.terms_.emplace(m, c);
  }
  return r;
}

double Polynomial::max_abs_coefficient() const {
  double best = 0.0;
  for (const auto& [m, c] : terms_) best = std::max(best, std::abs(c));
  return best;
}

double line_integral_unit(const Polynomial& p, std::span<const double> a, std::span<const double> b) {
  const std::vector<double> coeffs = p.along_line(a, b);
  // antiderivative evaluated at 1 minus at 0
  double acc = 0.0;
  for (std::size_t k = 0; k < coeffs.size(); ++k) acc += coeffs[k] / static_cast<double>(k + 1);
  return acc;
}

double line_integral_unit(const Polynomial& p, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return line_integral_unit(p, std::span<const double>(a.data(), static_cast<std::size_t>(a.size())),
                            std::span<const double>(b.data(), static_cast<std::size_t>(b.size())));
}

// --- PolyMatrix -------------------------------------------------------------

PolyMatrix::PolyMatrix(std::size_t rows, std::size_t cols, std::size_t nvars)
    : rows_(rows), cols_(cols), nvars_(nvars), entries_(rows * cols, Polynomial(nvars)) {}

PolyMatrix PolyMatrix::column(std::vector<Polynomial> entries) {
  if (entries.empty()) throw std::invalid_argument("PolyMatrix::column: empty");
  const std::size_t nvars = entries.front().nvars();
  PolyMatrix m(entries.size(), 1, nvars);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].nvars() != nvars) throw std::invalid_argument("PolyMatrix::column: arity mismatch");
    m(i, 0) = std::move(entries[i]);
  }
  return m;
}

PolyMatrix PolyMatrix::constant(const Eigen::MatrixXd& a, std::size_t nvars) {
  PolyMatrix m(static_cast<std::size_t>(a.rows()), static_cast<std::size_t>(a.cols()), nvars);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      m(i, j) = Polynomial::constant(nvars, a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    }
  }
  return m;
}

bool PolyMatrix::is_symmetric() const {
  if (rows_ != cols_) return false;
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t j = i + 1; j < cols_; ++j) {
      if (!((*this)(i, j) == (*this)(j, i))) return false;
    }
  }
  return true;
}

int PolyMatrix::degree() const {
  int d = 0;
  for (const auto& p : entries_) d = std::max(d, p.degree());
  return d;
}

PolyMatrix PolyMatrix::transpose() const {
  PolyMatrix t(cols_, rows_, nvars_);
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  }
  return t;
}

Eigen::MatrixXd PolyMatrix::eval(std::span<const double> point) const {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(cols_));
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t j = 0; j < cols_; ++j) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (*this)(i, j).eval(point);
    }
  }
  return out;
}

PolyMatrix jacobian(const PolyMatrix& f) {
  if (f.cols() != 1) throw std::invalid_argument("jacobian: expected a column vector field");
  const std::size_t n = f.nvars();
  PolyMatrix jac(f.rows(), n, n);
  for (std::size_t i = 0; i < f.rows(); ++i) {
    for (std::size_t j = 0; j < n; ++j) jac(i, j) = f(i, 0).derivative(j);
  }
  return jac;
}

}  // namespace ccm
