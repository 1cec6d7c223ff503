#include "ccm/sos.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace ccm {

// --- AffineExpr -------------------------------------------------------------

AffineExpr AffineExpr::entry(const EntryRef& e, double coef) {
  AffineExpr a;
  if (coef != 0.0) a.terms_.emplace(EntryRef::entry(e.var, e.row, e.col), coef);
  return a;
}

AffineExpr& AffineExpr::operator+=(const AffineExpr& o) {
  constant_ += o.constant_;
  for (const auto& [e, c] : o.terms_) {
    auto [it, inserted] = terms_.try_emplace(e, c);
    if (!inserted) {
      it->second += c;
      if (it->second == 0.0) terms_.erase(it);
    }
  }
  return *this;
}

AffineExpr& AffineExpr::operator-=(const AffineExpr& o) { return *this += -o; }

AffineExpr& AffineExpr::operator*=(double s) {
  if (s == 0.0) {
    constant_ = 0.0;
    terms_.clear();
    return *this;
  }
  constant_ *= s;
  for (auto& [e, c] : terms_) c *= s;
  return *this;
}

double AffineExpr::eval(const SdpSolution& sol) const {
  double v = constant_;
  for (const auto& [e, c] : terms_) v += c * sol.value(e);
  return v;
}

// --- ParamPoly --------------------------------------------------------------

ParamPoly ParamPoly::from(const Polynomial& p) {
  ParamPoly r(p.nvars());
  for (const auto& [m, c] : p.terms()) r.add_term(m, AffineExpr(c));
  return r;
}

int ParamPoly::degree() const { return terms_.empty() ? 0 : terms_.rbegin()->first.degree(); }

void ParamPoly::add_term(const Monomial& m, const AffineExpr& c) {
  if (m.nvars() != nvars_) throw std::invalid_argument("ParamPoly: monomial arity mismatch");
  if (c.is_zero()) return;
  auto [it, inserted] = terms_.try_emplace(m, c);
  if (!inserted) {
    it->second += c;
    if (it->second.is_zero()) terms_.erase(it);
  }
}

ParamPoly& ParamPoly::operator+=(const ParamPoly& q) {
  if (q.nvars_ != nvars_) throw std::invalid_argument("ParamPoly: arity mismatch");
  for (const auto& [m, c] : q.terms_) add_term(m, c);
  return *this;
}

ParamPoly& ParamPoly::operator-=(const ParamPoly& q) {
  if (q.nvars_ != nvars_) throw std::invalid_argument("ParamPoly: arity mismatch");
  for (const auto& [m, c] : q.terms_) add_term(m, -c);
  return *this;
}

ParamPoly& ParamPoly::operator*=(double s) {
  TermMap out;
  for (auto& [m, c] : terms_) {
    AffineExpr v = c * s;
    if (!v.is_zero()) out.emplace(m, std::move(v));
  }
  terms_ = std::move(out);
  return *this;
}

ParamPoly operator*(const Polynomial& p, const ParamPoly& q) {
  if (p.nvars() != q.nvars_) throw std::invalid_argument("ParamPoly: arity mismatch");
  ParamPoly r(q.nvars_);
  for (const auto& [mp, cp] : p.terms()) {
    for (const auto& [mq, aq] : q.terms_) r.add_term(mp * mq, aq * cp);
  }
  return r;
}

ParamPoly operator*(const AffineExpr& a, const Polynomial& p) {
  ParamPoly r(p.nvars());
  for (const auto& [m, c] : p.terms()) r.add_term(m, a * c);
  return r;
}

ParamPoly ParamPoly::embed(std::size_t new_nvars, std::size_t offset) const {
  if (offset + nvars_ > new_nvars) throw std::invalid_argument("ParamPoly::embed: does not fit");
  ParamPoly r(new_nvars);
  for (const auto& [m, c] : terms_) {
    std::vector<int> exps(new_nvars, 0);
    for (std::size_t i = 0; i < nvars_; ++i) exps[offset + i] = m[i];
    r.add_term(Monomial(std::move(exps)), c);
  }
  return r;
}

Polynomial ParamPoly::evaluate(const SdpSolution& sol) const {
  Polynomial p(nvars_);
  for (const auto& [m, c] : terms_) p.add_term(m, c.eval(sol));
  return p;
}

// --- DecisionMatrix ---------------------------------------------------------

AffineExpr DecisionMatrix::at(int i, int j) const {
  if (i > j) std::swap(i, j);
  const int before = i * dim - i * (i - 1) / 2;
  return AffineExpr::entry(entries.at(static_cast<std::size_t>(before + (j - i))));
}

Eigen::MatrixXd DecisionMatrix::value(const SdpSolution& sol) const {
  Eigen::MatrixXd m(dim, dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = i; j < dim; ++j) {
      m(i, j) = at(i, j).eval(sol);
      m(j, i) = m(i, j);
    }
  }
  return m;
}

// --- gram_basis -------------------------------------------------------------

namespace {

std::string monomial_tag(const Monomial& m) {
  std::string s;
  for (std::size_t i = 0; i < m.nvars(); ++i) {
    if (i) s += '.';
    s += std::to_string(m[i]);
  }
  return s;
}

std::set<Monomial, GradedLex> support_of(const ParamPoly& p) {
  std::set<Monomial, GradedLex> s;
  for (const auto& [m, c] : p.terms()) s.insert(m);
  return s;
}

/// Removes basis elements m whose square is neither in the support nor the
/// product of two distinct remaining basis elements; their Gram diagonal
/// would be forced to zero.
void prune_diagonal(std::vector<Monomial>& basis, const std::set<Monomial, GradedLex>& support) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t k = 0; k < basis.size(); ++k) {
      const Monomial sq = basis[k] * basis[k];
      if (support.count(sq)) continue;
      bool reachable = false;
      for (std::size_t a = 0; a < basis.size() && !reachable; ++a) {
        for (std::size_t b = a + 1; b < basis.size() && !reachable; ++b) {
          if (a != k || b != k) reachable = (basis[a] * basis[b]) == sq && !(basis[a] == basis[b]);
        }
      }
      if (!reachable) {
        basis.erase(basis.begin() + static_cast<std::ptrdiff_t>(k));
        changed = true;
        break;
      }
    }
  }
}

/// Keeps monomials whose doubled exponents fit inside the per-variable
/// exponent ranges of `support` (restricted to variables [0, nvars)).
std::vector<Monomial> filter_by_ranges(const std::vector<Monomial>& cands,
                                       const std::vector<Monomial>& support, std::size_t nvars) {
  std::vector<int> lo(nvars, std::numeric_limits<int>::max());
  std::vector<int> hi(nvars, 0);
  for (const auto& m : support) {
    for (std::size_t v = 0; v < nvars; ++v) {
      lo[v] = std::min(lo[v], m[v]);
      hi[v] = std::max(hi[v], m[v]);
    }
  }
  std::vector<Monomial> out;
  for (const auto& m : cands) {
    bool ok = true;
    for (std::size_t v = 0; v < nvars && ok; ++v) ok = 2 * m[v] <= hi[v] && 2 * m[v] >= lo[v];
    if (ok) out.push_back(m);
  }
  return out;
}

}  // namespace

std::vector<Monomial> gram_basis(const SosConstraint& c, BasisPruning pruning) {
  const ParamPoly& e = c.expression;
  const std::size_t n = e.nvars();
  const auto support = support_of(e);
  if (support.empty()) return {};

  if (c.kind == SosKind::Scalar) {
    const int deg = e.degree();
    if (deg % 2 != 0) {
      throw SosError("constraint '" + c.name + "' has odd degree " + std::to_string(deg) +
                     "; no sum-of-squares basis exists");
    }
    if (pruning == BasisPruning::None) return monomials_up_to(n, deg / 2);
    int min_deg = deg;
    for (const auto& m : support) min_deg = std::min(min_deg, m.degree());
    const std::vector<Monomial> sup(support.begin(), support.end());
    std::vector<Monomial> basis = filter_by_ranges(monomials_up_to(n, deg / 2, (min_deg + 1) / 2), sup, n);
    prune_diagonal(basis, support);
    return basis;
  }

  // delta-quadratic form
  if (c.num_delta == 0 || c.num_delta > n) {
    throw SosError("constraint '" + c.name + "' declares an invalid delta count");
  }
  const std::size_t nx = n - c.num_delta;
  int x_deg = 0;
  for (const auto& m : support) {
    int dd = 0;
    int xd = 0;
    for (std::size_t v = 0; v < n; ++v) (v < nx ? xd : dd) += m[v];
    if (dd != 2) {
      throw SosError("constraint '" + c.name + "' is not homogeneous of degree 2 in the delta variables");
    }
    x_deg = std::max(x_deg, xd);
  }
  const int half = (x_deg + 1) / 2;
  const std::vector<Monomial> xmons = monomials_up_to(nx, half);

  auto with_delta = [&](const Monomial& xm, std::size_t i) {
    std::vector<int> exps(n, 0);
    for (std::size_t v = 0; v < nx; ++v) exps[v] = xm[v];
    exps[nx + i] = 1;
    return Monomial(std::move(exps));
  };

  std::vector<Monomial> basis;
  if (pruning == BasisPruning::None) {
    for (const auto& xm : xmons) {
      for (std::size_t i = 0; i < c.num_delta; ++i) basis.push_back(with_delta(xm, i));
    }
    return basis;
  }
  // per delta component: x-exponent ranges of the matching diagonal entry
  std::vector<std::vector<Monomial>> per_delta(c.num_delta);
  for (std::size_t i = 0; i < c.num_delta; ++i) {
    std::vector<Monomial> diag;
    for (const auto& m : support) {
      if (m[nx + i] == 2) diag.push_back(m);
    }
    if (diag.empty()) continue;
    per_delta[i] = filter_by_ranges(xmons, diag, nx);
  }
  for (const auto& xm : xmons) {
    for (std::size_t i = 0; i < c.num_delta; ++i) {
      if (std::find(per_delta[i].begin(), per_delta[i].end(), xm) != per_delta[i].end()) {
        basis.push_back(with_delta(xm, i));
      }
    }
  }
  prune_diagonal(basis, support);
  return basis;
}

// --- SosProgram -------------------------------------------------------------

AffineExpr SosProgram::add_scalar(const std::string& name) {
  const int v = decls_.add_scalar(name, ScalarSign::Free);
  return AffineExpr::entry(EntryRef::scalar(v));
}

DecisionMatrix SosProgram::add_symmetric(const std::string& name, int dim) {
  DecisionMatrix m;
  m.name = name;
  m.dim = dim;
  for (int i = 0; i < dim; ++i) {
    for (int j = i; j < dim; ++j) {
      const int v = decls_.add_scalar(name + "[" + std::to_string(i) + "," + std::to_string(j) + "]");
      m.entries.push_back(EntryRef::scalar(v));
    }
  }
  return m;
}

ParamPoly SosProgram::add_polynomial(const std::string& name, std::size_t nvars, int degree) {
  ParamPoly p(nvars);
  for (const auto& m : monomials_up_to(nvars, degree)) {
    const int v = decls_.add_scalar(name + "[" + monomial_tag(m) + "]", ScalarSign::Free);
    p.add_term(m, AffineExpr::entry(EntryRef::scalar(v)));
  }
  return p;
}

// --- compile ----------------------------------------------------------------

CompiledSos compile(const SosProgram& program, BasisPruning pruning) {
  CompiledSos out;
  out.problem = program.declarations();
  SdpProblem& prob = out.problem;

  for (const auto& c : program.constraints()) {
    for (char ch : c.name) {
      if (std::isspace(static_cast<unsigned char>(ch))) throw SosError("constraint name contains whitespace");
    }
    CompiledConstraint cc;
    cc.name = c.name;
    cc.basis = gram_basis(c, pruning);

    std::map<Monomial, std::vector<LinearTerm>, GradedLex> gram_terms;
    if (!cc.basis.empty()) {
      cc.gram_var = prob.add_block("gram_" + c.name, static_cast<int>(cc.basis.size()));
      for (std::size_t k = 0; k < cc.basis.size(); ++k) {
        for (std::size_t l = k; l < cc.basis.size(); ++l) {
          gram_terms[cc.basis[k] * cc.basis[l]].push_back(
              {EntryRef::entry(cc.gram_var, static_cast<int>(k), static_cast<int>(l)), k == l ? 1.0 : 2.0});
        }
      }
    }
    std::set<Monomial, GradedLex> all = support_of(c.expression);
    for (const auto& [m, t] : gram_terms) all.insert(m);

    for (const auto& m : all) {
      std::vector<LinearTerm> terms;
      if (auto it = gram_terms.find(m); it != gram_terms.end()) terms = it->second;
      double rhs = 0.0;
      if (auto it = c.expression.terms().find(m); it != c.expression.terms().end()) {
        rhs = it->second.constant();
        for (const auto& [e, coef] : it->second.terms()) terms.push_back({e, -coef});
      }
      prob.add_equality(std::move(terms), rhs, c.name + ":" + monomial_tag(m));
    }
    out.constraints.push_back(std::move(cc));
  }

  for (const auto& b : program.bounds()) {
    if (!(b.lower <= b.upper)) throw SosError("matrix bound on '" + b.matrix.name + "' has lower > upper");
    const int d = b.matrix.dim;
    const int lo = prob.add_block("lo_" + b.matrix.name, d);
    const int hi = prob.add_block("hi_" + b.matrix.name, d);
    for (int i = 0; i < d; ++i) {
      for (int j = i; j < d; ++j) {
        const EntryRef p = b.matrix.entries[static_cast<std::size_t>(i * d - i * (i - 1) / 2 + (j - i))];
        const double eye = i == j ? 1.0 : 0.0;
        const std::string tag = b.matrix.name + "[" + std::to_string(i) + "," + std::to_string(j) + "]";
        prob.add_equality({{EntryRef::entry(lo, i, j), 1.0}, {p, -1.0}}, -b.lower * eye, "lo:" + tag);
        prob.add_equality({{EntryRef::entry(hi, i, j), 1.0}, {p, 1.0}}, b.upper * eye, "hi:" + tag);
      }
    }
  }
  return out;
}

// --- certificates -----------------------------------------------------------

SosCertificate recover_certificate(const CompiledSos& compiled, std::size_t index, const SdpSolution& sol,
                                   double cert_tol) {
  const CompiledConstraint& cc = compiled.constraints.at(index);
  SosCertificate cert;
  cert.basis = cc.basis;
  if (cc.gram_var < 0) {
    cert.gram = Eigen::MatrixXd(0, 0);
    return cert;
  }
  const Eigen::MatrixXd g = sol.values.at(static_cast<std::size_t>(cc.gram_var));
  const Eigen::MatrixXd sym = 0.5 * (g + g.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  Eigen::VectorXd ev = es.eigenvalues();
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) < cert_tol) ev(i) = 0.0;
  }
  cert.gram = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  cert.gram = 0.5 * (cert.gram + cert.gram.transpose()).eval();
  return cert;
}

double reproduction_residual(const Polynomial& p, const SosCertificate& cert) {
  const auto nb = cert.basis.size();
  if (static_cast<std::size_t>(cert.gram.rows()) != nb || static_cast<std::size_t>(cert.gram.cols()) != nb) {
    return std::numeric_limits<double>::infinity();
  }
  Polynomial r = -p;
  for (std::size_t k = 0; k < nb; ++k) {
    if (cert.basis[k].nvars() != p.nvars()) return std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < nb; ++l) {
      r.add_term(cert.basis[k] * cert.basis[l], cert.gram(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)));
    }
  }
  return r.max_abs_coefficient();
}

bool check_certificate(const Polynomial& p, const SosCertificate& cert, double tol) {
  const double res = reproduction_residual(p, cert);
  if (!(res <= tol * std::max(1.0, p.max_abs_coefficient()))) return false;
  if (cert.gram.size() == 0) return true;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (cert.gram + cert.gram.transpose()),
                                                    Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0) >= -tol;
}

}  // namespace ccm
