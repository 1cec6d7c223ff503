// Dense primal-dual interior-point method for small block-diagonal SDPs.
//
// The user problem (PSD blocks, free/nonnegative scalars, linear equalities)
// is reduced to a linear matrix inequality in a free parameter z: every
// variable entry is collected in a vector y, the equalities G y = h are
// eliminated through y = y0 + N z, and each cone variable contributes a block
//   F_b(z) = smat(y0_b) + sum_i z_i smat(N_b e_i)  >= 0.
// The LMI is solved as the dual of a standard-form pair inside the
// homogeneous self-dual embedding, with Nesterov-Todd scaling and a
// Mehrotra predictor-corrector.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "ccm/sdp.hpp"

namespace ccm {

// --- SdpProblem -------------------------------------------------------------

int SdpProblem::add_block(std::string name, int dim) {
  if (dim < 1) throw SdpError("block '" + name + "' must have dimension >= 1");
  vars_.push_back({std::move(name), dim, true, ScalarSign::Free});
  return static_cast<int>(vars_.size()) - 1;
}

int SdpProblem::add_scalar(std::string name, ScalarSign sign) {
  vars_.push_back({std::move(name), 1, false, sign});
  return static_cast<int>(vars_.size()) - 1;
}

void SdpProblem::check_term(const LinearTerm& t) const {
  const auto& e = t.entry;
  if (e.var < 0 || e.var >= static_cast<int>(vars_.size())) {
    throw SdpError("reference to undeclared variable #" + std::to_string(e.var));
  }
  const auto& v = vars_[static_cast<std::size_t>(e.var)];
  if (e.row < 0 || e.col < 0 || e.row > e.col || e.col >= v.dim) {
    throw SdpError("entry (" + std::to_string(e.row) + "," + std::to_string(e.col) + ") outside variable '" +
                   v.name + "'");
  }
  if (!std::isfinite(t.coef)) throw SdpError("non-finite coefficient on variable '" + v.name + "'");
}

void SdpProblem::add_equality(std::vector<LinearTerm> terms, double rhs, std::string label) {
  for (auto& t : terms) {
    t.entry = EntryRef::entry(t.entry.var, t.entry.row, t.entry.col);
    check_term(t);
  }
  if (label.empty()) label = "eq" + std::to_string(eqs_.size());
  eqs_.push_back({std::move(label), std::move(terms), rhs});
}

void SdpProblem::set_objective(std::vector<LinearTerm> terms) {
  for (auto& t : terms) {
    t.entry = EntryRef::entry(t.entry.var, t.entry.row, t.entry.col);
    check_term(t);
  }
  objective_ = std::move(terms);
}

std::optional<int> SdpProblem::find_variable(std::string_view name) const {
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    if (vars_[i].name == name) return static_cast<int>(i);
  }
  return std::nullopt;
}

int SdpProblem::num_blocks() const {
  return static_cast<int>(std::count_if(vars_.begin(), vars_.end(), [](const auto& v) { return v.is_block; }));
}

int SdpProblem::num_scalars() const { return static_cast<int>(vars_.size()) - num_blocks(); }

void SdpProblem::validate() const {
  for (const auto& v : vars_) {
    if (v.dim < 1) throw SdpError("variable '" + v.name + "' has dimension < 1");
    if (!v.is_block && v.dim != 1) throw SdpError("scalar '" + v.name + "' must have dimension 1");
  }
  for (const auto& eq : eqs_) {
    for (const auto& t : eq.terms) check_term(t);
    if (!std::isfinite(eq.rhs)) throw SdpError("equality '" + eq.label + "' has non-finite rhs");
  }
  if (objective_) {
    for (const auto& t : *objective_) check_term(t);
  }
}

namespace {

bool same_terms(const std::vector<LinearTerm>& a, const std::vector<LinearTerm>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].entry != b[i].entry || a[i].coef != b[i].coef) return false;
  }
  return true;
}

}  // namespace

bool operator==(const SdpProblem& a, const SdpProblem& b) {
  if (a.vars_.size() != b.vars_.size() || a.eqs_.size() != b.eqs_.size()) return false;
  for (std::size_t i = 0; i < a.vars_.size(); ++i) {
    const auto& x = a.vars_[i];
    const auto& y = b.vars_[i];
    if (x.name != y.name || x.dim != y.dim || x.is_block != y.is_block || x.sign != y.sign) return false;
  }
  for (std::size_t i = 0; i < a.eqs_.size(); ++i) {
    const auto& x = a.eqs_[i];
    const auto& y = b.eqs_[i];
    if (x.label != y.label || x.rhs != y.rhs || !same_terms(x.terms, y.terms)) return false;
  }
  if (a.objective_.has_value() != b.objective_.has_value()) return false;
  return !a.objective_ || same_terms(*a.objective_, *b.objective_);
}

std::string_view to_string(SdpStatus s) {
  switch (s) {
    case SdpStatus::Feasible:
      return "Feasible";
    case SdpStatus::Infeasible:
      return "Infeasible";
    case SdpStatus::Marginal:
      return "Marginal";
  }
  return "?";
}

std::vector<ConstraintCheck> CheckReport::failures() const {
  std::vector<ConstraintCheck> out;
  std::copy_if(items.begin(), items.end(), std::back_inserter(out), [](const auto& c) { return !c.pass; });
  return out;
}

// --- solver internals -------------------------------------------------------

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using BlockMat = std::vector<MatrixXd>;

int upper_count(int d) { return d * (d + 1) / 2; }

/// Position of every variable entry inside the stacked vector y.
class EntryLayout {
 public:
  explicit EntryLayout(const SdpProblem& prob) {
    int off = 0;
    for (const auto& v : prob.variables()) {
      offsets_.push_back(off);
      dims_.push_back(v.dim);
      off += v.is_block ? upper_count(v.dim) : 1;
    }
    size_ = off;
  }

  int size() const { return size_; }

  int index(const EntryRef& e) const {
    const int d = dims_[static_cast<std::size_t>(e.var)];
    // row-major upper triangle
    const int before = e.row * d - e.row * (e.row - 1) / 2;
    return offsets_[static_cast<std::size_t>(e.var)] + before + (e.col - e.row);
  }

  int offset(int var) const { return offsets_[static_cast<std::size_t>(var)]; }

 private:
  std::vector<int> offsets_;
  std::vector<int> dims_;
  int size_ = 0;
};

/// smat of a slice of y: entries in row-major upper order.
MatrixXd smat(const VectorXd& y, int offset, int d) {
  MatrixXd m(d, d);
  int k = offset;
  for (int i = 0; i < d; ++i) {
    for (int j = i; j < d; ++j) {
      m(i, j) = y(k);
      m(j, i) = y(k);
      ++k;
    }
  }
  return m;
}

/// Adjoint of smat under the trace inner product.
void smat_adjoint(const MatrixXd& x, int offset, VectorXd& out) {
  const int d = static_cast<int>(x.rows());
  int k = offset;
  for (int i = 0; i < d; ++i) {
    for (int j = i; j < d; ++j) {
      out(k) = (i == j) ? x(i, i) : x(i, j) + x(j, i);
      ++k;
    }
  }
}

double inner(const BlockMat& a, const BlockMat& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k].cwiseProduct(b[k]).sum();
  return s;
}

double frob(const BlockMat& a) { return std::sqrt(inner(a, a)); }

BlockMat axpy(const BlockMat& x, double alpha, const BlockMat& dx) {
  BlockMat r(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) r[k] = x[k] + alpha * dx[k];
  return r;
}

double min_eig(const MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

/// Linear matrix inequality F(z) = F0 + sum_i z_i F_i >= 0 over cone blocks.
struct Lmi {
  std::vector<int> var_of_block;
  BlockMat f0;
  std::vector<BlockMat> fi;  // fi[i][block]
  int size() const { return static_cast<int>(fi.size()); }

  BlockMat eval(const VectorXd& z) const {
    BlockMat r = f0;
    for (int i = 0; i < size(); ++i) {
      for (std::size_t b = 0; b < r.size(); ++b) r[b] += z(i) * fi[static_cast<std::size_t>(i)][b];
    }
    return r;
  }
};

/// Equality elimination y = y0 + N z via SVD of the row-normalized system.
struct Elimination {
  VectorXd y0;
  MatrixXd null_basis;
  // pseudo-inverse pieces for mapping dual vectors back to equality rows
  MatrixXd u_r;
  VectorXd s_r;
  MatrixXd v_r;
  VectorXd row_scale;
  VectorXd residual;  // h - G y0 in scaled rows
  double residual_norm = 0.0;
  double rhs_norm = 0.0;
};

Elimination eliminate(const MatrixXd& g, const VectorXd& h) {
  Elimination el;
  const auto m = g.rows();
  const auto n = g.cols();
  el.row_scale = VectorXd::Ones(m);
  MatrixXd gs = g;
  VectorXd hs = h;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double nrm = g.row(i).norm();
    if (nrm > 0) {
      el.row_scale(i) = 1.0 / nrm;
      gs.row(i) *= el.row_scale(i);
      hs(i) *= el.row_scale(i);
    }
  }
  el.rhs_norm = hs.norm();
  if (m == 0) {
    el.y0 = VectorXd::Zero(n);
    el.null_basis = MatrixXd::Identity(n, n);
    el.u_r = MatrixXd(0, 0);
    el.s_r = VectorXd(0);
    el.v_r = MatrixXd(n, 0);
    el.residual = VectorXd(0);
    return el;
  }
  Eigen::JacobiSVD<MatrixXd> svd(gs, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const VectorXd& sv = svd.singularValues();
  const double smax = sv.size() > 0 ? sv(0) : 0.0;
  const double cutoff = smax * 1e-12 * static_cast<double>(std::max(m, n));
  Eigen::Index rank = 0;
  while (rank < sv.size() && sv(rank) > cutoff) ++rank;
  el.u_r = svd.matrixU().leftCols(rank);
  el.s_r = sv.head(rank);
  el.v_r = svd.matrixV().leftCols(rank);
  el.y0 = el.v_r * (el.s_r.cwiseInverse().asDiagonal() * (el.u_r.transpose() * hs));
  el.null_basis = svd.matrixV().rightCols(n - rank);
  el.residual = hs - gs * el.y0;
  el.residual_norm = el.residual.norm();
  return el;
}

/// Equality multipliers v (original row scaling) solving G' v = u in the
/// least-squares sense.
VectorXd multipliers_for(const Elimination& el, const VectorXd& u) {
  VectorXd vs = el.u_r * (el.s_r.cwiseInverse().asDiagonal() * (el.v_r.transpose() * u));
  return el.row_scale.asDiagonal() * vs;
}

struct Scaling {
  MatrixXd g;      // X = G Sigma G', S = G^-T Sigma G^-1
  MatrixXd g_inv;
  VectorXd sigma;
  MatrixXd w;      // W = G G'
};

bool nt_scaling(const MatrixXd& x, const MatrixXd& s, Scaling& out) {
  Eigen::LLT<MatrixXd> lx(x);
  Eigen::LLT<MatrixXd> ls(s);
  if (lx.info() != Eigen::Success || ls.info() != Eigen::Success) return false;
  const MatrixXd l = lx.matrixL();
  const MatrixXd r = ls.matrixL();
  Eigen::JacobiSVD<MatrixXd> svd(r.transpose() * l, Eigen::ComputeFullU | Eigen::ComputeFullV);
  out.sigma = svd.singularValues();
  if (out.sigma.minCoeff() <= 0) return false;
  const VectorXd isq = out.sigma.cwiseSqrt().cwiseInverse();
  out.g = l * svd.matrixV() * isq.asDiagonal();
  out.g_inv = out.sigma.cwiseSqrt().asDiagonal() * svd.matrixV().transpose() *
              lx.matrixL().solve(MatrixXd::Identity(x.rows(), x.cols()));
  out.w = out.g * out.g.transpose();
  return true;
}

/// Largest step alpha with X + alpha dX >= 0 (infinity when unrestricted).
double max_step(const MatrixXd& x, const MatrixXd& dx) {
  Eigen::LLT<MatrixXd> lx(x);
  const MatrixXd linv = lx.matrixL().solve(MatrixXd::Identity(x.rows(), x.cols()));
  const double lam = min_eig(linv * dx * linv.transpose());
  return lam >= 0 ? std::numeric_limits<double>::infinity() : -1.0 / lam;
}

struct HsdState {
  BlockMat x;
  VectorXd y;
  BlockMat s;
  double tau = 1.0;
  double kappa = 1.0;
};

struct HsdDirection {
  BlockMat dx;
  VectorXd dy;
  BlockMat ds;
  double dtau = 0.0;
  double dkappa = 0.0;
};

class HsdSolver {
 public:
  // primal: min <C,X>  s.t. <A_i,X> = b_i, X >= 0
  // dual:   max b'y    s.t. sum y_i A_i + S = C, S >= 0
  // with C = F0, A_i = -F_i.
  HsdSolver(const Lmi& lmi, VectorXd b) : lmi_(lmi), b_(std::move(b)) {
    nu_ = 0;
    for (const auto& blk : lmi_.f0) nu_ += static_cast<int>(blk.rows());
    cnorm_ = frob(lmi_.f0);
  }

  VectorXd a_op(const BlockMat& x) const {
    VectorXd r(lmi_.size());
    for (int i = 0; i < lmi_.size(); ++i) r(i) = -inner(lmi_.fi[static_cast<std::size_t>(i)], x);
    return r;
  }

  BlockMat a_adj(const VectorXd& y) const {
    BlockMat r(lmi_.f0.size());
    for (std::size_t b = 0; b < r.size(); ++b) r[b] = MatrixXd::Zero(lmi_.f0[b].rows(), lmi_.f0[b].cols());
    for (int i = 0; i < lmi_.size(); ++i) {
      for (std::size_t b = 0; b < r.size(); ++b) r[b] -= y(i) * lmi_.fi[static_cast<std::size_t>(i)][b];
    }
    return r;
  }

  const BlockMat& c() const { return lmi_.f0; }
  const VectorXd& b() const { return b_; }
  int nu() const { return nu_; }
  double cnorm() const { return cnorm_; }

  bool direction(const HsdState& st, const std::vector<Scaling>& sc, const MatrixXd& schur_lu_src, double eta,
                 const BlockMat& rc, double rtk, HsdDirection& d) const {
    const int m = lmi_.size();
    const std::size_t nb = st.x.size();
    // residuals
    VectorXd rp = b_ * st.tau - a_op(st.x);
    BlockMat ad = a_adj(st.y);
    BlockMat rd(nb);
    for (std::size_t k = 0; k < nb; ++k) rd[k] = eta * (lmi_.f0[k] * st.tau - ad[k] - st.s[k]);
    rp *= eta;
    const double rg = eta * (st.kappa - b_.dot(st.y) + inner(lmi_.f0, st.x));

    BlockMat rt(nb);  // Rc - W rd W
    BlockMat wcw(nb);
    for (std::size_t k = 0; k < nb; ++k) {
      rt[k] = rc[k] - sc[k].w * rd[k] * sc[k].w;
      wcw[k] = sc[k].w * lmi_.f0[k] * sc[k].w;
    }
    const VectorXd gvec = a_op(wcw);
    const double hval = inner(lmi_.f0, wcw);

    MatrixXd k_mat(m + 1, m + 1);
    k_mat.topLeftCorner(m, m) = schur_lu_src;
    k_mat.block(0, m, m, 1) = -(gvec + b_);
    k_mat.block(m, 0, 1, m) = (b_ - gvec).transpose();
    k_mat(m, m) = hval + st.kappa / st.tau;
    VectorXd rhs(m + 1);
    rhs.head(m) = rp - a_op(rt);
    rhs(m) = rg + inner(lmi_.f0, rt) + rtk / st.tau;

    Eigen::FullPivLU<MatrixXd> lu(k_mat);
    VectorXd sol = lu.solve(rhs);
    if (!sol.allFinite()) return false;
    d.dy = sol.head(m);
    d.dtau = sol(m);
    BlockMat ady = a_adj(d.dy);
    d.ds.resize(nb);
    d.dx.resize(nb);
    for (std::size_t k = 0; k < nb; ++k) {
      d.ds[k] = rd[k] - ady[k] + lmi_.f0[k] * d.dtau;
      d.dx[k] = rt[k] + sc[k].w * ady[k] * sc[k].w - d.dtau * wcw[k];
      d.dx[k] = 0.5 * (d.dx[k] + d.dx[k].transpose()).eval();
      d.ds[k] = 0.5 * (d.ds[k] + d.ds[k].transpose()).eval();
    }
    d.dkappa = (rtk - st.kappa * d.dtau) / st.tau;
    return true;
  }

  MatrixXd schur(const std::vector<Scaling>& sc) const {
    const int m = lmi_.size();
    MatrixXd mm(m, m);
    std::vector<BlockMat> waw(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) {
      auto& blocks = waw[static_cast<std::size_t>(j)];
      blocks.resize(sc.size());
      for (std::size_t k = 0; k < sc.size(); ++k) {
        blocks[k] = sc[k].w * lmi_.fi[static_cast<std::size_t>(j)][k] * sc[k].w;
      }
    }
    for (int i = 0; i < m; ++i) {
      for (int j = i; j < m; ++j) {
        const double v = inner(lmi_.fi[static_cast<std::size_t>(i)], waw[static_cast<std::size_t>(j)]);
        mm(i, j) = v;
        mm(j, i) = v;
      }
    }
    return mm;
  }

 private:
  const Lmi& lmi_;
  VectorXd b_;
  int nu_ = 0;
  double cnorm_ = 0.0;
};

/// Complementarity right-hand side G Z G' where Z solves the scaled
/// Lyapunov equation Sigma o Z = target*I - Sigma^2 - corr.
MatrixXd complementarity_rhs(const Scaling& sc, double target, const MatrixXd* corr) {
  const auto d = sc.sigma.size();
  MatrixXd h = -sc.sigma.cwiseAbs2().asDiagonal().toDenseMatrix();
  h.diagonal().array() += target;
  if (corr) h -= *corr;
  MatrixXd z(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) z(i, j) = 2.0 * h(i, j) / (sc.sigma(i) + sc.sigma(j));
  }
  MatrixXd r = sc.g * z * sc.g.transpose();
  return 0.5 * (r + r.transpose());
}

double step_length(const HsdState& st, const HsdDirection& d) {
  double a = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < st.x.size(); ++k) {
    a = std::min(a, max_step(st.x[k], d.dx[k]));
    a = std::min(a, max_step(st.s[k], d.ds[k]));
  }
  if (d.dtau < 0) a = std::min(a, -st.tau / d.dtau);
  if (d.dkappa < 0) a = std::min(a, -st.kappa / d.dkappa);
  return a;
}

struct LmiOutcome {
  SdpStatus status = SdpStatus::Marginal;
  VectorXd z;
  BlockMat cert;  // Infeasible: X >= 0 with A(X) = 0, <F0,X> = -1
  double gap = 0.0;
  double objective = 0.0;
  int iterations = 0;
  std::string message;
};

double lmi_min_eig(const BlockMat& f) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& blk : f) m = std::min(m, min_eig(blk));
  return m;
}

LmiOutcome solve_lmi(const Lmi& lmi, const VectorXd& b, const SdpOptions& opts) {
  LmiOutcome out;
  HsdSolver hsd(lmi, b);
  const std::size_t nb = lmi.f0.size();
  const int m = lmi.size();
  HsdState st;
  st.x.resize(nb);
  st.s.resize(nb);
  for (std::size_t k = 0; k < nb; ++k) {
    st.x[k] = MatrixXd::Identity(lmi.f0[k].rows(), lmi.f0[k].cols());
    st.s[k] = st.x[k];
  }
  st.y = VectorXd::Zero(m);
  const double bnorm = b.norm();
  const double nu1 = static_cast<double>(hsd.nu() + 1);

  for (int iter = 0; iter <= opts.max_iter; ++iter) {
    out.iterations = iter;
    const VectorXd rp = hsd.b() * st.tau - hsd.a_op(st.x);
    BlockMat ad = hsd.a_adj(st.y);
    BlockMat rd(nb);
    for (std::size_t k = 0; k < nb; ++k) rd[k] = hsd.c()[k] * st.tau - ad[k] - st.s[k];
    const double cx = inner(hsd.c(), st.x);
    const double by = hsd.b().dot(st.y);
    const double mu = (inner(st.x, st.s) + st.tau * st.kappa) / nu1;

    const double pobj = cx / st.tau;
    const double dobj = by / st.tau;
    const double pinf = rp.norm() / st.tau / (1.0 + bnorm);
    const double dinf = frob(rd) / st.tau / (1.0 + hsd.cnorm());
    const double rel_gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));

    if (pinf <= opts.feas_tol && dinf <= opts.feas_tol && rel_gap <= opts.gap_tol) {
      const VectorXd z = st.y / st.tau;
      if (lmi_min_eig(lmi.eval(z)) >= -opts.feas_tol) {
        out.status = SdpStatus::Feasible;
        out.z = z;
        out.gap = rel_gap;
        out.objective = dobj;
        return out;
      }
    }
    // Farkas ray for the LMI: X >= 0, A(X) = 0, <C,X> < 0.
    if (cx < 0) {
      const double scale = -1.0 / cx;
      const double res = hsd.a_op(st.x).norm() * scale;
      if (res <= opts.feas_tol) {
        out.status = SdpStatus::Infeasible;
        out.cert.resize(nb);
        for (std::size_t k = 0; k < nb; ++k) out.cert[k] = st.x[k] * scale;
        out.gap = res;
        out.message = "LMI infeasible (dual ray)";
        return out;
      }
    }
    // Improving ray for the LMI objective: unbounded below.
    if (by > 0) {
      BlockMat ray = hsd.a_adj(st.y);
      for (std::size_t k = 0; k < nb; ++k) ray[k] += st.s[k];
      if (frob(ray) / by <= opts.feas_tol) {
        out.status = SdpStatus::Marginal;
        out.message = "objective unbounded";
        return out;
      }
    }
    if (iter == opts.max_iter) break;

    std::vector<Scaling> sc(nb);
    for (std::size_t k = 0; k < nb; ++k) {
      if (!nt_scaling(st.x[k], st.s[k], sc[k])) {
        out.message = "numerical breakdown in scaling";
        return out;
      }
    }
    const MatrixXd schur = hsd.schur(sc);

    // predictor
    BlockMat rc(nb);
    for (std::size_t k = 0; k < nb; ++k) rc[k] = -st.x[k];
    HsdDirection aff;
    if (!hsd.direction(st, sc, schur, 1.0, rc, -st.tau * st.kappa, aff)) {
      out.message = "numerical breakdown in Newton system";
      return out;
    }
    const double a_aff = std::min(1.0, step_length(st, aff));
    const BlockMat xa = axpy(st.x, a_aff, aff.dx);
    const BlockMat sa = axpy(st.s, a_aff, aff.ds);
    const double mu_aff =
        (inner(xa, sa) + (st.tau + a_aff * aff.dtau) * (st.kappa + a_aff * aff.dkappa)) / nu1;
    const double sigma = std::clamp(std::pow(mu_aff / mu, 3.0), 0.0, 1.0);

    // corrector
    for (std::size_t k = 0; k < nb; ++k) {
      const MatrixXd dxs = sc[k].g_inv * aff.dx[k] * sc[k].g_inv.transpose();
      const MatrixXd dss = sc[k].g.transpose() * aff.ds[k] * sc[k].g;
      const MatrixXd corr = 0.5 * (dxs * dss + dss * dxs);
      rc[k] = complementarity_rhs(sc[k], sigma * mu, &corr);
    }
    HsdDirection dir;
    const double rtk = sigma * mu - st.tau * st.kappa - aff.dtau * aff.dkappa;
    if (!hsd.direction(st, sc, schur, 1.0 - sigma, rc, rtk, dir)) {
      out.message = "numerical breakdown in Newton system";
      return out;
    }
    const double alpha = std::min(1.0, 0.98 * step_length(st, dir));
    st.x = axpy(st.x, alpha, dir.dx);
    st.s = axpy(st.s, alpha, dir.ds);
    st.y += alpha * dir.dy;
    st.tau += alpha * dir.dtau;
    st.kappa += alpha * dir.dkappa;
    for (std::size_t k = 0; k < nb; ++k) {
      st.x[k] = 0.5 * (st.x[k] + st.x[k].transpose()).eval();
      st.s[k] = 0.5 * (st.s[k] + st.s[k].transpose()).eval();
    }
    if (!(st.tau > 0) || !(st.kappa > 0) || !std::isfinite(st.tau) || alpha < 1e-12) {
      out.message = "stalled";
      return out;
    }
  }
  out.message = "iteration limit reached";
  return out;
}

}  // namespace

// --- solve ------------------------------------------------------------------

SdpSolution solve(const SdpProblem& prob, const SdpOptions& opts) {
  prob.validate();
  const auto& vars = prob.variables();
  const EntryLayout layout(prob);
  const int ny = layout.size();
  const auto neq = static_cast<Eigen::Index>(prob.equalities().size());

  MatrixXd g = MatrixXd::Zero(neq, ny);
  VectorXd h(neq);
  for (Eigen::Index r = 0; r < neq; ++r) {
    const auto& eq = prob.equalities()[static_cast<std::size_t>(r)];
    for (const auto& t : eq.terms) g(r, layout.index(t.entry)) += t.coef;
    h(r) = eq.rhs;
  }
  VectorXd cvec = VectorXd::Zero(ny);
  if (prob.objective()) {
    for (const auto& t : *prob.objective()) cvec(layout.index(t.entry)) += t.coef;
  }

  SdpSolution sol;
  const Elimination el = eliminate(g, h);

  auto finish_infeasible = [&](const VectorXd& u, double residual, int iters, std::string msg) {
    sol.status = SdpStatus::Infeasible;
    VectorXd v = multipliers_for(el, u);
    const double hv = h.dot(v);
    if (hv < 0) v /= -hv;
    sol.certificate = v;
    sol.gap = residual;
    sol.iterations = iters;
    sol.message = std::move(msg);
    return sol;
  };

  if (el.residual_norm > opts.feas_tol * (1.0 + el.rhs_norm)) {
    // inconsistent equalities: v = -residual / |residual|^2 (scaled rows)
    sol.status = SdpStatus::Infeasible;
    VectorXd v = el.row_scale.asDiagonal() * el.residual;
    v /= -h.dot(v);
    sol.certificate = v;
    sol.gap = (g.transpose() * v).norm();
    sol.message = "linear equalities are inconsistent";
    return sol;
  }

  Lmi lmi;
  const MatrixXd& nb = el.null_basis;
  const auto k = nb.cols();
  lmi.fi.resize(static_cast<std::size_t>(k));
  for (std::size_t v = 0; v < vars.size(); ++v) {
    const auto& var = vars[v];
    const bool cone = var.is_block || var.sign == ScalarSign::NonNegative;
    if (!cone) continue;
    lmi.var_of_block.push_back(static_cast<int>(v));
    const int off = layout.offset(static_cast<int>(v));
    lmi.f0.push_back(smat(el.y0, off, var.dim));
    for (Eigen::Index i = 0; i < k; ++i) {
      lmi.fi[static_cast<std::size_t>(i)].push_back(smat(nb.col(i), off, var.dim));
    }
  }
  const VectorXd b = -(nb.transpose() * cvec);

  VectorXd z = VectorXd::Zero(k);
  if (lmi.f0.empty()) {
    if (k > 0 && b.norm() > 0) {
      sol.status = SdpStatus::Marginal;
      sol.message = "objective unbounded";
      return sol;
    }
    sol.status = SdpStatus::Feasible;
  } else if (k == 0) {
    // Fully determined: the only candidate is y0.
    double worst = std::numeric_limits<double>::infinity();
    std::size_t worst_block = 0;
    for (std::size_t bi = 0; bi < lmi.f0.size(); ++bi) {
      const double e = min_eig(lmi.f0[bi]);
      if (e < worst) {
        worst = e;
        worst_block = bi;
      }
    }
    if (worst < -opts.feas_tol) {
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(lmi.f0[worst_block]);
      const VectorXd ev = es.eigenvectors().col(0);
      VectorXd u = VectorXd::Zero(ny);
      const int var = lmi.var_of_block[worst_block];
      smat_adjoint(ev * ev.transpose() / -worst, layout.offset(var), u);
      return finish_infeasible(u, 0.0, 0, "equalities fix a point outside the cone");
    }
    sol.status = SdpStatus::Feasible;
  } else {
    const LmiOutcome lo = solve_lmi(lmi, b, opts);
    sol.iterations = lo.iterations;
    sol.message = lo.message;
    if (lo.status == SdpStatus::Infeasible) {
      VectorXd u = VectorXd::Zero(ny);
      for (std::size_t bi = 0; bi < lo.cert.size(); ++bi) {
        smat_adjoint(lo.cert[bi], layout.offset(lmi.var_of_block[bi]), u);
      }
      return finish_infeasible(u, lo.gap, lo.iterations, lo.message);
    }
    if (lo.status != SdpStatus::Feasible) {
      sol.status = SdpStatus::Marginal;
      return sol;
    }
    sol.status = SdpStatus::Feasible;
    sol.gap = lo.gap;
    z = lo.z;
  }

  const VectorXd y = el.y0 + nb * z;
  sol.values.reserve(vars.size());
  for (std::size_t v = 0; v < vars.size(); ++v) {
    sol.values.push_back(smat(y, layout.offset(static_cast<int>(v)), vars[v].dim));
  }
  sol.objective = cvec.dot(y);
  return sol;
}

// --- check_solution ---------------------------------------------------------

CheckReport check_solution(const SdpProblem& prob, const SdpSolution& sol, double tol) {
  CheckReport rep;
  const auto& vars = prob.variables();
  auto push = [&](std::string name, double residual, bool pass) {
    rep.items.push_back({std::move(name), residual, pass});
    rep.pass = rep.pass && pass;
  };

  if (sol.status == SdpStatus::Feasible) {
    if (sol.values.size() != vars.size()) {
      push("values", std::numeric_limits<double>::infinity(), false);
      return rep;
    }
    for (std::size_t v = 0; v < vars.size(); ++v) {
      const auto& var = vars[v];
      const MatrixXd& x = sol.values[v];
      if (x.rows() != var.dim || x.cols() != var.dim) {
        push(var.name + " shape", std::numeric_limits<double>::infinity(), false);
        continue;
      }
      if (var.is_block) {
        const double asym = (x - x.transpose()).cwiseAbs().maxCoeff();
        const double floor = min_eig(x);
        push(var.name + " psd", std::max(asym, std::max(0.0, -floor)), asym <= tol && floor >= -tol);
      } else if (var.sign == ScalarSign::NonNegative) {
        push(var.name + " sign", std::max(0.0, -x(0, 0)), x(0, 0) >= -tol);
      }
    }
    for (const auto& eq : prob.equalities()) {
      double lhs = 0.0;
      for (const auto& t : eq.terms) lhs += t.coef * sol.value(t.entry);
      const double r = std::abs(lhs - eq.rhs);
      push(eq.label, r, r <= tol * (1.0 + std::abs(eq.rhs)));
    }
    return rep;
  }

  if (sol.status == SdpStatus::Infeasible) {
    const auto neq = prob.equalities().size();
    if (static_cast<std::size_t>(sol.certificate.size()) != neq) {
      push("certificate size", std::numeric_limits<double>::infinity(), false);
      return rep;
    }
    // dual image s = G' v, split per variable
    std::map<EntryRef, double> s;
    double hv = 0.0;
    for (std::size_t r = 0; r < neq; ++r) {
      const auto& eq = prob.equalities()[r];
      const double v = sol.certificate(static_cast<Eigen::Index>(r));
      hv += eq.rhs * v;
      for (const auto& t : eq.terms) s[t.entry] += t.coef * v;
    }
    push("certificate rhs'v", hv + 1.0, std::abs(hv + 1.0) <= tol);
    for (std::size_t vi = 0; vi < vars.size(); ++vi) {
      const auto& var = vars[vi];
      const int id = static_cast<int>(vi);
      if (var.is_block) {
        MatrixXd z = MatrixXd::Zero(var.dim, var.dim);
        for (int i = 0; i < var.dim; ++i) {
          for (int j = i; j < var.dim; ++j) {
            auto it = s.find(EntryRef{id, i, j});
            if (it == s.end()) continue;
            const double val = (i == j) ? it->second : 0.5 * it->second;
            z(i, j) = val;
            z(j, i) = val;
          }
        }
        const double floor = min_eig(z);
        push(var.name + " dual cone", std::max(0.0, -floor), floor >= -tol);
      } else {
        auto it = s.find(EntryRef{id, 0, 0});
        const double val = it == s.end() ? 0.0 : it->second;
        if (var.sign == ScalarSign::NonNegative) {
          push(var.name + " dual sign", std::max(0.0, -val), val >= -tol);
        } else {
          push(var.name + " dual zero", std::abs(val), std::abs(val) <= tol);
        }
      }
    }
    return rep;
  }

  push("status", 0.0, false);
  return rep;
}

}  // namespace ccm
