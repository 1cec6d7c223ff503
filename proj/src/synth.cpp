#include "ccm/synth.hpp"

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace ccm {

// --- SystemModel ------------------------------------------------------------

SystemModel SystemModel::make(PolyMatrix f, Eigen::MatrixXd B, Eigen::MatrixXd C, std::vector<std::string> names) {
  SystemModel s;
  s.n = f.rows();
  s.m = static_cast<std::size_t>(B.cols());
  s.p = static_cast<std::size_t>(C.rows());
  s.f = std::move(f);
  s.B = std::move(B);
  s.C = std::move(C);
  s.state_names = names.empty() ? default_variable_names(s.n) : std::move(names);
  s.validate();
  return s;
}

SystemModel SystemModel::moore_greitzer() {
  const std::vector<std::string> names{"phi", "psi"};
  PolyMatrix f = PolyMatrix::column(
      {parse_polynomial("-psi - 1.5*phi^2 - 0.5*phi^3", names), parse_polynomial("phi", names)});
  return make(std::move(f), Eigen::MatrixXd{{0.0}, {1.0}}, Eigen::MatrixXd{{0.0, 1.0}}, names);
}

void SystemModel::validate() const {
  if (n == 0) throw std::invalid_argument("model: empty state");
  if (f.rows() != n || f.cols() != 1 || f.nvars() != n) {
    throw std::invalid_argument("model: f must be an n x 1 column in n variables");
  }
  if (static_cast<std::size_t>(B.rows()) != n || static_cast<std::size_t>(B.cols()) != m) {
    throw std::invalid_argument("model: B must be n x m");
  }
  if (static_cast<std::size_t>(C.cols()) != n || static_cast<std::size_t>(C.rows()) != p) {
    throw std::invalid_argument("model: C must be p x n");
  }
  if (state_names.size() != n) throw std::invalid_argument("model: one name per state required");
}

Eigen::VectorXd SystemModel::rhs(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
  Eigen::VectorXd dx = f.eval(x).col(0);
  if (m > 0) dx += B * u;
  return dx;
}

std::string to_string(MetricRole r) { return r == MetricRole::Controller ? "controller" : "observer"; }

std::string to_string(SynthesisStatus s) {
  switch (s) {
    case SynthesisStatus::Feasible:
      return "feasible";
    case SynthesisStatus::Infeasible:
      return "infeasible";
    case SynthesisStatus::Inconclusive:
      break;
  }
  return "inconclusive";
}

void SynthesisParams::validate() const {
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
  if (!(alpha1 > 0.0) || !(alpha1 <= alpha2)) throw std::invalid_argument("need 0 < alpha1 <= alpha2");
  if (rho_degree < 0 || rho_degree % 2 != 0) throw std::invalid_argument("rho degree must be even and >= 0");
}

// --- metric -----------------------------------------------------------------

Eigen::MatrixXd ContractionMetric::M() const {
  if (role == MetricRole::Observer) return W;
  return W.llt().solve(Eigen::MatrixXd::Identity(W.rows(), W.cols()));
}

Eigen::MatrixXd ContractionMetric::Theta() const {
  Eigen::LLT<Eigen::MatrixXd> llt(M());
  if (llt.info() != Eigen::Success) throw std::runtime_error("metric is not positive definite");
  return llt.matrixU();
}

namespace {

Eigen::MatrixXd lmi_at(const ContractionMetric& mt, const SystemModel& model, const Eigen::MatrixXd& a,
                       const Eigen::VectorXd& x) {
  const double r = mt.rho.eval(x);
  const Eigen::MatrixXd& w = mt.W;
  Eigen::MatrixXd q;
  if (mt.role == MetricRole::Controller) {
    q = w * a.transpose() + a * w - r * model.B * model.B.transpose() + 2.0 * mt.lambda * w;
  } else {
    q = a.transpose() * w + w * a - r * model.C.transpose() * model.C + 2.0 * mt.lambda * w;
  }
  return 0.5 * (q + q.transpose());
}

/// Monomial x_i-exponent pattern over 2n variables with delta_i delta_j.
Polynomial delta_pair(std::size_t n, std::size_t i, std::size_t j, double coef) {
  std::vector<int> e(2 * n, 0);
  e[n + i] += 1;
  e[n + j] += 1;
  Polynomial p(2 * n);
  p.add_term(Monomial(std::move(e)), coef);
  return p;
}

MetricProgram make_program(std::size_t n, const SynthesisParams& params) {
  params.validate();
  MetricProgram mp;
  mp.W = mp.program.add_symmetric("W", static_cast<int>(n));
  mp.rho = mp.program.add_polynomial("rho", n, params.rho_degree);
  return mp;
}

/// Sum over i,j of -Q_ij delta_i delta_j, plus the rho and bound constraints.
void finish_program(MetricProgram& mp, const std::vector<std::vector<ParamPoly>>& q, const SynthesisParams& params) {
  const std::size_t n = q.size();
  ParamPoly expr(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) expr += delta_pair(n, i, j, -1.0) * q[i][j].embed(2 * n);
  }
  mp.condition_index = mp.program.constraints().size();
  mp.program.add_constraint({"contraction", std::move(expr), SosKind::QuadraticForm, n});
  mp.rho_index = mp.program.constraints().size();
  mp.program.add_constraint({"rho", mp.rho, SosKind::Scalar, 0});
  mp.program.add_bound({mp.W, params.alpha1, params.alpha2});
}

void check_square(const PolyMatrix& a) {
  if (a.rows() != a.cols() || a.rows() != a.nvars()) throw std::invalid_argument("A must be n x n in n variables");
}

}  // namespace

Eigen::MatrixXd ContractionMetric::lmi(const SystemModel& model, const Eigen::VectorXd& x) const {
  return lmi_at(*this, model, model.A().eval(x), x);
}

// --- programs ---------------------------------------------------------------

MetricProgram controller_program(const PolyMatrix& A, const Eigen::MatrixXd& B, const SynthesisParams& params) {
  check_square(A);
  const std::size_t n = A.rows();
  if (static_cast<std::size_t>(B.rows()) != n) throw std::invalid_argument("B must have n rows");
  MetricProgram mp = make_program(n, params);
  const Eigen::MatrixXd bbt = B * B.transpose();
  const Polynomial one = Polynomial::constant(n, 1.0);

  std::vector<std::vector<ParamPoly>> q(n, std::vector<ParamPoly>(n, ParamPoly(n)));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const int ii = static_cast<int>(i);
      const int jj = static_cast<int>(j);
      for (std::size_t k = 0; k < n; ++k) {
        const int kk = static_cast<int>(k);
        q[i][j] += mp.W.at(ii, kk) * A(j, k);  // (W A')_ij
        q[i][j] += mp.W.at(kk, jj) * A(i, k);  // (A W)_ij
      }
      q[i][j] += (2.0 * params.lambda * mp.W.at(ii, jj)) * one;
      if (bbt(ii, jj) != 0.0) q[i][j] -= mp.rho * bbt(ii, jj);
    }
  }
  finish_program(mp, q, params);
  return mp;
}

MetricProgram controller_program(const SystemModel& model, const SynthesisParams& params) {
  return controller_program(model.A(), model.B, params);
}

MetricProgram observer_program(const PolyMatrix& A, const Eigen::MatrixXd& C, const SynthesisParams& params) {
  check_square(A);
  const std::size_t n = A.rows();
  if (static_cast<std::size_t>(C.cols()) != n) throw std::invalid_argument("C must have n columns");
  MetricProgram mp = make_program(n, params);
  const Eigen::MatrixXd ctc = C.transpose() * C;
  const Polynomial one = Polynomial::constant(n, 1.0);

  std::vector<std::vector<ParamPoly>> q(n, std::vector<ParamPoly>(n, ParamPoly(n)));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const int ii = static_cast<int>(i);
      const int jj = static_cast<int>(j);
      for (std::size_t k = 0; k < n; ++k) {
        const int kk = static_cast<int>(k);
        q[i][j] += mp.W.at(ii, kk) * A(k, j);  // (W A)_ij
        q[i][j] += mp.W.at(kk, jj) * A(k, i);  // (A' W)_ij
      }
      q[i][j] += (2.0 * params.lambda * mp.W.at(ii, jj)) * one;
      if (ctc(ii, jj) != 0.0) q[i][j] -= mp.rho * ctc(ii, jj);
    }
  }
  finish_program(mp, q, params);
  return mp;
}

MetricProgram observer_program(const SystemModel& model, const SynthesisParams& params) {
  return observer_program(model.A(), model.C, params);
}

// --- synthesize -------------------------------------------------------------

std::string gram_digest(const std::vector<Eigen::MatrixXd>& grams) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& g : grams) {
    const std::int64_t dims[2] = {g.rows(), g.cols()};
    feed(dims, sizeof dims);
    for (Eigen::Index j = 0; j < g.cols(); ++j) {
      for (Eigen::Index i = 0; i < g.rows(); ++i) {
        const double v = g(i, j);
        feed(&v, sizeof v);
      }
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

SynthesisResult synthesize(const SystemModel& model, MetricRole role, const SynthesisParams& params) {
  model.validate();
  const auto start = std::chrono::steady_clock::now();
  SynthesisResult res;
  res.role = role;

  const MetricProgram mp =
      role == MetricRole::Controller ? controller_program(model, params) : observer_program(model, params);
  const CompiledSos cs = compile(mp.program, params.pruning);
  res.num_equalities = cs.problem.equalities().size();
  res.num_blocks = static_cast<std::size_t>(cs.problem.num_blocks());
  res.num_scalars = static_cast<std::size_t>(cs.problem.num_scalars());
  for (const auto& c : cs.constraints) res.gram_sizes.push_back(static_cast<int>(c.basis.size()));

  res.sdp = solve(cs.problem, params.sdp);
  auto finish = [&]() {
    res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
  };

  if (res.sdp.status == SdpStatus::Marginal) {
    res.status = SynthesisStatus::Inconclusive;
    res.message = "solver stalled: " + res.sdp.message;
    return finish();
  }
  if (res.sdp.status == SdpStatus::Infeasible) {
    const CheckReport rep = check_solution(cs.problem, res.sdp, params.cert_tol);
    res.status = rep.pass ? SynthesisStatus::Infeasible : SynthesisStatus::Inconclusive;
    res.message = rep.pass ? "infeasibility certificate verified" : "infeasibility certificate failed re-check";
    return finish();
  }

  ContractionMetric metric;
  metric.role = role;
  metric.W = mp.W.value(res.sdp);
  metric.rho = mp.rho.evaluate(res.sdp);
  metric.lambda = params.lambda;
  metric.alpha1 = params.alpha1;
  metric.alpha2 = params.alpha2;

  std::vector<std::string> problems;
  std::vector<Eigen::MatrixXd> grams;
  for (std::size_t idx : {mp.condition_index, mp.rho_index}) {
    const SosConstraint& c = mp.program.constraints()[idx];
    const SosCertificate cert = recover_certificate(cs, idx, res.sdp);
    if (!check_certificate(c.expression.evaluate(res.sdp), cert, params.cert_tol)) {
      problems.push_back("certificate for '" + c.name + "' failed re-check");
    }
    grams.push_back(cert.gram);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(metric.W, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  if (ev(0) < params.alpha1 - params.cert_tol || ev(ev.size() - 1) > params.alpha2 + params.cert_tol) {
    problems.push_back("W eigenvalues outside [alpha1, alpha2]");
  }
  metric.digest = gram_digest(grams);
  res.metric = std::move(metric);
  if (problems.empty()) {
    res.status = SynthesisStatus::Feasible;
    res.message = "certificates verified";
  } else {
    res.status = SynthesisStatus::Inconclusive;
    for (const auto& p : problems) res.message += (res.message.empty() ? "" : "; ") + p;
  }
  return finish();
}

// --- verify -----------------------------------------------------------------

Box Box::cube(std::size_t n, double lo, double hi) {
  return {Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), lo),
          Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), hi)};
}

VerifyReport verify_pointwise(const ContractionMetric& metric, const SystemModel& model, const Box& box, int grid,
                              double bound_tol, unsigned threads) {
  const auto n = static_cast<Eigen::Index>(model.n);
  if (box.lo.size() != n || box.hi.size() != n) throw std::invalid_argument("box dimension mismatch");
  if ((box.lo.array() > box.hi.array()).any()) throw std::invalid_argument("box is empty");
  if (grid < 1) throw std::invalid_argument("grid needs at least one point per axis");
  if (metric.W.rows() != n) throw std::invalid_argument("metric dimension mismatch");

  const PolyMatrix a = model.A();
  std::size_t total = 1;
  for (Eigen::Index i = 0; i < n; ++i) total *= static_cast<std::size_t>(grid);

  auto point = [&](std::size_t idx) {
    Eigen::VectorXd x(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto k = static_cast<int>(idx % static_cast<std::size_t>(grid));
      idx /= static_cast<std::size_t>(grid);
      x(i) = grid == 1 ? 0.5 * (box.lo(i) + box.hi(i))
                       : box.lo(i) + (box.hi(i) - box.lo(i)) * static_cast<double>(k) / (grid - 1);
    }
    return x;
  };

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, total));
  std::vector<double> best(threads, -std::numeric_limits<double>::infinity());
  std::vector<std::size_t> where(threads, 0);
  auto work = [&](unsigned t) {
    for (std::size_t idx = t; idx < total; idx += threads) {
      const Eigen::VectorXd x = point(idx);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(lmi_at(metric, model, a.eval(x), x), Eigen::EigenvaluesOnly);
      const double v = es.eigenvalues()(n - 1);
      if (v > best[t] || std::isnan(v)) {
        best[t] = std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
        where[t] = idx;
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(work, t);
  work(0);
  for (auto& th : pool) th.join();

  VerifyReport rep;
  rep.points = total;
  std::size_t worst = where[0];
  rep.max_violation = best[0];
  for (unsigned t = 1; t < threads; ++t) {
    if (best[t] > rep.max_violation || (best[t] == rep.max_violation && where[t] < worst)) {
      rep.max_violation = best[t];
      worst = where[t];
    }
  }
  rep.worst_point = point(worst);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(metric.W, Eigen::EigenvaluesOnly);
  rep.w_min_eig = es.eigenvalues()(0);
  rep.w_max_eig = es.eigenvalues()(n - 1);
  rep.bounds_ok = rep.w_min_eig >= metric.alpha1 - bound_tol && rep.w_max_eig <= metric.alpha2 + bound_tol;
  return rep;
}

}  // namespace ccm
