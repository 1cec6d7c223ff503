#include "ccm/geom.hpp"

#include <cmath>

namespace ccm {

namespace {

void require_pd(const Eigen::MatrixXd& M, const char* what) {
  if (M.rows() != M.cols() || !M.isApprox(M.transpose(), 1e-12)) {
    throw GeomError(std::string(what) + " must be symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(M);
  if (llt.info() != Eigen::Success) throw GeomError(std::string(what) + " is not positive definite");
}

}  // namespace

double distance(const Eigen::VectorXd& x1, const Eigen::VectorXd& x2, const Eigen::MatrixXd& M) {
  require_pd(M, "metric");
  if (x1.size() != M.rows() || x2.size() != M.rows()) throw GeomError("distance: dimension mismatch");
  const Eigen::VectorXd d = x2 - x1;
  return std::sqrt(std::max(0.0, d.dot(M * d)));
}

Eigen::VectorXd project_to_measurement(const Eigen::VectorXd& x_hat, const Eigen::MatrixXd& C,
                                       const Eigen::VectorXd& y, const Eigen::MatrixXd& W_o) {
  require_pd(W_o, "W_o");
  const Eigen::Index n = W_o.rows();
  const Eigen::Index p = C.rows();
  if (x_hat.size() != n || C.cols() != n || y.size() != p) throw GeomError("projection: dimension mismatch");
  if (Eigen::FullPivLU<Eigen::MatrixXd>(C).rank() != p) {
    throw GeomError("projection: C is rank deficient, KKT system is singular");
  }
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + p, n + p);
  kkt.topLeftCorner(n, n) = W_o;
  kkt.topRightCorner(n, p) = C.transpose();
  kkt.bottomLeftCorner(p, n) = C;
  Eigen::VectorXd rhs(n + p);
  rhs << W_o * x_hat, y;
  return kkt.partialPivLu().solve(rhs).head(n);
}

}  // namespace ccm
