#pragma once

#include <stdexcept>

#include <Eigen/Dense>

namespace ccm {

class GeomError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Riemannian distance under a constant metric: geodesics are straight lines.
double distance(const Eigen::VectorXd& x1, const Eigen::VectorXd& x2, const Eigen::MatrixXd& M);

/// Closest point to x_hat (in the W_o norm) on {x : C x = y}, from the KKT
/// system [[W_o, C'], [C, 0]] [x; nu] = [W_o x_hat; y].
Eigen::VectorXd project_to_measurement(const Eigen::VectorXd& x_hat, const Eigen::MatrixXd& C,
                                       const Eigen::VectorXd& y, const Eigen::MatrixXd& W_o);

}  // namespace ccm
