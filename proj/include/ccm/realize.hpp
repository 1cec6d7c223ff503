#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "ccm/synth.hpp"

namespace ccm {

/// u = u* + 1/2 (int_0^1 rho(x_hat + s D) ds) B' M_c D,  D = x* - x_hat.
class ControlLaw {
 public:
  ControlLaw(ContractionMetric metric, const SystemModel& model);
  ControlLaw(ContractionMetric metric, const SystemModel& model, Eigen::VectorXd x_star, Eigen::VectorXd u_star);

  Eigen::VectorXd control(const Eigen::VectorXd& x_hat, double t = 0.0) const;

  const ContractionMetric& metric() const { return metric_; }
  const Eigen::MatrixXd& M() const { return M_; }
  const Eigen::VectorXd& x_star() const { return x_star_; }

 private:
  ContractionMetric metric_;
  Eigen::MatrixXd B_;
  Eigen::MatrixXd M_;
  Eigen::MatrixXd BtM_;
  Eigen::VectorXd x_star_;
  Eigen::VectorXd u_star_;
};

/// dx_hat = f(x_hat) + B u + 1/2 (int_0^1 rho(x_bar + s D) ds) W_o^{-1} C' (y - C x_hat),
/// D = x_hat - x_bar, x_bar the W_o-projection of x_hat onto {C x = y}.
class ObserverLaw {
 public:
  ObserverLaw(ContractionMetric metric, SystemModel model);

  Eigen::VectorXd rhs(const Eigen::VectorXd& x_hat, const Eigen::VectorXd& y, const Eigen::VectorXd& u,
                      double t = 0.0) const;
  /// The output-injection term alone.
  Eigen::VectorXd correction(const Eigen::VectorXd& x_hat, const Eigen::VectorXd& y) const;

  const ContractionMetric& metric() const { return metric_; }
  const SystemModel& model() const { return model_; }

 private:
  ContractionMetric metric_;
  SystemModel model_;
  Eigen::MatrixXd WinvCt_;
};

/// Candidate gains for the disturbance term of the distance bound.
struct IssConstants {
  double sqrt_alpha1 = 0.0;
  double sqrt_alpha2 = 0.0;
  double inv_sqrt_alpha1 = 0.0;  // the one used
  static IssConstants from(const ContractionMetric& m);
};

/// RK4 solution of d' = -lambda d + kappa env(t), d(0) = d0, sampled every dt
/// on [0, T] (floor(T/dt)+1 samples).
std::vector<double> iss_bound(double lambda, double kappa, double d0, const std::function<double(double)>& env,
                              double T, double dt);
std::vector<double> iss_bound(const ContractionMetric& m, double d0, const std::function<double(double)>& env,
                              double T, double dt);

}  // namespace ccm
