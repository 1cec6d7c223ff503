#include "ccm/realize.hpp"

#include <cmath>
#include <stdexcept>

#include "ccm/geom.hpp"

namespace ccm {

ControlLaw::ControlLaw(ContractionMetric metric, const SystemModel& model)
    : ControlLaw(std::move(metric), model, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model.n)),
                 Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model.m))) {}

ControlLaw::ControlLaw(ContractionMetric metric, const SystemModel& model, Eigen::VectorXd x_star,
                       Eigen::VectorXd u_star)
    : metric_(std::move(metric)), B_(model.B), x_star_(std::move(x_star)), u_star_(std::move(u_star)) {
  if (metric_.role != MetricRole::Controller) throw std::invalid_argument("ControlLaw needs a controller metric");
  const auto n = static_cast<Eigen::Index>(model.n);
  if (metric_.W.rows() != n || x_star_.size() != n || u_star_.size() != static_cast<Eigen::Index>(model.m)) {
    throw std::invalid_argument("ControlLaw: dimension mismatch");
  }
  const double drift = model.rhs(x_star_, u_star_).norm();
  if (drift > 1e-9) throw std::invalid_argument("ControlLaw: target is not an equilibrium");
  M_ = metric_.M();
  BtM_ = B_.transpose() * M_;
}

Eigen::VectorXd ControlLaw::control(const Eigen::VectorXd& x_hat, double /*t*/) const {
  const Eigen::VectorXd delta = x_star_ - x_hat;
  const double rho_bar = line_integral_unit(metric_.rho, x_hat, delta);
  return u_star_ + 0.5 * rho_bar * (BtM_ * delta);
}

ObserverLaw::ObserverLaw(ContractionMetric metric, SystemModel model)
    : metric_(std::move(metric)), model_(std::move(model)) {
  if (metric_.role != MetricRole::Observer) throw std::invalid_argument("ObserverLaw needs an observer metric");
  if (metric_.W.rows() != static_cast<Eigen::Index>(model_.n)) throw std::invalid_argument("ObserverLaw: dimension");
  WinvCt_ = metric_.W.llt().solve(model_.C.transpose());
}

Eigen::VectorXd ObserverLaw::correction(const Eigen::VectorXd& x_hat, const Eigen::VectorXd& y) const {
  const Eigen::VectorXd innovation = y - model_.C * x_hat;
  const Eigen::VectorXd x_bar = project_to_measurement(x_hat, model_.C, y, metric_.W);
  const double rho_bar = line_integral_unit(metric_.rho, x_bar, Eigen::VectorXd(x_hat - x_bar));
  return 0.5 * rho_bar * (WinvCt_ * innovation);
}

Eigen::VectorXd ObserverLaw::rhs(const Eigen::VectorXd& x_hat, const Eigen::VectorXd& y, const Eigen::VectorXd& u,
                                 double /*t*/) const {
  return model_.rhs(x_hat, u) + correction(x_hat, y);
}

IssConstants IssConstants::from(const ContractionMetric& m) {
  return {std::sqrt(m.alpha1), std::sqrt(m.alpha2), 1.0 / std::sqrt(m.alpha1)};
}

std::vector<double> iss_bound(double lambda, double kappa, double d0, const std::function<double(double)>& env,
                              double T, double dt) {
  if (!(T > 0.0) || !(dt > 0.0)) throw std::invalid_argument("iss_bound: need T > 0 and dt > 0");
  const auto steps = static_cast<std::size_t>(std::floor(T / dt + 1e-9));
  std::vector<double> out;
  out.reserve(steps + 1);
  double d = d0;
  out.push_back(d);
  auto f = [&](double t, double v) { return -lambda * v + kappa * env(t); };
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    const double k1 = f(t, d);
    const double k2 = f(t + 0.5 * dt, d + 0.5 * dt * k1);
    const double k3 = f(t + 0.5 * dt, d + 0.5 * dt * k2);
    const double k4 = f(t + dt, d + dt * k3);
    d += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    out.push_back(d);
  }
  return out;
}

std::vector<double> iss_bound(const ContractionMetric& m, double d0, const std::function<double(double)>& env,
                              double T, double dt) {
  return iss_bound(m.lambda, IssConstants::from(m).inv_sqrt_alpha1, d0, env, T, dt);
}

}  // namespace ccm
