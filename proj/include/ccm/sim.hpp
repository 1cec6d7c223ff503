#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ccm/realize.hpp"
#include "ccm/synth.hpp"

namespace ccm {

class SimError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Integrator { RK4, RK45 };

struct SimConfig {
  double dt = 1e-3;
  double T = 50.0;
  Integrator integrator = Integrator::RK4;
  double rk45_abs_tol = 1e-9;
  double rk45_rel_tol = 1e-9;
  double noise_std = 0.0;
  std::uint64_t seed = 0;
  Eigen::VectorXd x0;
  Eigen::VectorXd xhat0;

  std::size_t steps() const;
  void validate() const;
};

using Rhs = std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>;

/// Advances z over [t, t + h] with the configured integrator.
Eigen::VectorXd advance(const Rhs& f, double t, const Eigen::VectorXd& z, double h, const SimConfig& cfg);

struct Trajectory {
  std::vector<double> t;
  std::vector<Eigen::VectorXd> x;
};

/// Trajectory sampled at k*dt, k = 0..floor(T/dt). Non-finite states abort.
Trajectory integrate(const Rhs& f, const Eigen::VectorXd& x0, const SimConfig& cfg);

struct SimTrace {
  std::vector<double> t;
  std::vector<Eigen::VectorXd> x;
  std::vector<Eigen::VectorXd> x_hat;
  std::vector<Eigen::VectorXd> u;
  std::vector<Eigen::VectorXd> y;
  std::vector<Eigen::VectorXd> y_clean;
  std::vector<double> d;        // distance x -> x* under M_c (Euclidean in open loop)
  std::vector<double> d_bound;  // NaN when no bound applies
  std::vector<double> est_err;  // distance x_hat -> x under W_o
  std::vector<double> w_norm;   // |B (k(x_hat) - k(x))|

  // envelope beta exp(-alpha t) fitted to w_norm, gain kappa
  double env_alpha = 0.0;
  double env_beta = 0.0;
  double kappa = 0.0;

  std::size_t size() const { return t.size(); }
};

SimTrace run_open_loop(const SystemModel& model, const SimConfig& cfg);
SimTrace run_state_feedback(const SystemModel& model, const ControlLaw& claw, const SimConfig& cfg);
SimTrace run_output_feedback(const SystemModel& model, const ControlLaw& claw, const ObserverLaw& olaw,
                             const SimConfig& cfg);

/// Terminal state of the open loop from (1, -1) after 30 time units, a point
/// on the surge oscillation.
Eigen::VectorXd oscillation_state(const SystemModel& model, double dt = 1e-3);

/// max_t |x(t)| / |x(0)|
double overshoot(const SimTrace& trace);
/// Least-squares slope of log v(t) over [t0, t1]; samples with v <= 0 are skipped.
double decay_rate(const std::vector<double>& t, const std::vector<double>& v, double t0, double t1);
double decay_rate(const SimTrace& trace, double t0, double t1);

struct Envelope {
  double alpha = 0.0;
  double beta = 0.0;
};
/// alpha from the log-slope of `rate_source`, beta the smallest value with
/// beta exp(-alpha t) >= w(t) everywhere.
Envelope fit_envelope(const std::vector<double>& t, const std::vector<double>& rate_source,
                      const std::vector<double>& w);

std::string csv_header(const SystemModel& model);
void write_csv(std::ostream& out, const SystemModel& model, const SimTrace& trace);

}  // namespace ccm
