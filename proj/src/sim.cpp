#include "ccm/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>

#include <boost/numeric/odeint.hpp>

#include "ccm/geom.hpp"

namespace ccm {

namespace odeint = boost::numeric::odeint;

std::size_t SimConfig::steps() const { return static_cast<std::size_t>(std::floor(T / dt + 1e-9)); }

void SimConfig::validate() const {
  if (!(dt > 0.0) || !(T > 0.0)) throw SimError("need dt > 0 and T > 0");
  if (!(rk45_abs_tol > 0.0) || !(rk45_rel_tol > 0.0)) throw SimError("RK45 tolerances must be positive");
  if (!(noise_std >= 0.0)) throw SimError("noise_std must be >= 0");
}

Eigen::VectorXd advance(const Rhs& f, double t, const Eigen::VectorXd& z, double h, const SimConfig& cfg) {
  if (cfg.integrator == Integrator::RK4) {
    const Eigen::VectorXd k1 = f(t, z);
    const Eigen::VectorXd k2 = f(t + 0.5 * h, z + 0.5 * h * k1);
    const Eigen::VectorXd k3 = f(t + 0.5 * h, z + 0.5 * h * k2);
    const Eigen::VectorXd k4 = f(t + h, z + h * k3);
    return z + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  using State = std::vector<double>;
  State s(z.data(), z.data() + z.size());
  auto sys = [&f](const State& x, State& dxdt, double tt) {
    const Eigen::VectorXd d = f(tt, Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size())));
    dxdt.assign(d.data(), d.data() + d.size());
  };
  odeint::integrate_adaptive(
      odeint::make_controlled(cfg.rk45_abs_tol, cfg.rk45_rel_tol, odeint::runge_kutta_dopri5<State>()), sys, s, t,
      t + h, h);
  return Eigen::Map<Eigen::VectorXd>(s.data(), static_cast<Eigen::Index>(s.size()));
}

namespace {

void require_finite(const Eigen::VectorXd& z, double t) {
  if (!z.allFinite()) throw SimError("non-finite state at t = " + std::to_string(t));
}

}  // namespace

Trajectory integrate(const Rhs& f, const Eigen::VectorXd& x0, const SimConfig& cfg) {
  cfg.validate();
  const std::size_t n = cfg.steps();
  Trajectory tr;
  tr.t.reserve(n + 1);
  tr.x.reserve(n + 1);
  Eigen::VectorXd z = x0;
  require_finite(z, 0.0);
  for (std::size_t k = 0;; ++k) {
    const double t = static_cast<double>(k) * cfg.dt;
    tr.t.push_back(t);
    tr.x.push_back(z);
    if (k == n) break;
    z = advance(f, t, z, cfg.dt, cfg);
    require_finite(z, t + cfg.dt);
  }
  return tr;
}

// --- closed loops -----------------------------------------------------------

namespace {

enum class Mode { Open, State, Output };

SimTrace run(const SystemModel& model, const ControlLaw* claw, const ObserverLaw* olaw, Mode mode,
             const SimConfig& cfg) {
  cfg.validate();
  model.validate();
  const auto n = static_cast<Eigen::Index>(model.n);
  const auto p = static_cast<Eigen::Index>(model.p);
  const auto m = static_cast<Eigen::Index>(model.m);
  if (cfg.x0.size() != n) throw SimError("x0 has the wrong dimension");
  if (mode == Mode::Output && cfg.xhat0.size() != n) throw SimError("xhat0 has the wrong dimension");

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd noise = Eigen::VectorXd::Zero(p);

  auto control = [&](const Eigen::VectorXd& xh) -> Eigen::VectorXd {
    return mode == Mode::Open ? Eigen::VectorXd::Zero(m) : claw->control(xh);
  };
  const Rhs rhs = [&](double t, const Eigen::VectorXd& z) -> Eigen::VectorXd {
    const Eigen::VectorXd x = z.head(n);
    if (mode != Mode::Output) return model.rhs(x, control(x));
    const Eigen::VectorXd xh = z.tail(n);
    const Eigen::VectorXd u = control(xh);
    Eigen::VectorXd dz(2 * n);
    dz << model.rhs(x, u), olaw->rhs(xh, model.C * x + noise, u, t);
    return dz;
  };

  Eigen::VectorXd z(mode == Mode::Output ? 2 * n : n);
  if (mode == Mode::Output) {
    z << cfg.x0, cfg.xhat0;
  } else {
    z = cfg.x0;
  }
  require_finite(z, 0.0);

  const Eigen::VectorXd x_star = claw ? claw->x_star() : Eigen::VectorXd::Zero(n);
  const std::size_t steps = cfg.steps();
  SimTrace tr;
  for (std::size_t k = 0;; ++k) {
    const double t = static_cast<double>(k) * cfg.dt;
    if (cfg.noise_std > 0.0) {
      for (Eigen::Index i = 0; i < p; ++i) noise(i) = cfg.noise_std * gauss(rng);
    }
    const Eigen::VectorXd x = z.head(n);
    const Eigen::VectorXd xh = mode == Mode::Output ? Eigen::VectorXd(z.tail(n)) : x;
    const Eigen::VectorXd u = control(xh);
    tr.t.push_back(t);
    tr.x.push_back(x);
    tr.x_hat.push_back(xh);
    tr.u.push_back(u);
    tr.y_clean.push_back(model.C * x);
    tr.y.push_back(tr.y_clean.back() + noise);
    if (mode == Mode::Open) {
      tr.d.push_back((x - x_star).norm());
      tr.est_err.push_back(0.0);
      tr.w_norm.push_back(0.0);
    } else {
      tr.d.push_back(distance(x, x_star, claw->M()));
      tr.est_err.push_back(mode == Mode::Output ? distance(xh, x, olaw->metric().W) : 0.0);
      tr.w_norm.push_back(mode == Mode::Output ? (model.B * (u - control(x))).norm() : 0.0);
    }
    if (k == steps) break;
    z = advance(rhs, t, z, cfg.dt, cfg);
    require_finite(z, t + cfg.dt);
  }

  if (mode == Mode::Open) {
    tr.d_bound.assign(tr.size(), std::numeric_limits<double>::quiet_NaN());
    return tr;
  }
  const ContractionMetric& cm = claw->metric();
  tr.kappa = IssConstants::from(cm).inv_sqrt_alpha1;
  if (mode == Mode::Output) {
    const Envelope env = fit_envelope(tr.t, tr.est_err, tr.w_norm);
    tr.env_alpha = env.alpha;
    tr.env_beta = env.beta;
  }
  const double a = tr.env_alpha;
  const double b = tr.env_beta;
  tr.d_bound = iss_bound(cm.lambda, tr.kappa, tr.d.front(), [a, b](double t) { return b * std::exp(-a * t); }, cfg.T,
                         cfg.dt);
  tr.d_bound.resize(tr.size(), tr.d_bound.back());
  return tr;
}

}  // namespace

SimTrace run_open_loop(const SystemModel& model, const SimConfig& cfg) {
  return run(model, nullptr, nullptr, Mode::Open, cfg);
}

SimTrace run_state_feedback(const SystemModel& model, const ControlLaw& claw, const SimConfig& cfg) {
  return run(model, &claw, nullptr, Mode::State, cfg);
}

SimTrace run_output_feedback(const SystemModel& model, const ControlLaw& claw, const ObserverLaw& olaw,
                             const SimConfig& cfg) {
  return run(model, &claw, &olaw, Mode::Output, cfg);
}

Eigen::VectorXd oscillation_state(const SystemModel& model, double dt) {
  if (model.n != 2) throw SimError("oscillation_state expects a two-state model");
  SimConfig cfg;
  cfg.dt = dt;
  cfg.T = 30.0;
  cfg.x0 = Eigen::Vector2d(1.0, -1.0);
  return run_open_loop(model, cfg).x.back();
}

// --- trace statistics -------------------------------------------------------

double overshoot(const SimTrace& trace) {
  if (trace.size() == 0) throw SimError("empty trace");
  const double n0 = trace.x.front().norm();
  if (n0 == 0.0) return 1.0;
  double mx = 0.0;
  for (const auto& x : trace.x) mx = std::max(mx, x.norm());
  return mx / n0;
}

double decay_rate(const std::vector<double>& t, const std::vector<double>& v, double t0, double t1) {
  if (t.empty() || t.size() != v.size()) throw SimError("decay_rate: bad trace");
  if (!(t0 < t1) || t0 < t.front() - 1e-12 || t1 > t.back() + 1e-12) throw SimError("decay_rate: window outside horizon");
  double st = 0, sl = 0, stt = 0, stl = 0;
  std::size_t cnt = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < t0 || t[i] > t1 || !(v[i] > 0.0) || !std::isfinite(v[i])) continue;
    const double l = std::log(v[i]);
    st += t[i];
    sl += l;
    stt += t[i] * t[i];
    stl += t[i] * l;
    ++cnt;
  }
  if (cnt < 2) throw SimError("decay_rate: fewer than two positive samples in window");
  const double c = static_cast<double>(cnt);
  return (c * stl - st * sl) / (c * stt - st * st);
}

double decay_rate(const SimTrace& trace, double t0, double t1) { return decay_rate(trace.t, trace.d, t0, t1); }

Envelope fit_envelope(const std::vector<double>& t, const std::vector<double>& rate_source,
                      const std::vector<double>& w) {
  Envelope e;
  double wmax = 0.0;
  for (double v : w) wmax = std::max(wmax, v);
  if (wmax == 0.0 || t.size() < 2) return e;
  double rate = 0.0;
  try {
    rate = decay_rate(t, rate_source, t.front(), t.back());
  } catch (const SimError&) {
    rate = 0.0;
  }
  e.alpha = std::max(0.0, -rate);
  // beta = max w(t) e^{alpha t}, evaluated in log space
  double lb = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (w[i] > 0.0) lb = std::max(lb, std::log(w[i]) + e.alpha * t[i]);
  }
  e.beta = std::exp(lb);
  if (!std::isfinite(e.beta)) {
    e.alpha = 0.0;
    e.beta = wmax;
  }
  return e;
}

// --- CSV --------------------------------------------------------------------

std::string csv_header(const SystemModel& model) {
  std::string h = "t";
  for (const auto& s : model.state_names) h += "," + s;
  for (const auto& s : model.state_names) h += "," + s + "_hat";
  auto indexed = [](const std::string& base, std::size_t count) {
    std::string out;
    for (std::size_t i = 0; i < count; ++i) out += "," + base + (count > 1 ? std::to_string(i + 1) : "");
    return out;
  };
  h += indexed("u", model.m);
  h += indexed("y", model.p);
  h += indexed("y_clean", model.p);
  h += ",d,d_bound,est_err";
  return h;
}

void write_csv(std::ostream& out, const SystemModel& model, const SimTrace& tr) {
  out << csv_header(model) << '\n';
  auto vec = [&out](const Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) out << ',' << format_double(v(i));
  };
  for (std::size_t k = 0; k < tr.size(); ++k) {
    out << format_double(tr.t[k]);
    vec(tr.x[k]);
    vec(tr.x_hat[k]);
    vec(tr.u[k]);
    vec(tr.y[k]);
    vec(tr.y_clean[k]);
    out << ',' << format_double(tr.d[k]) << ',' << format_double(tr.d_bound[k]) << ',' << format_double(tr.est_err[k])
        << '\n';
  }
}

}  // namespace ccm
