#include <doctest.h>

#include <cmath>
#include <map>
#include <sstream>

#include "ccm/sim.hpp"

using namespace ccm;

namespace {

struct Loop {
  SystemModel model = SystemModel::moore_greitzer();
  std::optional<ControlLaw> claw;
  std::optional<ObserverLaw> olaw;
};

const Loop& loop_for(double lambda) {
  static std::map<double, Loop> cache;
  auto it = cache.find(lambda);
  if (it != cache.end()) return it->second;
  Loop l;
  SynthesisParams p;
  p.lambda = lambda;
  p.alpha1 = 0.1;
  p.alpha2 = lambda < 1 ? 1.3 : (lambda < 7 ? 30.0 : 100.0);
  const SynthesisResult c = synthesize(l.model, MetricRole::Controller, p);
  const SynthesisResult o = synthesize(l.model, MetricRole::Observer, p);
  REQUIRE(c.status == SynthesisStatus::Feasible);
  REQUIRE(o.status == SynthesisStatus::Feasible);
  l.claw.emplace(*c.metric, l.model);
  l.olaw.emplace(*o.metric, l.model);
  return cache.emplace(lambda, std::move(l)).first->second;
}

SimConfig config(double T, Eigen::VectorXd x0, Eigen::VectorXd xh0 = Eigen::VectorXd::Zero(2)) {
  SimConfig c;
  c.T = T;
  c.x0 = std::move(x0);
  c.xhat0 = std::move(xh0);
  return c;
}

}  // namespace

TEST_CASE("integrate: exponential decay and constant field") {
  for (Integrator integ : {Integrator::RK4, Integrator::RK45}) {
    SimConfig c;
    c.T = 1.0;
    c.integrator = integ;
    const Trajectory tr = integrate([](double, const Eigen::VectorXd& x) { return Eigen::VectorXd(-x); },
                                    Eigen::VectorXd::Ones(1), c);
    CHECK(tr.t.size() == 1001);
    CHECK(std::abs(tr.x.back()(0) - std::exp(-1.0)) < 1e-6);
    const Trajectory still = integrate([](double, const Eigen::VectorXd& x) { return Eigen::VectorXd::Zero(x.size()); },
                                       Eigen::Vector2d(0.3, -2.0), c);
    for (const auto& x : still.x) CHECK(x == Eigen::Vector2d(0.3, -2.0));
  }
  SimConfig c;
  c.T = 1.0;
  CHECK_THROWS_AS(integrate([](double, const Eigen::VectorXd& x) { return Eigen::VectorXd(x * x * 1e300); },
                            Eigen::VectorXd::Ones(1), c),
                  SimError);
  c.dt = 0.0;
  CHECK_THROWS_AS(integrate([](double, const Eigen::VectorXd& x) { return x; }, Eigen::VectorXd::Ones(1), c), SimError);
}

TEST_CASE("open loop: RK4 agrees with adaptive RK45") {
  const SystemModel mg = SystemModel::moore_greitzer();
  SimConfig a = config(50.0, Eigen::Vector2d(1.0, -1.0));
  SimConfig b = a;
  b.integrator = Integrator::RK45;
  const SimTrace ta = run_open_loop(mg, a);
  const SimTrace tb = run_open_loop(mg, b);
  REQUIRE(ta.size() == tb.size());
  double worst = 0.0;
  for (std::size_t k = 0; k < ta.size(); ++k) worst = std::max(worst, (ta.x[k] - tb.x[k]).lpNorm<Eigen::Infinity>());
  CHECK(worst <= 1e-5);
}

TEST_CASE("open loop: equilibrium, sustained oscillation, small-signal rate") {
  const SystemModel mg = SystemModel::moore_greitzer();
  const SimTrace zero = run_open_loop(mg, config(5.0, Eigen::Vector2d::Zero()));
  for (const auto& x : zero.x) CHECK(x.isZero(0.0));

  const SimTrace osc = run_open_loop(mg, config(50.0, Eigen::Vector2d(1.0, -1.0)));
  double lo = 1e9, hi = -1e9, bound = 0.0;
  for (std::size_t k = 0; k < osc.size(); ++k) {
    bound = std::max(bound, osc.x[k].lpNorm<Eigen::Infinity>());
    if (osc.t[k] >= 30.0) {
      lo = std::min(lo, osc.x[k](0));
      hi = std::max(hi, osc.x[k](0));
    }
  }
  CHECK(hi - lo >= 0.1);
  CHECK(bound <= 10.0);

  // A(0) = [[0,-1],[1,0]]: purely imaginary eigenvalues, so |x| neither grows nor decays
  const SimTrace tiny = run_open_loop(mg, config(20.0, Eigen::Vector2d(1e-6, 0.0)));
  std::vector<double> nrm;
  for (const auto& x : tiny.x) nrm.push_back(x.norm());
  const Eigen::VectorXcd ev = mg.A().eval(Eigen::Vector2d::Zero()).eigenvalues();
  CHECK(std::abs(decay_rate(tiny.t, nrm, 0.0, 20.0) - ev.real().maxCoeff()) < 1e-3);
}

TEST_CASE("overshoot and decay_rate on synthetic traces") {
  SimTrace tr;
  for (int k = 0; k <= 1000; ++k) {
    const double t = k * 1e-2;
    tr.t.push_back(t);
    tr.x.push_back(Eigen::Vector2d(std::exp(-2 * t), 0.0));
    tr.d.push_back(std::exp(-2 * t));
  }
  CHECK(overshoot(tr) == 1.0);
  CHECK(std::abs(decay_rate(tr, 0.0, 10.0) + 2.0) < 1e-3);
  CHECK_THROWS_AS(decay_rate(tr, 5.0, 20.0), SimError);
  CHECK_THROWS_AS(overshoot(SimTrace{}), SimError);
}

TEST_CASE("closed loops at the origin stay at the origin") {
  const Loop& l = loop_for(0.1);
  const SimTrace s = run_output_feedback(l.model, *l.claw, *l.olaw, config(2.0, Eigen::Vector2d::Zero()));
  for (std::size_t k = 0; k < s.size(); ++k) {
    CHECK(s.x[k].isZero(0.0));
    CHECK(s.x_hat[k].isZero(0.0));
    CHECK(s.u[k].isZero(0.0));
  }
  const SimTrace f = run_state_feedback(l.model, *l.claw, config(2.0, Eigen::Vector2d::Zero()));
  CHECK(f.x.back().isZero(0.0));
}

TEST_CASE("state feedback meets the contraction guarantee") {
  const Loop& l = loop_for(0.1);
  const SimTrace s = run_state_feedback(l.model, *l.claw, config(30.0, Eigen::Vector2d(1.0, -1.0)));
  for (std::size_t k = 0; k < s.size(); ++k) CHECK(s.d[k] <= s.d[0] * std::exp(-0.1 * s.t[k]) * (1 + 1e-6));
  // d_bound with zero disturbance is exactly the homogeneous bound
  CHECK(std::abs(s.d_bound.back() - s.d[0] * std::exp(-0.1 * 30.0)) < 1e-9);
}

TEST_CASE("output feedback from the oscillation: convergence, rate, bound dominance") {
  const Loop& l = loop_for(0.1);
  const Eigen::VectorXd x0 = oscillation_state(l.model);
  const SimTrace s = run_output_feedback(l.model, *l.claw, *l.olaw, config(50.0, x0));
  CHECK(s.x.back().norm() < 1e-6);
  const double rate = decay_rate(s, 25.0, 50.0);
  MESSAGE("lambda=0.1 decay rate " << rate << ", overshoot " << overshoot(s));
  CHECK(rate <= -0.1);
  double worst = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k) worst = std::max(worst, s.d[k] / s.d_bound[k]);
  MESSAGE("max d/d_bound " << worst << " (alpha " << s.env_alpha << ", beta " << s.env_beta << ")");
  CHECK(worst <= 1.05);
  for (std::size_t k = 0; k < s.size(); ++k) CHECK(s.y[k] == s.y_clean[k]);
}

TEST_CASE("exact initial estimate reproduces state feedback") {
  const Loop& l = loop_for(0.1);
  const Eigen::Vector2d x0(0.6, -0.4);
  const SimTrace o = run_output_feedback(l.model, *l.claw, *l.olaw, config(10.0, x0, x0));
  const SimTrace s = run_state_feedback(l.model, *l.claw, config(10.0, x0));
  double worst = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k) worst = std::max(worst, (o.x[k] - s.x[k]).norm());
  CHECK(worst < 1e-9);
}

TEST_CASE("peaking grows with the demanded rate") {
  const Eigen::VectorXd x0 = oscillation_state(SystemModel::moore_greitzer());
  std::vector<double> os;
  for (double lam : {0.1, 10.0}) {
    const Loop& l = loop_for(lam);
    os.push_back(overshoot(run_output_feedback(l.model, *l.claw, *l.olaw, config(20.0, x0))));
  }
  MESSAGE("overshoot lambda=0.1: " << os[0] << ", lambda=10: " << os[1]);
  CHECK(os[1] > os[0]);
}

TEST_CASE("seeded noise is deterministic and bounded") {
  const Loop& l = loop_for(0.1);
  SimConfig c = config(20.0, oscillation_state(l.model));
  c.noise_std = 0.3;
  c.seed = 42;
  const SimTrace a = run_output_feedback(l.model, *l.claw, *l.olaw, c);
  const SimTrace b = run_output_feedback(l.model, *l.claw, *l.olaw, c);
  std::ostringstream sa, sb;
  write_csv(sa, l.model, a);
  write_csv(sb, l.model, b);
  CHECK(sa.str() == sb.str());
  c.seed = 43;
  std::ostringstream sc;
  write_csv(sc, l.model, run_output_feedback(l.model, *l.claw, *l.olaw, c));
  CHECK(sc.str() != sa.str());
  double mx = 0.0;
  for (const auto& x : a.x) mx = std::max(mx, x.norm());
  CHECK(mx < 1.0);
  bool differs = false;
  for (std::size_t k = 0; k < a.size(); ++k) differs = differs || a.y[k] != a.y_clean[k];
  CHECK(differs);
}

TEST_CASE("RK4 timestep convergence order") {
  const SystemModel mg = SystemModel::moore_greitzer();
  auto terminal = [&](double dt) {
    SimConfig c = config(10.0, Eigen::Vector2d(1.0, -1.0));
    c.dt = dt;
    return run_open_loop(mg, c).x.back();
  };
  const Eigen::VectorXd a = terminal(0.04), b = terminal(0.02), c = terminal(0.01);
  const double order = std::log2((a - b).norm() / (b - c).norm());
  MESSAGE("observed order " << order);
  CHECK(order >= 3.5);
}

TEST_CASE("CSV layout") {
  const SystemModel mg = SystemModel::moore_greitzer();
  CHECK(csv_header(mg) == "t,phi,psi,phi_hat,psi_hat,u,y,y_clean,d,d_bound,est_err");
  SimConfig c = config(0.01, Eigen::Vector2d(0.1, 0.2));
  c.dt = 1e-3;
  std::ostringstream out;
  const SimTrace tr = run_open_loop(mg, c);
  CHECK(tr.size() == 11);
  write_csv(out, mg, tr);
  std::istringstream in(out.str());
  std::string line;
  int rows = 0;
  std::getline(in, line);
  while (std::getline(in, line)) {
    ++rows;
    CHECK(std::count(line.begin(), line.end(), ',') == 10);
  }
  CHECK(rows == 11);
}
