#include <doctest.h>

#include <cmath>
#include <random>

#include "ccm/realize.hpp"
#include "oracles.hpp"

using namespace ccm;

namespace {

struct Metrics {
  SystemModel model = SystemModel::moore_greitzer();
  ContractionMetric ctl;
  ContractionMetric obs;
};

const Metrics& slow_metrics() {
  static const Metrics m = [] {
    Metrics r;
    SynthesisParams p;  // lambda 0.1, alpha (0.1, 1.3)
    r.ctl = *synthesize(r.model, MetricRole::Controller, p).metric;
    r.obs = *synthesize(r.model, MetricRole::Observer, p).metric;
    return r;
  }();
  return m;
}

double rho_quadrature(const Polynomial& rho, const Eigen::VectorXd& a, const Eigen::VectorXd& d) {
  return oracle::simpson([&](double s) { return rho.eval(Eigen::VectorXd(a + s * d)); });
}

ContractionMetric constant_metric(MetricRole role, const Eigen::MatrixXd& W, double rho) {
  ContractionMetric m;
  m.role = role;
  m.W = W;
  m.rho = Polynomial::constant(static_cast<std::size_t>(W.rows()), rho);
  m.lambda = 0.5;
  m.alpha1 = 0.1;
  m.alpha2 = 10.0;
  return m;
}

}  // namespace

TEST_CASE("control: zero error, constant rho, superposition") {
  const SystemModel mg = SystemModel::moore_greitzer();
  const Eigen::MatrixXd W{{0.5, 0.1}, {0.1, 0.8}};
  const ControlLaw law(constant_metric(MetricRole::Controller, W, 3.0), mg);
  CHECK(law.control(Eigen::Vector2d::Zero())(0) == 0.0);
  const Eigen::Vector2d xh(0.4, -1.1);
  const Eigen::MatrixXd M = W.inverse();
  const double expect = (1.5 * mg.B.transpose() * M * (-xh))(0);
  CHECK(law.control(xh)(0) == doctest::Approx(expect).epsilon(1e-13));
  const Eigen::Vector2d xh2(-2.0, 0.3);
  CHECK(law.control(Eigen::Vector2d(xh + 2.5 * xh2))(0) ==
        doctest::Approx(law.control(xh)(0) + 2.5 * law.control(xh2)(0)).epsilon(1e-12));

  CHECK_THROWS(ControlLaw(constant_metric(MetricRole::Controller, W, 1.0), mg, Eigen::Vector2d(1.0, 0.0),
                          Eigen::VectorXd::Zero(1)));
  CHECK_THROWS(ControlLaw(constant_metric(MetricRole::Observer, W, 1.0), mg));
}

TEST_CASE("control and observer match quadrature on the synthesized metrics") {
  const Metrics& m = slow_metrics();
  const ControlLaw claw(m.ctl, m.model);
  const ObserverLaw olaw(m.obs, m.model);

  const Eigen::Vector2d xh(1.0, 1.0);
  const Eigen::VectorXd dc = -xh;
  const double u_oracle = (0.5 * rho_quadrature(m.ctl.rho, xh, dc) * m.model.B.transpose() * m.ctl.M() * dc)(0);
  CHECK(std::abs(claw.control(xh)(0) - u_oracle) <= 1e-9);

  // observer at y = 0.5; independent projection formula
  auto oracle_corr = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    const Eigen::MatrixXd& C = m.model.C;
    const Eigen::MatrixXd Wi = m.obs.W.inverse();
    const Eigen::VectorXd xb = x + Wi * C.transpose() * (C * Wi * C.transpose()).inverse() * (y - C * x);
    return Eigen::VectorXd(0.5 * rho_quadrature(m.obs.rho, xb, x - xb) * Wi * C.transpose() * (y - C * x));
  };
  const Eigen::VectorXd y = Eigen::VectorXd::Constant(1, 0.5);
  CHECK((olaw.correction(xh, y) - oracle_corr(xh, y)).norm() <= 1e-9);

  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int k = 0; k < 100; ++k) {
    const Eigen::Vector2d x(u(rng), u(rng));
    const Eigen::VectorXd dx = -x;
    const double uo = (0.5 * rho_quadrature(m.ctl.rho, x, dx) * m.model.B.transpose() * m.ctl.M() * dx)(0);
    CHECK(std::abs(claw.control(x)(0) - uo) <= 1e-9 * std::max(1.0, std::abs(uo)));
    const Eigen::VectorXd yy = Eigen::VectorXd::Constant(1, u(rng));
    const Eigen::VectorXd c = oracle_corr(x, yy);
    CHECK((olaw.correction(x, yy) - c).norm() <= 1e-9 * std::max(1.0, c.norm()));
  }
}

TEST_CASE("observer: consistent measurement and Luenberger degeneration") {
  const SystemModel mg = SystemModel::moore_greitzer();
  const Eigen::MatrixXd W{{0.7, -0.2}, {-0.2, 1.1}};
  const ObserverLaw law(constant_metric(MetricRole::Observer, W, 4.0), mg);
  const Eigen::Vector2d xh(0.3, -0.6);
  const Eigen::VectorXd u = Eigen::VectorXd::Constant(1, 0.25);
  const Eigen::VectorXd y_same = mg.C * xh;
  CHECK((law.rhs(xh, y_same, u) - mg.rhs(xh, u)).norm() == 0.0);

  const Eigen::VectorXd y = Eigen::VectorXd::Constant(1, 1.7);
  const Eigen::MatrixXd K = 0.5 * 4.0 * W.inverse() * mg.C.transpose();
  CHECK((law.rhs(xh, y, u) - (mg.rhs(xh, u) + K * (y - mg.C * xh))).norm() < 1e-13);
}

TEST_CASE("linearized plant-observer loop decays at least at rate lambda") {
  const Metrics& m = slow_metrics();
  const ControlLaw claw(m.ctl, m.model);
  const ObserverLaw olaw(m.obs, m.model);
  auto loop = [&](const Eigen::VectorXd& z) {
    const Eigen::VectorXd x = z.head(2);
    const Eigen::VectorXd xh = z.tail(2);
    const Eigen::VectorXd u = claw.control(xh);
    Eigen::VectorXd dz(4);
    dz << m.model.rhs(x, u), olaw.rhs(xh, m.model.C * x, u);
    return dz;
  };
  Eigen::MatrixXd J(4, 4);
  const double h = 1e-6;
  for (int j = 0; j < 4; ++j) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(4);
    e(j) = h;
    J.col(j) = (loop(e) - loop(-e)) / (2 * h);
  }
  const Eigen::VectorXcd ev = J.eigenvalues();
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    CAPTURE(ev(i));
    CHECK(ev(i).real() <= -m.ctl.lambda + 1e-6);
  }
}

TEST_CASE("iss bound: homogeneous, constant forcing, two-exponential envelope") {
  const double lam = 0.7;
  const double dt = 1e-3;
  const auto hom = iss_bound(lam, 2.0, 1.3, [](double) { return 0.0; }, 5.0, dt);
  REQUIRE(hom.size() == 5001);
  for (std::size_t k = 0; k < hom.size(); k += 250) CHECK(std::abs(hom[k] - 1.3 * std::exp(-lam * k * dt)) < 1e-12);

  const auto ss = iss_bound(lam, 2.0, 0.0, [](double) { return 0.5; }, 40.0, dt);
  CHECK(std::abs(ss.back() - 2.0 * 0.5 / lam) < 1e-9);

  const double beta = 3.0, alpha = 2.5, kappa = 1.0 / std::sqrt(0.1), d0 = 0.8;
  const auto two = iss_bound(lam, kappa, d0, [&](double t) { return beta * std::exp(-alpha * t); }, 10.0, dt);
  for (std::size_t k = 0; k < two.size(); k += 100) {
    const double t = k * dt;
    const double exact = d0 * std::exp(-lam * t) + kappa * beta * (std::exp(-alpha * t) - std::exp(-lam * t)) / (lam - alpha);
    CHECK(std::abs(two[k] - exact) < 1e-10);
  }

  ContractionMetric cm;
  cm.alpha1 = 0.25;
  cm.alpha2 = 4.0;
  const IssConstants kc = IssConstants::from(cm);
  CHECK(kc.sqrt_alpha1 == 0.5);
  CHECK(kc.sqrt_alpha2 == 2.0);
  CHECK(kc.inv_sqrt_alpha1 == 2.0);
  CHECK_THROWS(iss_bound(1.0, 1.0, 1.0, [](double) { return 0.0; }, 0.0, dt));
}
