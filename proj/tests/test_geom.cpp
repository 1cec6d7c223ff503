#include <doctest.h>

#include <cmath>
#include <random>

#include "ccm/geom.hpp"

using namespace ccm;

namespace {

Eigen::VectorXd V(std::initializer_list<double> v) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) x(i++) = d;
  return x;
}

Eigen::MatrixXd random_pd(std::mt19937& rng, int n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXd g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i, j) = u(rng);
  return g * g.transpose() + 0.2 * Eigen::MatrixXd::Identity(n, n);
}

}  // namespace

TEST_CASE("distance examples") {
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(2, 2);
  CHECK(distance(V({1.5, -2}), V({1.5, -2}), I) == 0.0);
  CHECK(distance(V({0, 0}), V({3, 4}), I) == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(distance(V({0, 0}), V({1, 1}), Eigen::Vector2d(4, 1).asDiagonal().toDenseMatrix()) ==
        doctest::Approx(std::sqrt(5.0)).epsilon(1e-15));
  CHECK_THROWS_AS(distance(V({0, 0}), V({1, 1}), Eigen::Matrix2d{{1, 0}, {0, -1}}), GeomError);
}

TEST_CASE("distance is a metric on random triples") {
  std::mt19937 rng(12);
  std::normal_distribution<double> g(0.0, 2.0);
  for (int k = 0; k < 200; ++k) {
    const Eigen::MatrixXd M = random_pd(rng, 3);
    const Eigen::VectorXd a = V({g(rng), g(rng), g(rng)});
    const Eigen::VectorXd b = V({g(rng), g(rng), g(rng)});
    const Eigen::VectorXd c = V({g(rng), g(rng), g(rng)});
    CHECK(distance(a, b, M) == distance(b, a, M));
    CHECK(distance(a, c, M) <= distance(a, b, M) + distance(b, c, M) + 1e-12);
    CHECK(distance(a, b, M) > 0.0);
  }
}

TEST_CASE("projection examples") {
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(2, 2);
  const Eigen::MatrixXd c01{{0.0, 1.0}};
  CHECK((project_to_measurement(V({3, 5}), c01, V({2}), I) - V({3, 2})).norm() < 1e-14);
  CHECK((project_to_measurement(V({3, 2}), c01, V({2}), I) - V({3, 2})).norm() < 1e-14);

  const Eigen::MatrixXd W{{1.0, 0.0}, {0.0, 4.0}};
  const Eigen::MatrixXd c11{{1.0, 1.0}};
  const Eigen::VectorXd xb = project_to_measurement(V({0, 0}), c11, V({1}), W);
  // brute-force oracle: scan the line x1 + x2 = 1
  double best = 1e300;
  double arg = 0.0;
  for (int k = -20000; k <= 20000; ++k) {
    const double s = k * 1e-4;
    const double v = s * s + 4.0 * (1.0 - s) * (1.0 - s);
    if (v < best) {
      best = v;
      arg = s;
    }
  }
  CHECK(std::abs(arg - 0.8) < 1e-3);
  CHECK(std::abs(xb(0) - arg) < 1e-3);
  CHECK((xb - V({0.8, 0.2})).norm() < 1e-12);

  CHECK_THROWS_AS(project_to_measurement(V({0, 0}), Eigen::MatrixXd{{1.0, 1.0}, {2.0, 2.0}}, V({1, 2}), I),
                  GeomError);
}

TEST_CASE("projection properties on random data") {
  std::mt19937 rng(77);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int k = 0; k < 50; ++k) {
    const Eigen::MatrixXd W = random_pd(rng, 3);
    Eigen::MatrixXd C(1, 3);
    C << g(rng), g(rng), g(rng);
    const Eigen::VectorXd y = V({g(rng)});
    const Eigen::VectorXd xh = V({g(rng), g(rng), g(rng)});
    const Eigen::VectorXd xb = project_to_measurement(xh, C, y, W);
    CHECK(std::abs((C * xb - y)(0)) < 1e-10);
    CHECK((project_to_measurement(xb, C, y, W) - xb).norm() < 1e-10);
    // stationarity: W (x_bar - x_hat) is parallel to C'
    const Eigen::VectorXd s = W * (xb - xh);
    const Eigen::VectorXd ct = C.transpose();
    CHECK((s - ct * (ct.dot(s) / ct.squaredNorm())).norm() < 1e-9);
    // minimality against random feasible points
    Eigen::FullPivLU<Eigen::MatrixXd> lu(C);
    const Eigen::MatrixXd ker = lu.kernel();
    for (int j = 0; j < 20; ++j) {
      const Eigen::VectorXd z = xb + ker * V({3 * g(rng), 3 * g(rng)});
      CHECK(distance(xh, xb, W) <= distance(xh, z, W) + 1e-12);
    }
  }
}
