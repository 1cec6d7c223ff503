#include <doctest.h>

#include "ccm/config.hpp"

using namespace ccm;

namespace {

const char* kBase = R"(# comment
[model]
states = phi psi
f = -psi - 3/2*phi^2 - 1/2*phi^3 ; phi
B = 0 ; 1
C = 0 1

[controller]
lambda = 0.1
alpha1 = 0.1
alpha2 = 1.3

[sim]
T = 5
x0 = 1, -1
)";

ConfigError error_of(const std::string& text) {
  try {
    (void)parse_config(text, "t.cfg");
  } catch (const ConfigError& e) {
    return e;
  }
  FAIL("expected ConfigError");
  return ConfigError("", 0, 0, "");
}

}  // namespace

TEST_CASE("parse the surge model config") {
  const ProjectConfig c = parse_config(kBase);
  const SystemModel mg = SystemModel::moore_greitzer();
  CHECK(c.model.f == mg.f);
  CHECK(c.model.B == mg.B);
  CHECK(c.model.C == mg.C);
  CHECK(c.model.state_names == mg.state_names);
  CHECK(c.controller.lambda == 0.1);
  CHECK(c.observer.lambda == SynthesisParams{}.lambda);
  CHECK(c.sim.T == 5.0);
  CHECK(c.sim.x0 == Eigen::Vector2d(1.0, -1.0));
  CHECK(c.sim.xhat0 == Eigen::Vector2d::Zero());
  CHECK_FALSE(c.x0_on_oscillation);
}

TEST_CASE("errors carry line and column") {
  const std::string base = kBase;
  {
    std::string t = base;
    t.replace(t.find("- 1/2*phi^3"), 11, "- * phi^3");
    const ConfigError e = error_of(t);
    CHECK(e.line() == 4);
    CHECK(e.column() == 24);
  }
  {
    const ConfigError e = error_of(base + "bogus = 1\n");
    CHECK(e.line() == 16);
    CHECK(e.column() == 1);
  }
  {
    const ConfigError e = error_of(base + "[plots]\n");
    CHECK(e.line() == 16);
  }
  {
    std::string t = base;
    t.replace(t.find("lambda = 0.1"), 12, "lambda = 0.1x");
    const ConfigError e = error_of(t);
    CHECK(e.line() == 9);
    CHECK(e.column() == 13);
  }
  CHECK_THROWS_AS(parse_config(base + "dt = -1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config(base + "T = 3\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[model]\nf = x1\nB = 1 2 ; 3\nC = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[model]\nf = x1\nB = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[model]\nstates = a b\nf = a\nB = 1\nC = 1\n"), ConfigError);
}

TEST_CASE("bundled presets") {
  const double lambdas[] = {0.1, 5.0, 10.0};
  const double upper[] = {1.3, 30.0, 100.0};
  const auto names = preset_names();
  REQUIRE(names.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    const ProjectConfig c = load_config(names[i]);
    CHECK(c.controller.lambda == lambdas[i]);
    CHECK(c.observer.alpha2 == upper[i]);
    CHECK(c.x0_on_oscillation);
    CHECK(resolve_sim(c).x0.size() == 2);
  }
  CHECK_THROWS_AS(load_config("no-such-preset"), ConfigError);
}

TEST_CASE("matrix text") {
  CHECK(parse_matrix("1 2 ; 3 4") == Eigen::Matrix2d{{1, 2}, {3, 4}});
  CHECK(parse_matrix("1, 2") == Eigen::MatrixXd{{1, 2}});
  CHECK(parse_matrix(format_matrix(Eigen::Matrix2d{{0.1, 1.0 / 3.0}, {-2e-300, 7}})) ==
        Eigen::Matrix2d{{0.1, 1.0 / 3.0}, {-2e-300, 7}});
  CHECK_THROWS(parse_matrix("1 2 ; 3"));
  CHECK_THROWS(parse_matrix("1 x"));
  CHECK_THROWS(parse_matrix(""));
}
