#include "malab/eigensolver.hpp"
#include "malab/errors.hpp"
#include "malab/ma_solver.hpp"

#include <doctest.h>

#include <cmath>

using namespace malab;

namespace {

const ConvexDomain disc = ConvexDomain::unit_disc();

double at_origin(const GridFunction& u) {
  for (int i = 0; i < u.grid->size(); ++i) {
    if (u.grid->node(i).norm() < 1e-12) return u[i];
  }
  return NAN;
}

}  // namespace

TEST_CASE("Rayleigh quotient of the disc quadratic tends to 8") {
  double prev = INFINITY;
  for (double h : {1.0 / 16, 1.0 / 32, 1.0 / 64}) {
    const GridPtr g = build_grid(disc, h);
    const auto u = sample(g, [](const Point& x) { return x.squaredNorm() - 1; });
    const double R = rayleigh_quotient(u, GridFunction(g, Eigen::VectorXd::Constant(g->size(), 4.0)));
    CHECK(std::abs(R - 8) < prev);
    prev = std::abs(R - 8);
  }
  CHECK(prev < 0.05 * 8);
}

TEST_CASE("Rayleigh quotient is scale invariant") {
  const GridPtr g = build_grid(disc, 1.0 / 32);
  const auto u = sample(g, [](const Point& x) { return x.squaredNorm() - 1 + 0.1 * x.x() * (x.squaredNorm() - 1); });
  const auto m = discrete_ma(u);
  for (double c : {0.01, 3.0, 250.0}) {
    GridFunction cu = u, cm = m;
    cu.values *= c;
    cm.values *= c * c;
    CHECK(rayleigh_quotient(cu, cm) == doctest::Approx(rayleigh_quotient(u, m)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(rayleigh_quotient(GridFunction(g), m), ArgumentError);
}

TEST_CASE("disc eigenvalue lies below the quadratic competitor") {
  EigenOptions o;
  o.h = 1.0 / 32;
  const EigenReport r = inverse_iteration(disc, QuadraticStart{}, o);
  CHECK(r.converged);
  CHECK(r.history.front() == doctest::Approx(8).epsilon(0.05));
  CHECK(r.lambda <= r.history.front() + 1e-6);
  CHECK(r.eigenfunction.values.maxCoeff() <= 0);
  CHECK(r.eigenfunction.sup_norm() == doctest::Approx(1));
  for (double R : r.history) CHECK(R <= r.ceiling);
}

TEST_CASE("eigenvalue scaling law under dilation") {
  EigenOptions o;
  o.h = 1.0 / 32;
  const double l1 = inverse_iteration(disc, QuadraticStart{}, o).lambda;
  o.h = 1.0 / 16;
  const double l2 = inverse_iteration(ConvexDomain::disc(Point(0, 0), 2), QuadraticStart{}, o).lambda;
  CHECK(16 * l2 == doctest::Approx(l1).epsilon(0.01));
}

TEST_CASE("zero start is rejected") {
  const GridPtr g = build_grid(disc, 1.0 / 16);
  CHECK_THROWS_AS(inverse_iteration(g, ValuesStart{GridFunction(g), std::nullopt}), ArgumentError);
}

TEST_CASE("power problem") {
  SUBCASE("p = 0 is the f = 1 problem") {
    PowerOptions o;
    o.h = 1.0 / 64;
    const auto s = solve_power(disc, 0, 1, o);
    CHECK(at_origin(s.u) == doctest::Approx(-0.5).epsilon(1e-2));
  }
  SUBCASE("scaling in M") {
    PowerOptions o;
    o.h = 1.0 / 32;
    o.tolerance = 1e-9;
    const auto a = solve_power(disc, 1, 1, o);
    const auto b = solve_power(disc, 1, 16, o);
    CHECK((b.u.values - 16 * a.u.values).cwiseAbs().maxCoeff() <= 1e-5 * b.u.sup_norm());
  }
  SUBCASE("p = n is the eigenvalue problem") { CHECK_THROWS_AS(solve_power(disc, 2, 1), ArgumentError); }
  SUBCASE("negative M") { CHECK_THROWS_AS(solve_power(disc, 1, -1), ArgumentError); }
}

TEST_CASE("property: power solutions satisfy their equation") {
  const GridPtr g = build_grid(ConvexDomain::unit_square(), 1.0 / 32);
  for (double p : {0.5, 1.0, 1.5}) {
    PowerOptions o;
    o.h = g->spacing();
    o.tolerance = 1e-8;
    const auto s = solve_power(g, p, 2, o);
    const auto ma = discrete_ma(s.u);
    double worst = 0, scale = 0;
    for (int i = 0; i < g->size(); ++i) {
      const double rhs = 2 * std::pow(std::abs(s.u[i]), p);
      worst = std::max(worst, std::abs(ma[i] - rhs));
      scale = std::max(scale, rhs);
    }
    CAPTURE(p);
    CHECK(worst <= 1e-4 * scale);
    CHECK(s.u.values.maxCoeff() < 0);
  }
}
