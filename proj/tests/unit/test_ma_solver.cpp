#include "malab/errors.hpp"
#include "malab/grid.hpp"
#include "malab/ma_solver.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace malab;

namespace {

const ConvexDomain square = ConvexDomain::unit_square();
const ConvexDomain disc = ConvexDomain::unit_disc();

GridFunction constant(const GridPtr& g, double c) { return GridFunction(g, Eigen::VectorXd::Constant(g->size(), c)); }

double quadratic_error(const GridFunction& u) {
  double e = 0;
  for (int i = 0; i < u.grid->size(); ++i) {
    e = std::max(e, std::abs(u[i] - 0.5 * (u.grid->node(i).squaredNorm() - 1)));
  }
  return e;
}

int center_node(const GridPtr& g, const Point& c) {
  for (int i = 0; i < g->size(); ++i) {
    if ((g->node(i) - c).norm() < 1e-12) return i;
  }
  return -1;
}

}  // namespace

TEST_CASE("grid construction") {
  SUBCASE("unit square at h = 1/4") {
    const GridPtr g = build_grid(square, 0.25);
    REQUIRE(g->size() == 9);
    for (int i = 0; i < 9; ++i) {
      for (int c = 0; c < 2; ++c) {
        const double x = g->node(i)(c);
        CHECK((x == 0.25 || x == 0.5 || x == 0.75));
      }
    }
  }
  SUBCASE("unit disc at h = 1/2 records the exact diagonal offset") {
    const GridPtr g = build_grid(disc, 0.5);
    CHECK(g->size() == 9);
    const int k = center_node(g, Point(0.5, 0.5));
    REQUIRE(k >= 0);
    for (int d = 0; d < g->direction_count(); ++d) {
      const Eigen::Vector2i v = g->direction(d);
      for (int s : {+1, -1}) {
        const Eigen::Vector2i w = s * v;
        const auto& arm = g->arm(k, d, s);
        if (w == Eigen::Vector2i(-1, 0) || w == Eigen::Vector2i(0, -1)) CHECK(arm.neighbor >= 0);
        if (w == Eigen::Vector2i(1, 1)) {
          CHECK(arm.neighbor == -1);
          CHECK(arm.length == doctest::Approx(1 - std::sqrt(0.5)).epsilon(1e-14));
        }
      }
    }
    CHECK(g->is_cut(k));
  }
  CHECK_THROWS_AS(build_grid(disc, 2.0), ArgumentError);
  CHECK_THROWS_AS(build_grid(disc, 0.0), ArgumentError);
  CHECK_THROWS_AS(build_grid(disc, 0.1, 3), ArgumentError);
}

TEST_CASE("discrete operator on polynomials") {
  for (int width : {1, 2}) {
    const GridPtr g = build_grid(disc, 1.0 / 16, width);
    const auto half_norm = discrete_ma(sample(g, [](const Point& x) { return 0.5 * x.squaredNorm(); }));
    const auto affine = discrete_ma(sample(g, [](const Point& x) { return 0.3 + 2 * x.x() - x.y(); }));
    const auto flat = discrete_ma(sample(g, [](const Point& x) { return 0.5 * x.x() * x.x(); }));
    // Cut nodes see the zero boundary trace instead of the polynomial.
    for (int i = 0; i < g->size(); ++i) {
      if (g->is_cut(i)) continue;
      CHECK(std::abs(affine[i]) < 1e-9);
      CHECK(std::abs(flat[i]) < 1e-9);
      CHECK(half_norm[i] == doctest::Approx(1).epsilon(1e-9));
    }
  }
}

TEST_CASE("unit disc with f = 1 reproduces the exact quadratic") {
  const GridPtr g = build_grid(disc, 1.0 / 64);
  const Solution s = solve_dirichlet(constant(g, 1));
  CHECK(quadratic_error(s.u) <= 5e-3);
  CHECK(s.u[center_node(g, Point(0, 0))] == doctest::Approx(-0.5).epsilon(1e-2));
  CHECK(s.report.residual <= 1e-8);
}

TEST_CASE("zero data gives the zero solution") {
  const GridPtr g = build_grid(square, 1.0 / 16);
  const Solution s = solve_dirichlet(constant(g, 0));
  CHECK(s.u.values.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("unit square self-convergence at the center") {
  // Cauchy differences stay small but do not shrink geometrically (corner
  // singularities), so only their size is checked.
  std::vector<double> uc;
  double umax = 0;
  for (double h : {1.0 / 32, 1.0 / 64, 1.0 / 128}) {
    const GridPtr g = build_grid(square, h);
    const Solution s = solve_dirichlet(constant(g, 1));
    uc.push_back(s.u[center_node(g, Point(0.5, 0.5))]);
    umax = std::max(umax, s.u.sup_norm());
  }
  CHECK(std::abs(uc[1] - uc[0]) <= 1e-2 * umax);
  CHECK(std::abs(uc[2] - uc[1]) <= 1e-2 * umax);
  MESSAGE("center values " << uc[0] << " " << uc[1] << " " << uc[2]);
}

TEST_CASE("Gauss-Seidel and Newton agree") {
  const GridPtr g = build_grid(square, 1.0 / 16);
  SolveOptions gs;
  gs.method = SolveMethod::gauss_seidel;
  gs.tolerance = 1e-10;
  SolveOptions nt;
  nt.tolerance = 1e-10;
  const auto a = solve_dirichlet(constant(g, 1), gs);
  const auto b = solve_dirichlet(constant(g, 1), nt);
  CHECK((a.u.values - b.u.values).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(a.report.method == SolveMethod::gauss_seidel);
}

TEST_CASE("affine invariance") {
  const GridPtr g = build_grid(disc, 1.0 / 32);
  const auto one = [](const Point&) { return 1.0; };
  const Solution s = solve_dirichlet(constant(g, 1));
  const double level = 5e-3;
  CHECK(affine_image_check(s.u, one, Matrix2::Identity()).discrepancy <= 1e-8);
  CHECK(affine_image_check(s.u, one, Eigen::Rotation2Dd(std::numbers::pi / 6).toRotationMatrix()).discrepancy <=
        2 * level);
  Matrix2 A;
  A << 2, 0, 0, 0.5;
  CHECK(affine_image_check(s.u, one, A).discrepancy <= 2 * level);
  CHECK_THROWS_AS(affine_image_check(s.u, one, Matrix2::Zero()), ArgumentError);
}

TEST_CASE("property: 2-homogeneity of the discrete operator") {
  const GridPtr g = build_grid(square, 1.0 / 16, 2);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(0.2, 3);
  for (int k = 0; k < 5; ++k) {
    const double a = U(rng), b = U(rng), c = U(rng);
    const GridFunction u = sample(g, [&](const Point& x) { return a * x.x() * x.x() + b * x.y() * x.y() + std::exp(c * x.x()); });
    GridFunction v = u;
    v.values *= c;
    const auto mu = discrete_ma(u), mv = discrete_ma(v);
    for (int i = 0; i < g->size(); ++i) CHECK(mv[i] == doctest::Approx(c * c * mu[i]).epsilon(1e-10));
  }
}

TEST_CASE("property: larger data gives a lower solution") {
  const GridPtr g = build_grid(disc, 1.0 / 24);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> U(0, 1);
  for (int k = 0; k < 3; ++k) {
    GridFunction f1(g), f2(g);
    for (int i = 0; i < g->size(); ++i) {
      f1.values[i] = U(rng);
      f2.values[i] = f1.values[i] + U(rng);
    }
    const auto u1 = solve_dirichlet(f1).u, u2 = solve_dirichlet(f2).u;
    CHECK((u1.values - u2.values).minCoeff() >= -1e-9);
  }
}

TEST_CASE("property: solutions are convex and nonpositive with small residual") {
  for (int width : {1, 2}) {
    const GridPtr g = build_grid(square, 1.0 / 32, width);
    const GridFunction f = sample(g, [](const Point& x) { return 1 + x.x(); });
    SolveOptions o;
    o.stencil_width = width;
    const Solution s = solve_dirichlet(f, o);
    CHECK(s.u.values.maxCoeff() <= 0);
    CHECK(s.report.monotone);
    const auto ma = discrete_ma(s.u);
    CHECK((ma.values - f.values).cwiseAbs().maxCoeff() <= 1e-8 * std::max(1.0, f.values.maxCoeff()));
    for (int i = 0; i < g->size(); ++i) {
      for (int d = 0; d < g->direction_count(); ++d) CHECK(second_difference(s.u, i, d) >= -1e-9);
    }
  }
}

TEST_CASE("property: solves are identical across thread counts") {
  const GridPtr g = build_grid(disc, 1.0 / 48);
  const GridFunction f = sample(g, [](const Point& x) { return 1 + x.y() * x.y(); });
  SolveOptions a, b;
  b.threads = 4;
  CHECK(solve_dirichlet(f, a).u.values == solve_dirichlet(f, b).u.values);
}

TEST_CASE("negative data is rejected") {
  const GridPtr g = build_grid(square, 1.0 / 8);
  CHECK_THROWS_AS(solve_dirichlet(constant(g, -1)), ArgumentError);
}

TEST_CASE("iteration limit carries the last residual") {
  const GridPtr g = build_grid(square, 1.0 / 32);
  SolveOptions o;
  o.method = SolveMethod::gauss_seidel;
  o.max_sweeps = 3;
  try {
    solve_dirichlet(constant(g, 1), o);
    FAIL("expected an iteration limit");
  } catch (const IterationLimitError& e) {
    CHECK(e.last_residual() > 0);
  }
}
