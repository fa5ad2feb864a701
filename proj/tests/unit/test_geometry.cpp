#include "malab/errors.hpp"
#include "malab/geometry.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace malab;

namespace {

const ConvexDomain square = ConvexDomain::unit_square();
const ConvexDomain disc = ConvexDomain::unit_disc();

// Brute-force distance: minimum over a dense boundary sampling.
double sampled_distance(const ConvexDomain& dom, const Point& p) {
  double best = INFINITY;
  for (const auto& s : boundary_samples(dom, 1e-4)) best = std::min(best, (s.point - p).norm());
  return best;
}

}  // namespace

TEST_CASE("contains") {
  CHECK(contains(square, Point(0.5, 0.5)));
  CHECK_FALSE(contains(square, Point(2, 0)));
  CHECK(contains(disc, Point(0.999, 0)));
}

TEST_CASE("distance to the boundary") {
  CHECK(dist_boundary(square, Point(0.5, 0.5)) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(dist_boundary(square, Point(0.1, 0.2)) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(dist_boundary(disc, Point(0.5, 0)) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK_THROWS_AS(dist_boundary(square, Point(2, 0)), DomainError);
}

TEST_CASE("diameter and area") {
  CHECK(diameter(square) == doctest::Approx(std::sqrt(2.0)));
  CHECK(area(square) == doctest::Approx(1.0));
  CHECK(diameter(disc) == doctest::Approx(2.0));
  CHECK(area(disc) == doctest::Approx(std::numbers::pi));
  const auto tri = ConvexDomain::polygon({Point(0, 0), Point(1, 0), Point(0, 1)});
  CHECK(diameter(tri) == doctest::Approx(std::sqrt(2.0)));
  CHECK(area(tri) == doctest::Approx(0.5));
}

TEST_CASE("invalid polygons are rejected") {
  CHECK_THROWS_AS(ConvexDomain::polygon({Point(0, 0), Point(0, 1), Point(1, 1), Point(1, 0)}), ArgumentError);
  CHECK_THROWS_AS(ConvexDomain::polygon({Point(0, 0), Point(1, 0)}), ArgumentError);
  CHECK_THROWS_AS(ConvexDomain::polygon({Point(0, 0), Point(2, 0), Point(1, 0.1), Point(2, 2), Point(0, 2)}),
                  ArgumentError);
  CHECK_THROWS_AS(ConvexDomain::disc(Point(0, 0), 0), ArgumentError);
}

TEST_CASE("boundary frame") {
  SUBCASE("flat edge") {
    const auto f = boundary_frame(square, Point(0.5, 0.1));
    CHECK((f.origin - Point(0.5, 0)).norm() < 1e-14);
    CHECK((f.to_frame(Point(0.5, 0.1)) - Point(0, 0.1)).norm() < 1e-14);
  }
  SUBCASE("disc") {
    const auto f = boundary_frame(disc, Point(0.5, 0));
    CHECK((f.origin - Point(1, 0)).norm() < 1e-14);
    CHECK((f.to_frame(Point(0.5, 0)) - Point(0, 0.5)).norm() < 1e-14);
  }
  SUBCASE("tie between two edges") {
    const auto f = boundary_frame(square, Point(0.1, 0.1));
    CHECK((f.origin - Point(0, 0.1)).norm() < 1e-14);
    CHECK((f.to_frame(Point(0.1, 0.1)) - Point(0, 0.1)).norm() < 1e-14);
  }
  CHECK_THROWS_AS(boundary_frame(square, Point(0, 0.5)), DomainError);
}

TEST_CASE("affine image of a disc under a similarity stays a disc") {
  const Matrix2 R = Eigen::Rotation2Dd(0.3).toRotationMatrix() * 2.0;
  const auto img = affine_image(disc, R);
  CHECK(img.is_disc());
  CHECK(img.radius() == doctest::Approx(2.0));
}

TEST_CASE("property: distance, nearest point and frame agree with brute force") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(-1, 1);
  const auto hexagon = ConvexDomain::polygon({Point(1, 0), Point(0.5, 0.9), Point(-0.5, 0.9), Point(-1, 0),
                                              Point(-0.5, -0.9), Point(0.5, -0.9)});
  for (const ConvexDomain* dom : {&square, &disc, &hexagon}) {
    int checked = 0;
    while (checked < 60) {
      const Point p(U(rng), U(rng));
      if (!contains(*dom, p)) continue;
      ++checked;
      const double d = dist_boundary(*dom, p);
      CHECK(d >= 0);
      CHECK(d <= sampled_distance(*dom, p) + 1e-12);
      CHECK(d >= sampled_distance(*dom, p) - 1e-4);
      CHECK(signed_distance(*dom, p) == doctest::Approx(d));
      const BoundaryPoint q = nearest_boundary_point(*dom, p);
      CHECK((q.point - p).norm() == doctest::Approx(d).epsilon(1e-12));
      CHECK(std::abs(signed_distance(*dom, q.point)) < 1e-12);
      const BoundaryFrame f = boundary_frame(*dom, p);
      const Point y = f.to_frame(p);
      CHECK(std::abs(y.x()) < 1e-12);
      CHECK(y.y() == doctest::Approx(d).epsilon(1e-12));
      CHECK((f.from_frame(y) - p).norm() < 1e-12);
      CHECK((f.rotation * f.rotation.transpose() - Matrix2::Identity()).norm() < 1e-14);
    }
  }
}

TEST_CASE("property: distance is 1-Lipschitz and concave along segments") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(0.01, 0.99);
  for (int k = 0; k < 200; ++k) {
    const Point p(U(rng), U(rng)), q(U(rng), U(rng));
    const double dp = dist_boundary(square, p), dq = dist_boundary(square, q);
    CHECK(std::abs(dp - dq) <= (p - q).norm() + 1e-15);
    CHECK(dist_boundary(square, 0.5 * (p + q)) >= 0.5 * (dp + dq) - 1e-15);
  }
}

TEST_CASE("clipped square area") {
  CHECK(clipped_square_area(square, Point(0.5, 0.5), 0.1) == doctest::Approx(0.04));
  CHECK(clipped_square_area(square, Point(0, 0.5), 0.1) == doctest::Approx(0.02));
  CHECK(clipped_square_area(square, Point(0, 0), 0.1) == doctest::Approx(0.01));
}

TEST_CASE("ray exit") {
  CHECK(ray_exit(square, Point(0.5, 0.5), Point(1, 0)) == doctest::Approx(0.5));
  const Point diag = Point(1, 1).normalized();
  CHECK(ray_exit(disc, Point(0.5, 0.5), diag) == doctest::Approx(1 - std::sqrt(0.5)));
}
