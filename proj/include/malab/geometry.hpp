#pragma once

#include <Eigen/Dense>

#include <vector>

namespace malab {

using Point = Eigen::Vector2d;
using Matrix2 = Eigen::Matrix2d;

struct Segment {
  Point a;
  Point b;
  double length() const { return (b - a).norm(); }
  Point midpoint() const { return 0.5 * (a + b); }
};

/// Bounded convex planar region: a counterclockwise convex polygon or a disc.
///
/// Values are immutable after construction. Polygon edge k joins vertex k-1
/// to vertex k, so edge 0 is the closing edge from the last vertex back to the
/// first; this ordering is what the nearest-point tie rule refers to.
class ConvexDomain {
 public:
  enum class Kind { polygon, disc };

  /// Throws ArgumentError unless the vertices are counterclockwise and in
  /// strictly convex position. `allow_collinear` admits vertices that merely
  /// subdivide a flat edge.
  static ConvexDomain polygon(std::vector<Point> vertices, bool allow_collinear = false);
  static ConvexDomain disc(const Point& center, double radius);

  static ConvexDomain unit_square() {
    return polygon({Point(0, 0), Point(1, 0), Point(1, 1), Point(0, 1)});
  }
  static ConvexDomain unit_disc() { return disc(Point(0, 0), 1.0); }

  Kind kind() const { return kind_; }
  bool is_polygon() const { return kind_ == Kind::polygon; }
  bool is_disc() const { return kind_ == Kind::disc; }

  const std::vector<Point>& vertices() const { return vertices_; }
  const Point& center() const { return center_; }
  double radius() const { return radius_; }

  std::size_t edge_count() const { return vertices_.size(); }
  Segment edge(std::size_t k) const;
  std::vector<Segment> edges() const;
  /// Unit outward normal of polygon edge k.
  const Point& edge_normal(std::size_t k) const { return normals_[k]; }
  /// Support value: inside points satisfy edge_normal(k) . x < edge_offset(k).
  double edge_offset(std::size_t k) const { return offsets_[k]; }

  double area() const { return area_; }
  double diameter() const { return diameter_; }
  double perimeter() const { return perimeter_; }
  /// Characteristic length used to scale geometric tolerances.
  double scale() const { return diameter_; }

 private:
  ConvexDomain() = default;
  void finalize();

  Kind kind_ = Kind::polygon;
  std::vector<Point> vertices_;
  std::vector<Point> normals_;
  std::vector<double> offsets_;  // normal . x <= offset inside
  Point center_ = Point::Zero();
  double radius_ = 0.0;
  double area_ = 0.0;
  double diameter_ = 0.0;
  double perimeter_ = 0.0;
};

/// Rigid change of coordinates taking a boundary point to the origin and the
/// inward normal there to +x2.
struct BoundaryFrame {
  Point origin;
  Matrix2 rotation;

  Point to_frame(const Point& x) const { return rotation * (x - origin); }
  Point from_frame(const Point& y) const { return origin + rotation.transpose() * y; }
  Point inward_normal() const { return rotation.row(1).transpose(); }
};

struct BoundaryPoint {
  Point point;
  Point outward_normal;
  int edge = -1;         // polygon edge index, -1 for discs
  double parameter = 0;  // position along the edge in [0, 1], or angle for discs
  double distance = 0;
};

struct BoundarySample {
  Point point;
  Point outward_normal;
  double weight;  // arc length represented by the sample
};

bool contains(const ConvexDomain& domain, const Point& p);

/// Signed distance to the boundary, positive inside.
double signed_distance(const ConvexDomain& domain, const Point& p);

/// Exact distance to the boundary; throws DomainError outside the closure.
double dist_boundary(const ConvexDomain& domain, const Point& p);

inline double diameter(const ConvexDomain& domain) { return domain.diameter(); }
inline double area(const ConvexDomain& domain) { return domain.area(); }

/// Nearest boundary point with the deterministic tie rule: smallest
/// (edge index, parameter) among candidates within 1e-12 of the minimum.
BoundaryPoint nearest_boundary_point(const ConvexDomain& domain, const Point& p);

/// Throws DomainError unless z is an interior point.
BoundaryFrame boundary_frame(const ConvexDomain& domain, const Point& z);

/// Frame attached to a given boundary point with the given outward normal.
BoundaryFrame frame_at(const Point& origin, const Point& outward_normal);

/// Distance t >= 0 at which the ray p + t*dir (dir unit) leaves the closure.
double ray_exit(const ConvexDomain& domain, const Point& p, const Point& dir);

/// Area of the axis-aligned square [c - half, c + half]^2 intersected with the domain.
double clipped_square_area(const ConvexDomain& domain, const Point& center, double half);

/// Midpoint-rule samples of the boundary with spacing at most `spacing`.
std::vector<BoundarySample> boundary_samples(const ConvexDomain& domain, double spacing);

/// Image of the domain under x -> matrix * x. Discs mapped by a non-similarity
/// become inscribed polygons with `polygon_sides` vertices.
ConvexDomain affine_image(const ConvexDomain& domain, const Matrix2& matrix, int polygon_sides = 1024);

}  // namespace malab
