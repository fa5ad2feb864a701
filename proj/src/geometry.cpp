#include "malab/geometry.hpp"

#include "malab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace malab {

namespace {

double cross(const Point& a, const Point& b) { return a.x() * b.y() - a.y() * b.x(); }

// Antiderivative of sqrt(r^2 - x^2).
double circle_primitive(double x, double r) {
  x = std::clamp(x, -r, r);
  return 0.5 * (x * std::sqrt(std::max(r * r - x * x, 0.0)) + r * r * std::asin(x / r));
}

// Clip a convex polygon against the half-plane normal . x <= offset.
std::vector<Point> clip_half_plane(const std::vector<Point>& poly, const Point& normal, double offset) {
  std::vector<Point> out;
  if (poly.empty()) return out;
  out.reserve(poly.size() + 1);
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point& cur = poly[i];
    const Point& nxt = poly[(i + 1) % poly.size()];
    const double dc = normal.dot(cur) - offset;
    const double dn = normal.dot(nxt) - offset;
    if (dc <= 0) out.push_back(cur);
    if ((dc < 0 && dn > 0) || (dc > 0 && dn < 0)) {
      const double t = dc / (dc - dn);
      out.push_back(cur + t * (nxt - cur));
    }
  }
  return out;
}

double shoelace(const std::vector<Point>& poly) {
  double s = 0;
  for (std::size_t i = 0; i < poly.size(); ++i) s += cross(poly[i], poly[(i + 1) % poly.size()]);
  return 0.5 * s;
}

// Area of {x0<x<x1, y0<y<y1} intersected with the disc of radius r at the origin.
double square_disc_area(double x0, double x1, double y0, double y1, double r) {
  x0 = std::max(x0, -r);
  x1 = std::min(x1, r);
  if (x1 <= x0) return 0.0;
  // Breakpoints where the circle crosses y = y0 or y = y1.
  std::vector<double> xs{x0, x1};
  for (double y : {y0, y1}) {
    if (std::abs(y) < r) {
      const double xc = std::sqrt(r * r - y * y);
      for (double x : {-xc, xc})
        if (x > x0 && x < x1) xs.push_back(x);
    }
  }
  std::sort(xs.begin(), xs.end());
  double total = 0;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    const double a = xs[i], b = xs[i + 1];
    if (b <= a) continue;
    const double m = 0.5 * (a + b);
    const double sm = std::sqrt(std::max(r * r - m * m, 0.0));
    const bool upper_is_circle = sm < y1;
    const bool lower_is_circle = -sm > y0;
    const double upper_mid = upper_is_circle ? sm : y1;
    const double lower_mid = lower_is_circle ? -sm : y0;
    if (upper_mid <= lower_mid) continue;
    const double circ = circle_primitive(b, r) - circle_primitive(a, r);
    const double upper = upper_is_circle ? circ : y1 * (b - a);
    const double lower = lower_is_circle ? -circ : y0 * (b - a);
    total += upper - lower;
  }
  return total;
}

}  // namespace

ConvexDomain ConvexDomain::polygon(std::vector<Point> vertices, bool allow_collinear) {
  const std::size_t m = vertices.size();
  if (m < 3) throw ArgumentError("polygon needs at least 3 vertices");
  double scale = 0;
  for (const auto& v : vertices) {
    if (!v.allFinite()) throw ArgumentError("polygon vertex is not finite");
    for (const auto& w : vertices) scale = std::max(scale, (v - w).norm());
  }
  if (!(scale > 0)) throw ArgumentError("polygon is degenerate");
  const double tol = 1e-12 * scale * scale;
  double turning = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const Point e0 = vertices[i] - vertices[(i + m - 1) % m];
    const Point e1 = vertices[(i + 1) % m] - vertices[i];
    if (e0.norm() <= 1e-12 * scale) throw ArgumentError("polygon has repeated vertices");
    const double c = cross(e0, e1);
    if (c < -tol) throw ArgumentError("polygon vertices are not counterclockwise and convex");
    if (std::abs(c) <= tol && !allow_collinear)
      throw ArgumentError("polygon has three collinear consecutive vertices");
    turning += std::atan2(c, e0.dot(e1));
  }
  if (std::abs(turning - 2 * std::numbers::pi) > 1e-6)
    throw ArgumentError("polygon is not simple (winds more than once)");

  ConvexDomain d;
  d.kind_ = Kind::polygon;
  d.vertices_ = std::move(vertices);
  d.finalize();
  if (!(d.area_ > 0)) throw ArgumentError("polygon has non-positive area");
  return d;
}

ConvexDomain ConvexDomain::disc(const Point& center, double radius) {
  if (!center.allFinite()) throw ArgumentError("disc center is not finite");
  if (!(radius > 0) || !std::isfinite(radius)) throw ArgumentError("disc radius must be positive");
  ConvexDomain d;
  d.kind_ = Kind::disc;
  d.center_ = center;
  d.radius_ = radius;
  d.finalize();
  return d;
}

void ConvexDomain::finalize() {
  if (kind_ == Kind::disc) {
    area_ = std::numbers::pi * radius_ * radius_;
    diameter_ = 2 * radius_;
    perimeter_ = 2 * std::numbers::pi * radius_;
    return;
  }
  const std::size_t m = vertices_.size();
  normals_.resize(m);
  offsets_.resize(m);
  area_ = shoelace(vertices_);
  diameter_ = 0;
  perimeter_ = 0;
  for (std::size_t k = 0; k < m; ++k) {
    const Segment s = edge(k);
    const Point t = (s.b - s.a).normalized();
    normals_[k] = Point(t.y(), -t.x());
    offsets_[k] = normals_[k].dot(s.a);
    perimeter_ += s.length();
    for (std::size_t j = 0; j < m; ++j) diameter_ = std::max(diameter_, (vertices_[k] - vertices_[j]).norm());
  }
  center_ = Point::Zero();
  for (const auto& v : vertices_) center_ += v;
  center_ /= static_cast<double>(m);
}

Segment ConvexDomain::edge(std::size_t k) const {
  const std::size_t m = vertices_.size();
  return {vertices_[(k + m - 1) % m], vertices_[k]};
}

std::vector<Segment> ConvexDomain::edges() const {
  std::vector<Segment> out;
  out.reserve(vertices_.size());
  for (std::size_t k = 0; k < vertices_.size(); ++k) out.push_back(edge(k));
  return out;
}

double signed_distance(const ConvexDomain& domain, const Point& p) {
  if (domain.is_disc()) return domain.radius() - (p - domain.center()).norm();
  // Inside a convex polygon the distance to the boundary is the smallest
  // distance to the supporting lines; outside we report a negative value.
  double inside = std::numeric_limits<double>::infinity();
  bool outside = false;
  for (std::size_t k = 0; k < domain.edge_count(); ++k) {
    const double s = domain.edge_offset(k) - domain.edge_normal(k).dot(p);
    if (s < 0) outside = true;
    inside = std::min(inside, s);
  }
  if (!outside) return inside;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& s : domain.edges()) {
    const Point d = s.b - s.a;
    const double t = std::clamp((p - s.a).dot(d) / d.squaredNorm(), 0.0, 1.0);
    best = std::min(best, (p - (s.a + t * d)).norm());
  }
  return -best;
}

bool contains(const ConvexDomain& domain, const Point& p) {
  if (domain.is_disc()) return (p - domain.center()).squaredNorm() < domain.radius() * domain.radius();
  for (std::size_t k = 0; k < domain.edge_count(); ++k) {
    const Segment s = domain.edge(k);
    if (cross(s.b - s.a, p - s.a) <= 0) return false;
  }
  return true;
}

double dist_boundary(const ConvexDomain& domain, const Point& p) {
  const double s = signed_distance(domain, p);
  if (s < -1e-12 * domain.scale()) throw DomainError("point lies outside the domain");
  return std::max(s, 0.0);
}

BoundaryPoint nearest_boundary_point(const ConvexDomain& domain, const Point& p) {
  if (domain.is_disc()) {
    Point dir = p - domain.center();
    const double r = dir.norm();
    double angle = 0;
    if (r > 1e-14 * domain.radius()) {
      dir /= r;
      angle = std::atan2(dir.y(), dir.x());
    } else {
      dir = Point(1, 0);
    }
    BoundaryPoint bp;
    bp.point = domain.center() + domain.radius() * dir;
    bp.outward_normal = dir;
    bp.parameter = angle;
    bp.distance = std::abs(domain.radius() - r);
    return bp;
  }
  struct Candidate {
    double dist;
    std::size_t edge;
    double t;
  };
  std::vector<Candidate> cands;
  cands.reserve(domain.edge_count());
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < domain.edge_count(); ++k) {
    const Segment s = domain.edge(k);
    const Point d = s.b - s.a;
    const double t = std::clamp((p - s.a).dot(d) / d.squaredNorm(), 0.0, 1.0);
    const double dist = (p - (s.a + t * d)).norm();
    cands.push_back({dist, k, t});
    best = std::min(best, dist);
  }
  const double tol = 1e-12 * domain.scale();
  const Candidate* pick = nullptr;
  for (const auto& c : cands) {
    if (c.dist > best + tol) continue;
    if (!pick || c.edge < pick->edge || (c.edge == pick->edge && c.t < pick->t)) pick = &c;
  }
  const Segment s = domain.edge(pick->edge);
  BoundaryPoint bp;
  bp.point = s.a + pick->t * (s.b - s.a);
  bp.edge = static_cast<int>(pick->edge);
  bp.parameter = pick->t;
  bp.distance = pick->dist;
  // At a vertex the direction to p is a valid supporting normal; on an edge
  // interior it coincides with the edge normal.
  const Point away = bp.point - p;
  bp.outward_normal = away.norm() > tol ? Point(away.normalized()) : domain.edge_normal(pick->edge);
  return bp;
}

BoundaryFrame frame_at(const Point& origin, const Point& outward_normal) {
  const Point n = -outward_normal.normalized();
  BoundaryFrame f;
  f.origin = origin;
  f.rotation << n.y(), -n.x(), n.x(), n.y();
  return f;
}

BoundaryFrame boundary_frame(const ConvexDomain& domain, const Point& z) {
  if (!contains(domain, z)) throw DomainError("frame point must be interior");
  const BoundaryPoint bp = nearest_boundary_point(domain, z);
  if (!(bp.distance > 0)) throw DomainError("frame point lies on the boundary");
  return frame_at(bp.point, bp.outward_normal);
}

double ray_exit(const ConvexDomain& domain, const Point& p, const Point& dir) {
  if (domain.is_disc()) {
    const Point q = p - domain.center();
    const double b = q.dot(dir);
    const double c = q.squaredNorm() - domain.radius() * domain.radius();
    const double disc = std::max(b * b - c, 0.0);
    // Larger root of t^2 + 2bt + c = 0, written to avoid cancellation.
    const double sq = std::sqrt(disc);
    if (b >= 0) return std::max(b + sq > 0 ? -c / (b + sq) : 0.0, 0.0);
    return std::max(sq - b, 0.0);
  }
  double t = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < domain.edge_count(); ++k) {
    const Point& n = domain.edge_normal(k);
    const double nd = n.dot(dir);
    if (nd <= 0) continue;
    const double slack = domain.edge_offset(k) - n.dot(p);
    t = std::min(t, slack / nd);
  }
  return std::max(t, 0.0);
}

double clipped_square_area(const ConvexDomain& domain, const Point& c, double half) {
  if (domain.is_disc()) {
    const Point o = c - domain.center();
    return square_disc_area(o.x() - half, o.x() + half, o.y() - half, o.y() + half, domain.radius());
  }
  std::vector<Point> poly{c + Point(-half, -half), c + Point(half, -half), c + Point(half, half),
                          c + Point(-half, half)};
  for (std::size_t k = 0; k < domain.edge_count() && !poly.empty(); ++k) {
    const Point& n = domain.edge_normal(k);
    poly = clip_half_plane(poly, n, domain.edge_offset(k));
  }
  return poly.size() < 3 ? 0.0 : shoelace(poly);
}

std::vector<BoundarySample> boundary_samples(const ConvexDomain& domain, double spacing) {
  std::vector<BoundarySample> out;
  if (domain.is_disc()) {
    const int count = std::max(8, static_cast<int>(std::ceil(domain.perimeter() / spacing)));
    const double w = domain.perimeter() / count;
    for (int i = 0; i < count; ++i) {
      const double th = 2 * std::numbers::pi * (i + 0.5) / count;
      const Point n(std::cos(th), std::sin(th));
      out.push_back({domain.center() + domain.radius() * n, n, w});
    }
    return out;
  }
  for (std::size_t k = 0; k < domain.edge_count(); ++k) {
    const Segment s = domain.edge(k);
    const int count = std::max(1, static_cast<int>(std::ceil(s.length() / spacing)));
    const double w = s.length() / count;
    for (int i = 0; i < count; ++i) {
      const double t = (i + 0.5) / count;
      out.push_back({s.a + t * (s.b - s.a), domain.edge_normal(k), w});
    }
  }
  return out;
}

ConvexDomain affine_image(const ConvexDomain& domain, const Matrix2& matrix, int polygon_sides) {
  const double det = matrix.determinant();
  if (!(std::abs(det) > 0)) throw ArgumentError("affine map must be invertible");
  if (domain.is_disc()) {
    const Matrix2 gram = matrix.transpose() * matrix;
    const double s2 = 0.5 * gram.trace();
    const bool similarity = (gram - s2 * Matrix2::Identity()).norm() <= 1e-14 * s2;
    if (similarity) return ConvexDomain::disc(matrix * domain.center(), std::sqrt(s2) * domain.radius());
    std::vector<Point> verts;
    verts.reserve(polygon_sides);
    for (int i = 0; i < polygon_sides; ++i) {
      const double th = 2 * std::numbers::pi * i / polygon_sides;
      verts.push_back(matrix * (domain.center() + domain.radius() * Point(std::cos(th), std::sin(th))));
    }
    if (det < 0) std::reverse(verts.begin(), verts.end());
    return ConvexDomain::polygon(std::move(verts));
  }
  std::vector<Point> verts;
  for (const auto& v : domain.vertices()) verts.push_back(matrix * v);
  if (det < 0) std::reverse(verts.begin(), verts.end());
  return ConvexDomain::polygon(std::move(verts));
}

}  // namespace malab
