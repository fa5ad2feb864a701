#include "malab/grid.hpp"

#include "malab/errors.hpp"

#include <cmath>

namespace malab {

int Grid::node_at(int i, int j) const {
  const int a = i - i0_, b = j - j0_;
  if (a < 0 || b < 0 || a >= nx_ || b >= ny_) return -1;
  return index_[static_cast<std::size_t>(b) * nx_ + a];
}

Grid::Weights Grid::weights(int node, int d) const {
  const double lp = arm(node, d, +1).length;
  const double lm = arm(node, d, -1).length;
  const double s = lp + lm;
  return {2 / (lp * s), 2 / (lm * s), 2 / (lp * lm)};
}

GridPtr build_grid(const ConvexDomain& domain, double h, int width) {
  if (!(h > 0) || !std::isfinite(h)) throw ArgumentError("grid spacing must be positive");
  if (!(h < domain.diameter())) throw ArgumentError("grid spacing must be below the diameter");
  if (width != 1 && width != 2) throw ArgumentError("stencil width must be 1 or 2");

  std::shared_ptr<Grid> g(new Grid(domain));
  g->h_ = h;
  g->width_ = width;
  g->directions_ = {{1, 0}, {0, 1}, {1, 1}, {-1, 1}};
  if (width == 2) {
    g->directions_.insert(g->directions_.end(), {{2, 1}, {-1, 2}, {1, 2}, {-2, 1}});
  }

  Point lo, hi;
  if (domain.is_disc()) {
    lo = domain.center().array() - domain.radius();
    hi = domain.center().array() + domain.radius();
  } else {
    lo = hi = domain.vertices().front();
    for (const auto& v : domain.vertices()) {
      lo = lo.cwiseMin(v);
      hi = hi.cwiseMax(v);
    }
  }
  g->i0_ = static_cast<int>(std::floor(lo.x() / h)) - 1;
  g->j0_ = static_cast<int>(std::floor(lo.y() / h)) - 1;
  g->nx_ = static_cast<int>(std::ceil(hi.x() / h)) + 2 - g->i0_;
  g->ny_ = static_cast<int>(std::ceil(hi.y() / h)) + 2 - g->j0_;
  g->index_.assign(static_cast<std::size_t>(g->nx_) * g->ny_, -1);

  for (int b = 0; b < g->ny_; ++b) {
    for (int a = 0; a < g->nx_; ++a) {
      const int i = a + g->i0_, j = b + g->j0_;
      const Point x(i * h, j * h);
      if (!contains(domain, x)) continue;
      g->index_[static_cast<std::size_t>(b) * g->nx_ + a] = static_cast<int>(g->nodes_.size());
      g->nodes_.push_back(x);
      g->lattice_.emplace_back(i, j);
    }
  }
  if (g->nodes_.empty()) throw ArgumentError("grid has no interior nodes");

  const std::size_t nd = g->directions_.size();
  g->arms_.resize(g->nodes_.size() * nd * 2);
  g->weights_.resize(g->nodes_.size());
  g->distance_.resize(g->nodes_.size());
  g->cut_.assign(g->nodes_.size(), 0);
  for (std::size_t k = 0; k < g->nodes_.size(); ++k) {
    const Point& x = g->nodes_[k];
    const Eigen::Vector2i& ij = g->lattice_[k];
    for (std::size_t d = 0; d < nd; ++d) {
      const Eigen::Vector2i& v = g->directions_[d];
      const double full = v.cast<double>().norm() * h;
      for (int sign : {+1, -1}) {
        StencilArm arm;
        arm.neighbor = g->node_at(ij.x() + sign * v.x(), ij.y() + sign * v.y());
        if (arm.neighbor >= 0) {
          arm.length = full;
        } else {
          const Point e = sign * v.cast<double>().normalized();
          arm.length = std::min(ray_exit(domain, x, e), full);
          g->cut_[k] = 1;
        }
        g->arms_[(k * nd + d) * 2 + (sign > 0 ? 0 : 1)] = arm;
      }
    }
    g->weights_[k] = clipped_square_area(domain, x, h / 2);
    g->distance_[k] = dist_boundary(domain, x);
  }
  return g;
}

GridFunction::GridFunction(GridPtr g, Eigen::VectorXd v) : grid(std::move(g)), values(std::move(v)) {
  if (values.size() != grid->size()) throw ArgumentError("value count does not match grid size");
}

GridFunction sample(const GridPtr& grid, const std::function<double(const Point&)>& fn) {
  GridFunction u(grid);
  for (int i = 0; i < grid->size(); ++i) u.values[i] = fn(grid->node(i));
  return u;
}

double second_difference(const GridFunction& u, int node, int d) {
  const Grid& g = *u.grid;
  const auto w = g.weights(node, d);
  const int np = g.arm(node, d, +1).neighbor;
  const int nm = g.arm(node, d, -1).neighbor;
  const double up = np >= 0 ? u.values[np] : 0.0;
  const double um = nm >= 0 ? u.values[nm] : 0.0;
  return w.c_plus * up + w.c_minus * um - w.c_center * u.values[node];
}

double interpolate(const GridFunction& u, const Point& x) {
  const Grid& g = *u.grid;
  const double h = g.spacing();
  const double fx = x.x() / h, fy = x.y() / h;
  const int i = static_cast<int>(std::floor(fx)), j = static_cast<int>(std::floor(fy));
  const double tx = fx - i, ty = fy - j;
  const auto at = [&](int a, int b) {
    const int k = g.node_at(a, b);
    return k >= 0 ? u.values[k] : 0.0;
  };
  return (1 - tx) * (1 - ty) * at(i, j) + tx * (1 - ty) * at(i + 1, j) + (1 - tx) * ty * at(i, j + 1) +
         tx * ty * at(i + 1, j + 1);
}

}  // namespace malab
