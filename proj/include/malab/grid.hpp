#pragma once

#include "malab/geometry.hpp"

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <vector>

namespace malab {

/// One side of a stencil ray. `neighbor` is the node index reached after
/// `length`, or -1 when the ray meets the boundary first (value 0 there).
struct StencilArm {
  int neighbor = -1;
  double length = 0;
};

/// Cartesian lattice h*Z^2 restricted to the open domain, with exact
/// boundary offsets along every stencil ray.
///
/// Direction pairs are orthogonal lattice vectors (v, v_perp); pair k uses
/// directions 2k and 2k+1. Width 1 has the axis and diagonal pairs, width 2
/// adds the two knight-move pairs.
class Grid {
 public:
  const ConvexDomain& domain() const { return domain_; }
  double spacing() const { return h_; }
  int width() const { return width_; }
  int size() const { return static_cast<int>(nodes_.size()); }

  int direction_count() const { return static_cast<int>(directions_.size()); }
  int pair_count() const { return direction_count() / 2; }
  const Eigen::Vector2i& direction(int d) const { return directions_[d]; }
  /// Unit vector of lattice direction d.
  Point unit_direction(int d) const { return directions_[d].cast<double>().normalized(); }

  const Point& node(int i) const { return nodes_[i]; }
  const Eigen::Vector2i& lattice_index(int i) const { return lattice_[i]; }
  /// Node at lattice position (i, j), or -1.
  int node_at(int i, int j) const;

  /// sign = +1 or -1 along direction d.
  const StencilArm& arm(int node, int d, int sign) const {
    return arms_[(static_cast<std::size_t>(node) * directions_.size() + d) * 2 + (sign > 0 ? 0 : 1)];
  }
  /// Area of the cell [x - h/2, x + h/2]^2 that lies in the domain.
  double cell_weight(int i) const { return weights_[i]; }
  double distance(int i) const { return distance_[i]; }
  /// True if some stencil arm of the node ends on the boundary.
  bool is_cut(int i) const { return cut_[i] != 0; }

  /// Coefficients of the three-point second difference along direction d:
  /// D = c_plus*u(+) + c_minus*u(-) - c_center*u(node).
  struct Weights {
    double c_plus, c_minus, c_center;
  };
  Weights weights(int node, int d) const;

 private:
  friend std::shared_ptr<const Grid> build_grid(const ConvexDomain&, double, int);
  Grid(const ConvexDomain& domain) : domain_(domain) {}

  ConvexDomain domain_;
  double h_ = 0;
  int width_ = 1;
  std::vector<Eigen::Vector2i> directions_;
  std::vector<Point> nodes_;
  std::vector<Eigen::Vector2i> lattice_;
  std::vector<StencilArm> arms_;
  std::vector<double> weights_;
  std::vector<double> distance_;
  std::vector<unsigned char> cut_;
  int i0_ = 0, j0_ = 0, nx_ = 0, ny_ = 0;
  std::vector<int> index_;
};

using GridPtr = std::shared_ptr<const Grid>;

/// Throws ArgumentError unless 0 < h < diameter and width is 1 or 2.
GridPtr build_grid(const ConvexDomain& domain, double h, int stencil_width = 1);

/// Nodal values on a grid; the boundary trace is identically zero.
struct GridFunction {
  GridPtr grid;
  Eigen::VectorXd values;

  GridFunction() = default;
  GridFunction(GridPtr g) : grid(std::move(g)), values(Eigen::VectorXd::Zero(grid->size())) {}
  GridFunction(GridPtr g, Eigen::VectorXd v);

  double operator[](int i) const { return values[i]; }
  double sup_norm() const { return values.size() ? values.cwiseAbs().maxCoeff() : 0.0; }
};

GridFunction sample(const GridPtr& grid, const std::function<double(const Point&)>& fn);

/// Second difference of u at a node along direction d (unit step length).
double second_difference(const GridFunction& u, int node, int d);

/// Bilinear interpolation on the lattice cell containing x. Lattice corners
/// that are not nodes contribute the boundary value 0.
double interpolate(const GridFunction& u, const Point& x);

}  // namespace malab
