#pragma once

#include "malab/barriers.hpp"
#include "malab/grid.hpp"

#include <vector>

namespace malab {

struct LipschitzStat {
  double constant = 0;  // max |u| / (dist * ||u||_inf)
  int node = -1;
  Point location = Point::Zero();
};

/// Throws ArgumentError for u == 0.
LipschitzStat check_lipschitz(const GridFunction& u);

/// Least-squares fit of log(|u|/d) = log C + beta*log|log d| + gamma*d.
///
/// The linear term absorbs boundary curvature so that Lipschitz profiles of
/// curved solutions read beta ~ 0 instead of a spurious small exponent.
struct LogFit {
  double C = 0;
  double beta = 0;  // clamped to [0, n]
  double beta_raw = 0;
  double gamma = 0;
  double residual = 0;  // RMS of the regression residuals
};

struct FitOptions {
  int min_samples = 8;
  double min_decades = 1.5;
  int dimension = 2;
};

/// Requires d in (0, 1), |u| > 0, at least min_samples points and a span of
/// min_decades decades in d; throws ArgumentError otherwise.
LogFit fit_log_exponent(const std::vector<double>& d, const std::vector<double>& abs_u, const FitOptions& opts = {});

struct GrowthProfile {
  Point boundary_point = Point::Zero();
  Point inward_normal = Point::Zero();
  std::vector<double> d;  // strictly decreasing, all >= 2h
  std::vector<double> abs_u;
  LogFit fit;
  double fit_model(double dist) const;
};

struct ProfileOptions {
  int samples = 24;
  /// Depth of the flat patch; the window is [2h, min(s, diam/4, 1/e)].
  double s = 0.36787944117144233;
  /// The window spans log10(diam / (8h)) decades at most, about 1.35 at h = 1/128.
  FitOptions fit{8, 1.0, 2};
};

/// Samples |u| by bilinear interpolation along the inward normal at a boundary
/// point. Throws GeometryError if the normal leaves the domain before 2h.
GrowthProfile profile_normal(const GridFunction& u, const BoundaryPoint& where, const ProfileOptions& opts = {});

/// Midpoint of polygon edge k with its outward normal.
BoundaryPoint edge_midpoint(const ConvexDomain& domain, int edge);

struct W21Report {
  double hessian_norm = 0;  // sum ||D^2 u||_HS w_i
  double laplacian = 0;     // sum Delta u w_i
  double flux = 0;          // boundary sum of du/dnu times arc length
  double flux_mismatch = 0; // |laplacian - flux| / |flux|
  double norm_excess = 0;   // max(0, hessian_norm - laplacian)
  double convex_fraction = 1;  // nodes with ||D^2 u|| <= Delta u + 1e-6 scale
  int cut_nodes = 0;           // nodes whose Hessian used boundary offsets
  int nodes = 0;
};

W21Report w21_integral(const GridFunction& u);

/// Discrete Hessian (uxx, uxy, uyy) at a node from axis and diagonal differences.
Eigen::Vector3d nodal_hessian(const GridFunction& u, int node);

struct ComparisonOptions {
  double tolerance = 1e-8;  // relative to ||u||_inf
  std::size_t samples = 4000;
  std::uint64_t seed = 1;
};

struct ComparisonResult {
  bool holds = true;
  double worst_margin = 0;  // min over nodes of factor*|v(0, d)| - |u|
  int worst_node = -1;
  int violations = 0;
  double factor = 0;  // (K/L)^(1/(p-n))
  BarrierReport verification;
};

/// Checks -u <= (K/L)^(1/(p-n)) |v| at every node, with v placed in the
/// boundary frame of that node. The barrier inequality det D^2 v >= K|v|^p is
/// verified first on the framed domain; an inconsistent or failing barrier
/// raises ArgumentError.
ComparisonResult comparison_check(const GridFunction& u, const BarrierSpec& spec, double p, double K, double L,
                                  const ComparisonOptions& opts = {});

enum class BoundKind { lipschitz_ii, log_upper, pow_2_over_n_minus_p };

/// Right-hand side the solution was computed with.
struct RhsClass {
  enum class Kind { dist_power, abs_power };
  Kind kind = Kind::abs_power;
  double p = 0;
  double M = 1;
};

struct BoundCheck {
  int violations = 0;
  double worst_ratio = 0;  // max |u| / bound
  double constant = 0;     // leading constant of the bound
  int nodes = 0;
};

/// Counts nodes where |u| exceeds an explicit-constant bound by more than
/// tolerance*||u||_inf:
///   lipschitz_ii  |u| <= s B(a, D) dist,  a = (2+p)/2, for dist^p data
///   log_upper     |u| <= (L/K)^(1/2) |w(0, dist)| with the log subsolution w,
///                 for |u|^0 data
///   pow_2_over_n_minus_p  needs p < n - 2, which is empty in the plane.
BoundCheck pointwise_bound_check(const GridFunction& u, BoundKind kind, const RhsClass& rhs,
                                 double tolerance = 1e-8);

const char* to_string(BoundKind k);
BoundKind parse_bound_kind(const std::string& s);

}  // namespace malab
