#include "malab/analysis.hpp"

#include "malab/errors.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>

namespace malab {

LipschitzStat check_lipschitz(const GridFunction& u) {
  const double sup = u.sup_norm();
  if (!(sup > 0)) throw ArgumentError("Lipschitz statistic of the zero function");
  const Grid& g = *u.grid;
  LipschitzStat st;
  for (int i = 0; i < g.size(); ++i) {
    const double q = std::abs(u.values[i]) / (g.distance(i) * sup);
    if (q > st.constant) {
      st.constant = q;
      st.node = i;
      st.location = g.node(i);
    }
  }
  return st;
}

LogFit fit_log_exponent(const std::vector<double>& d, const std::vector<double>& abs_u, const FitOptions& opts) {
  if (d.size() != abs_u.size()) throw ArgumentError("distance and value counts differ");
  if (static_cast<int>(d.size()) < opts.min_samples) {
    throw ArgumentError("need at least " + std::to_string(opts.min_samples) + " samples");
  }
  const auto [lo, hi] = std::minmax_element(d.begin(), d.end());
  if (!(*lo > 0) || !(*hi < 1)) throw ArgumentError("distances must lie in (0, 1)");
  if (std::log10(*hi / *lo) < opts.min_decades) throw ArgumentError("samples span too few decades");

  const Eigen::Index m = static_cast<Eigen::Index>(d.size());
  Eigen::MatrixXd X(m, 3);
  Eigen::VectorXd y(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    if (!(abs_u[i] > 0)) throw ArgumentError("profile values must be positive");
    X(i, 0) = std::log(-std::log(d[i]));
    X(i, 1) = 1;
    X(i, 2) = d[i];
    y(i) = std::log(abs_u[i] / d[i]);
  }
  const Eigen::Vector3d c = X.colPivHouseholderQr().solve(y);
  LogFit fit;
  fit.beta_raw = c(0);
  fit.beta = std::clamp(c(0), 0.0, static_cast<double>(opts.dimension));
  fit.C = std::exp(c(1));
  fit.gamma = c(2);
  fit.residual = std::sqrt((X * c - y).squaredNorm() / static_cast<double>(m));
  return fit;
}

double GrowthProfile::fit_model(double dist) const {
  return fit.C * dist * std::pow(-std::log(dist), fit.beta_raw) * std::exp(fit.gamma * dist);
}

BoundaryPoint edge_midpoint(const ConvexDomain& domain, int edge) {
  if (!domain.is_polygon()) throw ArgumentError("edge midpoints need a polygon");
  if (edge < 0 || edge >= static_cast<int>(domain.edge_count())) throw ArgumentError("edge index out of range");
  BoundaryPoint bp;
  bp.point = domain.edge(edge).midpoint();
  bp.outward_normal = domain.edge_normal(edge);
  bp.edge = edge;
  bp.parameter = 0.5;
  return bp;
}

GrowthProfile profile_normal(const GridFunction& u, const BoundaryPoint& where, const ProfileOptions& opts) {
  const Grid& g = *u.grid;
  const ConvexDomain& dom = g.domain();
  if (opts.samples < 2) throw ArgumentError("profile needs at least two samples");
  GrowthProfile pr;
  pr.boundary_point = where.point;
  pr.inward_normal = -where.outward_normal.normalized();
  const double dmin = 2 * g.spacing();
  const Point start = where.point + dmin * pr.inward_normal;
  if (!contains(dom, start)) throw GeometryError("inward normal leaves the domain before 2h");
  double dmax = std::min({opts.s, dom.diameter() / 4, std::exp(-1.0)});
  dmax = std::min(dmax, dmin + ray_exit(dom, start, pr.inward_normal) * (1 - 1e-9));
  if (!(dmax > dmin)) throw GeometryError("profile window is empty");

  const int n = opts.samples;
  for (int i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / (n - 1);
    const double d = dmax * std::pow(dmin / dmax, t);
    pr.d.push_back(d);
    pr.abs_u.push_back(std::abs(interpolate(u, where.point + d * pr.inward_normal)));
  }
  pr.fit = fit_log_exponent(pr.d, pr.abs_u, opts.fit);
  return pr;
}

Eigen::Vector3d nodal_hessian(const GridFunction& u, int node) {
  const double uxx = second_difference(u, node, 0);
  const double uyy = second_difference(u, node, 1);
  const double d1 = second_difference(u, node, 2);  // (uxx + 2uxy + uyy) / 2
  const double d2 = second_difference(u, node, 3);  // (uxx - 2uxy + uyy) / 2
  return {uxx, 0.5 * (d1 - d2), uyy};
}

W21Report w21_integral(const GridFunction& u) {
  const Grid& g = *u.grid;
  W21Report rep;
  rep.nodes = g.size();
  std::vector<double> norms(g.size()), laps(g.size());
  double scale = 0;
  for (int i = 0; i < g.size(); ++i) {
    const Eigen::Vector3d H = nodal_hessian(u, i);
    norms[i] = std::sqrt(H(0) * H(0) + 2 * H(1) * H(1) + H(2) * H(2));
    laps[i] = H(0) + H(2);
    rep.hessian_norm += norms[i] * g.cell_weight(i);
    rep.laplacian += laps[i] * g.cell_weight(i);
    scale = std::max(scale, std::abs(laps[i]));
    if (g.is_cut(i)) ++rep.cut_nodes;
  }
  int ok = 0;
  for (int i = 0; i < g.size(); ++i) ok += norms[i] <= laps[i] + 1e-6 * scale;
  rep.convex_fraction = g.size() ? static_cast<double>(ok) / g.size() : 1.0;
  rep.norm_excess = std::max(0.0, rep.hessian_norm - rep.laplacian);

  // One-sided normal derivative from values at depths delta and 2 delta.
  const double delta = 2 * g.spacing();
  for (const auto& b : boundary_samples(g.domain(), g.spacing())) {
    const double g1 = interpolate(u, b.point - delta * b.outward_normal);
    const double g2 = interpolate(u, b.point - 2 * delta * b.outward_normal);
    rep.flux += -(4 * g1 - g2) / (2 * delta) * b.weight;
  }
  rep.flux_mismatch = rep.flux != 0 ? std::abs(rep.laplacian - rep.flux) / std::abs(rep.flux) : 0.0;
  return rep;
}

ComparisonResult comparison_check(const GridFunction& u, const BarrierSpec& spec, double p, double K, double L,
                                  const ComparisonOptions& opts) {
  constexpr int n = 2;
  if (dimension(spec) != n) throw ArgumentError("planar solutions need a two-dimensional barrier");
  if (!(p >= 0 && p < n)) throw ArgumentError("comparison needs 0 <= p < n");
  if (!(K > 0) || !(L > 0)) throw ArgumentError("K and L must be positive");
  if (is_supersolution(spec)) throw ArgumentError("comparison needs a subsolution barrier");

  const Grid& g = *u.grid;
  const ConvexDomain& dom = g.domain();
  const double diam = dom.diameter();
  Region region;
  region.n = n;
  region.half_width = diam;
  region.xn_lo = 0;
  region.xn_hi = std::min(diam, xn_upper_limit(spec) * (1 - 1e-9));
  SubsolutionTarget target{SubsolutionTarget::Form::abs_power, p, K};
  VerifyOptions vo;
  vo.keep_samples = false;
  ComparisonResult res;
  res.verification = verify_subsolution(spec, region, target, opts.samples, opts.seed, vo);
  if (res.verification.verdict != Verdict::pass) {
    throw ArgumentError("barrier does not satisfy det D^2 v >= K|v|^p on the framed domain");
  }

  res.factor = std::pow(K / L, 1.0 / (p - n));
  const double tol = opts.tolerance * u.sup_norm();
  res.worst_margin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < g.size(); ++i) {
    const BoundaryFrame fr = boundary_frame(dom, g.node(i));
    const Point z = fr.to_frame(g.node(i));
    VectorX<double> x(2);
    x << z.x(), z.y();
    const double margin = res.factor * std::abs(eval<double>(spec, x)) - (-u.values[i]);
    if (margin < res.worst_margin) {
      res.worst_margin = margin;
      res.worst_node = i;
    }
    if (margin < -tol) ++res.violations;
  }
  res.holds = res.violations == 0;
  return res;
}

const char* to_string(BoundKind k) {
  switch (k) {
    case BoundKind::lipschitz_ii: return "lipschitz_ii";
    case BoundKind::log_upper: return "log_upper";
    case BoundKind::pow_2_over_n_minus_p: return "pow_2_over_n_minus_p";
  }
  return "?";
}

BoundKind parse_bound_kind(const std::string& s) {
  if (s == "lipschitz_ii") return BoundKind::lipschitz_ii;
  if (s == "log_upper") return BoundKind::log_upper;
  if (s == "pow_2_over_n_minus_p") return BoundKind::pow_2_over_n_minus_p;
  throw ArgumentError("unknown bound kind '" + s + "'");
}

BoundCheck pointwise_bound_check(const GridFunction& u, BoundKind kind, const RhsClass& rhs, double tolerance) {
  constexpr int n = 2;
  const Grid& g = *u.grid;
  const double D = g.domain().diameter();
  if (!(rhs.M > 0)) throw ArgumentError("M must be positive");

  // bound(i) = constant * profile(dist_i)
  std::function<double(double)> profile;
  BoundCheck out;
  switch (kind) {
    case BoundKind::lipschitz_ii: {
      if (rhs.kind != RhsClass::Kind::dist_power) throw ArgumentError("lipschitz_ii needs dist^p data");
      const double a = (2 + rhs.p) / n;
      if (!(a > 1)) throw ArgumentError("lipschitz_ii needs p > n - 2 so that a = (2+p)/n > 1");
      const double s = std::pow(rhs.M * std::pow(2.0, 1 - n) / a, 1.0 / n);
      out.constant = s * lipschitz_B(a, D);
      profile = [](double d) { return d; };
      break;
    }
    case BoundKind::log_upper: {
      if (rhs.kind != RhsClass::Kind::abs_power || rhs.p != n - 2) {
        throw ArgumentError("log_upper needs |u|^(n-2) data");
      }
      const BarrierSpec w = make_log_sub(n, D);
      const double K = proven_target(w, SubsolutionTarget::Form::abs_power).c;
      out.constant = std::pow(K / rhs.M, 1.0 / (rhs.p - n));
      profile = [w](double d) {
        VectorX<double> x(2);
        x << 0.0, d;
        return std::abs(eval<double>(w, x));
      };
      break;
    }
    case BoundKind::pow_2_over_n_minus_p: {
      const double alpha = 2 / (n - rhs.p);
      if (!(rhs.p > 0 && alpha < 1)) {
        throw ArgumentError("pow_2_over_n_minus_p needs 0 < p < n - 2, which is empty for n = 2");
      }
      break;
    }
  }

  out.nodes = g.size();
  const double sup = u.sup_norm();
  if (sup == 0) return out;
  for (int i = 0; i < g.size(); ++i) {
    const double bound = out.constant * profile(g.distance(i));
    const double a = std::abs(u.values[i]);
    out.worst_ratio = std::max(out.worst_ratio, a / bound);
    if (a - bound > tolerance * sup) ++out.violations;
  }
  return out;
}

}  // namespace malab
