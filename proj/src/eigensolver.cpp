#include "malab/eigensolver.hpp"

#include "malab/errors.hpp"

#include <algorithm>
#include <cmath>

namespace malab {

double rayleigh_quotient(const GridFunction& u, const GridFunction& ma_values) {
  if (u.grid != ma_values.grid) throw ArgumentError("u and MA values live on different grids");
  const Grid& g = *u.grid;
  if ((ma_values.values.array() < 0).any()) throw ArgumentError("MA values must be nonnegative");
  double num = 0, den = 0;
  for (int i = 0; i < g.size(); ++i) {
    const double a = std::abs(u.values[i]);
    num += a * ma_values.values[i] * g.cell_weight(i);
    den += a * a * a * g.cell_weight(i);
  }
  if (!(den > 0)) throw ArgumentError("Rayleigh quotient of the zero function");
  if (!(num > 0)) throw ArgumentError("MA values vanish on the support of u");
  return num / den;
}

namespace {

std::pair<GridFunction, GridFunction> initial_data(const GridPtr& grid, const StartSpec& start, int threads) {
  const ConvexDomain& dom = grid->domain();
  return std::visit(
      [&](const auto& s) -> std::pair<GridFunction, GridFunction> {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, QuadraticStart>) {
          if (!dom.is_disc()) throw ArgumentError("quadratic start needs a disc domain");
          const double r2 = dom.radius() * dom.radius();
          GridFunction u = sample(grid, [&](const Point& x) { return (x - dom.center()).squaredNorm() - r2; });
          GridFunction m(grid, Eigen::VectorXd::Constant(grid->size(), 4.0));
          return {u, m};
        } else if constexpr (std::is_same_v<T, DistPowerStart>) {
          if (!(s.exponent > 0)) throw ArgumentError("start exponent must be positive");
          GridFunction u(grid);
          for (int i = 0; i < grid->size(); ++i) u.values[i] = -std::pow(grid->distance(i), s.exponent);
          return {u, discrete_ma(u, threads)};
        } else {
          if (s.u.grid != grid) throw ArgumentError("start values live on a different grid");
          return {s.u, s.ma ? *s.ma : discrete_ma(s.u, threads)};
        }
      },
      start);
}

// MA_h is 2-homogeneous, so solving with f / max f and rescaling makes the
// residual tolerance relative however small the data are.
Solution solve_normalized(const GridFunction& f, const SolveOptions& opts, const GridFunction* guess,
                          SolveWorkspace* ws) {
  const double fmax = f.values.maxCoeff();
  if (!(fmax > 0)) return solve_dirichlet(f, opts, guess, ws);
  const double sigma = std::sqrt(fmax);
  const GridFunction fs(f.grid, f.values / fmax);
  Solution s;
  if (guess) {
    const GridFunction gs(guess->grid, guess->values / sigma);
    s = solve_dirichlet(fs, opts, &gs, ws);
  } else {
    s = solve_dirichlet(fs, opts, nullptr, ws);
  }
  s.u.values *= sigma;
  return s;
}

// Inner solves only need to be accurate relative to the outer change.
SolveOptions inner_options(const SolveOptions& base, double outer_change) {
  SolveOptions o = base;
  o.tolerance = std::max(base.tolerance, std::min(1e-3, 1e-2 * outer_change));
  return o;
}

// Rescales a warm start so that its MA_h matches f in a |u|-weighted mean.
GridFunction matched_guess(const GridFunction& u, const GridFunction& f, int threads) {
  const GridFunction m = discrete_ma(u, threads);
  const Eigen::VectorXd w = u.values.cwiseAbs();
  const double num = w.dot(f.values), den = w.dot(m.values);
  if (!(num > 0 && den > 0)) return u;
  return GridFunction(u.grid, u.values * std::sqrt(num / den));
}

Eigen::VectorXd normalized(const Eigen::VectorXd& v) {
  const double n = v.cwiseAbs().maxCoeff();
  return n > 0 ? Eigen::VectorXd(v / n) : v;
}

}  // namespace

EigenReport inverse_iteration(const ConvexDomain& domain, const StartSpec& start, const EigenOptions& opts) {
  return inverse_iteration(build_grid(domain, opts.h, opts.solve.stencil_width), start, opts);
}

EigenReport inverse_iteration(const GridPtr& grid, const StartSpec& start, const EigenOptions& opts) {
  if (!(opts.tolerance > 0) || opts.max_iterations < 1) throw ArgumentError("invalid eigen options");
  EigenReport rep;
  rep.h = grid->spacing();
  rep.nodes = grid->size();
  rep.stencil_width = grid->width();

  auto [u, m] = initial_data(grid, start, opts.solve.threads);
  double R = rayleigh_quotient(u, m);
  const double R0 = R;
  rep.history.push_back(R);
  if (opts.keep_iterates) rep.iterates.push_back({0, u, R});

  GridFunction f(grid);
  SolveWorkspace ws;
  double last_change = 1;
  for (int k = 1; k <= opts.max_iterations; ++k) {
    f.values = R * u.values.array().square();
    const GridFunction guess = matched_guess(u, f, opts.solve.threads);
    Solution s = solve_normalized(f, inner_options(opts.solve, last_change), k > 1 ? &guess : nullptr, &ws);
    const double R_next = rayleigh_quotient(s.u, f);
    const double du = (normalized(s.u.values) - normalized(u.values)).cwiseAbs().maxCoeff();
    const double dR = std::abs(R_next - R) / R_next;
    last_change = std::max(du, dR);
    u = std::move(s.u);
    R = R_next;
    rep.history.push_back(R);
    rep.change.push_back(du);
    rep.iterations = k;
    if (opts.keep_iterates) rep.iterates.push_back({k, u, R});

    rep.ceiling = opts.ceiling_factor * std::max(R0, R);
    const double peak = *std::max_element(rep.history.begin(), rep.history.end());
    if (!std::isfinite(R) || peak > rep.ceiling) {
      throw InstabilityError("Rayleigh quotients exceeded the ceiling " + std::to_string(rep.ceiling));
    }
    if (dR <= opts.tolerance && du <= opts.tolerance) {
      rep.converged = true;
      break;
    }
  }
  rep.lambda = R;
  rep.eigenfunction = GridFunction(grid, normalized(u.values));
  return rep;
}

PowerSolution solve_power(const ConvexDomain& domain, double p, double M, const PowerOptions& opts) {
  return solve_power(build_grid(domain, opts.h, opts.solve.stencil_width), p, M, opts);
}

PowerSolution solve_power(const GridPtr& grid, double p, double M, const PowerOptions& opts) {
  constexpr double n = 2;
  if (!(p >= 0)) throw ArgumentError("power exponent must be nonnegative");
  if (p >= n) throw ArgumentError("p >= 2 is the eigenvalue case; use inverse_iteration");
  if (!(M > 0) || !std::isfinite(M)) throw ArgumentError("M must be positive");
  const double omega = opts.omega.value_or(p >= 1 ? 0.5 : 1.0);
  if (!(omega > 0 && omega <= 1)) throw ArgumentError("relaxation must lie in (0, 1]");

  PowerSolution out;
  GridFunction f(grid, Eigen::VectorXd::Constant(grid->size(), M));
  SolveWorkspace ws;
  Solution s = solve_normalized(f, opts.solve, nullptr, &ws);
  GridFunction u = s.u;
  out.report = s.report;
  out.iterations = 1;
  if (p > 0) {
    double last_change = 1;
    for (int j = 1;; ++j) {
      f.values = M * u.values.cwiseAbs().array().pow(p);
      const GridFunction guess = matched_guess(u, f, opts.solve.threads);
      s = solve_normalized(f, inner_options(opts.solve, last_change), &guess, &ws);
      Eigen::VectorXd next = (1 - omega) * u.values + omega * s.u.values;
      out.change = (next - u.values).cwiseAbs().maxCoeff() / next.cwiseAbs().maxCoeff();
      u.values = std::move(next);
      last_change = out.change;
      out.report = s.report;
      out.iterations = j + 1;
      if (out.change <= opts.tolerance) break;
      if (j >= opts.max_iterations) {
        throw IterationLimitError("power iteration did not converge", out.change);
      }
    }
  }
  out.u = u;
  const double area = grid->domain().area();
  out.realized_constant = M * std::pow(u.sup_norm(), p - n) * area * area;
  return out;
}

}  // namespace malab
