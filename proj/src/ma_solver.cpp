#include "malab/ma_solver.hpp"

#include "malab/errors.hpp"
#include "malab/parallel.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <unsupported/Eigen/IterativeSolvers>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

namespace malab {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using SparseLU = Eigen::SparseLU<SpMat>;

// Preconditioner that applies an LU factorization of an earlier Jacobian.
class StaleLU {
 public:
  StaleLU() = default;
  template <class M>
  explicit StaleLU(const M&) {}
  template <class M>
  StaleLU& analyzePattern(const M&) { return *this; }
  template <class M>
  StaleLU& factorize(const M&) { return *this; }
  template <class M>
  StaleLU& compute(const M&) { return *this; }
  template <class R>
  Eigen::VectorXd solve(const R& b) const { return lu->solve(Eigen::VectorXd(b)); }
  Eigen::ComputationInfo info() const { return Eigen::Success; }

  const SparseLU* lu = nullptr;
};

double value_at(const Eigen::VectorXd& u, int k) { return k >= 0 ? u[k] : 0.0; }

struct DirectionalDiff {
  double value;
  double c_plus, c_minus, c_center;
  int n_plus, n_minus;
};

DirectionalDiff directional(const Grid& g, const Eigen::VectorXd& u, int node, int d) {
  const auto w = g.weights(node, d);
  DirectionalDiff r{0, w.c_plus, w.c_minus, w.c_center, g.arm(node, d, +1).neighbor, g.arm(node, d, -1).neighbor};
  r.value = w.c_plus * value_at(u, r.n_plus) + w.c_minus * value_at(u, r.n_minus) - w.c_center * u[node];
  return r;
}

double pos(double x) { return x > 0 ? x : 0.0; }

double ma_at(const Grid& g, const Eigen::VectorXd& u, int node) {
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k < g.pair_count(); ++k) {
    const double a = directional(g, u, node, 2 * k).value;
    const double b = directional(g, u, node, 2 * k + 1).value;
    best = std::min(best, pos(a) * pos(b));
  }
  return best;
}

double pair_equation(double a, double b, double f) { return (a + b) - std::sqrt((a - b) * (a - b) + 4 * f); }

struct Residuals {
  Eigen::VectorXd G;
  std::vector<int> active;
  double ma_residual = 0;
};

Residuals evaluate(const Grid& g, const Eigen::VectorXd& u, const Eigen::VectorXd& f, int threads) {
  const int n = g.size();
  Residuals r;
  r.G.resize(n);
  r.active.resize(n);
  std::vector<double> ma_err(n);
  parallel_for(n, threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const int node = static_cast<int>(i);
      double best_g = std::numeric_limits<double>::infinity();
      double best_ma = std::numeric_limits<double>::infinity();
      int best_k = 0;
      for (int k = 0; k < g.pair_count(); ++k) {
        const double a = directional(g, u, node, 2 * k).value;
        const double bb = directional(g, u, node, 2 * k + 1).value;
        const double gk = pair_equation(a, bb, f[node]);
        if (gk < best_g) {
          best_g = gk;
          best_k = k;
        }
        best_ma = std::min(best_ma, pos(a) * pos(bb));
      }
      r.G[node] = best_g;
      r.active[node] = best_k;
      ma_err[node] = std::abs(best_ma - f[node]);
    }
  });
  for (double e : ma_err) r.ma_residual = std::max(r.ma_residual, e);
  return r;
}

void add_row(std::vector<Eigen::Triplet<double>>& t, int row, const DirectionalDiff& d, double scale) {
  t.emplace_back(row, row, -scale * d.c_center);
  if (d.n_plus >= 0) t.emplace_back(row, d.n_plus, scale * d.c_plus);
  if (d.n_minus >= 0) t.emplace_back(row, d.n_minus, scale * d.c_minus);
}

SpMat jacobian(const Grid& g, const Eigen::VectorXd& u, const Eigen::VectorXd& f, const std::vector<int>& active,
               int threads) {
  const int n = g.size();
  // Explicit zeros for every stencil entry keep the sparsity pattern fixed.
  const std::size_t slot = 3 * static_cast<std::size_t>(g.direction_count()) + 6;
  std::vector<Eigen::Triplet<double>> trip(static_cast<std::size_t>(n) * slot);
  std::vector<int> counts(n);
  parallel_for(n, threads, [&](std::size_t b, std::size_t e) {
    std::vector<Eigen::Triplet<double>> local;
    for (std::size_t i = b; i < e; ++i) {
      const int node = static_cast<int>(i);
      local.clear();
      for (int d = 0; d < g.direction_count(); ++d) {
        const DirectionalDiff z = directional(g, u, node, d);
        add_row(local, node, z, 0.0);
      }
      const int k = active[node];
      const DirectionalDiff da = directional(g, u, node, 2 * k);
      const DirectionalDiff db = directional(g, u, node, 2 * k + 1);
      const double s = std::sqrt((da.value - db.value) * (da.value - db.value) + 4 * f[node]);
      const double ga = s > 0 ? 1 - (da.value - db.value) / s : 1.0;
      const double gb = s > 0 ? 1 + (da.value - db.value) / s : 1.0;
      add_row(local, node, da, ga);
      add_row(local, node, db, gb);
      std::copy(local.begin(), local.end(), trip.begin() + i * slot);
      counts[i] = static_cast<int>(local.size());
    }
  });
  std::vector<Eigen::Triplet<double>> all;
  all.reserve(trip.size());
  for (int i = 0; i < n; ++i) {
    auto first = trip.begin() + static_cast<std::size_t>(i) * slot;
    all.insert(all.end(), first, first + counts[i]);
  }
  SpMat J(n, n);
  J.setFromTriplets(all.begin(), all.end());
  J.makeCompressed();
  return J;
}

// Linear start: D_x u + D_y u = 2 sqrt(f), a convex function below the solution.
Eigen::VectorXd poisson_guess(const Grid& g, const Eigen::VectorXd& f) {
  const int n = g.size();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(n) * 5);
  Eigen::VectorXd b(n);
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    add_row(trip, i, directional(g, zero, i, 0), 1.0);
    add_row(trip, i, directional(g, zero, i, 1), 1.0);
    b[i] = 2 * std::sqrt(f[i]);
  }
  SpMat L(n, n);
  L.setFromTriplets(trip.begin(), trip.end());
  Eigen::SparseLU<SpMat> lu;
  lu.compute(L);
  if (lu.info() != Eigen::Success) throw std::runtime_error("Poisson start factorization failed");
  return lu.solve(b);
}

bool scheme_is_monotone(const Grid& g) {
  for (int i = 0; i < g.size(); ++i) {
    for (int d = 0; d < g.direction_count(); ++d) {
      const auto w = g.weights(i, d);
      if (!(w.c_plus > 0 && w.c_minus > 0 && w.c_center > 0) || !std::isfinite(w.c_center)) return false;
    }
  }
  return true;
}

}  // namespace

struct SolveWorkspace::Impl {
  GridPtr grid;  // held so that the address cannot be reused
  std::unique_ptr<SparseLU> lu;

  // Newton direction for J delta = rhs.
  Eigen::VectorXd direction(const GridPtr& g, const SpMat& J, const Eigen::VectorXd& rhs) {
    if (grid == g && lu) {
      Eigen::GMRES<SpMat, StaleLU> krylov;
      krylov.set_restart(40);
      krylov.preconditioner().lu = lu.get();
      krylov.setTolerance(1e-6);
      krylov.setMaxIterations(40);
      krylov.compute(J);
      Eigen::VectorXd x = krylov.solve(rhs);
      if (krylov.info() == Eigen::Success && x.allFinite()) return x;
    }
    if (grid != g || !lu) {
      lu = std::make_unique<SparseLU>();
      lu->analyzePattern(J);
      grid = g;
    }
    lu->factorize(J);
    if (lu->info() != Eigen::Success) {
      lu.reset();
      return {};
    }
    return lu->solve(rhs);
  }
};

SolveWorkspace::SolveWorkspace() : impl_(std::make_unique<Impl>()) {}
SolveWorkspace::~SolveWorkspace() = default;

namespace {

void newton(const GridPtr& gp, const Eigen::VectorXd& f, Eigen::VectorXd& u, const SolveOptions& opts, double scale,
            SolveReport& rep, SolveWorkspace::Impl& ws) {
  const Grid& g = *gp;
  const int max_steps = opts.max_sweeps > 0 ? opts.max_sweeps : 200;
  Residuals r = evaluate(g, u, f, opts.threads);
  for (int step = 0;; ++step) {
    rep.residual = r.ma_residual / scale;
    rep.sweeps = step;
    if (rep.residual <= opts.tolerance) return;
    if (step >= max_steps) {
      throw IterationLimitError("Newton iteration did not reach the residual tolerance", rep.residual);
    }
    const SpMat J = jacobian(g, u, f, r.active, opts.threads);
    const Eigen::VectorXd delta = ws.direction(gp, J, -r.G);
    if (delta.size() != g.size()) throw IterationLimitError("singular Newton Jacobian", rep.residual);
    const double g0 = r.G.norm();
    double t = 1;
    for (;;) {
      Eigen::VectorXd trial = u + t * delta;
      Residuals rt = evaluate(g, trial, f, opts.threads);
      const bool last = t * 0.5 < opts.damping_floor;
      if (rt.G.norm() <= (1 - 1e-4 * t) * g0 || last) {
        u = std::move(trial);
        r = std::move(rt);
        break;
      }
      t *= 0.5;
    }
  }
}

void gauss_seidel(const Grid& g, const Eigen::VectorXd& f, Eigen::VectorXd& u, const SolveOptions& opts,
                  double scale, SolveReport& rep) {
  const int max_sweeps = opts.max_sweeps > 0 ? opts.max_sweeps : 200000;
  std::vector<int> colors[4];
  for (int i = 0; i < g.size(); ++i) {
    const auto& ij = g.lattice_index(i);
    colors[(ij.x() & 1) + 2 * (ij.y() & 1)].push_back(i);
  }
  for (int sweep = 0;; ++sweep) {
    double res = 0;
    for (int i = 0; i < g.size(); ++i) res = std::max(res, std::abs(ma_at(g, u, i) - f[i]));
    rep.residual = res / scale;
    rep.sweeps = sweep;
    if (rep.residual <= opts.tolerance) return;
    if (sweep >= max_sweeps) {
      throw IterationLimitError("Gauss-Seidel did not reach the residual tolerance", rep.residual);
    }
    for (const auto& color : colors) {
      parallel_for(color.size(), opts.threads, [&](std::size_t b, std::size_t e) {
        for (std::size_t c = b; c < e; ++c) {
          const int node = color[c];
          double best = std::numeric_limits<double>::infinity();
          for (int k = 0; k < g.pair_count(); ++k) {
            const DirectionalDiff da = directional(g, u, node, 2 * k);
            const DirectionalDiff db = directional(g, u, node, 2 * k + 1);
            // Center values at which each factor vanishes.
            const double P = (da.value + da.c_center * u[node]) / da.c_center;
            const double Q = (db.value + db.c_center * u[node]) / db.c_center;
            const double root =
                0.5 * ((P + Q) - std::sqrt((P - Q) * (P - Q) + 4 * f[node] / (da.c_center * db.c_center)));
            best = std::min(best, root);
          }
          u[node] = best;
        }
      });
    }
  }
}

}  // namespace

const char* to_string(SolveMethod m) {
  return m == SolveMethod::gauss_seidel ? "gauss_seidel" : "damped_newton";
}

GridFunction discrete_ma(const GridFunction& u, int threads) {
  const Grid& g = *u.grid;
  GridFunction out(u.grid);
  parallel_for(g.size(), threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) out.values[i] = ma_at(g, u.values, static_cast<int>(i));
  });
  return out;
}

Solution solve_dirichlet(const GridFunction& f, const SolveOptions& opts, const GridFunction* guess,
                         SolveWorkspace* workspace) {
  if (!(opts.tolerance > 0)) throw ArgumentError("solve tolerance must be positive");
  if (opts.stencil_width != 1 && opts.stencil_width != 2) throw ArgumentError("stencil width must be 1 or 2");
  const Grid& g = *f.grid;
  if (f.values.size() != g.size()) throw ArgumentError("right-hand side does not match its grid");
  if (!f.values.allFinite() || (f.values.array() < 0).any()) {
    throw ArgumentError("right-hand side must be finite and nonnegative");
  }
  const auto start = std::chrono::steady_clock::now();
  Solution sol{GridFunction(f.grid), {}};
  sol.report.method = opts.method;
  sol.report.monotone = scheme_is_monotone(g);
  const double fmax = f.values.maxCoeff();
  const double scale = std::max(1.0, fmax);

  if (fmax > 0) {
    Eigen::VectorXd u;
    if (guess && guess->grid == f.grid) {
      u = guess->values;
    } else {
      u = poisson_guess(g, f.values);
    }
    if (opts.method == SolveMethod::damped_newton) {
      SolveWorkspace local;
      newton(f.grid, f.values, u, opts, scale, sol.report, workspace ? workspace->impl() : local.impl());
    } else {
      gauss_seidel(g, f.values, u, opts, scale, sol.report);
    }
    sol.u.values = std::move(u);
  }
  sol.report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return sol;
}

AffineCheck affine_image_check(const GridFunction& u, const std::function<double(const Point&)>& rhs,
                               const Matrix2& A, const SolveOptions& opts) {
  const double det = A.determinant();
  if (!(std::abs(det) > 0) || !A.allFinite()) throw ArgumentError("affine map must be invertible");
  const Grid& g = *u.grid;
  const Matrix2 inv = A.inverse();
  const ConvexDomain image = affine_image(g.domain(), A);
  const GridPtr ig = build_grid(image, g.spacing(), g.width());
  const GridFunction f = sample(ig, [&](const Point& y) { return rhs(inv * y) / (det * det); });
  const Solution s = solve_dirichlet(f, opts);
  AffineCheck out;
  out.report = s.report;
  for (int i = 0; i < ig->size(); ++i) {
    const double ref = interpolate(u, inv * ig->node(i));
    out.discrepancy = std::max(out.discrepancy, std::abs(s.u.values[i] - ref));
    ++out.compared;
  }
  return out;
}

}  // namespace malab
