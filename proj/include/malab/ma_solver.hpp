#pragma once

#include "malab/grid.hpp"

#include <functional>
#include <memory>

namespace malab {

enum class SolveMethod { gauss_seidel, damped_newton };

struct SolveOptions {
  /// Max-norm residual of MA_h(u) - f, relative to max(1, max f).
  double tolerance = 1e-8;
  /// Sweeps (Gauss-Seidel) or Newton steps; 0 selects a method default.
  int max_sweeps = 0;
  /// Used by callers that build their own grids.
  int stencil_width = 1;
  SolveMethod method = SolveMethod::damped_newton;
  /// Smallest Newton step length tried by the backtracking line search.
  double damping_floor = 1.0 / 64;
  int threads = 1;
};

struct SolveReport {
  double residual = 0;
  int sweeps = 0;
  bool monotone = true;
  double wall_time = 0;  // seconds; not part of any deterministic output
  SolveMethod method = SolveMethod::damped_newton;
};

struct Solution {
  GridFunction u;
  SolveReport report;
};

/// Reusable linear-algebra state for a sequence of solves on one grid. The
/// last Newton factorization preconditions later Jacobians (GMRES) and is
/// refreshed when the Krylov iteration stalls.
class SolveWorkspace {
 public:
  SolveWorkspace();
  ~SolveWorkspace();
  SolveWorkspace(const SolveWorkspace&) = delete;
  SolveWorkspace& operator=(const SolveWorkspace&) = delete;

  struct Impl;
  Impl& impl() { return *impl_; }

 private:
  std::unique_ptr<Impl> impl_;
};

/// MA_h(u) = min over direction pairs of (D_e u)^+ (D_e_perp u)^+.
GridFunction discrete_ma(const GridFunction& u, int threads = 1);

/// Convex solution of MA_h(u) = f with zero boundary trace.
///
/// Each pair equation is written as (a + b) - sqrt((a - b)^2 + 4f) = 0, which
/// selects a, b >= 0 with ab = f and is monotone in the neighbours; the
/// Newton Jacobian is then an M-matrix. Throws IterationLimitError when the
/// residual target is not reached. `guess` seeds the Newton iteration.
Solution solve_dirichlet(const GridFunction& f, const SolveOptions& opts = {}, const GridFunction* guess = nullptr,
                         SolveWorkspace* workspace = nullptr);

const char* to_string(SolveMethod m);

struct AffineCheck {
  double discrepancy = 0;  // max |u_image(y) - u(A^{-1} y)| over image nodes
  int compared = 0;
  SolveReport report;
};

/// Re-solves on the image domain A*Omega with right-hand side
/// rhs(A^{-1} y) / det(A)^2 and compares against u transported by A.
AffineCheck affine_image_check(const GridFunction& u, const std::function<double(const Point&)>& rhs,
                               const Matrix2& A, const SolveOptions& opts = {});

}  // namespace malab
