#pragma once

#include "malab/ma_solver.hpp"

#include <optional>
#include <variant>
#include <vector>

namespace malab {

/// R(u) = sum |u_i| m_i w_i / sum |u_i|^3 w_i with clipped cell areas w_i.
/// Throws ArgumentError when the denominator vanishes.
double rayleigh_quotient(const GridFunction& u, const GridFunction& ma_values);

/// Starting data for the inverse iteration.
struct QuadraticStart {};  // |x - c|^2 - r^2 on a disc, with MA measure 4
struct DistPowerStart {
  double exponent = 0.5;  // u0 = -dist^exponent, MA values from discrete_ma
};
struct ValuesStart {
  GridFunction u;
  std::optional<GridFunction> ma;  // discrete_ma(u) when absent
};
using StartSpec = std::variant<QuadraticStart, DistPowerStart, ValuesStart>;

struct EigenOptions {
  double h = 1.0 / 32;
  double tolerance = 1e-6;
  int max_iterations = 200;
  double ceiling_factor = 10;
  bool keep_iterates = false;
  SolveOptions solve;
};

/// Iterate u_k and its quotient R_k = R(u_k).
struct RayleighState {
  int k = 0;
  GridFunction u;
  double R = 0;
};

struct EigenReport {
  double lambda = 0;
  GridFunction eigenfunction;  // sup-norm 1, nonpositive
  std::vector<double> history;  // R_0, R_1, ...
  std::vector<double> change;   // sup-norm change of normalized iterates, from k = 1
  std::vector<RayleighState> iterates;  // filled when keep_iterates is set
  bool converged = false;
  int iterations = 0;
  double ceiling = 0;
  double h = 0;
  int nodes = 0;
  int stencil_width = 1;
};

/// u_{k+1} solves MA_h(u) = R(u_k)|u_k|^2 with zero boundary values. Throws
/// InstabilityError when the quotients leave ceiling_factor*max(R_0, R_k).
EigenReport inverse_iteration(const ConvexDomain& domain, const StartSpec& start, const EigenOptions& opts = {});
EigenReport inverse_iteration(const GridPtr& grid, const StartSpec& start, const EigenOptions& opts = {});

struct PowerOptions {
  double h = 1.0 / 32;
  double tolerance = 1e-6;
  int max_iterations = 200;
  /// Under-relaxation; unset picks 0.5 for p >= 1 and 1 for p < 1.
  std::optional<double> omega;
  SolveOptions solve;
};

struct PowerSolution {
  GridFunction u;
  SolveReport report;  // last inner solve
  int iterations = 0;
  double change = 0;
  /// M ||u||^(p-2) |Omega|^2, bounded above and below by the theory.
  double realized_constant = 0;
};

/// Solves MA_h(u) = M |u|^p, 0 <= p < 2, by relaxed fixed-point iteration.
PowerSolution solve_power(const ConvexDomain& domain, double p, double M, const PowerOptions& opts = {});
PowerSolution solve_power(const GridPtr& grid, double p, double M, const PowerOptions& opts = {});

}  // namespace malab
