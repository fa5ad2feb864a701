#pragma once

// Explicit sub- and supersolutions of degenerate Monge-Ampere equations in a
// boundary-adapted frame x = (x', x_n), domain in the upper half-space.
//
// Evaluation is templated on the scalar so that the same closed forms can be
// run in extended precision by finite-difference oracles.

#include "malab/errors.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

namespace malab {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// v(x) = x_n^a (|x'|^2 + A) - B x_n, globally Lipschitz convex subsolution.
struct LipschitzSub {
  int n;
  double a;
  double D;
};

/// w(x) = x_n^alpha (|x'|^2 - C_alpha), Holder convex subsolution.
struct PowerSub {
  int n;
  double alpha;
  double D;
};

/// w(x) = f_{(n-2)/2}(x_n/s)(|x'|^2 - D^2) - E f_{n/2}(x_n/s), f_b(t) = t(-log t)^b.
struct LogSub {
  int n;
  double D;
};

/// v(x) = g(x_n)(|x'|^2 - 1), g(t) = t(-log t)^{1/n} - t, for 0 < x_n < 1/e.
struct LogSuper {
  int n;
};

/// w(x) = g(x_n/(e s))(|x'|^2 - s^2) on the cylinder |x'| < s, 0 < x_n < s.
struct FlatLogSuper {
  int n;
  double s;
};

using BarrierSpec = std::variant<LipschitzSub, PowerSub, LogSub, LogSuper, FlatLogSuper>;

/// Validating constructors; throw ArgumentError on bad parameters.
BarrierSpec make_lipschitz_sub(int n, double a, double D);
BarrierSpec make_power_sub(int n, double alpha, double D);
BarrierSpec make_log_sub(int n, double D);
BarrierSpec make_log_super(int n);
BarrierSpec make_flat_log_super(int n, double s);
void validate(const BarrierSpec& spec);

std::string variant_name(const BarrierSpec& spec);
int dimension(const BarrierSpec& spec);
bool is_supersolution(const BarrierSpec& spec);

// Constants of the constructions.
inline double lipschitz_A(double a, double D) { return (1 + (a + 1) * D * D) / (a - 1); }
inline double lipschitz_B(double a, double D) { return std::pow(D, a - 1) * (lipschitz_A(a, D) + D * D); }
inline double power_C(double alpha, double D) { return (1 + 2 * D * D) / (alpha * (1 - alpha)); }
inline double log_sub_E(double D) { return 1 + 4 * D * D; }
inline double log_sub_s(int n, double D) { return std::exp(2.0 * n) * D; }
/// Exponent a = 2/n + (n-1)^2/n^2 used for the inverse Hessian determinant barrier.
inline double abreu_exponent(int n) { return 2.0 / n + double(n - 1) * (n - 1) / (double(n) * n); }

/// Largest x_n (exclusive) at which the variant is defined; infinity if unbounded.
double xn_upper_limit(const BarrierSpec& spec);

namespace detail {

template <typename Scalar>
Scalar neg_log(Scalar t) {
  using std::log;
  return -log(t);
}

// f_b(t) = t L^b with L = -log t, and its first two derivatives.
template <typename Scalar>
struct LogPower {
  Scalar f, d1, d2;
};

template <typename Scalar>
LogPower<Scalar> log_power(Scalar t, Scalar b) {
  using std::pow;
  const Scalar L = neg_log(t);
  LogPower<Scalar> r;
  r.f = t * pow(L, b);
  if (b == Scalar(0)) {
    r.d1 = Scalar(1);
    r.d2 = Scalar(0);
    return r;
  }
  r.d1 = pow(L, b) - b * pow(L, b - 1);
  r.d2 = -(b / t) * pow(L, b - 1) - (b * (Scalar(1) - b) / t) * pow(L, b - 2);
  return r;
}

// g(t) = t L^b - t.
template <typename Scalar>
LogPower<Scalar> log_power_minus_linear(Scalar t, Scalar b) {
  LogPower<Scalar> r = log_power(t, b);
  r.f -= t;
  r.d1 -= Scalar(1);
  return r;
}

// Every variant has the separable structure
//   value = phi(x_n) * (|x'|^2 + k) + psi(x_n),
// so D^2 = [[2 phi I, 2 phi' x'], [2 phi' x'^T, phi'' (|x'|^2 + k) + psi'']].
template <typename Scalar>
struct Profile {
  Scalar phi, dphi, ddphi;
  Scalar psi, dpsi, ddpsi;
  Scalar k;
};

template <typename Scalar>
void require_domain(bool ok, const char* what) {
  if (!ok) throw DomainError(what);
}

template <typename Scalar>
Profile<Scalar> profile(const BarrierSpec& spec, Scalar xn) {
  using std::exp;
  using std::pow;
  Profile<Scalar> p{};
  return std::visit(
      [&](const auto& v) -> Profile<Scalar> {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, LipschitzSub>) {
          require_domain<Scalar>(xn > Scalar(0), "LipschitzSub needs x_n > 0");
          const Scalar a = Scalar(v.a);
          p.phi = pow(xn, a);
          p.dphi = a * pow(xn, a - 1);
          p.ddphi = a * (a - 1) * pow(xn, a - 2);
          p.k = Scalar(lipschitz_A(v.a, v.D));
          p.psi = -Scalar(lipschitz_B(v.a, v.D)) * xn;
          p.dpsi = -Scalar(lipschitz_B(v.a, v.D));
          p.ddpsi = Scalar(0);
        } else if constexpr (std::is_same_v<T, PowerSub>) {
          require_domain<Scalar>(xn > Scalar(0), "PowerSub needs x_n > 0");
          const Scalar al = Scalar(v.alpha);
          p.phi = pow(xn, al);
          p.dphi = al * pow(xn, al - 1);
          p.ddphi = al * (al - 1) * pow(xn, al - 2);
          p.k = -Scalar(power_C(v.alpha, v.D));
          p.psi = p.dpsi = p.ddpsi = Scalar(0);
        } else if constexpr (std::is_same_v<T, LogSub>) {
          const Scalar s = exp(Scalar(2 * v.n)) * Scalar(v.D);
          const Scalar y = xn / s;
          require_domain<Scalar>(xn > Scalar(0) && y < exp(Scalar(-2 * v.n)),
                                 "LogSub needs 0 < x_n/s < exp(-2n)");
          const Scalar al = Scalar(v.n - 2) / Scalar(2);
          const auto f = log_power(y, al);
          const auto f1 = log_power(y, al + Scalar(1));
          const Scalar E = Scalar(log_sub_E(v.D));
          p.phi = f.f;
          p.dphi = f.d1 / s;
          p.ddphi = f.d2 / (s * s);
          p.k = -Scalar(v.D) * Scalar(v.D);
          p.psi = -E * f1.f;
          p.dpsi = -E * f1.d1 / s;
          p.ddpsi = -E * f1.d2 / (s * s);
        } else if constexpr (std::is_same_v<T, LogSuper>) {
          require_domain<Scalar>(xn > Scalar(0) && xn < exp(Scalar(-1)), "LogSuper needs 0 < x_n < 1/e");
          const auto g = log_power_minus_linear(xn, Scalar(1) / Scalar(v.n));
          p.phi = g.f;
          p.dphi = g.d1;
          p.ddphi = g.d2;
          p.k = Scalar(-1);
          p.psi = p.dpsi = p.ddpsi = Scalar(0);
        } else {
          const Scalar es = exp(Scalar(1)) * Scalar(v.s);
          const Scalar t = xn / es;
          require_domain<Scalar>(xn > Scalar(0) && t < exp(Scalar(-1)), "FlatLogSuper needs 0 < x_n < s");
          const auto g = log_power_minus_linear(t, Scalar(1) / Scalar(v.n));
          p.phi = g.f;
          p.dphi = g.d1 / es;
          p.ddphi = g.d2 / (es * es);
          p.k = -Scalar(v.s) * Scalar(v.s);
          p.psi = p.dpsi = p.ddpsi = Scalar(0);
        }
        return p;
      },
      spec);
}

template <typename Scalar>
void check_point(const BarrierSpec& spec, const VectorX<Scalar>& x) {
  if (x.size() != dimension(spec)) throw ArgumentError("point dimension does not match barrier");
  if (!(x.allFinite())) throw DomainError("point is not finite");
}

}  // namespace detail

/// Closed-form value. x_n = 0 is taken by continuous extension (value 0).
template <typename Scalar>
Scalar eval(const BarrierSpec& spec, const VectorX<Scalar>& x) {
  detail::check_point(spec, x);
  const int n = static_cast<int>(x.size());
  const Scalar xn = x(n - 1);
  if (xn < Scalar(0)) throw DomainError("barrier evaluated below the boundary hyperplane");
  const Scalar limit = Scalar(xn_upper_limit(spec));
  if (!(xn < limit)) throw DomainError("barrier evaluated outside its validity region");
  if (xn == Scalar(0)) return Scalar(0);
  const auto p = detail::profile(spec, xn);
  const Scalar r2 = x.head(n - 1).squaredNorm();
  return p.phi * (r2 + p.k) + p.psi;
}

template <typename Scalar>
VectorX<Scalar> gradient(const BarrierSpec& spec, const VectorX<Scalar>& x) {
  detail::check_point(spec, x);
  const int n = static_cast<int>(x.size());
  const auto p = detail::profile(spec, x(n - 1));
  const Scalar r2 = x.head(n - 1).squaredNorm();
  VectorX<Scalar> g(n);
  g.head(n - 1) = Scalar(2) * p.phi * x.head(n - 1);
  g(n - 1) = p.dphi * (r2 + p.k) + p.dpsi;
  return g;
}

template <typename Scalar>
MatrixX<Scalar> hessian(const BarrierSpec& spec, const VectorX<Scalar>& x) {
  detail::check_point(spec, x);
  const int n = static_cast<int>(x.size());
  const auto p = detail::profile(spec, x(n - 1));
  const Scalar r2 = x.head(n - 1).squaredNorm();
  MatrixX<Scalar> H = MatrixX<Scalar>::Zero(n, n);
  H.topLeftCorner(n - 1, n - 1).diagonal().setConstant(Scalar(2) * p.phi);
  H.col(n - 1).head(n - 1) = Scalar(2) * p.dphi * x.head(n - 1);
  H.row(n - 1).head(n - 1) = H.col(n - 1).head(n - 1).transpose();
  H(n - 1, n - 1) = p.ddphi * (r2 + p.k) + p.ddpsi;
  return H;
}

/// The determinant expressions displayed for each construction (the exact
/// equality lines, before any lower or upper bound is applied).
template <typename Scalar>
Scalar hessian_det_closed(const BarrierSpec& spec, const VectorX<Scalar>& x) {
  using std::exp;
  using std::pow;
  detail::check_point(spec, x);
  const int n = static_cast<int>(x.size());
  const Scalar xn = x(n - 1);
  const Scalar r2 = x.head(n - 1).squaredNorm();
  const Scalar two_n1 = pow(Scalar(2), Scalar(n - 1));
  const Scalar two_n = pow(Scalar(2), Scalar(n));
  return std::visit(
      [&](const auto& v) -> Scalar {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, LipschitzSub>) {
          detail::require_domain<Scalar>(xn > Scalar(0), "LipschitzSub needs x_n > 0");
          const Scalar a = Scalar(v.a);
          const Scalar A = Scalar(lipschitz_A(v.a, v.D));
          return two_n1 * a * pow(xn, Scalar(n) * a - 2) * (A * (a - 1) - (a + 1) * r2);
        } else if constexpr (std::is_same_v<T, PowerSub>) {
          detail::require_domain<Scalar>(xn > Scalar(0), "PowerSub needs x_n > 0");
          const Scalar al = Scalar(v.alpha);
          const Scalar C = Scalar(power_C(v.alpha, v.D));
          return two_n1 * pow(xn, Scalar(n) * al - 2) * (al * (1 - al) * C - (al * al + al) * r2);
        } else if constexpr (std::is_same_v<T, LogSub>) {
          const Scalar s = exp(Scalar(2 * v.n)) * Scalar(v.D);
          const Scalar y = xn / s;
          detail::require_domain<Scalar>(xn > Scalar(0) && y < exp(Scalar(-2 * v.n)),
                                         "LogSub needs 0 < x_n/s < exp(-2n)");
          const Scalar al = Scalar(v.n - 2) / Scalar(2);
          const auto f = detail::log_power(y, al);
          const auto f1 = detail::log_power(y, al + Scalar(1));
          const Scalar E = Scalar(log_sub_E(v.D));
          const Scalar D2 = Scalar(v.D) * Scalar(v.D);
          return two_n1 / (s * s) * pow(f.f, Scalar(n - 1)) * (f.d2 * (r2 - D2) - E * f1.d2) -
                 two_n / (s * s) * r2 * f.d1 * f.d1 * pow(f.f, Scalar(n - 2));
        } else if constexpr (std::is_same_v<T, LogSuper>) {
          detail::require_domain<Scalar>(xn > Scalar(0) && xn < exp(Scalar(-1)), "LogSuper needs 0 < x_n < 1/e");
          const auto g = detail::log_power_minus_linear(xn, Scalar(1) / Scalar(v.n));
          return two_n1 * pow(g.f, Scalar(n - 1)) * g.d2 * (r2 - 1) -
                 two_n * r2 * g.d1 * g.d1 * pow(g.f, Scalar(n - 2));
        } else {
          const Scalar es = exp(Scalar(1)) * Scalar(v.s);
          const Scalar t = xn / es;
          detail::require_domain<Scalar>(xn > Scalar(0) && t < exp(Scalar(-1)), "FlatLogSuper needs 0 < x_n < s");
          const auto g = detail::log_power_minus_linear(t, Scalar(1) / Scalar(v.n));
          const Scalar s2 = Scalar(v.s) * Scalar(v.s);
          return (two_n1 * pow(g.f, Scalar(n - 1)) * g.d2 * (r2 - s2) -
                  two_n * r2 * g.d1 * g.d1 * pow(g.f, Scalar(n - 2))) /
                 (es * es);
        }
      },
      spec);
}

/// Central-difference Hessian of `eval` in long double with one Richardson
/// step. Independent of the closed-form derivative code.
MatrixX<double> hessian_fd(const BarrierSpec& spec, const VectorX<double>& x, double base_step = 1e-5);
VectorX<double> gradient_fd(const BarrierSpec& spec, const VectorX<double>& x, double base_step = 1e-5);

/// Sampling region in frame coordinates: tangential part is either the box
/// [-half_width, half_width]^{n-1} or the ball |x'| <= half_width; normal
/// part is (xn_lo, xn_hi].
struct Region {
  enum class Shape { box, ball };
  int n = 2;
  double half_width = 1;
  double xn_lo = 0;
  double xn_hi = 1;
  Shape shape = Shape::box;

  bool degenerate() const { return !(half_width > 0) || !(xn_hi > xn_lo); }
};

/// Right-hand side the subsolution is tested against:
///   abs_power:  det D^2 v >= c |v|^p
///   dist_power: det D^2 v >= c x_n^p
struct SubsolutionTarget {
  enum class Form { abs_power, dist_power };
  Form form = Form::abs_power;
  double p = 0;
  double c = 0;
};

/// Region on which the construction is stated: the ball |x'| <= R (R = D, 1
/// or s by variant) times (0, min(D, x_n limit)], the open end pulled in by a
/// relative 1e-9.
Region natural_region(const BarrierSpec& spec);

/// The exponent and the largest constant a variant is proved to satisfy for
/// the given target form. Throws ArgumentError when the form does not apply.
SubsolutionTarget proven_target(const BarrierSpec& spec, SubsolutionTarget::Form form);

struct BarrierSample {
  std::size_t index;
  VectorX<double> x;
  double value;
  double det_closed;
  double det_fd;  // NaN where the finite-difference check is skipped
  double margin_sub;  // normalized margin of the det inequality
  double min_minor;   // smallest normalized leading principal minor
};

enum class Verdict { pass, fail, vacuous };
const char* to_string(Verdict v);

struct BarrierReport {
  std::size_t sample_count = 0;
  double min_margin = std::numeric_limits<double>::infinity();      // raw det - c|v|^p (or bound - det)
  double min_rel_margin = std::numeric_limits<double>::infinity();  // normalized by max(|lhs|, |rhs|)
  double min_minor_margin = std::numeric_limits<double>::infinity();
  double max_value = -std::numeric_limits<double>::infinity();
  double max_fd_rel_error = 0;  // over samples at least fd_floor away from both x_n ends
  std::size_t fd_checked = 0;
  double tolerance = 1e-10;
  double fd_tolerance = 1e-6;
  Verdict det_inequality = Verdict::vacuous;
  Verdict convexity = Verdict::vacuous;
  Verdict sign = Verdict::vacuous;
  Verdict fd_agreement = Verdict::vacuous;
  Verdict verdict = Verdict::vacuous;
  std::vector<BarrierSample> samples;
};

struct VerifyOptions {
  double tolerance = 1e-10;
  double fd_tolerance = 1e-6;
  double fd_floor = 1e-3;  // finite-difference checks only at x_n in [fd_floor, limit - fd_floor]
  double band_fraction = 0.2;  // share of samples in the log-uniform layer x_n <= 1e-3
  int threads = 1;
  bool keep_samples = true;
};

/// Sample the region and check (i) det D^2 v >= c*target, (ii) convexity via
/// leading principal minors, (iii) v <= 0 and (iv) agreement of the closed
/// form with a finite-difference determinant.
BarrierReport verify_subsolution(const BarrierSpec& spec, const Region& region, const SubsolutionTarget& target,
                                 std::size_t samples, std::uint64_t seed, const VerifyOptions& opts = {});

/// For the supersolution variants: det D^2 v <= 2^n x_n^{n-2} (LogSuper) or
/// 2^n (e s)^{2-n} x_n^{n-2} (FlatLogSuper) at every sample.
BarrierReport supersolution_det_bound(const BarrierSpec& spec, const Region& region, std::size_t samples,
                                      std::uint64_t seed, const VerifyOptions& opts = {});

/// Upper bound for det D^2 v claimed for a supersolution variant at x_n.
double supersolution_bound(const BarrierSpec& spec, double xn);

/// Closed-form bound on |grad v| for LipschitzSub over the region.
double lipschitz_constant_bound(const LipschitzSub& v, const Region& region);

/// Deterministic sample points (Halton with a seeded rotation, plus a
/// log-uniform layer near x_n = 0).
std::vector<VectorX<double>> sample_region(const Region& region, std::size_t samples, std::uint64_t seed,
                                           double band_fraction, double xn_upper_cap);

/// Smallest leading principal minor of H, each scaled by max|H_ij|^k.
double min_normalized_minor(const MatrixX<double>& H);

}  // namespace malab
