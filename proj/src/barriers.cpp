#include "malab/barriers.hpp"

#include "malab/parallel.hpp"

#include <algorithm>
#include <random>

namespace malab {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ArgumentError(what);
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double radical_inverse(std::uint64_t i, unsigned base) {
  double inv = 1.0 / base, f = inv, r = 0;
  while (i > 0) {
    r += f * static_cast<double>(i % base);
    i /= base;
    f *= inv;
  }
  return r;
}

constexpr unsigned kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};

double unit_from_bits(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

double hadamard_scale(const MatrixX<double>& H) {
  double s = 1;
  for (Eigen::Index i = 0; i < H.rows(); ++i) s *= H.row(i).norm();
  return s;
}

}  // namespace

void validate(const BarrierSpec& spec) {
  std::visit(overloaded{
                 [](const LipschitzSub& v) {
                   require(v.n >= 2, "dimension must be at least 2");
                   require(v.a > 1 && std::isfinite(v.a), "LipschitzSub needs a > 1");
                   require(v.D > 0 && std::isfinite(v.D), "LipschitzSub needs D > 0");
                 },
                 [](const PowerSub& v) {
                   require(v.n >= 2, "dimension must be at least 2");
                   require(v.alpha > 0 && v.alpha < 1, "PowerSub needs 0 < alpha < 1");
                   require(v.D > 0 && std::isfinite(v.D), "PowerSub needs D > 0");
                 },
                 [](const LogSub& v) {
                   require(v.n >= 2, "dimension must be at least 2");
                   require(v.D > 0 && std::isfinite(v.D), "LogSub needs D > 0");
                 },
                 [](const LogSuper& v) { require(v.n >= 2, "dimension must be at least 2"); },
                 [](const FlatLogSuper& v) {
                   require(v.n >= 2, "dimension must be at least 2");
                   require(v.s > 0 && v.s < std::exp(-1.0), "FlatLogSuper needs 0 < s < 1/e");
                 },
             },
             spec);
}

BarrierSpec make_lipschitz_sub(int n, double a, double D) {
  BarrierSpec s = LipschitzSub{n, a, D};
  validate(s);
  return s;
}
BarrierSpec make_power_sub(int n, double alpha, double D) {
  BarrierSpec s = PowerSub{n, alpha, D};
  validate(s);
  return s;
}
BarrierSpec make_log_sub(int n, double D) {
  BarrierSpec s = LogSub{n, D};
  validate(s);
  return s;
}
BarrierSpec make_log_super(int n) {
  BarrierSpec s = LogSuper{n};
  validate(s);
  return s;
}
BarrierSpec make_flat_log_super(int n, double s) {
  BarrierSpec b = FlatLogSuper{n, s};
  validate(b);
  return b;
}

std::string variant_name(const BarrierSpec& spec) {
  return std::visit(overloaded{
                        [](const LipschitzSub&) { return std::string("LipschitzSub"); },
                        [](const PowerSub&) { return std::string("PowerSub"); },
                        [](const LogSub&) { return std::string("LogSub"); },
                        [](const LogSuper&) { return std::string("LogSuper"); },
                        [](const FlatLogSuper&) { return std::string("FlatLogSuper"); },
                    },
                    spec);
}

int dimension(const BarrierSpec& spec) {
  return std::visit([](const auto& v) { return v.n; }, spec);
}

bool is_supersolution(const BarrierSpec& spec) {
  return std::holds_alternative<LogSuper>(spec) || std::holds_alternative<FlatLogSuper>(spec);
}

double xn_upper_limit(const BarrierSpec& spec) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  return std::visit(overloaded{
                        [](const LipschitzSub&) { return inf; },
                        [](const PowerSub&) { return inf; },
                        [](const LogSub& v) { return v.D; },
                        [](const LogSuper&) { return std::exp(-1.0); },
                        [](const FlatLogSuper& v) { return v.s; },
                    },
                    spec);
}

namespace {

// Step that keeps x_n +- 2h inside (0, limit).
long double fd_step(const BarrierSpec& spec, const VectorX<double>& x, double base) {
  const int n = static_cast<int>(x.size());
  long double h = base * std::max(1.0, x.norm());
  const long double xn = x(n - 1);
  h = std::min(h, xn / 4);
  const double lim = xn_upper_limit(spec);
  if (std::isfinite(lim)) h = std::min(h, (static_cast<long double>(lim) - xn) / 4);
  if (!(h > 0)) throw DomainError("no room for a finite-difference stencil at this point");
  return h;
}

long double second_diff(const BarrierSpec& spec, const VectorX<long double>& x, int i, int j, long double h) {
  const auto f = [&](long double di, long double dj) {
    VectorX<long double> y = x;
    y(i) += di;
    y(j) += dj;
    return eval<long double>(spec, y);
  };
  if (i == j) {
    VectorX<long double> yp = x, ym = x;
    yp(i) += h;
    ym(i) -= h;
    return (eval<long double>(spec, yp) - 2 * eval<long double>(spec, x) + eval<long double>(spec, ym)) / (h * h);
  }
  return (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4 * h * h);
}

}  // namespace

MatrixX<double> hessian_fd(const BarrierSpec& spec, const VectorX<double>& x, double base_step) {
  const int n = static_cast<int>(x.size());
  const long double h = fd_step(spec, x, base_step);
  const VectorX<long double> xl = x.cast<long double>();
  MatrixX<double> H(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      // Richardson: (4 D(h/2) - D(h)) / 3 cancels the h^2 term.
      const long double coarse = second_diff(spec, xl, i, j, h);
      const long double fine = second_diff(spec, xl, i, j, h / 2);
      H(i, j) = H(j, i) = static_cast<double>((4 * fine - coarse) / 3);
    }
  }
  return H;
}

VectorX<double> gradient_fd(const BarrierSpec& spec, const VectorX<double>& x, double base_step) {
  const int n = static_cast<int>(x.size());
  const long double h = fd_step(spec, x, base_step);
  const VectorX<long double> xl = x.cast<long double>();
  VectorX<double> g(n);
  for (int i = 0; i < n; ++i) {
    const auto central = [&](long double step) {
      VectorX<long double> yp = xl, ym = xl;
      yp(i) += step;
      ym(i) -= step;
      return (eval<long double>(spec, yp) - eval<long double>(spec, ym)) / (2 * step);
    };
    g(i) = static_cast<double>((4 * central(h / 2) - central(h)) / 3);
  }
  return g;
}

SubsolutionTarget proven_target(const BarrierSpec& spec, SubsolutionTarget::Form form) {
  using Form = SubsolutionTarget::Form;
  SubsolutionTarget t;
  t.form = form;
  std::visit(overloaded{
                 [&](const LipschitzSub& v) {
                   t.p = v.n * v.a - 2;
                   const double c = std::pow(2.0, v.n - 1) * v.a;
                   t.c = form == Form::dist_power ? c : c / std::pow(lipschitz_B(v.a, v.D), t.p);
                 },
                 [&](const PowerSub& v) {
                   const double q = v.n * v.alpha - 2;
                   if (form == Form::dist_power) {
                     t.p = q;
                     t.c = 1;
                   } else {
                     require(q >= 0, "PowerSub has no |w|^p form when n*alpha < 2");
                     t.p = q / v.alpha;
                     t.c = std::pow(power_C(v.alpha, v.D), -t.p);
                   }
                 },
                 [&](const LogSub& v) {
                   const double s = log_sub_s(v.n, v.D);
                   t.p = v.n - 2;
                   if (form == Form::dist_power)
                     t.c = std::pow(2.0, v.n - 2) * std::pow(s, -v.n);
                   else
                     t.c = std::pow(2.0, v.n - 2) / (s * s) * std::pow(2 * log_sub_E(v.D), -(v.n - 2.0));
                 },
                 [&](const LogSuper&) { throw ArgumentError("LogSuper is a supersolution"); },
                 [&](const FlatLogSuper&) { throw ArgumentError("FlatLogSuper is a supersolution"); },
             },
             spec);
  return t;
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::vacuous: return "vacuous";
  }
  return "?";
}

double min_normalized_minor(const MatrixX<double>& H) {
  const double scale = std::max(H.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  double worst = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 1; k <= H.rows(); ++k) {
    const double minor = H.topLeftCorner(k, k).determinant() / std::pow(scale, static_cast<double>(k));
    worst = std::min(worst, minor);
  }
  return worst;
}

std::vector<VectorX<double>> sample_region(const Region& region, std::size_t samples, std::uint64_t seed,
                                           double band_fraction, double xn_upper_cap) {
  std::vector<VectorX<double>> pts;
  if (region.degenerate() || samples == 0) return pts;
  const int n = region.n;
  require(n >= 2 && n <= 12, "region dimension must be in [2, 12]");
  std::mt19937_64 rng(seed);
  std::vector<double> shift(n + 1);
  for (auto& s : shift) s = unit_from_bits(rng());

  const double hi = std::min(region.xn_hi, xn_upper_cap);
  const double band_hi = std::min(hi, 1e-3);
  const double band_lo = std::max(region.xn_lo, 1e-10);
  const bool band = band_hi > band_lo && band_fraction > 0;
  const std::size_t band_count = band ? static_cast<std::size_t>(band_fraction * samples) : 0;
  const std::size_t bulk_count = samples - band_count;
  pts.reserve(samples);

  for (std::size_t i = 0; i < samples; ++i) {
    const std::uint64_t k = i + 1;
    std::vector<double> u(n + 1);
    for (int d = 0; d <= n; ++d) {
      u[d] = radical_inverse(k, kPrimes[d]) + shift[d];
      u[d] -= std::floor(u[d]);
    }
    VectorX<double> x(n);
    VectorX<double> c(n - 1);
    for (int d = 0; d < n - 1; ++d) c(d) = 2 * u[d] - 1;
    if (region.shape == Region::Shape::ball && n - 1 > 1) {
      // Radial squash of the cube onto the ball.
      const double l2 = c.norm();
      if (l2 > 0) c *= c.cwiseAbs().maxCoeff() / l2;
    }
    x.head(n - 1) = region.half_width * c;
    double un = u[n - 1];
    if (un <= 0) un = 0.5 / static_cast<double>(samples);
    if (i < bulk_count) {
      x(n - 1) = region.xn_lo + (hi - region.xn_lo) * un;
    } else {
      x(n - 1) = band_lo * std::pow(band_hi / band_lo, un);
    }
    if (!(x(n - 1) > region.xn_lo)) x(n - 1) = std::nextafter(region.xn_lo, hi);
    pts.push_back(std::move(x));
  }
  return pts;
}

namespace {

struct Evaluated {
  BarrierSample row;
  double raw_margin;
  double fd_err;  // negative when skipped
  double norm_value;
};

BarrierReport run_checks(const BarrierSpec& spec, const Region& region, std::size_t samples, std::uint64_t seed,
                         const VerifyOptions& opts, bool super, const SubsolutionTarget* target) {
  validate(spec);
  require(region.n == dimension(spec), "region dimension does not match barrier");
  const double lim = xn_upper_limit(spec);
  if (region.xn_lo < 0) throw DomainError("region extends below the boundary hyperplane");
  if (!region.degenerate() && region.xn_hi > lim) throw DomainError("region leaves the barrier's validity region");

  BarrierReport rep;
  rep.tolerance = opts.tolerance;
  rep.fd_tolerance = opts.fd_tolerance;
  const auto pts = sample_region(region, samples, seed, opts.band_fraction, lim);
  rep.sample_count = pts.size();
  if (pts.empty()) return rep;

  std::vector<Evaluated> out(pts.size());
  parallel_for(pts.size(), opts.threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const auto& x = pts[i];
      const int n = static_cast<int>(x.size());
      Evaluated ev{};
      ev.row.index = i;
      ev.row.x = x;
      ev.row.value = eval<double>(spec, x);
      ev.row.det_closed = hessian_det_closed<double>(spec, x);
      const MatrixX<double> H = hessian<double>(spec, x);
      ev.row.min_minor = min_normalized_minor(H);
      const double xn = x(n - 1);
      double lhs, rhs;
      if (super) {
        lhs = supersolution_bound(spec, xn);
        rhs = ev.row.det_closed;
      } else {
        const double base = target->form == SubsolutionTarget::Form::abs_power ? std::abs(ev.row.value) : xn;
        lhs = ev.row.det_closed;
        rhs = target->c * std::pow(base, target->p);
      }
      ev.raw_margin = lhs - rhs;
      const double denom = std::max({std::abs(lhs), std::abs(rhs), std::numeric_limits<double>::min()});
      ev.row.margin_sub = ev.raw_margin / denom;
      ev.norm_value = ev.row.value / std::max(1.0, std::abs(ev.row.value));
      ev.fd_err = -1;
      ev.row.det_fd = std::numeric_limits<double>::quiet_NaN();
      if (xn >= opts.fd_floor && xn <= lim - opts.fd_floor) {
        const MatrixX<double> Hfd = hessian_fd(spec, x);
        ev.row.det_fd = Hfd.determinant();
        const double scale = std::max(std::abs(ev.row.det_closed), hadamard_scale(H));
        ev.fd_err = std::abs(ev.row.det_fd - ev.row.det_closed) / std::max(scale, std::numeric_limits<double>::min());
      }
      out[i] = std::move(ev);
    }
  });

  for (auto& ev : out) {
    rep.min_margin = std::min(rep.min_margin, ev.raw_margin);
    rep.min_rel_margin = std::min(rep.min_rel_margin, ev.row.margin_sub);
    rep.min_minor_margin = std::min(rep.min_minor_margin, ev.row.min_minor);
    rep.max_value = std::max(rep.max_value, ev.norm_value);
    if (ev.fd_err >= 0) {
      ++rep.fd_checked;
      rep.max_fd_rel_error = std::max(rep.max_fd_rel_error, ev.fd_err);
    }
    if (opts.keep_samples) rep.samples.push_back(std::move(ev.row));
  }
  const auto judge = [](bool ok) { return ok ? Verdict::pass : Verdict::fail; };
  rep.det_inequality = judge(rep.min_rel_margin >= -opts.tolerance);
  rep.fd_agreement = rep.fd_checked ? judge(rep.max_fd_rel_error <= opts.fd_tolerance) : Verdict::vacuous;
  if (!super) {
    rep.convexity = judge(rep.min_minor_margin >= -opts.tolerance);
    rep.sign = judge(rep.max_value <= opts.tolerance);
  }
  bool ok = true;
  for (Verdict v : {rep.det_inequality, rep.convexity, rep.sign, rep.fd_agreement}) ok = ok && v != Verdict::fail;
  rep.verdict = ok ? Verdict::pass : Verdict::fail;
  return rep;
}

}  // namespace

BarrierReport verify_subsolution(const BarrierSpec& spec, const Region& region, const SubsolutionTarget& target,
                                 std::size_t samples, std::uint64_t seed, const VerifyOptions& opts) {
  validate(spec);
  if (is_supersolution(spec)) throw ArgumentError("verify_subsolution needs a subsolution variant");
  const SubsolutionTarget proven = proven_target(spec, target.form);
  const bool same_p = std::abs(target.p - proven.p) <= 1e-12 * std::max(1.0, std::abs(proven.p));
  const bool c_ok = target.c > 0 && target.c <= proven.c * (1 + 1e-12);
  if (!same_p || !c_ok) throw ArgumentError("inconsistent (p, c) pair for " + variant_name(spec));
  return run_checks(spec, region, samples, seed, opts, false, &target);
}

BarrierReport supersolution_det_bound(const BarrierSpec& spec, const Region& region, std::size_t samples,
                                      std::uint64_t seed, const VerifyOptions& opts) {
  validate(spec);
  if (!is_supersolution(spec)) throw ArgumentError("supersolution_det_bound needs LogSuper or FlatLogSuper");
  return run_checks(spec, region, samples, seed, opts, true, nullptr);
}

double supersolution_bound(const BarrierSpec& spec, double xn) {
  if (const auto* v = std::get_if<LogSuper>(&spec)) return std::pow(2.0, v->n) * std::pow(xn, v->n - 2.0);
  if (const auto* v = std::get_if<FlatLogSuper>(&spec))
    return std::pow(2.0, v->n) * std::pow(std::exp(1.0) * v->s, 2.0 - v->n) * std::pow(xn, v->n - 2.0);
  throw ArgumentError("not a supersolution variant");
}

Region natural_region(const BarrierSpec& spec) {
  validate(spec);
  Region r;
  r.n = dimension(spec);
  r.shape = Region::Shape::ball;
  r.half_width = std::visit(overloaded{
                                [](const LipschitzSub& v) { return v.D; },
                                [](const PowerSub& v) { return v.D; },
                                [](const LogSub& v) { return v.D; },
                                [](const LogSuper&) { return 1.0; },
                                [](const FlatLogSuper& v) { return v.s; },
                            },
                            spec);
  const double limit = xn_upper_limit(spec);
  r.xn_hi = std::isfinite(limit) ? std::min(r.half_width, limit * (1 - 1e-9)) : r.half_width;
  return r;
}

double lipschitz_constant_bound(const LipschitzSub& v, const Region& region) {
  const double r = region.shape == Region::Shape::box ? region.half_width * std::sqrt(region.n - 1.0)
                                                      : region.half_width;
  const double xh = region.xn_hi;
  const double A = lipschitz_A(v.a, v.D), B = lipschitz_B(v.a, v.D);
  // |d_i v| = 2|x_i| x_n^a; d_n v = a x_n^{a-1}(|x'|^2 + A) - B ranges in [-B, a xh^{a-1}(r^2+A) - B].
  const double tangential = 2 * r * std::pow(xh, v.a);
  const double normal = std::max(B, std::abs(v.a * std::pow(xh, v.a - 1) * (r * r + A) - B));
  return std::sqrt(tangential * tangential + normal * normal);
}

}  // namespace malab
