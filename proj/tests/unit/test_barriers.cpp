#include "malab/barriers.hpp"
#include "malab/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace malab;

namespace {

VectorX<double> pt(std::initializer_list<double> xs) {
  VectorX<double> x(xs.size());
  int i = 0;
  for (double v : xs) x(i++) = v;
  return x;
}

// Central second differences of eval<long double>, independent of hessian_fd.
MatrixX<long double> fd_hessian(const BarrierSpec& spec, const VectorX<double>& x, long double h) {
  const int n = int(x.size());
  const VectorX<long double> xl = x.cast<long double>();
  auto f = [&](int i, long double si, int j, long double sj) {
    VectorX<long double> y = xl;
    y(i) += si;
    y(j) += sj;
    return eval<long double>(spec, y);
  };
  MatrixX<long double> H(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      H(i, j) = (f(i, h, j, h) - f(i, h, j, -h) - f(i, -h, j, h) + f(i, -h, j, -h)) / (4 * h * h);
    }
  }
  return H;
}

}  // namespace

TEST_CASE("LipschitzSub values") {
  const auto v = make_lipschitz_sub(2, 2, 1);
  CHECK(lipschitz_A(2, 1) == doctest::Approx(4));
  CHECK(lipschitz_B(2, 1) == doctest::Approx(5));
  for (double t : {1e-6, 1e-3, 0.1, 0.5}) {
    CHECK(eval<double>(v, pt({0, t})) == doctest::Approx(-5 * t + 4 * t * t).epsilon(1e-13));
  }
  CHECK(eval<double>(v, pt({0.3, 0})) == 0);
  CHECK(eval<double>(v, pt({0.5, 0.5})) == doctest::Approx(-1.4375).epsilon(1e-14));
}

TEST_CASE("LogSuper value") {
  const double expected = 0.1 * (std::sqrt(std::log(10.0)) - 1) * (0 - 1);
  CHECK(eval<double>(make_log_super(2), pt({0, 0.1})) == doctest::Approx(expected).epsilon(1e-13));
  CHECK(expected == doctest::Approx(-0.05174).epsilon(1e-4));
}

TEST_CASE("closed-form determinants") {
  SUBCASE("LipschitzSub against the direct 2x2 determinant") {
    const auto v = make_lipschitz_sub(2, 2, 1);
    const double x1 = 0.5, x2 = 0.5;
    CHECK(hessian_det_closed<double>(v, pt({x1, x2})) == doctest::Approx(3.25).epsilon(1e-14));
    CHECK(hessian_det_closed<double>(v, pt({x1, x2})) == doctest::Approx(4 * x2 * x2 * (4 - 3 * x1 * x1)));
  }
  SUBCASE("LipschitzSub on the axis is at least 2^(n-1) a x_n^(na-2)") {
    for (int n : {2, 3}) {
      for (double a : {1.5, 2.0, abreu_exponent(n)}) {
        const auto v = make_lipschitz_sub(n, a, 1);
        for (double t : {1e-3, 0.1, 0.7}) {
          VectorX<double> x = VectorX<double>::Zero(n);
          x(n - 1) = t;
          CHECK(hessian_det_closed<double>(v, x) >= std::pow(2.0, n - 1) * a * std::pow(t, n * a - 2) * (1 - 1e-14));
        }
      }
    }
  }
  SUBCASE("PowerSub") {
    CHECK(power_C(0.5, 1) == doctest::Approx(12));
    CHECK(hessian_det_closed<double>(make_power_sub(2, 0.5, 1), pt({0.5, 0.25})) ==
          doctest::Approx(22.5).epsilon(1e-14));
  }
}

TEST_CASE("LipschitzSub gradient and Hessian entries") {
  const auto v = make_lipschitz_sub(2, 2, 1);
  for (double t : {0.01, 0.3, 0.9}) {
    const auto g = gradient<double>(v, pt({0, t}));
    CHECK(g(0) == doctest::Approx(0));
    CHECK(g(1) == doctest::Approx(8 * t - 5).epsilon(1e-14));
  }
  for (double a : {1.5, 2.0, 2.5}) {
    const auto w = make_lipschitz_sub(3, a, 1);
    const auto x = pt({0.2, -0.4, 0.3});
    const double r2 = 0.2 * 0.2 + 0.4 * 0.4;
    CHECK(hessian<double>(w, x)(2, 2) ==
          doctest::Approx(a * (a - 1) * std::pow(0.3, a - 2) * (r2 + lipschitz_A(a, 1))).epsilon(1e-14));
  }
}

TEST_CASE("finite-difference Hessian determinant agrees to 1e-6 at interior samples") {
  const std::vector<std::pair<BarrierSpec, VectorX<double>>> cases = {
      {make_lipschitz_sub(2, 2, 1), pt({0.3, 0.4})},
      {make_lipschitz_sub(3, abreu_exponent(3), 1), pt({0.1, -0.2, 0.2})},
      {make_power_sub(2, 0.5, 1), pt({0.3, 0.2})},
      {make_log_sub(2, 1), pt({0.2, 0.5})},
      {make_log_sub(3, 1), pt({0.2, 0.1, 0.5})},
      {make_log_super(2), pt({0.3, 0.1})},
      {make_flat_log_super(3, 0.2), pt({0.05, 0.02, 0.1})},
  };
  for (const auto& [spec, x] : cases) {
    const MatrixX<long double> H = fd_hessian(spec, x, 1e-5L);
    const long double det_fd = H.determinant();
    const double det = hessian_det_closed<double>(spec, x);
    CAPTURE(variant_name(spec));
    CHECK(std::abs(double(det_fd) - det) <= 1e-6 * std::abs(det));
    CHECK((hessian<double>(spec, x) - hessian_fd(spec, x)).norm() <= 1e-6 * hessian<double>(spec, x).norm());
  }
}

TEST_CASE("property: closed determinant matches the determinant of the closed Hessian") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(0, 1);
  const std::vector<BarrierSpec> specs = {make_lipschitz_sub(2, 1.5, 1), make_lipschitz_sub(3, 2, 0.7),
                                          make_power_sub(3, 2.0 / 3, 1),  make_log_sub(2, 1),
                                          make_log_super(3),             make_flat_log_super(2, 0.3)};
  for (const auto& spec : specs) {
    const Region r = natural_region(spec);
    for (int k = 0; k < 100; ++k) {
      VectorX<double> x(r.n);
      for (int i = 0; i + 1 < r.n; ++i) x(i) = (2 * U(rng) - 1) * r.half_width / std::sqrt(double(r.n));
      x(r.n - 1) = r.xn_lo + (r.xn_hi - r.xn_lo) * (0.01 + 0.98 * U(rng));
      const double closed = hessian_det_closed<double>(spec, x);
      const double direct = hessian<double>(spec, x).determinant();
      CAPTURE(variant_name(spec));
      CHECK(closed == doctest::Approx(direct).epsilon(1e-9));
    }
  }
}

TEST_CASE("subsolution verification") {
  SUBCASE("LipschitzSub n=2 a=2 D=1 against 4/25 |v|^2") {
    Region r;
    r.n = 2;
    r.half_width = 1;
    r.xn_hi = 1;
    const auto rep = verify_subsolution(make_lipschitz_sub(2, 2, 1), r, {SubsolutionTarget::Form::abs_power, 2, 4.0 / 25},
                                        10000, 1);
    CHECK(rep.sample_count == 10000);
    CHECK(rep.verdict == Verdict::pass);
  }
  SUBCASE("PowerSub n=3 alpha=2/3 against dist^0") {
    Region r;
    r.n = 3;
    r.half_width = 1;
    r.xn_hi = 1;
    const auto rep =
        verify_subsolution(make_power_sub(3, 2.0 / 3, 1), r, {SubsolutionTarget::Form::dist_power, 0, 1}, 10000, 1);
    CHECK(rep.verdict == Verdict::pass);
  }
  SUBCASE("targets beyond the proven constant are rejected") {
    Region r;
    r.n = 2;
    CHECK_THROWS_AS(verify_subsolution(make_lipschitz_sub(2, 2, 1), r, {SubsolutionTarget::Form::abs_power, 2, 100},
                                       2000, 1),
                    ArgumentError);
    CHECK_THROWS_AS(verify_subsolution(make_lipschitz_sub(2, 2, 1), r, {SubsolutionTarget::Form::abs_power, 1, 0.1},
                                       2000, 1),
                    ArgumentError);
  }
  SUBCASE("degenerate region is vacuous") {
    Region r;
    r.half_width = 0;
    const auto rep = verify_subsolution(make_lipschitz_sub(2, 2, 1), r, {SubsolutionTarget::Form::abs_power, 2, 0.1},
                                        100, 1);
    CHECK(rep.sample_count == 0);
    CHECK(rep.verdict == Verdict::vacuous);
  }
  CHECK_THROWS_AS(make_lipschitz_sub(2, 1, 1), ArgumentError);
  CHECK_THROWS_AS(make_power_sub(2, 1, 1), ArgumentError);
}

TEST_CASE("supersolution determinant bounds") {
  SUBCASE("LogSuper n=2") {
    Region r;
    r.n = 2;
    r.half_width = 1;
    r.xn_hi = std::exp(-1.0) * (1 - 1e-9);
    const auto rep = supersolution_det_bound(make_log_super(2), r, 10000, 1);
    CHECK(supersolution_bound(make_log_super(2), 0.1) == doctest::Approx(4));
    CHECK(rep.verdict == Verdict::pass);
  }
  SUBCASE("FlatLogSuper n=2 s=0.2") {
    const auto spec = make_flat_log_super(2, 0.2);
    CHECK(supersolution_bound(spec, 0.1) == doctest::Approx(4));
    CHECK(supersolution_det_bound(spec, natural_region(spec), 10000, 1).verdict == Verdict::pass);
  }
}

TEST_CASE("property: verification reports are independent of the thread count") {
  const auto spec = make_log_sub(3, 1);
  VerifyOptions one, four;
  four.threads = 4;
  const auto target = proven_target(spec, SubsolutionTarget::Form::abs_power);
  const auto a = verify_subsolution(spec, natural_region(spec), target, 3000, 5, one);
  const auto b = verify_subsolution(spec, natural_region(spec), target, 3000, 5, four);
  REQUIRE(a.samples.size() == b.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    CHECK(a.samples[i].x == b.samples[i].x);
    CHECK(a.samples[i].det_closed == b.samples[i].det_closed);
  }
  CHECK(a.min_margin == b.min_margin);
}

TEST_CASE("evaluation outside the validity region") {
  CHECK_THROWS_AS(eval<double>(make_log_super(2), pt({0, 0.5})), DomainError);
  CHECK_THROWS_AS(eval<double>(make_lipschitz_sub(2, 2, 1), pt({0, -0.1})), DomainError);
  CHECK_THROWS_AS(eval<double>(make_lipschitz_sub(2, 2, 1), pt({0, 0.1, 0.2})), ArgumentError);
}
