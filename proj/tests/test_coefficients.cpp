#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <doctest.h>

#include "nsfde/coefficients.hpp"
#include "nsfde/errors.hpp"

using namespace nsfde;
using std::numbers::pi;

namespace {

const double kE2 = std::exp(-2.0);

SpectralOperator laplacian(int n) { return assemble_operator(OperatorDescriptor{}, n); }

Segment constant_segment(double h, double dt, const ModeVector& v) {
  return Segment(h, dt, std::vector<ModeVector>(delay_steps(h, dt) + 1, v));
}

ModeVector e1(int n, double c) {
  ModeVector v = ModeVector::Zero(n);
  v(0) = c;
  return v;
}

}  // namespace

TEST_CASE("built-in drift and modulus are continuous at the junction") {
  for (double p : {2.5, 3.0, 5.0}) {
    const auto f = ScalarFunction::log_holder(p);
    const double junction = kE2 * std::pow(2 * p, 1 / p);
    CHECK(f(kE2) == doctest::Approx(junction).epsilon(1e-15));
    CHECK(std::abs(f(std::nextafter(kE2, 0.0)) - f(std::nextafter(kE2, 1.0))) < 1e-12);
    CHECK(f(0.7) == f(-3.0));
    CHECK(f(-0.01) == f(0.01));
    CHECK(f(0.0) == 0.0);
  }
  const auto N = Modulus::log_modulus();
  CHECK(N(kE2) == doctest::Approx(2 * kE2).epsilon(1e-15));
  CHECK(std::abs(N(std::nextafter(kE2, 0.0)) - N(std::nextafter(kE2, 1.0))) < 1e-12);
  CHECK(N(0.0) == 0.0);
  CHECK_THROWS_AS(N(-1.0), DomainError);

  RngStream rng(3, 0);
  for (int i = 0; i < 10000; ++i) {
    const double a = rng.uniform(0.0, kE2), b = rng.uniform(0.0, kE2);
    CHECK(N(0.5 * (a + b)) >= 0.5 * (N(a) + N(b)) - 1e-15);
  }
}

TEST_CASE("modulus inequality at the corner and on random pairs") {
  const auto f = ScalarFunction::log_holder(3.0);
  const auto N = Modulus::log_modulus();
  const double lhs = std::pow(std::abs(f(kE2) - f(0.0)), 3.0);
  const double rhs = N(std::pow(kE2, 3.0));
  const double exact = 6 * std::exp(-6.0);
  CHECK(std::abs(lhs - exact) <= 1e-14 * exact);
  CHECK(std::abs(rhs - exact) <= 1e-14 * exact);

  RngStream rng(4, 0);
  const auto check = modulus_bound_check(f, N, 3.0, 100000, rng);
  CHECK(check.samples == 100000);
  CHECK(check.violations == 0);
  CHECK(check.max_ratio <= 1.0 + 1e-12);
  CHECK(check.max_ratio > 0.5);
  CHECK(check.log_uniform_samples > 40000);

  // A steep drift against the linear modulus must be caught.
  RngStream rng2(4, 1);
  const auto bad = modulus_bound_check(ScalarFunction::bounded_tanh(5.0), Modulus::linear(), 3.0,
                                       10000, rng2);
  CHECK(bad.violations > 0);
  CHECK(bad.max_ratio > 10.0);
  CHECK_THROWS_AS(modulus_bound_check(f, N, 3.0, 0, rng2), DomainError);
}

TEST_CASE("Osgood integral") {
  CHECK(osgood_integral(Modulus::linear(), std::exp(-3.0)) == doctest::Approx(3.0).epsilon(1e-12));
  const double tail = std::log(1 + kE2) - std::log(2 * kE2);
  CHECK(osgood_integral(Modulus::log_modulus(), std::exp(-std::exp(2.0))) ==
        doctest::Approx(2 - std::log(2.0) + tail).epsilon(1e-10));
  CHECK(osgood_integral(Modulus::quadratic(), 0.01) == doctest::Approx(99.0).epsilon(1e-10));
  CHECK_THROWS_AS(osgood_integral(Modulus::linear(0.0), 0.5), DomainError);
  CHECK_THROWS_AS(osgood_integral(Modulus::linear(), 1.0), DomainError);

  const auto builtin = osgood_verdict(Modulus::log_modulus());
  CHECK(builtin.certified);
  CHECK(osgood_verdict(Modulus::linear()).certified);
  const auto quad = osgood_verdict(Modulus::quadratic());
  CHECK_FALSE(quad.shape_ok);
  CHECK_FALSE(quad.certified);
  // sqrt is concave but integrable at 0: the integral stops growing.
  const auto root = osgood_verdict(Modulus::square_root());
  CHECK(root.shape_ok);
  CHECK_FALSE(root.unbounded_growth);
  CHECK_FALSE(root.certified);
}

TEST_CASE("coefficient set validation") {
  const auto op = laplacian(4);
  CoefficientSet cs;
  cs.lipschitz_Mg = 1.2;
  CHECK_THROWS_AS(Coefficients(cs, op, 0.1), DomainError);
  cs.lipschitz_Mg = 0.75;  // 2 Mg^2 > 1
  CHECK_THROWS_AS(Coefficients(cs, op, 0.1), DomainError);
  cs = CoefficientSet{};
  cs.p = 2.0;
  CHECK_THROWS_AS(Coefficients(cs, op, 0.1), DomainError);
  cs = CoefficientSet{};
  cs.kernel_theta = 0.05;
  CHECK_THROWS_AS(Coefficients(cs, op, 0.1), DomainError);
  cs = CoefficientSet{};
  cs.grid_points = 7;
  CHECK_THROWS_AS(Coefficients(cs, op, 0.1), DomainError);
}

TEST_CASE("Nemytskii drift") {
  const int n = 8;
  const auto op = laplacian(n);
  CoefficientSet cs;
  cs.f = ScalarFunction::zero();
  CHECK(Coefficients(cs, op, 0.1).f_slice(e1(n, 1.0)).norm() == 0.0);

  cs.f = ScalarFunction::identity();
  const Coefficients id(cs, op, 0.1);
  RngStream rng(1, 0);
  const ModeVector v = random_profile(n, 1.0, rng);
  Segment seg = constant_segment(0.1, 0.01, ModeVector::Zero(n));
  seg = Segment(0.1, 0.01, [&] {
    std::vector<ModeVector> nodes(11, ModeVector::Zero(n));
    nodes[0] = v;  // only the delayed node is nonzero
    return nodes;
  }());
  CHECK((eval_f(id, seg) - v).norm() <= 1e-10);

  // Bounded tanh drift on a one-mode profile against adaptive quadrature.
  cs.f = ScalarFunction::bounded_tanh(1.0);
  const Coefficients th(cs, op, 0.1);
  const double c = 0.9;
  const ModeVector got = th.f_slice(e1(n, c));
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  for (int k = 1; k <= n; ++k) {
    const double ref = GK::integrate(
        [&](double x) {
          return std::tanh(c * std::sqrt(2.0) * std::sin(pi * x)) * std::sqrt(2.0) *
                 std::sin(k * pi * x);
        },
        0.0, 1.0, 15, 1e-15);
    CHECK(std::abs(got(k - 1) - ref) < 1e-10);
  }
  CHECK(std::abs(got(1)) < 1e-14);  // odd symmetry about x = 1/2 kills even modes
}

TEST_CASE("noise multiplier field") {
  const int n = 6;
  const auto op = laplacian(n);
  CoefficientSet cs;
  cs.sigma = ScalarFunction::constant(1.0);
  const Coefficients one(cs, op, 0.1);
  const Segment seg = constant_segment(0.1, 0.05, e1(n, 2.0));
  CHECK(eval_sigma(one, seg).isOnes());
  cs.sigma = ScalarFunction::zero();
  CHECK(eval_sigma(Coefficients(cs, op, 0.1), seg).isZero());

  cs.sigma = ScalarFunction::log_holder(3.0);
  const Coefficients lh(cs, op, 0.1);
  const GridField field = eval_sigma(lh, seg);
  const double top = kE2 * std::pow(6.0, 1.0 / 3.0);
  CHECK(field.minCoeff() >= 0.0);
  CHECK(field.maxCoeff() <= top * (1 + 1e-15));

  // A constant multiplier passes noise through; a field multiplies on the grid.
  const ModeVector z = e1(n, 0.3);
  CHECK((one.apply_multiplier(eval_sigma(one, seg), z) - z).norm() < 1e-15);
  const GridField two = GridField::Constant(lh.grid().size(), 2.0);
  CHECK((lh.apply_multiplier(two, z) - 2.0 * z).norm() < 1e-13);
}

TEST_CASE("neutral functional") {
  const int n = 6;
  const auto op = laplacian(n);
  CoefficientSet cs;
  cs.kernel = Kernel::zero();
  CHECK(eval_g(Coefficients(cs, op, 0.1), constant_segment(0.1, 0.05, e1(n, 1.0))).modes.isZero());

  // b = s sin(pi x) z and history c sin(pi y): int z dy = 2c / pi, so g = (2 s c / pi) sin(pi x)
  // with mode-1 coefficient sqrt(2) s c / pi. The y-integral uses the physical-grid quadrature.
  const double s = 0.4, c = 1.3;
  cs.kernel = Kernel::separable_linear(s);
  const Coefficients lin(cs, op, 0.1);
  const GValue g = eval_g(lin, constant_segment(0.1, 0.05, e1(n, c / std::sqrt(2.0))));
  CHECK(g.modes(0) == doctest::Approx(std::sqrt(2.0) * s * c / pi).epsilon(1e-5));
  CHECK(g.modes.tail(n - 1).norm() < 1e-14);
  CHECK(g.h_alpha_norm == doctest::Approx(pi * std::abs(g.modes(0))).epsilon(1e-13));

  cs.kernel = Kernel::separable_tanh(0.1);
  CHECK(eval_g(Coefficients(cs, op, 0.1), constant_segment(0.1, 0.05, ModeVector::Zero(n)))
            .modes.isZero());

  // g reads the history at kernel_theta, not at the current state.
  cs.kernel = Kernel::separable_linear(s);
  cs.kernel_theta = -0.05;
  const Coefficients mid(cs, op, 0.1);
  std::vector<ModeVector> nodes(3, ModeVector::Zero(n));
  nodes[1] = e1(n, 1.0);
  const Segment spike(0.1, 0.05, nodes);
  CHECK(mid.g(spike).modes(0) != 0.0);
  CHECK(lin.g(spike).modes.isZero());
}

TEST_CASE("Lipschitz probe of the neutral term") {
  const int n = 16;
  const auto op = laplacian(n);
  CoefficientSet cs;
  RngStream rng(8, 0);

  cs.kernel = Kernel::zero();
  CHECK(lipschitz_probe_g(Coefficients(cs, op, 0.1), 100, rng) == 0.0);

  const double s = 0.2;
  cs.kernel = Kernel::separable_linear(s);
  const double linear = lipschitz_probe_g(Coefficients(cs, op, 0.1), 10000, rng);
  CHECK(linear <= s * pi / std::sqrt(2.0) * (1 + 1e-12));  // Cauchy-Schwarz bound
  CHECK(linear >= 1.5 * s);  // mode-1 perturbations reach 2s

  cs.kernel = Kernel::separable_tanh(s);
  const double bounded = lipschitz_probe_g(Coefficients(cs, op, 0.1), 10000, rng);
  CHECK(bounded <= s * pi / std::sqrt(2.0) * (1 + 1e-12));
  CHECK(bounded > 0.0);
}

TEST_CASE("growth check") {
  const int n = 8;
  const auto op = laplacian(n);
  const auto spec = QWienerSpec::geometric(n);
  RngStream rng(9, 0);
  CoefficientSet cs;
  cs.f = ScalarFunction::zero();
  cs.sigma = ScalarFunction::zero();
  CHECK(growth_check(Coefficients(cs, op, 0.1), spec, 200, rng) == 0.0);

  cs.f = ScalarFunction::bounded_tanh(0.7);
  CHECK(growth_check(Coefficients(cs, op, 0.1), spec, 2000, rng) <= 0.7 + 1e-12);

  cs = CoefficientSet{};
  const Coefficients builtin(cs, op, 0.1);
  RngStream a(10, 0), b(10, 1);
  const double k1 = growth_check(builtin, spec, 2000, a);
  const double k2 = growth_check(builtin, spec, 4000, b);
  CHECK(std::isfinite(k1));
  CHECK(k2 == doctest::Approx(k1).epsilon(0.1));
  CHECK(builtin.sigma_hilbert_schmidt(ModeVector::Zero(n), spec) == 0.0);
}
