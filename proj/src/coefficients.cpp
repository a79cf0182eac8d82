#include "nsfde/coefficients.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "nsfde/errors.hpp"

namespace nsfde {

namespace {

constexpr double kRoundingSlack = 1e-12;

}  // namespace

double ScalarFunction::operator()(double x) const {
  switch (kind_) {
    case Kind::zero:
      return 0.0;
    case Kind::identity:
      return x;
    case Kind::constant:
      return param_;
    case Kind::bounded_tanh:
      return param_ * std::tanh(x);
    case Kind::log_holder: {
      const double p = param_;
      const double a = std::abs(x);
      if (a == 0.0) return 0.0;
      if (a <= kLogJunction) return a * std::pow(-p * std::log(a), 1.0 / p);
      return kLogJunction * std::pow(2.0 * p, 1.0 / p);
    }
  }
  return 0.0;
}

double Modulus::operator()(double s) const {
  if (s < 0.0) throw DomainError("modulus evaluated at a negative argument");
  switch (kind_) {
    case Kind::log_modulus:
      if (s == 0.0) return 0.0;
      if (s <= kLogJunction) return -scale_ * s * std::log(s);
      return scale_ * (s + kLogJunction);
    case Kind::linear:
      return scale_ * s;
    case Kind::quadratic:
      return scale_ * s * s;
    case Kind::square_root:
      return scale_ * std::sqrt(s);
  }
  return 0.0;
}

double Kernel::response(double z) const {
  switch (kind_) {
    case Kind::zero:
      return 0.0;
    case Kind::separable_tanh:
      return std::tanh(z);
    case Kind::separable_linear:
      return z;
  }
  return 0.0;
}

double Kernel::operator()(double x, double z, double /*y*/) const {
  if (kind_ == Kind::zero) return 0.0;
  return strength_ * std::sin(std::numbers::pi * x) * response(z);
}

void CoefficientSet::validate() const {
  if (!(p > 2.0)) throw DomainError("moment exponent p must exceed 2");
  if (!(lipschitz_Mg > 0.0 && lipschitz_Mg < 1.0)) {
    throw DomainError("Lipschitz constant Mg must lie in (0,1)");
  }
  // meas(D) = 1 for D = (0,1)
  if (!(2.0 * lipschitz_Mg * lipschitz_Mg < 1.0)) {
    throw DomainError("2 Mg^2 meas(D)^2 < 1 is violated");
  }
  if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("alpha must lie in (0,1]");
  if (!(growth_K > 0.0)) throw DomainError("growth constant K must be positive");
  if (grid_points < 0 || grid_points % 2 != 0) {
    throw DomainError("grid_points must be a nonnegative even number");
  }
}

Coefficients::Coefficients(CoefficientSet set, const SpectralOperator& op, double h)
    : set_(std::move(set)),
      op_(op),
      h_(h),
      kernel_theta_(std::isnan(set_.kernel_theta) ? -h : set_.kernel_theta),
      grid_(op, set_.grid_points > 0 ? set_.grid_points : 4 * op.n_modes()) {
  set_.validate();
  if (!(h > 0.0)) throw DomainError("delay h must be positive");
  if (!(kernel_theta_ >= -h && kernel_theta_ <= 0.0)) {
    throw DomainError("kernel_theta must lie in [-h, 0]");
  }
  set_.kernel_theta = kernel_theta_;
  GridField profile(grid_.size());
  for (int i = 0; i < grid_.size(); ++i) {
    profile(i) = set_.kernel.strength() * std::sin(std::numbers::pi * grid_.nodes()(i));
  }
  kernel_profile_ = grid_.project(profile);
}

ModeVector Coefficients::f_slice(const ModeVector& delayed) const {
  if (f_is_zero()) return ModeVector::Zero(op_.n_modes());
  GridField u = grid_.synthesize(delayed);
  for (Eigen::Index i = 0; i < u.size(); ++i) u(i) = set_.f(u(i));
  return grid_.project(u);
}

ModeVector Coefficients::f(const Segment& seg) const { return f_slice(seg.oldest()); }

GridField Coefficients::sigma_field_slice(const ModeVector& delayed) const {
  if (sigma_is_constant()) {
    return GridField::Constant(grid_.size(), set_.sigma.constant_value());
  }
  GridField u = grid_.synthesize(delayed);
  for (Eigen::Index i = 0; i < u.size(); ++i) u(i) = set_.sigma(u(i));
  return u;
}

GridField Coefficients::sigma_field(const Segment& seg) const {
  return sigma_field_slice(seg.oldest());
}

ModeVector Coefficients::apply_multiplier(const GridField& field,
                                          const ModeVector& noise) const {
  if (sigma_is_constant()) return set_.sigma.constant_value() * noise;
  return grid_.project(field.cwiseProduct(grid_.synthesize(noise)));
}

ModeVector Coefficients::g_slice(const ModeVector& slice) const {
  if (g_is_zero()) return ModeVector::Zero(op_.n_modes());
  GridField u = grid_.synthesize(slice);
  for (Eigen::Index i = 0; i < u.size(); ++i) u(i) = set_.kernel.response(u(i));
  return grid_.integrate(u) * kernel_profile_;
}

GValue Coefficients::g(const Segment& seg) const {
  ModeVector modes = g_slice(seg.evaluate(kernel_theta_));
  const double norm = fractional_norm(op_, set_.alpha, modes);
  return {std::move(modes), norm};
}

double Coefficients::sigma_hilbert_schmidt(const ModeVector& delayed,
                                           const QWienerSpec& spec) const {
  if (spec.size() != op_.n_modes()) throw ShapeError("noise spectrum / operator mismatch");
  const GridField s = sigma_field_slice(delayed);
  // sum_k lambda_k int sigma(u)^2 psi_k^2 dx
  const Eigen::VectorXd weight = grid_.basis().array().square().matrix() * spec.lambdas();
  return std::sqrt(grid_.integrate(s.array().square().matrix().cwiseProduct(weight)));
}

ModeVector eval_f(const Coefficients& coeffs, const Segment& seg) { return coeffs.f(seg); }

GridField eval_sigma(const Coefficients& coeffs, const Segment& seg) {
  return coeffs.sigma_field(seg);
}

GValue eval_g(const Coefficients& coeffs, const Segment& seg) { return coeffs.g(seg); }

double osgood_integral(const Modulus& modulus, double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw DomainError("osgood_integral needs 0 < eps < 1");
  auto integrand = [&modulus](double v) {
    const double s = std::exp(-v);
    const double n = modulus(s);
    if (!(n > 0.0)) {
      throw DomainError("singular modulus: N(" + std::to_string(s) + ") = 0");
    }
    return s / n;
  };
  using Quadrature = boost::math::quadrature::gauss_kronrod<double, 61>;
  const double upper = -std::log(eps);
  // The built-in log modulus changes branch at s = e^-2, i.e. v = 2.
  const double kink = 2.0;
  if (upper <= kink) return Quadrature::integrate(integrand, 0.0, upper, 15, 1e-13);
  return Quadrature::integrate(integrand, 0.0, kink, 15, 1e-13) +
         Quadrature::integrate(integrand, kink, upper, 15, 1e-13);
}

bool modulus_shape_ok(const Modulus& modulus) {
  if (modulus(0.0) != 0.0) return false;
  constexpr int kPoints = 200;
  std::vector<double> s(kPoints), n(kPoints);
  const double lo = std::log(1e-12), hi = std::log(10.0);
  for (int i = 0; i < kPoints; ++i) {
    s[i] = std::exp(lo + (hi - lo) * i / (kPoints - 1));
    n[i] = modulus(s[i]);
    if (!(n[i] >= 0.0) || !std::isfinite(n[i])) return false;
    if (i > 0 && n[i] < n[i - 1]) return false;
  }
  for (int i = 0; i < kPoints; ++i) {
    for (int j = i + 1; j < kPoints; ++j) {
      const double mid = modulus(0.5 * (s[i] + s[j]));
      const double chord = 0.5 * (n[i] + n[j]);
      if (mid < chord - kRoundingSlack * std::max(1.0, std::abs(chord))) return false;
    }
  }
  return true;
}

OsgoodVerdict osgood_verdict(const Modulus& modulus) {
  OsgoodVerdict v;
  for (int k = 1; k <= 5; ++k) {
    const double eps = std::exp(-std::exp(static_cast<double>(k)));
    v.eps.push_back(eps);
    v.integrals.push_back(osgood_integral(modulus, eps));
  }
  bool increasing = true;
  for (std::size_t k = 1; k < v.integrals.size(); ++k) {
    increasing = increasing && v.integrals[k] > v.integrals[k - 1];
  }
  const double first = v.integrals[1] - v.integrals[0];
  const double last = v.integrals[4] - v.integrals[3];
  v.unbounded_growth = increasing && last >= 0.5 * first;
  v.shape_ok = modulus_shape_ok(modulus);
  v.certified = v.shape_ok && v.unbounded_growth;
  return v;
}

ModulusCheck modulus_bound_check(const ScalarFunction& f, const Modulus& modulus, double p,
                                 long long n_samples, RngStream& rng,
                                 double log_uniform_fraction) {
  if (n_samples < 1) throw DomainError("modulus_bound_check needs at least one sample");
  ModulusCheck out;
  const double log_lo = std::log(1e-12), log_hi = std::log(kLogJunction);
  auto log_uniform = [&]() {
    const double mag = std::exp(rng.uniform(log_lo, log_hi));
    return rng.uniform() < 0.5 ? -mag : mag;
  };
  for (long long i = 0; i < n_samples; ++i) {
    double x, y;
    if (rng.uniform() < log_uniform_fraction) {
      x = log_uniform();
      y = log_uniform();
      ++out.log_uniform_samples;
    } else {
      x = rng.uniform(-1.0, 1.0);
      y = rng.uniform(-1.0, 1.0);
    }
    const double lhs = std::pow(std::abs(f(x) - f(y)), p);
    const double rhs = modulus(std::pow(std::abs(x - y), p));
    ++out.samples;
    if (lhs > rhs * (1.0 + kRoundingSlack)) ++out.violations;
    if (rhs > 0.0) out.max_ratio = std::max(out.max_ratio, lhs / rhs);
  }
  return out;
}

ModeVector random_profile(int n_modes, double amplitude, RngStream& rng) {
  ModeVector v(n_modes);
  for (int k = 0; k < n_modes; ++k) v(k) = amplitude * rng.normal() / std::pow(k + 1.0, 1.5);
  return v;
}

double lipschitz_probe_g(const Coefficients& coeffs, int n_samples, RngStream& rng) {
  const int n = coeffs.op().n_modes();
  const double alpha = coeffs.set().alpha;
  double best = 0.0;
  for (int i = 0; i < n_samples; ++i) {
    const ModeVector a = random_profile(n, std::exp(rng.uniform(std::log(1e-3), std::log(3.0))), rng);
    const ModeVector delta =
        random_profile(n, std::exp(rng.uniform(std::log(1e-6), std::log(1.0))), rng);
    const double dist = delta.norm();
    if (dist == 0.0) continue;
    const ModeVector diff = coeffs.g_slice(a + delta) - coeffs.g_slice(a);
    best = std::max(best, fractional_norm(coeffs.op(), alpha, diff) / dist);
  }
  return best;
}

double growth_check(const Coefficients& coeffs, const QWienerSpec& spec, int n_samples,
                    RngStream& rng) {
  const int n = coeffs.op().n_modes();
  double best = 0.0;
  for (int i = 0; i < n_samples; ++i) {
    const ModeVector phi =
        random_profile(n, std::exp(rng.uniform(std::log(1e-3), std::log(10.0))), rng);
    const double numer = coeffs.f_slice(phi).norm() + coeffs.sigma_hilbert_schmidt(phi, spec);
    best = std::max(best, numer / (1.0 + phi.norm()));
  }
  return best;
}

}  // namespace nsfde
