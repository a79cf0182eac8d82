#ifndef NSFDE_COEFFICIENTS_HPP
#define NSFDE_COEFFICIENTS_HPP

#include <limits>
#include <string>
#include <vector>

#include "nsfde/noise.hpp"
#include "nsfde/segment.hpp"
#include "nsfde/spectral.hpp"

namespace nsfde {

/// exp(-2): the junction of the logarithmic branches of the built-in drift and modulus.
inline constexpr double kLogJunction = 0.1353352832366127;

/// Scalar map applied pointwise to the delayed field (a Nemytskii operator).
class ScalarFunction {
 public:
  enum class Kind { zero, identity, constant, log_holder, bounded_tanh };

  static ScalarFunction zero() { return {Kind::zero, 0.0}; }
  static ScalarFunction identity() { return {Kind::identity, 1.0}; }
  static ScalarFunction constant(double c) { return {Kind::constant, c}; }
  /// |x| (p |ln|x||)^(1/p) for 0 < |x| <= e^-2, 0 at 0, continued by its junction value
  /// e^-2 (2p)^(1/p) for |x| > e^-2.
  static ScalarFunction log_holder(double p) { return {Kind::log_holder, p}; }
  /// c tanh(x).
  static ScalarFunction bounded_tanh(double c = 1.0) { return {Kind::bounded_tanh, c}; }

  double operator()(double x) const;

  Kind kind() const { return kind_; }
  double parameter() const { return param_; }
  bool is_constant() const { return kind_ == Kind::zero || kind_ == Kind::constant; }
  double constant_value() const { return kind_ == Kind::constant ? param_ : 0.0; }

 private:
  ScalarFunction(Kind kind, double param) : kind_(kind), param_(param) {}

  Kind kind_;
  double param_;
};

/// Modulus of continuity N on [0, inf), scaled by a constant factor.
class Modulus {
 public:
  enum class Kind { log_modulus, linear, quadratic, square_root };

  static Modulus log_modulus(double scale = 1.0) { return {Kind::log_modulus, scale}; }
  static Modulus linear(double scale = 1.0) { return {Kind::linear, scale}; }
  static Modulus quadratic(double scale = 1.0) { return {Kind::quadratic, scale}; }
  static Modulus square_root(double scale = 1.0) { return {Kind::square_root, scale}; }

  double operator()(double s) const;

  Kind kind() const { return kind_; }
  double scale() const { return scale_; }

 private:
  Modulus(Kind kind, double scale) : kind_(kind), scale_(scale) {}

  Kind kind_;
  double scale_;
};

/// Separable neutral kernel b(x, z, y) = c sin(pi x) r(z), r = tanh or identity.
class Kernel {
 public:
  enum class Kind { zero, separable_tanh, separable_linear };

  static Kernel zero() { return {Kind::zero, 0.0}; }
  static Kernel separable_tanh(double c) { return {Kind::separable_tanh, c}; }
  static Kernel separable_linear(double c) { return {Kind::separable_linear, c}; }

  double operator()(double x, double z, double y) const;
  double response(double z) const;

  Kind kind() const { return kind_; }
  double strength() const { return strength_; }

 private:
  Kernel(Kind kind, double strength) : kind_(kind), strength_(strength) {}

  Kind kind_;
  double strength_;
};

struct CoefficientSet {
  ScalarFunction f = ScalarFunction::log_holder(3.0);
  ScalarFunction sigma = ScalarFunction::log_holder(3.0);
  Kernel kernel = Kernel::separable_tanh(0.1);
  /// Lag at which g reads the history, in [-h, 0]. NaN means -h (point delay).
  double kernel_theta = std::numeric_limits<double>::quiet_NaN();
  Modulus modulus = Modulus::log_modulus();
  double growth_K = 1.0;
  double lipschitz_Mg = 0.3;
  double alpha = 0.5;
  double p = 3.0;
  /// Physical quadrature subintervals P; 0 selects 4N.
  int grid_points = 0;

  /// Throws DomainError on p <= 2, Mg outside (0,1), 2 Mg^2 meas(D)^2 >= 1, alpha outside (0,1].
  void validate() const;
};

struct GValue {
  ModeVector modes;
  double h_alpha_norm;  ///< ||g||_alpha with the configured alpha
};

/// CoefficientSet bound to an operator, delay and physical grid.
///
/// f and sigma read the history at theta = -h; g reads it at `kernel_theta()`.
class Coefficients {
 public:
  Coefficients(CoefficientSet set, const SpectralOperator& op, double h);

  const CoefficientSet& set() const { return set_; }
  const SpectralOperator& op() const { return op_; }
  const PhysicalGrid& grid() const { return grid_; }
  double h() const { return h_; }
  double kernel_theta() const { return kernel_theta_; }

  ModeVector f(const Segment& seg) const;
  ModeVector f_slice(const ModeVector& delayed) const;

  /// sigma(u(t-h, x)) on the physical grid.
  GridField sigma_field(const Segment& seg) const;
  GridField sigma_field_slice(const ModeVector& delayed) const;

  /// Projection of field * (noise synthesised on the grid). Constant sigma short-cuts to a
  /// scalar multiple.
  ModeVector apply_multiplier(const GridField& field, const ModeVector& noise) const;

  GValue g(const Segment& seg) const;
  ModeVector g_slice(const ModeVector& slice) const;

  /// ||sigma(u) o Q^(1/2)||_HS for the multiplication operator.
  double sigma_hilbert_schmidt(const ModeVector& delayed, const QWienerSpec& spec) const;

  bool f_is_zero() const { return set_.f.kind() == ScalarFunction::Kind::zero; }
  bool sigma_is_constant() const { return set_.sigma.is_constant(); }
  bool g_is_zero() const { return set_.kernel.kind() == Kernel::Kind::zero; }

 private:
  CoefficientSet set_;
  SpectralOperator op_;
  double h_;
  double kernel_theta_;
  PhysicalGrid grid_;
  ModeVector kernel_profile_;  // modes of c sin(pi x)
};

ModeVector eval_f(const Coefficients& coeffs, const Segment& seg);
GridField eval_sigma(const Coefficients& coeffs, const Segment& seg);
GValue eval_g(const Coefficients& coeffs, const Segment& seg);

/// int_eps^1 ds / N(s), adaptive Gauss-Kronrod in the variable v = -ln s.
double osgood_integral(const Modulus& modulus, double eps);

/// Pairwise midpoint concavity, monotonicity and N(0) = 0 on a log-spaced sample grid.
bool modulus_shape_ok(const Modulus& modulus);

struct OsgoodVerdict {
  std::vector<double> eps;        ///< exp(-exp(k)), k = 1..5
  std::vector<double> integrals;  ///< int_eps^1 ds/N(s)
  bool shape_ok;                  ///< continuity/monotone/concave/N(0)=0 sample checks
  bool unbounded_growth;          ///< increments do not decay along the eps sequence
  bool certified;                 ///< shape_ok && unbounded_growth
};

OsgoodVerdict osgood_verdict(const Modulus& modulus);

struct ModulusCheck {
  long long samples = 0;
  long long log_uniform_samples = 0;
  long long violations = 0;
  double max_ratio = 0.0;
};

/// Samples scalar pairs and tests |f(x) - f(y)|^p <= N(|x - y|^p).
///
/// A fraction `log_uniform_fraction` of pairs has magnitudes log-uniform in [1e-12, e^-2]
/// with random signs; the rest are uniform on [-1, 1]. A pair counts as a violation when
/// the left side exceeds the right by more than 1e-12 relative (rounding slack).
ModulusCheck modulus_bound_check(const ScalarFunction& f, const Modulus& modulus, double p,
                                 long long n_samples, RngStream& rng,
                                 double log_uniform_fraction = 0.5);

/// Random smooth profile: mode k coefficient amplitude * xi_k / k^1.5.
ModeVector random_profile(int n_modes, double amplitude, RngStream& rng);

/// max over sampled pairs of ||g(phi1) - g(phi2)||_alpha / ||phi1 - phi2||_{C_h}, with
/// constant-in-time segments built from random profiles.
double lipschitz_probe_g(const Coefficients& coeffs, int n_samples, RngStream& rng);

/// max over sampled segments of (||f|| + ||sigma||_HS) / (1 + ||phi||_{C_h}).
double growth_check(const Coefficients& coeffs, const QWienerSpec& spec, int n_samples,
                    RngStream& rng);

}  // namespace nsfde

#endif  // NSFDE_COEFFICIENTS_HPP
