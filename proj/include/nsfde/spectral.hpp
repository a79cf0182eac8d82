#ifndef NSFDE_SPECTRAL_HPP
#define NSFDE_SPECTRAL_HPP

#include <functional>

#include <Eigen/Dense>

namespace nsfde {

/// Coefficients of a field in the eigenbasis of the operator, ordered by eigenvalue.
using ModeVector = Eigen::VectorXd;

/// Values of a field on the physical quadrature grid of D = (0,1).
using GridField = Eigen::VectorXd;

/// Description of the elliptic operator A u = (a(x) u')' on (0,1) with Dirichlet conditions.
/// When `a_fn` is empty the diffusivity is the constant `a_const`.
struct OperatorDescriptor {
  double a_const = 1.0;
  std::function<double(double)> a_fn;
  double delta_fraction = 0.5;
};

/// Spectral truncation of -A to its first N eigenpairs.
///
/// The eigenfunctions are stored as coefficient columns over the orthonormal sine basis
/// sqrt(2) sin(n pi x). For constant diffusivity that matrix is the identity and the
/// eigenvalues are a (n pi)^2 exactly. Immutable after construction.
class SpectralOperator {
 public:
  SpectralOperator(Eigen::VectorXd eigenvalues, Eigen::MatrixXd sine_coefficients,
                   double delta);

  int n_modes() const { return static_cast<int>(eigenvalues_.size()); }
  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  double eigenvalue(int k) const { return eigenvalues_(k); }
  double delta() const { return delta_; }
  const Eigen::MatrixXd& sine_coefficients() const { return sine_coefficients_; }
  bool sine_diagonal() const { return sine_diagonal_; }

 private:
  Eigen::VectorXd eigenvalues_;
  Eigen::MatrixXd sine_coefficients_;
  double delta_;
  bool sine_diagonal_;
};

SpectralOperator assemble_operator(const OperatorDescriptor& desc, int n_modes);

/// Stiffness matrix K_mn = int_0^1 a(x) e_m'(x) e_n'(x) dx in the sine basis, by composite
/// Simpson with `intervals` subintervals. Exposed for verification.
Eigen::MatrixXd assemble_sine_stiffness(const std::function<double(double)>& a, int n_modes,
                                        int intervals);

/// S(t) v: mode k scaled by exp(-mu_k t).
ModeVector semigroup_apply(const SpectralOperator& op, double t, const ModeVector& v);

/// (-A)^alpha v: mode k scaled by mu_k^alpha.
ModeVector fractional_apply(const SpectralOperator& op, double alpha, const ModeVector& v);

/// ||v||_alpha = ||(-A)^alpha v||.
double fractional_norm(const SpectralOperator& op, double alpha, const ModeVector& v);

/// Exact operator norm of (-A)^alpha S(t) on the truncation: max_k mu_k^alpha exp(-mu_k t).
double frac_semigroup_norm(const SpectralOperator& op, double alpha, double t);

struct DecayConstants {
  double c_alpha;
  double delta;
};

/// Smallest C with ||(-A)^alpha S(t)|| <= C t^-alpha exp(-delta t) over t in [t_min, t_max].
///
/// The supremum is taken over a log grid of `grid_points` times augmented with the per-mode
/// maximisers t_k = alpha / (mu_k - delta), so it is the exact supremum on the interval.
DecayConstants decay_constants(const SpectralOperator& op, double alpha, double t_min = 1e-6,
                               double t_max = 1e2, int grid_points = 2000);

/// Composite Simpson weights on [0,1] with an even number of subintervals.
Eigen::VectorXd simpson_weights(int intervals);

/// Physical grid x_i = i / P on [0,1] with the operator eigenfunctions tabulated on it.
///
/// `synthesize` maps modes to grid values and `project` maps grid values back to modes by
/// Simpson quadrature. For products of the first N modes with P > 2N the round trip is
/// exact up to rounding (Simpson combines two trapezoid rules, both exact there).
class PhysicalGrid {
 public:
  PhysicalGrid(const SpectralOperator& op, int intervals);

  int intervals() const { return intervals_; }
  int size() const { return intervals_ + 1; }
  const Eigen::VectorXd& nodes() const { return nodes_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  const Eigen::MatrixXd& basis() const { return basis_; }

  GridField synthesize(const ModeVector& modes) const;
  ModeVector project(const GridField& field) const;
  double integrate(const GridField& field) const;

 private:
  int intervals_;
  Eigen::VectorXd nodes_;
  Eigen::VectorXd weights_;
  Eigen::MatrixXd basis_;            // (P+1) x N
  Eigen::MatrixXd weighted_basis_t_;  // N x (P+1), basis^T diag(w)
};

}  // namespace nsfde

#endif  // NSFDE_SPECTRAL_HPP
