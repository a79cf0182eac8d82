#include "nsfde/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "nsfde/errors.hpp"

namespace nsfde {

namespace {

constexpr double kPi = std::numbers::pi;

void check_length(const SpectralOperator& op, const ModeVector& v, const char* what) {
  if (v.size() != op.n_modes()) {
    throw ShapeError(std::string(what) + ": vector has " + std::to_string(v.size()) +
                     " modes, operator has " + std::to_string(op.n_modes()));
  }
}

// log of mu^alpha t^alpha exp(-(mu - delta) t); alpha = 0 drops the power terms.
double log_decay_ratio(double mu, double alpha, double delta, double t) {
  double value = -(mu - delta) * t;
  if (alpha != 0.0) value += alpha * (std::log(mu) + std::log(t));
  return value;
}

}  // namespace

SpectralOperator::SpectralOperator(Eigen::VectorXd eigenvalues,
                                   Eigen::MatrixXd sine_coefficients, double delta)
    : eigenvalues_(std::move(eigenvalues)),
      sine_coefficients_(std::move(sine_coefficients)),
      delta_(delta) {
  if (eigenvalues_.size() < 1) throw DomainError("operator needs at least one mode");
  if (sine_coefficients_.rows() != eigenvalues_.size() ||
      sine_coefficients_.cols() != eigenvalues_.size()) {
    throw ShapeError("eigenvector matrix does not match the number of eigenvalues");
  }
  for (Eigen::Index k = 0; k < eigenvalues_.size(); ++k) {
    if (!(eigenvalues_(k) > 0.0)) throw DomainError("eigenvalues of -A must be positive");
    if (k > 0 && eigenvalues_(k) < eigenvalues_(k - 1)) {
      throw DomainError("eigenvalues must be nondecreasing");
    }
  }
  if (!(delta_ > 0.0 && delta_ < eigenvalues_(0))) {
    throw DomainError("spectral gap parameter delta must satisfy 0 < delta < mu_1");
  }
  sine_diagonal_ = sine_coefficients_.isIdentity(0.0);
}

Eigen::MatrixXd assemble_sine_stiffness(const std::function<double(double)>& a, int n_modes,
                                        int intervals) {
  const Eigen::VectorXd w = simpson_weights(intervals);
  const int points = intervals + 1;
  Eigen::VectorXd a_vals(points);
  for (int i = 0; i < points; ++i) {
    const double x = static_cast<double>(i) / intervals;
    a_vals(i) = a(x);
    if (!(a_vals(i) > 0.0)) {
      throw DomainError("ellipticity violation: a(" + std::to_string(x) +
                        ") = " + std::to_string(a_vals(i)));
    }
  }
  // e_n'(x) = sqrt(2) n pi cos(n pi x)
  Eigen::MatrixXd deriv(points, n_modes);
  for (int i = 0; i < points; ++i) {
    const double x = static_cast<double>(i) / intervals;
    for (int n = 0; n < n_modes; ++n) {
      const double freq = (n + 1) * kPi;
      deriv(i, n) = std::numbers::sqrt2 * freq * std::cos(freq * x);
    }
  }
  const Eigen::VectorXd aw = a_vals.cwiseProduct(w);
  return deriv.transpose() * aw.asDiagonal() * deriv;
}

SpectralOperator assemble_operator(const OperatorDescriptor& desc, int n_modes) {
  if (n_modes < 1) throw DomainError("n_modes must be at least 1");
  if (!(desc.delta_fraction > 0.0 && desc.delta_fraction < 1.0)) {
    throw DomainError("delta_fraction must lie in (0,1)");
  }

  if (!desc.a_fn) {
    if (!(desc.a_const > 0.0)) throw DomainError("ellipticity violation: a must be positive");
    Eigen::VectorXd mu(n_modes);
    for (int n = 0; n < n_modes; ++n) {
      const double freq = (n + 1) * kPi;
      mu(n) = desc.a_const * freq * freq;
    }
    const double delta = desc.delta_fraction * mu(0);
    return SpectralOperator(std::move(mu), Eigen::MatrixXd::Identity(n_modes, n_modes), delta);
  }

  const Eigen::MatrixXd stiffness = assemble_sine_stiffness(desc.a_fn, n_modes, 4 * n_modes);
  const double scale = stiffness.cwiseAbs().maxCoeff();
  if ((stiffness - stiffness.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw DomainError("assembled stiffness matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(stiffness);
  if (solver.info() != Eigen::Success) throw DomainError("eigen-decomposition failed");

  Eigen::MatrixXd vectors = solver.eigenvectors();
  // Fix the sign so each eigenfunction has a positive leading sine coefficient.
  for (int k = 0; k < n_modes; ++k) {
    Eigen::Index lead = 0;
    vectors.col(k).cwiseAbs().maxCoeff(&lead);
    if (vectors(lead, k) < 0.0) vectors.col(k) = -vectors.col(k);
  }
  Eigen::VectorXd mu = solver.eigenvalues();
  const double delta = desc.delta_fraction * mu(0);
  return SpectralOperator(std::move(mu), std::move(vectors), delta);
}

ModeVector semigroup_apply(const SpectralOperator& op, double t, const ModeVector& v) {
  if (!(t >= 0.0)) throw DomainError("semigroup time must be nonnegative");
  check_length(op, v, "semigroup_apply");
  if (t == 0.0) return v;
  return (-t * op.eigenvalues().array()).exp().matrix().cwiseProduct(v);
}

ModeVector fractional_apply(const SpectralOperator& op, double alpha, const ModeVector& v) {
  check_length(op, v, "fractional_apply");
  if (alpha == 0.0) return v;
  return op.eigenvalues().array().pow(alpha).matrix().cwiseProduct(v);
}

double fractional_norm(const SpectralOperator& op, double alpha, const ModeVector& v) {
  return fractional_apply(op, alpha, v).norm();
}

double frac_semigroup_norm(const SpectralOperator& op, double alpha, double t) {
  if (!(t > 0.0)) throw DomainError("frac_semigroup_norm requires t > 0");
  double best = -INFINITY;
  for (int k = 0; k < op.n_modes(); ++k) {
    const double mu = op.eigenvalue(k);
    best = std::max(best, alpha * std::log(mu) - mu * t);
  }
  return std::exp(best);
}

DecayConstants decay_constants(const SpectralOperator& op, double alpha, double t_min,
                               double t_max, int grid_points) {
  if (!(alpha >= 0.0)) throw DomainError("decay_constants requires alpha >= 0");
  if (!(t_min > 0.0 && t_max > t_min) || grid_points < 2) {
    throw DomainError("decay_constants needs 0 < t_min < t_max and at least two grid points");
  }
  const double delta = op.delta();
  double best = -INFINITY;
  auto consider = [&](double t) {
    for (int k = 0; k < op.n_modes(); ++k) {
      best = std::max(best, log_decay_ratio(op.eigenvalue(k), alpha, delta, t));
    }
  };

  const double log_lo = std::log(t_min);
  const double log_step = (std::log(t_max) - log_lo) / (grid_points - 1);
  for (int i = 0; i < grid_points; ++i) consider(std::exp(log_lo + i * log_step));

  // Each mode's term peaks at alpha / (mu_k - delta); adding those points makes the grid
  // maximum the true supremum over [t_min, t_max].
  for (int k = 0; k < op.n_modes(); ++k) {
    const double peak = alpha / (op.eigenvalue(k) - delta);
    consider(std::clamp(peak, t_min, t_max));
  }
  return {std::exp(best), delta};
}

Eigen::VectorXd simpson_weights(int intervals) {
  if (intervals < 2 || intervals % 2 != 0) {
    throw DomainError("Simpson quadrature needs an even number of subintervals");
  }
  const double h = 1.0 / intervals;
  Eigen::VectorXd w(intervals + 1);
  for (int i = 0; i <= intervals; ++i) {
    if (i == 0 || i == intervals) {
      w(i) = h / 3.0;
    } else {
      w(i) = (i % 2 == 1 ? 4.0 : 2.0) * h / 3.0;
    }
  }
  return w;
}

PhysicalGrid::PhysicalGrid(const SpectralOperator& op, int intervals)
    : intervals_(intervals), weights_(simpson_weights(intervals)) {
  const int points = intervals + 1;
  const int n = op.n_modes();
  nodes_.resize(points);
  Eigen::MatrixXd sines(points, n);
  for (int i = 0; i < points; ++i) {
    const double x = static_cast<double>(i) / intervals;
    nodes_(i) = x;
    for (int k = 0; k < n; ++k) {
      sines(i, k) = std::numbers::sqrt2 * std::sin((k + 1) * kPi * x);
    }
  }
  // Dirichlet endpoints are exact zeros.
  sines.row(0).setZero();
  sines.row(points - 1).setZero();
  basis_ = op.sine_diagonal() ? sines : Eigen::MatrixXd(sines * op.sine_coefficients());
  weighted_basis_t_ = basis_.transpose() * weights_.asDiagonal();
}

GridField PhysicalGrid::synthesize(const ModeVector& modes) const {
  if (modes.size() != basis_.cols()) throw ShapeError("synthesize: mode count mismatch");
  return basis_ * modes;
}

ModeVector PhysicalGrid::project(const GridField& field) const {
  if (field.size() != basis_.rows()) throw ShapeError("project: grid size mismatch");
  return weighted_basis_t_ * field;
}

double PhysicalGrid::integrate(const GridField& field) const {
  if (field.size() != weights_.size()) throw ShapeError("integrate: grid size mismatch");
  return weights_.dot(field);
}

}  // namespace nsfde
