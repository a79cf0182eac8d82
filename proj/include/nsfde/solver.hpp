#ifndef NSFDE_SOLVER_HPP
#define NSFDE_SOLVER_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "nsfde/coefficients.hpp"
#include "nsfde/noise.hpp"
#include "nsfde/segment.hpp"
#include "nsfde/spectral.hpp"

namespace nsfde {

enum class SolverMode { direct, picard };

struct SolverConfig {
  double dt = 1e-3;
  double t_end = 1.0;
  double fp_tol = 1e-12;
  int fp_max = 200;
  SolverMode mode = SolverMode::direct;
  int picard_iters = 8;
  int store_stride = 1;
  /// Store a full history segment every `checkpoint_stride` steps; 0 disables.
  int checkpoint_stride = 0;
  double blowup_threshold = 1e8;

  void validate() const;
  int n_steps() const;
};

struct StepResult {
  ModeVector state;
  int fp_iters = 0;
  /// ||u^(k+1) - u^(k)|| of the neutral fixed-point iteration, when requested.
  std::vector<double> residuals;
  /// g of the advanced segment. Exact for the point-delay form; empty otherwise.
  ModeVector g_next;
};

/// Exponential-Euler integrator of the mild formulation
///
///   d[u + g(u_t)] = [A u + f(u_t)] dt + sigma(u_t) dW.
///
/// With the bracket v = u + g(u_t) frozen over one step of length dt,
///
///   u(t+dt) + g(u_{t+dt}) = S(dt) u(t) + g(u_t) + Phi1(dt) f(u_t) + sigma(u_t) Z,
///
/// where Phi1 = (1 - exp(-mu dt)) / mu per mode and Z is the exact per-mode OU convolution
/// increment. The term -int_0^dt A S(tau) dtau g(u_t) = (I - S(dt)) g(u_t) is integrated
/// in closed form. When g reads the history no later than -dt the new state is explicit;
/// otherwise it is found by fixed-point iteration.
class Stepper {
 public:
  Stepper(const SpectralOperator& op, const QWienerSpec& noise, const CoefficientSet& coeffs,
          double h, const SolverConfig& cfg);

  const SpectralOperator& op() const { return coeffs_.op(); }
  const QWienerSpec& noise() const { return noise_; }
  const Coefficients& coefficients() const { return coeffs_; }
  const SolverConfig& config() const { return cfg_; }
  double h() const { return coeffs_.h(); }
  double dt() const { return cfg_.dt; }
  int delay_steps() const { return delay_steps_; }
  bool explicit_neutral() const { return explicit_neutral_; }

  /// Same model and grid with a different integration horizon and recording strides.
  Stepper with_horizon(double t_end, int store_stride = 1, int checkpoint_stride = 0) const;

  /// Advances `seg` by dt. f and sigma are read from `forcing` (null freezes both to zero);
  /// `g_now` is g(seg) when already known. Always consumes N normals from `rng`.
  StepResult advance(const Segment& seg, const Segment* forcing, const ModeVector* g_now,
                     RngStream& rng, bool log_residuals = false) const;

  StepResult step(const Segment& seg, RngStream& rng, bool log_residuals = false) const {
    return advance(seg, &seg, nullptr, rng, log_residuals);
  }

 private:
  void check_state(const ModeVector& u) const;

  QWienerSpec noise_;
  Coefficients coeffs_;
  SolverConfig cfg_;
  int delay_steps_;
  bool explicit_neutral_;
  double interp_weight_;  // weight of the new state in the slice g reads (implicit case)
  Eigen::VectorXd decay_;  // exp(-mu dt)
  Eigen::VectorXd phi1_;   // (1 - exp(-mu dt)) / mu
  Eigen::VectorXd ou_sd_;
};

/// Convenience single step; builds a Stepper with the segment's h and dt.
StepResult step(const Segment& seg, const CoefficientSet& cs, const SpectralOperator& op,
                const QWienerSpec& spec, const SolverConfig& cfg, RngStream& rng);

struct Trajectory {
  std::vector<double> times;
  std::vector<ModeVector> snapshots;
  std::vector<double> seg_norms;
  std::vector<double> checkpoint_times;
  std::vector<Segment> checkpoints;
  std::optional<Segment> final_segment;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  long long fp_iterations = 0;
  int max_fp_iters = 0;
};

/// Called after every step with the step index (1-based), time, advanced segment and result.
using StepObserver = std::function<void(int, double, const Segment&, const StepResult&)>;

/// Integrates from `t0` to `t0 + cfg.t_end`, recording every `store_stride` steps (and the
/// initial state).
Trajectory simulate(const Segment& initial, const Stepper& stepper, RngStream rng,
                    const StepObserver& observer = {}, double t0 = 0.0);

Trajectory simulate(const Segment& initial, const CoefficientSet& cs, const SpectralOperator& op,
                    const QWienerSpec& spec, const SolverConfig& cfg, RngStream rng);

struct PicardIterate {
  Trajectory trajectory;
  /// max over grid times of ||u^(n)(t) - u^(n-1)(t)||; NaN for iterate 0.
  double sup_diff;
  /// Grid path u^(n)(j dt), j = 0..n_steps.
  std::vector<ModeVector> path;
};

/// Iterates 0..cfg.picard_iters of the successive approximations: iterate 0 solves the
/// neutral linear problem without forcing, iterate n uses f and sigma evaluated along
/// iterate n-1. Every iterate replays the noise of stream (seed, stream).
std::vector<PicardIterate> picard_run(const Segment& initial, const Stepper& stepper,
                                      std::uint64_t seed, std::uint64_t stream);

// Contraction-horizon arithmetic for the neutral fixed-point map.

/// Mg + Mg^p C^p T1^(alpha p) / ((1 - Mg)^(p-1) alpha^p).
double contraction_gamma(double Mg, double p, double alpha, double c_1ma, double T1);

/// Mg + (5 / (1 - Mg))^(p-1) (C T1^alpha Mg / alpha)^p.
double continuity_lhs(double Mg, double p, double alpha, double c_1ma, double T1);

struct ContractionHorizon {
  double T1;
  double gamma;
  double continuity;
  bool capped;  ///< both conditions still hold at the search cap
};

/// Largest T1 with contraction_gamma < 1 and continuity_lhs < 1, by bisection in log T1.
ContractionHorizon find_contraction_horizon(double Mg, double p, double alpha, double c_1ma,
                                            double cap = 1e12);

}  // namespace nsfde

#endif  // NSFDE_SOLVER_HPP
