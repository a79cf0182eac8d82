#include "nsfde/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "nsfde/errors.hpp"

namespace nsfde {

void SolverConfig::validate() const {
  if (!(dt > 0.0)) throw ConfigError("solver.dt", "must be positive");
  if (!(t_end >= dt)) throw ConfigError("solver.t_end", "must be at least dt");
  if (!(fp_tol > 0.0)) throw ConfigError("solver.fp_tol", "must be positive");
  if (fp_max < 1) throw ConfigError("solver.fp_max", "must be at least 1");
  if (picard_iters < 0) throw ConfigError("solver.picard_iters", "must be nonnegative");
  if (mode == SolverMode::picard && picard_iters < 2) {
    throw ConfigError("solver.picard_iters", "picard mode needs at least 2 iterates");
  }
  if (store_stride < 1) throw ConfigError("solver.store_stride", "must be at least 1");
  if (checkpoint_stride < 0) throw ConfigError("solver.checkpoint_stride", "must be >= 0");
  if (!(blowup_threshold > 0.0)) throw ConfigError("solver.blowup_threshold", "must be positive");
}

int SolverConfig::n_steps() const { return static_cast<int>(std::llround(t_end / dt)); }

Stepper::Stepper(const SpectralOperator& op, const QWienerSpec& noise,
                 const CoefficientSet& coeffs, double h, const SolverConfig& cfg)
    : noise_(noise), coeffs_(coeffs, op, h), cfg_(cfg), delay_steps_(nsfde::delay_steps(h, cfg.dt)) {
  cfg_.validate();
  if (noise_.size() != op.n_modes()) {
    throw ShapeError("noise spectrum has " + std::to_string(noise_.size()) +
                     " modes, operator has " + std::to_string(op.n_modes()));
  }
  const double theta = coeffs_.kernel_theta();
  explicit_neutral_ = coeffs_.g_is_zero() || theta <= -cfg_.dt * (1.0 - 1e-9);
  interp_weight_ = explicit_neutral_ ? 0.0 : std::min(1.0, (theta + cfg_.dt) / cfg_.dt);

  const Eigen::ArrayXd mu = op.eigenvalues().array();
  decay_ = (-cfg_.dt * mu).exp().matrix();
  phi1_ = (-(-cfg_.dt * mu).unaryExpr([](double x) { return std::expm1(x); }) / mu).matrix();
  ou_sd_ = ou_increment_stddev(noise_, op, cfg_.dt);
}

Stepper Stepper::with_horizon(double t_end, int store_stride, int checkpoint_stride) const {
  SolverConfig cfg = cfg_;
  cfg.t_end = t_end;
  cfg.store_stride = store_stride;
  cfg.checkpoint_stride = checkpoint_stride;
  return Stepper(op(), noise_, coeffs_.set(), h(), cfg);
}

void Stepper::check_state(const ModeVector& u) const {
  if (!u.allFinite()) throw BlowupError("state became non-finite");
  const double norm = u.norm();
  if (norm > cfg_.blowup_threshold) {
    throw BlowupError("state norm " + std::to_string(norm) + " exceeds blow-up threshold");
  }
}

StepResult Stepper::advance(const Segment& seg, const Segment* forcing, const ModeVector* g_now,
                            RngStream& rng, bool log_residuals) const {
  const int n = op().n_modes();
  if (seg.n_modes() != n) throw ShapeError("segment / operator mode count mismatch");

  ModeVector xi(n);
  for (int k = 0; k < n; ++k) xi(k) = rng.normal();

  const ModeVector& u = seg.current();
  ModeVector rhs = decay_.cwiseProduct(u);
  if (!coeffs_.g_is_zero()) {
    rhs += g_now ? *g_now : coeffs_.g_slice(seg.evaluate(coeffs_.kernel_theta()));
  }
  if (forcing) {
    const ModeVector& delayed = forcing->oldest();
    if (!coeffs_.f_is_zero()) rhs += phi1_.cwiseProduct(coeffs_.f_slice(delayed));
    const ModeVector z = ou_sd_.cwiseProduct(xi);
    rhs += coeffs_.apply_multiplier(coeffs_.sigma_field_slice(delayed), z);
  }

  StepResult out;
  if (coeffs_.g_is_zero()) {
    out.state = std::move(rhs);
  } else if (explicit_neutral_) {
    // The advanced segment read at kernel_theta is the current one read at kernel_theta + dt.
    const double theta_next = std::min(0.0, coeffs_.kernel_theta() + cfg_.dt);
    out.g_next = coeffs_.g_slice(seg.evaluate(theta_next));
    out.state = rhs - out.g_next;
  } else {
    const double w = interp_weight_;
    ModeVector iterate = u;
    for (int k = 1;; ++k) {
      ModeVector next = rhs - coeffs_.g_slice((1.0 - w) * u + w * iterate);
      const double residual = (next - iterate).norm();
      if (log_residuals) out.residuals.push_back(residual);
      iterate = std::move(next);
      if (!std::isfinite(residual)) throw BlowupError("neutral fixed-point iteration diverged");
      if (residual < cfg_.fp_tol) {
        out.fp_iters = k;
        break;
      }
      if (k >= cfg_.fp_max) {
        throw NonconvergenceError("neutral fixed-point iteration did not converge in " +
                                      std::to_string(cfg_.fp_max) +
                                      " iterations; last residual " + std::to_string(residual),
                                  residual);
      }
    }
    out.state = std::move(iterate);
  }
  check_state(out.state);
  return out;
}

StepResult step(const Segment& seg, const CoefficientSet& cs, const SpectralOperator& op,
                const QWienerSpec& spec, const SolverConfig& cfg, RngStream& rng) {
  SolverConfig local = cfg;
  local.dt = seg.dt();
  if (local.t_end < local.dt) local.t_end = local.dt;
  const Stepper stepper(op, spec, cs, seg.h(), local);
  return stepper.step(seg, rng);
}

namespace {

void record(Trajectory& traj, double t, const Segment& seg) {
  traj.times.push_back(t);
  traj.snapshots.push_back(seg.current());
  traj.seg_norms.push_back(seg.sup_norm());
}

}  // namespace

Trajectory simulate(const Segment& initial, const Stepper& stepper, RngStream rng,
                    const StepObserver& observer, double t0) {
  if (std::abs(initial.dt() - stepper.dt()) > 1e-12 * stepper.dt() ||
      initial.steps() != stepper.delay_steps()) {
    throw ConfigError("solver.dt", "initial segment grid does not match the solver grid");
  }
  const SolverConfig& cfg = stepper.config();
  const int n_steps = cfg.n_steps();

  Trajectory traj;
  traj.seed = rng.seed();
  traj.stream = rng.stream_id();
  Segment seg = initial;
  record(traj, t0, seg);
  if (cfg.checkpoint_stride > 0) {
    traj.checkpoint_times.push_back(t0);
    traj.checkpoints.push_back(seg);
  }

  const bool cache_g = stepper.explicit_neutral() && !stepper.coefficients().g_is_zero();
  ModeVector g_now;
  if (cache_g) g_now = stepper.coefficients().g(seg).modes;

  for (int j = 1; j <= n_steps; ++j) {
    StepResult res = stepper.advance(seg, &seg, cache_g ? &g_now : nullptr, rng);
    seg.push(res.state);
    if (cache_g) g_now = std::move(res.g_next);
    traj.fp_iterations += res.fp_iters;
    traj.max_fp_iters = std::max(traj.max_fp_iters, res.fp_iters);
    const double t = t0 + j * cfg.dt;
    if (j % cfg.store_stride == 0) record(traj, t, seg);
    if (cfg.checkpoint_stride > 0 && j % cfg.checkpoint_stride == 0) {
      traj.checkpoint_times.push_back(t);
      traj.checkpoints.push_back(seg);
    }
    if (observer) observer(j, t, seg, res);
  }
  traj.final_segment = std::move(seg);
  return traj;
}

Trajectory simulate(const Segment& initial, const CoefficientSet& cs, const SpectralOperator& op,
                    const QWienerSpec& spec, const SolverConfig& cfg, RngStream rng) {
  const Stepper stepper(op, spec, cs, initial.h(), cfg);
  return simulate(initial, stepper, std::move(rng));
}

std::vector<PicardIterate> picard_run(const Segment& initial, const Stepper& stepper,
                                      std::uint64_t seed, std::uint64_t stream) {
  const SolverConfig& cfg = stepper.config();
  if (cfg.picard_iters < 2) throw ConfigError("solver.picard_iters", "needs at least 2 iterates");
  const int n_steps = cfg.n_steps();
  const bool cache_g = stepper.explicit_neutral() && !stepper.coefficients().g_is_zero();

  std::vector<PicardIterate> iterates;
  iterates.reserve(cfg.picard_iters + 1);
  for (int it = 0; it <= cfg.picard_iters; ++it) {
    RngStream rng(seed, stream);
    PicardIterate cur;
    cur.trajectory.seed = seed;
    cur.trajectory.stream = stream;
    cur.path.reserve(n_steps + 1);
    cur.path.push_back(initial.current());

    const std::vector<ModeVector>* prev = it == 0 ? nullptr : &iterates.back().path;
    Segment seg = initial;
    Segment forcing = initial;
    record(cur.trajectory, 0.0, seg);
    ModeVector g_now;
    if (cache_g) g_now = stepper.coefficients().g(seg).modes;

    for (int j = 1; j <= n_steps; ++j) {
      StepResult res = stepper.advance(seg, prev ? &forcing : nullptr,
                                       cache_g ? &g_now : nullptr, rng);
      seg.push(res.state);
      if (cache_g) g_now = std::move(res.g_next);
      if (prev) {
        if (static_cast<int>(prev->size()) != n_steps + 1) {
          throw Error("picard_run: previous iterate has a different number of steps");
        }
        forcing.push((*prev)[j]);
      }
      cur.path.push_back(seg.current());
      cur.trajectory.fp_iterations += res.fp_iters;
      cur.trajectory.max_fp_iters = std::max(cur.trajectory.max_fp_iters, res.fp_iters);
      if (j % cfg.store_stride == 0) record(cur.trajectory, j * cfg.dt, seg);
    }

    if (prev) {
      double sup = 0.0;
      for (int j = 0; j <= n_steps; ++j) sup = std::max(sup, (cur.path[j] - (*prev)[j]).norm());
      cur.sup_diff = sup;
    } else {
      cur.sup_diff = std::numeric_limits<double>::quiet_NaN();
    }
    iterates.push_back(std::move(cur));
  }
  return iterates;
}

}  // namespace nsfde
