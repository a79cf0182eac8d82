// Acceptance run: one line per criterion, nonzero exit if any fails. Fixed seed throughout.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "nsfde/coefficients.hpp"
#include "nsfde/errors.hpp"
#include "nsfde/measure.hpp"
#include "nsfde/solver.hpp"
#include "nsfde/spectral.hpp"
#include "oracles.hpp"

using namespace nsfde;
using std::numbers::pi;

namespace {

constexpr std::uint64_t kSeed = 20261018;

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Segment constant_segment(double h, double dt, const ModeVector& v) {
  return Segment(h, dt, std::vector<ModeVector>(delay_steps(h, dt) + 1, v));
}

ModeVector first_mode(int n, double c) {
  ModeVector v = ModeVector::Zero(n);
  v(0) = c;
  return v;
}

SpectralOperator laplacian(int n) { return assemble_operator(OperatorDescriptor{}, n); }

// Model shared by the ensemble criteria: builtin coefficients, 16 modes, 64-interval grid.
constexpr int kModes = 16;
constexpr double kH = 0.1, kDt = 0.01;

Stepper ensemble_stepper(double t_end, int store_stride, int checkpoint_stride) {
  CoefficientSet cs;
  cs.grid_points = 64;
  SolverConfig cfg;
  cfg.dt = kDt;
  cfg.t_end = t_end;
  cfg.store_stride = store_stride;
  cfg.checkpoint_stride = checkpoint_stride;
  return Stepper(laplacian(kModes), QWienerSpec::geometric(kModes), cs, kH, cfg);
}

Segment ensemble_initial() {
  return constant_segment(kH, kDt, first_mode(kModes, 1.0 / std::sqrt(2.0)));
}

std::string ks_summary(const ComparisonReport& r) {
  std::string s;
  for (const auto& row : r.rows) {
    s += fmt(" %s=%.4f%s", row.observable.c_str(), row.ks, row.pass ? "" : "(!)");
  }
  return s + fmt(" crit=%.4f", r.rows.empty() ? 0.0 : r.rows[0].ks_critical);
}

// 1. Stationary law of the Ornstein-Uhlenbeck case against its closed form.
Outcome ou_stationary_law() {
  const int n = 8;
  const auto op = laplacian(n);
  CoefficientSet cs;
  cs.f = ScalarFunction::zero();
  cs.sigma = ScalarFunction::constant(1.0);
  cs.kernel = Kernel::zero();
  SolverConfig cfg;
  cfg.dt = 1e-3;
  cfg.t_end = 200;
  const QWienerSpec spec = QWienerSpec::geometric(n);  // lambda_k = 2^-k
  const Stepper st(op, spec, cs, kH, cfg);
  const std::vector<Trajectory> traj{
      simulate(constant_segment(kH, cfg.dt, ModeVector::Zero(n)), st, RngStream(kSeed, 50000))};
  const EmpiricalMeasure mu = krylov_bogoliubov(traj, 50.0, 1);
  const auto summary = summarize(mu, ObservableSchema{3, {}});
  bool ok = true;
  std::string detail;
  for (int k = 1; k <= 3; ++k) {
    const auto& s = summary[1 + k];
    const double expected = spec.lambdas()(k - 1) / (2 * op.eigenvalue(k - 1));
    const double z = (s.variance - expected) / s.variance_stderr;
    ok = ok && std::abs(z) <= 3.0;
    detail += fmt(" var_%d=%.5g expected=%.5g z=%+.2f;", k, s.variance, expected, z);
  }
  return {ok, detail};
}

// 2. One-mode truncation with a point-delay neutral term against a method-of-steps oracle.
Outcome neutral_delay_oracle() {
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  const double h = 0.25, dt = 1e-4, t_end = 5 * h, c0 = 1.0, f_scale = 2.0, g_scale = 0.3;
  CoefficientSet cs;
  cs.f = ScalarFunction::bounded_tanh(f_scale);
  cs.sigma = ScalarFunction::zero();
  cs.kernel = Kernel::separable_tanh(g_scale);
  cs.grid_points = 256;
  SolverConfig cfg;
  cfg.dt = dt;
  cfg.t_end = t_end;
  const auto op = laplacian(1);
  const Stepper st(op, QWienerSpec::geometric(1), cs, h, cfg);
  const Trajectory tr = simulate(constant_segment(h, dt, first_mode(1, c0)), st, RngStream(kSeed, 0));

  const double r2 = std::sqrt(2.0);
  auto F = [&](double c) {
    return GK::integrate([&](double x) { return f_scale * std::tanh(c * r2 * std::sin(pi * x)) *
                                                r2 * std::sin(pi * x); },
                         0.0, 1.0, 15, 1e-14);
  };
  auto G = [&](double c) {
    return g_scale / r2 *
           GK::integrate([&](double y) { return std::tanh(c * r2 * std::sin(pi * y)); }, 0.0, 1.0,
                         15, 1e-14);
  };
  const double ref_step = dt / 4;
  const auto ref = oracle::neutral_method_of_steps(pi * pi, h, c0, t_end, ref_step, F, G);
  double err = 0, scale = 0;
  for (std::size_t j = 0; j < tr.times.size(); ++j) {
    const double r = ref[j * 4];
    err = std::max(err, std::abs(tr.snapshots[j](0) - r));
    scale = std::max(scale, std::abs(r));
  }
  const double rel = err / scale;
  return {rel < 1e-3, fmt(" rel_sup_error=%.3e (bound 1e-3)", rel)};
}

// 3. Successive approximations on the builtin coefficients versus the direct solve.
Outcome picard_convergence() {
  const double h = 0.05, dt = 1e-3;
  CoefficientSet cs;
  cs.grid_points = 64;
  SolverConfig cfg;
  cfg.dt = dt;
  cfg.t_end = 0.5;
  cfg.mode = SolverMode::picard;
  cfg.picard_iters = 8;
  const Stepper st(laplacian(kModes), QWienerSpec::geometric(kModes), cs, h, cfg);
  const Segment init = constant_segment(h, dt, first_mode(kModes, 1.0 / std::sqrt(2.0)));
  const auto its = picard_run(init, st, kSeed, 60000);
  const Trajectory direct = simulate(init, st, RngStream(kSeed, 60000));
  bool decreasing = true;
  std::string detail = " sup_diff:";
  for (int i = 1; i <= 8; ++i) {
    detail += fmt(" %.2e", its[i].sup_diff);
    if (i >= 3) decreasing = decreasing && its[i].sup_diff < its[i - 1].sup_diff;
  }
  double err = 0;
  for (std::size_t j = 0; j < direct.snapshots.size(); ++j) {
    err = std::max(err, (its[8].path[j] - direct.snapshots[j]).norm());
  }
  detail += fmt("; |iterate8 - direct|=%.2e (bound 1e-6)", err);
  return {decreasing && err <= 1e-6, detail};
}

// 4. Contraction arithmetic against 50-digit evaluation on random admissible tuples.
Outcome contraction_arithmetic() {
  std::mt19937_64 gen(kSeed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0;
  bool ok = true;
  for (int i = 0; i < 20; ++i) {
    const double mg = 0.05 + 0.9 * u(gen), p = 2.5 + 3 * u(gen), alpha = 0.1 + 0.9 * u(gen);
    const double c = 0.2 + 2 * u(gen);
    const auto r = find_contraction_horizon(mg, p, alpha, c);
    const double g50 = oracle::gamma50(mg, p, alpha, c, r.T1).convert_to<double>();
    const double k50 = oracle::continuity50(mg, p, alpha, c, r.T1).convert_to<double>();
    const double t_probe = std::exp(std::log(1e-3) + 6 * u(gen));
    const double gp = oracle::gamma50(mg, p, alpha, c, t_probe).convert_to<double>();
    worst = std::max({worst, std::abs(r.gamma - g50) / g50, std::abs(r.continuity - k50) / k50,
                      std::abs(contraction_gamma(mg, p, alpha, c, t_probe) - gp) / gp});
    const bool inside = !r.capped && r.gamma < 1 && r.continuity < 1;
    const bool outside = !(contraction_gamma(mg, p, alpha, c, 1.01 * r.T1) < 1 &&
                           continuity_lhs(mg, p, alpha, c, 1.01 * r.T1) < 1);
    ok = ok && inside && outside;
  }
  ok = ok && worst <= 1e-12;
  return {ok, fmt(" 20 tuples; worst rel diff vs 50-digit=%.2e; admissible at T1, not at 1.01*T1: %s",
                  worst, ok ? "yes" : "no")};
}

// 5. Fractional semigroup bound on a grid disjoint from the fitting grid.
Outcome semigroup_bound() {
  const auto op = laplacian(32);
  const double lo = std::log(1e-6), hi = std::log(1e2);
  long long violations = 0;
  double worst = 0;
  for (double alpha : {0.25, 0.5, 0.75}) {
    const auto dc = decay_constants(op, alpha, 1e-6, 1e2, 2000);
    for (int i = 0; i < 1000; ++i) {
      // (i + 1/2) / 1000 never equals j / 1999.
      const double t = std::exp(lo + (hi - lo) * (i + 0.5) / 1000);
      const double lhs = frac_semigroup_norm(op, alpha, t);
      const double bound = dc.c_alpha * std::pow(t, -alpha) * std::exp(-dc.delta * t);
      worst = std::max(worst, lhs / bound);
      if (lhs > bound) ++violations;
    }
  }
  return {violations == 0, fmt(" violations=%lld of 3000; max ratio=%.15f", violations, worst)};
}

// 6. Log-Hoelder drift against its modulus, plus the corner equality.
Outcome modulus_bound() {
  RngStream rng(kSeed, 1);
  const ScalarFunction f = ScalarFunction::log_holder(3.0);
  const Modulus n = Modulus::log_modulus();
  const ModulusCheck c = modulus_bound_check(f, n, 3.0, 1'000'000, rng, 0.01);
  const double e2 = std::exp(-2.0);
  const double lhs = std::pow(std::abs(f(e2) - f(0.0)), 3);
  const double rhs = n(std::exp(-6.0));
  const double exact = 6 * std::exp(-6.0);
  const double corner = std::max(std::abs(lhs - exact), std::abs(rhs - exact)) / exact;
  const bool ok = c.violations == 0 && c.samples == 1'000'000 && c.log_uniform_samples >= 10'000 &&
                  corner <= 1e-14;
  return {ok, fmt(" pairs=%lld log-uniform=%lld violations=%lld max_ratio=%.6f; corner rel=%.1e",
                  c.samples, c.log_uniform_samples, c.violations, c.max_ratio, corner)};
}

// 7. Divergence of int ds/N(s) for the builtin modulus, and the verdict for s^2.
Outcome osgood_divergence() {
  const Modulus n = Modulus::log_modulus();
  const double j = std::exp(-2.0);
  // Tail above the junction: int_j^1 ds / (s + j).
  const double tail = std::log((1 + j) / (2 * j));
  double worst = 0;
  for (int k = 2; k <= 5; ++k) {
    const double eps = std::exp(-std::exp(double(k)));
    const double expected = k - std::log(2.0) + tail;
    worst = std::max(worst, std::abs(osgood_integral(n, eps) - expected) / expected);
  }
  const bool quad_negative = !osgood_verdict(Modulus::quadratic()).certified;
  const bool builtin_positive = osgood_verdict(n).certified;
  return {worst < 0.01 && quad_negative && builtin_positive,
          fmt(" worst rel diff=%.2e (bound 1e-2); builtin certified=%d; s^2 certified=%d", worst,
              builtin_positive, !quad_negative)};
}

struct EnsembleRun {
  std::vector<Trajectory> trajectories;
  EmpiricalMeasure measure;
};

// 8. Tightness of the segment process over a long horizon.
Outcome tightness(EnsembleRun& run) {
  const double t_end = 100.0;
  const int every = static_cast<int>(std::lround(1.0 / kDt));
  const Stepper st = ensemble_stepper(t_end, every, every);
  run.trajectories = simulate_ensemble(ensemble_initial(), st, kSeed, 200, 0);
  run.measure = krylov_bogoliubov(run.trajectories, std::max(2 * kH, t_end / 4), 1);
  const std::vector<double> R{0.5, 1, 2, 4, 8};
  const TightnessReport rep = tightness_diagnostic(run.trajectories, R);
  bool monotone = true;
  std::string detail = " P{sup>R}:";
  for (std::size_t i = 0; i < R.size(); ++i) {
    detail += fmt(" R=%g:%.4f", R[i], rep.estimates[i]);
    if (i > 0) monotone = monotone && rep.estimates[i] <= rep.estimates[i - 1];
  }
  return {monotone && rep.estimates.back() < 0.05, detail};
}

// 9. Invariance of the estimated measure under the transition semigroup.
Outcome invariance(const EnsembleRun& run) {
  const Stepper st = ensemble_stepper(1.0, 1, 0);
  const ComparisonReport r = invariance_test(run.measure, st, 5.0, ObservableSchema{}, 500, kSeed, 1000);
  return {r.all_pass(), ks_summary(r)};
}

// 10. Time homogeneity of the transition function.
Outcome homogeneity() {
  const Stepper st = ensemble_stepper(1.0, 1, 0);
  const ComparisonReport r =
      homogeneity_test(ensemble_initial(), st, 1.0, 3.0, ObservableSchema{}, 1000, kSeed, 10000);
  return {r.all_pass(), ks_summary(r)};
}

// 11. Continuous dependence on the initial segment.
Outcome continuous_dependence() {
  const Stepper st = ensemble_stepper(1.0, 1, 0);
  const Segment phi = ensemble_initial();
  std::vector<Segment> psi;
  for (int n = 1; n <= 6; ++n) {
    psi.push_back(constant_segment(kH, kDt, phi.current() + first_mode(kModes, std::ldexp(1.0, -n))));
  }
  const DependenceReport r = continuous_dependence_probe(phi, psi, 3.0, 2.0, 100, st, kSeed, 20000);
  bool ok = true;
  std::string detail = " E sup|du|^3:";
  for (std::size_t i = 0; i < r.estimates.size(); ++i) {
    detail += fmt(" %.3e", r.estimates[i]);
    ok = ok && std::abs(r.distances[i] - std::ldexp(1.0, -int(i) - 1)) < 1e-15;
    if (i > 0) ok = ok && r.estimates[i] <= r.estimates[i - 1] + 2 * r.step_stderrs[i - 1];
  }
  ok = ok && r.estimates.back() < r.estimates.front() / 10;
  return {ok, detail};
}

// 12. Contraction of the implicit neutral solve for a g that reads the current state.
Outcome fixed_point_contraction() {
  CoefficientSet cs;
  cs.kernel = Kernel::separable_linear(0.2251);
  cs.kernel_theta = 0.0;
  cs.grid_points = 64;
  SolverConfig cfg;
  cfg.dt = 1e-3;
  cfg.t_end = 1.0;
  const Stepper st(laplacian(kModes), QWienerSpec::geometric(kModes), cs, kH, cfg);
  RngStream probe(kSeed, 2);
  const double mg = lipschitz_probe_g(st.coefficients(), 20000, probe);

  RngStream rng(kSeed, 70000);
  Segment seg = constant_segment(kH, cfg.dt, first_mode(kModes, 1.0 / std::sqrt(2.0)));
  double worst_rate = 0;
  int worst_excess = -1000;
  for (int j = 0; j < cfg.n_steps(); ++j) {
    const StepResult r = st.step(seg, rng, true);
    const auto& res = r.residuals;
    if (res.size() >= 2 && res.back() > 0) {
      const double rate = std::pow(res.back() / res.front(), 1.0 / (res.size() - 1));
      worst_rate = std::max(worst_rate, rate);
    }
    const int bound =
        static_cast<int>(std::ceil(std::log(cfg.fp_tol / res.front()) / std::log(0.5))) + 1;
    worst_excess = std::max(worst_excess, r.fp_iters - bound);
    seg.push(r.state);
  }
  const bool ok = std::abs(mg - 0.5) < 0.1 && worst_rate <= 0.55 && worst_excess <= 0;
  return {ok, fmt(" probed Mg=%.3f; worst measured rate=%.3f (bound 0.55); max iters over bound=%d",
                  mg, worst_rate, worst_excess)};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    double budget_s;  // 0 = no runtime bound
    std::function<Outcome()> run;
  };
  EnsembleRun ensemble;
  const std::vector<Criterion> criteria{
      {"C1 OU stationary law", 120, ou_stationary_law},
      {"C2 neutral delay vs method of steps", 60, neutral_delay_oracle},
      {"C3 Picard convergence", 120, picard_convergence},
      {"C4 contraction arithmetic", 0, contraction_arithmetic},
      {"C5 fractional semigroup bound", 0, semigroup_bound},
      {"C6 non-Lipschitz modulus bound", 0, modulus_bound},
      {"C7 Osgood divergence", 0, osgood_divergence},
      {"C8 tightness", 0, [&] { return tightness(ensemble); }},
      {"C9 invariance", 0, [&] { return invariance(ensemble); }},
      {"C10 time homogeneity", 0, homogeneity},
      {"C11 continuous dependence", 0, continuous_dependence},
      {"C12 fixed-point contraction", 0, fixed_point_contraction},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string(" exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget_s > 0 && secs > c.budget_s) {
      o.pass = false;
      o.detail += fmt(" runtime over %.0f s budget", c.budget_s);
    }
    if (!o.pass) ++failures;
    std::printf("[%s] %s:%s (%.1f s)\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", int(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
