#include <algorithm>
#include <cmath>
#include <random>

#include <doctest.h>

#include "nsfde/errors.hpp"
#include "nsfde/ks.hpp"
#include "nsfde/measure.hpp"
#include "oracles.hpp"

using namespace nsfde;

namespace {

SpectralOperator laplacian(int n) { return assemble_operator(OperatorDescriptor{}, n); }

CoefficientSet inert() {
  CoefficientSet cs;
  cs.f = ScalarFunction::zero();
  cs.sigma = ScalarFunction::zero();
  cs.kernel = Kernel::zero();
  return cs;
}

Stepper make_stepper(const CoefficientSet& cs, int n, double dt, double t_end, int store = 1,
                     int checkpoint = 0) {
  SolverConfig cfg;
  cfg.dt = dt;
  cfg.t_end = t_end;
  cfg.store_stride = store;
  cfg.checkpoint_stride = checkpoint;
  return Stepper(laplacian(n), QWienerSpec::geometric(n), cs, 0.1, cfg);
}

Segment constant_segment(double dt, const ModeVector& v) {
  return Segment(0.1, dt, std::vector<ModeVector>(delay_steps(0.1, dt) + 1, v));
}

}  // namespace

TEST_CASE("KS statistic") {
  const std::vector<double> zero{0.0}, one{1.0}, pair{0.0, 2.0};
  CHECK(ks_statistic(zero, one) == 1.0);
  CHECK(ks_statistic(pair, one) == 0.5);
  CHECK(ks_statistic(one, one) == 0.0);
  CHECK(ks_statistic(std::vector<double>{1, 1, 2}, std::vector<double>{1, 2, 2}) ==
        doctest::Approx(1.0 / 3));

  std::mt19937_64 gen(8);
  std::normal_distribution<double> z;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> a(1 + trial * 3), b(2 + trial * 2);
    for (auto& x : a) x = std::round(4 * z(gen)) / 4;  // rounding creates ties
    for (auto& x : b) x = std::round(4 * (z(gen) + 0.3)) / 4;
    CHECK(ks_statistic(a, b) == doctest::Approx(oracle::ks_brute(a, b)).epsilon(1e-15));
  }

  CHECK(ks_critical_value(100, 100) == doctest::Approx(1.358 * std::sqrt(0.02)));
  CHECK(ks_critical_value(500, 2000, 1.0) == doctest::Approx(std::sqrt(2500.0 / 1e6)));
}

TEST_CASE("batch-means standard error") {
  std::mt19937_64 gen(1);
  std::normal_distribution<double> z;
  std::vector<double> iid(64000);
  for (auto& x : iid) x = z(gen);
  const double se = batch_means_stderr(iid, 32);
  CHECK(se == doctest::Approx(1.0 / std::sqrt(64000.0)).epsilon(0.4));
  CHECK(batch_means_stderr(std::vector<double>(100, 3.0), 10) == 0.0);
}

TEST_CASE("Krylov-Bogoliubov estimator") {
  const Stepper st = make_stepper(inert(), 3, 0.01, 1.0, 1, 50);
  const auto ens = simulate_ensemble(Segment(0.1, 0.01, 3), st, 1, 4);
  REQUIRE(ens.size() == 4);
  for (int i = 0; i < 4; ++i) CHECK(ens[i].stream == static_cast<std::uint64_t>(i));

  const EmpiricalMeasure mu = krylov_bogoliubov(ens, 0.5, 2);
  CHECK(mu.records.size() == 4 * 26);
  CHECK(mu.segments.size() == 4 * 2);  // checkpoints at t = 0.5 and 1.0
  CHECK(mu.weight() == doctest::Approx(1.0 / 104));
  for (const auto& r : mu.records) {
    CHECK(r.t >= 0.5);
    CHECK(r.state.isZero(0.0));
  }
  const ObservableSchema schema;
  for (const auto& s : summarize(mu, schema)) {
    CHECK(s.mean == 0.0);
    CHECK(s.variance == 0.0);
  }

  // Merge order does not depend on the order of the ensemble.
  const Stepper noisy = make_stepper(CoefficientSet{}, 3, 0.01, 1.0);
  auto many = simulate_ensemble(constant_segment(0.01, ModeVector::Ones(3)), noisy, 2, 5);
  const EmpiricalMeasure a = krylov_bogoliubov(many, 0.3, 1);
  std::reverse(many.begin(), many.end());
  const EmpiricalMeasure b = krylov_bogoliubov(many, 0.3, 1);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].state == b.records[i].state);
    CHECK(a.records[i].stream == b.records[i].stream);
  }

  CHECK_THROWS_AS(krylov_bogoliubov(ens, 2.0, 1), ConfigError);
  CHECK_THROWS_AS(krylov_bogoliubov(ens, 0.5, 0), ConfigError);
  CHECK_THROWS_AS(krylov_bogoliubov(std::span<const Trajectory>{}, 0.5, 1), DomainError);
}

TEST_CASE("tightness diagnostic") {
  const Stepper zero = make_stepper(inert(), 3, 0.01, 1.0, 10);
  const auto ens = simulate_ensemble(Segment(0.1, 0.01, 3), zero, 1, 6);
  const TightnessReport r = tightness_diagnostic(ens, {1.0, 0.0, 0.5});
  CHECK(r.R_grid == std::vector<double>{0.0, 0.5, 1.0});
  for (double e : r.estimates) CHECK(e == 0.0);
  CHECK(r.n_trajectories == 6);
  CHECK(r.checkpoint_times.size() == 11);

  const Stepper noisy = make_stepper(CoefficientSet{}, 3, 0.01, 1.0, 10);
  const auto live = simulate_ensemble(constant_segment(0.01, ModeVector::Ones(3)), noisy, 3, 20);
  const TightnessReport t = tightness_diagnostic(live, {0.0, 0.5, 1.0, 2.0, 100.0});
  CHECK(t.estimates.front() == 1.0);
  CHECK(t.estimates.back() == 0.0);
  for (std::size_t i = 1; i < t.estimates.size(); ++i) CHECK(t.estimates[i] <= t.estimates[i - 1]);
}

TEST_CASE("sample comparison") {
  const ObservableSchema schema{1, {}};
  CHECK(schema.names() == std::vector<std::string>{"segment_norm", "state_norm", "coeff_1"});
  std::mt19937_64 gen(4);
  std::normal_distribution<double> z;
  std::vector<std::vector<double>> a, b, shifted;
  for (int i = 0; i < 400; ++i) {
    a.push_back({std::abs(z(gen)), std::abs(z(gen)), z(gen)});
    b.push_back({std::abs(z(gen)), std::abs(z(gen)), z(gen)});
    shifted.push_back({b.back()[0] + 1, b.back()[1], b.back()[2]});
  }
  const ComparisonReport same = compare_samples(schema, a, a);
  CHECK(same.all_pass());
  for (const auto& row : same.rows) CHECK(row.ks == 0.0);
  const ComparisonReport moved = compare_samples(schema, a, shifted);
  CHECK_FALSE(moved.all_pass());
  CHECK_FALSE(moved.rows[0].pass);
  CHECK(moved.rows[0].difference == doctest::Approx(moved.rows[0].mean_after - moved.rows[0].mean_before));
  CHECK_THROWS_AS(compare_samples(schema, a, {{1.0}}), ShapeError);
}

TEST_CASE("invariance at the zero fixed point") {
  const Stepper st = make_stepper(inert(), 3, 0.01, 2.0, 10, 50);
  const auto ens = simulate_ensemble(Segment(0.1, 0.01, 3), st, 1, 3);
  const EmpiricalMeasure mu = krylov_bogoliubov(ens, 0.5, 1);
  const ComparisonReport r = invariance_test(mu, st, 1.0, ObservableSchema{}, 50, 9, 100);
  CHECK(r.n_before == 50);
  CHECK(r.n_after == 50);
  CHECK(r.all_pass());
  for (const auto& row : r.rows) CHECK(row.ks == 0.0);

  EmpiricalMeasure bare = mu;
  bare.segments.clear();
  CHECK_THROWS_AS(invariance_test(bare, st, 1.0, ObservableSchema{}, 50, 9, 100), ConfigError);
}

TEST_CASE("time homogeneity without noise") {
  CoefficientSet cs;
  cs.sigma = ScalarFunction::zero();
  const Stepper st = make_stepper(cs, 4, 0.01, 1.0);
  const Segment phi = constant_segment(0.01, ModeVector::Constant(4, 0.3));
  const ComparisonReport r = homogeneity_test(phi, st, 0.5, 1.5, ObservableSchema{}, 20, 1, 0);
  CHECK(r.all_pass());
  for (const auto& row : r.rows) {
    CHECK(row.ks == 0.0);
    CHECK(row.mean_before == row.mean_after);
  }
}

TEST_CASE("continuous dependence probe") {
  const Stepper st = make_stepper(inert(), 3, 0.01, 1.0);
  const Segment phi = constant_segment(0.01, ModeVector::Ones(3));
  std::vector<Segment> psi;
  for (int n = 0; n <= 3; ++n) {
    psi.push_back(constant_segment(0.01, ModeVector::Ones(3) * (1 + std::ldexp(1.0, -n))));
  }
  psi.push_back(phi);
  const DependenceReport r = continuous_dependence_probe(phi, psi, 3.0, 0.5, 4, st, 1, 0);
  REQUIRE(r.estimates.size() == 5);
  // Linear contraction: the sup is attained at t = 0.
  for (int n = 0; n <= 3; ++n) {
    const double d = std::ldexp(std::sqrt(3.0), -n);
    CHECK(r.distances[n] == doctest::Approx(d).epsilon(1e-14));
    CHECK(r.estimates[n] == doctest::Approx(d * d * d).epsilon(1e-12));
    CHECK(r.stderrs[n] == doctest::Approx(0.0).scale(1e-12));
  }
  CHECK(r.distances[4] == 0.0);
  CHECK(r.estimates[4] == 0.0);
  CHECK(r.step_stderrs.size() == 4);

  const std::vector<Segment> wrong{Segment(0.1, 0.02, 3)};
  CHECK_THROWS_AS(continuous_dependence_probe(phi, wrong, 3.0, 0.5, 4, st, 1, 0), ShapeError);
}

TEST_CASE("invariance of the Ornstein-Uhlenbeck law") {
  CoefficientSet cs = inert();
  cs.sigma = ScalarFunction::constant(1.0);
  const Stepper st = make_stepper(cs, 4, 0.01, 30.0, 100, 100);
  const auto ens = simulate_ensemble(Segment(0.1, 0.01, 4), st, 21, 40);
  const EmpiricalMeasure mu = krylov_bogoliubov(ens, 5.0, 1);
  const ComparisonReport r = invariance_test(mu, st, 2.0, ObservableSchema{}, 400, 21, 1000);
  for (const auto& row : r.rows) {
    CHECK(std::abs(row.difference) < 4 * row.stderr_pooled);
    CHECK(row.ks < 2 * row.ks_critical);
  }
}
