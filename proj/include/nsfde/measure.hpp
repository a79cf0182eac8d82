#ifndef NSFDE_MEASURE_HPP
#define NSFDE_MEASURE_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nsfde/segment.hpp"
#include "nsfde/solver.hpp"

namespace nsfde {

/// Finite family of continuous functionals on C_h used to compare measures: the segment
/// sup-norm, the state norm, the first `n_coeffs` mode coefficients and user-declared linear
/// functionals <w, u(t)>.
struct ObservableSchema {
  int n_coeffs = 3;
  std::vector<ModeVector> functionals;

  int size() const { return 2 + n_coeffs + static_cast<int>(functionals.size()); }
  std::vector<std::string> names() const;
  std::vector<double> evaluate(double seg_norm, const ModeVector& state) const;
  std::vector<double> evaluate(const Segment& seg) const {
    return evaluate(seg.sup_norm(), seg.current());
  }
};

struct MeasureRecord {
  double t;
  std::uint64_t stream;
  double seg_norm;
  ModeVector state;
};

struct SegmentSample {
  double t;
  std::uint64_t stream;
  Segment segment;
};

/// Equal-weight occupation measure of post-burn-in snapshots.
struct EmpiricalMeasure {
  std::vector<MeasureRecord> records;
  std::vector<SegmentSample> segments;
  double burn_in = 0.0;
  int thin = 1;
  double t_end = 0.0;
  std::vector<std::uint64_t> seeds;

  double weight() const { return records.empty() ? 0.0 : 1.0 / records.size(); }
};

/// Time average over snapshots with t >= burn_in, keeping every `thin`-th stored snapshot.
/// Trajectories are merged in (seed, stream) order so the result does not depend on the
/// order of `ensemble`.
EmpiricalMeasure krylov_bogoliubov(std::span<const Trajectory> ensemble, double burn_in,
                                   int thin);

struct ObservableSummary {
  std::string name;
  double mean;
  double variance;
  double mean_stderr;      ///< batch-means standard error
  double variance_stderr;  ///< batch-means standard error of the variance estimate
};

std::vector<ObservableSummary> summarize(const EmpiricalMeasure& mu,
                                         const ObservableSchema& schema, int batches = 32);

/// Batch-means standard error of the mean of a correlated series.
double batch_means_stderr(std::span<const double> values, int batches);

struct TightnessReport {
  std::vector<double> R_grid;
  std::vector<double> estimates;  ///< max over checkpoints of P{||u_t||_{C_h} > R}
  int n_trajectories = 0;
  std::vector<double> checkpoint_times;
};

/// Checkpoints are the stored snapshots, which must be aligned across the ensemble.
TightnessReport tightness_diagnostic(std::span<const Trajectory> ensemble,
                                     std::vector<double> R_grid);

struct ComparisonRow {
  std::string observable;
  double mean_before;
  double mean_after;
  double difference;
  double stderr_pooled;
  double ks;
  double ks_critical;
  bool pass;  ///< ks < ks_critical
};

struct ComparisonReport {
  std::vector<ComparisonRow> rows;
  int n_before = 0;
  int n_after = 0;

  bool all_pass() const;
};

/// Two-sample comparison of every observable.
ComparisonReport compare_samples(const ObservableSchema& schema,
                                 const std::vector<std::vector<double>>& before,
                                 const std::vector<std::vector<double>>& after);

/// Runs `n` trajectories from `initial` with streams stream_base + i; parallel over
/// trajectories, results in stream order.
std::vector<Trajectory> simulate_ensemble(const Segment& initial, const Stepper& stepper,
                                          std::uint64_t seed, int n,
                                          std::uint64_t stream_base = 0, double t0 = 0.0);

/// Draws `n_draws` stored segments from `mu`, evolves each for time `t` with fresh streams
/// stream_base + i, and compares observables before and after.
ComparisonReport invariance_test(const EmpiricalMeasure& mu, const Stepper& stepper, double t,
                                 const ObservableSchema& schema, int n_draws,
                                 std::uint64_t seed, std::uint64_t stream_base);

/// Compares u_t started at time s from phi with u_{t-s} started at 0 from phi, each side
/// with its own fresh streams. The integrator is autonomous, so this checks the harness.
ComparisonReport homogeneity_test(const Segment& phi, const Stepper& stepper, double s, double t,
                                  const ObservableSchema& schema, int n_samples,
                                  std::uint64_t seed, std::uint64_t stream_base);

struct DependenceReport {
  std::vector<double> distances;     ///< ||phi - psi_n||_{C_h}
  std::vector<double> estimates;     ///< mean over paths of sup_t ||u(t,phi) - u(t,psi_n)||^p
  std::vector<double> stderrs;
  std::vector<double> step_stderrs;  ///< stderr of the paired difference estimate[n+1]-estimate[n]
};

/// Coupled Monte Carlo: path i of phi and of every psi_n shares stream stream_base + i.
DependenceReport continuous_dependence_probe(const Segment& phi, std::span<const Segment> psi_list,
                                             double p, double T, int n_paths,
                                             const Stepper& stepper, std::uint64_t seed,
                                             std::uint64_t stream_base);

}  // namespace nsfde

#endif  // NSFDE_MEASURE_HPP
