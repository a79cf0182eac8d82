#include "nsfde/measure.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <thread>

#include "nsfde/errors.hpp"
#include "nsfde/ks.hpp"

namespace nsfde {

namespace {

// Runs body(i) for i in [0, n) on up to hardware_concurrency threads. The first exception
// thrown by any worker is rethrown after all workers have joined.
template <class Body>
void parallel_for(int n, Body body) {
  const int workers =
      std::max(1, std::min<int>(n, static_cast<int>(std::thread::hardware_concurrency())));
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int i = w; i < n; i += workers) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_variance(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

std::vector<double> column(const std::vector<std::vector<double>>& rows, int j) {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[j]);
  return out;
}

std::vector<std::size_t> order_by_stream(std::span<const Trajectory> ensemble) {
  std::vector<std::size_t> idx(ensemble.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (ensemble[a].seed != ensemble[b].seed) return ensemble[a].seed < ensemble[b].seed;
    return ensemble[a].stream < ensemble[b].stream;
  });
  return idx;
}

}  // namespace

std::vector<std::string> ObservableSchema::names() const {
  std::vector<std::string> out{"segment_norm", "state_norm"};
  for (int k = 1; k <= n_coeffs; ++k) out.push_back("coeff_" + std::to_string(k));
  for (std::size_t i = 0; i < functionals.size(); ++i) {
    out.push_back("functional_" + std::to_string(i + 1));
  }
  return out;
}

std::vector<double> ObservableSchema::evaluate(double seg_norm, const ModeVector& state) const {
  if (n_coeffs > state.size()) throw ShapeError("schema asks for more coefficients than modes");
  std::vector<double> out;
  out.reserve(size());
  out.push_back(seg_norm);
  out.push_back(state.norm());
  for (int k = 0; k < n_coeffs; ++k) out.push_back(state(k));
  for (const auto& w : functionals) {
    if (w.size() != state.size()) throw ShapeError("functional / state mode count mismatch");
    out.push_back(w.dot(state));
  }
  return out;
}

EmpiricalMeasure krylov_bogoliubov(std::span<const Trajectory> ensemble, double burn_in,
                                   int thin) {
  if (ensemble.empty()) throw DomainError("krylov_bogoliubov: empty ensemble");
  if (thin < 1) throw ConfigError("measure.thin", "must be at least 1");
  if (!(burn_in >= 0.0)) throw ConfigError("measure.burn_in", "must be nonnegative");

  EmpiricalMeasure mu;
  mu.burn_in = burn_in;
  mu.thin = thin;
  const double slack = 1e-9 * std::max(1.0, burn_in);
  for (std::size_t i : order_by_stream(ensemble)) {
    const Trajectory& tr = ensemble[i];
    if (!tr.times.empty()) mu.t_end = std::max(mu.t_end, tr.times.back());
    int eligible = 0;
    for (std::size_t j = 0; j < tr.times.size(); ++j) {
      if (tr.times[j] < burn_in - slack) continue;
      if (eligible++ % thin != 0) continue;
      mu.records.push_back({tr.times[j], tr.stream, tr.seg_norms[j], tr.snapshots[j]});
    }
    for (std::size_t j = 0; j < tr.checkpoints.size(); ++j) {
      if (tr.checkpoint_times[j] < burn_in - slack) continue;
      mu.segments.push_back({tr.checkpoint_times[j], tr.stream, tr.checkpoints[j]});
    }
    if (std::find(mu.seeds.begin(), mu.seeds.end(), tr.seed) == mu.seeds.end()) {
      mu.seeds.push_back(tr.seed);
    }
  }
  if (mu.records.empty()) {
    throw ConfigError("measure.burn_in", "no snapshots after burn-in; the window is empty");
  }
  return mu;
}

double batch_means_stderr(std::span<const double> values, int batches) {
  const int n = static_cast<int>(values.size());
  if (n < 2) return 0.0;
  const int b = std::max(2, std::min(batches, n));
  std::vector<double> means;
  means.reserve(b);
  for (int k = 0; k < b; ++k) {
    const int lo = static_cast<int>(static_cast<long long>(k) * n / b);
    const int hi = static_cast<int>(static_cast<long long>(k + 1) * n / b);
    means.push_back(mean_of(values.subspan(lo, hi - lo)));
  }
  return std::sqrt(sample_variance(means) / b);
}

std::vector<ObservableSummary> summarize(const EmpiricalMeasure& mu,
                                         const ObservableSchema& schema, int batches) {
  std::vector<std::vector<double>> rows;
  rows.reserve(mu.records.size());
  for (const auto& r : mu.records) rows.push_back(schema.evaluate(r.seg_norm, r.state));
  const auto names = schema.names();
  std::vector<ObservableSummary> out;
  for (int j = 0; j < schema.size(); ++j) {
    const std::vector<double> x = column(rows, j);
    const double m = mean_of(x);
    std::vector<double> dev(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) dev[i] = (x[i] - m) * (x[i] - m);
    out.push_back({names[j], m, sample_variance(x), batch_means_stderr(x, batches),
                   batch_means_stderr(dev, batches)});
  }
  return out;
}

TightnessReport tightness_diagnostic(std::span<const Trajectory> ensemble,
                                     std::vector<double> R_grid) {
  if (ensemble.empty()) throw DomainError("tightness_diagnostic: empty ensemble");
  if (R_grid.empty()) throw DomainError("tightness_diagnostic: empty R grid");
  std::sort(R_grid.begin(), R_grid.end());
  std::size_t n_check = ensemble.front().seg_norms.size();
  for (const auto& tr : ensemble) n_check = std::min(n_check, tr.seg_norms.size());
  if (n_check < 2) throw DomainError("tightness_diagnostic needs at least two checkpoints");

  TightnessReport rep;
  rep.R_grid = R_grid;
  rep.n_trajectories = static_cast<int>(ensemble.size());
  rep.checkpoint_times.assign(ensemble.front().times.begin(),
                              ensemble.front().times.begin() + n_check);
  rep.estimates.assign(R_grid.size(), 0.0);
  for (std::size_t c = 0; c < n_check; ++c) {
    for (std::size_t r = 0; r < R_grid.size(); ++r) {
      int exceed = 0;
      for (const auto& tr : ensemble) exceed += tr.seg_norms[c] > R_grid[r];
      rep.estimates[r] = std::max(rep.estimates[r], static_cast<double>(exceed) / ensemble.size());
    }
  }
  return rep;
}

bool ComparisonReport::all_pass() const {
  return std::all_of(rows.begin(), rows.end(), [](const ComparisonRow& r) { return r.pass; });
}

ComparisonReport compare_samples(const ObservableSchema& schema,
                                 const std::vector<std::vector<double>>& before,
                                 const std::vector<std::vector<double>>& after) {
  if (before.empty() || after.empty()) throw DomainError("compare_samples: empty sample");
  for (const auto* side : {&before, &after}) {
    for (const auto& row : *side) {
      if (static_cast<int>(row.size()) != schema.size()) {
        throw ShapeError("compare_samples: record has " + std::to_string(row.size()) +
                         " observables, schema has " + std::to_string(schema.size()));
      }
    }
  }
  ComparisonReport rep;
  rep.n_before = static_cast<int>(before.size());
  rep.n_after = static_cast<int>(after.size());
  const double crit = ks_critical_value(before.size(), after.size());
  const auto names = schema.names();
  for (int j = 0; j < schema.size(); ++j) {
    const auto x = column(before, j);
    const auto y = column(after, j);
    ComparisonRow row;
    row.observable = names[j];
    row.mean_before = mean_of(x);
    row.mean_after = mean_of(y);
    row.difference = row.mean_after - row.mean_before;
    row.stderr_pooled =
        std::sqrt(sample_variance(x) / x.size() + sample_variance(y) / y.size());
    row.ks = ks_statistic(x, y);
    row.ks_critical = crit;
    row.pass = row.ks < crit;
    rep.rows.push_back(row);
  }
  return rep;
}

std::vector<Trajectory> simulate_ensemble(const Segment& initial, const Stepper& stepper,
                                          std::uint64_t seed, int n, std::uint64_t stream_base,
                                          double t0) {
  if (n < 1) throw ConfigError("measure.trajectories", "must be at least 1");
  std::vector<Trajectory> out(n);
  parallel_for(n, [&](int i) {
    out[i] = simulate(initial, stepper, RngStream(seed, stream_base + i), {}, t0);
  });
  return out;
}

ComparisonReport invariance_test(const EmpiricalMeasure& mu, const Stepper& stepper, double t,
                                 const ObservableSchema& schema, int n_draws,
                                 std::uint64_t seed, std::uint64_t stream_base) {
  if (mu.segments.empty()) {
    throw ConfigError("measure.checkpoint_interval",
                      "the measure stores no history segments to draw from");
  }
  if (n_draws < 2) throw DomainError("invariance_test needs at least two draws");
  if (!(t > 0.0)) throw DomainError("invariance_test needs t > 0");
  const Stepper evolve = stepper.with_horizon(t, delay_steps(t, stepper.dt()));

  RngStream pick(seed, stream_base + n_draws);
  std::vector<std::size_t> chosen(n_draws);
  for (auto& c : chosen) c = pick.index(mu.segments.size());

  std::vector<std::vector<double>> before(n_draws), after(n_draws);
  parallel_for(n_draws, [&](int i) {
    const Segment& start = mu.segments[chosen[i]].segment;
    before[i] = schema.evaluate(start);
    const Trajectory tr = simulate(start, evolve, RngStream(seed, stream_base + i));
    after[i] = schema.evaluate(*tr.final_segment);
  });
  return compare_samples(schema, before, after);
}

ComparisonReport homogeneity_test(const Segment& phi, const Stepper& stepper, double s, double t,
                                  const ObservableSchema& schema, int n_samples,
                                  std::uint64_t seed, std::uint64_t stream_base) {
  if (!(s >= 0.0 && t > s)) throw DomainError("homogeneity_test needs 0 <= s < t");
  if (n_samples < 2) throw DomainError("homogeneity_test needs at least two samples");
  const double span = t - s;
  const Stepper evolve = stepper.with_horizon(span, delay_steps(span, stepper.dt()));

  std::vector<std::vector<double>> late(n_samples), early(n_samples);
  parallel_for(2 * n_samples, [&](int i) {
    if (i < n_samples) {
      const Trajectory tr = simulate(phi, evolve, RngStream(seed, stream_base + i), {}, s);
      late[i] = schema.evaluate(*tr.final_segment);
    } else {
      const Trajectory tr = simulate(phi, evolve, RngStream(seed, stream_base + i), {}, 0.0);
      early[i - n_samples] = schema.evaluate(*tr.final_segment);
    }
  });
  return compare_samples(schema, late, early);
}

DependenceReport continuous_dependence_probe(const Segment& phi, std::span<const Segment> psi_list,
                                             double p, double T, int n_paths,
                                             const Stepper& stepper, std::uint64_t seed,
                                             std::uint64_t stream_base) {
  if (psi_list.empty()) throw DomainError("continuous_dependence_probe: no perturbed histories");
  if (n_paths < 2) throw DomainError("continuous_dependence_probe needs at least two paths");
  if (!(p > 0.0)) throw DomainError("continuous_dependence_probe needs p > 0");
  const Stepper evolve = stepper.with_horizon(T, delay_steps(T, stepper.dt()));
  const int n_psi = static_cast<int>(psi_list.size());
  for (const auto& psi : psi_list) {
    if (psi.steps() != phi.steps() || psi.n_modes() != phi.n_modes()) {
      throw ShapeError("perturbed history grid differs from the reference history");
    }
  }

  // values[n][i] = sup_t ||u(t, phi) - u(t, psi_n)||^p on path i
  std::vector<std::vector<double>> values(n_psi, std::vector<double>(n_paths));
  parallel_for(n_paths, [&](int i) {
    std::vector<ModeVector> base{phi.current()};
    simulate(phi, evolve, RngStream(seed, stream_base + i),
             [&](int, double, const Segment& seg, const StepResult&) {
               base.push_back(seg.current());
             });
    for (int n = 0; n < n_psi; ++n) {
      double sup = (psi_list[n].current() - base[0]).norm();
      simulate(psi_list[n], evolve, RngStream(seed, stream_base + i),
               [&](int j, double, const Segment& seg, const StepResult&) {
                 sup = std::max(sup, (seg.current() - base[j]).norm());
               });
      values[n][i] = std::pow(sup, p);
    }
  });

  DependenceReport rep;
  for (int n = 0; n < n_psi; ++n) {
    double d = 0.0;
    for (int j = 0; j <= phi.steps(); ++j) {
      d = std::max(d, (phi.node(j) - psi_list[n].node(j)).norm());
    }
    rep.distances.push_back(d);
    rep.estimates.push_back(mean_of(values[n]));
    rep.stderrs.push_back(std::sqrt(sample_variance(values[n]) / n_paths));
    if (n > 0) {
      std::vector<double> diff(n_paths);
      for (int i = 0; i < n_paths; ++i) diff[i] = values[n][i] - values[n - 1][i];
      rep.step_stderrs.push_back(std::sqrt(sample_variance(diff) / n_paths));
    }
  }
  return rep;
}

}  // namespace nsfde
