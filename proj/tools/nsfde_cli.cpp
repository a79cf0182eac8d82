// nsfde: command-line driver for the neutral stochastic delay simulator.
//
// Exit status: 0 success, 1 invalid input or a failed check, 2 numerical failure.

#include <cmath>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nsfde/coefficients.hpp"
#include "nsfde/config.hpp"
#include "nsfde/errors.hpp"
#include "nsfde/io.hpp"
#include "nsfde/measure.hpp"
#include "nsfde/solver.hpp"
#include "nsfde/spectral.hpp"

namespace {

using namespace nsfde;

// Streams above this offset are reserved for checks and tests drawn alongside an ensemble
// whose trajectories use streams 0..M-1.
constexpr std::uint64_t kAuxStreams = std::uint64_t{1} << 40;

struct ConditionRow {
  std::string condition;
  double estimate;
  std::string threshold;
  bool pass;
};

std::vector<ConditionRow> condition_report(const RunConfig& cfg, long long samples) {
  const SpectralOperator op = cfg.build_operator();
  const QWienerSpec noise = cfg.noise.build(cfg.op.n_modes);
  const Coefficients coeffs(cfg.coeffs, op, cfg.h);
  const CoefficientSet& cs = cfg.coeffs;
  std::vector<ConditionRow> rows;

  rows.push_back({"spectral_gap_delta", op.delta(),
                  "< mu_1 = " + format_double(op.eigenvalue(0)), op.delta() < op.eigenvalue(0)});

  const DecayConstants dc = decay_constants(op, cs.alpha);
  rows.push_back({"semigroup_decay_constant", dc.c_alpha, "finite",
                  std::isfinite(dc.c_alpha) && dc.c_alpha > 0.0});

  RngStream growth_rng(cfg.seed, kAuxStreams + 1);
  const double k_hat = growth_check(coeffs, noise, static_cast<int>(std::min(samples, 20000LL)),
                                    growth_rng);
  rows.push_back({"linear_growth_K", k_hat, "<= " + format_double(cs.growth_K),
                  k_hat <= cs.growth_K});

  RngStream f_rng(cfg.seed, kAuxStreams + 2);
  const ModulusCheck mf = modulus_bound_check(cs.f, cs.modulus, cs.p, samples, f_rng);
  rows.push_back({"modulus_bound_f_violations", static_cast<double>(mf.violations), "== 0",
                  mf.violations == 0});
  RngStream s_rng(cfg.seed, kAuxStreams + 3);
  const ModulusCheck ms = modulus_bound_check(cs.sigma, cs.modulus, cs.p, samples, s_rng);
  rows.push_back({"modulus_bound_sigma_violations", static_cast<double>(ms.violations), "== 0",
                  ms.violations == 0});

  const OsgoodVerdict ov = osgood_verdict(cs.modulus);
  rows.push_back({"osgood_divergence", ov.integrals.back(), "unbounded growth", ov.certified});

  RngStream g_rng(cfg.seed, kAuxStreams + 4);
  const double mg_hat =
      lipschitz_probe_g(coeffs, static_cast<int>(std::min(samples, 20000LL)), g_rng);
  rows.push_back({"neutral_lipschitz_Mg", mg_hat, "<= " + format_double(cs.lipschitz_Mg),
                  mg_hat <= cs.lipschitz_Mg});

  const double small = 2.0 * cs.lipschitz_Mg * cs.lipschitz_Mg;
  rows.push_back({"neutral_smallness_2Mg2", small, "< 1", small < 1.0});

  const DecayConstants dc1 = decay_constants(op, 1.0 - cs.alpha);
  const ContractionHorizon ch =
      find_contraction_horizon(cs.lipschitz_Mg, cs.p, cs.alpha, dc1.c_alpha);
  rows.push_back({"contraction_horizon_T1", ch.T1, "> 0", ch.T1 > 0.0});
  return rows;
}

bool print_conditions(const std::vector<ConditionRow>& rows, std::ostream& os) {
  bool all = true;
  for (const auto& r : rows) {
    os << (r.pass ? "pass" : "FAIL") << "  " << r.condition << " = " << format_double(r.estimate)
       << "  (" << r.threshold << ")\n";
    all = all && r.pass;
  }
  return all;
}

void write_comparison(const std::string& path, const ComparisonReport& rep) {
  CsvWriter csv(path, "report", {"statistic", "estimate", "stderr", "threshold", "verdict"});
  for (const auto& r : rep.rows) {
    csv.row({"ks:" + r.observable, format_double(r.ks), "", format_double(r.ks_critical),
             r.pass ? "pass" : "fail"});
    const bool mean_ok = std::abs(r.difference) <= 3.0 * r.stderr_pooled;
    csv.row({"mean_diff:" + r.observable, format_double(r.difference),
             format_double(r.stderr_pooled), "3 stderr", mean_ok ? "pass" : "fail"});
  }
}

RunConfig load_with_seed(const std::string& path, const std::optional<std::uint64_t>& seed) {
  RunConfig cfg = load_config(path);
  if (seed) cfg.seed = *seed;
  return cfg;
}

void maybe_dump(const RunConfig& cfg, const std::string& path) {
  if (path.empty()) return;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << cfg.resolved_text();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral-Galerkin simulator for neutral stochastic delay equations"};
  app.require_subcommand(1);

  std::string config_path, out_path, dump_path, measure_path;
  std::optional<std::uint64_t> seed;
  std::uint64_t stream = 0;
  int iters = 0, trajectories = 0, thin = 0, draws = 500;
  double burn_in = std::nan(""), t_evolve = 5.0, t_end = std::nan("");
  double Mg = 0, p = 0, alpha = 0, c1ma = std::nan("");
  std::vector<double> R_grid;
  long long samples = 100000;

  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "INI config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--dump-config", dump_path, "write the resolved config here");
  };

  auto* simulate = app.add_subcommand("simulate", "integrate one trajectory");
  add_config(simulate);
  simulate->add_option("--stream", stream, "noise stream id");
  simulate->add_option("--out", out_path, "trajectory JSONL")->required();

  auto* picard = app.add_subcommand("picard", "successive approximations on one noise path");
  add_config(picard);
  picard->add_option("--iters", iters, "number of iterates after iterate 0");
  picard->add_option("--out", out_path, "CSV with columns iter, sup_diff")->required();

  auto* estimate = app.add_subcommand("estimate-measure", "time-averaged empirical measure");
  add_config(estimate);
  estimate->add_option("--trajectories", trajectories, "ensemble size");
  estimate->add_option("--burn-in", burn_in, "discard snapshots before this time");
  estimate->add_option("--thin", thin, "keep every k-th stored snapshot");
  estimate->add_option("--out", out_path, "measure JSONL")->required();

  auto* invariance = app.add_subcommand("invariance-test", "evolve draws from a stored measure");
  invariance->add_option("--measure", measure_path, "measure JSONL")->required()->check(CLI::ExistingFile);
  invariance->add_option("--t", t_evolve, "evolution time");
  invariance->add_option("--draws", draws, "number of segments drawn");
  invariance->add_option("--seed", seed, "override the stored seed");
  invariance->add_option("--out", out_path, "report CSV")->required();

  auto* tightness = app.add_subcommand("tightness", "tail probabilities of the segment norm");
  add_config(tightness);
  tightness->add_option("--R", R_grid, "radii")->delimiter(',');
  tightness->add_option("--trajectories", trajectories, "ensemble size");
  tightness->add_option("--t-end", t_end, "horizon");
  tightness->add_option("--out", out_path, "report CSV")->required();

  auto* check = app.add_subcommand("check-conditions", "sampled checks of the coefficient conditions");
  add_config(check);
  check->add_option("--samples", samples, "modulus check pairs");
  check->add_option("--out", out_path, "report CSV")->required();

  auto* t1 = app.add_subcommand("t1", "contraction horizon");
  t1->add_option("--Mg", Mg)->required();
  t1->add_option("--p", p)->required();
  t1->add_option("--alpha", alpha)->required();
  t1->add_option("--C1ma", c1ma, "decay constant C_{1-alpha}; default from the operator");
  t1->add_option("--config", config_path, "operator used for the default C_{1-alpha}")
      ->check(CLI::ExistingFile);

  auto* validate = app.add_subcommand("validate", "load a config and run the condition checks");
  validate->add_option("--config", config_path, "INI config file")->required()->check(CLI::ExistingFile);
  validate->add_option("--samples", samples, "modulus check pairs");
  validate->add_option("--dump-config", dump_path, "write the resolved config here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (simulate->parsed()) {
      const RunConfig cfg = load_with_seed(config_path, seed);
      maybe_dump(cfg, dump_path);
      const SpectralOperator op = cfg.build_operator();
      const Stepper stepper = cfg.build_stepper(op);
      const Trajectory traj =
          nsfde::simulate(cfg.build_initial(stepper), stepper, RngStream(cfg.seed, stream));
      write_trajectory_jsonl(out_path, traj, cfg.resolved_text());
      std::cout << "wrote " << traj.times.size() << " snapshots to " << out_path << "\n";
    } else if (picard->parsed()) {
      RunConfig cfg = load_with_seed(config_path, seed);
      if (iters > 0) cfg.solver.picard_iters = iters;
      cfg.solver.mode = SolverMode::picard;
      cfg.validate();
      maybe_dump(cfg, dump_path);
      const SpectralOperator op = cfg.build_operator();
      const Stepper stepper = cfg.build_stepper(op);
      const auto its = picard_run(cfg.build_initial(stepper), stepper, cfg.seed, 0);
      CsvWriter csv(out_path, "picard", {"iter", "sup_diff"});
      for (std::size_t n = 1; n < its.size(); ++n) {
        csv.row({std::to_string(n), format_double(its[n].sup_diff)});
      }
      std::cout << "final sup_diff " << format_double(its.back().sup_diff) << "\n";
    } else if (estimate->parsed()) {
      RunConfig cfg = load_with_seed(config_path, seed);
      if (trajectories > 0) cfg.measure.trajectories = trajectories;
      if (thin > 0) cfg.measure.thin = thin;
      if (!std::isnan(burn_in)) cfg.measure.burn_in = burn_in;
      cfg.validate();
      if (!(cfg.burn_in() < cfg.solver.t_end)) {
        throw ConfigError("measure.burn_in", "must be below solver.t_end");
      }
      maybe_dump(cfg, dump_path);
      const SpectralOperator op = cfg.build_operator();
      const Stepper stepper =
          cfg.build_stepper(op).with_horizon(cfg.solver.t_end, cfg.solver.store_stride,
                                             cfg.checkpoint_stride());
      const auto ensemble = simulate_ensemble(cfg.build_initial(stepper), stepper, cfg.seed,
                                              cfg.measure.trajectories);
      const EmpiricalMeasure mu = krylov_bogoliubov(ensemble, cfg.burn_in(), cfg.measure.thin);
      write_measure_jsonl(out_path, mu, cfg.resolved_text());
      ObservableSchema schema;
      schema.n_coeffs = cfg.measure.n_coeffs;
      for (const auto& s : summarize(mu, schema)) {
        std::cout << s.name << " mean " << format_double(s.mean) << " +- "
                  << format_double(s.mean_stderr) << " var " << format_double(s.variance)
                  << "\n";
      }
    } else if (invariance->parsed()) {
      const MeasureFile mf = read_measure_jsonl(measure_path);
      RunConfig cfg = parse_config(mf.config_text);
      if (seed) cfg.seed = *seed;
      const SpectralOperator op = cfg.build_operator();
      const Stepper stepper = cfg.build_stepper(op);
      ObservableSchema schema;
      schema.n_coeffs = cfg.measure.n_coeffs;
      const ComparisonReport rep =
          invariance_test(mf.measure, stepper, t_evolve, schema, draws, cfg.seed, kAuxStreams);
      write_comparison(out_path, rep);
      for (const auto& r : rep.rows) {
        std::cout << (r.pass ? "pass" : "FAIL") << "  " << r.observable << " KS "
                  << format_double(r.ks) << " < " << format_double(r.ks_critical) << "\n";
      }
      return rep.all_pass() ? 0 : 1;
    } else if (tightness->parsed()) {
      RunConfig cfg = load_with_seed(config_path, seed);
      if (trajectories > 0) cfg.measure.trajectories = trajectories;
      if (!std::isnan(t_end)) cfg.solver.t_end = t_end;
      if (!R_grid.empty()) cfg.measure.R_grid = R_grid;
      cfg.validate();
      maybe_dump(cfg, dump_path);
      const SpectralOperator op = cfg.build_operator();
      const Stepper stepper =
          cfg.build_stepper(op).with_horizon(cfg.solver.t_end, cfg.checkpoint_stride());
      const auto ensemble = simulate_ensemble(cfg.build_initial(stepper), stepper, cfg.seed,
                                              cfg.measure.trajectories);
      const TightnessReport rep = tightness_diagnostic(ensemble, cfg.measure.R_grid);
      CsvWriter csv(out_path, "report", {"statistic", "estimate", "stderr", "threshold", "verdict"});
      const double n = rep.n_trajectories;
      for (std::size_t i = 0; i < rep.R_grid.size(); ++i) {
        const double e = rep.estimates[i];
        const bool last = i + 1 == rep.R_grid.size();
        csv.row({"exceedance:R=" + format_double(rep.R_grid[i]), format_double(e),
                 format_double(std::sqrt(e * (1.0 - e) / n)), last ? "0.05" : "",
                 last ? (e < 0.05 ? "pass" : "fail") : "info"});
      }
      std::cout << "P(sup-norm > " << format_double(rep.R_grid.back()) << ") <= "
                << format_double(rep.estimates.back()) << " over " << rep.checkpoint_times.size()
                << " checkpoints\n";
    } else if (check->parsed()) {
      const RunConfig cfg = load_with_seed(config_path, seed);
      maybe_dump(cfg, dump_path);
      const auto rows = condition_report(cfg, samples);
      CsvWriter csv(out_path, "conditions", {"condition", "estimate", "threshold", "verdict"});
      for (const auto& r : rows) {
        csv.row({r.condition, format_double(r.estimate), r.threshold, r.pass ? "pass" : "fail"});
      }
      return print_conditions(rows, std::cout) ? 0 : 1;
    } else if (t1->parsed()) {
      if (std::isnan(c1ma)) {
        const SpectralOperator op = config_path.empty()
                                        ? assemble_operator(OperatorDescriptor{}, 32)
                                        : load_config(config_path).build_operator();
        c1ma = decay_constants(op, 1.0 - alpha).c_alpha;
      }
      const ContractionHorizon ch = find_contraction_horizon(Mg, p, alpha, c1ma);
      std::cout << "C1ma = " << format_double(c1ma) << "\n"
                << "T1 = " << format_double(ch.T1) << "\n"
                << "gamma = " << format_double(ch.gamma) << "\n"
                << "continuity = " << format_double(ch.continuity) << "\n";
      if (ch.capped) std::cout << "note: both conditions hold up to the search cap\n";
    } else if (validate->parsed()) {
      const RunConfig cfg = load_config(config_path);
      maybe_dump(cfg, dump_path);
      std::cout << "config ok\n";
      return print_conditions(condition_report(cfg, samples), std::cout) ? 0 : 1;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const DomainError& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    return 1;
  } catch (const ShapeError& e) {
    std::cerr << "shape error: " << e.what() << "\n";
    return 1;
  } catch (const BlowupError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const NonconvergenceError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
