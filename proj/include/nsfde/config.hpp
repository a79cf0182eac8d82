#ifndef NSFDE_CONFIG_HPP
#define NSFDE_CONFIG_HPP

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "nsfde/coefficients.hpp"
#include "nsfde/measure.hpp"
#include "nsfde/noise.hpp"
#include "nsfde/segment.hpp"
#include "nsfde/solver.hpp"
#include "nsfde/spectral.hpp"

namespace nsfde {

struct OperatorSettings {
  std::string kind = "laplacian_1d";
  double a_const = 1.0;
  /// Diffusivity samples on a uniform grid of [0,1], interpolated linearly. Overrides a_const.
  std::vector<double> a_samples;
  int n_modes = 32;
  double delta_fraction = 0.5;

  OperatorDescriptor descriptor() const;
};

struct NoiseSettings {
  enum class Kind { geometric, power };
  Kind kind = Kind::geometric;
  double scale = 1.0;
  double exponent = 2.0;
  /// When set, lambdas are rescaled to this trace and `scale` is ignored.
  double trace_target = std::numeric_limits<double>::quiet_NaN();

  QWienerSpec build(int n_modes) const;
};

struct MeasureSettings {
  /// NaN resolves to max(2h, t_end / 4).
  double burn_in = std::numeric_limits<double>::quiet_NaN();
  int thin = 1;
  int trajectories = 200;
  /// Time between stored full history segments.
  double checkpoint_interval = 1.0;
  int n_coeffs = 3;
  std::vector<double> R_grid{0.5, 1.0, 2.0, 4.0, 8.0};
};

/// Everything needed to reproduce a run. Loaded from a sectioned INI file; every field has a
/// default and `resolved_text()` writes all of them back out.
struct RunConfig {
  std::uint64_t seed = 1;
  double h = 0.1;
  OperatorSettings op;
  NoiseSettings noise;
  CoefficientSet coeffs;
  InitialCondition initial;
  SolverConfig solver;
  MeasureSettings measure;

  /// Range checks with the offending key in the error. Called by the loaders.
  void validate() const;

  SpectralOperator build_operator() const;
  Stepper build_stepper(const SpectralOperator& op) const;
  Segment build_initial(const Stepper& stepper) const;

  double burn_in() const;
  int checkpoint_stride() const;

  /// INI text with every field spelled out; loading it reproduces this config exactly.
  std::string resolved_text() const;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

// Built-in names as they appear in config files. The "builtin:" prefix is optional.
ScalarFunction parse_scalar_function(const std::string& spec, double p);
Kernel parse_kernel(const std::string& spec);
Modulus parse_modulus(const std::string& spec);
InitialCondition parse_initial_profile(const std::string& spec);

std::string to_string(const ScalarFunction& f);
std::string to_string(const Kernel& k);
std::string to_string(const Modulus& m);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double x);

}  // namespace nsfde

#endif  // NSFDE_CONFIG_HPP
