#include "nsfde/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "nsfde/errors.hpp"

namespace nsfde {

namespace {

namespace pt = boost::property_tree;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

bool parse_number(const std::string& text, double& out) {
  const std::string t = trim(text);
  if (t.empty()) return false;
  const char* first = t.data();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), out);
  return ec == std::errc() && ptr == t.data() + t.size();
}

double to_double(const std::string& key, const std::string& text) {
  double v;
  if (!parse_number(text, v)) throw ConfigError(key, "expected a number, got '" + text + "'");
  return v;
}

long long to_integer(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  long long v = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw ConfigError(key, "expected an integer, got '" + text + "'");
  }
  return v;
}

std::vector<double> to_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (trim(item).empty()) continue;
    out.push_back(to_double(key, item));
  }
  return out;
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += format_double(v[i]);
  }
  return out;
}

// "name(arg)" -> {name, arg}; "name" -> {name, ""}. Strips an optional "builtin:" prefix.
std::pair<std::string, std::string> split_call(const std::string& spec) {
  std::string s = trim(spec);
  if (s.rfind("builtin:", 0) == 0) s = trim(s.substr(8));
  const auto open = s.find('(');
  if (open == std::string::npos) return {lower(s), ""};
  if (s.back() != ')') throw ConfigError("", "malformed builtin '" + spec + "'");
  return {lower(trim(s.substr(0, open))), trim(s.substr(open + 1, s.size() - open - 2))};
}

double call_arg(const std::string& spec, const std::string& arg, double fallback) {
  if (arg.empty()) return fallback;
  double v;
  if (!parse_number(arg, v)) throw ConfigError("", "bad argument in builtin '" + spec + "'");
  return v;
}

// Keys accepted per section; "" is the top level.
const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s{
      {"", {"seed", "h"}},
      {"operator", {"kind", "a_const", "a_samples", "n_modes", "delta_fraction"}},
      {"noise", {"kind", "scale", "exponent", "trace_target"}},
      {"coefficients",
       {"f", "sigma", "kernel", "kernel_theta", "N", "p", "Mg", "alpha", "K", "grid_points"}},
      {"initial", {"profile", "time_shape", "amplitude"}},
      {"solver",
       {"dt", "t_end", "fp_tol", "fp_max", "mode", "picard_iters", "store_stride",
        "blowup_threshold"}},
      {"measure", {"burn_in", "thin", "trajectories", "checkpoint_interval", "n_coeffs", "R"}},
  };
  return s;
}

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

OperatorDescriptor OperatorSettings::descriptor() const {
  OperatorDescriptor d;
  d.a_const = a_const;
  d.delta_fraction = delta_fraction;
  if (!a_samples.empty()) {
    std::vector<double> s = a_samples;
    if (s.size() == 1) s.push_back(s.front());
    d.a_fn = [s](double x) {
      const double pos = std::clamp(x, 0.0, 1.0) * (s.size() - 1);
      const std::size_t i = std::min(static_cast<std::size_t>(pos), s.size() - 2);
      const double w = pos - i;
      return (1.0 - w) * s[i] + w * s[i + 1];
    };
  }
  return d;
}

QWienerSpec NoiseSettings::build(int n_modes) const {
  QWienerSpec spec = kind == Kind::geometric ? QWienerSpec::geometric(n_modes, scale)
                                             : QWienerSpec::power(n_modes, exponent, scale);
  return std::isnan(trace_target) ? spec : spec.with_trace(trace_target);
}

ScalarFunction parse_scalar_function(const std::string& spec, double p) {
  const auto [name, arg] = split_call(spec);
  if (name == "zero") return ScalarFunction::zero();
  if (name == "identity") return ScalarFunction::identity();
  if (name == "constant") return ScalarFunction::constant(call_arg(spec, arg, 1.0));
  if (name == "log_holder") {
    return ScalarFunction::log_holder(call_arg(spec, arg, p));
  }
  if (name == "bounded_tanh") return ScalarFunction::bounded_tanh(call_arg(spec, arg, 1.0));
  throw ConfigError("", "unknown scalar function '" + spec + "'");
}

Kernel parse_kernel(const std::string& spec) {
  const auto [name, arg] = split_call(spec);
  if (name == "zero") return Kernel::zero();
  if (name == "separable" || name == "separable_tanh") {
    return Kernel::separable_tanh(call_arg(spec, arg, 0.1));
  }
  if (name == "separable_linear") return Kernel::separable_linear(call_arg(spec, arg, 0.1));
  throw ConfigError("", "unknown kernel '" + spec + "'");
}

Modulus parse_modulus(const std::string& spec) {
  const auto [name, arg] = split_call(spec);
  const double scale = call_arg(spec, arg, 1.0);
  if (name == "log_modulus") return Modulus::log_modulus(scale);
  if (name == "linear") return Modulus::linear(scale);
  if (name == "quadratic") return Modulus::quadratic(scale);
  if (name == "square_root") return Modulus::square_root(scale);
  throw ConfigError("", "unknown modulus '" + spec + "'");
}

InitialCondition parse_initial_profile(const std::string& spec) {
  const auto [name, arg] = split_call(spec);
  InitialCondition ic;
  if (name == "zero") {
    ic.profile = InitialCondition::Profile::zero;
  } else if (name == "sine") {
    ic.profile = InitialCondition::Profile::sine;
    const double k = call_arg(spec, arg, 1.0);
    if (!(k >= 1.0) || k != std::floor(k)) {
      throw ConfigError("", "sine wavenumber must be a positive integer");
    }
    ic.wavenumber = static_cast<int>(k);
  } else if (name == "parabola") {
    ic.profile = InitialCondition::Profile::parabola;
  } else {
    throw ConfigError("", "unknown initial profile '" + spec + "'");
  }
  return ic;
}

std::string to_string(const ScalarFunction& f) {
  switch (f.kind()) {
    case ScalarFunction::Kind::zero:
      return "zero";
    case ScalarFunction::Kind::identity:
      return "identity";
    case ScalarFunction::Kind::constant:
      return "constant(" + format_double(f.parameter()) + ")";
    case ScalarFunction::Kind::log_holder:
      return "log_holder(" + format_double(f.parameter()) + ")";
    case ScalarFunction::Kind::bounded_tanh:
      return "bounded_tanh(" + format_double(f.parameter()) + ")";
  }
  return "zero";
}

std::string to_string(const Kernel& k) {
  switch (k.kind()) {
    case Kernel::Kind::zero:
      return "zero";
    case Kernel::Kind::separable_tanh:
      return "separable_tanh(" + format_double(k.strength()) + ")";
    case Kernel::Kind::separable_linear:
      return "separable_linear(" + format_double(k.strength()) + ")";
  }
  return "zero";
}

std::string to_string(const Modulus& m) {
  const std::string arg = "(" + format_double(m.scale()) + ")";
  switch (m.kind()) {
    case Modulus::Kind::log_modulus:
      return "log_modulus" + arg;
    case Modulus::Kind::linear:
      return "linear" + arg;
    case Modulus::Kind::quadratic:
      return "quadratic" + arg;
    case Modulus::Kind::square_root:
      return "square_root" + arg;
  }
  return "linear" + arg;
}

void RunConfig::validate() const {
  if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError("h", "delay must be positive");
  solver.validate();
  try {
    delay_steps(h, solver.dt);
  } catch (const ConfigError&) {
    throw ConfigError("h", "h / solver.dt = " + format_double(h / solver.dt) +
                               " is not an integer");
  }

  if (op.kind != "laplacian_1d") throw ConfigError("operator.kind", "only laplacian_1d is supported");
  if (op.n_modes < 1) throw ConfigError("operator.n_modes", "must be at least 1");
  if (!(op.a_const > 0.0)) throw ConfigError("operator.a_const", "diffusivity must be positive");
  for (double a : op.a_samples) {
    if (!(a > 0.0)) throw ConfigError("operator.a_samples", "diffusivity must be positive");
  }
  if (!(op.delta_fraction > 0.0 && op.delta_fraction < 1.0)) {
    throw ConfigError("operator.delta_fraction", "must lie in (0,1)");
  }

  if (!(noise.scale > 0.0)) throw ConfigError("noise.scale", "must be positive");
  if (noise.kind == NoiseSettings::Kind::power && !(noise.exponent > 1.0)) {
    throw ConfigError("noise.exponent", "must exceed 1 for a trace-class spectrum");
  }
  if (!std::isnan(noise.trace_target) && !(noise.trace_target > 0.0)) {
    throw ConfigError("noise.trace_target", "must be positive");
  }

  const CoefficientSet& c = coeffs;
  if (!(c.lipschitz_Mg > 0.0 && c.lipschitz_Mg < 1.0)) {
    throw ConfigError("coefficients.Mg", "must lie in (0,1)");
  }
  if (!(2.0 * c.lipschitz_Mg * c.lipschitz_Mg < 1.0)) {
    throw ConfigError("coefficients.Mg", "2 Mg^2 meas(D)^2 < 1 is violated");
  }
  if (!(c.p > 2.0)) throw ConfigError("coefficients.p", "must exceed 2");
  if (!(c.alpha > 0.0 && c.alpha <= 1.0)) throw ConfigError("coefficients.alpha", "must lie in (0,1]");
  if (!(c.growth_K > 0.0)) throw ConfigError("coefficients.K", "must be positive");
  if (c.grid_points < 0 || c.grid_points % 2 != 0) {
    throw ConfigError("coefficients.grid_points", "must be a nonnegative even number");
  }
  if (!std::isnan(c.kernel_theta) && !(c.kernel_theta >= -h && c.kernel_theta <= 0.0)) {
    throw ConfigError("coefficients.kernel_theta", "must lie in [-h, 0]");
  }

  if (!std::isfinite(initial.amplitude)) throw ConfigError("initial.amplitude", "must be finite");

  if (measure.thin < 1) throw ConfigError("measure.thin", "must be at least 1");
  if (measure.trajectories < 1) throw ConfigError("measure.trajectories", "must be at least 1");
  if (measure.n_coeffs < 0 || measure.n_coeffs > op.n_modes) {
    throw ConfigError("measure.n_coeffs", "must lie in [0, operator.n_modes]");
  }
  if (!std::isnan(measure.burn_in) && !(measure.burn_in >= 2.0 * h * (1.0 - 1e-12))) {
    throw ConfigError("measure.burn_in", "must be at least 2h");
  }
  if (!(measure.checkpoint_interval > 0.0)) {
    throw ConfigError("measure.checkpoint_interval", "must be positive");
  }
  const double ratio = measure.checkpoint_interval / solver.dt;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio)) {
    throw ConfigError("measure.checkpoint_interval", "must be an integer multiple of solver.dt");
  }
  if (measure.R_grid.empty()) throw ConfigError("measure.R", "needs at least one radius");
  for (double r : measure.R_grid) {
    if (!(r >= 0.0)) throw ConfigError("measure.R", "radii must be nonnegative");
  }
}

double RunConfig::burn_in() const {
  return std::isnan(measure.burn_in) ? std::max(2.0 * h, solver.t_end / 4.0) : measure.burn_in;
}

int RunConfig::checkpoint_stride() const {
  return static_cast<int>(std::llround(measure.checkpoint_interval / solver.dt));
}

SpectralOperator RunConfig::build_operator() const {
  try {
    return assemble_operator(op.descriptor(), op.n_modes);
  } catch (const DomainError& e) {
    throw ConfigError("operator", e.what());
  }
}

Stepper RunConfig::build_stepper(const SpectralOperator& spectral) const {
  return Stepper(spectral, noise.build(op.n_modes), coeffs, h, solver);
}

Segment RunConfig::build_initial(const Stepper& stepper) const {
  return from_initial_condition(initial, h, solver.dt, stepper.coefficients().grid());
}

std::string RunConfig::resolved_text() const {
  std::ostringstream o;
  o << "seed = " << seed << "\n";
  o << "h = " << format_double(h) << "\n\n";

  o << "[operator]\n";
  o << "kind = " << op.kind << "\n";
  o << "a_const = " << format_double(op.a_const) << "\n";
  if (!op.a_samples.empty()) o << "a_samples = " << join(op.a_samples) << "\n";
  o << "n_modes = " << op.n_modes << "\n";
  o << "delta_fraction = " << format_double(op.delta_fraction) << "\n\n";

  o << "[noise]\n";
  o << "kind = " << (noise.kind == NoiseSettings::Kind::geometric ? "geometric" : "power") << "\n";
  o << "scale = " << format_double(noise.scale) << "\n";
  o << "exponent = " << format_double(noise.exponent) << "\n";
  if (!std::isnan(noise.trace_target)) {
    o << "trace_target = " << format_double(noise.trace_target) << "\n";
  }
  o << "\n";

  o << "[coefficients]\n";
  o << "f = " << to_string(coeffs.f) << "\n";
  o << "sigma = " << to_string(coeffs.sigma) << "\n";
  o << "kernel = " << to_string(coeffs.kernel) << "\n";
  o << "kernel_theta = "
    << format_double(std::isnan(coeffs.kernel_theta) ? -h : coeffs.kernel_theta) << "\n";
  o << "N = " << to_string(coeffs.modulus) << "\n";
  o << "p = " << format_double(coeffs.p) << "\n";
  o << "Mg = " << format_double(coeffs.lipschitz_Mg) << "\n";
  o << "alpha = " << format_double(coeffs.alpha) << "\n";
  o << "K = " << format_double(coeffs.growth_K) << "\n";
  o << "grid_points = " << (coeffs.grid_points > 0 ? coeffs.grid_points : 4 * op.n_modes)
    << "\n\n";

  o << "[initial]\n";
  switch (initial.profile) {
    case InitialCondition::Profile::zero:
      o << "profile = zero\n";
      break;
    case InitialCondition::Profile::sine:
      o << "profile = sine(" << initial.wavenumber << ")\n";
      break;
    case InitialCondition::Profile::parabola:
      o << "profile = parabola\n";
      break;
  }
  o << "time_shape = "
    << (initial.time_shape == InitialCondition::TimeShape::constant ? "constant" : "ramp") << "\n";
  o << "amplitude = " << format_double(initial.amplitude) << "\n\n";

  o << "[solver]\n";
  o << "dt = " << format_double(solver.dt) << "\n";
  o << "t_end = " << format_double(solver.t_end) << "\n";
  o << "fp_tol = " << format_double(solver.fp_tol) << "\n";
  o << "fp_max = " << solver.fp_max << "\n";
  o << "mode = " << (solver.mode == SolverMode::direct ? "direct" : "picard") << "\n";
  o << "picard_iters = " << solver.picard_iters << "\n";
  o << "store_stride = " << solver.store_stride << "\n";
  o << "blowup_threshold = " << format_double(solver.blowup_threshold) << "\n\n";

  o << "[measure]\n";
  o << "burn_in = " << format_double(burn_in()) << "\n";
  o << "thin = " << measure.thin << "\n";
  o << "trajectories = " << measure.trajectories << "\n";
  o << "checkpoint_interval = " << format_double(measure.checkpoint_interval) << "\n";
  o << "n_coeffs = " << measure.n_coeffs << "\n";
  o << "R = " << join(measure.R_grid) << "\n";
  return o.str();
}

RunConfig parse_config(const std::string& text) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("", std::string("malformed config: ") + e.what());
  }

  // Flatten to "section.key" -> value, rejecting anything outside the schema.
  std::map<std::string, std::string> kv;
  const auto& known = schema();
  auto add = [&](const std::string& section, const std::string& key, const std::string& value) {
    const std::string path = section.empty() ? key : section + "." + key;
    if (!known.at(section).count(key)) throw ConfigError(path, "unknown key");
    kv[path] = trim(value);
  };
  for (const auto& [name, node] : tree) {
    if (node.empty()) {
      // An empty "[section]" header parses as a childless node.
      if (node.data().empty() && known.count(name)) continue;
      add("", name, node.data());
      continue;
    }
    if (!known.count(name) || name.empty()) throw ConfigError(name, "unknown section");
    for (const auto& [key, leaf] : node) add(name, key, leaf.data());
  }

  RunConfig cfg;
  auto with = [&](const std::string& path, auto&& apply) {
    const auto it = kv.find(path);
    if (it == kv.end()) return;
    try {
      apply(it->second);
    } catch (const ConfigError& e) {
      if (!e.key().empty()) throw;
      throw ConfigError(path, e.what());
    }
  };
  auto real = [&](const std::string& path, double& out) {
    with(path, [&](const std::string& v) { out = to_double(path, v); });
  };
  auto integer = [&](const std::string& path, int& out) {
    with(path, [&](const std::string& v) { out = static_cast<int>(to_integer(path, v)); });
  };
  auto choice = [&](const std::string& path, std::initializer_list<const char*> options,
                    auto&& apply) {
    with(path, [&](const std::string& v) {
      const std::string l = lower(v);
      for (const char* o : options) {
        if (l == o) {
          apply(l);
          return;
        }
      }
      std::string msg = "expected one of";
      for (const char* o : options) msg += std::string(" ") + o;
      throw ConfigError(path, msg);
    });
  };

  with("seed", [&](const std::string& v) {
    const long long s = to_integer("seed", v);
    if (s < 0) throw ConfigError("seed", "must be nonnegative");
    cfg.seed = static_cast<std::uint64_t>(s);
  });
  real("h", cfg.h);

  with("operator.kind", [&](const std::string& v) { cfg.op.kind = lower(v); });
  real("operator.a_const", cfg.op.a_const);
  with("operator.a_samples",
       [&](const std::string& v) { cfg.op.a_samples = to_list("operator.a_samples", v); });
  integer("operator.n_modes", cfg.op.n_modes);
  real("operator.delta_fraction", cfg.op.delta_fraction);

  choice("noise.kind", {"geometric", "power"}, [&](const std::string& v) {
    cfg.noise.kind = v == "power" ? NoiseSettings::Kind::power : NoiseSettings::Kind::geometric;
  });
  real("noise.scale", cfg.noise.scale);
  real("noise.exponent", cfg.noise.exponent);
  real("noise.trace_target", cfg.noise.trace_target);

  CoefficientSet& c = cfg.coeffs;
  real("coefficients.p", c.p);
  c.f = ScalarFunction::log_holder(c.p);
  c.sigma = ScalarFunction::log_holder(c.p);
  with("coefficients.f", [&](const std::string& v) { c.f = parse_scalar_function(v, c.p); });
  with("coefficients.sigma",
       [&](const std::string& v) { c.sigma = parse_scalar_function(v, c.p); });
  with("coefficients.kernel", [&](const std::string& v) { c.kernel = parse_kernel(v); });
  with("coefficients.kernel_theta", [&](const std::string& v) {
    c.kernel_theta = lower(v) == "auto" ? std::nan("") : to_double("coefficients.kernel_theta", v);
  });
  with("coefficients.N", [&](const std::string& v) { c.modulus = parse_modulus(v); });
  real("coefficients.Mg", c.lipschitz_Mg);
  real("coefficients.alpha", c.alpha);
  real("coefficients.K", c.growth_K);
  integer("coefficients.grid_points", c.grid_points);

  with("initial.profile", [&](const std::string& v) {
    const InitialCondition ic = parse_initial_profile(v);
    cfg.initial.profile = ic.profile;
    cfg.initial.wavenumber = ic.wavenumber;
  });
  choice("initial.time_shape", {"constant", "ramp"}, [&](const std::string& v) {
    cfg.initial.time_shape = v == "ramp" ? InitialCondition::TimeShape::ramp
                                         : InitialCondition::TimeShape::constant;
  });
  real("initial.amplitude", cfg.initial.amplitude);

  SolverConfig& sv = cfg.solver;
  real("solver.dt", sv.dt);
  real("solver.t_end", sv.t_end);
  real("solver.fp_tol", sv.fp_tol);
  integer("solver.fp_max", sv.fp_max);
  choice("solver.mode", {"direct", "picard"}, [&](const std::string& v) {
    sv.mode = v == "picard" ? SolverMode::picard : SolverMode::direct;
  });
  integer("solver.picard_iters", sv.picard_iters);
  integer("solver.store_stride", sv.store_stride);
  real("solver.blowup_threshold", sv.blowup_threshold);

  MeasureSettings& m = cfg.measure;
  real("measure.burn_in", m.burn_in);
  integer("measure.thin", m.thin);
  integer("measure.trajectories", m.trajectories);
  real("measure.checkpoint_interval", m.checkpoint_interval);
  integer("measure.n_coeffs", m.n_coeffs);
  with("measure.R", [&](const std::string& v) { m.R_grid = to_list("measure.R", v); });

  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot read config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace nsfde
