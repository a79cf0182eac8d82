#include "nsfde/noise.hpp"

#include <cmath>

#include "nsfde/errors.hpp"

namespace nsfde {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(product >> 32);
  lo = static_cast<std::uint32_t>(product);
}

}  // namespace

Philox4x32::Philox4x32(std::uint64_t key, std::uint64_t stream)
    : key_{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)},
      stream_(stream) {}

std::array<std::uint32_t, 4> Philox4x32::block(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

Philox4x32::result_type Philox4x32::operator()() {
  if (buffered_ == 0) {
    buffer_ = block({static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32),
                     static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)},
                    key_);
    ++counter_;
    buffered_ = 2;
  }
  const int word = 2 - buffered_;
  --buffered_;
  return (static_cast<std::uint64_t>(buffer_[2 * word + 1]) << 32) | buffer_[2 * word];
}

QWienerSpec::QWienerSpec(Eigen::VectorXd lambdas) : lambdas_(std::move(lambdas)) {
  if (lambdas_.size() < 1) throw DomainError("noise spectrum needs at least one mode");
  for (Eigen::Index k = 0; k < lambdas_.size(); ++k) {
    if (!(lambdas_(k) >= 0.0) || !std::isfinite(lambdas_(k))) {
      throw DomainError("noise eigenvalues must be finite and nonnegative");
    }
  }
  trace_ = lambdas_.sum();
}

QWienerSpec QWienerSpec::geometric(int n, double scale) {
  Eigen::VectorXd lambdas(n);
  for (int k = 0; k < n; ++k) lambdas(k) = scale * std::ldexp(1.0, -(k + 1));
  return QWienerSpec(std::move(lambdas));
}

QWienerSpec QWienerSpec::power(int n, double exponent, double scale) {
  if (!(exponent > 1.0)) throw DomainError("power-law noise needs exponent > 1");
  Eigen::VectorXd lambdas(n);
  for (int k = 0; k < n; ++k) lambdas(k) = scale * std::pow(k + 1.0, -exponent);
  return QWienerSpec(std::move(lambdas));
}

QWienerSpec QWienerSpec::with_trace(double trace) const {
  if (!(trace >= 0.0)) throw DomainError("noise trace target must be nonnegative");
  if (trace_ == 0.0) {
    if (trace == 0.0) return *this;
    throw DomainError("cannot rescale a zero noise spectrum to a positive trace");
  }
  return QWienerSpec(lambdas_ * (trace / trace_));
}

ModeVector sample_increment(const QWienerSpec& spec, double dt, RngStream& rng) {
  if (!(dt > 0.0)) throw DomainError("noise increment needs dt > 0");
  ModeVector out(spec.size());
  for (int k = 0; k < spec.size(); ++k) {
    out(k) = std::sqrt(spec.lambdas()(k) * dt) * rng.normal();
  }
  return out;
}

Eigen::VectorXd ou_increment_stddev(const QWienerSpec& spec, const SpectralOperator& op,
                                    double dt) {
  if (!(dt > 0.0)) throw DomainError("noise increment needs dt > 0");
  if (spec.size() != op.n_modes()) {
    throw ShapeError("noise spectrum has " + std::to_string(spec.size()) +
                     " modes, operator has " + std::to_string(op.n_modes()));
  }
  Eigen::VectorXd sd(spec.size());
  for (int k = 0; k < spec.size(); ++k) {
    const double mu = op.eigenvalue(k);
    // (1 - exp(-2 mu dt)) / (2 mu) without cancellation for small mu dt
    const double kernel = -std::expm1(-2.0 * mu * dt) / (2.0 * mu);
    sd(k) = std::sqrt(spec.lambdas()(k) * kernel);
  }
  return sd;
}

ModeVector ou_convolution_increment(const QWienerSpec& spec, const SpectralOperator& op,
                                    double dt, RngStream& rng) {
  const Eigen::VectorXd sd = ou_increment_stddev(spec, op, dt);
  ModeVector out(sd.size());
  for (Eigen::Index k = 0; k < sd.size(); ++k) out(k) = sd(k) * rng.normal();
  return out;
}

}  // namespace nsfde
