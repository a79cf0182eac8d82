#ifndef NSFDE_NOISE_HPP
#define NSFDE_NOISE_HPP

#include <array>
#include <cstdint>
#include <limits>
#include <random>

#include "nsfde/spectral.hpp"

namespace nsfde {

/// Philox4x32-10 counter-based bit generator (Salmon et al., SC'11).
///
/// The 64-bit key is the run seed; the upper half of the 128-bit counter is the stream id,
/// so every (seed, stream) pair owns a disjoint 2^64-block sequence.
class Philox4x32 {
 public:
  using result_type = std::uint64_t;

  Philox4x32(std::uint64_t key, std::uint64_t stream);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()();

  /// One application of the bijection; exposed for known-answer tests.
  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> counter,
                                            std::array<std::uint32_t, 2> key);

 private:
  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int buffered_ = 0;  // number of unread 64-bit words in buffer_ (0..2)
};

/// Independent random stream owned by one trajectory worker.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id)
      : seed_(seed), stream_id_(stream_id), engine_(seed, stream_id) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::uint64_t index(std::uint64_t n) {
    return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_);
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  Philox4x32 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

/// Diagonal trace-class covariance Q e_k = lambda_k e_k in the operator eigenbasis.
class QWienerSpec {
 public:
  explicit QWienerSpec(Eigen::VectorXd lambdas);

  /// lambda_k = scale * 2^-k, k = 1..n.
  static QWienerSpec geometric(int n, double scale = 1.0);
  /// lambda_k = scale * k^-exponent, k = 1..n, exponent > 1.
  static QWienerSpec power(int n, double exponent, double scale = 1.0);
  /// Rescales so the stored lambdas sum to `trace`.
  QWienerSpec with_trace(double trace) const;

  int size() const { return static_cast<int>(lambdas_.size()); }
  const Eigen::VectorXd& lambdas() const { return lambdas_; }
  double trace() const { return trace_; }

 private:
  Eigen::VectorXd lambdas_;
  double trace_;
};

/// W(t+dt) - W(t) in modes: component k ~ Normal(0, lambda_k dt).
ModeVector sample_increment(const QWienerSpec& spec, double dt, RngStream& rng);

/// Per-mode standard deviation of int_0^dt exp(-mu_k (dt-s)) sqrt(lambda_k) dbeta_k(s),
/// sqrt(lambda_k (1 - exp(-2 mu_k dt)) / (2 mu_k)).
Eigen::VectorXd ou_increment_stddev(const QWienerSpec& spec, const SpectralOperator& op,
                                    double dt);

/// Exact sample of the per-step stochastic convolution with unit multiplier.
ModeVector ou_convolution_increment(const QWienerSpec& spec, const SpectralOperator& op,
                                    double dt, RngStream& rng);

}  // namespace nsfde

#endif  // NSFDE_NOISE_HPP
