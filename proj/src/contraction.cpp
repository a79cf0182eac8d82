#include <cmath>

#include "nsfde/errors.hpp"
#include "nsfde/solver.hpp"

namespace nsfde {

namespace {

void check_parameters(double Mg, double p, double alpha, double c_1ma) {
  if (!(Mg > 0.0 && Mg < 1.0)) throw DomainError("Mg must lie in (0,1)");
  if (!(p > 2.0)) throw DomainError("p must exceed 2");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("alpha must lie in (0,1]");
  if (!(c_1ma > 0.0)) throw DomainError("C_{1-alpha} must be positive");
}

}  // namespace

double contraction_gamma(double Mg, double p, double alpha, double c_1ma, double T1) {
  check_parameters(Mg, p, alpha, c_1ma);
  if (!(T1 >= 0.0)) throw DomainError("T1 must be nonnegative");
  const double base = Mg * c_1ma * std::pow(T1, alpha) / alpha;
  return Mg + std::pow(base, p) / std::pow(1.0 - Mg, p - 1.0);
}

double continuity_lhs(double Mg, double p, double alpha, double c_1ma, double T1) {
  check_parameters(Mg, p, alpha, c_1ma);
  if (!(T1 >= 0.0)) throw DomainError("T1 must be nonnegative");
  const double base = c_1ma * std::pow(T1, alpha) * Mg / alpha;
  return Mg + std::pow(5.0 / (1.0 - Mg), p - 1.0) * std::pow(base, p);
}

ContractionHorizon find_contraction_horizon(double Mg, double p, double alpha, double c_1ma,
                                            double cap) {
  if (!(Mg < 1.0)) throw DomainError("no admissible T1: Mg >= 1");
  check_parameters(Mg, p, alpha, c_1ma);
  auto admissible = [&](double T) {
    return contraction_gamma(Mg, p, alpha, c_1ma, T) < 1.0 &&
           continuity_lhs(Mg, p, alpha, c_1ma, T) < 1.0;
  };
  auto result = [&](double T, bool capped) {
    return ContractionHorizon{T, contraction_gamma(Mg, p, alpha, c_1ma, T),
                              continuity_lhs(Mg, p, alpha, c_1ma, T), capped};
  };

  double lo = 1.0;
  while (!admissible(lo)) {
    lo *= 0.5;
    if (lo < 1e-300) throw DomainError("no admissible T1 above 1e-300");
  }
  double hi = lo;
  while (admissible(hi)) {
    if (hi >= cap) return result(cap, true);
    lo = hi;
    hi = std::min(cap, hi * 2.0);
  }
  // Invariant: admissible(lo), !admissible(hi).
  while (hi / lo - 1.0 > 1e-12) {
    const double mid = std::sqrt(lo * hi);
    if (mid <= lo || mid >= hi) break;
    (admissible(mid) ? lo : hi) = mid;
  }
  return result(lo, false);
}

}  // namespace nsfde
