#ifndef NSFDE_KS_HPP
#define NSFDE_KS_HPP

#include <cstddef>
#include <span>

namespace nsfde {

/// Two-sample Kolmogorov-Smirnov statistic sup_x |F_a(x) - F_b(x)|. Ties are handled by
/// advancing both empirical CDFs past equal values before comparing.
double ks_statistic(std::span<const double> a, std::span<const double> b);

/// Asymptotic critical value c(alpha) sqrt((n + m) / (n m)); c(0.05) = 1.358.
double ks_critical_value(std::size_t n, std::size_t m, double c_alpha = 1.358);

}  // namespace nsfde

#endif  // NSFDE_KS_HPP
