#include "nsfde/ks.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "nsfde/errors.hpp"

namespace nsfde {

double ks_statistic(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw DomainError("KS statistic needs two nonempty samples");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double n = static_cast<double>(x.size()), m = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(i / n - j / m));
  }
  return d;
}

double ks_critical_value(std::size_t n, std::size_t m, double c_alpha) {
  if (n == 0 || m == 0) throw DomainError("KS critical value needs nonempty samples");
  const double dn = static_cast<double>(n), dm = static_cast<double>(m);
  return c_alpha * std::sqrt((dn + dm) / (dn * dm));
}

}  // namespace nsfde
