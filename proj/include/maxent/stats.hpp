#pragma once

// Small statistical helpers used by the simulation verdicts: the upper
// regularised incomplete gamma function (series + Lentz continued fraction)
// and total variation distance.

#include <cmath>
#include <stdexcept>

#include "maxent/linalg.hpp"

namespace maxent {

// Q(a, x) = Gamma(a, x) / Gamma(a), the upper regularised incomplete gamma.
inline double gamma_q(double a, double x) {
  if (a <= 0.0 || x < 0.0) throw std::invalid_argument("gamma_q domain");
  if (x == 0.0) return 1.0;
  const double log_prefix = -x + a * std::log(x) - std::lgamma(a);
  if (x < a + 1.0) {
    // series for the lower function P(a, x)
    double term = 1.0 / a;
    double acc = term;
    double ap = a;
    for (int n = 0; n < 1000; ++n) {
      ap += 1.0;
      term *= x / ap;
      acc += term;
      if (std::fabs(term) < std::fabs(acc) * 1e-16) break;
    }
    return 1.0 - acc * std::exp(log_prefix);
  }
  // continued fraction for Q(a, x), modified Lentz
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 1000; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-16) break;
  }
  return std::exp(log_prefix) * h;
}

// Upper tail p-value of a chi-square statistic with df degrees of freedom.
inline double chi_square_pvalue(double stat, double df) {
  if (stat <= 0.0) return 1.0;
  return gamma_q(df / 2.0, stat / 2.0);
}

inline double total_variation(const Vector& a, const Vector& b) {
  double tv = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) tv += std::fabs(a[i] - b[i]);
  return 0.5 * tv;
}

}  // namespace maxent
