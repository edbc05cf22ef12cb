#include "dualwave/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace dualwave::stats {

Estimate mean(std::span<const double> xs) {
  Estimate e;
  e.n = xs.size();
  if (xs.empty()) return e;
  double sum = 0.0;
  for (double x : xs) sum += x;
  const double m = sum / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  e.value = m;
  if (xs.size() > 1) {
    const double var = ss / static_cast<double>(xs.size() - 1);
    e.std_error = std::sqrt(var / static_cast<double>(xs.size()));
  }
  return e;
}

Estimate variance(std::span<const double> xs) {
  Estimate e;
  e.n = xs.size();
  if (xs.size() < 2) return e;
  const double m = mean(xs).value;
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  const double n = static_cast<double>(xs.size());
  e.value = ss / (n - 1.0);
  // Uses the sample fourth moment so the error is honest for non-normal data.
  double m4 = 0.0;
  for (double x : xs) m4 += std::pow(x - m, 4);
  m4 /= n;
  const double var_of_var = (m4 - (n - 3.0) / (n - 1.0) * e.value * e.value) / n;
  e.std_error = std::sqrt(std::max(var_of_var, 0.0));
  return e;
}

double chi_square_sf(double stat, double dof) {
  if (dof <= 0.0) throw std::invalid_argument("chi_square_sf: dof must be positive");
  if (stat <= 0.0) return 1.0;
  return boost::math::gamma_q(0.5 * dof, 0.5 * stat);
}

ChiSquareResult chi_square_test(std::span<const double> observed, std::span<const double> expected,
                                std::size_t fitted_parameters) {
  if (observed.size() != expected.size() || observed.size() < 2)
    throw std::invalid_argument("chi_square_test: need matching bins (>= 2)");
  ChiSquareResult r;
  r.bins = observed.size();
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (expected[i] <= 0.0) {
      if (observed[i] > 0.0) {
        r.statistic = INFINITY;
        r.p_value = 0.0;
      }
      continue;
    }
    const double d = observed[i] - expected[i];
    r.statistic += d * d / expected[i];
  }
  r.dof = static_cast<double>(observed.size() - 1 - fitted_parameters);
  if (std::isfinite(r.statistic)) r.p_value = chi_square_sf(r.statistic, r.dof);
  return r;
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal_quantile: p must lie in (0, 1)");
  return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * p);
}

double kolmogorov_sf(double lambda) {
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = sign * std::exp(-2.0 * k * k * lambda * lambda);
    sum += term;
    if (std::abs(term) < 1e-16 * std::abs(sum)) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

double ks_p_value(double d, std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  return kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d);
}

double ks_critical(std::size_t n, double alpha) {
  // Invert Q(λ) = alpha by bisection on the asymptotic series.
  double lo = 0.2, hi = 5.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (kolmogorov_sf(mid) > alpha)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi) / std::sqrt(static_cast<double>(n));
}

double ks_uniform(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("ks_uniform: empty sample");
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  double d = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double u = std::clamp(values[i], 0.0, 1.0);
    d = std::max(d, std::max((static_cast<double>(i) + 1.0) / n - u, u - static_cast<double>(i) / n));
  }
  return d;
}

double ks2d_p_value(double d, std::size_t n, double r) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double rr = std::sqrt(std::max(0.0, 1.0 - r * r));
  return kolmogorov_sf(d * sn / (1.0 + rr * (0.25 - 0.75 / sn)));
}

double circular_variance(std::span<const double> angles) {
  if (angles.empty()) return 0.0;
  double c = 0.0, s = 0.0;
  for (double a : angles) {
    c += std::cos(a);
    s += std::sin(a);
  }
  const double n = static_cast<double>(angles.size());
  return 1.0 - std::hypot(c, s) / n;
}

double circular_correlation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty())
    throw std::invalid_argument("circular_correlation: size mismatch");
  auto circ_mean = [](std::span<const double> xs) {
    double c = 0.0, s = 0.0;
    for (double x : xs) {
      c += std::cos(x);
      s += std::sin(x);
    }
    return std::atan2(s, c);
  };
  const double ma = circ_mean(a), mb = circ_mean(b);
  double num = 0.0, da = 0.0, db = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double sa = std::sin(a[i] - ma), sb = std::sin(b[i] - mb);
    num += sa * sb;
    da += sa * sa;
    db += sb * sb;
  }
  if (da <= 0.0 || db <= 0.0) return 0.0;
  return num / std::sqrt(da * db);
}

}  // namespace dualwave::stats
