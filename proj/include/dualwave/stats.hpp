#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace dualwave::stats {

/// A point estimate that always travels with its uncertainty.
struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
};

/// Sample mean and its standard error (summation in input order).
Estimate mean(std::span<const double> xs);
/// Unbiased sample variance; the standard error uses the sample fourth moment.
Estimate variance(std::span<const double> xs);

/// P(X > stat) for X ~ chi-square(dof).
double chi_square_sf(double stat, double dof);

struct ChiSquareResult {
  double statistic = 0.0;
  double dof = 0.0;
  double p_value = 1.0;
  std::size_t bins = 0;
};

/// Pearson goodness-of-fit test. `expected` are counts (same total as
/// `observed`); dof = bins - 1 - fitted_parameters.
ChiSquareResult chi_square_test(std::span<const double> observed, std::span<const double> expected,
                                std::size_t fitted_parameters = 0);

/// Standard normal quantile.
double normal_quantile(double p);

/// Kolmogorov survival function Q(λ) = 2 Σ (-1)^{k-1} exp(-2k²λ²).
double kolmogorov_sf(double lambda);
/// Asymptotic one-sample KS p-value with the Stephens small-n correction.
double ks_p_value(double d, std::size_t n);
/// Critical value of the one-sample KS statistic at significance `alpha`
/// (asymptotic; 1.358/√n for alpha = 0.05).
double ks_critical(std::size_t n, double alpha);
/// One-sample KS statistic of values that should be Uniform(0,1).
double ks_uniform(std::vector<double> values);

/// 2-D Fasano-Franceschini p-value for statistic `d`, sample size `n` and
/// sample correlation `r` (Press et al. approximation).
double ks2d_p_value(double d, std::size_t n, double r);

/// 1 - |mean(e^{iθ})|: 0 for identical angles, → 1 for uniform angles.
double circular_variance(std::span<const double> angles);
/// Jammalamadaka circular correlation coefficient of two angle samples.
double circular_correlation(std::span<const double> a, std::span<const double> b);

}  // namespace dualwave::stats
