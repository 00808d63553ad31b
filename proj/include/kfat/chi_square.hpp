#pragma once

namespace kfat {

/// Regularized lower incomplete gamma P(a, x) for a > 0, x >= 0.
double regularized_gamma_p(double a, double x);

/// CDF of the chi-square distribution with `dof` degrees of freedom.
double chi_square_cdf(double x, double dof);

/// Inverse CDF by bisection on chi_square_cdf. p must lie in (0, 1).
double chi_square_quantile(double p, double dof);

}  // namespace kfat
