#pragma once

namespace gridstate {

/// Regularized lower incomplete gamma P(a, x): series expansion for
/// x < a + 1, continued fraction otherwise.
double regularized_gamma_p(double a, double x);

double chi_squared_cdf(int degrees_of_freedom, double x);

/// Inverse CDF by bracketing bisection on the regularized gamma.
double chi_squared_quantile(int degrees_of_freedom, double p);

}  // namespace gridstate
