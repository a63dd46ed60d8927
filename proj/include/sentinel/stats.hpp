#pragma once

#include <span>

namespace sentinel::stats {

double mean(std::span<const double> values);
// Population variance (divides by n).
double variance_population(std::span<const double> values);
// Sample variance (divides by n - 1); needs n >= 2.
double variance_sample(std::span<const double> values);

// Standard normal CDF and its inverse. normal_quantile(0) = -inf, (1) = +inf.
double normal_cdf(double z);
double normal_quantile(double p);

// Regularised incomplete beta I_x(a, b), continued-fraction evaluation.
double incomplete_beta(double a, double b, double x);

// Student-t CDF with `df` degrees of freedom (df > 0, may be fractional).
double student_t_cdf(double t, double df);
// Two-sided p-value P(|T| >= |t|).
double student_t_two_sided_p(double t, double df);

}  // namespace sentinel::stats
