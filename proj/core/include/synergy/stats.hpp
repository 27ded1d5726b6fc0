#pragma once

namespace synergy::stats {

// Standard normal cumulative distribution function Phi(z).
double normal_cdf(double z);

// Upper-tail probability P(Z > z). Uses erfc so that far tails (z ~ 9,
// p ~ 1e-19) retain full relative precision instead of cancelling to 0.
double normal_upper_tail(double z);

// Two-sided p-value 2*P(Z > |z|).
double normal_two_sided_p(double z);

// Inverse of the standard normal CDF. Wichura's algorithm AS 241 (PPND16),
// accurate to ~1e-16 over (0, 1). Throws DomainError outside (0, 1).
double normal_quantile(double p);

// Two-sided critical value z* with P(|Z| <= z*) = level, level in (0, 1).
double normal_critical_value(double level);

// Student-t analogue of the above, df > 0.
double student_t_critical_value(double level, double df);

// Sample mean and unbiased (n-1) standard deviation helpers used by the
// summary constructors. Neumaier-compensated so results do not depend on
// accumulation order beyond 1 ulp.
double compensated_sum(const double* data, unsigned long n);

}  // namespace synergy::stats
