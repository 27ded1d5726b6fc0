#pragma once

#include <optional>
#include <string>

namespace synergy {

// Whether larger observed values mean better performance (accuracy, recall)
// or worse performance (steps taken, completion time).
enum class Direction { HigherBetter, LowerBetter };

// Describes the scale a performance metric lives on. The bounds drive the
// ratio-scale transformations:
//   - LowerBetter metrics are mapped through f(x) = 1 / (x - lower_bound),
//     which turns "fewer steps" into a desirable, ratio-scaled quantity.
//   - HigherBetter metrics with a finite upper bound are mapped through the
//     odds of the rescaled value, f(x) = x' / (1 - x') with
//     x' = (x - lb) / (ub - lb). This restores a "real zero at the top":
//     97% -> 98% is a bigger move than 50% -> 51%.
// The two transforms never compose; a LowerBetter metric with an upper bound
// is rejected because composition has no defined semantics.
struct MetricSpec {
    std::string name;
    Direction direction = Direction::HigherBetter;
    double lower_bound = 0.0;
    std::optional<double> upper_bound;

    // Throws ConfigError if the bounds are malformed.
    void validate() const;
};

// One study cell: human-alone, computer-alone, and combined performance,
// all measured on the same metric. A baseline of exactly lower_bound is the
// encoding for "assumed impossible" (e.g. a task the baseline cannot do at
// all); the ratio logic then yields a distinguished infinite ratio.
struct PerformanceTriple {
    double x_h = 0.0;
    double x_c = 0.0;
    double x_hc = 0.0;
    MetricSpec metric;

    // Throws ConfigError for a malformed metric, DomainError for values
    // outside [lower_bound, upper_bound].
    void validate() const;
};

// Which quantity the denominator of a ratio refers to.
enum class BaselineLabel { H, C, HC, B, MaxHC };

const char* to_string(BaselineLabel label);

// Team-vs-best-baseline ratios for one performance triple.
//   rho            raw ratio x_hc / max(x_h, x_c), no transformation
//   rho_hat        ratio with the lower-bound transform applied when the
//                  metric is LowerBetter (equal to rho otherwise)
//   rho_hat_prime  ratio with every applicable transform; empty when the
//                  metric is HigherBetter without an upper bound (the odds
//                  transform does not apply, so the value does not exist)
// Ratios can be +infinity when both baselines sit at the lower bound while
// the team does not.
struct RatioResult {
    double rho = 0.0;
    double rho_hat = 0.0;
    std::optional<double> rho_hat_prime;
    BaselineLabel baseline = BaselineLabel::MaxHC;
};

// f(x) = 1 / (x - lower_bound). Requires x strictly above the lower bound.
double transform_lower(double x, const MetricSpec& metric);

// Odds of the value rescaled to [0, 1): x' / (1 - x'). Requires an upper
// bound, and x in [lb, ub); x == ub would be infinite odds -> DomainError.
double transform_upper(double x, const MetricSpec& metric);

// Applies the single applicable transform for the metric: the lower-bound
// reciprocal for LowerBetter, the upper-bound odds for bounded HigherBetter,
// identity otherwise. Never composes the two.
double transform_value(double x, const MetricSpec& metric);

// numerator / denominator for already-desirable quantities.
// denominator == 0 with numerator > 0 -> +infinity;
// both zero -> UndefinedRatioError. Negative inputs -> DomainError.
double compute_rho(double numerator, double denominator);

// Computes the ratio family for a triple. With transformed == false all
// ratios are computed on the raw scale (rho_hat == rho, rho_hat_prime empty);
// with transformed == true each ratio applies its defining transforms.
// The baseline label reports which baseline supplied the max on the scale
// used by rho_hat (ties report H; an all-at-bound denominator reports MaxHC).
RatioResult compute_rho_hat(const PerformanceTriple& triple, bool transformed = true);

}  // namespace synergy
