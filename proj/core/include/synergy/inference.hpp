#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace synergy {

// ============================================================
// Ratio-of-means confidence intervals
// ============================================================

enum class CiMethod { Fieller, Delta, Recommended };
enum class Design { Paired, Independent };
enum class CriticalValue { Normal, StudentT };

const char* to_string(CiMethod method);
const char* to_string(Design design);

// Summary statistics of one sample. For a paired design, `r` carries the
// correlation between the paired measurements; it may be set on either
// summary of the pair (on both only if equal).
struct SampleSummary {
    std::int64_t n = 0;
    double mean = 0.0;
    double sd = 0.0;
    std::optional<double> r;

    // Throws DomainError unless n >= 2, sd >= 0, mean finite, r in [-1, 1].
    void validate() const;
};

// Computes n, mean, and unbiased sd of raw data (n >= 2 required).
SampleSummary summarize_sample(const std::vector<double>& data);

// Sample Pearson correlation of two equal-length vectors (n >= 2; throws
// DomainError on length mismatch or zero variance).
double pearson_r(const std::vector<double>& x, const std::vector<double>& y);

struct RatioCI {
    double estimate = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    CiMethod method = CiMethod::Recommended;
    Design design = Design::Independent;
    double level = 0.95;
};

// Confidence interval for the ratio of means  mean(numerator)/mean(denominator).
//
// With v_x = s_x^2/n_x, v_y = s_y^2/n_y and, for paired samples, the
// covariance term c = r*s_x*s_y/n (c = 0 when independent), the methods are:
//   Delta        estimate +/- z * estimate * sqrt(v_x/x^2 + v_y/y^2 - 2c/(x*y))
//   Recommended  exp( ln(estimate) +/- z * sqrt(same variance expression) )
//                — always positive and log-symmetric
//   Fieller      { rho : (x - rho*y)^2 <= z^2 (v_x + rho^2 v_y - 2 rho c) },
//                the root interval of the quadratic; requires the denominator
//                mean to be significantly nonzero (y^2 > z^2 v_y), else
//                UnboundedIntervalError
// z is the two-sided critical value at `level` — standard normal by default,
// Student t with n_x + n_y - 2 degrees of freedom when `critical` says so.
//
// Both means must be positive. When both sds are zero every method returns
// the degenerate interval [estimate, estimate]. Paired designs require equal
// n and an r value.
RatioCI ratio_ci(const SampleSummary& numerator, const SampleSummary& denominator,
                 CiMethod method, Design design, double level = 0.95,
                 CriticalValue critical = CriticalValue::Normal);

// ============================================================
// One-sample proportion test
// ============================================================

struct ProportionTestResult {
    double p_hat = 0.0;
    double z = 0.0;
    double p_value = 1.0;  // one-sided upper tail P(Z > z)
};

// z = (p_hat - p0) / sqrt(p0 (1 - p0) / n), no continuity correction;
// the p-value is the upper-tail probability of the standard normal.
// Requires n >= 1, 0 <= successes <= n (DomainError) and p0 in (0, 1)
// (ConfigError).
ProportionTestResult proportion_test(std::int64_t successes, std::int64_t n, double p0);

// ============================================================
// Accuracy threshold check
// ============================================================

struct AccuracyCheckResult {
    double proportion = 0.0;
    bool pass = false;  // strict: proportion > threshold
};

// Fraction of true flags compared against the threshold with strict >.
// Empty input -> DomainError; threshold outside (0, 1) -> ConfigError.
AccuracyCheckResult accuracy_check(const std::vector<bool>& success_flags, double threshold);

}  // namespace synergy
