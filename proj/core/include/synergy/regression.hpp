#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace synergy {

// One observation in long format: one subject performing one task under one
// condition. The binary indicators are 0/1; outcome must be positive because
// the model is linear in ln(outcome).
struct LongRecord {
    std::string subject;
    int condition = 0;  // 1 = assisted condition
    int task = 0;       // 1 = second task
    int order = 0;      // 1 = task performed second
    double outcome = 0.0;
};

enum class FitMethod { ML, REML, OLS };

const char* to_string(FitMethod method);

struct Coefficient {
    std::string name;     // Intercept, Condition, Task, Order
    double estimate = 0.0;
    double se = 0.0;
    double z = 0.0;       // Wald statistic estimate/se
    double p = 0.0;       // two-sided normal p-value
    double ci_low = 0.0;  // 95% Wald interval
    double ci_high = 0.0;
    double exp_estimate = 0.0;  // exp(estimate); for Condition this is the
                                // ratio effect the model estimates
};

struct RandomEffect {
    double variance = 0.0;        // sigma_u^2, between-subject variance
    double sd = 0.0;              // sigma_u
    double se_of_variance = 0.0;  // NaN when the variance sits at the 0 boundary
};

struct RegressionFit {
    std::vector<Coefficient> coefficients;  // Intercept, Condition, Task, Order
    std::optional<RandomEffect> random_effect;  // absent for OLS
    double residual_sd = 0.0;                   // sigma_e
    std::int64_t n_obs = 0;
    std::int64_t n_subjects = 0;
    double log_likelihood = 0.0;
    FitMethod method = FitMethod::ML;
    double lambda = 0.0;  // fitted variance ratio sigma_u^2 / sigma_e^2
};

// Linear mixed model on y = ln(outcome):
//   y_ij = b0 + b1*condition + b2*task + b3*order + u_i + e_ij,
//   u_i ~ N(0, sigma_u^2) per subject, e_ij ~ N(0, sigma_e^2).
// The likelihood is profiled over the variance ratio lambda = su^2/se^2: for
// fixed lambda the generalized-least-squares coefficients and se^2 are closed
// form, and lambda is maximized by grid + golden-section + one parabolic
// refinement over [0, 1e4] to 1e-9. A boundary solution lambda = 0 is a valid
// result (variance 0, se_of_variance NaN), not an error.
// Inference: fixed-effect covariance se^2 (X' W X)^-1, Wald z tests, 95%
// normal CIs. method must be ML or REML.
// Errors: < 2 subjects or a non-positive outcome -> DomainError;
// rank-deficient design -> RankError; method OLS here -> ConfigError.
RegressionFit fit_lmm(const std::vector<LongRecord>& data, FitMethod method = FitMethod::ML);

// Ordinary least squares on y = ln(outcome) with the same four fixed effects
// and the same reporting; no random effect. Works with a single subject.
RegressionFit fit_ols(const std::vector<LongRecord>& data);

// Keeps records whose (subject, task) score meets the threshold (score >=
// threshold, non-strict). Every record must have a score -> DataError.
std::vector<LongRecord> filter_successful(
    const std::vector<LongRecord>& data,
    const std::map<std::pair<std::string, int>, double>& scores, double threshold);

// Long-format CSV: header subject,condition,task,order,outcome with an
// optional score column. Indicators must be 0/1, fields numeric; violations
// raise DataError carrying the 1-based data row number.
struct LongDataset {
    std::vector<LongRecord> records;
    bool has_scores = false;
    std::map<std::pair<std::string, int>, double> scores;  // (subject, task)
};

LongDataset load_long_csv(const std::string& path);

// Writes records in the same long format (no score column), outcomes at full
// precision so load(save(x)) reproduces x exactly.
void save_long_csv(const std::string& path, const std::vector<LongRecord>& records);

namespace detail {

// Generalized-least-squares solution at one fixed variance ratio. Exposed so
// tests can pin the lambda -> 0 limit against an independent OLS.
struct LambdaFit {
    std::array<double, 4> beta{};
    double sigma_e2 = 0.0;      // profiled residual variance at this lambda
    double log_likelihood = 0.0;
};

LambdaFit fit_at_lambda(const std::vector<LongRecord>& data, double lambda,
                        FitMethod method = FitMethod::ML);

}  // namespace detail

}  // namespace synergy
