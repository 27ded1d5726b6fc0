#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "synergy/regression.hpp"

namespace synergy {

// Crossover: each subject performs both tasks, one per condition, with cell
// assignment (which task first, which task assisted) counterbalanced.
// BetweenSubjects: each subject performs both tasks under a single condition.
enum class SimDesign { WithinSubjectCrossover, BetweenSubjects };

enum class Estimator { RatioOfMeans, LMM, OLS };

const char* to_string(SimDesign design);
const char* to_string(Estimator estimator);

// Parameters of the multiplicative performance model
//   s_ij = beta * a_i * f^C * g^O * e_ij / d_j
// with lognormal ability a_i (ln a_i ~ N(0, ability_log_sd^2)) and lognormal
// noise e_ij. On the log scale this is exactly the linear mixed model the
// regression module fits, so recovery of f = condition_effect through
// exp(beta_1) is the designed validation loop.
struct SimConfig {
    std::int64_t n_subjects = 0;
    double beta = 1.0;                              // baseline speed
    std::array<double, 2> task_difficulty{1.0, 1.0};  // d_1, d_2
    double condition_effect = 1.0;                  // f, the effect of interest
    double order_effect = 1.0;                      // g, second-performance effect
    double ability_log_sd = 0.0;
    double error_log_sd = 0.0;
    SimDesign design = SimDesign::WithinSubjectCrossover;
    std::uint64_t base_seed = 0;

    // Throws ConfigError unless n_subjects >= 2, all effect/difficulty
    // parameters are positive, and the log-sds are non-negative.
    void validate() const;
};

// Generates one experiment: two records per subject (task indicator 1 marks
// the second task, order indicator 1 marks the task performed second).
// Subjects are split as evenly as possible across the four assignment cells
// by shuffling cells within consecutive blocks of four subjects. Every random
// draw comes from a stream derived from (base_seed, purpose, index), so the
// output is bit-identical for a given seed regardless of evaluation order.
std::vector<LongRecord> generate(const SimConfig& config);

struct RecoveryReport {
    std::int64_t replicates = 0;   // attempted
    std::int64_t failures = 0;     // replicates where the estimator failed
    double true_effect = 0.0;      // the condition_effect being recovered
    double mean_estimate = 0.0;    // over successful replicates
    double bias = 0.0;             // mean_estimate - true_effect
    double rmse = 0.0;
    double ci_coverage = 0.0;      // fraction of CIs containing true_effect
    Estimator estimator = Estimator::LMM;
};

// Runs generate + estimate on `replicates` independently seeded experiments
// and reports recovery of the condition effect.
//   RatioOfMeans  assisted-vs-unassisted ratio of mean outcomes with the
//                 log-scale CI (paired by subject for crossover designs,
//                 independent on subject means otherwise)
//   LMM / OLS     exp of the Condition coefficient, Wald CI at `level`
// Replicate r uses seed derive_seed(base_seed, replicate-stream, r), and
// results land in indexed slots reduced sequentially with compensated sums,
// so the report is bit-identical for any `threads` value. A failing
// replicate (e.g. rank-deficient draw) is counted, not fatal; all replicates
// failing raises DomainError.
RecoveryReport recovery_study(const SimConfig& config, Estimator estimator,
                              std::int64_t replicates, double level = 0.95,
                              unsigned threads = 1);

}  // namespace synergy
