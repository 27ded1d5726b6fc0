#include "synergy/simulator.hpp"

#include <atomic>
#include <cmath>
#include <string>
#include <thread>
#include <utility>

#include "synergy/errors.hpp"
#include "synergy/inference.hpp"
#include "synergy/rng.hpp"
#include "synergy/stats.hpp"

namespace synergy {

namespace {

// Purpose tags separating the random streams derived from one base seed.
constexpr std::uint64_t kStreamSubject = 1;
constexpr std::uint64_t kStreamAssignment = 2;
constexpr std::uint64_t kStreamReplicate = 3;

std::string subject_name(std::int64_t index, std::size_t width) {
    std::string digits = std::to_string(index + 1);
    if (digits.size() < width) {
        digits.insert(0, width - digits.size(), '0');
    }
    return "S" + digits;
}

}  // namespace

const char* to_string(SimDesign design) {
    switch (design) {
        case SimDesign::WithinSubjectCrossover: return "crossover";
        case SimDesign::BetweenSubjects: return "between";
    }
    return "?";
}

const char* to_string(Estimator estimator) {
    switch (estimator) {
        case Estimator::RatioOfMeans: return "ratio";
        case Estimator::LMM: return "lmm";
        case Estimator::OLS: return "ols";
    }
    return "?";
}

void SimConfig::validate() const {
    if (n_subjects < 2) {
        throw ConfigError("simulation requires at least 2 subjects");
    }
    auto positive = [](double v, const char* what) {
        if (!std::isfinite(v) || v <= 0.0) {
            throw ConfigError(std::string(what) + " must be positive and finite");
        }
    };
    positive(beta, "beta");
    positive(task_difficulty[0], "task_difficulty[0]");
    positive(task_difficulty[1], "task_difficulty[1]");
    positive(condition_effect, "condition_effect");
    positive(order_effect, "order_effect");
    auto non_negative = [](double v, const char* what) {
        if (!std::isfinite(v) || v < 0.0) {
            throw ConfigError(std::string(what) + " must be non-negative and finite");
        }
    };
    non_negative(ability_log_sd, "ability_log_sd");
    non_negative(error_log_sd, "error_log_sd");
}

std::vector<LongRecord> generate(const SimConfig& config) {
    config.validate();
    const std::int64_t n = config.n_subjects;

    // Assignment cells: bit 1 = index of the task performed first, bit 0 =
    // whether the first-performed task is the assisted one (crossover) or
    // whether the subject is assisted at all (between-subjects). Shuffling
    // the four cells within each block of four subjects keeps the cell
    // counts within one of each other.
    std::vector<int> cell(static_cast<std::size_t>(n));
    for (std::int64_t block = 0; block * 4 < n; ++block) {
        int perm[4] = {0, 1, 2, 3};
        SplitMix64 rng(derive_seed(config.base_seed, kStreamAssignment,
                                   static_cast<std::uint64_t>(block)));
        for (int k = 3; k > 0; --k) {
            const int j = static_cast<int>(rng.next() % static_cast<std::uint64_t>(k + 1));
            std::swap(perm[k], perm[j]);
        }
        for (int k = 0; k < 4 && block * 4 + k < n; ++k) {
            cell[static_cast<std::size_t>(block * 4 + k)] = perm[k];
        }
    }

    const std::size_t name_width = std::to_string(n).size();
    std::vector<LongRecord> records;
    records.reserve(static_cast<std::size_t>(2 * n));
    for (std::int64_t i = 0; i < n; ++i) {
        SplitMix64 rng(
            derive_seed(config.base_seed, kStreamSubject, static_cast<std::uint64_t>(i)));
        const double ability = std::exp(config.ability_log_sd * rng.normal());
        const int first_task = (cell[static_cast<std::size_t>(i)] >> 1) & 1;
        const int assist_bit = cell[static_cast<std::size_t>(i)] & 1;
        const std::string name = subject_name(i, name_width);

        for (int slot = 0; slot < 2; ++slot) {  // 0 = performed first, 1 = second
            LongRecord rec;
            rec.subject = name;
            rec.task = (slot == 0) ? first_task : 1 - first_task;
            rec.order = slot;
            if (config.design == SimDesign::WithinSubjectCrossover) {
                rec.condition = (slot == 0) ? assist_bit : 1 - assist_bit;
            } else {
                rec.condition = assist_bit;
            }
            const double error = std::exp(config.error_log_sd * rng.normal());
            double outcome = config.beta * ability;
            outcome *= error;
            outcome /= config.task_difficulty[static_cast<std::size_t>(rec.task)];
            if (rec.condition == 1) {
                outcome *= config.condition_effect;
            }
            if (rec.order == 1) {
                outcome *= config.order_effect;
            }
            rec.outcome = outcome;
            records.push_back(std::move(rec));
        }
    }
    return records;
}

namespace {

struct ReplicateOutcome {
    bool ok = false;
    double estimate = 0.0;
    bool covered = false;
};

// Assisted-vs-unassisted ratio of mean outcomes. Crossover data pairs the two
// conditions within subject; between-subjects data compares per-subject mean
// outcomes across the two groups.
ReplicateOutcome ratio_estimate(const std::vector<LongRecord>& records, SimDesign design,
                                double level, double truth) {
    std::vector<double> assisted;
    std::vector<double> unassisted;
    if (design == SimDesign::WithinSubjectCrossover) {
        // One observation per condition per subject, in subject order.
        std::vector<double> per_subject[2];
        std::string current;
        double values[2] = {0.0, 0.0};
        bool seen[2] = {false, false};
        auto flush = [&]() {
            if (current.empty()) {
                return;
            }
            if (!seen[0] || !seen[1]) {
                throw DomainError("crossover subject lacks one of the conditions");
            }
            per_subject[0].push_back(values[0]);
            per_subject[1].push_back(values[1]);
            seen[0] = seen[1] = false;
        };
        for (const LongRecord& rec : records) {
            if (rec.subject != current) {
                flush();
                current = rec.subject;
            }
            values[rec.condition] = rec.outcome;
            seen[rec.condition] = true;
        }
        flush();
        unassisted = std::move(per_subject[0]);
        assisted = std::move(per_subject[1]);

        SampleSummary num = summarize_sample(assisted);
        SampleSummary den = summarize_sample(unassisted);
        num.r = (num.sd > 0.0 && den.sd > 0.0) ? pearson_r(assisted, unassisted) : 0.0;
        const RatioCI ci =
            ratio_ci(num, den, CiMethod::Recommended, Design::Paired, level);
        return {true, ci.estimate, ci.lower <= truth && truth <= ci.upper};
    }

    // Between subjects: aggregate each subject to its mean outcome first so
    // the groups are independent samples of independent units.
    std::string current;
    double sum = 0.0;
    int count = 0;
    int condition = 0;
    auto flush = [&]() {
        if (count == 0) {
            return;
        }
        (condition == 1 ? assisted : unassisted).push_back(sum / count);
        sum = 0.0;
        count = 0;
    };
    for (const LongRecord& rec : records) {
        if (rec.subject != current) {
            flush();
            current = rec.subject;
            condition = rec.condition;
        }
        sum += rec.outcome;
        ++count;
    }
    flush();
    const RatioCI ci = ratio_ci(summarize_sample(assisted), summarize_sample(unassisted),
                                CiMethod::Recommended, Design::Independent, level);
    return {true, ci.estimate, ci.lower <= truth && truth <= ci.upper};
}

ReplicateOutcome run_replicate(const SimConfig& config, Estimator estimator, double level,
                               double zstar) {
    const double truth = config.condition_effect;
    try {
        const std::vector<LongRecord> records = generate(config);
        if (estimator == Estimator::RatioOfMeans) {
            return ratio_estimate(records, config.design, level, truth);
        }
        const RegressionFit fit = (estimator == Estimator::LMM)
                                      ? fit_lmm(records, FitMethod::ML)
                                      : fit_ols(records);
        const Coefficient& coef = fit.coefficients[1];  // Condition
        const double log_truth = std::log(truth);
        ReplicateOutcome out;
        out.ok = true;
        out.estimate = coef.exp_estimate;
        out.covered = std::fabs(coef.estimate - log_truth) <= zstar * coef.se;
        return out;
    } catch (const Error&) {
        return {};
    }
}

}  // namespace

RecoveryReport recovery_study(const SimConfig& config, Estimator estimator,
                              std::int64_t replicates, double level, unsigned threads) {
    config.validate();
    if (replicates < 1) {
        throw ConfigError("recovery study requires at least 1 replicate");
    }
    if (!(level > 0.0 && level < 1.0)) {
        throw ConfigError("confidence level must lie in (0, 1)");
    }
    const double zstar = stats::normal_critical_value(level);

    std::vector<ReplicateOutcome> slots(static_cast<std::size_t>(replicates));
    auto run_slot = [&](std::int64_t r) {
        SimConfig replicate_config = config;
        replicate_config.base_seed =
            derive_seed(config.base_seed, kStreamReplicate, static_cast<std::uint64_t>(r));
        slots[static_cast<std::size_t>(r)] =
            run_replicate(replicate_config, estimator, level, zstar);
    };

    if (threads <= 1 || replicates == 1) {
        for (std::int64_t r = 0; r < replicates; ++r) {
            run_slot(r);
        }
    } else {
        const unsigned worker_count =
            static_cast<unsigned>(std::min<std::int64_t>(threads, replicates));
        std::atomic<std::int64_t> next{0};
        std::vector<std::thread> workers;
        workers.reserve(worker_count);
        for (unsigned w = 0; w < worker_count; ++w) {
            workers.emplace_back([&]() {
                for (std::int64_t r = next.fetch_add(1); r < replicates;
                     r = next.fetch_add(1)) {
                    run_slot(r);
                }
            });
        }
        for (std::thread& worker : workers) {
            worker.join();
        }
    }

    // Sequential reduction over the indexed slots: identical result for any
    // thread count.
    std::vector<double> estimates;
    std::vector<double> squared_errors;
    estimates.reserve(slots.size());
    squared_errors.reserve(slots.size());
    std::int64_t covered = 0;
    for (const ReplicateOutcome& slot : slots) {
        if (!slot.ok) {
            continue;
        }
        estimates.push_back(slot.estimate);
        const double err = slot.estimate - config.condition_effect;
        squared_errors.push_back(err * err);
        covered += slot.covered ? 1 : 0;
    }
    if (estimates.empty()) {
        throw DomainError("every replicate failed; no estimates to aggregate");
    }

    RecoveryReport report;
    report.replicates = replicates;
    report.failures = replicates - static_cast<std::int64_t>(estimates.size());
    report.true_effect = config.condition_effect;
    report.estimator = estimator;
    const double m = static_cast<double>(estimates.size());
    report.mean_estimate = stats::compensated_sum(estimates.data(), estimates.size()) / m;
    report.bias = report.mean_estimate - config.condition_effect;
    report.rmse =
        std::sqrt(stats::compensated_sum(squared_errors.data(), squared_errors.size()) / m);
    report.ci_coverage = static_cast<double>(covered) / m;
    return report;
}

}  // namespace synergy
