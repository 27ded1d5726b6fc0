// synergy — command-line surface of the human-computer synergy toolkit.
//
// Conventions shared by every command:
//   * the machine-readable payload is a JSON document on standard output,
//     emitted exactly when the command succeeds (exit code 0);
//   * human-oriented tables and diagnostics go to standard error;
//   * exit codes: 0 success, 1 domain or data error, 2 usage or
//     configuration error;
//   * infinite ratios serialize as the string "inf", inapplicable values as
//     the string "n/a";
//   * identical flags (and seeds) produce byte-identical standard output,
//     regardless of the number of worker threads.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "synergy/cost.hpp"
#include "synergy/csv.hpp"
#include "synergy/errors.hpp"
#include "synergy/inference.hpp"
#include "synergy/metrics.hpp"
#include "synergy/regression.hpp"
#include "synergy/review.hpp"
#include "synergy/simulator.hpp"
#include "synergy/stats.hpp"

namespace {

using Json = nlohmann::ordered_json;
using namespace synergy;

constexpr const char* kVersion = "1.0.0";

// ============================================================
// Serialization helpers
// ============================================================

// Numbers that may legitimately be infinite (ratios with a zero baseline)
// serialize as the string "inf"; not-a-number (inapplicable or boundary
// quantities) serializes as null.
Json num(double v) {
    if (std::isnan(v)) {
        return nullptr;
    }
    if (std::isinf(v)) {
        return v > 0 ? Json("inf") : Json("-inf");
    }
    return v;
}

// Optional ratio values: absent means "not applicable".
Json opt_num(const std::optional<double>& v) { return v ? num(*v) : Json("n/a"); }

// ============================================================
// Token parsing (one place per token set)
// ============================================================

Direction parse_direction(const std::string& s) {
    if (s == "higher") return Direction::HigherBetter;
    if (s == "lower") return Direction::LowerBetter;
    throw ConfigError("direction must be 'higher' or 'lower', got '" + s + "'");
}

const char* direction_token(Direction d) {
    return d == Direction::HigherBetter ? "higher" : "lower";
}

CiMethod parse_ci_method(const std::string& s) {
    if (s == "fieller") return CiMethod::Fieller;
    if (s == "delta") return CiMethod::Delta;
    if (s == "recommended") return CiMethod::Recommended;
    throw ConfigError("method must be 'fieller', 'delta', or 'recommended', got '" + s + "'");
}

Design parse_design(const std::string& s) {
    if (s == "paired") return Design::Paired;
    if (s == "independent") return Design::Independent;
    throw ConfigError("design must be 'paired' or 'independent', got '" + s + "'");
}

FitMethod parse_fit_method(const std::string& s) {
    if (s == "ml" || s == "lmm") return FitMethod::ML;
    if (s == "reml") return FitMethod::REML;
    if (s == "ols") return FitMethod::OLS;
    throw ConfigError("method must be 'lmm', 'ml', 'reml', or 'ols', got '" + s + "'");
}

RatioColumn parse_column(const std::string& s) {
    if (s == "published") return RatioColumn::Published;
    if (s == "rho-hat") return RatioColumn::RecomputedRhoHat;
    if (s == "rho-hat-prime") return RatioColumn::RecomputedRhoHatPrime;
    throw ConfigError("column must be 'published', 'rho-hat', or 'rho-hat-prime', got '" + s +
                      "'");
}

SimDesign parse_sim_design(const std::string& s) {
    if (s == "crossover") return SimDesign::WithinSubjectCrossover;
    if (s == "between") return SimDesign::BetweenSubjects;
    throw ConfigError("design must be 'crossover' or 'between', got '" + s + "'");
}

Estimator parse_estimator(const std::string& s) {
    if (s == "ratio") return Estimator::RatioOfMeans;
    if (s == "lmm") return Estimator::LMM;
    if (s == "ols") return Estimator::OLS;
    throw ConfigError("estimator must be 'ratio', 'lmm', or 'ols', got '" + s + "'");
}

double parse_field(const std::string& text, std::size_t row, const std::string& column) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(text, &pos);
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) {
            ++pos;
        }
        if (pos != text.size()) {
            throw std::invalid_argument("trailing characters");
        }
        return v;
    } catch (const std::exception&) {
        throw DataError(row, "column '" + column + "': not a number: '" + text + "'");
    }
}

// ============================================================
// ratio / transform
// ============================================================

struct MetricFlags {
    std::string direction = "higher";
    double lower_bound = 0.0;
    double upper_bound = 0.0;
    CLI::Option* upper_opt = nullptr;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--direction", direction,
                        "Metric direction: 'higher' (better) or 'lower' (better)")
            ->capture_default_str();
        cmd->add_option("--lower-bound", lower_bound, "Best-possible-worst value of the metric")
            ->capture_default_str();
        upper_opt = cmd->add_option("--upper-bound", upper_bound,
                                    "Upper bound of the metric, if it has one");
    }

    MetricSpec spec() const {
        MetricSpec m{"cli", parse_direction(direction), lower_bound, std::nullopt};
        if (upper_opt->count() > 0) {
            m.upper_bound = upper_bound;
        }
        m.validate();
        return m;
    }
};

Json metric_json(const MetricSpec& m) {
    Json j;
    j["direction"] = direction_token(m.direction);
    j["lower_bound"] = m.lower_bound;
    j["upper_bound"] = m.upper_bound ? Json(*m.upper_bound) : Json(nullptr);
    return j;
}

Json run_ratio(double x_h, double x_c, double x_hc, const MetricFlags& metric, bool raw) {
    const MetricSpec spec = metric.spec();
    const PerformanceTriple triple{x_h, x_c, x_hc, spec};
    const RatioResult result = compute_rho_hat(triple, !raw);

    Json j;
    j["rho"] = num(result.rho);
    j["rho_hat"] = num(result.rho_hat);
    j["rho_hat_prime"] = opt_num(result.rho_hat_prime);
    j["baseline_label"] = to_string(result.baseline);
    j["transformed"] = !raw;
    j["metric"] = metric_json(spec);
    return j;
}

Json run_transform(double value, const MetricFlags& metric) {
    const MetricSpec spec = metric.spec();
    Json j;
    j["value"] = value;
    j["transformed"] = transform_value(value, spec);
    j["metric"] = metric_json(spec);
    return j;
}

// ============================================================
// ci
// ============================================================

struct CiFlags {
    std::string file;
    CLI::Option* file_opt = nullptr;
    double num_n = 0, num_mean = 0, num_sd = 0;
    double den_n = 0, den_mean = 0, den_sd = 0;
    CLI::Option* num_n_opt = nullptr;
    CLI::Option* den_n_opt = nullptr;
    double r = 0.0;
    CLI::Option* r_opt = nullptr;
    std::string method;
    std::string design = "independent";
    double level = 0.95;
    bool student_t = false;
};

// Reads a CSV with columns x (numerator sample) and y (denominator sample).
// Paired designs require both values on every row; independent designs allow
// blanks so the two samples may have different sizes.
void summaries_from_file(const std::string& path, Design design, SampleSummary& num_out,
                         SampleSummary& den_out) {
    const csv::Table table = csv::read_file(path);
    const std::size_t cx = table.column("x");
    const std::size_t cy = table.column("y");
    std::vector<double> xs, ys;
    xs.reserve(table.rows.size());
    ys.reserve(table.rows.size());
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const std::string& fx = table.rows[i][cx];
        const std::string& fy = table.rows[i][cy];
        if (design == Design::Paired && (fx.empty() || fy.empty())) {
            throw DataError(i + 1, "paired design requires both x and y on every row");
        }
        if (!fx.empty()) {
            xs.push_back(parse_field(fx, i + 1, "x"));
        }
        if (!fy.empty()) {
            ys.push_back(parse_field(fy, i + 1, "y"));
        }
    }
    num_out = summarize_sample(xs);
    den_out = summarize_sample(ys);
    if (design == Design::Paired) {
        // With a degenerate (zero-variance) sample the correlation is
        // undefined and the covariance term is zero anyway.
        num_out.r = (num_out.sd > 0 && den_out.sd > 0) ? pearson_r(xs, ys) : 0.0;
    }
}

Json run_ci(const CiFlags& flags) {
    const CiMethod method = parse_ci_method(flags.method);
    const Design design = parse_design(flags.design);

    const bool have_file = flags.file_opt->count() > 0;
    const bool have_summaries = flags.num_n_opt->count() > 0 || flags.den_n_opt->count() > 0;
    if (have_file && have_summaries) {
        throw ConfigError("give either --file or summary statistics, not both");
    }

    SampleSummary numerator, denominator;
    if (have_file) {
        summaries_from_file(flags.file, design, numerator, denominator);
        if (flags.r_opt->count() > 0) {
            throw ConfigError("--r conflicts with --file (the correlation is computed)");
        }
    } else {
        if (flags.num_n_opt->count() == 0 || flags.den_n_opt->count() == 0) {
            throw ConfigError(
                "without --file, --num-n/--num-mean/--num-sd and "
                "--den-n/--den-mean/--den-sd are required");
        }
        numerator = SampleSummary{static_cast<std::int64_t>(flags.num_n), flags.num_mean,
                                  flags.num_sd, std::nullopt};
        denominator = SampleSummary{static_cast<std::int64_t>(flags.den_n), flags.den_mean,
                                    flags.den_sd, std::nullopt};
        if (flags.r_opt->count() > 0) {
            numerator.r = flags.r;
        }
    }

    const RatioCI ci =
        ratio_ci(numerator, denominator, method, design, flags.level,
                 flags.student_t ? CriticalValue::StudentT : CriticalValue::Normal);

    Json j;
    j["estimate"] = num(ci.estimate);
    j["lower"] = num(ci.lower);
    j["upper"] = num(ci.upper);
    j["method"] = to_string(ci.method);
    j["design"] = to_string(ci.design);
    j["level"] = ci.level;
    j["n_numerator"] = numerator.n;
    j["n_denominator"] = denominator.n;
    return j;
}

// ============================================================
// regress
// ============================================================

std::string p_text(double p) {
    char buffer[32];
    if (p < 1e-4) {
        return "<0.0001";
    }
    std::snprintf(buffer, sizeof(buffer), "%.4f", p);
    return buffer;
}

void print_fit_table(const RegressionFit& fit) {
    char line[160];
    std::snprintf(line, sizeof(line), "%-10s %10s %9s %9s %9s %9s %11s", "Effect", "Estimate",
                  "SE", "p", "CI LL", "CI UL", "e^Estimate");
    std::cerr << line << '\n';
    for (const Coefficient& c : fit.coefficients) {
        std::snprintf(line, sizeof(line), "%-10s %10.4f %9.4f %9s %9.4f %9.4f %11.4f",
                      c.name.c_str(), c.estimate, c.se, p_text(c.p).c_str(), c.ci_low, c.ci_high,
                      c.exp_estimate);
        std::cerr << line << '\n';
    }
    if (fit.random_effect) {
        const RandomEffect& re = *fit.random_effect;
        std::snprintf(line, sizeof(line),
                      "Subject RE: variance %.6f (sd %.6f), se of variance %.6f", re.variance,
                      re.sd, re.se_of_variance);
        std::cerr << line << '\n';
    }
    std::snprintf(line, sizeof(line), "Residual sd: %.6f", fit.residual_sd);
    std::cerr << line << '\n';
    const char* method_label = fit.method == FitMethod::ML     ? "ML"
                               : fit.method == FitMethod::REML ? "REML"
                                                               : "OLS";
    std::snprintf(line, sizeof(line),
                  "%s fit: %lld observations, %lld subjects, log-likelihood %.6f",
                  method_label, static_cast<long long>(fit.n_obs),
                  static_cast<long long>(fit.n_subjects), fit.log_likelihood);
    std::cerr << line << '\n';
}

Json fit_json(const RegressionFit& fit) {
    Json j;
    j["method"] = to_string(fit.method);
    j["n_obs"] = fit.n_obs;
    j["n_subjects"] = fit.n_subjects;
    j["log_likelihood"] = fit.log_likelihood;
    Json coeffs = Json::array();
    for (const Coefficient& c : fit.coefficients) {
        Json cj;
        cj["name"] = c.name;
        cj["estimate"] = c.estimate;
        cj["se"] = c.se;
        cj["z"] = num(c.z);
        cj["p"] = c.p;
        cj["ci_low"] = c.ci_low;
        cj["ci_high"] = c.ci_high;
        cj["exp_estimate"] = c.exp_estimate;
        coeffs.push_back(std::move(cj));
    }
    j["coefficients"] = std::move(coeffs);
    if (fit.random_effect) {
        Json re;
        re["variance"] = fit.random_effect->variance;
        re["sd"] = fit.random_effect->sd;
        re["se_of_variance"] = num(fit.random_effect->se_of_variance);
        j["random_effect"] = std::move(re);
        j["lambda"] = fit.lambda;
    } else {
        j["random_effect"] = nullptr;
    }
    j["residual_sd"] = fit.residual_sd;
    return j;
}

Json run_regress(const std::string& file, const std::string& method_token,
                 const std::optional<double>& score_threshold) {
    const FitMethod method = parse_fit_method(method_token);
    const LongDataset dataset = load_long_csv(file);
    std::vector<LongRecord> records = dataset.records;
    if (score_threshold) {
        records = filter_successful(records, dataset.scores, *score_threshold);
    }
    const RegressionFit fit =
        method == FitMethod::OLS ? fit_ols(records) : fit_lmm(records, method);
    print_fit_table(fit);
    return fit_json(fit);
}

// ============================================================
// review
// ============================================================

Json summary_json(const ReviewSummary& summary, const std::string& column, double bin_width) {
    Json j;
    j["column"] = column;
    j["n"] = summary.n;
    j["mean"] = summary.mean;
    j["median"] = summary.median;
    j["min"] = summary.min;
    j["max"] = summary.max;
    j["synergy_count"] = summary.synergy_count;
    j["synergy_fraction"] = summary.synergy_fraction;
    j["bin_width"] = bin_width;
    Json bins = Json::array();
    for (const HistogramBin& bin : summary.histogram) {
        Json bj;
        bj["low"] = bin.low;
        bj["high"] = bin.high;
        bj["count"] = bin.count;
        bins.push_back(std::move(bj));
    }
    j["histogram"] = std::move(bins);
    return j;
}

Json run_review_summarize(const std::string& file, const std::string& column_token,
                          double bin_width) {
    const RatioColumn column = parse_column(column_token);
    const std::vector<StudyRecord> records = load_dataset(file);
    return summary_json(summarize(records, column, bin_width), column_token, bin_width);
}

Json column_audit_json(const ColumnAudit& audit) {
    Json j;
    j["verdict"] = to_string(audit.verdict);
    j["published"] = audit.published ? num(*audit.published) : Json(nullptr);
    j["recomputed"] = num(audit.recomputed);
    j["interval_low"] = num(audit.interval_low);
    j["interval_high"] = num(audit.interval_high);
    return j;
}

Json run_review_audit(const std::string& file) {
    const std::vector<StudyRecord> records = load_dataset(file);
    const std::vector<AuditReport> reports = audit(records);

    std::size_t n_anomalous = 0;
    char line[200];
    std::snprintf(line, sizeof(line), "%-26s %-26s %-12s %-12s %s", "study_id", "measure",
                  "rho_hat", "rho_hat_prime", "flag");
    std::cerr << line << '\n';
    Json rows = Json::array();
    for (const AuditReport& report : reports) {
        if (report.anomalous) {
            ++n_anomalous;
        }
        std::snprintf(line, sizeof(line), "%-26s %-26s %-12s %-12s %s", report.study_id.c_str(),
                      report.measure.c_str(), to_string(report.rho_hat.verdict),
                      to_string(report.rho_hat_prime.verdict), report.anomaly_flag.c_str());
        std::cerr << line << '\n';

        Json rj;
        rj["study_id"] = report.study_id;
        rj["task"] = report.task;
        rj["measure"] = report.measure;
        rj["anomaly_flag"] = report.anomaly_flag;
        rj["anomalous"] = report.anomalous;
        rj["rho_hat"] = column_audit_json(report.rho_hat);
        rj["rho_hat_prime"] = column_audit_json(report.rho_hat_prime);
        rows.push_back(std::move(rj));
    }
    std::snprintf(line, sizeof(line), "%zu rows audited, %zu anomalous", reports.size(),
                  n_anomalous);
    std::cerr << line << '\n';

    Json j;
    j["n"] = reports.size();
    j["n_anomalous"] = n_anomalous;
    j["rows"] = std::move(rows);
    return j;
}

Json run_review_hist(const std::string& file, const std::string& column_token, double bin_width,
                     const std::string& out) {
    const RatioColumn column = parse_column(column_token);
    const std::vector<StudyRecord> records = load_dataset(file);
    const ReviewSummary summary = summarize(records, column, bin_width);
    write_histogram_tsv(out, summary);
    Json j = summary_json(summary, column_token, bin_width);
    j["out"] = out;
    return j;
}

// Summary of a subset, or null when the subset has no summarizable values
// (an empty subset is a valid result, not an error).
Json subset_summary_json(const std::vector<StudyRecord>& subset, double bin_width) {
    if (subset.empty()) {
        return nullptr;
    }
    return summary_json(summarize(subset, RatioColumn::Published, bin_width), "published",
                        bin_width);
}

Json run_review_top(const std::string& file, double bin_width, const std::string& out,
                    bool have_out) {
    const std::vector<StudyRecord> records = load_dataset(file);
    const std::vector<StudyRecord> subset = subset_top_per_study(records);
    Json j;
    j["n"] = subset.size();
    j["summary"] = subset_summary_json(subset, bin_width);
    if (have_out) {
        save_dataset(out, subset);
        j["out"] = out;
    }
    return j;
}

Json run_review_by_direction(const std::string& file, const std::string& direction_token,
                             double bin_width, const std::string& out, bool have_out) {
    const Direction direction = parse_direction(direction_token);
    const std::vector<StudyRecord> records = load_dataset(file);
    const std::vector<StudyRecord> subset = subset_by_direction(records, direction);
    Json j;
    j["direction"] = direction_token;
    j["n"] = subset.size();
    j["summary"] = subset_summary_json(subset, bin_width);
    if (have_out) {
        save_dataset(out, subset);
        j["out"] = out;
    }
    return j;
}

// ============================================================
// simulate / coverage
// ============================================================

struct SimFlags {
    std::int64_t subjects = 0;
    std::uint64_t seed = 0;
    double beta = 1.0;
    std::vector<double> task_difficulty{1.0, 1.0};
    double condition_effect = 1.0;
    double order_effect = 1.0;
    double ability_sd = 0.0;
    double error_sd = 0.0;
    std::string design = "crossover";
    std::string config_file;

    CLI::Option* subjects_opt = nullptr;
    CLI::Option* seed_opt = nullptr;
    CLI::Option* beta_opt = nullptr;
    CLI::Option* task_opt = nullptr;
    CLI::Option* f_opt = nullptr;
    CLI::Option* g_opt = nullptr;
    CLI::Option* ability_opt = nullptr;
    CLI::Option* error_opt = nullptr;
    CLI::Option* design_opt = nullptr;
    CLI::Option* config_opt = nullptr;

    void add_to(CLI::App* cmd) {
        subjects_opt = cmd->add_option("--subjects", subjects, "Number of subjects (>= 2)");
        seed_opt = cmd->add_option("--seed", seed, "Base seed; all randomness derives from it");
        beta_opt = cmd->add_option("--beta", beta, "Baseline performance level")
                       ->capture_default_str();
        task_opt = cmd->add_option("--task-difficulty", task_difficulty,
                                   "Difficulty divisors of the two tasks")
                       ->expected(2);
        f_opt = cmd->add_option("--condition-effect", condition_effect,
                                "Multiplicative effect of the assisted condition (the target "
                                "of recovery)")
                    ->capture_default_str();
        g_opt = cmd->add_option("--order-effect", order_effect,
                                "Multiplicative effect of performing second")
                    ->capture_default_str();
        ability_opt = cmd->add_option("--ability-sd", ability_sd,
                                      "SD of log subject ability")
                          ->capture_default_str();
        error_opt = cmd->add_option("--error-sd", error_sd, "SD of log observation noise")
                        ->capture_default_str();
        design_opt = cmd->add_option("--design", design, "'crossover' or 'between'")
                         ->capture_default_str();
        config_opt = cmd->add_option("--config", config_file,
                                     "JSON file with the same parameters; explicit flags "
                                     "override its values");
    }

    SimConfig resolve() const {
        SimConfig cfg;
        bool config_has_subjects = false;
        bool config_has_seed = false;
        if (config_opt->count() > 0) {
            std::ifstream in(config_file);
            if (!in) {
                throw ConfigError("cannot open config file '" + config_file + "'");
            }
            Json doc;
            try {
                doc = Json::parse(in);
            } catch (const Json::parse_error& e) {
                throw ConfigError("config file '" + config_file + "': " + e.what());
            }
            if (!doc.is_object()) {
                throw ConfigError("config file '" + config_file + "': expected a JSON object");
            }
            for (const auto& [key, value] : doc.items()) {
                try {
                    if (key == "n_subjects") {
                        cfg.n_subjects = value.get<std::int64_t>();
                        config_has_subjects = true;
                    } else if (key == "beta") {
                        cfg.beta = value.get<double>();
                    } else if (key == "task_difficulty") {
                        if (!value.is_array() || value.size() != 2) {
                            throw ConfigError("task_difficulty must be an array of 2 numbers");
                        }
                        cfg.task_difficulty = {value[0].get<double>(), value[1].get<double>()};
                    } else if (key == "condition_effect") {
                        cfg.condition_effect = value.get<double>();
                    } else if (key == "order_effect") {
                        cfg.order_effect = value.get<double>();
                    } else if (key == "ability_log_sd") {
                        cfg.ability_log_sd = value.get<double>();
                    } else if (key == "error_log_sd") {
                        cfg.error_log_sd = value.get<double>();
                    } else if (key == "design") {
                        cfg.design = parse_sim_design(value.get<std::string>());
                    } else if (key == "base_seed") {
                        cfg.base_seed = value.get<std::uint64_t>();
                        config_has_seed = true;
                    } else {
                        throw ConfigError("unknown key '" + key + "'");
                    }
                } catch (const Json::exception& e) {
                    throw ConfigError("config file '" + config_file + "', key '" + key +
                                      "': " + e.what());
                }
            }
        }
        if (subjects_opt->count() > 0) cfg.n_subjects = subjects;
        if (seed_opt->count() > 0) cfg.base_seed = seed;
        if (beta_opt->count() > 0) cfg.beta = beta;
        if (task_opt->count() > 0) cfg.task_difficulty = {task_difficulty[0], task_difficulty[1]};
        if (f_opt->count() > 0) cfg.condition_effect = condition_effect;
        if (g_opt->count() > 0) cfg.order_effect = order_effect;
        if (ability_opt->count() > 0) cfg.ability_log_sd = ability_sd;
        if (error_opt->count() > 0) cfg.error_log_sd = error_sd;
        if (design_opt->count() > 0) cfg.design = parse_sim_design(design);

        if (subjects_opt->count() == 0 && !config_has_subjects) {
            throw ConfigError("--subjects is required (or n_subjects in --config)");
        }
        if (seed_opt->count() == 0 && !config_has_seed) {
            throw ConfigError("--seed is required (or base_seed in --config)");
        }
        cfg.validate();
        return cfg;
    }
};

Json sim_config_json(const SimConfig& cfg) {
    Json j;
    j["n_subjects"] = cfg.n_subjects;
    j["beta"] = cfg.beta;
    j["task_difficulty"] = Json::array({cfg.task_difficulty[0], cfg.task_difficulty[1]});
    j["condition_effect"] = cfg.condition_effect;
    j["order_effect"] = cfg.order_effect;
    j["ability_log_sd"] = cfg.ability_log_sd;
    j["error_log_sd"] = cfg.error_log_sd;
    j["design"] = to_string(cfg.design);
    j["base_seed"] = cfg.base_seed;
    return j;
}

Json run_simulate(const SimFlags& flags, const std::string& out, bool have_out) {
    const SimConfig cfg = flags.resolve();
    const std::vector<LongRecord> records = generate(cfg);

    std::vector<double> outcomes;
    outcomes.reserve(records.size());
    for (const LongRecord& rec : records) {
        outcomes.push_back(rec.outcome);
    }
    const auto [min_it, max_it] = std::minmax_element(outcomes.begin(), outcomes.end());

    Json j;
    j["config"] = sim_config_json(cfg);
    j["n_records"] = records.size();
    Json stats_j;
    stats_j["min"] = *min_it;
    stats_j["max"] = *max_it;
    stats_j["mean"] = stats::compensated_sum(outcomes.data(), outcomes.size()) /
                      static_cast<double>(outcomes.size());
    j["outcome"] = std::move(stats_j);
    if (have_out) {
        save_long_csv(out, records);
        j["out"] = out;
    } else {
        Json rows = Json::array();
        for (const LongRecord& rec : records) {
            Json rj;
            rj["subject"] = rec.subject;
            rj["condition"] = rec.condition;
            rj["task"] = rec.task;
            rj["order"] = rec.order;
            rj["outcome"] = rec.outcome;
            rows.push_back(std::move(rj));
        }
        j["records"] = std::move(rows);
    }
    return j;
}

Json run_coverage(const SimFlags& flags, const std::string& estimator_token,
                  std::int64_t replicates, double level, unsigned threads) {
    const Estimator estimator = parse_estimator(estimator_token);
    const SimConfig cfg = flags.resolve();
    const RecoveryReport report =
        recovery_study(cfg, estimator, replicates, level, std::max(1u, threads));

    Json j;
    j["config"] = sim_config_json(cfg);
    j["estimator"] = to_string(report.estimator);
    j["replicates"] = report.replicates;
    j["failures"] = report.failures;
    j["level"] = level;
    j["true_effect"] = report.true_effect;
    j["mean_estimate"] = report.mean_estimate;
    j["bias"] = report.bias;
    j["rmse"] = report.rmse;
    j["ci_coverage"] = report.ci_coverage;
    return j;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"synergy — ratio-of-means effect sizes, confidence intervals, mixed-model\n"
                 "estimation, review auditing, and simulation for human-computer experiments"};
    app.set_version_flag("--version", std::string("synergy ") + kVersion);
    app.require_subcommand(1);

    std::optional<Json> payload;

    // ---- ratio ----
    auto* ratio = app.add_subcommand(
        "ratio", "Ratio-of-means effect size of a team against the best single performer");
    auto ratio_x = std::make_shared<std::array<double, 3>>();
    auto ratio_metric = std::make_shared<MetricFlags>();
    auto ratio_raw = std::make_shared<bool>(false);
    ratio->add_option("--x-h", (*ratio_x)[0], "Mean performance of humans alone")->required();
    ratio->add_option("--x-c", (*ratio_x)[1], "Mean performance of the computer alone")
        ->required();
    ratio->add_option("--x-hc", (*ratio_x)[2], "Mean performance of the human-computer team")
        ->required();
    ratio_metric->add_to(ratio);
    ratio->add_flag("--raw", *ratio_raw, "Skip metric transforms; use the values as given");
    ratio->callback([&payload, ratio_x, ratio_metric, ratio_raw] {
        payload = run_ratio((*ratio_x)[0], (*ratio_x)[1], (*ratio_x)[2], *ratio_metric,
                            *ratio_raw);
    });

    // ---- transform ----
    auto* transform = app.add_subcommand(
        "transform", "Apply the metric's transform pipeline to a single value");
    auto transform_value_in = std::make_shared<double>(0.0);
    auto transform_metric = std::make_shared<MetricFlags>();
    transform->add_option("--value", *transform_value_in, "The value to transform")->required();
    transform_metric->add_to(transform);
    transform->callback([&payload, transform_value_in, transform_metric] {
        payload = run_transform(*transform_value_in, *transform_metric);
    });

    // ---- ci ----
    auto* ci = app.add_subcommand(
        "ci", "Confidence interval for a ratio of means (numerator mean / denominator mean)");
    auto ci_flags = std::make_shared<CiFlags>();
    ci_flags->file_opt = ci->add_option(
        "--file", ci_flags->file,
        "CSV with columns x (numerator sample) and y (denominator sample); paired designs "
        "need both on every row, independent designs allow blanks");
    ci_flags->num_n_opt = ci->add_option("--num-n", ci_flags->num_n, "Numerator sample size");
    ci->add_option("--num-mean", ci_flags->num_mean, "Numerator sample mean")
        ->needs(ci_flags->num_n_opt);
    ci->add_option("--num-sd", ci_flags->num_sd, "Numerator sample SD")
        ->needs(ci_flags->num_n_opt);
    ci_flags->den_n_opt = ci->add_option("--den-n", ci_flags->den_n, "Denominator sample size");
    ci->add_option("--den-mean", ci_flags->den_mean, "Denominator sample mean")
        ->needs(ci_flags->den_n_opt);
    ci->add_option("--den-sd", ci_flags->den_sd, "Denominator sample SD")
        ->needs(ci_flags->den_n_opt);
    ci_flags->r_opt =
        ci->add_option("--r", ci_flags->r, "Correlation between paired measurements");
    ci->add_option("--method", ci_flags->method, "'fieller', 'delta', or 'recommended'")
        ->required();
    ci->add_option("--design", ci_flags->design, "'paired' or 'independent'")
        ->capture_default_str();
    ci->add_option("--level", ci_flags->level, "Confidence level in (0,1)")
        ->capture_default_str();
    ci->add_flag("--student-t", ci_flags->student_t,
                 "Use Student t critical values (df = n1+n2-2) instead of normal");
    ci->callback([&payload, ci_flags] { payload = run_ci(*ci_flags); });

    // ---- regress ----
    auto* regress = app.add_subcommand(
        "regress", "Mixed-effects (or OLS) log-linear model of long-format outcomes");
    auto regress_file = std::make_shared<std::string>();
    auto regress_method = std::make_shared<std::string>("ml");
    auto regress_threshold = std::make_shared<double>(0.0);
    regress->add_option("--file", *regress_file,
                        "Long-format CSV: subject,condition,task,order,outcome[,score]")
        ->required();
    regress->add_option("--method", *regress_method, "'lmm'/'ml', 'reml', or 'ols'")
        ->capture_default_str();
    auto* threshold_opt = regress->add_option(
        "--score-threshold", *regress_threshold,
        "Keep only records whose (subject, task) score is >= this value");
    regress->callback([&payload, regress_file, regress_method, regress_threshold,
                       threshold_opt] {
        std::optional<double> threshold;
        if (threshold_opt->count() > 0) {
            threshold = *regress_threshold;
        }
        payload = run_regress(*regress_file, *regress_method, threshold);
    });

    // ---- review ----
    auto* review = app.add_subcommand("review", "Systematic-review dataset analyses");
    review->require_subcommand(1);

    auto* summarize_cmd = review->add_subcommand(
        "summarize", "Mean, median, synergy fraction, range, and histogram of a ratio column");
    auto sum_file = std::make_shared<std::string>();
    auto sum_column = std::make_shared<std::string>("published");
    auto sum_bin = std::make_shared<double>(0.05);
    summarize_cmd->add_option("--file", *sum_file, "Review dataset CSV")->required();
    summarize_cmd
        ->add_option("--column", *sum_column,
                     "'published', 'rho-hat' (recomputed), or 'rho-hat-prime' (recomputed)")
        ->capture_default_str();
    summarize_cmd->add_option("--bin-width", *sum_bin, "Histogram bin width")
        ->capture_default_str();
    summarize_cmd->callback([&payload, sum_file, sum_column, sum_bin] {
        payload = run_review_summarize(*sum_file, *sum_column, *sum_bin);
    });

    auto* audit_cmd = review->add_subcommand(
        "audit", "Recompute every ratio with rounding-aware intervals and flag inconsistencies");
    auto audit_file = std::make_shared<std::string>();
    audit_cmd->add_option("--file", *audit_file, "Review dataset CSV")->required();
    audit_cmd->callback(
        [&payload, audit_file] { payload = run_review_audit(*audit_file); });

    auto* hist_cmd = review->add_subcommand(
        "hist", "Write the histogram of a ratio column as two-column TSV (midpoint, count)");
    auto hist_file = std::make_shared<std::string>();
    auto hist_column = std::make_shared<std::string>("published");
    auto hist_bin = std::make_shared<double>(0.05);
    auto hist_out = std::make_shared<std::string>();
    hist_cmd->add_option("--file", *hist_file, "Review dataset CSV")->required();
    hist_cmd->add_option("--column", *hist_column,
                         "'published', 'rho-hat', or 'rho-hat-prime'")
        ->capture_default_str();
    hist_cmd->add_option("--bin-width", *hist_bin, "Histogram bin width")
        ->capture_default_str();
    hist_cmd->add_option("--out", *hist_out, "TSV output path")->required();
    hist_cmd->callback([&payload, hist_file, hist_column, hist_bin, hist_out] {
        payload = run_review_hist(*hist_file, *hist_column, *hist_bin, *hist_out);
    });

    auto* top_cmd = review->add_subcommand(
        "top-per-study", "Keep each study's highest published ratio, then summarize");
    auto top_file = std::make_shared<std::string>();
    auto top_bin = std::make_shared<double>(0.05);
    auto top_out = std::make_shared<std::string>();
    top_cmd->add_option("--file", *top_file, "Review dataset CSV")->required();
    top_cmd->add_option("--bin-width", *top_bin, "Histogram bin width")->capture_default_str();
    auto* top_out_opt = top_cmd->add_option("--out", *top_out, "Write the subset as CSV here");
    top_cmd->callback([&payload, top_file, top_bin, top_out, top_out_opt] {
        payload = run_review_top(*top_file, *top_bin, *top_out, top_out_opt->count() > 0);
    });

    auto* dir_cmd = review->add_subcommand(
        "by-direction", "Keep records whose metric direction matches, then summarize");
    auto dir_file = std::make_shared<std::string>();
    auto dir_direction = std::make_shared<std::string>();
    auto dir_bin = std::make_shared<double>(0.05);
    auto dir_out = std::make_shared<std::string>();
    dir_cmd->add_option("--file", *dir_file, "Review dataset CSV")->required();
    dir_cmd->add_option("--direction", *dir_direction, "'higher' or 'lower'")->required();
    dir_cmd->add_option("--bin-width", *dir_bin, "Histogram bin width")->capture_default_str();
    auto* dir_out_opt = dir_cmd->add_option("--out", *dir_out, "Write the subset as CSV here");
    dir_cmd->callback([&payload, dir_file, dir_direction, dir_bin, dir_out, dir_out_opt] {
        payload = run_review_by_direction(*dir_file, *dir_direction, *dir_bin, *dir_out,
                                          dir_out_opt->count() > 0);
    });

    // ---- simulate ----
    auto* simulate = app.add_subcommand(
        "simulate", "Generate one synthetic crossover (or between-subjects) experiment");
    auto sim_flags = std::make_shared<SimFlags>();
    sim_flags->add_to(simulate);
    auto sim_out = std::make_shared<std::string>();
    auto* sim_out_opt =
        simulate->add_option("--out", *sim_out, "Write the records as long-format CSV here");
    simulate->callback([&payload, sim_flags, sim_out, sim_out_opt] {
        payload = run_simulate(*sim_flags, *sim_out, sim_out_opt->count() > 0);
    });

    // ---- coverage ----
    auto* coverage = app.add_subcommand(
        "coverage", "Estimator recovery study: bias, RMSE, and CI coverage over replicates");
    auto cov_flags = std::make_shared<SimFlags>();
    cov_flags->add_to(coverage);
    auto cov_estimator = std::make_shared<std::string>();
    auto cov_replicates = std::make_shared<std::int64_t>(0);
    auto cov_level = std::make_shared<double>(0.95);
    auto cov_threads = std::make_shared<unsigned>(1);
    coverage->add_option("--estimator", *cov_estimator, "'ratio', 'lmm', or 'ols'")->required();
    coverage->add_option("--replicates", *cov_replicates, "Number of replicates (>= 1)")
        ->required();
    coverage->add_option("--level", *cov_level, "Nominal CI level")->capture_default_str();
    coverage->add_option("--threads", *cov_threads,
                         "Worker threads (the report is identical for any value)")
        ->capture_default_str();
    coverage->callback([&payload, cov_flags, cov_estimator, cov_replicates, cov_level,
                        cov_threads] {
        payload = run_coverage(*cov_flags, *cov_estimator, *cov_replicates, *cov_level,
                               *cov_threads);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);  // prints the message
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }

    if (payload) {
        std::cout << payload->dump(2) << '\n';
    }
    return 0;
}
