#include "synergy/regression.hpp"

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <numbers>
#include <unordered_map>

#include <Eigen/Dense>

#include "synergy/csv.hpp"
#include "synergy/errors.hpp"
#include "synergy/stats.hpp"

namespace synergy {

namespace {

constexpr int kP = 4;                 // Intercept, Condition, Task, Order
constexpr double kLambdaMax = 1e4;    // search bracket for the variance ratio
constexpr double kLambdaTol = 1e-9;   // absolute tolerance of the 1-D search
constexpr double kCiLevel = 0.95;
const double kLn2Pi = std::log(2.0 * std::numbers::pi);
const double kNaN = std::numeric_limits<double>::quiet_NaN();

// Per-subject cross products. Everything the profiled likelihood needs at any
// variance ratio is a lambda-independent combination of these, so one pass
// over the data serves the whole optimization.
struct GroupStats {
    Eigen::Matrix4d xtx = Eigen::Matrix4d::Zero();
    Eigen::Vector4d xty = Eigen::Vector4d::Zero();
    Eigen::Vector4d sx = Eigen::Vector4d::Zero();  // column sums of X rows
    double sy = 0.0;                               // sum of y
    double yty = 0.0;
    double n = 0.0;
};

struct Prepared {
    std::vector<GroupStats> groups;
    Eigen::MatrixXd x;  // full design, for the rank check and OLS
    Eigen::VectorXd y;  // ln(outcome)
    std::int64_t n_obs = 0;
    std::int64_t n_subjects = 0;
};

int check_indicator(int value, const char* what, std::size_t obs_index) {
    if (value != 0 && value != 1) {
        throw DomainError(std::string(what) + " must be 0 or 1 (observation " +
                          std::to_string(obs_index + 1) + ")");
    }
    return value;
}

Prepared prepare(const std::vector<LongRecord>& data, std::int64_t min_subjects,
                 const char* size_context) {
    if (data.empty()) {
        throw DomainError("regression requires observations");
    }
    Prepared prep;
    prep.n_obs = static_cast<std::int64_t>(data.size());
    prep.x.resize(static_cast<Eigen::Index>(data.size()), kP);
    prep.y.resize(static_cast<Eigen::Index>(data.size()));

    std::unordered_map<std::string, std::size_t> subject_index;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const LongRecord& rec = data[i];
        if (!std::isfinite(rec.outcome) || rec.outcome <= 0.0) {
            throw DomainError("outcome must be positive, its logarithm is the response (observation " +
                              std::to_string(i + 1) + ")");
        }
        const double c = check_indicator(rec.condition, "condition", i);
        const double t = check_indicator(rec.task, "task", i);
        const double o = check_indicator(rec.order, "order", i);
        const Eigen::Index row = static_cast<Eigen::Index>(i);
        prep.x(row, 0) = 1.0;
        prep.x(row, 1) = c;
        prep.x(row, 2) = t;
        prep.x(row, 3) = o;
        prep.y(row) = std::log(rec.outcome);

        auto [it, inserted] = subject_index.try_emplace(rec.subject, prep.groups.size());
        if (inserted) {
            prep.groups.emplace_back();
        }
        GroupStats& g = prep.groups[it->second];
        const Eigen::Vector4d xrow = prep.x.row(row).transpose();
        g.xtx.noalias() += xrow * xrow.transpose();
        g.xty.noalias() += xrow * prep.y(row);
        g.sx += xrow;
        g.sy += prep.y(row);
        g.yty += prep.y(row) * prep.y(row);
        g.n += 1.0;
    }
    prep.n_subjects = static_cast<std::int64_t>(prep.groups.size());

    // Size requirements come before the rank check: too little data is a
    // data problem, not a design problem, even though it also implies a
    // short-rank design matrix.
    if (prep.n_subjects < min_subjects) {
        throw DomainError(std::string(size_context) + " requires at least " +
                          std::to_string(min_subjects) + " subjects");
    }
    if (prep.n_obs <= kP) {
        throw DomainError(std::string(size_context) + " requires more than " +
                          std::to_string(kP) + " observations");
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(prep.x);
    if (qr.rank() < kP) {
        throw RankError("design matrix [1, condition, task, order] is rank-deficient; "
                        "an indicator is constant or aliased");
    }
    return prep;
}

// Generalized least squares at a fixed variance ratio lambda = su^2/se^2.
// With H = I + lambda Z Z' the per-subject inverse is
//   (I + lambda J)^-1 = I - (lambda / (1 + lambda n_i)) J,
// so the weighted cross products reduce to rank-one corrections of the
// unweighted ones, and ln|H| = sum ln(1 + lambda n_i).
struct ProfilePoint {
    Eigen::Vector4d beta = Eigen::Vector4d::Zero();
    Eigen::Matrix4d a = Eigen::Matrix4d::Zero();  // X' H^-1 X
    double q = 0.0;                               // r' H^-1 r at the GLS solution
    double sigma_e2 = 0.0;
    double log_likelihood = 0.0;
};

ProfilePoint eval_lambda(const Prepared& prep, double lambda, FitMethod method) {
    ProfilePoint point;
    Eigen::Vector4d b = Eigen::Vector4d::Zero();
    double t = 0.0;
    double logdet_h = 0.0;
    for (const GroupStats& g : prep.groups) {
        const double gfac = lambda / (1.0 + lambda * g.n);
        point.a.noalias() += g.xtx - gfac * (g.sx * g.sx.transpose());
        b.noalias() += g.xty - gfac * g.sx * g.sy;
        t += g.yty - gfac * g.sy * g.sy;
        logdet_h += std::log1p(lambda * g.n);
    }
    point.beta = point.a.ldlt().solve(b);
    // r' H^-1 r = y' H^-1 y - beta' X' H^-1 y at the GLS minimizer; clamp the
    // exact-fit case away from log(0).
    point.q = std::max(t - point.beta.dot(b), 1e-300);

    const double n = static_cast<double>(prep.n_obs);
    if (method == FitMethod::ML) {
        point.sigma_e2 = point.q / n;
        point.log_likelihood =
            -0.5 * (n * kLn2Pi + n * std::log(point.sigma_e2) + logdet_h + n);
    } else {
        const double df = n - kP;
        point.sigma_e2 = point.q / df;
        point.log_likelihood =
            -0.5 * (df * kLn2Pi + df * std::log(point.sigma_e2) + logdet_h +
                    std::log(point.a.determinant()) + df);
    }
    return point;
}

// Maximizes the profiled log-likelihood over lambda in [0, kLambdaMax]:
// coarse logarithmic grid to bracket, golden-section to kLambdaTol, one
// parabolic interpolation through the final bracket as refinement, and a
// snap-to-zero so a flat or boundary likelihood reports exactly 0.
double optimize_lambda(const Prepared& prep, FitMethod method) {
    auto value = [&](double lambda) { return eval_lambda(prep, lambda, method).log_likelihood; };

    std::vector<double> grid;
    grid.push_back(0.0);
    for (double exponent = -6.0; exponent < 4.0 - 1e-9; exponent += 1.0 / 3.0) {
        grid.push_back(std::pow(10.0, exponent));
    }
    grid.push_back(kLambdaMax);

    std::size_t best = 0;
    double best_value = value(grid[0]);
    const double value_at_zero = best_value;
    for (std::size_t i = 1; i < grid.size(); ++i) {
        const double v = value(grid[i]);
        if (v > best_value) {
            best_value = v;
            best = i;
        }
    }

    double lo = (best == 0) ? 0.0 : grid[best - 1];
    double hi = (best + 1 < grid.size()) ? grid[best + 1] : kLambdaMax;

    constexpr double kGolden = 0.6180339887498949;
    double x1 = hi - kGolden * (hi - lo);
    double x2 = lo + kGolden * (hi - lo);
    double f1 = value(x1);
    double f2 = value(x2);
    while (hi - lo > kLambdaTol) {
        if (f1 < f2) {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + kGolden * (hi - lo);
            f2 = value(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - kGolden * (hi - lo);
            f1 = value(x1);
        }
    }
    double best_x = (f1 >= f2) ? x1 : x2;
    double best_f = std::max(f1, f2);

    // Parabolic refinement through (lo, best_x, hi).
    const double fl = value(lo);
    const double fh = value(hi);
    const double d1 = (best_x - lo) * (best_f - fh);
    const double d2 = (best_x - hi) * (best_f - fl);
    const double denom = 2.0 * (d1 - d2);
    if (denom != 0.0) {
        const double vertex = best_x - ((best_x - lo) * d1 - (best_x - hi) * d2) / denom;
        if (vertex > 0.0 && vertex < kLambdaMax && std::isfinite(vertex)) {
            const double fv = value(vertex);
            if (fv > best_f) {
                best_f = fv;
                best_x = vertex;
            }
        }
    }

    // Boundary solutions and flat likelihoods (e.g. one observation per
    // subject, where the grid maximum lands wherever rounding noise favors)
    // belong at exactly zero: prefer it whenever it is not measurably worse.
    if (value_at_zero >= best_f - 1e-9) {
        return 0.0;
    }
    return best_x;
}

// Log-likelihood as a function of the variance components themselves, with
// the fixed effects profiled out. Used only to differentiate numerically at
// the optimum for the SE of the between-subject variance.
double components_loglik(const Prepared& prep, double var_u, double var_e, FitMethod method) {
    Eigen::Matrix4d a = Eigen::Matrix4d::Zero();
    Eigen::Vector4d b = Eigen::Vector4d::Zero();
    double t = 0.0;
    double logdet_v = 0.0;
    for (const GroupStats& g : prep.groups) {
        const double gfac = var_u / (var_e + g.n * var_u);
        a.noalias() += g.xtx - gfac * (g.sx * g.sx.transpose());
        b.noalias() += g.xty - gfac * g.sx * g.sy;
        t += g.yty - gfac * g.sy * g.sy;
        logdet_v += (g.n - 1.0) * std::log(var_e) + std::log(var_e + g.n * var_u);
    }
    a /= var_e;
    b /= var_e;
    t /= var_e;
    const Eigen::Vector4d beta = a.ldlt().solve(b);
    const double quad = std::max(t - beta.dot(b), 0.0);
    const double n = static_cast<double>(prep.n_obs);
    if (method == FitMethod::ML) {
        return -0.5 * (n * kLn2Pi + logdet_v + quad);
    }
    return -0.5 * ((n - kP) * kLn2Pi + logdet_v + std::log(a.determinant()) + quad);
}

// Central-difference observed information in (var_u, var_e), inverted for the
// sampling variance of the variance estimate. NaN when the information is not
// positive definite (e.g. near-flat likelihood).
double variance_se(const Prepared& prep, double var_u, double var_e, FitMethod method) {
    const double hv = 1e-5 * var_u;
    const double he = 1e-5 * var_e;
    auto f = [&](double v, double e) { return components_loglik(prep, v, e, method); };
    const double f0 = f(var_u, var_e);
    const double fvv = (f(var_u + hv, var_e) - 2.0 * f0 + f(var_u - hv, var_e)) / (hv * hv);
    const double fee = (f(var_u, var_e + he) - 2.0 * f0 + f(var_u, var_e - he)) / (he * he);
    const double fve = (f(var_u + hv, var_e + he) - f(var_u + hv, var_e - he) -
                        f(var_u - hv, var_e + he) + f(var_u - hv, var_e - he)) /
                       (4.0 * hv * he);
    const double i11 = -fvv;
    const double i22 = -fee;
    const double i12 = -fve;
    const double det = i11 * i22 - i12 * i12;
    if (!(i11 > 0.0) || !(det > 0.0)) {
        return kNaN;
    }
    const double cov_vv = i22 / det;
    if (!std::isfinite(cov_vv) || cov_vv <= 0.0) {
        return kNaN;
    }
    return std::sqrt(cov_vv);
}

std::vector<Coefficient> make_coefficients(const Eigen::Vector4d& beta,
                                           const Eigen::Matrix4d& cov) {
    static const char* kNames[kP] = {"Intercept", "Condition", "Task", "Order"};
    const double zstar = stats::normal_critical_value(kCiLevel);
    std::vector<Coefficient> out(kP);
    for (int j = 0; j < kP; ++j) {
        Coefficient& coef = out[j];
        coef.name = kNames[j];
        coef.estimate = beta(j);
        coef.se = std::sqrt(std::max(cov(j, j), 0.0));
        if (coef.se > 0.0) {
            coef.z = coef.estimate / coef.se;
        } else {
            coef.z = (coef.estimate == 0.0)
                         ? 0.0
                         : std::copysign(std::numeric_limits<double>::infinity(), coef.estimate);
        }
        coef.p = stats::normal_two_sided_p(coef.z);
        coef.ci_low = coef.estimate - zstar * coef.se;
        coef.ci_high = coef.estimate + zstar * coef.se;
        coef.exp_estimate = std::exp(coef.estimate);
    }
    return out;
}

}  // namespace

const char* to_string(FitMethod method) {
    switch (method) {
        case FitMethod::ML: return "ml";
        case FitMethod::REML: return "reml";
        case FitMethod::OLS: return "ols";
    }
    return "?";
}

RegressionFit fit_lmm(const std::vector<LongRecord>& data, FitMethod method) {
    if (method == FitMethod::OLS) {
        throw ConfigError("fit_lmm fits mixed models; use fit_ols for least squares");
    }
    Prepared prep = prepare(data, 2, "mixed model");

    const double lambda = optimize_lambda(prep, method);
    const ProfilePoint point = eval_lambda(prep, lambda, method);

    const Eigen::Matrix4d cov = point.sigma_e2 * point.a.ldlt().solve(Eigen::Matrix4d::Identity());

    RegressionFit fit;
    fit.coefficients = make_coefficients(point.beta, cov);
    RandomEffect re;
    re.variance = lambda * point.sigma_e2;
    re.sd = std::sqrt(re.variance);
    re.se_of_variance =
        (lambda > 0.0) ? variance_se(prep, re.variance, point.sigma_e2, method) : kNaN;
    fit.random_effect = re;
    fit.residual_sd = std::sqrt(point.sigma_e2);
    fit.n_obs = prep.n_obs;
    fit.n_subjects = prep.n_subjects;
    fit.log_likelihood = point.log_likelihood;
    fit.method = method;
    fit.lambda = lambda;
    return fit;
}

RegressionFit fit_ols(const std::vector<LongRecord>& data) {
    Prepared prep = prepare(data, 1, "least squares");

    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(prep.x);
    const Eigen::Vector4d beta = qr.solve(prep.y);
    const Eigen::VectorXd residuals = prep.y - prep.x * beta;
    const double rss = residuals.squaredNorm();
    const double n = static_cast<double>(prep.n_obs);
    const double sigma2 = rss / (n - kP);

    const Eigen::Matrix4d xtx = prep.x.transpose() * prep.x;
    const Eigen::Matrix4d cov = sigma2 * xtx.ldlt().solve(Eigen::Matrix4d::Identity());

    RegressionFit fit;
    fit.coefficients = make_coefficients(beta, cov);
    fit.random_effect = std::nullopt;
    fit.residual_sd = std::sqrt(sigma2);
    fit.n_obs = prep.n_obs;
    fit.n_subjects = prep.n_subjects;
    fit.log_likelihood = -0.5 * n * (kLn2Pi + std::log(std::max(rss, 1e-300) / n) + 1.0);
    fit.method = FitMethod::OLS;
    fit.lambda = 0.0;
    return fit;
}

std::vector<LongRecord> filter_successful(
    const std::vector<LongRecord>& data,
    const std::map<std::pair<std::string, int>, double>& scores, double threshold) {
    std::vector<LongRecord> kept;
    kept.reserve(data.size());
    for (const LongRecord& rec : data) {
        const auto it = scores.find({rec.subject, rec.task});
        if (it == scores.end()) {
            throw DataError("no score for subject '" + rec.subject + "', task " +
                            std::to_string(rec.task));
        }
        if (it->second >= threshold) {
            kept.push_back(rec);
        }
    }
    return kept;
}

namespace {

double parse_number(const std::string& field, std::size_t row, const char* what) {
    try {
        std::size_t pos = 0;
        const double value = std::stod(field, &pos);
        if (pos != field.size()) {
            throw DataError(row, std::string(what) + ": trailing characters in '" + field + "'");
        }
        return value;
    } catch (const std::invalid_argument&) {
        throw DataError(row, std::string(what) + ": not a number: '" + field + "'");
    } catch (const std::out_of_range&) {
        throw DataError(row, std::string(what) + ": out of range: '" + field + "'");
    }
}

int parse_indicator(const std::string& field, std::size_t row, const char* what) {
    if (field == "0") {
        return 0;
    }
    if (field == "1") {
        return 1;
    }
    throw DataError(row, std::string(what) + " must be 0 or 1, got '" + field + "'");
}

}  // namespace

LongDataset load_long_csv(const std::string& path) {
    const csv::Table table = csv::read_file(path);
    const std::size_t col_subject = table.column("subject");
    const std::size_t col_condition = table.column("condition");
    const std::size_t col_task = table.column("task");
    const std::size_t col_order = table.column("order");
    const std::size_t col_outcome = table.column("outcome");
    std::size_t col_score = table.header.size();
    LongDataset dataset;
    for (std::size_t i = 0; i < table.header.size(); ++i) {
        if (table.header[i] == "score") {
            col_score = i;
            dataset.has_scores = true;
        }
    }

    dataset.records.reserve(table.rows.size());
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const csv::Row& row = table.rows[i];
        const std::size_t row_no = i + 1;  // 1-based data row
        LongRecord rec;
        rec.subject = row[col_subject];
        if (rec.subject.empty()) {
            throw DataError(row_no, "empty subject id");
        }
        rec.condition = parse_indicator(row[col_condition], row_no, "condition");
        rec.task = parse_indicator(row[col_task], row_no, "task");
        rec.order = parse_indicator(row[col_order], row_no, "order");
        rec.outcome = parse_number(row[col_outcome], row_no, "outcome");
        dataset.records.push_back(rec);

        if (dataset.has_scores && !row[col_score].empty()) {
            const double score = parse_number(row[col_score], row_no, "score");
            const auto [it, inserted] =
                dataset.scores.try_emplace({rec.subject, rec.task}, score);
            if (!inserted && it->second != score) {
                throw DataError(row_no, "conflicting scores for subject '" + rec.subject +
                                            "', task " + std::to_string(rec.task));
            }
        }
    }
    return dataset;
}

void save_long_csv(const std::string& path, const std::vector<LongRecord>& records) {
    csv::Table table;
    table.header = {"subject", "condition", "task", "order", "outcome"};
    table.rows.reserve(records.size());
    for (const LongRecord& rec : records) {
        char outcome[64];
        std::snprintf(outcome, sizeof(outcome), "%.17g", rec.outcome);
        table.rows.push_back({rec.subject, std::to_string(rec.condition),
                              std::to_string(rec.task), std::to_string(rec.order), outcome});
    }
    csv::write_file(path, table);
}

namespace detail {

LambdaFit fit_at_lambda(const std::vector<LongRecord>& data, double lambda, FitMethod method) {
    if (!std::isfinite(lambda) || lambda < 0.0) {
        throw ConfigError("variance ratio must be finite and non-negative");
    }
    if (method == FitMethod::OLS) {
        throw ConfigError("fit_at_lambda evaluates the mixed-model profile; method must be ML or REML");
    }
    const Prepared prep = prepare(data, 2, "mixed model");
    const ProfilePoint point = eval_lambda(prep, lambda, method);
    LambdaFit fit;
    for (int j = 0; j < kP; ++j) {
        fit.beta[static_cast<std::size_t>(j)] = point.beta(j);
    }
    fit.sigma_e2 = point.sigma_e2;
    fit.log_likelihood = point.log_likelihood;
    return fit;
}

}  // namespace detail

}  // namespace synergy
