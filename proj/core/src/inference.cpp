#include "synergy/inference.hpp"

#include <cmath>
#include <string>

#include "synergy/errors.hpp"
#include "synergy/stats.hpp"

namespace synergy {

namespace {

double mean_of(const std::vector<double>& data) {
    return stats::compensated_sum(data.data(), data.size()) / static_cast<double>(data.size());
}

}  // namespace

const char* to_string(CiMethod method) {
    switch (method) {
        case CiMethod::Fieller: return "fieller";
        case CiMethod::Delta: return "delta";
        case CiMethod::Recommended: return "recommended";
    }
    return "?";
}

const char* to_string(Design design) {
    switch (design) {
        case Design::Paired: return "paired";
        case Design::Independent: return "independent";
    }
    return "?";
}

void SampleSummary::validate() const {
    if (n < 2) {
        throw DomainError("sample summary requires n >= 2");
    }
    if (!std::isfinite(mean)) {
        throw DomainError("sample mean must be finite");
    }
    if (!std::isfinite(sd) || sd < 0.0) {
        throw DomainError("sample sd must be finite and non-negative");
    }
    if (r && (!std::isfinite(*r) || *r < -1.0 || *r > 1.0)) {
        throw DomainError("pair correlation must lie in [-1, 1]");
    }
}

SampleSummary summarize_sample(const std::vector<double>& data) {
    if (data.size() < 2) {
        throw DomainError("need at least 2 observations to summarize a sample");
    }
    const double mean = mean_of(data);
    std::vector<double> sq(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double d = data[i] - mean;
        sq[i] = d * d;
    }
    const double ss = stats::compensated_sum(sq.data(), sq.size());
    SampleSummary summary;
    summary.n = static_cast<std::int64_t>(data.size());
    summary.mean = mean;
    summary.sd = std::sqrt(ss / static_cast<double>(data.size() - 1));
    return summary;
}

double pearson_r(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) {
        throw DomainError("correlation requires equal-length samples");
    }
    if (x.size() < 2) {
        throw DomainError("need at least 2 pairs for a correlation");
    }
    const double mx = mean_of(x);
    const double my = mean_of(y);
    std::vector<double> xy(x.size()), xx(x.size()), yy(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        xy[i] = dx * dy;
        xx[i] = dx * dx;
        yy[i] = dy * dy;
    }
    const double sxy = stats::compensated_sum(xy.data(), xy.size());
    const double sxx = stats::compensated_sum(xx.data(), xx.size());
    const double syy = stats::compensated_sum(yy.data(), yy.size());
    if (sxx <= 0.0 || syy <= 0.0) {
        throw DomainError("correlation undefined for a constant sample");
    }
    return sxy / std::sqrt(sxx * syy);
}

RatioCI ratio_ci(const SampleSummary& numerator, const SampleSummary& denominator,
                 CiMethod method, Design design, double level,
                 CriticalValue critical) {
    numerator.validate();
    denominator.validate();
    if (!(level > 0.0 && level < 1.0)) {
        throw ConfigError("confidence level must lie in (0, 1)");
    }
    if (numerator.mean <= 0.0 || denominator.mean <= 0.0) {
        throw DomainError("ratio CI methods require positive sample means");
    }

    double r = 0.0;
    if (design == Design::Paired) {
        if (numerator.n != denominator.n) {
            throw DomainError("paired design requires equal sample sizes");
        }
        if (numerator.r && denominator.r) {
            if (*numerator.r != *denominator.r) {
                throw ConfigError("conflicting pair correlations on the two summaries");
            }
            r = *numerator.r;
        } else if (numerator.r) {
            r = *numerator.r;
        } else if (denominator.r) {
            r = *denominator.r;
        } else {
            throw ConfigError("paired design requires the pair correlation r");
        }
    } else if (numerator.r || denominator.r) {
        throw ConfigError("pair correlation given, but the design is independent");
    }

    const double xbar = numerator.mean;
    const double ybar = denominator.mean;
    const double estimate = xbar / ybar;

    RatioCI ci;
    ci.estimate = estimate;
    ci.method = method;
    ci.design = design;
    ci.level = level;

    // Zero-variance degeneracy: the means are known exactly, so every method
    // collapses to the point estimate.
    if (numerator.sd == 0.0 && denominator.sd == 0.0) {
        ci.lower = ci.upper = estimate;
        return ci;
    }

    const double z = (critical == CriticalValue::Normal)
                         ? stats::normal_critical_value(level)
                         : stats::student_t_critical_value(
                               level, static_cast<double>(numerator.n + denominator.n - 2));

    const double v_x = numerator.sd * numerator.sd / static_cast<double>(numerator.n);
    const double v_y = denominator.sd * denominator.sd / static_cast<double>(denominator.n);
    const double c = (design == Design::Paired)
                         ? r * numerator.sd * denominator.sd / static_cast<double>(numerator.n)
                         : 0.0;

    switch (method) {
        case CiMethod::Delta:
        case CiMethod::Recommended: {
            // Relative variance of the ratio. Mathematically non-negative for
            // |r| <= 1; exact cancellation (r = 1 with equal coefficients of
            // variation) can land an ulp below zero, which counts as zero.
            const double t1 = v_x / (xbar * xbar);
            const double t2 = v_y / (ybar * ybar);
            const double t3 = 2.0 * c / (xbar * ybar);
            double variance = t1 + t2 - t3;
            const double scale = t1 + t2 + std::fabs(t3);
            if (variance < 0.0) {
                if (variance >= -1e-12 * scale) {
                    variance = 0.0;
                } else {
                    throw DomainError("negative variance under the square root");
                }
            }
            const double half_width = z * std::sqrt(variance);
            if (method == CiMethod::Delta) {
                ci.lower = estimate - estimate * half_width;
                ci.upper = estimate + estimate * half_width;
            } else {
                ci.lower = std::exp(std::log(estimate) - half_width);
                ci.upper = std::exp(std::log(estimate) + half_width);
            }
            return ci;
        }
        case CiMethod::Fieller: {
            // Roots of a*rho^2 - 2*b*rho + c0 <= 0 with
            //   a  = ybar^2 - z^2 v_y   (must be > 0 for a bounded interval)
            //   b  = xbar*ybar - z^2 c
            //   c0 = xbar^2 - z^2 v_x
            const double a = ybar * ybar - z * z * v_y;
            if (a <= 0.0) {
                throw UnboundedIntervalError(
                    "denominator mean not significantly nonzero; Fieller set is unbounded");
            }
            const double b = xbar * ybar - z * z * c;
            const double c0 = xbar * xbar - z * z * v_x;
            const double disc = b * b - a * c0;
            if (disc < 0.0) {
                throw DomainError("negative discriminant in the Fieller quadratic");
            }
            const double s = std::sqrt(disc);
            ci.lower = (b - s) / a;
            ci.upper = (b + s) / a;
            return ci;
        }
    }
    throw ConfigError("unknown CI method");
}

ProportionTestResult proportion_test(std::int64_t successes, std::int64_t n, double p0) {
    if (n < 1) {
        throw DomainError("proportion test requires n >= 1");
    }
    if (successes < 0 || successes > n) {
        throw DomainError("successes must lie in [0, n]");
    }
    if (!(p0 > 0.0 && p0 < 1.0)) {
        throw ConfigError("null proportion p0 must lie in (0, 1)");
    }
    ProportionTestResult result;
    result.p_hat = static_cast<double>(successes) / static_cast<double>(n);
    result.z = (result.p_hat - p0) / std::sqrt(p0 * (1.0 - p0) / static_cast<double>(n));
    result.p_value = stats::normal_upper_tail(result.z);
    return result;
}

AccuracyCheckResult accuracy_check(const std::vector<bool>& success_flags, double threshold) {
    if (success_flags.empty()) {
        throw DomainError("accuracy check requires at least one flag");
    }
    if (!(threshold > 0.0 && threshold < 1.0)) {
        throw ConfigError("accuracy threshold must lie in (0, 1)");
    }
    std::size_t hits = 0;
    for (bool flag : success_flags) {
        hits += flag ? 1 : 0;
    }
    AccuracyCheckResult result;
    result.proportion = static_cast<double>(hits) / static_cast<double>(success_flags.size());
    result.pass = result.proportion > threshold;
    return result;
}

}  // namespace synergy
