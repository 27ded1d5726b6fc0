#include "synergy/metrics.hpp"

#include <cmath>
#include <limits>

#include "synergy/errors.hpp"

namespace synergy {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_finite(double x, const char* what) {
    if (!std::isfinite(x)) {
        throw DomainError(std::string(what) + " must be finite");
    }
}

}  // namespace

// ============================================================
// Metric and triple validation
// ============================================================

void MetricSpec::validate() const {
    if (!std::isfinite(lower_bound)) {
        throw ConfigError("metric '" + name + "': lower_bound must be finite");
    }
    if (upper_bound) {
        if (!std::isfinite(*upper_bound)) {
            throw ConfigError("metric '" + name + "': upper_bound must be finite");
        }
        if (*upper_bound <= lower_bound) {
            throw ConfigError("metric '" + name + "': upper_bound must exceed lower_bound");
        }
        if (direction == Direction::LowerBetter) {
            throw ConfigError("metric '" + name +
                              "': a lower-is-better metric cannot also have an upper bound; "
                              "the reciprocal and odds transformations do not compose");
        }
    }
}

void PerformanceTriple::validate() const {
    metric.validate();
    const double values[] = {x_h, x_c, x_hc};
    const char* names[] = {"x_h", "x_c", "x_hc"};
    for (int i = 0; i < 3; ++i) {
        require_finite(values[i], names[i]);
        if (values[i] < metric.lower_bound) {
            throw DomainError(std::string(names[i]) + " is below the metric lower bound");
        }
        if (metric.upper_bound && values[i] > *metric.upper_bound) {
            throw DomainError(std::string(names[i]) + " is above the metric upper bound");
        }
    }
}

const char* to_string(BaselineLabel label) {
    switch (label) {
        case BaselineLabel::H: return "H";
        case BaselineLabel::C: return "C";
        case BaselineLabel::HC: return "HC";
        case BaselineLabel::B: return "B";
        case BaselineLabel::MaxHC: return "max(H,C)";
    }
    return "?";
}

// ============================================================
// Transformations
// ============================================================

double transform_lower(double x, const MetricSpec& metric) {
    metric.validate();
    require_finite(x, "x");
    if (x <= metric.lower_bound) {
        throw DomainError("value must lie strictly above the lower bound for the reciprocal transform");
    }
    return 1.0 / (x - metric.lower_bound);
}

double transform_upper(double x, const MetricSpec& metric) {
    metric.validate();
    require_finite(x, "x");
    if (!metric.upper_bound) {
        throw ConfigError("metric '" + metric.name + "' has no upper bound; odds transform undefined");
    }
    const double lb = metric.lower_bound;
    const double ub = *metric.upper_bound;
    if (x < lb || x > ub) {
        throw DomainError("value outside [lower_bound, upper_bound]");
    }
    if (x == ub) {
        throw DomainError("value at the upper bound has infinite odds");
    }
    const double rescaled = (x - lb) / (ub - lb);
    return rescaled / (1.0 - rescaled);
}

double transform_value(double x, const MetricSpec& metric) {
    metric.validate();
    if (metric.direction == Direction::LowerBetter) {
        return transform_lower(x, metric);
    }
    if (metric.upper_bound) {
        return transform_upper(x, metric);
    }
    require_finite(x, "x");
    return x;
}

// ============================================================
// Ratios
// ============================================================

double compute_rho(double numerator, double denominator) {
    if (std::isnan(numerator) || std::isnan(denominator) || numerator < 0.0 || denominator < 0.0) {
        throw DomainError("ratio arguments must be non-negative");
    }
    if (denominator == 0.0) {
        if (numerator > 0.0) {
            return kInf;
        }
        throw UndefinedRatioError("0 / 0 has no defined value");
    }
    return numerator / denominator;
}

RatioResult compute_rho_hat(const PerformanceTriple& triple, bool transformed) {
    triple.validate();
    const MetricSpec& m = triple.metric;

    RatioResult result;

    // Plain ratio on the observed scale, kept for reference regardless of
    // the transformed flag.
    result.rho = compute_rho(triple.x_hc, std::max(triple.x_h, triple.x_c));

    // Values on the scale rho_hat is computed on: reciprocal-transformed for
    // lower-is-better metrics, observed otherwise. The odds transform is
    // deliberately not part of rho_hat; it defines rho_hat_prime.
    double h = triple.x_h;
    double c = triple.x_c;
    double hc = triple.x_hc;
    if (transformed && m.direction == Direction::LowerBetter) {
        h = transform_lower(triple.x_h, m);
        c = transform_lower(triple.x_c, m);
        hc = transform_lower(triple.x_hc, m);
    }

    const double denominator = std::max(h, c);
    result.rho_hat = compute_rho(hc, denominator);

    // Which baseline supplied the denominator, judged on the same scale the
    // ratio was computed on. A tie is reported as H; a zero denominator has
    // no winner, so the generic max(H,C) label is reported.
    if (denominator == 0.0) {
        result.baseline = BaselineLabel::MaxHC;
    } else {
        result.baseline = (h >= c) ? BaselineLabel::H : BaselineLabel::C;
    }

    if (transformed) {
        if (m.direction == Direction::LowerBetter) {
            // The odds transform cannot apply, so the fully transformed ratio
            // coincides with rho_hat.
            result.rho_hat_prime = result.rho_hat;
        } else if (m.upper_bound) {
            const double hp = transform_upper(triple.x_h, m);
            const double cp = transform_upper(triple.x_c, m);
            const double hcp = transform_upper(triple.x_hc, m);
            result.rho_hat_prime = compute_rho(hcp, std::max(hp, cp));
        }
        // HigherBetter without an upper bound: rho_hat_prime stays empty.
    }

    return result;
}

}  // namespace synergy
