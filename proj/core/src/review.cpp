#include "synergy/review.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "synergy/csv.hpp"
#include "synergy/errors.hpp"
#include "synergy/stats.hpp"

namespace synergy {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Rounding slack applied to a published value during the audit: the table
// values are printed with two decimals, so the printed number sits within
// half of the last digit of the true computed value.
constexpr double kPublishedSlack = 0.005;

const std::vector<std::string> kHeader = {
    "study_id", "task",        "measure",           "direction",
    "lower_bound", "upper_bound", "x_h",            "x_c",
    "x_hc",        "published_rho_hat", "published_rho_hat_prime", "anomaly_flag"};

}  // namespace

// ============================================================
// RoundedValue
// ============================================================

double RoundedValue::half_ulp() const {
    return 0.5 * std::pow(10.0, -decimals);
}

std::string RoundedValue::to_string() const {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.*f", decimals, value);
    return buffer;
}

std::optional<double> StudyRecord::effective_published() const {
    // For lower-is-better metrics the headline column of this dataset holds
    // the plain-scale ratio (curated as anomalous by the audit); the
    // transformed column carries the comparable headline value.
    const std::optional<RoundedValue>& chosen = (metric.direction == Direction::LowerBetter)
                                                    ? published_rho_hat_prime
                                                    : published_rho_hat;
    if (!chosen) {
        return std::nullopt;
    }
    return chosen->value;
}

// ============================================================
// Loading / saving
// ============================================================

namespace {

RoundedValue parse_rounded(const std::string& field, std::size_t row, const char* what) {
    if (field.empty()) {
        throw DataError(row, std::string(what) + ": empty field");
    }
    if (field.find_first_of("eE") != std::string::npos) {
        throw DataError(row, std::string(what) + ": scientific notation not allowed: '" + field + "'");
    }
    RoundedValue rv;
    try {
        std::size_t pos = 0;
        rv.value = std::stod(field, &pos);
        if (pos != field.size()) {
            throw DataError(row, std::string(what) + ": trailing characters in '" + field + "'");
        }
    } catch (const std::invalid_argument&) {
        throw DataError(row, std::string(what) + ": not a number: '" + field + "'");
    } catch (const std::out_of_range&) {
        throw DataError(row, std::string(what) + ": out of range: '" + field + "'");
    }
    const std::size_t dot = field.find('.');
    rv.decimals = (dot == std::string::npos) ? 0 : static_cast<int>(field.size() - dot - 1);
    return rv;
}

double parse_plain(const std::string& field, std::size_t row, const char* what) {
    return parse_rounded(field, row, what).value;
}

std::string format_bound(double value) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.17g", value);
    return buffer;
}

}  // namespace

std::vector<StudyRecord> load_dataset(const std::string& path) {
    const csv::Table table = csv::read_file(path);
    if (table.header != kHeader) {
        throw DataError("unexpected dataset header; expected study_id,task,measure,direction,"
                        "lower_bound,upper_bound,x_h,x_c,x_hc,published_rho_hat,"
                        "published_rho_hat_prime,anomaly_flag");
    }

    std::vector<StudyRecord> records;
    records.reserve(table.rows.size());
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const csv::Row& row = table.rows[i];
        const std::size_t row_no = i + 1;
        StudyRecord rec;
        rec.study_id = row[0];
        rec.task = row[1];
        rec.measure = row[2];
        if (rec.study_id.empty()) {
            throw DataError(row_no, "empty study_id");
        }
        if (row[3] == "higher") {
            rec.metric.direction = Direction::HigherBetter;
        } else if (row[3] == "lower") {
            rec.metric.direction = Direction::LowerBetter;
        } else {
            throw DataError(row_no, "direction must be 'higher' or 'lower', got '" + row[3] + "'");
        }
        rec.metric.name = rec.measure;
        rec.metric.lower_bound = parse_plain(row[4], row_no, "lower_bound");
        if (!row[5].empty()) {
            rec.metric.upper_bound = parse_plain(row[5], row_no, "upper_bound");
        }
        rec.x_h = parse_rounded(row[6], row_no, "x_h");
        rec.x_c = parse_rounded(row[7], row_no, "x_c");
        rec.x_hc = parse_rounded(row[8], row_no, "x_hc");
        if (!row[9].empty()) {
            rec.published_rho_hat = parse_rounded(row[9], row_no, "published_rho_hat");
        }
        if (!row[10].empty()) {
            rec.published_rho_hat_prime = parse_rounded(row[10], row_no, "published_rho_hat_prime");
        }
        rec.anomaly_flag = row[11];

        try {
            PerformanceTriple triple{rec.x_h.value, rec.x_c.value, rec.x_hc.value, rec.metric};
            triple.validate();
        } catch (const Error& e) {
            throw DataError(row_no, e.what());
        }
        for (const auto& published : {rec.published_rho_hat, rec.published_rho_hat_prime}) {
            if (published && !(published->value > 0.0)) {
                throw DataError(row_no, "published ratios must be positive");
            }
        }
        records.push_back(std::move(rec));
    }
    return records;
}

void save_dataset(const std::string& path, const std::vector<StudyRecord>& records) {
    csv::Table table;
    table.header = kHeader;
    table.rows.reserve(records.size());
    for (const StudyRecord& rec : records) {
        csv::Row row(12);
        row[0] = rec.study_id;
        row[1] = rec.task;
        row[2] = rec.measure;
        row[3] = (rec.metric.direction == Direction::LowerBetter) ? "lower" : "higher";
        row[4] = format_bound(rec.metric.lower_bound);
        row[5] = rec.metric.upper_bound ? format_bound(*rec.metric.upper_bound) : "";
        row[6] = rec.x_h.to_string();
        row[7] = rec.x_c.to_string();
        row[8] = rec.x_hc.to_string();
        row[9] = rec.published_rho_hat ? rec.published_rho_hat->to_string() : "";
        row[10] = rec.published_rho_hat_prime ? rec.published_rho_hat_prime->to_string() : "";
        row[11] = rec.anomaly_flag;
        table.rows.push_back(std::move(row));
    }
    csv::write_file(path, table);
}

// ============================================================
// Audit
// ============================================================

const char* to_string(AuditVerdict verdict) {
    switch (verdict) {
        case AuditVerdict::Consistent: return "CONSISTENT";
        case AuditVerdict::Anomalous: return "ANOMALOUS";
        case AuditVerdict::NotApplicable: return "N/A";
    }
    return "?";
}

namespace {

AuditVerdict judge(const std::optional<RoundedValue>& published, double lo, double hi) {
    if (!published) {
        return AuditVerdict::NotApplicable;
    }
    const bool inside =
        published->value >= lo - kPublishedSlack && published->value <= hi + kPublishedSlack;
    return inside ? AuditVerdict::Consistent : AuditVerdict::Anomalous;
}

}  // namespace

AuditReport audit_row(const StudyRecord& record) {
    AuditReport report;
    report.study_id = record.study_id;
    report.task = record.task;
    report.measure = record.measure;
    report.anomaly_flag = record.anomaly_flag;

    const MetricSpec& metric = record.metric;
    const bool prime_exists =
        metric.direction == Direction::LowerBetter || metric.upper_bound.has_value();

    try {
        // Point recomputation from the values exactly as stored.
        const PerformanceTriple point{record.x_h.value, record.x_c.value, record.x_hc.value,
                                      metric};
        const RatioResult point_result = compute_rho_hat(point, true);
        report.rho_hat.recomputed = point_result.rho_hat;
        report.rho_hat_prime.recomputed =
            point_result.rho_hat_prime ? *point_result.rho_hat_prime : kNaN;

        // Exact range over the input-rounding box. Both ratios are monotone
        // in each of the three inputs, so the extrema sit on the 8 corners.
        double hat_lo = std::numeric_limits<double>::infinity();
        double hat_hi = -std::numeric_limits<double>::infinity();
        double prime_lo = hat_lo;
        double prime_hi = hat_hi;
        const double upper_limit = metric.upper_bound
                                       ? *metric.upper_bound
                                       : std::numeric_limits<double>::infinity();
        for (int corner = 0; corner < 8; ++corner) {
            auto pick = [&](const RoundedValue& rv, bool take_high) {
                const double x = take_high ? rv.high() : rv.low();
                return std::min(std::max(x, metric.lower_bound), upper_limit);
            };
            PerformanceTriple t{pick(record.x_h, corner & 1), pick(record.x_c, corner & 2),
                                pick(record.x_hc, corner & 4), metric};
            const RatioResult r = compute_rho_hat(t, true);
            hat_lo = std::min(hat_lo, r.rho_hat);
            hat_hi = std::max(hat_hi, r.rho_hat);
            if (r.rho_hat_prime) {
                prime_lo = std::min(prime_lo, *r.rho_hat_prime);
                prime_hi = std::max(prime_hi, *r.rho_hat_prime);
            }
        }
        report.rho_hat.interval_low = hat_lo;
        report.rho_hat.interval_high = hat_hi;
        report.rho_hat_prime.interval_low = prime_exists ? prime_lo : kNaN;
        report.rho_hat_prime.interval_high = prime_exists ? prime_hi : kNaN;
    } catch (const Error& e) {
        throw DataError("cannot audit " + record.study_id + " (" + record.measure +
                        "): " + e.what());
    }

    report.rho_hat.published =
        record.published_rho_hat ? std::optional(record.published_rho_hat->value) : std::nullopt;
    report.rho_hat_prime.published = record.published_rho_hat_prime
                                         ? std::optional(record.published_rho_hat_prime->value)
                                         : std::nullopt;

    report.rho_hat.verdict = judge(record.published_rho_hat, report.rho_hat.interval_low,
                                   report.rho_hat.interval_high);
    if (!prime_exists) {
        // The transformed ratio does not exist without a finite upper bound;
        // a published value in that column cannot be checked.
        report.rho_hat_prime.verdict = AuditVerdict::NotApplicable;
        report.rho_hat_prime.recomputed = kNaN;
    } else {
        report.rho_hat_prime.verdict =
            judge(record.published_rho_hat_prime, report.rho_hat_prime.interval_low,
                  report.rho_hat_prime.interval_high);
    }

    report.anomalous = report.rho_hat.verdict == AuditVerdict::Anomalous ||
                       report.rho_hat_prime.verdict == AuditVerdict::Anomalous;
    return report;
}

std::vector<AuditReport> audit(const std::vector<StudyRecord>& records) {
    std::vector<AuditReport> reports;
    reports.reserve(records.size());
    for (const StudyRecord& rec : records) {
        reports.push_back(audit_row(rec));
    }
    return reports;
}

// ============================================================
// Summaries and subsets
// ============================================================

namespace {

std::optional<double> selected_value(const StudyRecord& rec, RatioColumn which) {
    switch (which) {
        case RatioColumn::Published:
            return rec.effective_published();
        case RatioColumn::RecomputedRhoHat: {
            const PerformanceTriple t{rec.x_h.value, rec.x_c.value, rec.x_hc.value, rec.metric};
            return compute_rho_hat(t, true).rho_hat;
        }
        case RatioColumn::RecomputedRhoHatPrime: {
            const PerformanceTriple t{rec.x_h.value, rec.x_c.value, rec.x_hc.value, rec.metric};
            const RatioResult r = compute_rho_hat(t, true);
            if (!r.rho_hat_prime) {
                return std::nullopt;
            }
            return *r.rho_hat_prime;
        }
    }
    return std::nullopt;
}

}  // namespace

ReviewSummary summarize(const std::vector<StudyRecord>& records, RatioColumn which,
                        double bin_width) {
    if (!(bin_width > 0.0) || !std::isfinite(bin_width)) {
        throw ConfigError("histogram bin width must be positive and finite");
    }
    std::vector<double> values;
    values.reserve(records.size());
    for (const StudyRecord& rec : records) {
        if (const std::optional<double> v = selected_value(rec, which)) {
            if (!std::isfinite(*v)) {
                throw DomainError("cannot summarize: " + rec.study_id + " (" + rec.measure +
                                  ") has a non-finite ratio");
            }
            values.push_back(*v);
        }
    }
    if (values.empty()) {
        throw DomainError("no applicable ratio values to summarize");
    }

    ReviewSummary summary;
    summary.n = values.size();
    summary.mean = stats::compensated_sum(values.data(), values.size()) /
                   static_cast<double>(values.size());

    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t mid = sorted.size() / 2;
    summary.median = (sorted.size() % 2 == 1) ? sorted[mid]
                                              : 0.5 * (sorted[mid - 1] + sorted[mid]);
    summary.min = sorted.front();
    summary.max = sorted.back();
    for (double v : values) {
        if (v > 1.0) {
            ++summary.synergy_count;
        }
    }
    summary.synergy_fraction =
        static_cast<double>(summary.synergy_count) / static_cast<double>(summary.n);

    // Right-open bins [k*w, (k+1)*w) anchored at zero. The index is fixed up
    // against the actual floating-point edges so membership agrees with the
    // reported (low, high) pairs even when v/w rounds across an integer.
    auto bin_index = [bin_width](double v) {
        long long k = static_cast<long long>(std::floor(v / bin_width));
        while (v >= static_cast<double>(k + 1) * bin_width) {
            ++k;
        }
        while (v < static_cast<double>(k) * bin_width) {
            --k;
        }
        return k;
    };
    const long long k_min = bin_index(summary.min);
    const long long k_max = bin_index(summary.max);
    summary.histogram.resize(static_cast<std::size_t>(k_max - k_min + 1));
    for (long long k = k_min; k <= k_max; ++k) {
        HistogramBin& bin = summary.histogram[static_cast<std::size_t>(k - k_min)];
        bin.low = static_cast<double>(k) * bin_width;
        bin.high = static_cast<double>(k + 1) * bin_width;
    }
    for (double v : values) {
        ++summary.histogram[static_cast<std::size_t>(bin_index(v) - k_min)].count;
    }
    return summary;
}

void write_histogram_tsv(const std::string& path, const ReviewSummary& summary) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot open '" + path + "' for writing");
    }
    for (const HistogramBin& bin : summary.histogram) {
        char buffer[64];
        std::snprintf(buffer, sizeof(buffer), "%.10g", 0.5 * (bin.low + bin.high));
        out << buffer << '\t' << bin.count << '\n';
    }
    if (!out.flush()) {
        throw DataError("failed writing '" + path + "'");
    }
}

std::vector<StudyRecord> subset_top_per_study(const std::vector<StudyRecord>& records) {
    std::vector<std::string> order;                   // study ids by first appearance
    std::map<std::string, std::size_t> best;          // study id -> index into records
    for (std::size_t i = 0; i < records.size(); ++i) {
        const std::optional<double> value = records[i].effective_published();
        if (!value) {
            continue;
        }
        auto it = best.find(records[i].study_id);
        if (it == best.end()) {
            order.push_back(records[i].study_id);
            best.emplace(records[i].study_id, i);
        } else if (*value > *records[it->second].effective_published()) {
            it->second = i;
        }
    }
    std::vector<StudyRecord> out;
    out.reserve(order.size());
    for (const std::string& id : order) {
        out.push_back(records[best.at(id)]);
    }
    return out;
}

std::vector<StudyRecord> subset_by_direction(const std::vector<StudyRecord>& records,
                                             Direction direction) {
    std::vector<StudyRecord> out;
    for (const StudyRecord& rec : records) {
        if (rec.metric.direction == direction) {
            out.push_back(rec);
        }
    }
    return out;
}

}  // namespace synergy
