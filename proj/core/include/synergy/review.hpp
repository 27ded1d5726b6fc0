#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "synergy/metrics.hpp"

namespace synergy {

// A numeric value as printed in its source: the parsed number plus how many
// decimal places the text carried. Printed numbers are rounded-to-nearest,
// so the true value lies within +/- half of the last printed digit.
struct RoundedValue {
    double value = 0.0;
    int decimals = 0;

    double half_ulp() const;  // 0.5 * 10^-decimals
    double low() const { return value - half_ulp(); }
    double high() const { return value + half_ulp(); }

    // Renders with exactly `decimals` places, reproducing the source text.
    std::string to_string() const;

    bool operator==(const RoundedValue&) const = default;
};

// One experimental measurement from the review dataset: three mean
// performances on one metric, the published ratio values, and an optional
// curation flag naming a known, documented inconsistency.
struct StudyRecord {
    std::string study_id;
    std::string task;
    std::string measure;
    MetricSpec metric;
    RoundedValue x_h;
    RoundedValue x_c;
    RoundedValue x_hc;
    std::optional<RoundedValue> published_rho_hat;
    std::optional<RoundedValue> published_rho_hat_prime;
    std::string anomaly_flag;  // empty = not curated as anomalous

    // The headline published ratio of this record: the transformed column
    // for lower-is-better metrics (their untransformed column is the one the
    // audit flags), the plain ratio column otherwise.
    std::optional<double> effective_published() const;
};

// ============================================================
// Loading and saving
// ============================================================

// Reads the review dataset CSV (header study_id,task,measure,direction,
// lower_bound,upper_bound,x_h,x_c,x_hc,published_rho_hat,
// published_rho_hat_prime,anomaly_flag; empty field = absent optional).
// Direction tokens are "higher" / "lower". Printed precision is preserved
// per field. Malformed or bound-violating rows raise DataError with the
// 1-based data row number.
std::vector<StudyRecord> load_dataset(const std::string& path);

// Writes records back in the same schema, reproducing each value with its
// recorded printed precision (load -> save -> load is the identity).
void save_dataset(const std::string& path, const std::vector<StudyRecord>& records);

// ============================================================
// Rounding-aware audit
// ============================================================

enum class AuditVerdict { Consistent, Anomalous, NotApplicable };

const char* to_string(AuditVerdict verdict);

struct ColumnAudit {
    AuditVerdict verdict = AuditVerdict::NotApplicable;
    std::optional<double> published;
    double recomputed = 0.0;      // point recomputation from the values as stored
    double interval_low = 0.0;    // range over the input-rounding box
    double interval_high = 0.0;
};

struct AuditReport {
    std::string study_id;
    std::string task;
    std::string measure;
    std::string anomaly_flag;
    ColumnAudit rho_hat;
    ColumnAudit rho_hat_prime;
    bool anomalous = false;  // true if any audited column is Anomalous
};

// Recomputes the ratio columns over the box of true values consistent with
// the printed inputs (each of x_h, x_c, x_hc within +/- half ulp, clamped to
// the metric bounds; the ratios are monotone per argument, so the 8 corners
// give the exact range). A published value is Consistent when it lies in
// [interval_low - 0.005, interval_high + 0.005], the extra 0.005 being the
// rounding of the published two-decimal value itself; Anomalous otherwise.
// A missing published value, or a ratio that does not exist for the metric
// (transformed ratio without an upper bound), audits as NotApplicable.
AuditReport audit_row(const StudyRecord& record);

std::vector<AuditReport> audit(const std::vector<StudyRecord>& records);

// ============================================================
// Summaries and subsets
// ============================================================

// Which ratio of each record a summary describes: the published headline
// value, the recomputed plain-scale ratio, or the recomputed fully
// transformed ratio.
enum class RatioColumn { Published, RecomputedRhoHat, RecomputedRhoHatPrime };

struct HistogramBin {
    double low = 0.0;
    double high = 0.0;
    std::size_t count = 0;
};

struct ReviewSummary {
    std::size_t n = 0;
    double mean = 0.0;
    double median = 0.0;
    double min = 0.0;
    double max = 0.0;
    std::size_t synergy_count = 0;    // ratios strictly greater than 1
    double synergy_fraction = 0.0;
    std::vector<HistogramBin> histogram;
};

// Summary statistics of the selected ratio column. Records without an
// applicable value are skipped; an empty selection raises DomainError.
// Median of an even-sized sample is the midpoint of the two central order
// statistics. Histogram bins are right-open [k*w, (k+1)*w) anchored at 0
// with width `bin_width`; contiguous from the smallest to the largest
// occupied bin, so counts sum to n.
ReviewSummary summarize(const std::vector<StudyRecord>& records, RatioColumn which,
                        double bin_width = 0.05);

// Writes the histogram as two-column TSV (bin midpoint, count).
void write_histogram_tsv(const std::string& path, const ReviewSummary& summary);

// One record per study: the one with the highest headline published ratio,
// ties and ordering resolved by first appearance.
std::vector<StudyRecord> subset_top_per_study(const std::vector<StudyRecord>& records);

std::vector<StudyRecord> subset_by_direction(const std::vector<StudyRecord>& records,
                                             Direction direction);

}  // namespace synergy
