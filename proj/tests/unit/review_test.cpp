#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"

#include "synergy/errors.hpp"
#include "synergy/review.hpp"

using namespace synergy;

#ifndef SYNERGY_DATA_DIR
#error "SYNERGY_DATA_DIR must point at the bundled data directory"
#endif

namespace {

const std::string kDataset = std::string(SYNERGY_DATA_DIR) + "/synergy_review.csv";

std::vector<StudyRecord> bundled() { return load_dataset(kDataset); }

StudyRecord make_record(const std::string& id, double published, int decimals = 2) {
    StudyRecord rec;
    rec.study_id = id;
    rec.task = "task";
    rec.measure = "Accuracy";
    rec.metric.direction = Direction::HigherBetter;
    rec.metric.lower_bound = 0.0;
    rec.metric.upper_bound = 1.0;
    rec.x_h = {0.5, 2};
    rec.x_c = {0.4, 2};
    rec.x_hc = {0.6, 2};
    rec.published_rho_hat = RoundedValue{published, decimals};
    return rec;
}

}  // namespace

TEST_SUITE("review") {

TEST_CASE("bundled dataset loads 79 records with printed precision intact") {
    const std::vector<StudyRecord> records = bundled();
    REQUIRE(records.size() == 79);

    const StudyRecord& first = records.front();
    CHECK(first.study_id == "Gonzalez2021DoEH");
    CHECK(first.measure == "Accuracy");
    CHECK(first.metric.direction == Direction::HigherBetter);
    CHECK(first.x_h == RoundedValue{0.57, 2});
    CHECK(first.x_hc == RoundedValue{0.78, 2});
    REQUIRE(first.published_rho_hat.has_value());
    CHECK(*first.published_rho_hat == RoundedValue{1.36, 2});
    REQUIRE(first.published_rho_hat_prime.has_value());
    CHECK(*first.published_rho_hat_prime == RoundedValue{2.59, 2});
    CHECK(first.anomaly_flag.empty());

    // Integer-printed values carry zero decimals: wider rounding boxes.
    const auto steps = std::find_if(records.begin(), records.end(), [](const StudyRecord& r) {
        return r.study_id == "Baudel2020AddressingCB" && r.measure == "Steps";
    });
    REQUIRE(steps != records.end());
    CHECK(steps->metric.direction == Direction::LowerBetter);
    CHECK_FALSE(steps->metric.upper_bound.has_value());
    CHECK(steps->x_c == RoundedValue{34.0, 0});
    CHECK(steps->x_c.half_ulp() == 0.5);
    CHECK(steps->x_h == RoundedValue{37.82, 2});
    CHECK(steps->anomaly_flag == "rho_hat_untransformed");
}

TEST_CASE("save and reload reproduces every record exactly") {
    const std::vector<StudyRecord> records = bundled();
    const std::string path = "/tmp/synergy_review_roundtrip.csv";
    save_dataset(path, records);
    const std::vector<StudyRecord> reloaded = load_dataset(path);
    REQUIRE(reloaded.size() == records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        const StudyRecord& a = records[i];
        const StudyRecord& b = reloaded[i];
        CHECK(a.study_id == b.study_id);
        CHECK(a.task == b.task);
        CHECK(a.measure == b.measure);
        CHECK(a.metric.direction == b.metric.direction);
        CHECK(a.metric.lower_bound == b.metric.lower_bound);
        CHECK(a.metric.upper_bound == b.metric.upper_bound);
        CHECK(a.x_h == b.x_h);
        CHECK(a.x_c == b.x_c);
        CHECK(a.x_hc == b.x_hc);
        CHECK(a.published_rho_hat == b.published_rho_hat);
        CHECK(a.published_rho_hat_prime == b.published_rho_hat_prime);
        CHECK(a.anomaly_flag == b.anomaly_flag);
    }
    std::remove(path.c_str());
}

TEST_CASE("audit flags exactly the curated anomalies") {
    const std::vector<StudyRecord> records = bundled();
    const std::vector<AuditReport> reports = audit(records);
    REQUIRE(reports.size() == records.size());

    std::size_t n_anomalous = 0;
    for (std::size_t i = 0; i < reports.size(); ++i) {
        const bool curated = !records[i].anomaly_flag.empty();
        CHECK(reports[i].anomalous == curated);  // audit reproduces the curation
        if (reports[i].anomalous) {
            ++n_anomalous;
        }
        CHECK(reports[i].anomalous ==
              (reports[i].rho_hat.verdict == AuditVerdict::Anomalous ||
               reports[i].rho_hat_prime.verdict == AuditVerdict::Anomalous));
    }
    CHECK(n_anomalous == 7);

    // The anomalies: four step-count rows whose plain ratio was published
    // untransformed, and three rows whose transformed ratio does not follow
    // from the stated means.
    std::multiset<std::string> flagged;
    for (std::size_t i = 0; i < reports.size(); ++i) {
        if (reports[i].anomalous) {
            flagged.insert(records[i].study_id + "/" + records[i].measure);
        }
    }
    const std::multiset<std::string> expected = {
        "Baudel2020AddressingCB/Steps",
        "Bastani2021ImprovingHD/Steps",
        "Bastani2021ImprovingHD/Steps",
        "Bastani2021ImprovingHD/Steps",
        "Shin2021AIassistanceFP/Specificity",
        "Kyriacou2021LearningTW/Accuracy",
        "Kyriacou2021LearningTW/Accuracy",
    };
    CHECK(flagged == expected);
}

TEST_CASE("audit intervals account for input rounding") {
    const std::vector<StudyRecord> records = bundled();
    const std::vector<AuditReport> reports = audit(records);

    // Bounded accuracy with a large transformed ratio: the interval is wide
    // because the odds transform amplifies rounding near the upper bound.
    const AuditReport& gonzalez = reports[0];
    CHECK(gonzalez.study_id == "Gonzalez2021DoEH");
    CHECK(gonzalez.rho_hat.verdict == AuditVerdict::Consistent);
    CHECK(gonzalez.rho_hat.recomputed == doctest::Approx(0.78 / 0.57).epsilon(1e-12));
    CHECK(gonzalez.rho_hat_prime.verdict == AuditVerdict::Consistent);
    CHECK(gonzalez.rho_hat_prime.interval_low == doctest::Approx(2.546).epsilon(1e-3));
    CHECK(gonzalez.rho_hat_prime.interval_high == doctest::Approx(2.811).epsilon(1e-3));
    CHECK(gonzalez.rho_hat_prime.interval_low <= 2.59);
    CHECK(2.59 <= gonzalez.rho_hat_prime.interval_high);

    const auto holstein =
        std::find_if(reports.begin(), reports.end(),
                     [](const AuditReport& r) { return r.study_id == "Holstein2021DesigningFH"; });
    REQUIRE(holstein != reports.end());
    CHECK(holstein->rho_hat_prime.recomputed == doctest::Approx(1.4412).epsilon(1e-4));
    CHECK(holstein->rho_hat_prime.verdict == AuditVerdict::Consistent);
    CHECK_FALSE(holstein->anomalous);

    // A step-count row published its plain ratio in place of the reciprocal
    // (lower-is-better) one; the recomputation exposes it.
    const auto steps = std::find_if(reports.begin(), reports.end(), [](const AuditReport& r) {
        return r.study_id == "Baudel2020AddressingCB" && r.measure == "Steps";
    });
    REQUIRE(steps != reports.end());
    CHECK(steps->anomalous);
    CHECK(steps->rho_hat.verdict == AuditVerdict::Anomalous);
    CHECK(steps->rho_hat.recomputed == doctest::Approx(34.0 / 38.37).epsilon(1e-4));
    REQUIRE(steps->rho_hat.published.has_value());
    CHECK(*steps->rho_hat.published == 1.01);
    CHECK(steps->rho_hat_prime.verdict == AuditVerdict::Consistent);

    // Verdicts interval logic on a synthetic row: published exactly at the
    // slack edge stays consistent, just beyond becomes anomalous.
    StudyRecord rec = make_record("EdgeCase", 0.0);
    const AuditReport base = audit_row(rec);
    REQUIRE(base.rho_hat.verdict != AuditVerdict::NotApplicable);
    const double hi = base.rho_hat.interval_high;
    rec.published_rho_hat = RoundedValue{hi + 0.004, 3};
    CHECK(audit_row(rec).rho_hat.verdict == AuditVerdict::Consistent);
    rec.published_rho_hat = RoundedValue{hi + 0.006, 3};
    CHECK(audit_row(rec).rho_hat.verdict == AuditVerdict::Anomalous);

    rec.published_rho_hat.reset();
    CHECK(audit_row(rec).rho_hat.verdict == AuditVerdict::NotApplicable);
}

TEST_CASE("unbounded metric has no transformed ratio to audit") {
    StudyRecord rec = make_record("NoUpper", 1.2);
    rec.metric.upper_bound.reset();
    rec.published_rho_hat_prime = RoundedValue{1.2, 2};
    const AuditReport report = audit_row(rec);
    CHECK(report.rho_hat.verdict != AuditVerdict::NotApplicable);
    CHECK(report.rho_hat_prime.verdict == AuditVerdict::NotApplicable);
    CHECK_FALSE(report.anomalous);
    CHECK_FALSE(report.rho_hat.verdict == AuditVerdict::Anomalous);
}

TEST_CASE("headline published value depends on metric direction") {
    const std::vector<StudyRecord> records = bundled();
    for (const StudyRecord& rec : records) {
        const std::optional<double> eff = rec.effective_published();
        if (rec.metric.direction == Direction::LowerBetter) {
            REQUIRE(rec.published_rho_hat_prime.has_value());
            CHECK(*eff == rec.published_rho_hat_prime->value);
        } else if (rec.published_rho_hat.has_value()) {
            CHECK(*eff == rec.published_rho_hat->value);
        } else {
            CHECK_FALSE(eff.has_value());
        }
    }
}

TEST_CASE("published summary of the full dataset") {
    const ReviewSummary s = summarize(bundled(), RatioColumn::Published);
    CHECK(s.n == 79);
    CHECK(s.mean == doctest::Approx(0.9559493670886076).epsilon(1e-12));
    CHECK(s.median == doctest::Approx(0.99).epsilon(1e-12));
    CHECK(s.min == doctest::Approx(0.44).epsilon(1e-12));
    CHECK(s.max == doctest::Approx(1.36).epsilon(1e-12));
    CHECK(s.synergy_count == 30);
    CHECK(s.synergy_fraction == doctest::Approx(30.0 / 79.0).epsilon(1e-12));
}

TEST_CASE("histogram bins are right-open, contiguous, and sum to n") {
    const ReviewSummary s = summarize(bundled(), RatioColumn::Published, 0.05);
    REQUIRE_FALSE(s.histogram.empty());
    std::size_t total = 0;
    for (std::size_t i = 0; i < s.histogram.size(); ++i) {
        const HistogramBin& bin = s.histogram[i];
        CHECK(bin.high == doctest::Approx(bin.low + 0.05).epsilon(1e-9));
        if (i > 0) {
            CHECK(bin.low == doctest::Approx(s.histogram[i - 1].high).epsilon(1e-9));
        }
        total += bin.count;
    }
    CHECK(total == s.n);
    CHECK(s.histogram.front().low <= s.min);
    CHECK(s.min < s.histogram.front().high);
    CHECK(s.histogram.back().low <= s.max);
    CHECK(s.max < s.histogram.back().high);
    CHECK(s.histogram.front().count > 0);
    CHECK(s.histogram.back().count > 0);

    // Bin edges anchor at zero: 0.44 falls in [0.40, 0.45).
    CHECK(s.histogram.front().low == doctest::Approx(0.40).epsilon(1e-9));

    // A value exactly on an edge belongs to the right bin.
    std::vector<StudyRecord> edge = {make_record("A", 1.00), make_record("B", 1.049999)};
    const ReviewSummary es = summarize(edge, RatioColumn::Published, 0.05);
    REQUIRE(es.histogram.size() == 1);
    CHECK(es.histogram[0].low == doctest::Approx(1.00).epsilon(1e-12));
    CHECK(es.histogram[0].count == 2);
}

TEST_CASE("summary edge cases") {
    const std::vector<StudyRecord> one = {make_record("Solo", 1.36)};
    const ReviewSummary s1 = summarize(one, RatioColumn::Published);
    CHECK(s1.n == 1);
    CHECK(s1.mean == 1.36);
    CHECK(s1.median == 1.36);
    CHECK(s1.synergy_count == 1);

    const std::vector<StudyRecord> two = {make_record("A", 0.5), make_record("B", 1.5)};
    const ReviewSummary s2 = summarize(two, RatioColumn::Published);
    CHECK(s2.median == doctest::Approx(1.0).epsilon(1e-12));  // midpoint of the two
    CHECK(s2.synergy_count == 1);
    CHECK(s2.synergy_fraction == 0.5);

    // Strictly-greater synergy: a ratio of exactly 1 is not synergy.
    const std::vector<StudyRecord> flat = {make_record("C", 1.0)};
    CHECK(summarize(flat, RatioColumn::Published).synergy_count == 0);

    CHECK_THROWS_AS(summarize({}, RatioColumn::Published), DomainError);
    StudyRecord no_published = make_record("D", 1.0);
    no_published.published_rho_hat.reset();
    CHECK_THROWS_AS(summarize({no_published}, RatioColumn::Published), DomainError);
    CHECK_THROWS_AS(summarize(bundled(), RatioColumn::Published, 0.0), ConfigError);
    CHECK_THROWS_AS(summarize(bundled(), RatioColumn::Published, -0.05), ConfigError);
}

TEST_CASE("summaries of recomputed columns skip records without a value") {
    const std::vector<StudyRecord> records = bundled();
    const ReviewSummary rho = summarize(records, RatioColumn::RecomputedRhoHat);
    CHECK(rho.n == 79);  // the plain-scale ratio exists for every record
    const ReviewSummary prime = summarize(records, RatioColumn::RecomputedRhoHatPrime);
    std::size_t with_prime = 0;
    for (const StudyRecord& rec : records) {
        // The transformed ratio needs either a lower-is-better direction or
        // an upper bound for the odds transform.
        if (rec.metric.direction == Direction::LowerBetter ||
            rec.metric.upper_bound.has_value()) {
            ++with_prime;
        }
    }
    CHECK(prime.n == with_prime);
    CHECK(prime.n <= rho.n);
    CHECK(rho.min > 0.0);
    CHECK(prime.min > 0.0);
}

TEST_CASE("a non-finite recomputed ratio is rejected, not histogrammed") {
    StudyRecord rec = make_record("ZeroBaselines", 1.0);
    rec.x_h = {0.0, 2};
    rec.x_c = {0.0, 2};
    rec.x_hc = {0.6, 2};  // ratio num > 0, den == 0 -> infinite
    CHECK_THROWS_AS(summarize({rec}, RatioColumn::RecomputedRhoHat), DomainError);
}

TEST_CASE("top-per-study subset keeps each study's best headline row") {
    const std::vector<StudyRecord> records = bundled();
    const std::vector<StudyRecord> top = subset_top_per_study(records);
    CHECK(top.size() == 25);

    std::set<std::string> ids;
    for (const StudyRecord& rec : top) {
        CHECK(ids.insert(rec.study_id).second);  // unique study ids
    }
    // Every record's headline ratio is bounded by its study's selected row.
    std::map<std::string, double> best;
    for (const StudyRecord& rec : top) {
        best[rec.study_id] = *rec.effective_published();
    }
    for (const StudyRecord& rec : records) {
        const std::optional<double> eff = rec.effective_published();
        if (eff.has_value()) {
            REQUIRE(best.count(rec.study_id) == 1);
            CHECK(*eff <= best[rec.study_id] + 1e-12);
        }
    }

    const ReviewSummary s = summarize(top, RatioColumn::Published);
    CHECK(s.n == 25);
    CHECK(s.mean == doctest::Approx(0.9804).epsilon(1e-4));
    CHECK(s.median == doctest::Approx(1.01).epsilon(1e-12));
    CHECK(s.min == doctest::Approx(0.47).epsilon(1e-12));
    CHECK(s.max == doctest::Approx(1.36).epsilon(1e-12));
    CHECK(s.synergy_count == 13);
    CHECK(s.synergy_fraction == doctest::Approx(0.52).epsilon(1e-12));
}

TEST_CASE("direction subsets partition the dataset") {
    const std::vector<StudyRecord> records = bundled();
    const std::vector<StudyRecord> lower = subset_by_direction(records, Direction::LowerBetter);
    const std::vector<StudyRecord> higher = subset_by_direction(records, Direction::HigherBetter);
    CHECK(lower.size() == 4);
    CHECK(higher.size() == 75);
    CHECK(lower.size() + higher.size() == records.size());
    for (const StudyRecord& rec : lower) {
        CHECK(rec.metric.direction == Direction::LowerBetter);
        CHECK(rec.measure == "Steps");
    }

    const ReviewSummary s = summarize(lower, RatioColumn::Published);
    CHECK(s.n == 4);
    CHECK(s.mean == doctest::Approx(0.8775).epsilon(1e-12));
    CHECK(s.median == doctest::Approx(0.88).epsilon(1e-12));

    CHECK(subset_by_direction({}, Direction::LowerBetter).empty());
}

TEST_CASE("histogram tsv lists midpoints and counts") {
    const std::vector<StudyRecord> two = {make_record("A", 0.42), make_record("B", 0.43)};
    ReviewSummary s = summarize(two, RatioColumn::Published, 0.05);
    const std::string path = "/tmp/synergy_hist_test.tsv";
    write_histogram_tsv(path, s);
    std::ifstream in(path);
    REQUIRE(in.good());
    std::stringstream buffer;
    buffer << in.rdbuf();
    CHECK(buffer.str() == "0.425\t2\n");
    std::remove(path.c_str());
}

TEST_CASE("loader rejects malformed input with the offending row") {
    const std::string path = "/tmp/synergy_review_bad.csv";
    const std::string header =
        "study_id,task,measure,direction,lower_bound,upper_bound,"
        "x_h,x_c,x_hc,published_rho_hat,published_rho_hat_prime,anomaly_flag";

    {
        std::ofstream out(path);
        out << "study,task\nfoo,bar\n";
    }
    CHECK_THROWS_AS(load_dataset(path), DataError);

    {
        std::ofstream out(path);
        out << header << "\n";
        out << "S,task,Accuracy,higher,0,1,0.57,0.50,0.78,1.36,2.59,\n";
        out << "S,task,Accuracy,higher,0,1,0.57,0.50,1.05,1.84,,\n";  // above the bound
    }
    try {
        load_dataset(path);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(e.row() == 2);
    }

    {
        std::ofstream out(path);
        out << header << "\n";
        out << "S,task,Accuracy,sideways,0,1,0.57,0.50,0.78,1.36,,\n";
    }
    CHECK_THROWS_AS(load_dataset(path), DataError);

    {
        std::ofstream out(path);
        out << header << "\n";
        out << "S,task,Accuracy,higher,0,1,5.7e-1,0.50,0.78,1.36,,\n";  // no exponents
    }
    CHECK_THROWS_AS(load_dataset(path), DataError);

    {
        std::ofstream out(path);
        out << header << "\n";
    }
    CHECK(load_dataset(path).empty());  // header only: no records, no error
    std::remove(path.c_str());

    CHECK_THROWS_AS(load_dataset("/nonexistent/review.csv"), DataError);
}

TEST_CASE("rounded values render at their recorded precision") {
    CHECK(RoundedValue{1.36, 2}.to_string() == "1.36");
    CHECK(RoundedValue{34.0, 0}.to_string() == "34");
    CHECK(RoundedValue{0.5, 1}.to_string() == "0.5");
    CHECK(RoundedValue{1.36, 2}.half_ulp() == doctest::Approx(0.005).epsilon(1e-15));
    CHECK(RoundedValue{1.36, 2}.low() == doctest::Approx(1.355).epsilon(1e-12));
    CHECK(RoundedValue{1.36, 2}.high() == doctest::Approx(1.365).epsilon(1e-12));
}

}  // TEST_SUITE
