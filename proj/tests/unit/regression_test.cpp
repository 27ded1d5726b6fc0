#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "doctest.h"

#include "../support/oracles.hpp"
#include "synergy/errors.hpp"
#include "synergy/regression.hpp"
#include "synergy/simulator.hpp"

using namespace synergy;

#ifndef SYNERGY_DATA_DIR
#error "SYNERGY_DATA_DIR must point at the bundled data directory"
#endif

namespace {

const std::string kFixture = std::string(SYNERGY_DATA_DIR) + "/fixtures/lmm_fixture.csv";

std::vector<LongRecord> fixture_records() { return load_long_csv(kFixture).records; }

// A crossover dataset with lognormal noise, deterministic via the simulator.
std::vector<LongRecord> noisy_crossover(std::int64_t subjects, std::uint64_t seed) {
    SimConfig cfg;
    cfg.n_subjects = subjects;
    cfg.beta = 2.0;
    cfg.task_difficulty = {1.0, 1.3};
    cfg.condition_effect = 1.5;
    cfg.order_effect = 0.9;
    cfg.ability_log_sd = 0.25;
    cfg.error_log_sd = 0.2;
    cfg.base_seed = seed;
    return generate(cfg);
}

}  // namespace

TEST_SUITE("regression") {

TEST_CASE("noise-free multiplicative data is recovered exactly") {
    SimConfig cfg;
    cfg.n_subjects = 12;
    cfg.beta = 0.5;
    cfg.task_difficulty = {1.0, 2.3};
    cfg.condition_effect = 2.0;
    cfg.order_effect = 0.8;
    cfg.ability_log_sd = 0.0;
    cfg.error_log_sd = 0.0;
    cfg.base_seed = 9;
    const RegressionFit fit = fit_lmm(generate(cfg));
    CHECK(fit.coefficients[1].exp_estimate == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(fit.coefficients[2].exp_estimate == doctest::Approx(1.0 / 2.3).epsilon(1e-6));
    CHECK(fit.coefficients[3].exp_estimate == doctest::Approx(0.8).epsilon(1e-6));

    // Subject ability only (still no observation noise): the condition effect
    // stays exact because each subject's mean is absorbed per subject.
    cfg.ability_log_sd = 0.4;
    const RegressionFit with_ability = fit_lmm(generate(cfg));
    CHECK(with_ability.coefficients[1].exp_estimate == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("fixture fit matches the joint-likelihood oracle") {
    const std::vector<LongRecord> data = fixture_records();
    REQUIRE(data.size() == 16);

    const RegressionFit fit = fit_lmm(data, FitMethod::ML);
    const oracles::JointFit oracle = oracles::lmm_joint_oracle(data);

    CHECK(fit.log_likelihood == doctest::Approx(oracle.log_likelihood).epsilon(1e-6));
    // The profiled fit may never fall below the joint search.
    CHECK(fit.log_likelihood >= oracle.log_likelihood - 1e-6);
    for (int j = 0; j < 4; ++j) {
        CHECK(fit.coefficients[j].estimate ==
              doctest::Approx(oracle.beta[j]).epsilon(1e-4));
    }
    REQUIRE(fit.random_effect.has_value());
    CHECK(fit.random_effect->variance == doctest::Approx(oracle.su2).epsilon(1e-3));
    CHECK(fit.residual_sd * fit.residual_sd == doctest::Approx(oracle.se2).epsilon(1e-3));
}

TEST_CASE("fixture fit matches frozen reference values") {
    // Reference numbers computed once from the fixture and pinned; the
    // joint-likelihood oracle test guards the same fit independently.
    const RegressionFit fit = fit_lmm(fixture_records(), FitMethod::ML);
    REQUIRE(fit.coefficients.size() == 4);
    CHECK(fit.coefficients[0].name == "Intercept");
    CHECK(fit.coefficients[1].name == "Condition");
    CHECK(fit.coefficients[2].name == "Task");
    CHECK(fit.coefficients[3].name == "Order");
    CHECK(fit.n_obs == 16);
    CHECK(fit.n_subjects == 8);
    CHECK(fit.coefficients[0].estimate == doctest::Approx(0.7951).epsilon(1e-3));
    CHECK(fit.coefficients[1].estimate == doctest::Approx(0.276708).epsilon(1e-5));
    CHECK(fit.coefficients[1].exp_estimate == doctest::Approx(1.318781).epsilon(1e-5));
    CHECK(fit.coefficients[2].estimate == doctest::Approx(-0.3446).epsilon(1e-3));
    CHECK(fit.coefficients[3].estimate == doctest::Approx(0.0059).epsilon(2e-2));
    CHECK(fit.lambda == doctest::Approx(0.227888).epsilon(1e-4));
    CHECK(fit.residual_sd == doctest::Approx(0.196334).epsilon(1e-5));
    REQUIRE(fit.random_effect.has_value());
    CHECK(fit.random_effect->sd == doctest::Approx(0.093725).epsilon(1e-4));
    CHECK(fit.random_effect->variance == doctest::Approx(0.008784).epsilon(1e-3));
    CHECK(fit.random_effect->se_of_variance == doctest::Approx(0.017009).epsilon(1e-3));
    CHECK(fit.log_likelihood == doctest::Approx(1.841855).epsilon(1e-5));

    // Balanced crossover: each subject sees both conditions once, so the
    // condition contrast is identical under least squares.
    const RegressionFit ols = fit_ols(fixture_records());
    CHECK(ols.coefficients[1].estimate == doctest::Approx(0.2767076575424612).epsilon(1e-9));
    CHECK(fit.coefficients[1].estimate ==
          doctest::Approx(ols.coefficients[1].estimate).epsilon(1e-6));
}

TEST_CASE("ols matches the normal-equations oracle") {
    const std::vector<LongRecord> data = fixture_records();
    const RegressionFit fit = fit_ols(data);
    const std::array<double, 4> oracle = oracles::ols_normal_equations(data);
    for (int j = 0; j < 4; ++j) {
        CHECK(fit.coefficients[j].estimate == doctest::Approx(oracle[j]).epsilon(1e-10));
    }
    CHECK_FALSE(fit.random_effect.has_value());
    CHECK(fit.method == FitMethod::OLS);
}

TEST_CASE("the zero variance-ratio limit of the mixed model is ols") {
    const std::vector<LongRecord> data = fixture_records();
    const detail::LambdaFit at_zero = detail::fit_at_lambda(data, 0.0);
    const RegressionFit ols = fit_ols(data);
    for (int j = 0; j < 4; ++j) {
        CHECK(at_zero.beta[j] == doctest::Approx(ols.coefficients[j].estimate).epsilon(1e-10));
    }
}

TEST_CASE("one observation per subject collapses to ols with variance zero") {
    // Build a one-observation-per-subject slice whose design still has full
    // rank (alternate which of the two records each subject contributes).
    const std::vector<LongRecord> all = noisy_crossover(24, 31);
    std::vector<LongRecord> solo;
    for (std::size_t i = 0; i < all.size(); i += 2) {
        solo.push_back(all[i + ((i / 2) % 2)]);
    }
    const RegressionFit fit = fit_lmm(solo, FitMethod::ML);
    CHECK(fit.lambda == 0.0);
    REQUIRE(fit.random_effect.has_value());
    CHECK(fit.random_effect->variance == 0.0);
    CHECK(std::isnan(fit.random_effect->se_of_variance));  // boundary: no curvature below 0
    const RegressionFit ols = fit_ols(solo);
    for (int j = 0; j < 4; ++j) {
        CHECK(fit.coefficients[j].estimate ==
              doctest::Approx(ols.coefficients[j].estimate).epsilon(1e-10));
    }
}

TEST_CASE("scale equivariance: rescaling outcomes shifts only the intercept") {
    const std::vector<LongRecord> data = noisy_crossover(16, 77);
    std::vector<LongRecord> scaled = data;
    const double c = 3.7;
    for (LongRecord& rec : scaled) {
        rec.outcome *= c;
    }
    for (FitMethod method : {FitMethod::ML, FitMethod::REML}) {
        const RegressionFit base = fit_lmm(data, method);
        const RegressionFit shifted = fit_lmm(scaled, method);
        CHECK(shifted.coefficients[0].estimate ==
              doctest::Approx(base.coefficients[0].estimate + std::log(c)).epsilon(1e-9));
        // The variance-ratio optimizer re-converges on the rescaled data, so
        // quantities that depend on the fitted ratio (p, sds) agree to the
        // optimizer's resolution rather than to machine precision.
        for (int j = 1; j < 4; ++j) {
            CHECK(shifted.coefficients[j].estimate ==
                  doctest::Approx(base.coefficients[j].estimate).epsilon(1e-9));
            CHECK(shifted.coefficients[j].p ==
                  doctest::Approx(base.coefficients[j].p).epsilon(1e-6));
        }
        CHECK(shifted.residual_sd == doctest::Approx(base.residual_sd).epsilon(1e-6));
        REQUIRE(shifted.random_effect.has_value());
        CHECK(shifted.random_effect->sd ==
              doctest::Approx(base.random_effect->sd).epsilon(1e-6));
    }
}

TEST_CASE("relabeling the condition negates its coefficient") {
    const std::vector<LongRecord> data = noisy_crossover(16, 78);
    std::vector<LongRecord> flipped = data;
    for (LongRecord& rec : flipped) {
        rec.condition = 1 - rec.condition;
    }
    const RegressionFit base = fit_lmm(data);
    const RegressionFit mirror = fit_lmm(flipped);
    CHECK(mirror.coefficients[1].estimate ==
          doctest::Approx(-base.coefficients[1].estimate).epsilon(1e-9));
    CHECK(mirror.coefficients[1].exp_estimate ==
          doctest::Approx(1.0 / base.coefficients[1].exp_estimate).epsilon(1e-9));
    CHECK(mirror.coefficients[1].se == doctest::Approx(base.coefficients[1].se).epsilon(1e-6));
}

TEST_CASE("reported exponentials equal exp of the estimates") {
    for (const RegressionFit& fit :
         {fit_lmm(fixture_records()), fit_ols(fixture_records())}) {
        for (const Coefficient& c : fit.coefficients) {
            CHECK(c.exp_estimate == std::exp(c.estimate));  // same code path, exact
            CHECK(c.ci_low <= c.estimate);
            CHECK(c.estimate <= c.ci_high);
        }
    }
}

TEST_CASE("reml differs from ml but estimates the same effects") {
    const std::vector<LongRecord> data = noisy_crossover(16, 79);
    const RegressionFit ml = fit_lmm(data, FitMethod::ML);
    const RegressionFit reml = fit_lmm(data, FitMethod::REML);
    CHECK(ml.method == FitMethod::ML);
    CHECK(reml.method == FitMethod::REML);
    // The balanced crossover design pins the non-intercept coefficients.
    for (int j = 1; j < 4; ++j) {
        CHECK(reml.coefficients[j].estimate ==
              doctest::Approx(ml.coefficients[j].estimate).epsilon(1e-6));
    }
    // REML corrects the downward bias of the ML variance estimates.
    CHECK(reml.residual_sd * reml.residual_sd + reml.random_effect->variance >=
          ml.residual_sd * ml.residual_sd + ml.random_effect->variance - 1e-12);
}

TEST_CASE("error taxonomy") {
    std::vector<LongRecord> data = fixture_records();

    std::vector<LongRecord> single(data.begin(), data.begin() + 2);  // one subject
    CHECK_THROWS_AS(fit_lmm(single), DomainError);
    // Four observations leave no residual degrees of freedom.
    CHECK_THROWS_AS(fit_lmm(std::vector<LongRecord>(data.begin(), data.begin() + 4)),
                    DomainError);
    CHECK_NOTHROW(fit_ols(std::vector<LongRecord>(data.begin(), data.begin() + 6)));

    // Least squares has no per-subject term, so one subject is fine for it
    // as long as the indicators vary.
    std::vector<LongRecord> one_subject;
    for (int i = 0; i < 8; ++i) {
        LongRecord rec;
        rec.subject = "solo";
        rec.condition = i & 1;
        rec.task = (i >> 1) & 1;
        rec.order = (i >> 2) & 1;
        rec.outcome = 1.0 + 0.1 * i;
        one_subject.push_back(rec);
    }
    CHECK_NOTHROW(fit_ols(one_subject));
    CHECK_THROWS_AS(fit_lmm(one_subject), DomainError);

    std::vector<LongRecord> negative = data;
    negative[3].outcome = -0.5;
    CHECK_THROWS_AS(fit_lmm(negative), DomainError);
    negative[3].outcome = 0.0;
    CHECK_THROWS_AS(fit_lmm(negative), DomainError);

    std::vector<LongRecord> constant = data;
    for (LongRecord& rec : constant) {
        rec.condition = 1;
    }
    CHECK_THROWS_AS(fit_lmm(constant), RankError);
    CHECK_THROWS_AS(fit_ols(constant), RankError);

    CHECK_THROWS_AS(fit_lmm(data, FitMethod::OLS), ConfigError);
    CHECK_THROWS_AS(detail::fit_at_lambda(data, -0.5), ConfigError);

    std::vector<LongRecord> bad_indicator = data;
    bad_indicator[0].task = 2;
    CHECK_THROWS_AS(fit_lmm(bad_indicator), DomainError);
}

TEST_CASE("score filter keeps qualifying records, non-strictly") {
    // 197 records across (subject, task) cells, 169 of which carry a score
    // of at least 0.90 — including several at exactly 0.90, which must stay.
    std::vector<LongRecord> data;
    std::map<std::pair<std::string, int>, double> scores;
    int qualifying = 0;
    for (int i = 0; i < 197; ++i) {
        LongRecord rec;
        rec.subject = "P" + std::to_string(i);
        rec.condition = i % 2;
        rec.task = (i / 2) % 2;
        rec.order = (i / 4) % 2;
        rec.outcome = 1.0 + 0.01 * i;
        data.push_back(rec);
        double score;
        if (i < 10) {
            score = 0.90;  // boundary: "at least" keeps these
        } else if (i < 169) {
            score = 0.91 + 0.0001 * i;
        } else {
            score = 0.89;
        }
        if (score >= 0.90) {
            ++qualifying;
        }
        scores[{rec.subject, rec.task}] = score;
    }
    REQUIRE(qualifying == 169);

    CHECK(filter_successful(data, scores, 0.90).size() == 169);
    CHECK(filter_successful(data, scores, 0.0).size() == 197);   // identity
    CHECK(filter_successful(data, scores, 1.01).empty());        // above all scores

    scores.erase({"P5", data[5].task});
    CHECK_THROWS_AS(filter_successful(data, scores, 0.5), DataError);
}

TEST_CASE("long csv loading: schema, scores, and row-addressed errors") {
    const std::string path = "/tmp/synergy_regression_test.csv";
    {
        std::ofstream out(path);
        out << "subject,condition,task,order,outcome,score\n";
        out << "A,0,0,0,1.5,0.95\n";
        out << "A,1,1,1,2.5,0.80\n";
        out << "B,1,0,1,0.7,0.99\n";
    }
    const LongDataset ds = load_long_csv(path);
    CHECK(ds.records.size() == 3);
    CHECK(ds.has_scores);
    CHECK(ds.scores.at({"A", 0}) == 0.95);
    CHECK(ds.scores.at({"A", 1}) == 0.80);
    CHECK(ds.records[2].outcome == 0.7);

    {
        std::ofstream out(path);
        out << "subject,condition,task,order,outcome\n";
        out << "A,0,0,0,1.5\n";
        out << "A,2,1,1,2.5\n";  // indicator out of range, data row 2
    }
    try {
        load_long_csv(path);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(e.row() == 2);
    }

    {
        std::ofstream out(path);
        out << "subject,task,order,outcome\n";  // missing condition column
        out << "A,0,0,1.5\n";
    }
    CHECK_THROWS_AS(load_long_csv(path), DataError);

    {
        std::ofstream out(path);
        out << "subject,condition,task,order,outcome,score\n";
        out << "A,0,0,0,1.5,0.95\n";
        out << "A,1,0,1,2.5,0.95\n";  // same (subject, task), same score: fine
        out << "A,0,1,0,1.1,0.90\n";
    }
    CHECK_NOTHROW(load_long_csv(path));

    {
        std::ofstream out(path);
        out << "subject,condition,task,order,outcome,score\n";
        out << "A,0,0,0,1.5,0.95\n";
        out << "A,1,0,1,2.5,0.80\n";  // same (subject, task), different score
    }
    try {
        load_long_csv(path);
        FAIL("expected DataError for conflicting scores");
    } catch (const DataError& e) {
        CHECK(e.row() == 2);
    }

    {
        std::ofstream out(path);
        out << "subject,condition,task,order,outcome\n";
        out << "A,0,0,0,not-a-number\n";
    }
    CHECK_THROWS_AS(load_long_csv(path), DataError);
    std::remove(path.c_str());
}

TEST_CASE("long csv round trip preserves outcomes bit for bit") {
    const std::vector<LongRecord> data = noisy_crossover(10, 4242);
    const std::string path = "/tmp/synergy_roundtrip_test.csv";
    save_long_csv(path, data);
    const LongDataset loaded = load_long_csv(path);
    REQUIRE(loaded.records.size() == data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        CHECK(loaded.records[i].subject == data[i].subject);
        CHECK(loaded.records[i].condition == data[i].condition);
        CHECK(loaded.records[i].task == data[i].task);
        CHECK(loaded.records[i].order == data[i].order);
        CHECK(loaded.records[i].outcome == data[i].outcome);  // exact
    }
    std::remove(path.c_str());
}

}  // TEST_SUITE
