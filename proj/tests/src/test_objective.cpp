#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "doctest.h"

#include "helpers.hpp"
#include "jointcal/objective.hpp"
#include "jointcal/variance.hpp"

using namespace jointcal;
using jointcal::testing::base_env;
using jointcal::testing::base_params;
using jointcal::testing::bates_surface;

namespace {

const std::vector<double> kMaturities{1.0 / 12.0, 0.25};
const std::vector<double> kStrikes{85.0, 90.0, 95.0, 100.0, 105.0, 110.0, 115.0};

VolSurface truth_surface() {
    return bates_surface(base_params(), base_env(), kMaturities, kStrikes);
}

VarianceTermStructure truth_ts(TsKind kind) {
    VarianceTermStructure ts;
    ts.kind = kind;
    for (double tau : kMaturities) {
        const double level = kind == TsKind::vix_squared
                                 ? bates_vix_squared(base_params(), tau)
                                 : bates_variance_swap(base_params(), tau);
        ts.points.push_back({tau, level});
    }
    return ts;
}

CalibrationConfig objective_config(double alpha, TsKind ts_kind,
                                   PenaltyMode mode) {
    CalibrationConfig config;
    config.alpha = alpha;
    config.ts_kind = ts_kind;
    config.penalty_mode = mode;
    return config;
}

double sum_values(const std::vector<MaturityValue>& parts) {
    double s = 0.0;
    for (const MaturityValue& p : parts) s += p.value;
    return s;
}

}  // namespace

TEST_SUITE("objective") {

TEST_CASE("vanishes at the data-generating parameters") {
    const VolSurface surface = truth_surface();
    const VarianceTermStructure vix_ts = truth_ts(TsKind::vix_squared);
    const VarianceTermStructure vs_ts = truth_ts(TsKind::variance_swap);
    // The approximation mode's fixed point: observed levels that are VIX^2
    // values wearing the variance-swap label match the model VIX^2 curve.
    VarianceTermStructure approx_ts = truth_ts(TsKind::vix_squared);
    approx_ts.kind = TsKind::variance_swap;

    for (double alpha : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        CAPTURE(alpha);
        const auto exact_vix = joint_objective(
            base_params(), surface, vix_ts,
            objective_config(alpha, TsKind::vix_squared, PenaltyMode::exact));
        const auto exact_vs = joint_objective(
            base_params(), surface, vs_ts,
            objective_config(alpha, TsKind::variance_swap, PenaltyMode::exact));
        const auto approx = joint_objective(
            base_params(), surface, approx_ts,
            objective_config(alpha, TsKind::variance_swap,
                             PenaltyMode::approx_vs));
        CHECK(exact_vix.total < 1e-10);
        CHECK(exact_vs.total < 1e-10);
        CHECK(approx.total < 1e-10);
        CHECK(exact_vix.iv_inversion_failures == 0);
    }
}

TEST_CASE("legs recombine under alpha and per-maturity parts sum") {
    const VolSurface surface = truth_surface();
    const VarianceTermStructure ts = truth_ts(TsKind::vix_squared);
    BatesParams p = base_params();
    p.v0 = 0.09;
    p.rho = -0.3;

    const auto bd = joint_objective(
        p, surface, ts,
        objective_config(0.37, TsKind::vix_squared, PenaltyMode::exact));
    CHECK(bd.iv_sse > 0.0);
    CHECK(bd.ts_penalty > 0.0);
    CHECK(bd.total ==
          doctest::Approx(0.37 * bd.iv_sse + 0.63 * bd.ts_penalty)
              .epsilon(1e-14));
    CHECK(sum_values(bd.iv_sse_by_maturity) ==
          doctest::Approx(bd.iv_sse).epsilon(1e-13));
    CHECK(sum_values(bd.ts_penalty_by_maturity) ==
          doctest::Approx(bd.ts_penalty).epsilon(1e-13));
    REQUIRE(bd.iv_sse_by_maturity.size() == kMaturities.size());
    REQUIRE(bd.ts_penalty_by_maturity.size() == kMaturities.size());

    // The legs themselves do not depend on alpha.
    const auto bd9 = joint_objective(
        p, surface, ts,
        objective_config(0.9, TsKind::vix_squared, PenaltyMode::exact));
    CHECK(bd9.iv_sse == doctest::Approx(bd.iv_sse).epsilon(1e-12));
    CHECK(bd9.ts_penalty == doctest::Approx(bd.ts_penalty).epsilon(1e-14));
}

TEST_CASE("correlation moves the smile leg but not the term-structure leg") {
    const VolSurface surface = truth_surface();
    const VarianceTermStructure ts = truth_ts(TsKind::vix_squared);
    BatesParams tilted = base_params();
    tilted.rho = 0.2;

    const auto cfg = objective_config(0.5, TsKind::vix_squared,
                                      PenaltyMode::exact);
    const auto at_truth = joint_objective(base_params(), surface, ts, cfg);
    const auto at_tilt = joint_objective(tilted, surface, ts, cfg);
    // The closed-form variance curves never read rho, so the penalty leg is
    // bitwise identical.
    CHECK(at_tilt.ts_penalty == at_truth.ts_penalty);
    CHECK(at_tilt.iv_sse > 1e-4);
    CHECK(at_truth.iv_sse < 1e-10);
}

TEST_CASE("weight materialization") {
    // Hand-built two-maturity surface: 3 quotes then 5 quotes.
    std::vector<SurfaceQuote> quotes;
    auto add = [&](double tau, double strike) {
        OptionQuote q;
        q.strike = strike;
        q.maturity = tau;
        q.kind = strike < 100.0 ? OptionKind::put : OptionKind::call;
        q.mid = 1.0;
        quotes.push_back({q, 0.2});
    };
    for (double k : {90.0, 100.0, 110.0}) add(0.25, k);
    for (double k : {80.0, 90.0, 100.0, 110.0, 120.0}) add(0.5, k);
    const VolSurface surface = VolSurface::build(base_env(), quotes);
    REQUIRE(surface.maturities.size() == 2);

    SUBCASE("uniform contract weights scale") {
        const auto w =
            make_contract_weights(surface, {WeightRule::Kind::uniform, 2.5});
        REQUIRE(w.size() == 2);
        for (const auto& row : w)
            for (double v : row) CHECK(v == 2.5);
    }
    SUBCASE("n_quotes contract weights carry the row size") {
        const auto w =
            make_contract_weights(surface, {WeightRule::Kind::n_quotes, 1.0});
        REQUIRE(w[0].size() == 3);
        REQUIRE(w[1].size() == 5);
        for (double v : w[0]) CHECK(v == 3.0);
        for (double v : w[1]) CHECK(v == 5.0);
    }
    SUBCASE("n_quotes term-structure weights fall back to one") {
        VarianceTermStructure ts;
        ts.kind = TsKind::vix_squared;
        ts.points = {{0.25, 0.04}, {0.5, 0.04}, {0.75, 0.04}};
        const auto w =
            make_ts_weights(ts, surface, {WeightRule::Kind::n_quotes, 1.0});
        REQUIRE(w.size() == 3);
        CHECK(w[0] == 3.0);
        CHECK(w[1] == 5.0);
        CHECK(w[2] == 1.0);  // no quotes at 0.75
    }
    SUBCASE("negative and misaligned weights are rejected") {
        auto w = make_contract_weights(surface, {});
        w[0][1] = -1.0;
        CHECK_THROWS_AS(sse_iv(base_params(), surface, w),
                        std::invalid_argument);
        w = make_contract_weights(surface, {});
        w.pop_back();
        CHECK_THROWS_AS(sse_iv(base_params(), surface, w),
                        std::invalid_argument);
        CHECK_THROWS_AS(
            ts_penalty(base_params(), truth_ts(TsKind::vix_squared), {1.0}),
            std::invalid_argument);
    }
}

TEST_CASE("observed kind selects the model curve") {
    VarianceTermStructure observed = truth_ts(TsKind::vix_squared);
    const std::vector<double> w(observed.points.size(), 1.0);

    CHECK(ts_penalty(base_params(), observed, w) < 1e-24);

    // Same numeric levels labeled as variance-swap rates: the penalty now
    // prices the wedge between the model VS curve and the observed VIX^2.
    observed.kind = TsKind::variance_swap;
    double expected = 0.0;
    for (const TsPoint& point : observed.points) {
        const double err =
            std::sqrt(bates_variance_swap(base_params(), point.maturity)) -
            std::sqrt(point.level);
        expected += err * err;
    }
    CHECK(expected > 0.0);
    CHECK(ts_penalty(base_params(), observed, w) ==
          doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("approximation mode demands variance-swap observations") {
    const VarianceTermStructure vix_ts = truth_ts(TsKind::vix_squared);
    const std::vector<double> w(vix_ts.points.size(), 1.0);
    CHECK_THROWS_AS(approx_vs_penalty(base_params(), vix_ts, w),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        ObjectiveEvaluator(truth_surface(), vix_ts,
                           objective_config(0.5, TsKind::vix_squared,
                                            PenaltyMode::approx_vs)),
        std::invalid_argument);
}

TEST_CASE("approximation penalty at truth prices the spread exactly") {
    const VarianceTermStructure vs_ts = truth_ts(TsKind::variance_swap);
    const std::vector<double> w(vs_ts.points.size(), 1.0);
    double expected = 0.0;
    for (const TsPoint& point : vs_ts.points) {
        const double err =
            std::sqrt(bates_vix_squared(base_params(), point.maturity)) -
            std::sqrt(point.level);
        expected += err * err;
    }
    CHECK(expected > 0.0);  // the spread never vanishes at lambda > 0
    CHECK(approx_vs_penalty(base_params(), vs_ts, w) ==
          doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("evaluator agrees with the one-shot objective") {
    const VolSurface surface = truth_surface();
    const VarianceTermStructure ts = truth_ts(TsKind::vix_squared);
    const auto cfg =
        objective_config(0.4, TsKind::vix_squared, PenaltyMode::exact);
    const ObjectiveEvaluator evaluator(surface, ts, cfg);
    CHECK(evaluator.alpha() == 0.4);

    BatesParams shifted = base_params();
    shifted.theta = 0.07;
    shifted.lambda = 1.2;
    for (const BatesParams& p : {base_params(), shifted}) {
        const auto via_eval = evaluator.evaluate(p);
        const auto via_free = joint_objective(p, surface, ts, cfg);
        CHECK(via_eval.total ==
              doctest::Approx(via_free.total).epsilon(1e-9));
        CHECK(via_eval.iv_inversion_failures ==
              via_free.iv_inversion_failures);
        CHECK(evaluator.total(p) ==
              doctest::Approx(via_eval.total).epsilon(1e-9));
    }

    // alpha = 0 never prices an option, so an all-failures parameter vector
    // still returns the pure term-structure penalty.
    const ObjectiveEvaluator ts_only(
        surface, ts, objective_config(0.0, TsKind::vix_squared,
                                      PenaltyMode::exact));
    const auto bd = ts_only.evaluate(base_params());
    CHECK(ts_only.total(base_params()) ==
          doctest::Approx(bd.ts_penalty).epsilon(1e-14));
}

TEST_CASE("unpriceable contracts are capped and counted") {
    // One ATM quote; a candidate with enormous variance pushes the model
    // price past the top of the implied-vol bracket.
    std::vector<SurfaceQuote> quotes;
    OptionQuote q;
    q.strike = 100.0;
    q.maturity = 1.0 / 12.0;
    q.kind = OptionKind::call;
    q.mid = 1.0;
    quotes.push_back({q, 0.2});
    const VolSurface surface = VolSurface::build(base_env(), quotes);

    BatesParams runaway = base_params();
    runaway.v0 = 30.0;
    runaway.theta = 30.0;
    runaway.kappa = 0.001;
    runaway.sigma_v = 0.0001;
    runaway.lambda = 0.0;
    runaway.mu_j = 0.0;
    runaway.sigma_j = 0.0;

    const auto weights = make_contract_weights(surface, {});
    std::int64_t failures = 0;
    const double sse =
        sse_iv(runaway, surface, weights, PricerSettings{}, &failures);
    CHECK(failures == 1);
    CHECK(sse == kIvFailurePenaltyVol * kIvFailurePenaltyVol);

    VarianceTermStructure ts;
    ts.kind = TsKind::vix_squared;
    ts.points = {{1.0 / 12.0, 0.06}};
    const auto bd = joint_objective(
        runaway, surface, ts,
        objective_config(1.0, TsKind::vix_squared, PenaltyMode::exact));
    CHECK(bd.iv_inversion_failures == 1);
    CHECK(bd.total == doctest::Approx(25.0));
}

TEST_CASE("evaluator rejects an empty surface and out-of-range alpha") {
    const VarianceTermStructure ts = truth_ts(TsKind::vix_squared);
    CHECK_THROWS_AS(
        ObjectiveEvaluator(VolSurface{}, ts,
                           objective_config(0.5, TsKind::vix_squared,
                                            PenaltyMode::exact)),
        std::invalid_argument);
    CHECK_THROWS_AS(
        ObjectiveEvaluator(truth_surface(), ts,
                           objective_config(1.5, TsKind::vix_squared,
                                            PenaltyMode::exact)),
        std::invalid_argument);
}

}  // TEST_SUITE
