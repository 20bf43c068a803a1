#include <cmath>
#include <vector>

#include "doctest.h"

#include "helpers.hpp"
#include "jointcal/simulation.hpp"
#include "jointcal/variance.hpp"

using namespace jointcal;
using jointcal::testing::base_params;

namespace {

bool in_range(double x, const DrawRange& r) {
    return x >= r.lower && x <= r.upper;
}

}  // namespace

TEST_SUITE("simulation") {

TEST_CASE("draws are reproducible, index-sensitive and in range") {
    SimulationSpec spec;
    spec.seed = 31;
    const BatesParams a = draw_params(spec, 0);
    const BatesParams b = draw_params(spec, 0);
    CHECK(a.v0 == b.v0);
    CHECK(a.rho == b.rho);
    CHECK(a.sigma_j == b.sigma_j);

    const BatesParams c = draw_params(spec, 1);
    CHECK(c.v0 != a.v0);  // distinct index, distinct stream

    for (int i = 0; i < 50; ++i) {
        const BatesParams p = draw_params(spec, i);
        CHECK_NOTHROW(p.validate());
        const DrawRanges& r = spec.draw_ranges;
        CHECK(in_range(p.v0, r.v0));
        CHECK(in_range(p.kappa, r.kappa));
        CHECK(in_range(p.theta, r.theta));
        CHECK(in_range(p.sigma_v, r.sigma_v));
        CHECK(in_range(p.rho, r.rho));
        CHECK(in_range(p.lambda, r.lambda));
        CHECK(in_range(p.mu_j, r.mu_j));
        CHECK(in_range(p.sigma_j, r.sigma_j));
    }

    SimulationSpec other = spec;
    other.seed = 32;
    CHECK(draw_params(other, 0).v0 != a.v0);
}

TEST_CASE("strike range materializes an inclusive dollar grid") {
    const StrikeRange r;  // 75..125 by 1
    const std::vector<double> grid = r.grid();
    REQUIRE(grid.size() == 51);
    CHECK(grid.front() == 75.0);
    CHECK(grid.back() == 125.0);
    CHECK(grid[25] == 100.0);

    StrikeRange bad;
    bad.step = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = {};
    bad.min = 130.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("generated surfaces follow the protocol") {
    SimulationSpec spec;
    const BatesParams truth = base_params();
    const GeneratedData data = generate_surface(truth, spec);

    CHECK(data.surface.maturities.size() == 5);
    CHECK(data.surface.env.spot == 100.0);

    const MarketEnv env = spec.env();
    std::size_t checked = 0;
    for (std::size_t j = 0; j < data.surface.maturities.size(); ++j) {
        const double tau = data.surface.maturities[j];
        const double vix = std::sqrt(bates_vix_squared(truth, tau));
        for (const SurfaceQuote& sq : data.surface.quotes[j]) {
            // OTM split versus spot, not forward.
            if (sq.quote.strike >= spec.spot)
                CHECK(sq.quote.kind == OptionKind::call);
            else
                CHECK(sq.quote.kind == OptionKind::put);
            // The dime floor.
            CHECK(sq.quote.mid >= spec.min_price);
            // IVs invert the model price.
            const double price = price_european(truth, env, sq.quote.strike,
                                                tau, sq.quote.kind);
            CHECK(sq.quote.mid == doctest::Approx(price).epsilon(1e-10));
            CHECK(bs_price(env, sq.quote.strike, tau, sq.implied_vol,
                           sq.quote.kind) ==
                  doctest::Approx(price).epsilon(1e-7));
            // Standardized moneyness: log(K/S) scaled by VIX * sqrt(tau).
            REQUIRE(sq.quote.std_moneyness.has_value());
            const double expected = std::log(sq.quote.strike / spec.spot) /
                                    (vix * std::sqrt(tau));
            CHECK(*sq.quote.std_moneyness ==
                  doctest::Approx(expected).epsilon(1e-10));
            ++checked;
        }
    }
    CHECK(checked == data.surface.total_quotes());
    CHECK(checked > 100);  // the lattice keeps most of its 255 nodes

    // Term structures are the closed forms on the same maturities.
    REQUIRE(data.exact_vix.points.size() == 5);
    REQUIRE(data.exact_vs.points.size() == 5);
    CHECK(data.exact_vix.kind == TsKind::vix_squared);
    CHECK(data.exact_vs.kind == TsKind::variance_swap);
    for (std::size_t j = 0; j < 5; ++j) {
        const double tau = data.exact_vix.points[j].maturity;
        CHECK(tau == data.surface.maturities[j]);
        CHECK(data.exact_vix.points[j].level ==
              doctest::Approx(bates_vix_squared(truth, tau)).epsilon(1e-14));
        CHECK(data.exact_vs.points[j].level ==
              doctest::Approx(bates_variance_swap(truth, tau)).epsilon(1e-14));
    }
}

TEST_CASE("exact recovery is componentwise with absolute gates for rho and mu_j") {
    const BatesParams truth = base_params();

    CHECK(exactly_recovered(truth, truth, 1e-4, 1e-4));

    BatesParams close = truth;
    close.kappa *= 1.0 + 5e-5;  // inside the relative gate
    CHECK(exactly_recovered(close, truth, 1e-4, 1e-4));
    close.kappa = truth.kappa * (1.0 + 2e-4);  // outside
    CHECK_FALSE(exactly_recovered(close, truth, 1e-4, 1e-4));

    // rho and mu_j are judged absolutely: a tiny mu_j truth would make any
    // relative criterion unattainable.
    BatesParams tiny = truth;
    tiny.mu_j = 1e-6;
    BatesParams fitted = tiny;
    fitted.mu_j = 5e-5;  // |err| < 1e-4 although relative error is 49x
    CHECK(exactly_recovered(fitted, tiny, 1e-4, 1e-4));
    fitted.mu_j = 2.5e-4;
    CHECK_FALSE(exactly_recovered(fitted, tiny, 1e-4, 1e-4));

    fitted = truth;
    fitted.rho = truth.rho + 5e-5;
    CHECK(exactly_recovered(fitted, truth, 1e-4, 1e-4));
    fitted.rho = truth.rho + 2e-4;
    CHECK_FALSE(exactly_recovered(fitted, truth, 1e-4, 1e-4));
}

TEST_CASE("bucket boundaries sit at one and two standardized deviations") {
    std::vector<QuoteError> errors;
    errors.push_back({0.0, 0.01});    // ATM
    errors.push_back({-0.99, 0.03});  // ATM (open right boundary)
    errors.push_back({1.0, 0.02});    // OTM
    errors.push_back({-1.5, 0.04});   // OTM
    errors.push_back({2.0, 0.05});    // DOTM
    errors.push_back({-7.0, 0.07});   // DOTM

    const BucketMae mae = bucket_errors(errors);
    REQUIRE(mae.atm.has_value());
    REQUIRE(mae.otm.has_value());
    REQUIRE(mae.dotm.has_value());
    // Values are volatility percentage points.
    CHECK(*mae.atm == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(*mae.otm == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(*mae.dotm == doctest::Approx(6.0).epsilon(1e-12));

    const BucketMae empty = bucket_errors({});
    CHECK_FALSE(empty.atm.has_value());
    CHECK_FALSE(empty.otm.has_value());
    CHECK_FALSE(empty.dotm.has_value());

    const BucketMae atm_only = bucket_errors({{0.5, 0.01}});
    CHECK(atm_only.atm.has_value());
    CHECK_FALSE(atm_only.otm.has_value());
}

TEST_CASE("quote errors vanish at the generating parameters") {
    SimulationSpec spec;
    spec.maturity_days = {30};
    spec.strikes = {90.0, 110.0, 5.0};
    const BatesParams truth = base_params();
    const GeneratedData data = generate_surface(truth, spec);

    const std::vector<QuoteError> at_truth = quote_errors(truth, data.surface);
    REQUIRE(at_truth.size() == data.surface.total_quotes());
    for (const QuoteError& e : at_truth) CHECK(e.abs_iv_error < 1e-8);

    BatesParams off = truth;
    off.v0 = 0.09;
    double total = 0.0;
    for (const QuoteError& e : quote_errors(off, data.surface))
        total += e.abs_iv_error;
    CHECK(total > 0.01);
}

TEST_CASE("a micro study recovers cleanly at full smile weight") {
    SimulationSpec spec;
    spec.n_draws = 2;
    spec.seed = 7;
    spec.alpha_grid = {1.0};
    spec.maturity_days = {30, 91};
    spec.strikes = {85.0, 115.0, 5.0};
    spec.optimizer = {1e-10, 600, 1};
    // Keep the draws mild so 600 evaluations can polish them.
    spec.draw_ranges.v0 = {0.04, 0.08};
    spec.draw_ranges.kappa = {1.5, 2.5};
    spec.draw_ranges.theta = {0.03, 0.06};
    spec.draw_ranges.sigma_v = {0.3, 0.45};
    spec.draw_ranges.rho = {-0.8, -0.5};
    spec.draw_ranges.lambda = {0.4, 0.8};
    spec.draw_ranges.mu_j = {-0.07, -0.03};
    spec.draw_ranges.sigma_j = {0.05, 0.09};

    const RecoverySummary summary = run_recovery_study(spec);
    CHECK(summary.mode == StudyMode::exact_vix);
    CHECK(summary.n_draws == 2);
    CHECK(summary.seed == 7);
    REQUIRE(summary.per_alpha.size() == 1);
    const AlphaSummary& s = summary.per_alpha[0];
    CHECK(s.alpha == 1.0);
    CHECK(s.draws_used == 2);
    CHECK(s.failures == 0);
    REQUIRE(s.iv_mae.atm.has_value());
    // 600 evaluations from the fixed initial guess will not hit the exact
    // recovery gate, but the smile fit must already be tight near the money.
    CHECK(*s.iv_mae.atm < 1.0);
    CHECK(s.vix_error_by_maturity.size() == 2);
    CHECK(s.recovery_rate >= 0.0);
    CHECK(s.recovery_rate <= 1.0);
}

TEST_CASE("specs are validated") {
    SimulationSpec spec;
    spec.n_draws = 0;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec = {};
    spec.alpha_grid = {0.5, 1.2};
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec = {};
    spec.maturity_days = {};
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec = {};
    spec.min_price = -1.0;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec = {};
    spec.draw_ranges.v0 = {0.1, 0.01};  // inverted
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec = {};
    spec.jobs = 0;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
}

}  // TEST_SUITE
