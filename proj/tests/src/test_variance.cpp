#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "doctest.h"

#include "helpers.hpp"
#include "jointcal/pricing.hpp"
#include "jointcal/variance.hpp"

using namespace jointcal;
using jointcal::testing::base_env;
using jointcal::testing::base_params;
using jointcal::testing::otm_kind;

namespace {

BatesParams random_params(std::mt19937_64& rng) {
    auto u = [&](double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(rng);
    };
    return BatesParams{u(0.005, 0.15), u(0.3, 6.0),  u(0.005, 0.15),
                       u(0.05, 1.0),   u(-0.95, 0.5), u(0.0, 5.0),
                       u(-0.3, 0.3),   u(0.0, 0.3)};
}

// OTM grid of undiscounted (forward) prices from a pricing callback.
template <typename PriceFn>
StrikeGrid make_grid(const MarketEnv& env, double tau, double lo, double hi,
                     double step, PriceFn price) {
    StrikeGrid grid;
    grid.forward = env.forward(tau);
    const double undiscount = std::exp(env.rate * tau);
    for (double k = lo; k <= hi + 1e-9; k += step) {
        grid.strikes.push_back(k);
        grid.otm_prices.push_back(undiscount *
                                  price(k, otm_kind(k, grid.forward)));
    }
    return grid;
}

}  // namespace

TEST_SUITE("variance") {

TEST_CASE("closed-form anchors at the base parameters") {
    // Frozen from an independent Gauss-Legendre quadrature of the integrated
    // variance and jump expectations at the one-month horizon.
    const BatesParams p = base_params();
    const double tau = 1.0 / 12.0;
    CHECK(bates_variance_swap(p, tau) ==
          doctest::Approx(0.06078697).epsilon(1e-6));
    CHECK(bates_vix_squared(p, tau) ==
          doctest::Approx(0.06060893).epsilon(1e-6));
    CHECK(vs_vix_spread(p, tau) ==
          doctest::Approx(1.780342208e-4).epsilon(1e-8));
    CHECK(log_contract_multiplier(p, tau) ==
          doctest::Approx(2.00587485).epsilon(1e-8));
}

TEST_CASE("bates closed forms satisfy their defining decomposition") {
    // VS(tau) = theta + (v0 - theta)(1 - e^{-kappa tau})/(kappa tau)
    //           + lambda (m^2 + sigma_j^2),  m = log(1+mu_j) - sigma_j^2/2;
    // VIX^2(tau) = VS(tau) - 2 lambda (log(1+mu_j) - mu_j + m^2/2).
    std::mt19937_64 rng(7);
    for (int i = 0; i < 50; ++i) {
        const BatesParams p = random_params(rng);
        const double tau =
            std::uniform_real_distribution<double>(0.01, 2.0)(rng);
        const double m = p.jump_log_mean();
        const double heston =
            p.theta + (p.v0 - p.theta) *
                          (1.0 - std::exp(-p.kappa * tau)) / (p.kappa * tau);
        const double vs = heston + p.lambda * (m * m + p.sigma_j * p.sigma_j);
        const double gap =
            2.0 * p.lambda * (std::log1p(p.mu_j) - p.mu_j + 0.5 * m * m);
        CHECK(bates_variance_swap(p, tau) ==
              doctest::Approx(vs).epsilon(1e-13));
        CHECK(bates_vix_squared(p, tau) ==
              doctest::Approx(vs - gap).epsilon(1e-13));
    }
}

TEST_CASE("multiplier and spread identities over random parameters") {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 500; ++i) {
        const BatesParams p = random_params(rng);
        const double tau =
            std::uniform_real_distribution<double>(0.01, 2.0)(rng);
        const double vs = bates_variance_swap(p, tau);
        const double vix2 = bates_vix_squared(p, tau);
        const double q = log_contract_multiplier(p, tau);
        CHECK(std::fabs(q * vix2 / 2.0 - vs) <= 1e-13 * std::max(1.0, vs));
        CHECK(std::fabs(vs_vix_spread(p, tau) - (vs - vix2)) < 1e-15);
    }
}

TEST_CASE("no jumps means no wedge") {
    BatesParams p = base_params();
    p.lambda = 0.0;
    for (double tau : {0.05, 1.0 / 12.0, 0.5, 2.0}) {
        CHECK(log_contract_multiplier(p, tau) == 2.0);  // exactly
        CHECK(vs_vix_spread(p, tau) == 0.0);
        CHECK(bates_variance_swap(p, tau) == bates_vix_squared(p, tau));
    }
}

TEST_CASE("sjd closed forms") {
    const SjdParams p{0.16, 1.0, -0.05};
    // VS = sigma^2 + lambda J^2 exactly.
    CHECK(sjd_variance_swap(p) == doctest::Approx(0.0281).epsilon(1e-14));
    // Frozen from the same quadrature oracle as the Bates anchors.
    CHECK(sjd_vix_squared(p) == doctest::Approx(0.02805885).epsilon(1e-7));

    // VIX^2 = sigma^2 - 2 lambda (1 + J - e^J) for any parameter set.
    std::mt19937_64 rng(3);
    for (int i = 0; i < 100; ++i) {
        auto u = [&](double lo, double hi) {
            return std::uniform_real_distribution<double>(lo, hi)(rng);
        };
        const SjdParams q{u(0.05, 0.5), u(0.0, 4.0), u(-0.4, 0.4)};
        const double expected =
            q.sigma * q.sigma -
            2.0 * q.lambda * (1.0 + q.jump - std::exp(q.jump));
        CHECK(sjd_vix_squared(q) == doctest::Approx(expected).epsilon(1e-13));
        CHECK(sjd_variance_swap(q) ==
              doctest::Approx(q.sigma * q.sigma + q.lambda * q.jump * q.jump)
                  .epsilon(1e-13));
    }
}

TEST_CASE("strike weights are the central discretization widths") {
    StrikeGrid grid;
    grid.forward = 100.0;
    grid.strikes = {90.0, 95.0, 100.0, 110.0};
    grid.otm_prices = {1.0, 2.0, 4.0, 1.5};
    const std::vector<double> w = strike_weights(grid);
    REQUIRE(w.size() == 4);
    CHECK(w[0] == doctest::Approx(5.0));    // K_2 - K_1
    CHECK(w[1] == doctest::Approx(5.0));    // (100 - 90) / 2
    CHECK(w[2] == doctest::Approx(7.5));    // (110 - 95) / 2
    CHECK(w[3] == doctest::Approx(10.0));   // K_N - K_{N-1}
}

TEST_CASE("grid validation") {
    StrikeGrid grid;
    grid.forward = 100.0;
    grid.strikes = {100.0, 95.0};
    grid.otm_prices = {1.0, 1.0};
    CHECK_THROWS_AS(grid.validate(), std::invalid_argument);  // not increasing
    grid.strikes = {95.0};
    grid.otm_prices = {1.0};
    CHECK_THROWS_AS(grid.validate(), std::invalid_argument);  // too small
    grid.strikes = {95.0, 100.0};
    grid.otm_prices = {1.0, -0.5};
    CHECK_THROWS_AS(grid.validate(), std::invalid_argument);  // negative price
}

TEST_CASE("replication recovers flat black-scholes variance") {
    const MarketEnv env = base_env();
    const double tau = 1.0 / 12.0;
    const double vol = 0.2;
    const StrikeGrid grid =
        make_grid(env, tau, 50.0, 200.0, 0.5, [&](double k, OptionKind kind) {
            return bs_price(env, k, tau, vol, kind);
        });
    ReplicationDiagnostics diag;
    const double replicated = replicate_vix_squared(grid, tau, &diag);
    CHECK(std::fabs(replicated - vol * vol) / (vol * vol) < 1e-3);
    CHECK_FALSE(diag.truncation_warning());
}

TEST_CASE("replication converges to the bates closed form") {
    const MarketEnv env = base_env();
    const BatesParams p = base_params();
    const double tau = 1.0 / 12.0;
    const double exact = bates_vix_squared(p, tau);
    auto priced_grid = [&](double step) {
        return make_grid(env, tau, 25.0, 400.0, step,
                         [&](double k, OptionKind kind) {
                             return price_european(p, env, k, tau, kind);
                         });
    };
    const double coarse =
        std::fabs(replicate_vix_squared(priced_grid(2.0), tau) - exact);
    const double fine =
        std::fabs(replicate_vix_squared(priced_grid(1.0), tau) - exact);
    CHECK(fine < exact * 1e-2);
    CHECK(fine < coarse);
}

TEST_CASE("truncation diagnostics flag one-sided grids") {
    const MarketEnv env = base_env();
    const double tau = 0.25;
    // Calls only: nothing below the forward.
    const StrikeGrid calls_only =
        make_grid(env, tau, 100.0, 150.0, 5.0, [&](double k, OptionKind) {
            return bs_price(env, k, tau, 0.2, OptionKind::call);
        });
    ReplicationDiagnostics diag;
    replicate_vix_squared(calls_only, tau, &diag);
    CHECK(diag.no_puts_below_forward);
    CHECK_FALSE(diag.no_calls_above_forward);
    CHECK(diag.truncation_warning());
}

}  // TEST_SUITE
