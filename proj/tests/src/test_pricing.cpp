#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "doctest.h"

#include "helpers.hpp"
#include "jointcal/pricing.hpp"

using namespace jointcal;
using jointcal::testing::base_env;
using jointcal::testing::base_params;
using jointcal::testing::otm_kind;

TEST_SUITE("pricing") {

TEST_CASE("black-scholes call anchor") {
    // Frozen from an independent lognormal-quadrature evaluation of the
    // risk-neutral expectation (2048-node Gauss-Legendre on +-10 sd).
    const double price =
        bs_price(base_env(), 100.0, 1.0, 0.2, OptionKind::call);
    CHECK(price == doctest::Approx(7.2910138158).epsilon(1e-9));
}

TEST_CASE("black-scholes structure") {
    const MarketEnv env = base_env();

    SUBCASE("put-call parity") {
        for (double strike : {80.0, 100.0, 120.0})
            for (double tau : {1.0 / 12.0, 0.5, 2.0}) {
                const double c = bs_price(env, strike, tau, 0.25, OptionKind::call);
                const double p = bs_price(env, strike, tau, 0.25, OptionKind::put);
                const double synth = env.spot * std::exp(-env.dividend_yield * tau) -
                                     strike * std::exp(-env.rate * tau);
                CHECK(c - p == doctest::Approx(synth).epsilon(1e-13));
            }
    }
    SUBCASE("vanishing vol converges to discounted forward intrinsic") {
        const double tau = 0.5;
        const double df = std::exp(-env.rate * tau);
        const double call90 = bs_price(env, 90.0, tau, 1e-8, OptionKind::call);
        CHECK(call90 == doctest::Approx(df * (env.forward(tau) - 90.0))
                            .epsilon(1e-10));
        CHECK(bs_price(env, 110.0, tau, 1e-8, OptionKind::call) ==
              doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    }
    SUBCASE("price increases with vol, vega matches finite differences") {
        const double tau = 0.25;
        double previous = 0.0;
        for (double vol : {0.05, 0.1, 0.2, 0.4, 0.8}) {
            const double price = bs_price(env, 105.0, tau, vol, OptionKind::call);
            CHECK(price > previous);
            previous = price;

            const double h = 1e-6;
            const double fd = (bs_price(env, 105.0, tau, vol + h, OptionKind::call) -
                               bs_price(env, 105.0, tau, vol - h, OptionKind::call)) /
                              (2.0 * h);
            CHECK(bs_vega(env, 105.0, tau, vol) ==
                  doctest::Approx(fd).epsilon(1e-6));
        }
    }
}

TEST_CASE("implied vol round trip") {
    const MarketEnv env = base_env();
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u_strike(70.0, 140.0);
    std::uniform_real_distribution<double> u_tau(0.02, 2.0);
    std::uniform_real_distribution<double> u_vol(0.05, 1.2);
    for (int i = 0; i < 200; ++i) {
        const double strike = u_strike(rng);
        const double tau = u_tau(rng);
        const double vol = u_vol(rng);
        const OptionKind kind = i % 2 ? OptionKind::call : OptionKind::put;
        const double price = bs_price(env, strike, tau, vol, kind);
        const double recovered = implied_vol(env, strike, tau, kind, price);
        CHECK(std::fabs(recovered - vol) < 1e-8);
        // A warm hint must not change the answer beyond the same tolerance.
        const double hinted =
            implied_vol(env, strike, tau, kind, price, vol * 1.3);
        CHECK(std::fabs(hinted - vol) < 1e-8);
    }
}

TEST_CASE("implied vol rejects prices outside the no-arbitrage band") {
    const MarketEnv env = base_env();
    // Above the upper bound (a call is never worth more than e^{-q tau} S).
    CHECK_THROWS_AS(implied_vol(env, 100.0, 0.5, OptionKind::call, 101.0),
                    unattainable_price_error);
    // Below the lower bound (discounted intrinsic).
    CHECK_THROWS_AS(implied_vol(env, 60.0, 0.25, OptionKind::call, 1.0),
                    unattainable_price_error);
    CHECK_THROWS_AS(implied_vol(env, 100.0, 0.5, OptionKind::put, -0.01),
                    unattainable_price_error);
    // The type participates in the domain_error hierarchy.
    CHECK_THROWS_AS(implied_vol(env, 100.0, 0.5, OptionKind::call, 101.0),
                    std::domain_error);
}

TEST_CASE("characteristic function normalization and martingale identities") {
    const MarketEnv env = base_env();
    BatesParams alt = base_params();
    alt.rho = 0.3;
    alt.lambda = 2.0;
    alt.mu_j = 0.08;
    for (const BatesParams& p : {base_params(), alt})
        for (double tau : {1.0 / 52.0, 0.25, 1.0, 3.0}) {
            const std::complex<double> one =
                bates_char_fn(p, env, tau, {0.0, 0.0});
            CHECK(std::abs(one - 1.0) < 1e-13);
            // phi(-i) = E[S_tau / S_0] = e^{(r - q) tau}.
            const std::complex<double> mart =
                bates_char_fn(p, env, tau, {0.0, -1.0});
            const double target = std::exp((env.rate - env.dividend_yield) * tau);
            CHECK(std::abs(mart - target) < 1e-12 * target);
        }
}

TEST_CASE("fourier pricer parity and strip consistency") {
    const MarketEnv env = base_env();
    const BatesParams p = base_params();
    const std::vector<double> strikes{80.0, 90.0, 100.0, 110.0, 125.0};
    for (double tau : {1.0 / 12.0, 0.25, 1.0}) {
        const std::vector<double> calls = price_european_strip(
            p, env, tau, strikes,
            std::vector<OptionKind>(strikes.size(), OptionKind::call));
        const std::vector<double> puts = price_european_strip(
            p, env, tau, strikes,
            std::vector<OptionKind>(strikes.size(), OptionKind::put));
        for (std::size_t i = 0; i < strikes.size(); ++i) {
            const double synth =
                env.spot * std::exp(-env.dividend_yield * tau) -
                strikes[i] * std::exp(-env.rate * tau);
            CHECK(std::fabs(calls[i] - puts[i] - synth) < 1e-8 * env.spot);
            // The strip is the same computation as one-off pricing.
            CHECK(price_european(p, env, strikes[i], tau, OptionKind::call) ==
                  doctest::Approx(calls[i]).epsilon(1e-14));
        }
    }
}

TEST_CASE("fourier pricer agrees with the jump-diffusion series in the degenerate limit") {
    // Bates with a collapsed variance process (v0 = theta = sigma^2,
    // sigma_v -> 0) and a near-deterministic jump reduces to the SJD model,
    // which is priced by an independent code path (lognormal mixture series).
    const MarketEnv env = base_env();
    const double sigma = 0.16, lambda = 1.0, jump = -0.05;
    const SjdParams sjd{sigma, lambda, jump};

    BatesParams degenerate;
    degenerate.v0 = sigma * sigma;
    degenerate.theta = sigma * sigma;
    degenerate.kappa = 1.0;
    degenerate.sigma_v = 1e-8;
    degenerate.rho = 0.0;
    degenerate.lambda = lambda;
    degenerate.sigma_j = 1e-8;
    // Deterministic log jump J: mu_j = e^{J + sigma_j^2/2} - 1.
    degenerate.mu_j = std::expm1(jump + 0.5 * 1e-16);

    for (double tau : {1.0 / 12.0, 0.5})
        for (double strike : {90.0, 100.0, 110.0}) {
            const OptionKind kind = otm_kind(strike, env.spot);
            const double fourier =
                price_european(degenerate, env, strike, tau, kind);
            const double series = sjd_price(sjd, env, strike, tau, kind);
            CHECK(fourier == doctest::Approx(series).epsilon(2e-7));
        }
}

TEST_CASE("pricer settings validation") {
    PricerSettings s;
    s.validate();
    s.fourier_grid_size = 100;  // not a power of two
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    s = PricerSettings{};
    s.fourier_grid_size = 32;  // below the floor
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    s = PricerSettings{};
    s.truncation_width = 4.0;  // too narrow to hold the density
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    s = PricerSettings{};
    s.quadrature = "laplace";
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}

}  // TEST_SUITE
