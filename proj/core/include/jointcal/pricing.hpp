#pragma once

// European option prices and Black-Scholes implied volatilities under
// Black-Scholes, SJD and Bates dynamics.
//
// The Bates pricer is a Fourier cosine expansion of the risk-neutral density:
// per maturity the characteristic function is evaluated once on the frequency
// grid and shared across strikes, which keeps full-surface evaluations cheap
// inside the calibration loop. Calls and puts are expanded with their own
// payoff coefficients, so put-call parity is a genuine accuracy diagnostic
// rather than an identity by construction.

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include "jointcal/types.hpp"

namespace jointcal {

// Price strictly outside the static no-arbitrage band, or implying a
// volatility outside the supported bracket [1e-4, 5].
struct unattainable_price_error : std::domain_error {
    using std::domain_error::domain_error;
};

// Root finder failed to converge on an in-band price.
struct iv_convergence_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PricerSettings {
    int fourier_grid_size = 256;    // power of two, >= 64
    double truncation_width = 12.0; // expansion range half-width, in stdevs
    std::string quadrature = "cos"; // expansion scheme identifier

    void validate() const;
};

inline constexpr double kIvBracketLow = 1e-4;
inline constexpr double kIvBracketHigh = 5.0;

// Black-Scholes price with continuous rate/dividend.
double bs_price(const MarketEnv& env, double strike, double maturity, double vol,
                OptionKind kind);

// Black-Scholes vega (dPrice/dVol); used by the implied-vol Newton polish.
double bs_vega(const MarketEnv& env, double strike, double maturity, double vol);

// Invert bs_price for the volatility. `hint` (optional) seeds a Newton fast
// path; the safeguarded bracket on [1e-4, 5] is authoritative either way.
double implied_vol(const MarketEnv& env, double strike, double maturity,
                   OptionKind kind, double price,
                   std::optional<double> hint = std::nullopt);

// Characteristic function of the log return log(S_tau/S_0) under Bates
// dynamics, drift (r - q) included: phi(0) = 1, phi(-i) = e^{(r-q) tau}.
std::complex<double> bates_char_fn(const BatesParams& params, const MarketEnv& env,
                                   double maturity, std::complex<double> u);

// Cosine-expansion price of a European option under Bates dynamics.
double price_european(const BatesParams& params, const MarketEnv& env, double strike,
                      double maturity, OptionKind kind,
                      const PricerSettings& settings = {});

// Price one maturity's strip of options in a single expansion: the
// characteristic function is evaluated once and the truncation range covers
// every strike in the batch. kinds[i] pairs with strikes[i].
std::vector<double> price_european_strip(const BatesParams& params,
                                         const MarketEnv& env, double maturity,
                                         const std::vector<double>& strikes,
                                         const std::vector<OptionKind>& kinds,
                                         const PricerSettings& settings = {});

// SJD price as the analytic Poisson mixture of Black-Scholes prices
// conditioned on the jump count, with jump-compensated drift. The mixture is
// truncated once the remaining Poisson tail mass drops below 1e-12; the
// lambda = 0 and jump = 0 limits short-circuit to bs_price exactly.
double sjd_price(const SjdParams& params, const MarketEnv& env, double strike,
                 double maturity, OptionKind kind);

}  // namespace jointcal
