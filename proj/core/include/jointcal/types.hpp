#pragma once

// Domain types shared across pricing, variance, objective, calibration,
// simulation and I/O.
//
// Conventions used throughout the library:
//   - variance levels are annualized, in decimal^2 units (0.04 = a 20% vol);
//     square-root "volatility views" are computed where needed, never stored;
//   - maturities are ACT/365 year fractions;
//   - rates and dividend yields are continuously compounded decimals.
//
// All types are immutable value types once constructed and safe to share
// across threads. validate() throws std::invalid_argument naming the
// offending field.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace jointcal {

enum class OptionKind { call, put };

inline const char* to_string(OptionKind k) {
    return k == OptionKind::call ? "call" : "put";
}

struct MarketEnv {
    double spot = 0.0;            // currency units
    double rate = 0.0;            // continuously-compounded annual rate
    double dividend_yield = 0.0;  // continuously-compounded annual yield

    void validate() const;

    // Forward price for maturity tau: spot * exp((r - q) tau).
    double forward(double maturity) const {
        return spot * std::exp((rate - dividend_yield) * maturity);
    }
};

// The 8-dimensional Bates parameter vector Theta.
struct BatesParams {
    double v0 = 0.0;       // initial variance (annualized, decimal^2)
    double kappa = 0.0;    // variance mean-reversion speed (1/year)
    double theta = 0.0;    // long-run variance (annualized, decimal^2)
    double sigma_v = 0.0;  // vol-of-vol
    double rho = 0.0;      // spot/variance Brownian correlation
    double lambda = 0.0;   // jump intensity (jumps/year)
    double mu_j = 0.0;     // mean relative jump size E[e^J - 1]
    double sigma_j = 0.0;  // jump-size log standard deviation

    void validate() const;

    // Mean of the log jump size J ~ Normal(log(1+mu_j) - sigma_j^2/2, sigma_j^2),
    // so that E[e^J - 1] = mu_j.
    double jump_log_mean() const {
        return std::log1p(mu_j) - 0.5 * sigma_j * sigma_j;
    }
};

// Simple Jump Diffusion: constant diffusive volatility plus Poisson jumps of
// one fixed log-size J.
struct SjdParams {
    double sigma = 0.0;   // diffusive volatility (annualized decimal)
    double lambda = 0.0;  // jump intensity (jumps/year)
    double jump = 0.0;    // fixed log-jump size J

    void validate() const;
};

struct OptionQuote {
    double strike = 0.0;
    double maturity = 0.0;  // years, ACT/365
    OptionKind kind = OptionKind::call;
    std::optional<double> bid;
    std::optional<double> ask;
    double mid = 0.0;
    std::optional<double> forward;
    std::optional<double> std_moneyness;

    void validate() const;
};

// An OptionQuote with its Black-Scholes implied volatility attached; the
// element type of VolSurface.
struct SurfaceQuote {
    OptionQuote quote;
    double implied_vol = 0.0;  // decimal
};

// Quotes grouped by maturity. Construction through build() sorts maturities,
// merges duplicate maturity keys and orders quotes deterministically
// (strike, then kind), so a surface reconstructed from its own serialized
// form is identical.
struct VolSurface {
    MarketEnv env;
    std::vector<double> maturities;                  // strictly increasing
    std::vector<std::vector<SurfaceQuote>> quotes;   // aligned with maturities

    static VolSurface build(const MarketEnv& env, std::vector<SurfaceQuote> quotes);

    void validate() const;

    std::size_t total_quotes() const;
    bool empty() const { return maturities.empty(); }
};

enum class TsKind { vix_squared, variance_swap };

inline const char* to_string(TsKind k) {
    return k == TsKind::vix_squared ? "vix_squared" : "variance_swap";
}

struct TsPoint {
    double maturity = 0.0;  // years
    double level = 0.0;     // annualized variance (decimal^2)
};

// Per-maturity variance levels, all of one kind: replicated VIX^2 or
// variance-swap rates.
struct VarianceTermStructure {
    TsKind kind = TsKind::vix_squared;
    std::vector<TsPoint> points;  // maturities strictly increasing

    void validate() const;
};

// ---------------------------------------------------------------------------
// Calibration configuration and result.

struct WeightRule {
    enum class Kind { uniform, n_quotes };
    Kind rule = Kind::uniform;
    double scale = 1.0;

    void validate() const;
};

// Componentwise box for the Bates parameters. Lower bounds of the
// log-transformed parameters (v0, kappa, theta, sigma_v) must be strictly
// positive; see ParamTransform.
struct ParamBounds {
    BatesParams lower;
    BatesParams upper;

    void validate() const;
    bool contains(const BatesParams& p) const;
};

struct OptimizerSettings {
    double tolerance = 1e-10;        // relative objective-change convergence
    std::int64_t max_evaluations = 6000;  // total cap across restarts
    int restarts = 2;                // independent starts (first = initial guess)

    void validate() const;
};

// Which model curve the term-structure penalty compares against the observed
// curve. "exact" pairs model VIX^2 with observed VIX^2 (or model VS with
// observed VS, per ts_kind). "approx_vs" reproduces the approximation mode:
// observed variance-swap levels penalized against the model VIX^2 curve.
enum class PenaltyMode { exact, approx_vs };

inline const char* to_string(PenaltyMode m) {
    return m == PenaltyMode::exact ? "exact" : "approx_vs";
}

struct CalibrationConfig {
    double alpha = 0.5;  // weight on the IV sum of squares, in [0,1]
    WeightRule contract_weights{WeightRule::Kind::uniform, 1.0};
    WeightRule ts_weights{WeightRule::Kind::n_quotes, 1.0};
    ParamBounds bounds;
    BatesParams initial_guess;
    OptimizerSettings optimizer;
    TsKind ts_kind = TsKind::vix_squared;
    PenaltyMode penalty_mode = PenaltyMode::exact;
    std::uint64_t seed = 0;

    void validate() const;
};

struct MaturityValue {
    double maturity = 0.0;
    double value = 0.0;
};

struct CalibrationResult {
    BatesParams params;
    double objective_value = 0.0;
    double iv_sse = 0.0;
    double ts_penalty = 0.0;
    std::vector<MaturityValue> iv_mae_by_maturity;   // mean |IV error|, decimal
    std::vector<MaturityValue> ts_error_by_maturity; // |sqrt-level error|, decimal
    bool converged = false;
    std::int64_t evaluations = 0;
    std::int64_t iv_inversion_failures = 0;  // at the returned parameters
};

}  // namespace jointcal
