#pragma once

// The parameter-recovery simulation study: uniform parameter draws around a
// base vector, synthetic surface + term-structure generation from the Bates
// closed forms, alpha-sweep calibrations from the fixed initial guess, and
// recovery/error aggregation by standardized-moneyness bucket.

#include <cstdint>
#include <optional>
#include <vector>

#include "jointcal/calibration.hpp"
#include "jointcal/types.hpp"

namespace jointcal {

struct DrawRange {
    double lower = 0.0;
    double upper = 0.0;
};

struct DrawRanges {
    DrawRange v0{0.01, 0.1};
    DrawRange kappa{1.0, 5.0};
    DrawRange theta{0.01, 0.1};
    DrawRange sigma_v{0.1, 0.5};
    DrawRange rho{-1.0, 1.0};
    DrawRange lambda{0.0, 5.0};
    DrawRange mu_j{-0.1, 0.1};
    DrawRange sigma_j{0.0, 0.1};

    void validate() const;
};

enum class StudyMode { exact_vix, approx_vs };

inline const char* to_string(StudyMode m) {
    return m == StudyMode::exact_vix ? "exact_vix" : "approx_vs";
}

struct StrikeRange {
    double min = 75.0;
    double max = 125.0;
    double step = 1.0;

    void validate() const;
    std::vector<double> grid() const;
};

// Defaults reproduce the simulation protocol: spot 100, r = 2%, q = 3%,
// maturities {7, 30, 91, 182, 365} days, strikes 75..125 by $1, OTM quotes
// retained when the model price is at least 10 cents, initial guess = base
// parameters.
struct SimulationSpec {
    int n_draws = 50;
    std::uint64_t seed = 1;
    BatesParams base_params{0.0576, 2.03, 0.04, 0.38, -0.7, 0.59, -0.05, 0.07};
    DrawRanges draw_ranges;
    std::vector<double> alpha_grid{0.0, 0.1, 0.5, 1.0};
    std::vector<int> maturity_days{7, 30, 91, 182, 365};
    StrikeRange strikes;
    double spot = 100.0;
    double rate = 0.02;
    double dividend = 0.03;
    double min_price = 0.10;
    StudyMode mode = StudyMode::exact_vix;
    OptimizerSettings optimizer{1e-10, 24000, 2};
    // "Exactly recovered": componentwise relative error below recovery_rel_tol
    // (absolute recovery_abs_tol for rho and mu_j).
    double recovery_rel_tol = 1e-4;
    double recovery_abs_tol = 1e-4;
    int jobs = 1;  // concurrent draws

    void validate() const;
    MarketEnv env() const { return MarketEnv{spot, rate, dividend}; }
    std::vector<double> maturities() const;  // ACT/365 year fractions
};

// Moneyness buckets by |k|: ATM [0,1), OTM [1,2), DOTM [2,inf).
struct BucketMae {
    std::optional<double> atm;   // mean |IV error| in volatility percentage points
    std::optional<double> otm;
    std::optional<double> dotm;
};

struct AlphaSummary {
    double alpha = 0.0;
    BucketMae iv_mae;
    double recovery_rate = 0.0;  // fraction of usable draws in [0, 1]
    // mean |sqrt(VIX^2_model) - sqrt(VIX^2_true)| per maturity, vol pct points
    std::vector<MaturityValue> vix_error_by_maturity;
    int draws_used = 0;
    int failures = 0;
};

struct RecoverySummary {
    StudyMode mode = StudyMode::exact_vix;
    int n_draws = 0;
    std::uint64_t seed = 0;
    std::vector<AlphaSummary> per_alpha;
};

// One uniform draw of the 8 parameters within spec.draw_ranges, reproducible
// from (spec.seed, draw_index); draws violating the BatesParams invariants
// are rejected and redrawn (bounded retries).
BatesParams draw_params(const SimulationSpec& spec, int draw_index);

struct GeneratedData {
    VolSurface surface;
    VarianceTermStructure exact_vix;  // closed-form VIX^2 at the maturities
    VarianceTermStructure exact_vs;   // closed-form variance-swap curve
};

// Model surface from the strike/maturity lattice: OTM quotes (split at the
// spot, not the forward) with price >= spec.min_price, IVs attached, and
// standardized moneyness computed against the model's closed-form VIX.
GeneratedData generate_surface(const BatesParams& params, const SimulationSpec& spec,
                               const PricerSettings& settings = {});

// The full study: per draw and per alpha, calibrate from the base initial
// guess and aggregate recovery rates, bucketed IV errors and per-maturity VIX
// fitting errors. Draw failures are logged, counted and excluded.
RecoverySummary run_recovery_study(const SimulationSpec& spec,
                                   const PricerSettings& settings = {});

// Aggregation helper shared by the study and tests.
struct QuoteError {
    double std_moneyness = 0.0;
    double abs_iv_error = 0.0;  // decimal vol units
};

BucketMae bucket_errors(const std::vector<QuoteError>& errors);

// Per-quote absolute IV errors of fitted parameters against a surface
// (pairs with bucket_errors).
std::vector<QuoteError> quote_errors(const BatesParams& fitted,
                                     const VolSurface& surface,
                                     const PricerSettings& settings = {});

// Componentwise exact-recovery test.
bool exactly_recovered(const BatesParams& fitted, const BatesParams& truth,
                       double rel_tol, double abs_tol);

}  // namespace jointcal
