#pragma once

// The standard implied-volatility SSE objective, the variance term-structure
// penalties, and the alpha-weighted joint objective:
//
//   total = alpha * sum_j sum_i w_ij [iv_mod(K_ij, tau_j) - iv_mkt(K_ij, tau_j)]^2
//         + (1 - alpha) * sum_j w^v_j [sqrt(V_mod(tau_j)) - sqrt(V_mkt(tau_j))]^2
//
// Defaults: w_ij = 1 and w^v_j = N(tau_j) (the quote count at tau_j), which
// makes each maturity's term-structure error weigh as much as its whole smile.
//
// Model IVs come from implied_vol(price_european(...)). A candidate parameter
// vector whose model price cannot be inverted contributes (sigma_cap)^2 with
// sigma_cap = 5.0 for that contract instead of aborting, so the optimizer can
// escape pathological regions; the failure count is reported.

#include <cstdint>
#include <vector>

#include "jointcal/pricing.hpp"
#include "jointcal/types.hpp"

namespace jointcal {

inline constexpr double kIvFailurePenaltyVol = 5.0;  // sigma_cap

struct ObjectiveBreakdown {
    double iv_sse = 0.0;
    double ts_penalty = 0.0;
    double total = 0.0;  // alpha * iv_sse + (1 - alpha) * ts_penalty
    std::vector<MaturityValue> iv_sse_by_maturity;
    std::vector<MaturityValue> ts_penalty_by_maturity;
    std::int64_t iv_inversion_failures = 0;
};

// Materialize weight rules into explicit per-quote / per-point weights.
std::vector<std::vector<double>> make_contract_weights(const VolSurface& surface,
                                                       const WeightRule& rule);
// The n_quotes rule reads N(tau_j) from the surface maturity matching each
// term-structure point (weight 1 when no maturity matches).
std::vector<double> make_ts_weights(const VarianceTermStructure& observed,
                                    const VolSurface& surface,
                                    const WeightRule& rule);

// Sum of squared IV errors; weights aligned with surface.quotes.
double sse_iv(const BatesParams& params, const VolSurface& surface,
              const std::vector<std::vector<double>>& weights,
              const PricerSettings& settings = {},
              std::int64_t* inversion_failures = nullptr);

// Volatility-unit term-structure penalty. The observed kind selects the model
// curve: vix_squared -> bates_vix_squared, variance_swap -> bates_variance_swap.
double ts_penalty(const BatesParams& params, const VarianceTermStructure& observed,
                  const std::vector<double>& weights);

// Approximation mode: observed variance-swap levels penalized against the
// model VIX^2 curve. Requires observed.kind == variance_swap.
double approx_vs_penalty(const BatesParams& params,
                         const VarianceTermStructure& observed_vs,
                         const std::vector<double>& weights);

// Full alpha-weighted objective under a calibration config (weights follow
// config.contract_weights / config.ts_weights; the penalty leg follows
// config.penalty_mode).
ObjectiveBreakdown joint_objective(const BatesParams& params,
                                   const VolSurface& surface,
                                   const VarianceTermStructure& observed_ts,
                                   const CalibrationConfig& config,
                                   const PricerSettings& settings = {});

// Precomputed form of the joint objective for repeated evaluation inside the
// calibration loop: market IVs, weights and the maturity layout are fixed at
// construction; evaluate()/total() then price one candidate parameter vector.
//
// An instance is not thread-safe (it keeps warm-start scratch for the IV
// inversions); give each worker its own copy.
class ObjectiveEvaluator {
  public:
    ObjectiveEvaluator(const VolSurface& surface,
                       const VarianceTermStructure& observed_ts,
                       const CalibrationConfig& config,
                       const PricerSettings& settings = {});

    ObjectiveBreakdown evaluate(const BatesParams& params) const;

    // total under the config's alpha, skipping zero-weighted legs
    // (alpha = 0 prices nothing; alpha = 1 skips the penalty).
    double total(const BatesParams& params) const;

    double alpha() const { return alpha_; }

  private:
    struct MaturitySlice {
        double maturity = 0.0;
        std::vector<double> strikes;
        std::vector<OptionKind> kinds;
        std::vector<double> market_iv;
        std::vector<double> weights;
    };
    struct TsTarget {
        double maturity = 0.0;
        double sqrt_level = 0.0;
        double weight = 0.0;
    };

    double iv_leg(const BatesParams& params, std::int64_t* failures,
                  std::vector<MaturityValue>* by_maturity) const;
    double ts_leg(const BatesParams& params,
                  std::vector<MaturityValue>* by_maturity) const;

    MarketEnv env_;
    PricerSettings settings_;
    double alpha_ = 0.5;
    PenaltyMode penalty_mode_ = PenaltyMode::exact;
    TsKind observed_kind_ = TsKind::vix_squared;
    std::vector<MaturitySlice> slices_;
    std::vector<TsTarget> ts_targets_;
    mutable std::vector<std::vector<double>> iv_hints_;  // warm starts
};

}  // namespace jointcal
