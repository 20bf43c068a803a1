#include "jointcal/objective.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "jointcal/variance.hpp"

namespace jointcal {

namespace {

constexpr double kMaturityMatchTol = 1e-9;  // years; ~30 microseconds

double model_ts_level(const BatesParams& params, TsKind kind, double maturity) {
    return kind == TsKind::vix_squared ? bates_vix_squared(params, maturity)
                                       : bates_variance_swap(params, maturity);
}

double penalty_sum(const BatesParams& params, const VarianceTermStructure& observed,
                   const std::vector<double>& weights, TsKind model_kind) {
    observed.validate();
    if (weights.size() != observed.points.size())
        throw std::invalid_argument(
            "ts_penalty: one weight per term-structure point required");
    double sum = 0.0;
    for (std::size_t j = 0; j < observed.points.size(); ++j) {
        if (weights[j] < 0.0)
            throw std::invalid_argument("ts_penalty: weights must be non-negative");
        if (weights[j] == 0.0) continue;
        const double model = model_ts_level(params, model_kind,
                                            observed.points[j].maturity);
        const double err =
            std::sqrt(model) - std::sqrt(observed.points[j].level);
        sum += weights[j] * err * err;
    }
    return sum;
}

}  // namespace

std::vector<std::vector<double>> make_contract_weights(const VolSurface& surface,
                                                       const WeightRule& rule) {
    rule.validate();
    std::vector<std::vector<double>> weights(surface.quotes.size());
    for (std::size_t j = 0; j < surface.quotes.size(); ++j) {
        const double w =
            rule.rule == WeightRule::Kind::uniform
                ? rule.scale
                : rule.scale * static_cast<double>(surface.quotes[j].size());
        weights[j].assign(surface.quotes[j].size(), w);
    }
    return weights;
}

std::vector<double> make_ts_weights(const VarianceTermStructure& observed,
                                    const VolSurface& surface,
                                    const WeightRule& rule) {
    rule.validate();
    std::vector<double> weights;
    weights.reserve(observed.points.size());
    for (const TsPoint& point : observed.points) {
        double w = rule.scale;
        if (rule.rule == WeightRule::Kind::n_quotes) {
            double count = 1.0;  // no matching maturity: fall back to weight 1
            for (std::size_t j = 0; j < surface.maturities.size(); ++j) {
                if (std::abs(surface.maturities[j] - point.maturity) <
                    kMaturityMatchTol) {
                    count = static_cast<double>(surface.quotes[j].size());
                    break;
                }
            }
            w = rule.scale * count;
        }
        weights.push_back(w);
    }
    return weights;
}

double sse_iv(const BatesParams& params, const VolSurface& surface,
              const std::vector<std::vector<double>>& weights,
              const PricerSettings& settings, std::int64_t* inversion_failures) {
    surface.validate();
    if (weights.size() != surface.quotes.size())
        throw std::invalid_argument("sse_iv: one weight row per maturity required");

    std::int64_t failures = 0;
    double sum = 0.0;
    std::vector<double> strikes;
    std::vector<OptionKind> kinds;
    std::vector<std::size_t> rows;
    for (std::size_t j = 0; j < surface.maturities.size(); ++j) {
        const auto& row = surface.quotes[j];
        if (weights[j].size() != row.size())
            throw std::invalid_argument(
                "sse_iv: weight row must align with the maturity's quotes");

        strikes.clear();
        kinds.clear();
        rows.clear();
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (weights[j][i] < 0.0)
                throw std::invalid_argument("sse_iv: weights must be non-negative");
            if (weights[j][i] == 0.0) continue;
            strikes.push_back(row[i].quote.strike);
            kinds.push_back(row[i].quote.kind);
            rows.push_back(i);
        }
        if (strikes.empty()) continue;

        const std::vector<double> prices = price_european_strip(
            params, surface.env, surface.maturities[j], strikes, kinds, settings);
        for (std::size_t s = 0; s < rows.size(); ++s) {
            const SurfaceQuote& q = row[rows[s]];
            const double w = weights[j][rows[s]];
            double err;
            try {
                const double model_iv =
                    implied_vol(surface.env, q.quote.strike, q.quote.maturity,
                                q.quote.kind, prices[s], q.implied_vol);
                err = model_iv - q.implied_vol;
            } catch (const unattainable_price_error&) {
                ++failures;
                err = kIvFailurePenaltyVol;
            } catch (const iv_convergence_error&) {
                ++failures;
                err = kIvFailurePenaltyVol;
            }
            sum += w * err * err;
        }
    }
    if (inversion_failures) *inversion_failures = failures;
    return sum;
}

double ts_penalty(const BatesParams& params, const VarianceTermStructure& observed,
                  const std::vector<double>& weights) {
    return penalty_sum(params, observed, weights, observed.kind);
}

double approx_vs_penalty(const BatesParams& params,
                         const VarianceTermStructure& observed_vs,
                         const std::vector<double>& weights) {
    if (observed_vs.kind != TsKind::variance_swap)
        throw std::invalid_argument(
            "approx_vs_penalty: observed term structure must hold variance-swap "
            "levels");
    // The deliberate approximation: the model VIX^2 curve stands in for the
    // model variance-swap curve.
    return penalty_sum(params, observed_vs, weights, TsKind::vix_squared);
}

ObjectiveBreakdown joint_objective(const BatesParams& params,
                                   const VolSurface& surface,
                                   const VarianceTermStructure& observed_ts,
                                   const CalibrationConfig& config,
                                   const PricerSettings& settings) {
    const ObjectiveEvaluator evaluator(surface, observed_ts, config, settings);
    return evaluator.evaluate(params);
}

// ---------------------------------------------------------------------------
// ObjectiveEvaluator

ObjectiveEvaluator::ObjectiveEvaluator(const VolSurface& surface,
                                       const VarianceTermStructure& observed_ts,
                                       const CalibrationConfig& config,
                                       const PricerSettings& settings)
    : env_(surface.env),
      settings_(settings),
      alpha_(config.alpha),
      penalty_mode_(config.penalty_mode),
      observed_kind_(observed_ts.kind) {
    surface.validate();
    observed_ts.validate();
    settings.validate();
    // Only the config fields the objective reads are validated here; bounds
    // and optimizer settings belong to calibrate().
    if (!(std::isfinite(config.alpha) && config.alpha >= 0.0 && config.alpha <= 1.0))
        throw std::invalid_argument("ObjectiveEvaluator: alpha must lie in [0, 1]");
    config.contract_weights.validate();
    config.ts_weights.validate();
    if (surface.empty())
        throw std::invalid_argument("ObjectiveEvaluator: surface is empty");
    if (penalty_mode_ == PenaltyMode::approx_vs &&
        observed_kind_ != TsKind::variance_swap)
        throw std::invalid_argument(
            "ObjectiveEvaluator: approx_vs mode needs observed variance-swap "
            "levels");

    const auto contract_weights =
        make_contract_weights(surface, config.contract_weights);
    slices_.reserve(surface.maturities.size());
    for (std::size_t j = 0; j < surface.maturities.size(); ++j) {
        MaturitySlice slice;
        slice.maturity = surface.maturities[j];
        const auto& row = surface.quotes[j];
        slice.strikes.reserve(row.size());
        slice.kinds.reserve(row.size());
        slice.market_iv.reserve(row.size());
        for (std::size_t i = 0; i < row.size(); ++i) {
            slice.strikes.push_back(row[i].quote.strike);
            slice.kinds.push_back(row[i].quote.kind);
            slice.market_iv.push_back(row[i].implied_vol);
        }
        slice.weights = contract_weights[j];
        slices_.push_back(std::move(slice));
    }

    const auto ts_weights = make_ts_weights(observed_ts, surface, config.ts_weights);
    ts_targets_.reserve(observed_ts.points.size());
    for (std::size_t j = 0; j < observed_ts.points.size(); ++j) {
        ts_targets_.push_back({observed_ts.points[j].maturity,
                               std::sqrt(observed_ts.points[j].level),
                               ts_weights[j]});
    }

    // Market IVs seed the warm-start cache; near the optimum the model IV is
    // close to them and Newton converges in two or three steps.
    iv_hints_.reserve(slices_.size());
    for (const MaturitySlice& slice : slices_) iv_hints_.push_back(slice.market_iv);
}

double ObjectiveEvaluator::iv_leg(const BatesParams& params, std::int64_t* failures,
                                  std::vector<MaturityValue>* by_maturity) const {
    double sum = 0.0;
    for (std::size_t j = 0; j < slices_.size(); ++j) {
        const MaturitySlice& slice = slices_[j];
        double slice_sum = 0.0;
        if (!slice.strikes.empty()) {
            const std::vector<double> prices = price_european_strip(
                params, env_, slice.maturity, slice.strikes, slice.kinds,
                settings_);
            for (std::size_t i = 0; i < slice.strikes.size(); ++i) {
                double err;
                try {
                    const double model_iv = implied_vol(
                        env_, slice.strikes[i], slice.maturity, slice.kinds[i],
                        prices[i], iv_hints_[j][i]);
                    iv_hints_[j][i] = model_iv;
                    err = model_iv - slice.market_iv[i];
                } catch (const unattainable_price_error&) {
                    if (failures) ++*failures;
                    iv_hints_[j][i] = slice.market_iv[i];
                    err = kIvFailurePenaltyVol;
                } catch (const iv_convergence_error&) {
                    if (failures) ++*failures;
                    iv_hints_[j][i] = slice.market_iv[i];
                    err = kIvFailurePenaltyVol;
                }
                slice_sum += slice.weights[i] * err * err;
            }
        }
        if (by_maturity) by_maturity->push_back({slice.maturity, slice_sum});
        sum += slice_sum;
    }
    return sum;
}

double ObjectiveEvaluator::ts_leg(const BatesParams& params,
                                  std::vector<MaturityValue>* by_maturity) const {
    const TsKind model_kind = penalty_mode_ == PenaltyMode::approx_vs
                                  ? TsKind::vix_squared
                                  : observed_kind_;
    double sum = 0.0;
    for (const TsTarget& target : ts_targets_) {
        double contribution = 0.0;
        if (target.weight > 0.0) {
            const double model =
                model_ts_level(params, model_kind, target.maturity);
            const double err = std::sqrt(model) - target.sqrt_level;
            contribution = target.weight * err * err;
        }
        if (by_maturity) by_maturity->push_back({target.maturity, contribution});
        sum += contribution;
    }
    return sum;
}

ObjectiveBreakdown ObjectiveEvaluator::evaluate(const BatesParams& params) const {
    params.validate();
    ObjectiveBreakdown out;
    out.iv_sse = iv_leg(params, &out.iv_inversion_failures, &out.iv_sse_by_maturity);
    out.ts_penalty = ts_leg(params, &out.ts_penalty_by_maturity);
    out.total = alpha_ * out.iv_sse + (1.0 - alpha_) * out.ts_penalty;
    return out;
}

double ObjectiveEvaluator::total(const BatesParams& params) const {
    // Hot path: a zero-weighted leg is skipped entirely, so the alpha = 1
    // search is identical across penalty modes and alpha = 0 never prices.
    if (alpha_ == 1.0) return iv_leg(params, nullptr, nullptr);
    if (alpha_ == 0.0) return ts_leg(params, nullptr);
    return alpha_ * iv_leg(params, nullptr, nullptr) +
           (1.0 - alpha_) * ts_leg(params, nullptr);
}

}  // namespace jointcal
