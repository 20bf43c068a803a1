#include "jointcal/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <stdexcept>
#include <thread>

#include "jointcal/data_io.hpp"
#include "jointcal/variance.hpp"

namespace jointcal {

namespace {

void check_range(const DrawRange& r, const char* name) {
    if (!(std::isfinite(r.lower) && std::isfinite(r.upper) && r.lower <= r.upper))
        throw std::invalid_argument(std::string("DrawRanges: ") + name +
                                    " must satisfy lower <= upper");
}

// SplitMix64 finalizer: turns (seed, draw index) into a well-mixed engine
// seed so neighboring draw indices give unrelated streams on any platform.
std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Uniform double in [0, 1) from the top 53 bits; identical on every platform
// for a given engine state, unlike std::uniform_real_distribution.
double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

void DrawRanges::validate() const {
    check_range(v0, "v0");
    check_range(kappa, "kappa");
    check_range(theta, "theta");
    check_range(sigma_v, "sigma_v");
    check_range(rho, "rho");
    check_range(lambda, "lambda");
    check_range(mu_j, "mu_j");
    check_range(sigma_j, "sigma_j");
}

void StrikeRange::validate() const {
    if (!(std::isfinite(min) && std::isfinite(max) && std::isfinite(step)))
        throw std::invalid_argument("StrikeRange: values must be finite");
    if (!(min > 0.0 && max >= min && step > 0.0))
        throw std::invalid_argument(
            "StrikeRange: need 0 < min <= max and step > 0");
}

std::vector<double> StrikeRange::grid() const {
    validate();
    const int count = 1 + static_cast<int>((max - min) / step + 1e-9);
    std::vector<double> strikes(count);
    for (int i = 0; i < count; ++i) strikes[i] = min + i * step;
    return strikes;
}

void SimulationSpec::validate() const {
    if (n_draws < 1)
        throw std::invalid_argument("SimulationSpec: n_draws must be >= 1");
    base_params.validate();
    draw_ranges.validate();
    if (alpha_grid.empty())
        throw std::invalid_argument("SimulationSpec: alpha_grid is empty");
    for (double a : alpha_grid)
        if (!(std::isfinite(a) && a >= 0.0 && a <= 1.0))
            throw std::invalid_argument(
                "SimulationSpec: alpha_grid values must lie in [0, 1]");
    if (maturity_days.empty())
        throw std::invalid_argument("SimulationSpec: maturity_days is empty");
    for (std::size_t i = 0; i < maturity_days.size(); ++i) {
        if (maturity_days[i] <= 0)
            throw std::invalid_argument(
                "SimulationSpec: maturity_days must be positive");
        if (i > 0 && maturity_days[i] <= maturity_days[i - 1])
            throw std::invalid_argument(
                "SimulationSpec: maturity_days must be strictly increasing");
    }
    strikes.validate();
    env().validate();
    if (!(std::isfinite(min_price) && min_price >= 0.0))
        throw std::invalid_argument("SimulationSpec: min_price must be >= 0");
    optimizer.validate();
    if (!(recovery_rel_tol > 0.0 && recovery_abs_tol > 0.0))
        throw std::invalid_argument(
            "SimulationSpec: recovery tolerances must be positive");
    if (jobs < 1) throw std::invalid_argument("SimulationSpec: jobs must be >= 1");
}

std::vector<double> SimulationSpec::maturities() const {
    std::vector<double> out;
    out.reserve(maturity_days.size());
    for (int days : maturity_days) out.push_back(days / 365.0);
    return out;
}

BatesParams draw_params(const SimulationSpec& spec, int draw_index) {
    spec.validate();
    if (draw_index < 0)
        throw std::invalid_argument("draw_params: draw_index must be >= 0");

    std::mt19937_64 rng(mix64(spec.seed + 0x9E3779B97F4A7C15ULL *
                                               (static_cast<std::uint64_t>(
                                                    draw_index) +
                                                1)));
    const auto draw = [&](const DrawRange& r) {
        return r.lower + uniform01(rng) * (r.upper - r.lower);
    };
    constexpr int kMaxRetries = 64;
    for (int attempt = 0; attempt < kMaxRetries; ++attempt) {
        BatesParams p;
        p.v0 = draw(spec.draw_ranges.v0);
        p.kappa = draw(spec.draw_ranges.kappa);
        p.theta = draw(spec.draw_ranges.theta);
        p.sigma_v = draw(spec.draw_ranges.sigma_v);
        p.rho = draw(spec.draw_ranges.rho);
        p.lambda = draw(spec.draw_ranges.lambda);
        p.mu_j = draw(spec.draw_ranges.mu_j);
        p.sigma_j = draw(spec.draw_ranges.sigma_j);
        try {
            p.validate();
            return p;
        } catch (const std::invalid_argument&) {
            // Rejected draw; the next attempt continues the same stream,
            // keeping the sequence reproducible.
        }
    }
    throw std::runtime_error(
        "draw_params: no invariant-satisfying draw in 64 attempts; check "
        "draw_ranges");
}

GeneratedData generate_surface(const BatesParams& params,
                               const SimulationSpec& spec,
                               const PricerSettings& settings) {
    params.validate();
    spec.validate();
    settings.validate();

    const MarketEnv env = spec.env();
    const std::vector<double> maturities = spec.maturities();
    const std::vector<double> strike_grid = spec.strikes.grid();

    GeneratedData data;
    data.exact_vix.kind = TsKind::vix_squared;
    data.exact_vs.kind = TsKind::variance_swap;

    std::vector<SurfaceQuote> retained;
    std::vector<OptionKind> kinds(strike_grid.size());
    for (std::size_t i = 0; i < strike_grid.size(); ++i)
        kinds[i] = strike_grid[i] >= spec.spot ? OptionKind::call : OptionKind::put;

    for (double tau : maturities) {
        const double vix2 = bates_vix_squared(params, tau);
        data.exact_vix.points.push_back({tau, vix2});
        data.exact_vs.points.push_back({tau, bates_variance_swap(params, tau)});

        const std::vector<double> prices = price_european_strip(
            params, env, tau, strike_grid, kinds, settings);
        const double vix_vol = std::sqrt(vix2);
        const double fwd = env.forward(tau);
        for (std::size_t i = 0; i < strike_grid.size(); ++i) {
            if (prices[i] < spec.min_price) continue;
            SurfaceQuote sq;
            sq.quote.strike = strike_grid[i];
            sq.quote.maturity = tau;
            sq.quote.kind = kinds[i];
            sq.quote.mid = prices[i];
            sq.quote.forward = fwd;
            sq.quote.std_moneyness = standardized_moneyness(
                strike_grid[i], spec.spot, tau, vix_vol);
            sq.implied_vol = implied_vol(env, strike_grid[i], tau, kinds[i],
                                         prices[i], vix_vol);
            retained.push_back(std::move(sq));
        }
    }

    data.surface = VolSurface::build(env, std::move(retained));
    return data;
}

BucketMae bucket_errors(const std::vector<QuoteError>& errors) {
    double sums[3] = {0.0, 0.0, 0.0};
    std::int64_t counts[3] = {0, 0, 0};
    for (const QuoteError& e : errors) {
        const double k = std::abs(e.std_moneyness);
        const int bucket = k < 1.0 ? 0 : (k < 2.0 ? 1 : 2);
        sums[bucket] += e.abs_iv_error;
        ++counts[bucket];
    }
    BucketMae out;
    // Reported in volatility percentage points (inputs are decimal vols).
    if (counts[0] > 0) out.atm = 100.0 * sums[0] / counts[0];
    if (counts[1] > 0) out.otm = 100.0 * sums[1] / counts[1];
    if (counts[2] > 0) out.dotm = 100.0 * sums[2] / counts[2];
    return out;
}

std::vector<QuoteError> quote_errors(const BatesParams& fitted,
                                     const VolSurface& surface,
                                     const PricerSettings& settings) {
    surface.validate();
    std::vector<QuoteError> out;
    out.reserve(surface.total_quotes());
    std::vector<double> strikes;
    std::vector<OptionKind> kinds;
    for (std::size_t j = 0; j < surface.maturities.size(); ++j) {
        const auto& row = surface.quotes[j];
        if (row.empty()) continue;
        strikes.clear();
        kinds.clear();
        for (const SurfaceQuote& q : row) {
            strikes.push_back(q.quote.strike);
            kinds.push_back(q.quote.kind);
        }
        const auto prices = price_european_strip(
            fitted, surface.env, surface.maturities[j], strikes, kinds, settings);
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (!row[i].quote.std_moneyness)
                throw std::invalid_argument(
                    "quote_errors: quotes need standardized moneyness");
            QuoteError e;
            e.std_moneyness = *row[i].quote.std_moneyness;
            try {
                const double model_iv = implied_vol(
                    surface.env, strikes[i], surface.maturities[j], kinds[i],
                    prices[i], row[i].implied_vol);
                e.abs_iv_error = std::abs(model_iv - row[i].implied_vol);
            } catch (const std::exception&) {
                e.abs_iv_error = kIvFailurePenaltyVol;
            }
            out.push_back(e);
        }
    }
    return out;
}

bool exactly_recovered(const BatesParams& fitted, const BatesParams& truth,
                       double rel_tol, double abs_tol) {
    const auto rel_ok = [rel_tol](double fit, double ref) {
        return std::abs(fit - ref) <= rel_tol * std::max(std::abs(ref), 1e-12);
    };
    const auto abs_ok = [abs_tol](double fit, double ref) {
        return std::abs(fit - ref) <= abs_tol;
    };
    return rel_ok(fitted.v0, truth.v0) && rel_ok(fitted.kappa, truth.kappa) &&
           rel_ok(fitted.theta, truth.theta) &&
           rel_ok(fitted.sigma_v, truth.sigma_v) &&
           abs_ok(fitted.rho, truth.rho) &&
           rel_ok(fitted.lambda, truth.lambda) &&
           abs_ok(fitted.mu_j, truth.mu_j) &&
           rel_ok(fitted.sigma_j, truth.sigma_j);
}

// ---------------------------------------------------------------------------
// The full study.

namespace {

// Search box for the calibrations: the draw ranges widened by 5% of their
// width plus a small floor (so degenerate single-point ranges still give the
// optimizer room), clipped to the hard parameter invariants.
ParamBounds study_bounds(const DrawRanges& ranges) {
    const auto widen = [](const DrawRange& r) {
        const double pad =
            0.05 * (r.upper - r.lower) +
            1e-3 * std::max({1.0, std::abs(r.lower), std::abs(r.upper)});
        return DrawRange{r.lower - pad, r.upper + pad};
    };
    const DrawRange v0 = widen(ranges.v0), kappa = widen(ranges.kappa),
                    theta = widen(ranges.theta), sigma_v = widen(ranges.sigma_v),
                    rho = widen(ranges.rho), lambda = widen(ranges.lambda),
                    mu_j = widen(ranges.mu_j), sigma_j = widen(ranges.sigma_j);

    ParamBounds b;
    b.lower.v0 = std::max(v0.lower, 1e-6);
    b.lower.kappa = std::max(kappa.lower, 1e-6);
    b.lower.theta = std::max(theta.lower, 1e-6);
    b.lower.sigma_v = std::max(sigma_v.lower, 1e-6);
    b.lower.rho = std::max(rho.lower, -1.0);
    b.lower.lambda = std::max(lambda.lower, 0.0);
    b.lower.mu_j = std::max(mu_j.lower, -0.999);
    b.lower.sigma_j = std::max(sigma_j.lower, 0.0);
    b.upper.v0 = v0.upper;
    b.upper.kappa = kappa.upper;
    b.upper.theta = theta.upper;
    b.upper.sigma_v = sigma_v.upper;
    b.upper.rho = std::min(rho.upper, 1.0);
    b.upper.lambda = lambda.upper;
    b.upper.mu_j = mu_j.upper;
    b.upper.sigma_j = sigma_j.upper;
    return b;
}

struct AlphaOutcome {
    bool ok = false;
    bool recovered = false;
    std::vector<QuoteError> errors;
    std::vector<double> vix_abs_error;  // per maturity, decimal vol units
};

struct DrawOutcome {
    bool generated = false;
    std::vector<AlphaOutcome> per_alpha;
};

DrawOutcome run_one_draw(const SimulationSpec& spec, int draw_index,
                         const ParamBounds& bounds,
                         const PricerSettings& settings) {
    DrawOutcome outcome;
    outcome.per_alpha.resize(spec.alpha_grid.size());

    BatesParams truth;
    GeneratedData data;
    try {
        truth = draw_params(spec, draw_index);
        data = generate_surface(truth, spec, settings);
        if (data.surface.empty()) return outcome;
    } catch (const std::exception&) {
        return outcome;
    }
    outcome.generated = true;

    const std::vector<double> maturities = spec.maturities();
    for (std::size_t a = 0; a < spec.alpha_grid.size(); ++a) {
        CalibrationConfig config;
        config.alpha = spec.alpha_grid[a];
        config.bounds = bounds;
        config.initial_guess = spec.base_params;
        config.optimizer = spec.optimizer;
        if (spec.mode == StudyMode::exact_vix) {
            config.ts_kind = TsKind::vix_squared;
            config.penalty_mode = PenaltyMode::exact;
        } else {
            config.ts_kind = TsKind::variance_swap;
            config.penalty_mode = PenaltyMode::approx_vs;
        }
        config.seed =
            mix64(mix64(spec.seed + 0x9E3779B97F4A7C15ULL *
                                        (static_cast<std::uint64_t>(draw_index) +
                                         1)) +
                  a + 1);
        const VarianceTermStructure& observed =
            spec.mode == StudyMode::exact_vix ? data.exact_vix : data.exact_vs;

        AlphaOutcome& slot = outcome.per_alpha[a];
        try {
            const CalibrationResult fit =
                calibrate(data.surface, observed, config, settings);
            slot.ok = true;
            slot.recovered = exactly_recovered(fit.params, truth,
                                               spec.recovery_rel_tol,
                                               spec.recovery_abs_tol);
            slot.errors = quote_errors(fit.params, data.surface, settings);
            slot.vix_abs_error.reserve(maturities.size());
            for (std::size_t m = 0; m < maturities.size(); ++m) {
                const double model =
                    bates_vix_squared(fit.params, maturities[m]);
                slot.vix_abs_error.push_back(
                    std::abs(std::sqrt(model) -
                             std::sqrt(data.exact_vix.points[m].level)));
            }
        } catch (const std::exception&) {
            slot.ok = false;
        }
    }
    return outcome;
}

}  // namespace

RecoverySummary run_recovery_study(const SimulationSpec& spec,
                                   const PricerSettings& settings) {
    spec.validate();
    settings.validate();
    const ParamBounds bounds = study_bounds(spec.draw_ranges);

    std::vector<DrawOutcome> outcomes(spec.n_draws);
    const int workers = std::max(1, std::min(spec.jobs, spec.n_draws));
    if (workers == 1) {
        for (int d = 0; d < spec.n_draws; ++d)
            outcomes[d] = run_one_draw(spec, d, bounds, settings);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (int d = next.fetch_add(1); d < spec.n_draws;
                     d = next.fetch_add(1))
                    outcomes[d] = run_one_draw(spec, d, bounds, settings);
            });
        }
        for (std::thread& t : pool) t.join();
    }

    const std::vector<double> maturities = spec.maturities();
    RecoverySummary summary;
    summary.mode = spec.mode;
    summary.n_draws = spec.n_draws;
    summary.seed = spec.seed;
    summary.per_alpha.reserve(spec.alpha_grid.size());

    for (std::size_t a = 0; a < spec.alpha_grid.size(); ++a) {
        AlphaSummary row;
        row.alpha = spec.alpha_grid[a];
        std::vector<QuoteError> pooled;
        std::vector<double> vix_sums(maturities.size(), 0.0);
        int used = 0, recovered = 0;
        for (const DrawOutcome& outcome : outcomes) {  // draw order: deterministic
            const AlphaOutcome* slot =
                outcome.generated ? &outcome.per_alpha[a] : nullptr;
            if (!slot || !slot->ok) continue;
            ++used;
            if (slot->recovered) ++recovered;
            pooled.insert(pooled.end(), slot->errors.begin(), slot->errors.end());
            for (std::size_t m = 0; m < maturities.size(); ++m)
                vix_sums[m] += slot->vix_abs_error[m];
        }
        row.draws_used = used;
        row.failures = spec.n_draws - used;
        row.recovery_rate = used > 0 ? static_cast<double>(recovered) / used : 0.0;
        row.iv_mae = bucket_errors(pooled);
        row.vix_error_by_maturity.reserve(maturities.size());
        for (std::size_t m = 0; m < maturities.size(); ++m)
            row.vix_error_by_maturity.push_back(
                {maturities[m], used > 0 ? 100.0 * vix_sums[m] / used : 0.0});
        summary.per_alpha.push_back(std::move(row));
    }
    return summary;
}

}  // namespace jointcal
