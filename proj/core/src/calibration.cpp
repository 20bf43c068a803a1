#include "jointcal/calibration.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <thread>
#include <tuple>
#include <utility>

#include "jointcal/nelder_mead.hpp"
#include "jointcal/variance.hpp"

namespace jointcal {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

constexpr std::array<double BatesParams::*, 8> kFields = {
    &BatesParams::v0,     &BatesParams::kappa, &BatesParams::theta,
    &BatesParams::sigma_v, &BatesParams::rho,   &BatesParams::lambda,
    &BatesParams::mu_j,   &BatesParams::sigma_j};

constexpr double kUnitClamp = 1e-12;  // open-interval guard for logit/sigmoid

double stable_sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

}  // namespace

// ---------------------------------------------------------------------------
// ParamTransform

ParamTransform::ParamTransform(const ParamBounds& bounds) {
    bounds.validate();
    constexpr Component::Map maps[8] = {
        Component::Map::log,      Component::Map::log,
        Component::Map::log,      Component::Map::log,
        Component::Map::identity, Component::Map::identity,
        Component::Map::log1p,    Component::Map::identity};
    for (int i = 0; i < dimension; ++i) {
        const double lo = bounds.lower.*kFields[i];
        const double hi = bounds.upper.*kFields[i];
        auto g = [&](double x) {
            switch (maps[i]) {
                case Component::Map::log: return std::log(x);
                case Component::Map::log1p: return std::log1p(x);
                default: return x;
            }
        };
        components_[i] = {maps[i], g(lo), g(hi)};
    }
}

std::vector<double> ParamTransform::to_unconstrained(
    const BatesParams& params) const {
    std::vector<double> z(dimension);
    for (int i = 0; i < dimension; ++i) {
        const Component& c = components_[i];
        const double x = params.*kFields[i];
        double gx;
        switch (c.map) {
            case Component::Map::log: gx = std::log(x); break;
            case Component::Map::log1p: gx = std::log1p(x); break;
            default: gx = x;
        }
        double u = (gx - c.g_lo) / (c.g_hi - c.g_lo);
        u = std::clamp(u, kUnitClamp, 1.0 - kUnitClamp);
        z[i] = std::log(u / (1.0 - u));
    }
    return z;
}

BatesParams ParamTransform::to_params(const std::vector<double>& z) const {
    if (z.size() != static_cast<std::size_t>(dimension))
        throw std::invalid_argument("ParamTransform: expected 8 coordinates");
    BatesParams params;
    for (int i = 0; i < dimension; ++i) {
        const Component& c = components_[i];
        const double u = std::clamp(stable_sigmoid(z[i]), kUnitClamp,
                                    1.0 - kUnitClamp);
        const double gx = c.g_lo + u * (c.g_hi - c.g_lo);
        double x;
        switch (c.map) {
            case Component::Map::log: x = std::exp(gx); break;
            case Component::Map::log1p: x = std::expm1(gx); break;
            default: x = gx;
        }
        params.*kFields[i] = x;
    }
    return params;
}

// ---------------------------------------------------------------------------
// calibrate

namespace {

// Thrown by the counting wrapper when the evaluation budget is spent; the
// driver catches it and returns the best point seen. Keeping the per-phase
// optimizer runs budget-unaware makes the whole search trajectory a pure
// function of (config minus budget), truncated at max_evaluations — so a
// larger budget replays the same evaluations and can only extend them.
struct BudgetExhausted {};

// Per-start slice ceiling: budget beyond restarts * cap funds the refinement
// continuation instead of longer per-start descents. Past the cap the starts'
// trajectories are frozen, so extra effort extends only the refinement.
constexpr std::int64_t kStartBudgetCap = 6000;
// Fresh-simplex rounds: each restarts the simplex at the incumbent with a
// tighter spread to approach the valley floor; the direction-set refinement
// then finishes the job. The start schedule is sized to complete (rounds and
// polish) within the slice cap; the refinement schedule re-opens with a full
// fresh simplex, which doubles as an escape move from the winner's stall.
constexpr double kStartSteps[] = {1.0, 0.3, 0.1, 0.03};
constexpr int kStartRounds =
    static_cast<int>(sizeof(kStartSteps) / sizeof(kStartSteps[0]));
constexpr std::int64_t kStartPhaseCap = 1200;
constexpr double kRefineSteps[] = {1.0, 0.5, 0.25, 0.12, 0.06, 0.03, 0.015};
constexpr int kRefineRounds =
    static_cast<int>(sizeof(kRefineSteps) / sizeof(kRefineSteps[0]));
constexpr std::int64_t kRefinePhaseCap = 1500;

constexpr int kDirectionSetMaxSweeps = 24;
constexpr double kLineSearchStep = 0.02;  // initial bracketing step
constexpr double kLineSearchTol = 1e-9;   // abscissa tolerance per line search
constexpr double kLineSearchSpan = 50.0;  // hard cap on |t| while bracketing

// After the first full descent, each start probes the adjacent sections of
// the jump-intensity valley. The joint objective is nearly degenerate along a
// curve that trades jump intensity against per-jump magnitude (lambda up,
// jumps smaller) while leaving both the smile and the variance term structure
// almost unchanged; descents stall in shallow local minima dotted along that
// valley, typically one section away from the global one. Each probe shifts
// the transformed intensity coordinate, rescales the jump moments to preserve
// the total jump variance, and re-descends in full dimension; a probe that
// undercuts the incumbent earns the finishing descent.
constexpr int kIntensityIndex = 5;  // position of lambda in the transform order
constexpr double kValleyOffsets[] = {-0.7, 0.7};
constexpr int kValleyOffsetCount =
    static_cast<int>(sizeof(kValleyOffsets) / sizeof(kValleyOffsets[0]));
constexpr double kProbeSteps[] = {0.1, 0.04, 0.015};
constexpr int kProbeRounds =
    static_cast<int>(sizeof(kProbeSteps) / sizeof(kProbeSteps[0]));
constexpr std::int64_t kProbePhaseCap = 1200;
constexpr double kProbeSkipThreshold = 1e-16;
// A probe descent is much shorter than the polish that produced the
// incumbent, so a probe that lands within this factor of the incumbent may
// still sit in a deeper valley section; it earns the finishing descent.
constexpr double kProbeSlack = 1e3;
constexpr double kBranchSteps[] = {0.05, 0.02, 0.008};
constexpr int kBranchRounds =
    static_cast<int>(sizeof(kBranchSteps) / sizeof(kBranchSteps[0]));
constexpr std::int64_t kBranchPhaseCap = 1200;
constexpr double kFinishSteps[] = {0.01};
constexpr int kFinishRounds =
    static_cast<int>(sizeof(kFinishSteps) / sizeof(kFinishSteps[0]));
constexpr std::int64_t kFinishPhaseCap = 1200;

// One-dimensional minimization on a bracketing triple a < b < c (or c < b < a)
// with phi(b) below both ends: Brent's golden-section/parabolic hybrid.
template <typename Phi>
std::pair<double, double> brent_min(const Phi& phi, double a, double b, double c,
                                    double fb, double tol) {
    constexpr double kGoldenSection = 0.3819660112501051;  // 2 - golden ratio
    double lo = std::min(a, c), hi = std::max(a, c);
    double x = b, w = b, v = b;
    double fx = fb, fw = fb, fv = fb;
    double d = 0.0, e = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
        const double mid = 0.5 * (lo + hi);
        const double tol1 = tol * std::abs(x) + 1e-12;
        const double tol2 = 2.0 * tol1;
        if (std::abs(x - mid) <= tol2 - 0.5 * (hi - lo)) break;
        bool take_golden = true;
        if (std::abs(e) > tol1) {
            // Parabola through (x, w, v); accept the vertex only if it lands
            // inside the interval and halves the step of two iterations ago.
            const double r = (x - w) * (fx - fv);
            double q = (x - v) * (fx - fw);
            double p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if (q > 0.0) p = -p;
            q = std::abs(q);
            const double e_old = e;
            e = d;
            if (std::abs(p) < std::abs(0.5 * q * e_old) && p > q * (lo - x) &&
                p < q * (hi - x)) {
                d = p / q;
                const double u = x + d;
                if (u - lo < tol2 || hi - u < tol2)
                    d = std::copysign(tol1, mid - x);
                take_golden = false;
            }
        }
        if (take_golden) {
            e = (x >= mid ? lo : hi) - x;
            d = kGoldenSection * e;
        }
        const double u = std::abs(d) >= tol1 ? x + d : x + std::copysign(tol1, d);
        const double fu = phi(u);
        if (fu <= fx) {
            if (u >= x) lo = x;
            else hi = x;
            v = w, fv = fw;
            w = x, fw = fx;
            x = u, fx = fu;
        } else {
            if (u < x) lo = u;
            else hi = u;
            if (fu <= fw || w == x) {
                v = w, fv = fw;
                w = u, fw = fu;
            } else if (fu <= fv || v == x || v == w) {
                v = u, fv = fu;
            }
        }
    }
    return {x, fx};
}

// Minimizes the objective along x + t*u, updating (x, fx) in place; returns
// the (non-negative) improvement. Brackets by doubling away from the incumbent.
template <typename F>
double line_minimize(const F& f, std::vector<double>& x, double& fx,
                     const std::vector<double>& u) {
    const std::size_t n = x.size();
    const auto phi = [&](double t) {
        std::vector<double> point(n);
        for (std::size_t i = 0; i < n; ++i) point[i] = x[i] + t * u[i];
        return f(point);
    };

    const double f0 = fx;
    double b = kLineSearchStep, fb = phi(b);
    if (fb >= f0) {
        const double f_minus = phi(-kLineSearchStep);
        if (f_minus >= f0) {
            // Incumbent already below both probes: (-h, 0, +h) brackets.
            const auto [t_star, f_star] =
                brent_min(phi, -kLineSearchStep, 0.0, kLineSearchStep, f0,
                          kLineSearchTol);
            if (f_star < fx) {
                for (std::size_t i = 0; i < n; ++i) x[i] += t_star * u[i];
                fx = f_star;
            }
            return f0 - fx;
        }
        b = -kLineSearchStep;
        fb = f_minus;
    }

    // Walk downhill, doubling the abscissa until the middle point is lowest.
    double a = 0.0, fa = f0;
    double c = 2.0 * b, fc = phi(c);
    for (int guard = 0; fc < fb && std::abs(c) < kLineSearchSpan && guard < 40;
         ++guard) {
        a = b, fa = fb;
        b = c, fb = fc;
        c = 2.0 * c;
        fc = phi(c);
    }
    (void)fa;

    double t_star, f_star;
    if (fc < fb) {
        // Span cap hit while still descending: take the farthest point probed.
        t_star = c, f_star = fc;
    } else {
        std::tie(t_star, f_star) = brent_min(phi, a, b, c, fb, kLineSearchTol);
    }
    if (f_star < fx) {
        for (std::size_t i = 0; i < n; ++i) x[i] += t_star * u[i];
        fx = f_star;
    }
    return f0 - fx;
}

// Direction-set (Powell) refinement from the incumbent. The simplex rounds
// above stall in the narrow curved valleys of a jointly-fit objective;
// successive line minimizations with conjugate direction updates dig out the
// remaining digits. Returns true when a sweep's improvement fell below the
// stall floor (natural completion), false when the sweep cap ran out.
template <typename F>
bool direction_set_polish(const F& f, std::vector<double>& x, double& fx,
                          int max_sweeps = kDirectionSetMaxSweeps) {
    const std::size_t n = x.size();
    std::vector<std::vector<double>> dirs(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) dirs[i][i] = 1.0;

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        const double f_start = fx;
        const std::vector<double> x_start = x;
        double biggest_drop = 0.0;
        std::size_t biggest = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double drop = line_minimize(f, x, fx, dirs[i]);
            if (drop > biggest_drop) {
                biggest_drop = drop;
                biggest = i;
            }
        }
        // The early sweeps zigzag down a curved valley with small absolute
        // gains before the conjugate directions form, so the stall test must
        // be relative to the current objective level, not an absolute floor.
        const double floor = std::max(1e-18, 1e-6 * std::abs(fx));
        if (f_start - fx <= floor) return true;

        // Powell's replacement test: probe the point reflected through the
        // sweep displacement; only a genuinely new descent direction is kept.
        std::vector<double> probe(n), displacement(n);
        double norm = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            displacement[i] = x[i] - x_start[i];
            probe[i] = 2.0 * x[i] - x_start[i];
            norm += displacement[i] * displacement[i];
        }
        norm = std::sqrt(norm);
        if (norm < 1e-15) continue;
        const double f_probe = f(probe);
        if (f_probe < f_start) {
            const double sq_drop = f_start - fx - biggest_drop;
            const double test =
                2.0 * (f_start - 2.0 * fx + f_probe) * sq_drop * sq_drop -
                biggest_drop * (f_start - f_probe) * (f_start - f_probe);
            if (test < 0.0) {
                for (double& component : displacement) component /= norm;
                line_minimize(f, x, fx, displacement);
                dirs[biggest] = dirs[n - 1];
                dirs[n - 1] = displacement;
            }
        }
    }
    return false;
}

std::vector<MaturityValue> iv_mae_by_maturity(const BatesParams& params,
                                              const VolSurface& surface,
                                              const PricerSettings& settings) {
    std::vector<MaturityValue> out;
    out.reserve(surface.maturities.size());
    std::vector<double> strikes;
    std::vector<OptionKind> kinds;
    for (std::size_t j = 0; j < surface.maturities.size(); ++j) {
        const auto& row = surface.quotes[j];
        strikes.clear();
        kinds.clear();
        for (const SurfaceQuote& q : row) {
            strikes.push_back(q.quote.strike);
            kinds.push_back(q.quote.kind);
        }
        double sum_abs = 0.0;
        if (!row.empty()) {
            const auto prices = price_european_strip(
                params, surface.env, surface.maturities[j], strikes, kinds,
                settings);
            for (std::size_t i = 0; i < row.size(); ++i) {
                try {
                    const double model_iv = implied_vol(
                        surface.env, strikes[i], surface.maturities[j], kinds[i],
                        prices[i], row[i].implied_vol);
                    sum_abs += std::abs(model_iv - row[i].implied_vol);
                } catch (const std::exception&) {
                    sum_abs += kIvFailurePenaltyVol;
                }
            }
            sum_abs /= static_cast<double>(row.size());
        }
        out.push_back({surface.maturities[j], sum_abs});
    }
    return out;
}

std::vector<MaturityValue> ts_abs_error_by_maturity(
    const BatesParams& params, const VarianceTermStructure& observed,
    PenaltyMode mode) {
    const TsKind model_kind =
        mode == PenaltyMode::approx_vs ? TsKind::vix_squared : observed.kind;
    std::vector<MaturityValue> out;
    out.reserve(observed.points.size());
    for (const TsPoint& point : observed.points) {
        const double model =
            model_kind == TsKind::vix_squared
                ? bates_vix_squared(params, point.maturity)
                : bates_variance_swap(params, point.maturity);
        out.push_back(
            {point.maturity, std::abs(std::sqrt(model) - std::sqrt(point.level))});
    }
    return out;
}

// One multistart unit: it owns its evaluator (and thus its implied-vol
// warm-start cache), its optimizer state, and its slice of the evaluation
// budget, so concurrent starts cannot affect each other's trajectory.
struct StartOutcome {
    double fx = kInf;
    std::vector<double> z;
    std::int64_t used = 0;
    std::int64_t best_eval = -1;  // 1-based serial within this start's stream
    bool converged = false;
};

StartOutcome run_start(const VolSurface& surface,
                       const VarianceTermStructure& observed_ts,
                       const CalibrationConfig& config,
                       const PricerSettings& settings,
                       const ParamTransform& transform,
                       const std::vector<double>& start,
                       std::int64_t budget, bool probe_valley) {
    StartOutcome out;
    if (budget <= 0) return out;
    const ObjectiveEvaluator evaluator(surface, observed_ts, config, settings);

    const auto objective = [&](const std::vector<double>& z) -> double {
        if (out.used >= budget) throw BudgetExhausted{};
        ++out.used;
        double fx;
        try {
            fx = evaluator.total(transform.to_params(z));
        } catch (const std::domain_error&) {
            fx = kInf;  // e.g. non-physical model VIX level
        }
        if (!std::isfinite(fx)) fx = kInf;
        if (fx < out.fx) {
            out.fx = fx;
            out.z = z;
            out.best_eval = out.used;
        }
        return fx;
    };

    struct DescentResult {
        std::vector<double> x;
        double fx = kInf;
        bool stalled = false;
    };

    // Simplex rounds with successively tighter fresh starts, then the
    // direction-set refinement; `stalled` reports natural completion
    // (tolerance satisfied rather than budget spent). Zero polish sweeps
    // skips the refinement (used for cheap branch triage).
    const auto descend = [&](std::vector<double> x, const double* steps,
                             int rounds, std::int64_t phase_cap,
                             int polish_sweeps) -> DescentResult {
        double incumbent = kInf;
        for (int round = 0; round < rounds; ++round) {
            NelderMeadOptions nm_options;
            nm_options.rel_objective_tol = config.optimizer.tolerance;
            nm_options.simplex_diameter_tol = 1e-8;
            nm_options.max_evaluations = phase_cap;
            nm_options.initial_step = steps[round];

            const NelderMeadResult run = nelder_mead(objective, x, nm_options);
            const double improvement = incumbent - run.fx;
            const double floor = std::max(
                1e-14,
                config.optimizer.tolerance * std::max(1.0, std::abs(run.fx)));
            x = run.x;
            incumbent = run.fx;
            if (run.converged && improvement <= floor) break;
        }
        DescentResult result;
        result.stalled =
            polish_sweeps > 0 &&
            direction_set_polish(objective, x, incumbent, polish_sweeps);
        result.x = std::move(x);
        result.fx = incumbent;
        return result;
    };

    // Warm start for a valley probe at intensity coordinate `zl`: the jump
    // moments are rescaled by 1/sqrt(lambda ratio) so the total jump variance
    // matches the incumbent's, which is roughly what the degenerate valley
    // preserves. Out-of-bounds components saturate in z and the subsequent
    // descent walks them back inside.
    const auto valley_start = [&](const std::vector<double>& center,
                                  double zl) {
        const BatesParams at_center = transform.to_params(center);
        std::vector<double> shifted = center;
        shifted[kIntensityIndex] = zl;
        BatesParams p = transform.to_params(shifted);
        const double ratio = std::clamp(
            p.lambda / std::max(at_center.lambda, 1e-12), 1e-3, 1e3);
        const double scale = 1.0 / std::sqrt(ratio);
        p.sigma_j = at_center.sigma_j * scale;
        p.mu_j = std::expm1(scale * std::log1p(at_center.mu_j));
        std::vector<double> z = transform.to_unconstrained(p);
        z[kIntensityIndex] = zl;
        return z;
    };

    // Attribution of the converged flag: it describes the descent that
    // produced the best point, so it is rewritten whenever a descent improves
    // on the incumbent and cleared when the budget truncates such a descent.
    std::int64_t descent_first_eval = out.used + 1;
    try {
        const DescentResult first =
            probe_valley
                ? descend(start, kRefineSteps, kRefineRounds, kRefinePhaseCap,
                          kDirectionSetMaxSweeps)
                : descend(start, kStartSteps, kStartRounds, kStartPhaseCap,
                          kDirectionSetMaxSweeps);
        if (out.best_eval >= descent_first_eval) out.converged = first.stalled;

        // Valley probes: deep full-dimensional descents from the warm starts
        // one section to either side of the incumbent; the winning probe
        // earns the finishing descent. An incumbent already far below the
        // stall plateau is a solved fit, so the probes are skipped.
        if (probe_valley && out.best_eval >= 0 &&
            out.fx > kProbeSkipThreshold) {
            const std::vector<double> center = out.z;
            const double center_fx = out.fx;
            const double center_zl = center[kIntensityIndex];

            DescentResult best_probe;
            for (int probe = 0; probe < kValleyOffsetCount; ++probe) {
                const double zl = center_zl + kValleyOffsets[probe];
                descent_first_eval = out.used + 1;
                DescentResult r = descend(valley_start(center, zl),
                                          kProbeSteps, kProbeRounds,
                                          kProbePhaseCap, 0);
                if (r.fx < best_probe.fx) best_probe = std::move(r);
            }

            if (best_probe.fx < center_fx * kProbeSlack) {
                descent_first_eval = out.used + 1;
                const DescentResult branch =
                    descend(best_probe.x, kBranchSteps, kBranchRounds,
                            kBranchPhaseCap, kDirectionSetMaxSweeps);
                if (out.best_eval >= descent_first_eval)
                    out.converged = branch.stalled;
            }

            // Finishing pass: when the probes leave the incumbent standing
            // and budget remains, re-polish once at the finest scale — the
            // fresh simplex and fresh direction set often squeeze out the
            // last decade the first polish left behind.
            if (out.fx > kProbeSkipThreshold) {
                descent_first_eval = out.used + 1;
                const DescentResult last =
                    descend(out.z, kFinishSteps, kFinishRounds,
                            kFinishPhaseCap, kDirectionSetMaxSweeps);
                if (out.best_eval >= descent_first_eval)
                    out.converged = last.stalled;
            }
        }
    } catch (const BudgetExhausted&) {
        // Keep the best point seen; clear the flag only when the truncated
        // descent is the one that produced it.
        if (out.best_eval >= descent_first_eval) out.converged = false;
    }
    return out;
}

}  // namespace

CalibrationResult calibrate(const VolSurface& surface,
                            const VarianceTermStructure& observed_ts,
                            const CalibrationConfig& config,
                            const PricerSettings& settings) {
    config.validate();
    const ParamTransform transform(config.bounds);

    // Start points: the configured guess, then seed-derived perturbations of
    // it in transformed coordinates.
    const std::vector<double> z0 = transform.to_unconstrained(config.initial_guess);
    std::vector<std::vector<double>> starts;
    starts.push_back(z0);
    for (int s = 1; s < config.optimizer.restarts; ++s) {
        std::seed_seq seq{config.seed, static_cast<std::uint64_t>(s)};
        std::mt19937_64 rng(seq);
        std::vector<double> z = z0;
        for (double& coordinate : z) {
            // Portable uniform in (-2, 2): top 53 bits of the draw.
            const double u =
                static_cast<double>(rng() >> 11) * 0x1.0p-53;
            coordinate += 4.0 * u - 2.0;
        }
        starts.push_back(std::move(z));
    }

    // Budget slices: each start gets an equal share capped at a fixed
    // per-start allotment; whatever the cap releases funds the refinement
    // stage below. Every slice is a nondecreasing function of
    // max_evaluations, and beyond the cap extra budget flows only to the
    // refinement, whose starting point is then frozen — so best-so-far
    // results stay monotone in effort. (The lead start always gets at least
    // one evaluation so the result can be compared against the initial
    // guess.)
    const std::int64_t total_budget = config.optimizer.max_evaluations;
    const std::int64_t n_starts = static_cast<std::int64_t>(starts.size());
    std::vector<std::int64_t> budgets(
        starts.size(),
        std::min<std::int64_t>(kStartBudgetCap, total_budget / n_starts));
    budgets[0] = std::max<std::int64_t>(budgets[0], 1);

    // The starts run concurrently; each owns its optimizer state, so the
    // thread schedule cannot affect any trajectory. The reduction below picks
    // the minimum objective, ties resolved to the lowest start index.
    std::vector<StartOutcome> outcomes(starts.size());
    std::vector<std::exception_ptr> failures(starts.size());
    {
        std::vector<std::thread> pool;
        pool.reserve(starts.size());
        for (std::size_t s = 0; s < starts.size(); ++s) {
            pool.emplace_back([&, s] {
                try {
                    outcomes[s] = run_start(surface, observed_ts, config,
                                            settings, transform, starts[s],
                                            budgets[s], false);
                } catch (...) {
                    failures[s] = std::current_exception();
                }
            });
        }
        for (std::thread& worker : pool) worker.join();
    }
    for (const std::exception_ptr& failure : failures)
        if (failure) std::rethrow_exception(failure);

    std::int64_t evaluations = 0;
    int winner = -1;
    double best_fx = kInf;
    for (std::size_t s = 0; s < outcomes.size(); ++s) {
        evaluations += outcomes[s].used;
        if (outcomes[s].best_eval >= 0 && outcomes[s].fx < best_fx) {
            best_fx = outcomes[s].fx;
            winner = static_cast<int>(s);
        }
    }

    // Refinement stage: the budget left over after the capped slices goes to
    // a single continuation from the reduced winner (or from the configured
    // guess if nothing finite emerged). This is where the valley probes run —
    // once, on the best point, instead of once per start.
    const std::int64_t spent_on_starts =
        std::accumulate(budgets.begin(), budgets.end(), std::int64_t{0});
    const std::int64_t refine_budget = total_budget - spent_on_starts;
    bool refined = false;
    StartOutcome refined_outcome;
    if (refine_budget > 0) {
        const std::vector<double> from = winner >= 0 ? outcomes[winner].z : z0;
        refined_outcome = run_start(surface, observed_ts, config, settings,
                                    transform, from, refine_budget, true);
        evaluations += refined_outcome.used;
        if (refined_outcome.best_eval >= 0 && refined_outcome.fx < best_fx) {
            best_fx = refined_outcome.fx;
            refined = true;
        }
    }

    if ((winner < 0 && !refined) || !std::isfinite(best_fx))
        throw calibration_error(
            "calibrate: no finite objective value in " +
            std::to_string(evaluations) + " evaluations from " +
            std::to_string(starts.size()) + " start(s)");

    const StartOutcome& final_outcome =
        refined ? refined_outcome : outcomes[winner];
    const BatesParams best = transform.to_params(final_outcome.z);
    // Fresh evaluator for the reporting pass: breakdown numbers must not
    // depend on whichever warm-start cache happened to win.
    const ObjectiveEvaluator evaluator(surface, observed_ts, config, settings);
    const ObjectiveBreakdown breakdown = evaluator.evaluate(best);

    CalibrationResult result;
    result.params = best;
    result.objective_value = best_fx;
    result.iv_sse = breakdown.iv_sse;
    result.ts_penalty = breakdown.ts_penalty;
    result.iv_mae_by_maturity = iv_mae_by_maturity(best, surface, settings);
    result.ts_error_by_maturity =
        ts_abs_error_by_maturity(best, observed_ts, config.penalty_mode);
    result.converged = final_outcome.converged;
    result.evaluations = evaluations;
    result.iv_inversion_failures = breakdown.iv_inversion_failures;
    return result;
}

// ---------------------------------------------------------------------------
// SJD univariate reductions

std::function<double(double)> sjd_lambda_from_vs(double vs_mkt, double sigma) {
    if (!(std::isfinite(vs_mkt) && std::isfinite(sigma) && sigma > 0.0))
        throw std::invalid_argument(
            "sjd_lambda_from_vs: need finite vs_mkt and sigma > 0");
    const double excess = vs_mkt - sigma * sigma;
    if (excess <= 0.0)
        throw std::domain_error(
            "sjd_lambda_from_vs: no jump variance (vs_mkt <= sigma^2)");
    return [excess](double jump) {
        if (jump == 0.0)
            throw std::domain_error("sjd_lambda_from_vs: singular at J = 0");
        return excess / (jump * jump);
    };
}

std::function<double(double)> sjd_lambda_from_vix(double vix2_mkt, double sigma) {
    if (!(std::isfinite(vix2_mkt) && std::isfinite(sigma) && sigma > 0.0))
        throw std::invalid_argument(
            "sjd_lambda_from_vix: need finite vix2_mkt and sigma > 0");
    const double excess = vix2_mkt - sigma * sigma;
    if (excess <= 0.0)
        throw std::domain_error(
            "sjd_lambda_from_vix: inconsistent VIX level (vix2_mkt <= sigma^2)");
    return [excess](double jump) {
        if (jump == 0.0)
            throw std::domain_error("sjd_lambda_from_vix: singular at J = 0");
        // 1 + J - e^J < 0 for every J != 0, so the denominator is positive
        // and the implied intensity is positive whenever vix2_mkt > sigma^2.
        const double denominator = -2.0 * (1.0 + jump - std::exp(jump));
        return excess / denominator;
    };
}

void JBracket::validate() const {
    const bool finite = std::isfinite(negative_lo) && std::isfinite(negative_hi) &&
                        std::isfinite(positive_lo) && std::isfinite(positive_hi);
    if (!finite || !(negative_lo < negative_hi && negative_hi < 0.0 &&
                     0.0 < positive_lo && positive_lo < positive_hi))
        throw std::invalid_argument(
            "JBracket: need negative_lo < negative_hi < 0 < positive_lo < "
            "positive_hi");
}

namespace {

// IV sum of squares of an SJD candidate against the surface; infeasible
// candidates (rule overflow, inversion failure) score as in the objective
// module: sigma_cap^2 per failed contract, +inf on invalid parameters.
double sjd_surface_sse(const VolSurface& surface, const SjdParams& candidate) {
    try {
        candidate.validate();
    } catch (const std::exception&) {
        return kInf;
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < surface.maturities.size(); ++j) {
        for (const SurfaceQuote& q : surface.quotes[j]) {
            double err;
            try {
                const double price =
                    sjd_price(candidate, surface.env, q.quote.strike,
                              q.quote.maturity, q.quote.kind);
                const double model_iv =
                    implied_vol(surface.env, q.quote.strike, q.quote.maturity,
                                q.quote.kind, price, q.implied_vol);
                err = model_iv - q.implied_vol;
            } catch (const std::exception&) {
                err = kIvFailurePenaltyVol;
            }
            sum += err * err;
        }
    }
    return sum;
}

struct SideMinimum {
    double jump = 0.0;
    double objective = kInf;
    bool interior = false;
};

// Coarse scan then golden-section refinement on [lo, hi].
template <typename F>
SideMinimum minimize_side(const F& f, double lo, double hi) {
    constexpr int kScanPoints = 65;
    constexpr double kGolden = 0.6180339887498949;  // (sqrt(5) - 1) / 2
    constexpr double kJumpTol = 1e-9;

    SideMinimum out;
    int best_k = 0;
    for (int k = 0; k < kScanPoints; ++k) {
        const double x = lo + (hi - lo) * k / (kScanPoints - 1);
        const double fx = f(x);
        if (fx < out.objective) {
            out.objective = fx;
            out.jump = x;
            best_k = k;
        }
    }

    double a = lo + (hi - lo) * std::max(best_k - 1, 0) / (kScanPoints - 1);
    double b = lo + (hi - lo) * std::min(best_k + 1, kScanPoints - 1) /
                        (kScanPoints - 1);
    double x1 = b - kGolden * (b - a);
    double x2 = a + kGolden * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > kJumpTol) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - kGolden * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + kGolden * (b - a);
            f2 = f(x2);
        }
    }
    const double x_star = 0.5 * (a + b);
    const double f_star = f(x_star);
    if (f_star < out.objective) {
        out.objective = f_star;
        out.jump = x_star;
    }
    out.interior = out.jump > lo + 2.0 * kJumpTol && out.jump < hi - 2.0 * kJumpTol;
    return out;
}

}  // namespace

SjdFit sjd_calibrate_univariate(const VolSurface& surface, double sigma,
                                const std::function<double(double)>& lambda_rule,
                                const JBracket& j_bracket) {
    surface.validate();
    if (surface.empty())
        throw std::invalid_argument("sjd_calibrate_univariate: empty surface");
    if (!(std::isfinite(sigma) && sigma > 0.0))
        throw std::invalid_argument(
            "sjd_calibrate_univariate: sigma must be positive");
    if (!lambda_rule)
        throw std::invalid_argument(
            "sjd_calibrate_univariate: lambda rule must be callable");
    j_bracket.validate();

    const auto score = [&](double jump) {
        double lambda;
        try {
            lambda = lambda_rule(jump);
        } catch (const std::exception&) {
            return kInf;
        }
        return sjd_surface_sse(surface, SjdParams{sigma, lambda, jump});
    };

    const SideMinimum negative =
        minimize_side(score, j_bracket.negative_lo, j_bracket.negative_hi);
    const SideMinimum positive =
        minimize_side(score, j_bracket.positive_lo, j_bracket.positive_hi);
    // Ties resolve to the negative side deterministically.
    const SideMinimum& winner =
        positive.objective < negative.objective ? positive : negative;

    if (!std::isfinite(winner.objective))
        throw calibration_error(
            "sjd_calibrate_univariate: no feasible jump size in the bracket");

    SjdFit fit;
    fit.params = SjdParams{sigma, lambda_rule(winner.jump), winner.jump};
    fit.objective = winner.objective;
    fit.converged = winner.interior;
    return fit;
}

}  // namespace jointcal
