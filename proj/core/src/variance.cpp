#include "jointcal/variance.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace jointcal {

void StrikeGrid::validate() const {
    if (strikes.size() != otm_prices.size())
        throw std::invalid_argument("StrikeGrid: strikes and prices must align");
    if (strikes.size() < 2)
        throw std::invalid_argument("StrikeGrid: need at least two strikes");
    if (!(std::isfinite(forward) && forward > 0.0))
        throw std::invalid_argument("StrikeGrid: forward must be positive");
    for (std::size_t i = 0; i < strikes.size(); ++i) {
        if (!(std::isfinite(strikes[i]) && strikes[i] > 0.0))
            throw std::invalid_argument("StrikeGrid: strikes must be positive");
        if (i > 0 && strikes[i] <= strikes[i - 1])
            throw std::invalid_argument(
                "StrikeGrid: strikes must be strictly increasing");
        if (!(std::isfinite(otm_prices[i]) && otm_prices[i] >= 0.0))
            throw std::invalid_argument(
                "StrikeGrid: prices must be finite and non-negative");
    }
}

std::vector<double> strike_weights(const StrikeGrid& grid) {
    grid.validate();
    const auto& k = grid.strikes;
    const std::size_t n = k.size();
    std::vector<double> w(n);
    w[0] = k[1] - k[0];
    w[n - 1] = k[n - 1] - k[n - 2];
    for (std::size_t i = 1; i + 1 < n; ++i) w[i] = 0.5 * (k[i + 1] - k[i - 1]);
    return w;
}

double replicate_vix_squared(const StrikeGrid& grid, double maturity,
                             ReplicationDiagnostics* diagnostics) {
    grid.validate();
    if (!(std::isfinite(maturity) && maturity > 0.0))
        throw std::invalid_argument(
            "replicate_vix_squared: maturity must be positive");

    const auto weights = strike_weights(grid);
    double sum = 0.0;
    for (std::size_t i = 0; i < grid.strikes.size(); ++i) {
        const double k = grid.strikes[i];
        sum += weights[i] / (k * k) * grid.otm_prices[i];
    }

    if (diagnostics) {
        diagnostics->no_puts_below_forward = grid.strikes.front() >= grid.forward;
        diagnostics->no_calls_above_forward = grid.strikes.back() < grid.forward;
    }

    // Prices enter undiscounted (forward values); callers holding spot-dated
    // premia should scale by e^{r tau} before building the grid.
    return 2.0 / maturity * sum;
}

// ---------------------------------------------------------------------------
// SJD closed forms.

double sjd_variance_swap(const SjdParams& params) {
    params.validate();
    return params.sigma * params.sigma +
           params.lambda * params.jump * params.jump;
}

double sjd_vix_squared(const SjdParams& params) {
    params.validate();
    // sigma^2 - 2 lambda (1 + J - e^J); the bracket is <= 0 for all real J,
    // so jumps of either sign raise the level.
    const double bracket = 1.0 + params.jump - std::exp(params.jump);
    return params.sigma * params.sigma - 2.0 * params.lambda * bracket;
}

// ---------------------------------------------------------------------------
// Bates closed forms.

namespace {

double mean_variance(const BatesParams& p, double maturity) {
    const double kt = p.kappa * maturity;
    return p.theta + (p.v0 - p.theta) * (1.0 - std::exp(-kt)) / kt;
}

// Per-unit-intensity gap between the squared-return and log-contract payoffs
// of one jump: E[J^2] - 2 E[e^J - 1 - J]. Shared by the VIX level and the
// spread so the identity VS - VIX^2 = spread holds to machine precision.
double jump_gap(const BatesParams& p) {
    const double mu_ln = p.jump_log_mean();
    // E[e^J - 1 - J] = mu_j - mu_ln for lognormal jumps with mean mu_j.
    return 2.0 * (p.mu_j - mu_ln);
}

double jump_second_moment(const BatesParams& p) {
    const double mu_ln = p.jump_log_mean();
    return mu_ln * mu_ln + p.sigma_j * p.sigma_j;
}

}  // namespace

double bates_variance_swap(const BatesParams& params, double maturity) {
    params.validate();
    if (!(std::isfinite(maturity) && maturity > 0.0))
        throw std::invalid_argument(
            "bates_variance_swap: maturity must be positive");
    return mean_variance(params, maturity) +
           params.lambda * jump_second_moment(params);
}

double vs_vix_spread(const BatesParams& params, double maturity) {
    params.validate();
    if (!(std::isfinite(maturity) && maturity > 0.0))
        throw std::invalid_argument("vs_vix_spread: maturity must be positive");
    // The diffusive legs cancel, leaving a maturity-independent jump gap:
    // 2 lambda E[1 + J + J^2/2 - e^J] = lambda (E[J^2] - 2 E[e^J - 1 - J]).
    return params.lambda * (jump_second_moment(params) - jump_gap(params));
}

double bates_vix_squared(const BatesParams& params, double maturity) {
    params.validate();
    if (!(std::isfinite(maturity) && maturity > 0.0))
        throw std::invalid_argument(
            "bates_vix_squared: maturity must be positive");
    const double level =
        mean_variance(params, maturity) + params.lambda * jump_gap(params);
    // Algebraically level = diffusive + lambda sigma_j^2
    //                       + 2 lambda (mu_j - log(1+mu_j)) >= diffusive > 0,
    // so this trips only on a broken closed form, never on valid parameters.
    if (!(level > 0.0))
        throw std::domain_error("bates_vix_squared: non-physical VIX level");
    return level;
}

double log_contract_multiplier(const BatesParams& params, double maturity) {
    const double vix2 = bates_vix_squared(params, maturity);  // validates inputs
    return 2.0 * bates_variance_swap(params, maturity) / vix2;
}

}  // namespace jointcal
