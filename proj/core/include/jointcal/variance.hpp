#pragma once

// Variance-swap rates, squared-VIX levels, log-contract multipliers, and
// model-free VIX^2 replication from discrete strike grids.
//
// All levels are annualized variance (decimal^2). Closed forms:
//   SJD:   VS = sigma^2 + lambda J^2
//          VIX^2 = sigma^2 - 2 lambda (1 + J - e^J)
//   Bates: VS(tau) = theta + (v0 - theta)(1 - e^{-kappa tau})/(kappa tau)
//                    + lambda [(log(1+mu_j) - sigma_j^2/2)^2 + sigma_j^2]
//          VIX^2(tau) = VS(tau) - 2 lambda (log(1+mu_j) - mu_j
//                    + (log(1+mu_j) - sigma_j^2/2)^2 / 2)
// vs_vix_spread shares the jump-gap term with bates_vix_squared, so the
// identity spread = VS - VIX^2 holds exactly by construction.

#include <optional>
#include <vector>

#include "jointcal/types.hpp"

namespace jointcal {

// One maturity's out-of-the-money option prices on an increasing strike grid,
// split at the forward: puts below F, calls at or above F (a strike exactly
// at F counts as a call).
struct StrikeGrid {
    std::vector<double> strikes;     // strictly increasing, size >= 2
    std::vector<double> otm_prices;  // aligned with strikes, >= 0
    double forward = 0.0;

    void validate() const;
};

struct ReplicationDiagnostics {
    bool no_puts_below_forward = false;
    bool no_calls_above_forward = false;
    bool truncation_warning() const {
        return no_puts_below_forward || no_calls_above_forward;
    }
};

// Discretization widths Delta(K_j): endpoints K_2 - K_1 and K_N - K_{N-1},
// interior (K_{j+1} - K_{j-1}) / 2.
std::vector<double> strike_weights(const StrikeGrid& grid);

// (2/tau) * sum_j Delta(K_j) * OTM(K_j) / K_j^2. An empty side of the forward
// is a truncation-bias warning (reported via diagnostics), not a failure.
double replicate_vix_squared(const StrikeGrid& grid, double maturity,
                             ReplicationDiagnostics* diagnostics = nullptr);

double sjd_variance_swap(const SjdParams& params);
double sjd_vix_squared(const SjdParams& params);

double bates_variance_swap(const BatesParams& params, double maturity);

// Throws std::domain_error("non-physical VIX") if the closed form turns
// negative (unreachable for parameters satisfying the BatesParams invariants,
// guarded regardless).
double bates_vix_squared(const BatesParams& params, double maturity);

// Multiplier Q with Q * VIX^2(tau) / 2 = VS(tau); equals 2 exactly when
// lambda = 0, exceeds 2 under negatively skewed jumps.
double log_contract_multiplier(const BatesParams& params, double maturity);

// VS(tau) - VIX^2(tau) = 2 lambda E[1 + J + J^2/2 - e^J]; equals
// bates_variance_swap - bates_vix_squared exactly (same formula path).
double vs_vix_spread(const BatesParams& params, double maturity);

}  // namespace jointcal
