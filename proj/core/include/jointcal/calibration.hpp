#pragma once

// Parameter search: bounded derivative-free minimization of the joint
// objective in transformed coordinates, plus the SJD univariate reductions
// (the lambda(J) constraint loci).

#include <functional>
#include <stdexcept>

#include "jointcal/objective.hpp"
#include "jointcal/types.hpp"

namespace jointcal {

// Every restart failed to produce a finite objective.
struct calibration_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bijection between the open bound box and R^8. Componentwise
// z = logit((g(x) - g(lo)) / (g(hi) - g(lo))) with
//   g = log      for v0, kappa, theta, sigma_v (positive parameters),
//   g = identity for rho (scaled sigmoid), lambda and sigma_j
//                (their lower bounds may be 0),
//   g = log1p    for mu_j (affine on (-1, inf) via log(1+mu_j)).
// Round-trips are exact to ~1e-12 on the open box; values at or beyond a
// bound are nudged one clamp-width inside so the forward map stays finite.
class ParamTransform {
  public:
    explicit ParamTransform(const ParamBounds& bounds);

    std::vector<double> to_unconstrained(const BatesParams& params) const;
    BatesParams to_params(const std::vector<double>& z) const;

    static constexpr int dimension = 8;

  private:
    struct Component {
        enum class Map { log, identity, log1p } map;
        double g_lo, g_hi;
    };
    Component components_[8];
};

// Minimize the joint objective. Deterministic given config (restart
// perturbations derive from config.seed); the returned objective never
// exceeds the objective at config.initial_guess.
CalibrationResult calibrate(const VolSurface& surface,
                            const VarianceTermStructure& observed_ts,
                            const CalibrationConfig& config,
                            const PricerSettings& settings = {});

// Variance-swap constraint locus: lambda(J) = (vs_mkt - sigma^2) / J^2, so that
// sigma^2 + lambda(J) J^2 = vs_mkt for every J != 0.
// Throws std::domain_error("no jump variance") when vs_mkt <= sigma^2;
// evaluating at J = 0 throws std::domain_error (singularity).
std::function<double(double)> sjd_lambda_from_vs(double vs_mkt, double sigma);

// VIX constraint locus: lambda(J) = (vix2_mkt - sigma^2) / (-2 (1 + J - e^J)),
// so that sigma^2 - 2 lambda(J) (1 + J - e^J) = vix2_mkt for every J != 0.
// (1 + J - e^J < 0 for all J != 0, so the denominator is positive; the
// intensity is nonnegative exactly when vix2_mkt >= sigma^2.)
// Throws std::domain_error("inconsistent VIX level") when vix2_mkt <= sigma^2;
// evaluating at J = 0 throws std::domain_error (singularity).
std::function<double(double)> sjd_lambda_from_vix(double vix2_mkt, double sigma);

// Two-sided search bracket for the jump size J, excluding the J = 0
// singularity.
struct JBracket {
    double negative_lo = -0.5;
    double negative_hi = -1e-4;
    double positive_lo = 1e-4;
    double positive_hi = 0.5;

    void validate() const;
};

struct SjdFit {
    SjdParams params;
    double objective = 0.0;  // IV SSE at the fit
    bool converged = false;  // false when the minimum sat at a bracket endpoint
};

// Univariate line search over J along the constraint locus: each candidate J
// is paired with lambda_rule(J) and scored by the unweighted IV SSE against
// the surface. Both bracket sides are searched; the lower minimum wins.
SjdFit sjd_calibrate_univariate(const VolSurface& surface, double sigma,
                                const std::function<double(double)>& lambda_rule,
                                const JBracket& j_bracket = {});

}  // namespace jointcal
