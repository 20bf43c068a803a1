#pragma once

// Nelder-Mead downhill simplex minimizer (reflection / expansion /
// contraction / shrink) for the unconstrained transformed coordinates used by
// the calibration driver. Deterministic for identical inputs.

#include <cstdint>
#include <functional>
#include <vector>

namespace jointcal {

struct NelderMeadOptions {
    double rel_objective_tol = 1e-10;  // relative best-to-worst objective spread
    double simplex_diameter_tol = 1e-8;
    std::int64_t max_evaluations = 2000;
    double initial_step = 0.5;  // per-coordinate displacement of the start simplex
};

struct NelderMeadResult {
    std::vector<double> x;
    double fx = 0.0;
    std::int64_t evaluations = 0;
    bool converged = false;
};

NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             const std::vector<double>& x0,
                             const NelderMeadOptions& options);

}  // namespace jointcal
