#include "jointcal/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace jointcal {

namespace {

struct Coefficients {
    double reflect, expand, contract, shrink;
};

constexpr Coefficients kClassicCoefficients{1.0, 2.0, 0.5, 0.5};

}  // namespace

NelderMeadResult nelder_mead(
    const std::function<double(const std::vector<double>&)>& f,
    const std::vector<double>& x0, const NelderMeadOptions& options) {
    const std::size_t n = x0.size();
    if (n == 0) throw std::invalid_argument("nelder_mead: empty start point");
    if (options.max_evaluations < static_cast<std::int64_t>(n) + 1)
        throw std::invalid_argument(
            "nelder_mead: evaluation budget below simplex size");

    NelderMeadResult result;
    const Coefficients& coef = kClassicCoefficients;

    std::vector<std::vector<double>> simplex(n + 1, x0);
    std::vector<double> fvals(n + 1);
    for (std::size_t i = 0; i < n; ++i) {
        double step = options.initial_step;
        if (simplex[i + 1][i] == 0.0) step = std::max(step, 1e-4);
        simplex[i + 1][i] += step;
    }
    for (std::size_t i = 0; i <= n; ++i) {
        fvals[i] = f(simplex[i]);
        ++result.evaluations;
    }

    std::vector<std::size_t> order(n + 1);
    std::vector<double> centroid(n), candidate(n);

    while (result.evaluations < options.max_evaluations) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (fvals[a] != fvals[b]) return fvals[a] < fvals[b];
            return a < b;  // deterministic tie-break
        });
        const std::size_t best = order[0];
        const std::size_t worst = order[n];
        const std::size_t second_worst = order[n - 1];

        // Convergence: either the simplex has geometrically collapsed, or the
        // objective spread is negligible relative to its scale. The diameter
        // test must stand alone — near a zero-valued minimum the relative
        // spread test can never fire.
        const double spread = fvals[worst] - fvals[best];
        const double scale = std::max({std::abs(fvals[best]),
                                       std::abs(fvals[worst]), 1e-30});
        double diameter = 0.0;
        for (std::size_t i = 0; i <= n; ++i) {
            double dist = 0.0;
            for (std::size_t d = 0; d < n; ++d) {
                const double delta = simplex[i][d] - simplex[best][d];
                dist += delta * delta;
            }
            diameter = std::max(diameter, std::sqrt(dist));
        }
        if (diameter <= options.simplex_diameter_tol ||
            spread <= options.rel_objective_tol * scale) {
            result.converged = true;
            break;
        }

        // Centroid of all vertices except the worst.
        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == worst) continue;
            for (std::size_t d = 0; d < n; ++d) centroid[d] += simplex[i][d];
        }
        for (std::size_t d = 0; d < n; ++d) centroid[d] /= static_cast<double>(n);

        auto move = [&](double coef) {
            for (std::size_t d = 0; d < n; ++d)
                candidate[d] = centroid[d] + coef * (centroid[d] - simplex[worst][d]);
        };

        move(coef.reflect);
        const double f_reflect = f(candidate);
        ++result.evaluations;

        if (f_reflect < fvals[best]) {
            std::vector<double> reflected = candidate;
            move(coef.expand);
            const double f_expand = f(candidate);
            ++result.evaluations;
            if (f_expand < f_reflect) {
                simplex[worst] = candidate;
                fvals[worst] = f_expand;
            } else {
                simplex[worst] = std::move(reflected);
                fvals[worst] = f_reflect;
            }
        } else if (f_reflect < fvals[second_worst]) {
            simplex[worst] = candidate;
            fvals[worst] = f_reflect;
        } else {
            const bool outside = f_reflect < fvals[worst];
            if (outside) {
                // Outside contraction: between centroid and reflection point.
                move(coef.contract);
            } else {
                // Inside contraction: between centroid and the worst vertex.
                move(-coef.contract);
            }
            const double f_contract = f(candidate);
            ++result.evaluations;
            const double reference = outside ? f_reflect : fvals[worst];
            if (f_contract <= reference) {
                simplex[worst] = candidate;
                fvals[worst] = f_contract;
            } else {
                // Shrink every vertex toward the best.
                for (std::size_t i = 0; i <= n; ++i) {
                    if (i == best) continue;
                    for (std::size_t d = 0; d < n; ++d)
                        simplex[i][d] = simplex[best][d] +
                                        coef.shrink * (simplex[i][d] - simplex[best][d]);
                    fvals[i] = f(simplex[i]);
                    ++result.evaluations;
                    if (result.evaluations >= options.max_evaluations) break;
                }
            }
        }
    }

    const std::size_t best =
        static_cast<std::size_t>(std::min_element(fvals.begin(), fvals.end()) -
                                 fvals.begin());
    result.x = simplex[best];
    result.fx = fvals[best];
    return result;
}

}  // namespace jointcal
