#include "jointcal/types.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <stdexcept>

namespace jointcal {

namespace {

void require(bool ok, const char* message) {
    if (!ok) throw std::invalid_argument(message);
}

bool finite(double x) { return std::isfinite(x); }

}  // namespace

void MarketEnv::validate() const {
    require(finite(spot) && spot > 0.0, "MarketEnv: spot must be positive");
    require(finite(rate), "MarketEnv: rate must be finite");
    require(finite(dividend_yield), "MarketEnv: dividend_yield must be finite");
}

void BatesParams::validate() const {
    require(finite(v0) && v0 > 0.0, "BatesParams: v0 must be positive");
    require(finite(kappa) && kappa > 0.0, "BatesParams: kappa must be positive");
    require(finite(theta) && theta > 0.0, "BatesParams: theta must be positive");
    require(finite(sigma_v) && sigma_v > 0.0, "BatesParams: sigma_v must be positive");
    require(finite(rho) && rho >= -1.0 && rho <= 1.0,
            "BatesParams: rho must lie in [-1, 1]");
    require(finite(lambda) && lambda >= 0.0, "BatesParams: lambda must be nonnegative");
    require(finite(mu_j) && mu_j > -1.0, "BatesParams: mu_j must exceed -1");
    require(finite(sigma_j) && sigma_j >= 0.0,
            "BatesParams: sigma_j must be nonnegative");
}

void SjdParams::validate() const {
    require(finite(sigma) && sigma > 0.0, "SjdParams: sigma must be positive");
    require(finite(lambda) && lambda >= 0.0, "SjdParams: lambda must be nonnegative");
    require(finite(jump), "SjdParams: jump must be finite");
}

void OptionQuote::validate() const {
    require(finite(strike) && strike > 0.0, "OptionQuote: strike must be positive");
    require(finite(maturity) && maturity > 0.0, "OptionQuote: maturity must be positive");
    require(finite(mid), "OptionQuote: mid must be finite");
    if (bid && ask) {
        require(*bid <= *ask, "OptionQuote: bid must not exceed ask");
        const double expected_mid = 0.5 * (*bid + *ask);
        require(std::abs(mid - expected_mid) <=
                    1e-12 * std::max(1.0, std::abs(expected_mid)),
                "OptionQuote: mid must equal (bid+ask)/2 when both sides are present");
    }
}

namespace {

void check_bound_pair(double lo, double hi, const char* name) {
    if (!(std::isfinite(lo) && std::isfinite(hi)))
        throw std::invalid_argument(std::string("ParamBounds: ") + name +
                                    " bounds must be finite");
    if (!(lo < hi))
        throw std::invalid_argument(std::string("ParamBounds: ") + name +
                                    " lower bound must be below upper bound");
}
}

VolSurface VolSurface::build(const MarketEnv& env, std::vector<SurfaceQuote> quotes) {
    env.validate();
    // Group by exact maturity key; std::map keeps the keys sorted.
    std::map<double, std::vector<SurfaceQuote>> groups;
    for (auto& q : quotes) {
        q.quote.validate();
        groups[q.quote.maturity].push_back(std::move(q));
    }
    VolSurface surface;
    surface.env = env;
    surface.maturities.reserve(groups.size());
    surface.quotes.reserve(groups.size());
    for (auto& [maturity, group] : groups) {
        std::sort(group.begin(), group.end(),
                  [](const SurfaceQuote& a, const SurfaceQuote& b) {
                      if (a.quote.strike != b.quote.strike)
                          return a.quote.strike < b.quote.strike;
                      return static_cast<int>(a.quote.kind) <
                             static_cast<int>(b.quote.kind);
                  });
        surface.maturities.push_back(maturity);
        surface.quotes.push_back(std::move(group));
    }
    return surface;
}

void VolSurface::validate() const {
    env.validate();
    require(maturities.size() == quotes.size(),
            "VolSurface: maturities and quote groups must align");
    for (std::size_t j = 0; j < maturities.size(); ++j) {
        require(finite(maturities[j]) && maturities[j] > 0.0,
                "VolSurface: maturities must be positive");
        if (j > 0)
            require(maturities[j] > maturities[j - 1],
                    "VolSurface: maturities must be strictly increasing");
        require(!quotes[j].empty(),
                "VolSurface: every retained maturity needs at least one quote");
        for (const auto& q : quotes[j]) {
            q.quote.validate();
            require(q.quote.maturity == maturities[j],
                    "VolSurface: quote maturity must equal its group key");
        }
    }
}

std::size_t VolSurface::total_quotes() const {
    std::size_t n = 0;
    for (const auto& group : quotes) n += group.size();
    return n;
}

void VarianceTermStructure::validate() const {
    for (std::size_t j = 0; j < points.size(); ++j) {
        require(finite(points[j].maturity) && points[j].maturity > 0.0,
                "VarianceTermStructure: maturities must be positive");
        require(finite(points[j].level) && points[j].level >= 0.0,
                "VarianceTermStructure: levels must be nonnegative");
        if (j > 0)
            require(points[j].maturity > points[j - 1].maturity,
                    "VarianceTermStructure: maturities must be strictly increasing");
    }
}

void WeightRule::validate() const {
    require(finite(scale) && scale >= 0.0, "WeightRule: scale must be nonnegative");
}

void ParamBounds::validate() const {
    const auto check = check_bound_pair;
    check(lower.v0, upper.v0, "v0");
    check(lower.kappa, upper.kappa, "kappa");
    check(lower.theta, upper.theta, "theta");
    check(lower.sigma_v, upper.sigma_v, "sigma_v");
    check(lower.rho, upper.rho, "rho");
    check(lower.lambda, upper.lambda, "lambda");
    check(lower.mu_j, upper.mu_j, "mu_j");
    check(lower.sigma_j, upper.sigma_j, "sigma_j");
    // Hard invariants the box itself must respect.
    require(lower.v0 > 0.0, "ParamBounds: v0 lower bound must be positive");
    require(lower.kappa > 0.0, "ParamBounds: kappa lower bound must be positive");
    require(lower.theta > 0.0, "ParamBounds: theta lower bound must be positive");
    require(lower.sigma_v > 0.0, "ParamBounds: sigma_v lower bound must be positive");
    require(lower.rho >= -1.0 && upper.rho <= 1.0,
            "ParamBounds: rho bounds must lie in [-1, 1]");
    require(lower.lambda >= 0.0, "ParamBounds: lambda lower bound must be nonnegative");
    require(lower.mu_j > -1.0, "ParamBounds: mu_j lower bound must exceed -1");
    require(lower.sigma_j >= 0.0,
            "ParamBounds: sigma_j lower bound must be nonnegative");
}

bool ParamBounds::contains(const BatesParams& p) const {
    return p.v0 >= lower.v0 && p.v0 <= upper.v0 &&
           p.kappa >= lower.kappa && p.kappa <= upper.kappa &&
           p.theta >= lower.theta && p.theta <= upper.theta &&
           p.sigma_v >= lower.sigma_v && p.sigma_v <= upper.sigma_v &&
           p.rho >= lower.rho && p.rho <= upper.rho &&
           p.lambda >= lower.lambda && p.lambda <= upper.lambda &&
           p.mu_j >= lower.mu_j && p.mu_j <= upper.mu_j &&
           p.sigma_j >= lower.sigma_j && p.sigma_j <= upper.sigma_j;
}

void OptimizerSettings::validate() const {
    require(finite(tolerance) && tolerance > 0.0,
            "OptimizerSettings: tolerance must be positive");
    require(max_evaluations >= 1,
            "OptimizerSettings: max_evaluations must be at least 1");
    require(restarts >= 1, "OptimizerSettings: restarts must be at least 1");
}

void CalibrationConfig::validate() const {
    require(finite(alpha) && alpha >= 0.0 && alpha <= 1.0,
            "CalibrationConfig: alpha must lie in [0, 1]");
    contract_weights.validate();
    ts_weights.validate();
    bounds.validate();
    initial_guess.validate();
    require(bounds.contains(initial_guess),
            "CalibrationConfig: initial_guess must lie within bounds");
    optimizer.validate();
}

}  // namespace jointcal
