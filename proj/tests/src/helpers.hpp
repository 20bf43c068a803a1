#pragma once

// Shared fixtures for the test suites: the base market environment, the
// base Bates parameter vector, and small synthetic-surface builders.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "jointcal/pricing.hpp"
#include "jointcal/types.hpp"

namespace jointcal::testing {

inline MarketEnv base_env() { return MarketEnv{100.0, 0.02, 0.03}; }

inline BatesParams base_params() {
    return BatesParams{0.0576, 2.03, 0.04, 0.38, -0.7, 0.59, -0.05, 0.07};
}

inline OptionKind otm_kind(double strike, double spot) {
    return strike < spot ? OptionKind::put : OptionKind::call;
}

// Single-maturity surface of OTM quotes priced under SJD dynamics.
inline VolSurface sjd_surface(const SjdParams& params, const MarketEnv& env,
                              double maturity, double strike_lo,
                              double strike_hi, double step = 1.0) {
    std::vector<SurfaceQuote> quotes;
    for (double k = strike_lo; k <= strike_hi + 1e-9; k += step) {
        const OptionKind kind = otm_kind(k, env.spot);
        const double price = sjd_price(params, env, k, maturity, kind);
        SurfaceQuote q;
        q.quote.strike = k;
        q.quote.maturity = maturity;
        q.quote.kind = kind;
        q.quote.mid = price;
        q.implied_vol = implied_vol(env, k, maturity, kind, price);
        quotes.push_back(q);
    }
    return VolSurface::build(env, std::move(quotes));
}

// OTM quotes priced under Bates dynamics on a strike x maturity lattice.
inline VolSurface bates_surface(const BatesParams& params, const MarketEnv& env,
                                const std::vector<double>& maturities,
                                const std::vector<double>& strikes,
                                const PricerSettings& settings = {}) {
    std::vector<SurfaceQuote> quotes;
    for (double tau : maturities) {
        std::vector<OptionKind> kinds;
        kinds.reserve(strikes.size());
        for (double k : strikes) kinds.push_back(otm_kind(k, env.spot));
        const std::vector<double> prices =
            price_european_strip(params, env, tau, strikes, kinds, settings);
        for (std::size_t i = 0; i < strikes.size(); ++i) {
            if (prices[i] < 0.10) continue;  // drop sub-dime wings
            SurfaceQuote q;
            q.quote.strike = strikes[i];
            q.quote.maturity = tau;
            q.quote.kind = kinds[i];
            q.quote.mid = prices[i];
            q.implied_vol = implied_vol(env, strikes[i], tau, kinds[i], prices[i]);
            quotes.push_back(q);
        }
    }
    return VolSurface::build(env, std::move(quotes));
}

// Scratch directory removed on destruction; unique per instance.
class TempDir {
  public:
    TempDir() {
        static std::mt19937_64 rng{std::random_device{}()};
        path_ = std::filesystem::temp_directory_path() /
                ("jointcal_test_" + std::to_string(rng()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path file(const std::string& name) const {
        return path_ / name;
    }
    std::filesystem::path write(const std::string& name,
                                const std::string& content) const {
        const std::filesystem::path p = file(name);
        std::ofstream out(p);
        out << content;
        return p;
    }

  private:
    std::filesystem::path path_;
};

}  // namespace jointcal::testing
