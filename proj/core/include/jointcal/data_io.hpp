#pragma once

// Option-panel ingestion and the quote filters: CSV loading under a declared
// column mapping, the four panel filters (bid>ask, ask <= $0.10, put-call
// parity violations, |standardized moneyness| > 6) plus OTM-only retention
// and the one-year maturity cap, and market VIX^2 term-structure construction
// by replication.

#include <chrono>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "jointcal/types.hpp"
#include "jointcal/variance.hpp"

namespace jointcal {

struct PanelRow {
    std::chrono::year_month_day trade_date{};
    std::chrono::year_month_day expiry_date{};
    double strike = 0.0;
    OptionKind kind = OptionKind::call;
    double bid = 0.0;
    double ask = 0.0;
    double underlying_close = 0.0;
    double rate = 0.0;
    double dividend_yield = 0.0;

    void validate() const;
    double mid() const { return 0.5 * (bid + ask); }
    // ACT/365 year fraction from trade date to expiry.
    double maturity() const;
};

// Column mapping from PanelRow field names to CSV header names, so vendor
// exports and the synthetic generator share one loader. Unmapped fields use
// the field name itself as the column name. Dates are ISO YYYY-MM-DD; kind
// accepts call/put/c/p case-insensitively.
struct CsvSchema {
    std::map<std::string, std::string> columns;

    std::string column_for(const std::string& field) const;
};

struct RejectedLine {
    std::size_t line_number = 0;  // 1-based, header = line 1
    std::string reason;
};

struct LoadResult {
    std::vector<PanelRow> rows;
    std::vector<RejectedLine> rejects;  // malformed lines, never silently dropped
};

LoadResult load_panel(const std::string& path, const CsvSchema& schema = {});

// k = ln(K/S) / (vix_tau * sqrt(tau)); vix_tau in decimal volatility units.
double standardized_moneyness(double strike, double spot, double maturity,
                              double vix_tau);

// |C - P - (e^{-q tau} S - e^{-r tau} K)| > tolerance * S ?
bool parity_check(const PanelRow& call_row, const PanelRow& put_row,
                  const MarketEnv& env, double tolerance = 0.005);

struct RejectedRow {
    PanelRow row;
    std::string reason;  // first failing filter in pipeline order
};

struct FilterResult {
    VolSurface surface;
    std::vector<RejectedRow> rejects;
    std::vector<std::string> warnings;
};

// Filter reasons, in the order they are applied. Both legs of a parity
// violation are dropped. "vix_unavailable" marks quotes whose maturity has no
// replicable VIX (the |k| filter cannot be evaluated); "unattainable_iv"
// marks mids outside the static no-arbitrage band (no BSIV exists).
inline constexpr const char* kRejectMaturity = "maturity_gt_1y";
inline constexpr const char* kRejectBidAboveAsk = "bid_gt_ask";
inline constexpr const char* kRejectAskFloor = "ask_le_10c";
inline constexpr const char* kRejectParity = "parity_violation";
inline constexpr const char* kRejectNotOtm = "otm_only";
inline constexpr const char* kRejectMoneyness = "moneyness_gt_6";
inline constexpr const char* kRejectNoVix = "vix_unavailable";
inline constexpr const char* kRejectUnattainableIv = "unattainable_iv";

// Per-maturity VIX (decimal volatility) for the |k| filter, replicated from
// pre-filter OTM mids excluding only rows with bid > ask — this avoids
// circularity between the moneyness filter and the VIX it divides by.
std::map<double, double> filter_vix_by_maturity(const std::vector<PanelRow>& rows);

// Apply the full pipeline to one trade date's rows. Every input row lands in
// exactly the surface or the reject report; applying the pipeline to retained
// rows again changes nothing (idempotence).
FilterResult apply_filters(const std::vector<PanelRow>& rows,
                           const std::map<double, double>& vix_by_maturity,
                           double parity_tolerance = 0.005);

// Convenience: filter_vix_by_maturity + apply_filters.
FilterResult apply_filters(const std::vector<PanelRow>& rows,
                           double parity_tolerance = 0.005);

// A horizon to replicate: nearest surface maturity to target_years wins; when
// accept_window is set, only maturities inside [lo, hi] years qualify.
// Exact distance ties choose the shorter maturity.
struct HorizonTarget {
    double target_years = 0.0;
    std::optional<std::pair<double, double>> accept_window;
};

// The default horizon list: 9 days (accepted window 8..10 days) plus monthly
// horizons 1..12 months (30m days, nearest maturity).
std::vector<HorizonTarget> default_vix_horizons();

// Replicate VIX^2 per horizon from the surface's OTM quote grids. Quotes in
// the spot/forward wedge are converted with put-call parity so the grid honors
// the puts-below-forward / calls-at-or-above-forward split. Horizons with no
// qualifying maturity are omitted with a warning.
struct MarketTsResult {
    VarianceTermStructure ts;  // kind = vix_squared
    std::vector<std::string> warnings;
};

MarketTsResult build_market_ts(const VolSurface& surface,
                               const std::vector<HorizonTarget>& targets);

}  // namespace jointcal
