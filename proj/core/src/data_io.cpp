#include "jointcal/data_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "jointcal/pricing.hpp"

namespace jointcal {

namespace {

constexpr double kMaturityKeyTol = 1e-9;  // years; maturity-matching tolerance

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream stream(line);
    while (std::getline(stream, cell, ',')) cells.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

bool parse_double(const std::string& text, double& out) {
    const char* first = text.data();
    const char* last = first + text.size();
    const auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last && std::isfinite(out);
}

bool parse_iso_date(const std::string& text, std::chrono::year_month_day& out) {
    int y = 0;
    unsigned m = 0, d = 0;
    const char* p = text.data();
    const char* end = p + text.size();
    auto eat_int = [&](auto& value) {
        const auto [ptr, ec] = std::from_chars(p, end, value);
        if (ec != std::errc{}) return false;
        p = ptr;
        return true;
    };
    if (!eat_int(y) || p == end || *p != '-') return false;
    ++p;
    if (!eat_int(m) || p == end || *p != '-') return false;
    ++p;
    if (!eat_int(d) || p != end) return false;
    out = std::chrono::year_month_day{std::chrono::year{y}, std::chrono::month{m},
                                      std::chrono::day{d}};
    return out.ok();
}

bool parse_kind(std::string text, OptionKind& out) {
    std::transform(text.begin(), text.end(), text.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (text == "call" || text == "c") {
        out = OptionKind::call;
        return true;
    }
    if (text == "put" || text == "p") {
        out = OptionKind::put;
        return true;
    }
    return false;
}

}  // namespace

void PanelRow::validate() const {
    if (!trade_date.ok()) throw std::invalid_argument("PanelRow: invalid trade_date");
    if (!expiry_date.ok())
        throw std::invalid_argument("PanelRow: invalid expiry_date");
    if (std::chrono::sys_days(expiry_date) <= std::chrono::sys_days(trade_date))
        throw std::invalid_argument("PanelRow: expiry_date must follow trade_date");
    if (!(std::isfinite(strike) && strike > 0.0))
        throw std::invalid_argument("PanelRow: strike must be positive");
    // bid > ask is a market defect removed by the filters, not a parse error;
    // only outright nonsense is rejected here.
    if (!(std::isfinite(bid) && bid >= 0.0))
        throw std::invalid_argument("PanelRow: bid must be >= 0");
    if (!(std::isfinite(ask) && ask >= 0.0))
        throw std::invalid_argument("PanelRow: ask must be >= 0");
    if (!(std::isfinite(underlying_close) && underlying_close > 0.0))
        throw std::invalid_argument("PanelRow: underlying_close must be positive");
    if (!std::isfinite(rate)) throw std::invalid_argument("PanelRow: bad rate");
    if (!std::isfinite(dividend_yield))
        throw std::invalid_argument("PanelRow: bad dividend_yield");
}

double PanelRow::maturity() const {
    const auto days = std::chrono::sys_days(expiry_date) -
                      std::chrono::sys_days(trade_date);
    return static_cast<double>(days.count()) / 365.0;
}

std::string CsvSchema::column_for(const std::string& field) const {
    const auto it = columns.find(field);
    return it == columns.end() ? field : it->second;
}

LoadResult load_panel(const std::string& path, const CsvSchema& schema) {
    std::ifstream file(path);
    if (!file) throw std::runtime_error("load_panel: cannot open " + path);

    std::string line;
    if (!std::getline(file, line))
        throw std::runtime_error("load_panel: " + path + " has no header line");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const std::vector<std::string> header = split_csv_line(line);
    const auto column_index = [&](const std::string& field) {
        const std::string name = schema.column_for(field);
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end())
            throw std::runtime_error("load_panel: missing mandatory column '" +
                                     name + "' in " + path);
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t c_trade = column_index("trade_date");
    const std::size_t c_expiry = column_index("expiry_date");
    const std::size_t c_strike = column_index("strike");
    const std::size_t c_kind = column_index("kind");
    const std::size_t c_bid = column_index("bid");
    const std::size_t c_ask = column_index("ask");
    const std::size_t c_close = column_index("underlying_close");
    const std::size_t c_rate = column_index("rate");
    const std::size_t c_div = column_index("dividend_yield");
    const std::size_t needed = 1 + std::max({c_trade, c_expiry, c_strike, c_kind,
                                             c_bid, c_ask, c_close, c_rate, c_div});

    LoadResult result;
    std::size_t line_number = 1;  // header
    while (std::getline(file, line)) {
        ++line_number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        const std::vector<std::string> cells = split_csv_line(line);
        if (cells.size() < needed) {
            result.rejects.push_back(
                {line_number, "expected at least " + std::to_string(needed) +
                                  " cells, got " + std::to_string(cells.size())});
            continue;
        }
        PanelRow row;
        std::string reason;
        if (!parse_iso_date(cells[c_trade], row.trade_date))
            reason = "bad trade_date '" + cells[c_trade] + "'";
        else if (!parse_iso_date(cells[c_expiry], row.expiry_date))
            reason = "bad expiry_date '" + cells[c_expiry] + "'";
        else if (!parse_double(cells[c_strike], row.strike))
            reason = "bad strike '" + cells[c_strike] + "'";
        else if (!parse_kind(cells[c_kind], row.kind))
            reason = "bad kind '" + cells[c_kind] + "'";
        else if (!parse_double(cells[c_bid], row.bid))
            reason = "bad bid '" + cells[c_bid] + "'";
        else if (!parse_double(cells[c_ask], row.ask))
            reason = "bad ask '" + cells[c_ask] + "'";
        else if (!parse_double(cells[c_close], row.underlying_close))
            reason = "bad underlying_close '" + cells[c_close] + "'";
        else if (!parse_double(cells[c_rate], row.rate))
            reason = "bad rate '" + cells[c_rate] + "'";
        else if (!parse_double(cells[c_div], row.dividend_yield))
            reason = "bad dividend_yield '" + cells[c_div] + "'";
        if (reason.empty()) {
            try {
                row.validate();
                result.rows.push_back(row);
                continue;
            } catch (const std::invalid_argument& e) {
                reason = e.what();
            }
        }
        result.rejects.push_back({line_number, reason});
    }
    return result;
}

double standardized_moneyness(double strike, double spot, double maturity,
                              double vix_tau) {
    if (!(std::isfinite(strike) && strike > 0.0))
        throw std::invalid_argument("standardized_moneyness: strike must be > 0");
    if (!(std::isfinite(spot) && spot > 0.0))
        throw std::invalid_argument("standardized_moneyness: spot must be > 0");
    if (!(std::isfinite(maturity) && maturity > 0.0))
        throw std::invalid_argument("standardized_moneyness: maturity must be > 0");
    if (!(std::isfinite(vix_tau) && vix_tau > 0.0))
        throw std::invalid_argument("standardized_moneyness: vix_tau must be > 0");
    return std::log(strike / spot) / (vix_tau * std::sqrt(maturity));
}

bool parity_check(const PanelRow& call_row, const PanelRow& put_row,
                  const MarketEnv& env, double tolerance) {
    if (call_row.kind != OptionKind::call || put_row.kind != OptionKind::put)
        throw std::invalid_argument("parity_check: rows must be a call/put pair");
    if (call_row.strike != put_row.strike ||
        std::abs(call_row.maturity() - put_row.maturity()) > kMaturityKeyTol)
        throw std::invalid_argument(
            "parity_check: pair must share strike and maturity");
    const double tau = call_row.maturity();
    const double synthetic_forward = env.spot * std::exp(-env.dividend_yield * tau) -
                                     call_row.strike * std::exp(-env.rate * tau);
    const double gap = call_row.mid() - put_row.mid() - synthetic_forward;
    return std::abs(gap) > tolerance * env.spot;
}

// ---------------------------------------------------------------------------
// Replication grids: puts below the forward, calls at or above it, with
// parity conversion for quotes sitting on the wrong side (the spot/forward
// wedge), undiscounted to forward prices.

namespace {

struct GridLeg {
    double strike = 0.0;
    OptionKind kind = OptionKind::call;
    double mid = 0.0;
};

std::optional<StrikeGrid> otm_grid_from_legs(const std::vector<GridLeg>& legs,
                                             const MarketEnv& env, double tau) {
    std::map<double, std::pair<std::optional<double>, std::optional<double>>>
        by_strike;  // strike -> (call mid, put mid); first quote wins
    for (const GridLeg& leg : legs) {
        auto& slot = by_strike[leg.strike];
        auto& side = leg.kind == OptionKind::call ? slot.first : slot.second;
        if (!side) side = leg.mid;
    }

    const double forward = env.forward(tau);
    const double spot_leg = env.spot * std::exp(-env.dividend_yield * tau);
    const double strike_df = std::exp(-env.rate * tau);
    const double undiscount = std::exp(env.rate * tau);

    StrikeGrid grid;
    grid.forward = forward;
    for (const auto& [strike, sides] : by_strike) {
        const bool want_put = strike < forward;
        const auto& target = want_put ? sides.second : sides.first;
        const auto& other = want_put ? sides.first : sides.second;
        double price;
        if (target) {
            price = *target;
        } else if (other) {
            // Put-call parity: C - P = e^{-q tau} S - e^{-r tau} K.
            const double parity = spot_leg - strike_df * strike;
            price = want_put ? *other - parity : *other + parity;
            if (price < 0.0) continue;  // conversion fell below intrinsic noise
        } else {
            continue;
        }
        grid.strikes.push_back(strike);
        grid.otm_prices.push_back(price * undiscount);
    }
    if (grid.strikes.size() < 2) return std::nullopt;
    return grid;
}

MarketEnv row_env(const PanelRow& row) {
    return MarketEnv{row.underlying_close, row.rate, row.dividend_yield};
}

}  // namespace

std::map<double, double> filter_vix_by_maturity(const std::vector<PanelRow>& rows) {
    std::map<double, std::vector<const PanelRow*>> by_maturity;
    for (const PanelRow& row : rows) {
        if (row.bid > row.ask) continue;  // the only pre-exclusion
        by_maturity[row.maturity()].push_back(&row);
    }

    std::map<double, double> vix;
    for (const auto& [tau, group] : by_maturity) {
        const MarketEnv env = row_env(*group.front());
        std::vector<GridLeg> legs;
        legs.reserve(group.size());
        for (const PanelRow* row : group)
            legs.push_back({row->strike, row->kind, row->mid()});
        const auto grid = otm_grid_from_legs(legs, env, tau);
        if (!grid) continue;
        const double level = replicate_vix_squared(*grid, tau);
        if (level > 0.0) vix[tau] = std::sqrt(level);
    }
    return vix;
}

FilterResult apply_filters(const std::vector<PanelRow>& rows,
                           const std::map<double, double>& vix_by_maturity,
                           double parity_tolerance) {
    FilterResult out;
    const std::size_t n = rows.size();
    std::vector<const char*> reject_reason(n, nullptr);

    // Singles: maturity cap, crossed market, price floor — in pipeline order.
    for (std::size_t i = 0; i < n; ++i) {
        const PanelRow& row = rows[i];
        if (row.maturity() > 1.0)
            reject_reason[i] = kRejectMaturity;
        else if (row.bid > row.ask)
            reject_reason[i] = kRejectBidAboveAsk;
        else if (row.ask <= 0.10)
            reject_reason[i] = kRejectAskFloor;
    }

    // Put-call parity on surviving matched pairs; both legs of a violation go.
    std::map<std::pair<long long, double>, std::pair<std::size_t, std::size_t>>
        pairs;  // (days to expiry, strike) -> (call index, put index)
    constexpr std::size_t kNone = static_cast<std::size_t>(-1);
    for (std::size_t i = 0; i < n; ++i) {
        if (reject_reason[i]) continue;
        const PanelRow& row = rows[i];
        const long long days = (std::chrono::sys_days(row.expiry_date) -
                                std::chrono::sys_days(row.trade_date))
                                   .count();
        auto [it, inserted] =
            pairs.try_emplace({days, row.strike}, std::pair{kNone, kNone});
        auto& slot =
            row.kind == OptionKind::call ? it->second.first : it->second.second;
        if (slot == kNone) slot = i;
    }
    for (const auto& [key, pair] : pairs) {
        if (pair.first == kNone || pair.second == kNone) continue;
        if (parity_check(rows[pair.first], rows[pair.second],
                         row_env(rows[pair.first]), parity_tolerance)) {
            reject_reason[pair.first] = kRejectParity;
            reject_reason[pair.second] = kRejectParity;
        }
    }

    // OTM retention against spot, then the standardized-moneyness cut.
    std::vector<double> k_of_row(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (reject_reason[i]) continue;
        const PanelRow& row = rows[i];
        const bool otm = row.kind == OptionKind::call
                             ? row.strike >= row.underlying_close
                             : row.strike < row.underlying_close;
        if (!otm) {
            reject_reason[i] = kRejectNotOtm;
            continue;
        }
        const double tau = row.maturity();
        double vix = 0.0;
        const auto lb = vix_by_maturity.lower_bound(tau - kMaturityKeyTol);
        if (lb != vix_by_maturity.end() && lb->first <= tau + kMaturityKeyTol)
            vix = lb->second;
        if (!(vix > 0.0)) {
            reject_reason[i] = kRejectNoVix;
            continue;
        }
        k_of_row[i] =
            standardized_moneyness(row.strike, row.underlying_close, tau, vix);
        if (std::abs(k_of_row[i]) > 6.0) reject_reason[i] = kRejectMoneyness;
    }

    // Survivors become surface quotes; mids that admit no implied vol are the
    // final reject class.
    std::vector<SurfaceQuote> retained;
    std::optional<MarketEnv> env;
    bool env_mismatch = false;
    for (std::size_t i = 0; i < n; ++i) {
        if (reject_reason[i]) {
            out.rejects.push_back({rows[i], reject_reason[i]});
            continue;
        }
        const PanelRow& row = rows[i];
        const MarketEnv this_env = row_env(row);
        const double tau = row.maturity();
        SurfaceQuote sq;
        try {
            sq.implied_vol =
                implied_vol(this_env, row.strike, tau, row.kind, row.mid());
        } catch (const std::exception&) {
            out.rejects.push_back({row, kRejectUnattainableIv});
            continue;
        }
        sq.quote.strike = row.strike;
        sq.quote.maturity = tau;
        sq.quote.kind = row.kind;
        sq.quote.bid = row.bid;
        sq.quote.ask = row.ask;
        sq.quote.mid = row.mid();
        sq.quote.forward = this_env.forward(tau);
        sq.quote.std_moneyness = k_of_row[i];
        retained.push_back(std::move(sq));

        if (!env) {
            env = this_env;
        } else if (env->spot != this_env.spot || env->rate != this_env.rate ||
                   env->dividend_yield != this_env.dividend_yield) {
            env_mismatch = true;
        }
    }
    if (env_mismatch)
        out.warnings.emplace_back(
            "rows disagree on underlying_close/rate/dividend_yield; the "
            "surface carries the first retained row's values");

    if (env) out.surface = VolSurface::build(*env, std::move(retained));
    return out;
}

FilterResult apply_filters(const std::vector<PanelRow>& rows,
                           double parity_tolerance) {
    return apply_filters(rows, filter_vix_by_maturity(rows), parity_tolerance);
}

std::vector<HorizonTarget> default_vix_horizons() {
    std::vector<HorizonTarget> targets;
    targets.push_back(
        {9.0 / 365.0, std::pair{8.0 / 365.0, 10.0 / 365.0}});
    for (int months = 1; months <= 12; ++months)
        targets.push_back({30.0 * months / 365.0, std::nullopt});
    return targets;
}

MarketTsResult build_market_ts(const VolSurface& surface,
                               const std::vector<HorizonTarget>& targets) {
    surface.validate();
    if (surface.empty())
        throw std::invalid_argument("build_market_ts: surface is empty");

    MarketTsResult out;
    out.ts.kind = TsKind::vix_squared;
    double last_used = -1.0;
    for (const HorizonTarget& target : targets) {
        std::size_t chosen = static_cast<std::size_t>(-1);
        double best_distance = 0.0;
        for (std::size_t j = 0; j < surface.maturities.size(); ++j) {
            const double tau = surface.maturities[j];
            if (target.accept_window &&
                (tau < target.accept_window->first ||
                 tau > target.accept_window->second))
                continue;
            const double distance = std::abs(tau - target.target_years);
            // Strict improvement only: equal distances keep the earlier
            // (shorter) maturity.
            if (chosen == static_cast<std::size_t>(-1) ||
                distance < best_distance) {
                chosen = j;
                best_distance = distance;
            }
        }
        std::ostringstream label;
        label << "horizon " << target.target_years * 365.0 << "d";
        if (chosen == static_cast<std::size_t>(-1)) {
            out.warnings.push_back(label.str() + ": no qualifying maturity");
            continue;
        }
        const double tau = surface.maturities[chosen];
        if (tau == last_used) {
            out.warnings.push_back(label.str() +
                                   ": maturity already used, point skipped");
            continue;
        }

        std::vector<GridLeg> legs;
        legs.reserve(surface.quotes[chosen].size());
        for (const SurfaceQuote& q : surface.quotes[chosen])
            legs.push_back({q.quote.strike, q.quote.kind, q.quote.mid});
        const auto grid = otm_grid_from_legs(legs, surface.env, tau);
        if (!grid) {
            out.warnings.push_back(label.str() +
                                   ": too few strikes to replicate");
            continue;
        }
        ReplicationDiagnostics diagnostics;
        const double level = replicate_vix_squared(*grid, tau, &diagnostics);
        if (diagnostics.truncation_warning())
            out.warnings.push_back(label.str() +
                                   ": strike grid truncated on one side of the "
                                   "forward");
        if (!(level > 0.0)) {
            out.warnings.push_back(label.str() + ": non-positive replication");
            continue;
        }
        out.ts.points.push_back({tau, level});
        last_used = tau;
    }
    return out;
}

}  // namespace jointcal
