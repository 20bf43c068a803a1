// jointcal: command-line surface over the joint IV-surface / variance
// term-structure calibration library.
//
// Subcommands: price, iv, vix, calibrate, simulate, report.
// Global flags: --config, --seed, --jobs, --output-dir, --format {csv,json}.
// Exit codes: 0 success, 2 validation failure, 3 numerical failure.
//
// Every command writes machine-readable artifacts (CSV or JSON) plus a run
// manifest into --output-dir; stderr carries warnings and progress notes.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "jointcal/calibration.hpp"
#include "jointcal/data_io.hpp"
#include "jointcal/json_io.hpp"
#include "jointcal/objective.hpp"
#include "jointcal/pricing.hpp"
#include "jointcal/simulation.hpp"
#include "jointcal/types.hpp"
#include "jointcal/variance.hpp"
#include "jointcal/version.hpp"

#include "manifest.hpp"
#include "table.hpp"

namespace jointcal::cli {

namespace fs = std::filesystem;

struct GlobalOptions {
    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int jobs = 1;
    std::string output_dir = ".";
    OutFormat format = OutFormat::csv;

    fs::path out(const std::string& name) const {
        return fs::path(output_dir) / name;
    }
};

std::string date_string(std::chrono::year_month_day date) {
    char buffer[16];
    std::snprintf(buffer, sizeof(buffer), "%04d-%02d-%02d",
                  static_cast<int>(date.year()),
                  static_cast<unsigned>(date.month()),
                  static_cast<unsigned>(date.day()));
    return buffer;
}

std::string alpha_label(double alpha) { return num(alpha, "%g"); }

nlohmann::json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot read file: " + path);
    nlohmann::json j;
    in >> j;
    return j;
}

std::string blank_or(std::optional<double> value, const char* fmt = "%.10g") {
    return value ? num(*value, fmt) : std::string{};
}

// ---------------------------------------------------------------------------
// price

struct PriceOptions {
    std::string model;
    double spot = 100.0, rate = 0.0, dividend = 0.0;
    std::vector<double> strikes, maturities;
    std::string kind = "both";
    double vol = 0.0;                      // bs
    std::string params_path;               // bates
    double sigma = 0.0, lambda = 0.0, jump = 0.0;  // sjd
};

std::vector<OptionKind> kinds_for(const std::string& kind) {
    if (kind == "call") return {OptionKind::call};
    if (kind == "put") return {OptionKind::put};
    if (kind == "both") return {OptionKind::call, OptionKind::put};
    throw std::invalid_argument("unknown option kind: " + kind);
}

int cmd_price(const GlobalOptions& global, const PriceOptions& options) {
    const MarketEnv env{options.spot, options.rate, options.dividend};
    env.validate();
    const std::vector<OptionKind> kinds = kinds_for(options.kind);

    BatesParams bates;
    SjdParams sjd;
    nlohmann::json effective{{"model", options.model},
                             {"env", env},
                             {"strikes", options.strikes},
                             {"maturities", options.maturities},
                             {"kind", options.kind}};
    if (options.model == "bs") {
        if (options.vol <= 0.0)
            throw std::invalid_argument("--model bs requires --vol > 0");
        effective["vol"] = options.vol;
    } else if (options.model == "bates") {
        if (options.params_path.empty())
            throw std::invalid_argument(
                "--model bates requires --params <json file>");
        bates = load_json_file(options.params_path).get<BatesParams>();
        bates.validate();
        effective["params"] = bates;
    } else if (options.model == "sjd") {
        sjd = SjdParams{options.sigma, options.lambda, options.jump};
        sjd.validate();
        effective["params"] = sjd;
    } else {
        throw std::invalid_argument("unknown model: " + options.model);
    }

    Table table;
    table.header = {"model",     "strike_ccy", "maturity_yrs",
                    "kind",      "price_ccy",  "iv_pct"};
    const PricerSettings settings;
    for (double maturity : options.maturities) {
        for (OptionKind kind : kinds) {
            std::vector<double> prices;
            if (options.model == "bates") {
                prices = price_european_strip(
                    bates, env, maturity, options.strikes,
                    std::vector<OptionKind>(options.strikes.size(), kind),
                    settings);
            } else {
                for (double strike : options.strikes)
                    prices.push_back(
                        options.model == "bs"
                            ? bs_price(env, strike, maturity, options.vol, kind)
                            : sjd_price(sjd, env, strike, maturity, kind));
            }
            for (std::size_t i = 0; i < options.strikes.size(); ++i) {
                std::string iv_cell;
                try {
                    const double iv =
                        implied_vol(env, options.strikes[i], maturity, kind,
                                    prices[i]);
                    iv_cell = num(100.0 * iv, "%.6f");
                } catch (const std::exception&) {
                    // price outside the attainable band (e.g. deep
                    // discount-bound quotes): leave the IV cell empty
                }
                table.add_row({options.model, num(options.strikes[i]),
                               num(maturity), to_string(kind),
                               num(prices[i], "%.10e"), iv_cell});
            }
        }
    }

    const fs::path out =
        global.out(std::string("price") + extension(global.format));
    write_table(table, out.string(), global.format);

    RunManifest manifest;
    manifest.command = "price";
    manifest.config_hash = digest_bytes(effective.dump());
    manifest.seed = global.seed;
    if (!options.params_path.empty())
        manifest.input_digests[options.params_path] =
            digest_file(options.params_path);
    write_manifest(manifest, global.out("price_manifest.json").string());
    std::cerr << "price: wrote " << out.string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// iv

struct IvOptions {
    double spot = 100.0, rate = 0.0, dividend = 0.0;
    std::vector<double> strikes, prices;
    double maturity = 0.0;
    std::string kind = "call";
};

int cmd_iv(const GlobalOptions& global, const IvOptions& options) {
    const MarketEnv env{options.spot, options.rate, options.dividend};
    env.validate();
    if (options.strikes.size() != options.prices.size())
        throw std::invalid_argument(
            "--strike and --price must pair up one-to-one");
    if (options.strikes.empty())
        throw std::invalid_argument("need at least one --strike/--price pair");
    const OptionKind kind = parse_option_kind(options.kind);

    Table table;
    table.header = {"strike_ccy", "maturity_yrs", "kind", "price_ccy",
                    "iv_pct"};
    for (std::size_t i = 0; i < options.strikes.size(); ++i) {
        const double iv = implied_vol(env, options.strikes[i],
                                      options.maturity, kind,
                                      options.prices[i]);
        table.add_row({num(options.strikes[i]), num(options.maturity),
                       to_string(kind), num(options.prices[i], "%.10e"),
                       num(100.0 * iv, "%.6f")});
    }

    const fs::path out = global.out(std::string("iv") + extension(global.format));
    write_table(table, out.string(), global.format);

    nlohmann::json effective{{"env", env},
                             {"strikes", options.strikes},
                             {"prices", options.prices},
                             {"maturity", options.maturity},
                             {"kind", options.kind}};
    RunManifest manifest;
    manifest.command = "iv";
    manifest.config_hash = digest_bytes(effective.dump());
    manifest.seed = global.seed;
    write_manifest(manifest, global.out("iv_manifest.json").string());
    std::cerr << "iv: wrote " << out.string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// panel ingestion shared by vix and calibrate

struct IngestOptions {
    std::string quotes_path;
    std::string schema_path;
    double parity_tolerance = 0.005;
};

struct DatedPanel {
    LoadResult load;
    std::map<std::chrono::year_month_day, FilterResult> by_date;
};

DatedPanel ingest_panel(const IngestOptions& options) {
    CsvSchema schema;
    if (!options.schema_path.empty()) {
        const nlohmann::json j = load_json_file(options.schema_path);
        for (auto it = j.begin(); it != j.end(); ++it)
            schema.columns[it.key()] = it.value().get<std::string>();
    }
    DatedPanel panel;
    panel.load = load_panel(options.quotes_path, schema);
    std::map<std::chrono::year_month_day, std::vector<PanelRow>> grouped;
    for (const PanelRow& row : panel.load.rows)
        grouped[row.trade_date].push_back(row);
    for (auto& [date, rows] : grouped)
        panel.by_date[date] = apply_filters(rows, options.parity_tolerance);
    return panel;
}

void write_reject_reports(const GlobalOptions& global, const DatedPanel& panel,
                          const std::string& prefix) {
    if (!panel.load.rejects.empty()) {
        Table parse;
        parse.header = {"line_number_count", "reason"};
        for (const RejectedLine& reject : panel.load.rejects)
            parse.add_row({num(static_cast<double>(reject.line_number), "%g"),
                           reject.reason});
        write_table(parse,
                    global.out(prefix + "_parse_rejects" +
                               extension(global.format)).string(),
                    global.format);
        std::cerr << prefix << ": " << panel.load.rejects.size()
                  << " unparseable line(s) recorded\n";
    }
    Table rejects;
    rejects.header = {"trade_date", "expiry_date", "strike_ccy", "kind",
                      "bid_ccy",    "ask_ccy",     "reason"};
    for (const auto& [date, filtered] : panel.by_date)
        for (const RejectedRow& reject : filtered.rejects)
            rejects.add_row({date_string(date),
                             date_string(reject.row.expiry_date),
                             num(reject.row.strike), to_string(reject.row.kind),
                             num(reject.row.bid), num(reject.row.ask),
                             reject.reason});
    write_table(rejects,
                global.out(prefix + "_rejects" + extension(global.format))
                    .string(),
                global.format);
}

// ---------------------------------------------------------------------------
// vix

struct VixOptions {
    IngestOptions ingest;
    std::vector<int> horizon_days;  // empty -> default 9d window + 1..12 months
    bool aggregate = false;
};

struct LabeledTarget {
    int label_days;
    HorizonTarget target;
};

std::vector<LabeledTarget> vix_targets(const std::vector<int>& horizon_days) {
    std::vector<LabeledTarget> out;
    if (horizon_days.empty()) {
        const std::vector<HorizonTarget> defaults = default_vix_horizons();
        // The default list is the 9-day windowed point plus monthly horizons.
        out.push_back({9, defaults.front()});
        for (std::size_t i = 1; i < defaults.size(); ++i)
            out.push_back({static_cast<int>(30 * i), defaults[i]});
    } else {
        for (int days : horizon_days) {
            if (days <= 0)
                throw std::invalid_argument("--horizons entries must be > 0");
            out.push_back({days, HorizonTarget{days / 365.0, std::nullopt}});
        }
    }
    return out;
}

int cmd_vix(const GlobalOptions& global, const VixOptions& options) {
    const DatedPanel panel = ingest_panel(options.ingest);
    if (panel.by_date.empty())
        throw std::invalid_argument("no usable quotes in " +
                                    options.ingest.quotes_path);
    const std::vector<LabeledTarget> targets = vix_targets(options.horizon_days);

    Table table;
    table.header = {"trade_date", "horizon_days", "maturity_yrs", "vix_pct"};
    std::map<int, std::vector<double>> by_horizon;  // vix_pct samples
    for (const auto& [date, filtered] : panel.by_date) {
        for (const std::string& warning : filtered.warnings)
            std::cerr << "vix: " << date_string(date) << ": " << warning
                      << "\n";
        if (filtered.surface.empty()) {
            std::cerr << "vix: " << date_string(date)
                      << ": no quotes survive the filters\n";
            continue;
        }
        for (const LabeledTarget& labeled : targets) {
            const MarketTsResult result =
                build_market_ts(filtered.surface, {labeled.target});
            for (const std::string& warning : result.warnings)
                std::cerr << "vix: " << date_string(date) << ": " << warning
                          << "\n";
            if (result.ts.points.empty()) continue;
            const TsPoint& point = result.ts.points.front();
            const double vix_pct = 100.0 * std::sqrt(point.level);
            table.add_row({date_string(date),
                           num(static_cast<double>(labeled.label_days), "%g"),
                           num(point.maturity), num(vix_pct, "%.6f")});
            by_horizon[labeled.label_days].push_back(vix_pct);
        }
    }

    const fs::path out =
        global.out(std::string("vix_term_structure") + extension(global.format));
    write_table(table, out.string(), global.format);
    write_reject_reports(global, panel, "vix");

    if (options.aggregate) {
        Table aggregate;
        aggregate.header = {"horizon_days", "mean_vix_pct", "se_vix_pct",
                            "dates_count"};
        for (const auto& [days, samples] : by_horizon) {
            double mean = 0.0;
            for (double v : samples) mean += v;
            mean /= static_cast<double>(samples.size());
            std::string se_cell;
            if (samples.size() >= 2) {
                double ss = 0.0;
                for (double v : samples) ss += (v - mean) * (v - mean);
                const double stdev =
                    std::sqrt(ss / static_cast<double>(samples.size() - 1));
                se_cell = num(stdev / std::sqrt(static_cast<double>(
                                          samples.size())),
                              "%.6f");
            }
            aggregate.add_row({num(static_cast<double>(days), "%g"),
                               num(mean, "%.6f"), se_cell,
                               num(static_cast<double>(samples.size()), "%g")});
        }
        write_table(aggregate,
                    global.out(std::string("vix_aggregate") +
                               extension(global.format)).string(),
                    global.format);
    }

    nlohmann::json effective{{"quotes", options.ingest.quotes_path},
                             {"parity_tolerance",
                              options.ingest.parity_tolerance},
                             {"horizons", options.horizon_days},
                             {"aggregate", options.aggregate}};
    RunManifest manifest;
    manifest.command = "vix";
    manifest.config_hash = digest_bytes(effective.dump());
    manifest.seed = global.seed;
    manifest.input_digests[options.ingest.quotes_path] =
        digest_file(options.ingest.quotes_path);
    if (!options.ingest.schema_path.empty())
        manifest.input_digests[options.ingest.schema_path] =
            digest_file(options.ingest.schema_path);
    write_manifest(manifest, global.out("vix_manifest.json").string());
    std::cerr << "vix: wrote " << out.string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// calibrate

struct CalibrateOptions {
    IngestOptions ingest;
    std::vector<double> alphas;  // empty -> config.alpha
};

void write_calibration_outputs(const GlobalOptions& global,
                               const std::string& date,
                               double alpha,
                               const CalibrationResult& result,
                               const VolSurface& surface,
                               const VarianceTermStructure& observed,
                               PenaltyMode penalty_mode,
                               const PricerSettings& settings) {
    const std::string stem = date + "_alpha" + alpha_label(alpha);

    nlohmann::json result_json{{"trade_date", date},
                               {"alpha", alpha},
                               {"result", result}};
    const fs::path result_path = global.out(stem + "_result.json");
    std::ofstream result_out(result_path);
    if (!result_out)
        throw std::runtime_error("cannot open " + result_path.string());
    result_out << result_json.dump(2) << '\n';

    Table smile;
    smile.header = {"maturity_yrs",        "strike_ccy",
                    "kind",                "std_moneyness_ratio",
                    "market_iv_pct",       "model_iv_pct"};
    for (std::size_t j = 0; j < surface.maturities.size(); ++j) {
        const double maturity = surface.maturities[j];
        std::vector<double> strikes;
        std::vector<OptionKind> kinds;
        for (const SurfaceQuote& quote : surface.quotes[j]) {
            strikes.push_back(quote.quote.strike);
            kinds.push_back(quote.quote.kind);
        }
        const std::vector<double> prices = price_european_strip(
            result.params, surface.env, maturity, strikes, kinds, settings);
        for (std::size_t i = 0; i < strikes.size(); ++i) {
            const SurfaceQuote& quote = surface.quotes[j][i];
            std::string model_iv_cell;
            try {
                const double iv =
                    implied_vol(surface.env, strikes[i], maturity, kinds[i],
                                prices[i], quote.implied_vol);
                model_iv_cell = num(100.0 * iv, "%.6f");
            } catch (const std::exception&) {
                // unattainable model price: leave the cell empty
            }
            smile.add_row({num(maturity), num(strikes[i]),
                           to_string(kinds[i]),
                           blank_or(quote.quote.std_moneyness, "%.6f"),
                           num(100.0 * quote.implied_vol, "%.6f"),
                           model_iv_cell});
        }
    }
    write_table(smile,
                global.out(stem + "_smile" + extension(global.format)).string(),
                global.format);

    Table ts_fit;
    ts_fit.header = {"maturity_yrs", "market_var_ann", "model_var_ann",
                     "market_vol_pct", "model_vol_pct"};
    for (const TsPoint& point : observed.points) {
        const bool model_is_vix = penalty_mode == PenaltyMode::approx_vs ||
                                  observed.kind == TsKind::vix_squared;
        const double model_level =
            model_is_vix ? bates_vix_squared(result.params, point.maturity)
                         : bates_variance_swap(result.params, point.maturity);
        ts_fit.add_row({num(point.maturity), num(point.level, "%.10e"),
                        num(model_level, "%.10e"),
                        num(100.0 * std::sqrt(point.level), "%.6f"),
                        num(100.0 * std::sqrt(model_level), "%.6f")});
    }
    write_table(ts_fit,
                global.out(stem + "_ts_fit" + extension(global.format)).string(),
                global.format);
}

int cmd_calibrate(const GlobalOptions& global,
                  const CalibrateOptions& options) {
    if (global.config_path.empty())
        throw std::invalid_argument(
            "calibrate requires --config <calibration json>");
    const nlohmann::json config_json = load_json_file(global.config_path);
    CalibrationConfig config = config_json.get<CalibrationConfig>();
    if (global.seed_set) config.seed = global.seed;

    std::optional<VarianceTermStructure> configured_ts;
    if (config_json.contains("observed_ts"))
        configured_ts =
            config_json.at("observed_ts").get<VarianceTermStructure>();

    const DatedPanel panel = ingest_panel(options.ingest);
    if (panel.by_date.empty())
        throw std::invalid_argument("no usable quotes in " +
                                    options.ingest.quotes_path);
    write_reject_reports(global, panel, "calibrate");

    std::vector<double> alphas =
        options.alphas.empty() ? std::vector<double>{config.alpha}
                               : options.alphas;
    const PricerSettings settings;

    for (const auto& [date, filtered] : panel.by_date) {
        const std::string date_text = date_string(date);
        if (filtered.surface.empty()) {
            std::cerr << "calibrate: " << date_text
                      << ": no quotes survive the filters, skipped\n";
            continue;
        }
        VarianceTermStructure observed;
        if (configured_ts) {
            observed = *configured_ts;
        } else {
            const MarketTsResult market =
                build_market_ts(filtered.surface, default_vix_horizons());
            for (const std::string& warning : market.warnings)
                std::cerr << "calibrate: " << date_text << ": " << warning
                          << "\n";
            observed = market.ts;
        }
        if (observed.kind != config.ts_kind)
            throw std::invalid_argument(
                "calibrate: config ts_kind disagrees with the observed term "
                "structure (replicated quotes give vix_squared; supply "
                "observed_ts in the config for variance-swap data)");

        Table mae;
        mae.header = {"alpha_frac",   "atm_mae_pct",  "otm_mae_pct",
                      "dotm_mae_pct", "objective_var", "iv_sse_var",
                      "ts_penalty_var", "converged",  "evaluations_count"};
        for (double alpha : alphas) {
            CalibrationConfig run_config = config;
            run_config.alpha = alpha;
            run_config.validate();
            const CalibrationResult result =
                calibrate(filtered.surface, observed, run_config, settings);
            write_calibration_outputs(global, date_text, alpha, result,
                                      filtered.surface, observed,
                                      run_config.penalty_mode, settings);
            const BucketMae buckets = bucket_errors(
                quote_errors(result.params, filtered.surface, settings));
            mae.add_row({alpha_label(alpha), blank_or(buckets.atm, "%.6f"),
                         blank_or(buckets.otm, "%.6f"),
                         blank_or(buckets.dotm, "%.6f"),
                         num(result.objective_value, "%.10e"),
                         num(result.iv_sse, "%.10e"),
                         num(result.ts_penalty, "%.10e"),
                         result.converged ? "true" : "false",
                         num(static_cast<double>(result.evaluations), "%g")});
            std::cerr << "calibrate: " << date_text << " alpha "
                      << alpha_label(alpha) << ": objective "
                      << num(result.objective_value, "%.3e") << " in "
                      << result.evaluations << " evaluations\n";
        }
        write_table(mae,
                    global.out(date_text + "_mae" + extension(global.format))
                        .string(),
                    global.format);
    }

    nlohmann::json effective{{"config", config},
                             {"alphas", alphas},
                             {"quotes", options.ingest.quotes_path},
                             {"parity_tolerance",
                              options.ingest.parity_tolerance}};
    RunManifest manifest;
    manifest.command = "calibrate";
    manifest.config_hash = digest_bytes(effective.dump());
    manifest.seed = config.seed;
    manifest.input_digests[options.ingest.quotes_path] =
        digest_file(options.ingest.quotes_path);
    manifest.input_digests[global.config_path] =
        digest_file(global.config_path);
    if (!options.ingest.schema_path.empty())
        manifest.input_digests[options.ingest.schema_path] =
            digest_file(options.ingest.schema_path);
    write_manifest(manifest, global.out("calibrate_manifest.json").string());
    return 0;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateOptions {
    std::string spec_path;
    int draws = 0;  // 0 -> keep spec value
    std::string mode;  // "", exact, approx, both
};

void add_summary_rows(Table& table, const RecoverySummary& summary) {
    for (const AlphaSummary& a : summary.per_alpha)
        table.add_row({alpha_label(a.alpha), to_string(summary.mode),
                       num(a.recovery_rate, "%.4f"),
                       blank_or(a.iv_mae.atm, "%.6f"),
                       blank_or(a.iv_mae.otm, "%.6f"),
                       blank_or(a.iv_mae.dotm, "%.6f"),
                       num(static_cast<double>(a.draws_used), "%g"),
                       num(static_cast<double>(a.failures), "%g")});
}

int cmd_simulate(const GlobalOptions& global, const SimulateOptions& options) {
    SimulationSpec spec;
    if (!options.spec_path.empty())
        spec = load_json_file(options.spec_path).get<SimulationSpec>();
    if (options.draws > 0) spec.n_draws = options.draws;
    if (global.seed_set) spec.seed = global.seed;
    spec.jobs = global.jobs;
    bool both_modes = options.mode == "both";
    if (options.mode == "exact") spec.mode = StudyMode::exact_vix;
    else if (options.mode == "approx") spec.mode = StudyMode::approx_vs;
    else if (!options.mode.empty() && !both_modes)
        throw std::invalid_argument("unknown --mode: " + options.mode);
    spec.validate();

    Table table;
    table.header = {"alpha_frac",  "mode",        "recovery_frac",
                    "atm_mae_pct", "otm_mae_pct", "dotm_mae_pct",
                    "draws_used_count", "failures_count"};
    nlohmann::json summary_json;
    if (both_modes) {
        SimulationSpec exact_spec = spec;
        exact_spec.mode = StudyMode::exact_vix;
        SimulationSpec approx_spec = spec;
        approx_spec.mode = StudyMode::approx_vs;
        const RecoverySummary exact = run_recovery_study(exact_spec);
        const RecoverySummary approx = run_recovery_study(approx_spec);
        add_summary_rows(table, exact);
        add_summary_rows(table, approx);
        summary_json = nlohmann::json::array({exact, approx});

        Table comparison;
        comparison.header = {"alpha_frac", "recovery_exact_frac",
                             "recovery_approx_frac", "gap_pp"};
        for (std::size_t i = 0; i < exact.per_alpha.size(); ++i) {
            const AlphaSummary& e = exact.per_alpha[i];
            const AlphaSummary& a = approx.per_alpha[i];
            comparison.add_row(
                {alpha_label(e.alpha), num(e.recovery_rate, "%.4f"),
                 num(a.recovery_rate, "%.4f"),
                 num(100.0 * (e.recovery_rate - a.recovery_rate), "%.2f")});
        }
        write_table(comparison,
                    global.out(std::string("simulate_mode_comparison") +
                               extension(global.format)).string(),
                    global.format);
    } else {
        const RecoverySummary summary = run_recovery_study(spec);
        add_summary_rows(table, summary);
        summary_json = summary;
    }

    const fs::path out =
        global.out(std::string("simulate_summary") + extension(global.format));
    write_table(table, out.string(), global.format);
    std::ofstream json_out(global.out("simulate_summary.json"));
    json_out << summary_json.dump(2) << '\n';

    RunManifest manifest;
    manifest.command = "simulate";
    manifest.config_hash =
        digest_bytes(nlohmann::json(spec).dump());
    manifest.seed = spec.seed;
    if (!options.spec_path.empty())
        manifest.input_digests[options.spec_path] =
            digest_file(options.spec_path);
    write_manifest(manifest, global.out("simulate_manifest.json").string());
    std::cerr << "simulate: wrote " << out.string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// report

struct ReportOptions {
    std::string results_dir;
};

int cmd_report(const GlobalOptions& global, const ReportOptions& options) {
    if (!fs::is_directory(options.results_dir))
        throw std::invalid_argument("--results is not a directory: " +
                                    options.results_dir);
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(options.results_dir))
        if (entry.is_regular_file() &&
            entry.path().filename().string().ends_with("_result.json"))
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());

    // alpha -> date -> fitted parameters
    std::map<double, std::map<std::string, BatesParams>> by_alpha;
    RunManifest manifest;
    for (const fs::path& file : files) {
        try {
            const nlohmann::json j = load_json_file(file.string());
            const std::string date = j.at("trade_date").get<std::string>();
            const double alpha = j.at("alpha").get<double>();
            const CalibrationResult result =
                j.at("result").get<CalibrationResult>();
            result.params.validate();
            by_alpha[alpha][date] = result.params;
            manifest.input_digests[file.string()] = digest_file(file.string());
        } catch (const std::exception& error) {
            std::cerr << "report: skipping " << file.string() << ": "
                      << error.what() << "\n";
        }
    }
    if (by_alpha.empty())
        throw std::invalid_argument("no readable *_result.json files in " +
                                    options.results_dir);

    constexpr double kTau = 1.0 / 12.0;  // one-month horizon
    constexpr std::size_t kWindow = 21;  // one trading month of observations
    for (const auto& [alpha, by_date] : by_alpha) {
        Table table;
        table.header = {"trade_date", "q_ratio", "spread_vol_pct",
                        "q_ratio_ma21", "spread_vol_pct_ma21"};
        std::vector<double> q_values, spread_values;
        for (const auto& [date, params] : by_date) {
            const double q = log_contract_multiplier(params, kTau);
            const double spread_pct =
                100.0 * (std::sqrt(bates_variance_swap(params, kTau)) -
                         std::sqrt(bates_vix_squared(params, kTau)));
            q_values.push_back(q);
            spread_values.push_back(spread_pct);
            std::string q_ma_cell, spread_ma_cell;
            if (q_values.size() >= kWindow) {
                double q_sum = 0.0, spread_sum = 0.0;
                for (std::size_t i = q_values.size() - kWindow;
                     i < q_values.size(); ++i) {
                    q_sum += q_values[i];
                    spread_sum += spread_values[i];
                }
                q_ma_cell = num(q_sum / kWindow, "%.8f");
                spread_ma_cell = num(spread_sum / kWindow, "%.8f");
            }
            table.add_row({date, num(q, "%.8f"), num(spread_pct, "%.8f"),
                           q_ma_cell, spread_ma_cell});
        }
        write_table(table,
                    global.out("report_alpha" + alpha_label(alpha) +
                               extension(global.format)).string(),
                    global.format);
    }

    manifest.command = "report";
    manifest.config_hash = digest_bytes(
        nlohmann::json{{"results_dir", options.results_dir}}.dump());
    manifest.seed = global.seed;
    write_manifest(manifest, global.out("report_manifest.json").string());
    std::cerr << "report: wrote per-alpha series for " << by_alpha.size()
              << " alpha value(s)\n";
    return 0;
}

}  // namespace jointcal::cli

// ---------------------------------------------------------------------------

int main(int argc, char** argv) {
    using namespace jointcal;
    using namespace jointcal::cli;

    CLI::App app{"joint IV-surface / variance term-structure calibration"};
    app.set_version_flag("--version", jointcal::version());
    app.require_subcommand(1);

    GlobalOptions global;
    std::string format_text = "csv";
    app.add_option("--config", global.config_path,
                   "JSON configuration file (calibrate: CalibrationConfig)");
    auto* seed_option =
        app.add_option("--seed", global.seed, "seed override for seeded commands");
    app.add_option("--jobs", global.jobs, "worker-thread cap")
        ->check(CLI::PositiveNumber);
    app.add_option("--output-dir", global.output_dir,
                   "directory for output artifacts (default .)");
    app.add_option("--format", format_text, "output table format: csv|json")
        ->check(CLI::IsMember({"csv", "json"}));

    PriceOptions price;
    CLI::App* price_cmd = app.add_subcommand("price", "price European options");
    price_cmd->add_option("--model", price.model, "bs|bates|sjd")->required();
    price_cmd->add_option("--spot", price.spot, "spot price");
    price_cmd->add_option("--rate", price.rate, "continuous rate");
    price_cmd->add_option("--dividend", price.dividend, "continuous dividend yield");
    price_cmd->add_option("--strikes", price.strikes, "strike list")
        ->required()->delimiter(',');
    price_cmd->add_option("--maturities", price.maturities,
                          "maturity list (years)")
        ->required()->delimiter(',');
    price_cmd->add_option("--kind", price.kind, "call|put|both (default both)");
    price_cmd->add_option("--vol", price.vol, "bs: volatility (decimal)");
    price_cmd->add_option("--params", price.params_path,
                          "bates: parameter JSON file");
    price_cmd->add_option("--sigma", price.sigma, "sjd: diffusive vol");
    price_cmd->add_option("--lambda", price.lambda, "sjd: jump intensity");
    price_cmd->add_option("--jump", price.jump, "sjd: log jump size");

    IvOptions iv;
    CLI::App* iv_cmd = app.add_subcommand("iv", "invert prices to implied vols");
    iv_cmd->add_option("--spot", iv.spot, "spot price");
    iv_cmd->add_option("--rate", iv.rate, "continuous rate");
    iv_cmd->add_option("--dividend", iv.dividend, "continuous dividend yield");
    iv_cmd->add_option("--strike", iv.strikes, "strike (repeatable)")
        ->required()->delimiter(',');
    iv_cmd->add_option("--price", iv.prices, "option price (pairs with --strike)")
        ->required()->delimiter(',');
    iv_cmd->add_option("--maturity", iv.maturity, "maturity (years)")->required();
    iv_cmd->add_option("--kind", iv.kind, "call|put");

    VixOptions vix;
    CLI::App* vix_cmd =
        app.add_subcommand("vix", "replicate the VIX term structure from quotes");
    vix_cmd->add_option("--quotes", vix.ingest.quotes_path, "panel CSV")
        ->required()->check(CLI::ExistingFile);
    vix_cmd->add_option("--schema", vix.ingest.schema_path,
                        "CSV column-mapping JSON");
    vix_cmd->add_option("--parity-tol", vix.ingest.parity_tolerance,
                        "parity filter tolerance (fraction of spot)");
    vix_cmd->add_option("--horizons", vix.horizon_days,
                        "horizon targets in days (default: 9d + monthly 1..12)")
        ->delimiter(',');
    vix_cmd->add_flag("--aggregate", vix.aggregate,
                      "also write per-horizon mean/standard-error table");

    CalibrateOptions calibrate_options;
    CLI::App* calibrate_cmd =
        app.add_subcommand("calibrate", "fit model parameters to a quote panel");
    calibrate_cmd->add_option("--quotes", calibrate_options.ingest.quotes_path,
                              "panel CSV")
        ->required()->check(CLI::ExistingFile);
    calibrate_cmd->add_option("--schema", calibrate_options.ingest.schema_path,
                              "CSV column-mapping JSON");
    calibrate_cmd->add_option("--parity-tol",
                              calibrate_options.ingest.parity_tolerance,
                              "parity filter tolerance (fraction of spot)");
    calibrate_cmd->add_option("--alpha", calibrate_options.alphas,
                              "objective weight(s); repeat or comma-separate "
                              "for a sweep (default: config value)")
        ->delimiter(',');

    SimulateOptions simulate;
    CLI::App* simulate_cmd =
        app.add_subcommand("simulate", "parameter-recovery simulation study");
    simulate_cmd->add_option("--spec", simulate.spec_path,
                             "SimulationSpec JSON (default: built-in spec)")
        ->check(CLI::ExistingFile);
    simulate_cmd->add_option("--draws", simulate.draws, "override n_draws")
        ->check(CLI::PositiveNumber);
    simulate_cmd->add_option("--mode", simulate.mode,
                             "exact|approx|both (default: spec value)");

    ReportOptions report;
    CLI::App* report_cmd = app.add_subcommand(
        "report", "multiplier and spread series from calibration results");
    report_cmd->add_option("--results", report.results_dir,
                           "directory of *_result.json files")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& error) {
        const int code = app.exit(error);
        return code == 0 ? 0 : 2;  // CLI misuse is a validation failure
    }

    global.seed_set = seed_option->count() > 0;
    global.format = parse_out_format(format_text);

    try {
        std::filesystem::create_directories(global.output_dir);
        if (price_cmd->parsed()) return cmd_price(global, price);
        if (iv_cmd->parsed()) return cmd_iv(global, iv);
        if (vix_cmd->parsed()) return cmd_vix(global, vix);
        if (calibrate_cmd->parsed())
            return cmd_calibrate(global, calibrate_options);
        if (simulate_cmd->parsed()) return cmd_simulate(global, simulate);
        if (report_cmd->parsed()) return cmd_report(global, report);
        std::cerr << "no subcommand selected\n";
        return 2;
    } catch (const std::invalid_argument& error) {
        std::cerr << "validation error: " << error.what() << "\n";
        return 2;
    } catch (const nlohmann::json::exception& error) {
        std::cerr << "validation error: " << error.what() << "\n";
        return 2;
    } catch (const calibration_error& error) {
        std::cerr << "numerical failure: " << error.what() << "\n";
        return 3;
    } catch (const std::exception& error) {
        std::cerr << "numerical failure: " << error.what() << "\n";
        return 3;
    }
}
