#include "jointcal/json_io.hpp"

#include <stdexcept>

namespace jointcal {

namespace {

std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

[[noreturn]] void unknown_value(const char* what, const std::string& text) {
    throw std::invalid_argument(std::string(what) + ": unknown value '" + text + "'");
}

}  // namespace

OptionKind parse_option_kind(const std::string& text) {
    const std::string t = lower(text);
    if (t == "call" || t == "c") return OptionKind::call;
    if (t == "put" || t == "p") return OptionKind::put;
    unknown_value("option kind", text);
}

TsKind parse_ts_kind(const std::string& text) {
    const std::string t = lower(text);
    if (t == "vix_squared") return TsKind::vix_squared;
    if (t == "variance_swap") return TsKind::variance_swap;
    unknown_value("term-structure kind", text);
}

PenaltyMode parse_penalty_mode(const std::string& text) {
    const std::string t = lower(text);
    if (t == "exact") return PenaltyMode::exact;
    if (t == "approx_vs") return PenaltyMode::approx_vs;
    unknown_value("penalty mode", text);
}

StudyMode parse_study_mode(const std::string& text) {
    const std::string t = lower(text);
    if (t == "exact_vix") return StudyMode::exact_vix;
    if (t == "approx_vs") return StudyMode::approx_vs;
    unknown_value("study mode", text);
}

WeightRule::Kind parse_weight_rule_kind(const std::string& text) {
    const std::string t = lower(text);
    if (t == "uniform") return WeightRule::Kind::uniform;
    if (t == "n_quotes") return WeightRule::Kind::n_quotes;
    unknown_value("weight rule", text);
}

const char* to_string(WeightRule::Kind kind) {
    return kind == WeightRule::Kind::uniform ? "uniform" : "n_quotes";
}

void to_json(json& j, const MarketEnv& v) {
    j = json{{"spot", v.spot}, {"rate", v.rate}, {"dividend_yield", v.dividend_yield}};
}
void from_json(const json& j, MarketEnv& v) {
    j.at("spot").get_to(v.spot);
    j.at("rate").get_to(v.rate);
    j.at("dividend_yield").get_to(v.dividend_yield);
}

void to_json(json& j, const BatesParams& v) {
    j = json{{"v0", v.v0},         {"kappa", v.kappa},   {"theta", v.theta},
             {"sigma_v", v.sigma_v}, {"rho", v.rho},     {"lambda", v.lambda},
             {"mu_j", v.mu_j},     {"sigma_j", v.sigma_j}};
}
void from_json(const json& j, BatesParams& v) {
    j.at("v0").get_to(v.v0);
    j.at("kappa").get_to(v.kappa);
    j.at("theta").get_to(v.theta);
    j.at("sigma_v").get_to(v.sigma_v);
    j.at("rho").get_to(v.rho);
    j.at("lambda").get_to(v.lambda);
    j.at("mu_j").get_to(v.mu_j);
    j.at("sigma_j").get_to(v.sigma_j);
}

void to_json(json& j, const SjdParams& v) {
    j = json{{"sigma", v.sigma}, {"lambda", v.lambda}, {"jump", v.jump}};
}
void from_json(const json& j, SjdParams& v) {
    j.at("sigma").get_to(v.sigma);
    j.at("lambda").get_to(v.lambda);
    j.at("jump").get_to(v.jump);
}

void to_json(json& j, const OptionQuote& v) {
    j = json{{"strike", v.strike},
             {"maturity", v.maturity},
             {"kind", to_string(v.kind)},
             {"mid", v.mid}};
    if (v.bid) j["bid"] = *v.bid;
    if (v.ask) j["ask"] = *v.ask;
    if (v.forward) j["forward"] = *v.forward;
    if (v.std_moneyness) j["std_moneyness"] = *v.std_moneyness;
}
void from_json(const json& j, OptionQuote& v) {
    j.at("strike").get_to(v.strike);
    j.at("maturity").get_to(v.maturity);
    v.kind = parse_option_kind(j.at("kind").get<std::string>());
    j.at("mid").get_to(v.mid);
    v.bid = j.contains("bid") && !j["bid"].is_null()
                ? std::optional<double>(j["bid"].get<double>())
                : std::nullopt;
    v.ask = j.contains("ask") && !j["ask"].is_null()
                ? std::optional<double>(j["ask"].get<double>())
                : std::nullopt;
    v.forward = j.contains("forward") && !j["forward"].is_null()
                    ? std::optional<double>(j["forward"].get<double>())
                    : std::nullopt;
    v.std_moneyness = j.contains("std_moneyness") && !j["std_moneyness"].is_null()
                          ? std::optional<double>(j["std_moneyness"].get<double>())
                          : std::nullopt;
}

void to_json(json& j, const SurfaceQuote& v) {
    to_json(j, v.quote);
    j["implied_vol"] = v.implied_vol;
}
void from_json(const json& j, SurfaceQuote& v) {
    from_json(j, v.quote);
    j.at("implied_vol").get_to(v.implied_vol);
}

void to_json(json& j, const VolSurface& v) {
    j = json{{"env", v.env}, {"maturities", v.maturities}, {"quotes", v.quotes}};
}
void from_json(const json& j, VolSurface& v) {
    j.at("env").get_to(v.env);
    j.at("maturities").get_to(v.maturities);
    j.at("quotes").get_to(v.quotes);
}

void to_json(json& j, const TsPoint& v) {
    j = json{{"maturity", v.maturity}, {"level", v.level}};
}
void from_json(const json& j, TsPoint& v) {
    j.at("maturity").get_to(v.maturity);
    j.at("level").get_to(v.level);
}

void to_json(json& j, const VarianceTermStructure& v) {
    j = json{{"kind", to_string(v.kind)}, {"points", v.points}};
}
void from_json(const json& j, VarianceTermStructure& v) {
    v.kind = parse_ts_kind(j.at("kind").get<std::string>());
    j.at("points").get_to(v.points);
}

void to_json(json& j, const WeightRule& v) {
    j = json{{"rule", to_string(v.rule)}, {"scale", v.scale}};
}
void from_json(const json& j, WeightRule& v) {
    if (j.is_string()) {  // shorthand: "uniform" == {"rule":"uniform","scale":1}
        v.rule = parse_weight_rule_kind(j.get<std::string>());
        v.scale = 1.0;
        return;
    }
    v.rule = parse_weight_rule_kind(j.at("rule").get<std::string>());
    v.scale = j.value("scale", 1.0);
}

void to_json(json& j, const ParamBounds& v) {
    j = json{{"lower", v.lower}, {"upper", v.upper}};
}
void from_json(const json& j, ParamBounds& v) {
    j.at("lower").get_to(v.lower);
    j.at("upper").get_to(v.upper);
}

void to_json(json& j, const OptimizerSettings& v) {
    j = json{{"tolerance", v.tolerance},
             {"max_evaluations", v.max_evaluations},
             {"restarts", v.restarts}};
}
void from_json(const json& j, OptimizerSettings& v) {
    OptimizerSettings defaults;
    v.tolerance = j.value("tolerance", defaults.tolerance);
    v.max_evaluations = j.value("max_evaluations", defaults.max_evaluations);
    v.restarts = j.value("restarts", defaults.restarts);
}

void to_json(json& j, const CalibrationConfig& v) {
    j = json{{"alpha", v.alpha},
             {"contract_weights", v.contract_weights},
             {"ts_weights", v.ts_weights},
             {"bounds", v.bounds},
             {"initial_guess", v.initial_guess},
             {"optimizer", v.optimizer},
             {"ts_kind", to_string(v.ts_kind)},
             {"penalty_mode", to_string(v.penalty_mode)},
             {"seed", v.seed}};
}
void from_json(const json& j, CalibrationConfig& v) {
    CalibrationConfig defaults;
    j.at("alpha").get_to(v.alpha);
    v.contract_weights =
        j.contains("contract_weights") ? j["contract_weights"].get<WeightRule>()
                                       : defaults.contract_weights;
    v.ts_weights = j.contains("ts_weights") ? j["ts_weights"].get<WeightRule>()
                                            : defaults.ts_weights;
    j.at("bounds").get_to(v.bounds);
    j.at("initial_guess").get_to(v.initial_guess);
    v.optimizer = j.contains("optimizer") ? j["optimizer"].get<OptimizerSettings>()
                                          : defaults.optimizer;
    v.ts_kind = j.contains("ts_kind")
                    ? parse_ts_kind(j["ts_kind"].get<std::string>())
                    : defaults.ts_kind;
    v.penalty_mode = j.contains("penalty_mode")
                         ? parse_penalty_mode(j["penalty_mode"].get<std::string>())
                         : defaults.penalty_mode;
    v.seed = j.value("seed", defaults.seed);
}

void to_json(json& j, const MaturityValue& v) {
    j = json{{"maturity", v.maturity}, {"value", v.value}};
}
void from_json(const json& j, MaturityValue& v) {
    j.at("maturity").get_to(v.maturity);
    j.at("value").get_to(v.value);
}

void to_json(json& j, const CalibrationResult& v) {
    j = json{{"params", v.params},
             {"objective_value", v.objective_value},
             {"iv_sse", v.iv_sse},
             {"ts_penalty", v.ts_penalty},
             {"iv_mae_by_maturity", v.iv_mae_by_maturity},
             {"ts_error_by_maturity", v.ts_error_by_maturity},
             {"converged", v.converged},
             {"evaluations", v.evaluations},
             {"iv_inversion_failures", v.iv_inversion_failures}};
}
void from_json(const json& j, CalibrationResult& v) {
    j.at("params").get_to(v.params);
    j.at("objective_value").get_to(v.objective_value);
    j.at("iv_sse").get_to(v.iv_sse);
    j.at("ts_penalty").get_to(v.ts_penalty);
    j.at("iv_mae_by_maturity").get_to(v.iv_mae_by_maturity);
    j.at("ts_error_by_maturity").get_to(v.ts_error_by_maturity);
    j.at("converged").get_to(v.converged);
    j.at("evaluations").get_to(v.evaluations);
    v.iv_inversion_failures = j.value("iv_inversion_failures", std::int64_t{0});
}

void to_json(json& j, const PricerSettings& v) {
    j = json{{"fourier_grid_size", v.fourier_grid_size},
             {"truncation_width", v.truncation_width},
             {"quadrature", v.quadrature}};
}
void from_json(const json& j, PricerSettings& v) {
    PricerSettings defaults;
    v.fourier_grid_size = j.value("fourier_grid_size", defaults.fourier_grid_size);
    v.truncation_width = j.value("truncation_width", defaults.truncation_width);
    v.quadrature = j.value("quadrature", defaults.quadrature);
}

void to_json(json& j, const DrawRange& v) {
    j = json{{"lower", v.lower}, {"upper", v.upper}};
}
void from_json(const json& j, DrawRange& v) {
    j.at("lower").get_to(v.lower);
    j.at("upper").get_to(v.upper);
}

void to_json(json& j, const DrawRanges& v) {
    j = json{{"v0", v.v0},         {"kappa", v.kappa},   {"theta", v.theta},
             {"sigma_v", v.sigma_v}, {"rho", v.rho},     {"lambda", v.lambda},
             {"mu_j", v.mu_j},     {"sigma_j", v.sigma_j}};
}
void from_json(const json& j, DrawRanges& v) {
    DrawRanges defaults;
    v.v0 = j.contains("v0") ? j["v0"].get<DrawRange>() : defaults.v0;
    v.kappa = j.contains("kappa") ? j["kappa"].get<DrawRange>() : defaults.kappa;
    v.theta = j.contains("theta") ? j["theta"].get<DrawRange>() : defaults.theta;
    v.sigma_v = j.contains("sigma_v") ? j["sigma_v"].get<DrawRange>() : defaults.sigma_v;
    v.rho = j.contains("rho") ? j["rho"].get<DrawRange>() : defaults.rho;
    v.lambda = j.contains("lambda") ? j["lambda"].get<DrawRange>() : defaults.lambda;
    v.mu_j = j.contains("mu_j") ? j["mu_j"].get<DrawRange>() : defaults.mu_j;
    v.sigma_j = j.contains("sigma_j") ? j["sigma_j"].get<DrawRange>() : defaults.sigma_j;
}

void to_json(json& j, const StrikeRange& v) {
    j = json{{"min", v.min}, {"max", v.max}, {"step", v.step}};
}
void from_json(const json& j, StrikeRange& v) {
    StrikeRange defaults;
    v.min = j.value("min", defaults.min);
    v.max = j.value("max", defaults.max);
    v.step = j.value("step", defaults.step);
}

void to_json(json& j, const SimulationSpec& v) {
    j = json{{"n_draws", v.n_draws},
             {"seed", v.seed},
             {"base_params", v.base_params},
             {"draw_ranges", v.draw_ranges},
             {"alpha_grid", v.alpha_grid},
             {"maturity_days", v.maturity_days},
             {"strikes", v.strikes},
             {"spot", v.spot},
             {"rate", v.rate},
             {"dividend", v.dividend},
             {"min_price", v.min_price},
             {"mode", to_string(v.mode)},
             {"optimizer", v.optimizer},
             {"recovery_rel_tol", v.recovery_rel_tol},
             {"recovery_abs_tol", v.recovery_abs_tol},
             {"jobs", v.jobs}};
}
void from_json(const json& j, SimulationSpec& v) {
    SimulationSpec defaults;
    v.n_draws = j.value("n_draws", defaults.n_draws);
    v.seed = j.value("seed", defaults.seed);
    v.base_params = j.contains("base_params") ? j["base_params"].get<BatesParams>()
                                              : defaults.base_params;
    v.draw_ranges = j.contains("draw_ranges") ? j["draw_ranges"].get<DrawRanges>()
                                              : defaults.draw_ranges;
    v.alpha_grid = j.contains("alpha_grid")
                       ? j["alpha_grid"].get<std::vector<double>>()
                       : defaults.alpha_grid;
    v.maturity_days = j.contains("maturity_days")
                          ? j["maturity_days"].get<std::vector<int>>()
                          : defaults.maturity_days;
    v.strikes = j.contains("strikes") ? j["strikes"].get<StrikeRange>()
                                      : defaults.strikes;
    v.spot = j.value("spot", defaults.spot);
    v.rate = j.value("rate", defaults.rate);
    v.dividend = j.value("dividend", defaults.dividend);
    v.min_price = j.value("min_price", defaults.min_price);
    v.mode = j.contains("mode") ? parse_study_mode(j["mode"].get<std::string>())
                                : defaults.mode;
    v.optimizer = j.contains("optimizer") ? j["optimizer"].get<OptimizerSettings>()
                                          : defaults.optimizer;
    v.recovery_rel_tol = j.value("recovery_rel_tol", defaults.recovery_rel_tol);
    v.recovery_abs_tol = j.value("recovery_abs_tol", defaults.recovery_abs_tol);
    v.jobs = j.value("jobs", defaults.jobs);
}

void to_json(json& j, const BucketMae& v) {
    j = json::object();
    if (v.atm) j["atm"] = *v.atm;
    if (v.otm) j["otm"] = *v.otm;
    if (v.dotm) j["dotm"] = *v.dotm;
}
void from_json(const json& j, BucketMae& v) {
    v.atm = j.contains("atm") && !j["atm"].is_null()
                ? std::optional<double>(j["atm"].get<double>())
                : std::nullopt;
    v.otm = j.contains("otm") && !j["otm"].is_null()
                ? std::optional<double>(j["otm"].get<double>())
                : std::nullopt;
    v.dotm = j.contains("dotm") && !j["dotm"].is_null()
                 ? std::optional<double>(j["dotm"].get<double>())
                 : std::nullopt;
}

void to_json(json& j, const AlphaSummary& v) {
    j = json{{"alpha", v.alpha},
             {"iv_mae", v.iv_mae},
             {"recovery_rate", v.recovery_rate},
             {"vix_error_by_maturity", v.vix_error_by_maturity},
             {"draws_used", v.draws_used},
             {"failures", v.failures}};
}
void from_json(const json& j, AlphaSummary& v) {
    j.at("alpha").get_to(v.alpha);
    j.at("iv_mae").get_to(v.iv_mae);
    j.at("recovery_rate").get_to(v.recovery_rate);
    j.at("vix_error_by_maturity").get_to(v.vix_error_by_maturity);
    v.draws_used = j.value("draws_used", 0);
    v.failures = j.value("failures", 0);
}

void to_json(json& j, const RecoverySummary& v) {
    j = json{{"mode", to_string(v.mode)},
             {"n_draws", v.n_draws},
             {"seed", v.seed},
             {"per_alpha", v.per_alpha}};
}
void from_json(const json& j, RecoverySummary& v) {
    v.mode = parse_study_mode(j.at("mode").get<std::string>());
    j.at("n_draws").get_to(v.n_draws);
    v.seed = j.value("seed", std::uint64_t{0});
    j.at("per_alpha").get_to(v.per_alpha);
}

}  // namespace jointcal
