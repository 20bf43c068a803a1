#pragma once

// JSON serialization for every domain type, with field names matching the
// struct members one-to-one. Optional OptionQuote fields are omitted when
// absent. from_json performs structural parsing only; call validate() on the
// result where the context requires it.

#include "json.hpp"

#include "jointcal/pricing.hpp"
#include "jointcal/simulation.hpp"
#include "jointcal/types.hpp"

namespace jointcal {

using nlohmann::json;

OptionKind parse_option_kind(const std::string& text);
TsKind parse_ts_kind(const std::string& text);
PenaltyMode parse_penalty_mode(const std::string& text);
StudyMode parse_study_mode(const std::string& text);
WeightRule::Kind parse_weight_rule_kind(const std::string& text);
const char* to_string(WeightRule::Kind kind);

void to_json(json& j, const MarketEnv& v);
void from_json(const json& j, MarketEnv& v);

void to_json(json& j, const BatesParams& v);
void from_json(const json& j, BatesParams& v);

void to_json(json& j, const SjdParams& v);
void from_json(const json& j, SjdParams& v);

void to_json(json& j, const OptionQuote& v);
void from_json(const json& j, OptionQuote& v);

void to_json(json& j, const SurfaceQuote& v);
void from_json(const json& j, SurfaceQuote& v);

void to_json(json& j, const VolSurface& v);
void from_json(const json& j, VolSurface& v);

void to_json(json& j, const TsPoint& v);
void from_json(const json& j, TsPoint& v);

void to_json(json& j, const VarianceTermStructure& v);
void from_json(const json& j, VarianceTermStructure& v);

void to_json(json& j, const WeightRule& v);
void from_json(const json& j, WeightRule& v);

void to_json(json& j, const ParamBounds& v);
void from_json(const json& j, ParamBounds& v);

void to_json(json& j, const OptimizerSettings& v);
void from_json(const json& j, OptimizerSettings& v);

void to_json(json& j, const CalibrationConfig& v);
void from_json(const json& j, CalibrationConfig& v);

void to_json(json& j, const MaturityValue& v);
void from_json(const json& j, MaturityValue& v);

void to_json(json& j, const CalibrationResult& v);
void from_json(const json& j, CalibrationResult& v);

void to_json(json& j, const PricerSettings& v);
void from_json(const json& j, PricerSettings& v);

void to_json(json& j, const DrawRange& v);
void from_json(const json& j, DrawRange& v);

void to_json(json& j, const DrawRanges& v);
void from_json(const json& j, DrawRanges& v);

void to_json(json& j, const StrikeRange& v);
void from_json(const json& j, StrikeRange& v);

void to_json(json& j, const SimulationSpec& v);
void from_json(const json& j, SimulationSpec& v);

void to_json(json& j, const BucketMae& v);
void from_json(const json& j, BucketMae& v);

void to_json(json& j, const AlphaSummary& v);
void from_json(const json& j, AlphaSummary& v);

void to_json(json& j, const RecoverySummary& v);
void from_json(const json& j, RecoverySummary& v);

}  // namespace jointcal
