#pragma once

#include <json.hpp>

#include "vqqa/core.hpp"

namespace vqqa {

// nlohmann adapters for the domain model. Enums are written by name; absent
// optionals are omitted. from_json throws nlohmann::json exceptions or
// vqqa::Error (ConfigError for unknown enum names, RangeViolation for scores).

void to_json(nlohmann::json& j, const Score& v);
void from_json(const nlohmann::json& j, Score& v);

void to_json(nlohmann::json& j, const GenerationConditions& v);
void from_json(const nlohmann::json& j, GenerationConditions& v);

void to_json(nlohmann::json& j, const VideoArtifact& v);
void from_json(const nlohmann::json& j, VideoArtifact& v);

void to_json(nlohmann::json& j, const Question& v);
void from_json(const nlohmann::json& j, Question& v);

void to_json(nlohmann::json& j, const QAPair& v);
void from_json(const nlohmann::json& j, QAPair& v);

void to_json(nlohmann::json& j, const FlawItem& v);
void from_json(const nlohmann::json& j, FlawItem& v);

void to_json(nlohmann::json& j, const RefinementAnalysis& v);
void from_json(const nlohmann::json& j, RefinementAnalysis& v);

void to_json(nlohmann::json& j, const GlobalScoreRecord& v);
void from_json(const nlohmann::json& j, GlobalScoreRecord& v);

void to_json(nlohmann::json& j, const IterationRecord& v);
void from_json(const nlohmann::json& j, IterationRecord& v);

void to_json(nlohmann::json& j, const CostLedger& v);
void from_json(const nlohmann::json& j, CostLedger& v);

void to_json(nlohmann::json& j, const StopPolicy& v);
void from_json(const nlohmann::json& j, StopPolicy& v);

void to_json(nlohmann::json& j, const Trajectory& v);
void from_json(const nlohmann::json& j, Trajectory& v);

}  // namespace vqqa
