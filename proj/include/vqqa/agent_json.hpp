#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

namespace vqqa {

using json = nlohmann::json;

// Response schema expected from each agent role.
enum class ResponseSchema {
  Questions,       // {"questions": [string, ...]}
  Answers,         // {"answers": [{"question": string, "score": 0..100}, ...]}
  RefinementT2V,   // {"analysis": {"historical_summary", "vqa_flaw_identification"}, ...}
  RefinementI2V,   // {"analysis": {"historical_summary", "vqa_failure_analysis"}, ...}
  Problems,        // {"problems": [string, ...]}
  Relevance,       // {"is_relevant": bool}
  Indices,         // {"indices": [int, ...]}
};

std::string_view to_string(ResponseSchema schema);

// Returns the first balanced `{...}` span in `text` that parses as a JSON
// object. Markdown fences and surrounding prose are skipped. Never throws.
std::optional<json> extract_first_json(std::string_view text) noexcept;

// extract_first_json + schema validation. Throws NoJsonFound, or SchemaError
// whose path points at the offending field (e.g. "answers[2].score").
json parse_agent_json(ResponseSchema schema, std::string_view raw);

// Schema check on an already-parsed payload.
void validate_schema(ResponseSchema schema, const json& payload);

}  // namespace vqqa
