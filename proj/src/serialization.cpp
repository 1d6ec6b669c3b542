#include "vqqa/serialization.hpp"

namespace vqqa {
namespace {

using nlohmann::json;

template <typename T>
void put_optional(json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}

template <typename T>
void get_optional(const json& j, const char* key, std::optional<T>& out) {
  if (auto it = j.find(key); it != j.end() && !it->is_null()) {
    out = it->get<T>();
  } else {
    out.reset();
  }
}

}  // namespace

void to_json(json& j, const Score& v) { j = v.value(); }
void from_json(const json& j, Score& v) { v = Score(j.get<int>()); }

void to_json(json& j, const GenerationConditions& v) {
  j = {{"original_prompt", v.original_prompt},
       {"reference_images", v.reference_images},
       {"task_kind", to_string(v.task_kind)},
       {"sample_index", v.sample_index}};
}
void from_json(const json& j, GenerationConditions& v) {
  v.original_prompt = j.at("original_prompt").get<std::string>();
  v.reference_images = j.value("reference_images", std::vector<std::string>{});
  v.task_kind = task_kind_from_string(j.at("task_kind").get<std::string>());
  v.sample_index = j.value("sample_index", std::uint32_t{0});
}

void to_json(json& j, const VideoArtifact& v) {
  j = {{"locator", v.locator}, {"generator_id", v.generator_id}, {"iteration_index", v.iteration_index}};
  put_optional(j, "seed", v.seed);
}
void from_json(const json& j, VideoArtifact& v) {
  v.locator = j.at("locator").get<std::string>();
  v.generator_id = j.at("generator_id").get<std::string>();
  v.iteration_index = j.at("iteration_index").get<std::size_t>();
  get_optional(j, "seed", v.seed);
}

void to_json(json& j, const Question& v) {
  j = {{"text", v.text}, {"category", to_string(v.category)}};
  put_optional(j, "source_image_index", v.source_image_index);
}
void from_json(const json& j, Question& v) {
  v.text = j.at("text").get<std::string>();
  v.category = question_category_from_string(j.at("category").get<std::string>());
  get_optional(j, "source_image_index", v.source_image_index);
}

void to_json(json& j, const QAPair& v) { j = {{"question", v.question}, {"score", v.score}}; }
void from_json(const json& j, QAPair& v) {
  v.question = j.at("question").get<Question>();
  v.score = j.at("score").get<Score>();
}

void to_json(json& j, const FlawItem& v) {
  j = {{"vqa_pair_or_question", v.vqa_pair_or_question},
       {"identified_flaw", v.identified_flaw},
       {"action_or_correlation", v.action_or_correlation}};
  put_optional(j, "score", v.score);
  put_optional(j, "category", v.category);
}
void from_json(const json& j, FlawItem& v) {
  v.vqa_pair_or_question = j.at("vqa_pair_or_question").get<std::string>();
  v.identified_flaw = j.at("identified_flaw").get<std::string>();
  v.action_or_correlation = j.at("action_or_correlation").get<std::string>();
  get_optional(j, "score", v.score);
  get_optional(j, "category", v.category);
}

void to_json(json& j, const RefinementAnalysis& v) {
  j = {{"historical_summary", v.historical_summary},
       {"flaw_items", v.flaw_items},
       {"refinement_strategy", v.refinement_strategy},
       {"refined_prompt", v.refined_prompt}};
}
void from_json(const json& j, RefinementAnalysis& v) {
  v.historical_summary = j.at("historical_summary").get<std::string>();
  v.flaw_items = j.at("flaw_items").get<std::vector<FlawItem>>();
  v.refinement_strategy = j.at("refinement_strategy").get<std::string>();
  v.refined_prompt = j.at("refined_prompt").get<std::string>();
}

void to_json(json& j, const GlobalScoreRecord& v) {
  j = {{"iteration_index", v.iteration_index}, {"score", v.score}, {"raw_response", v.raw_response}};
}
void from_json(const json& j, GlobalScoreRecord& v) {
  v.iteration_index = j.at("iteration_index").get<std::size_t>();
  v.score = j.at("score").get<Score>();
  v.raw_response = j.at("raw_response").get<std::string>();
}

void to_json(json& j, const IterationRecord& v) {
  j = {{"index", v.index},
       {"prompt_used", v.prompt_used},
       {"video", v.video},
       {"questions", v.questions},
       {"qa_pairs", v.qa_pairs},
       {"global_score", v.global_score},
       {"safety_rejected", v.safety_rejected}};
  put_optional(j, "seed", v.seed);
  put_optional(j, "refinement", v.refinement);
}
void from_json(const json& j, IterationRecord& v) {
  v.index = j.at("index").get<std::size_t>();
  v.prompt_used = j.at("prompt_used").get<std::string>();
  v.video = j.at("video").get<VideoArtifact>();
  v.questions = j.at("questions").get<std::vector<Question>>();
  v.qa_pairs = j.at("qa_pairs").get<std::vector<QAPair>>();
  v.global_score = j.at("global_score").get<GlobalScoreRecord>();
  v.safety_rejected = j.value("safety_rejected", false);
  get_optional(j, "seed", v.seed);
  get_optional(j, "refinement", v.refinement);
}

void to_json(json& j, const CostLedger& v) {
  j = {{"question_gen_calls", v.question_gen_calls},
       {"qa_calls", v.qa_calls},
       {"refine_calls", v.refine_calls},
       {"global_rate_calls", v.global_rate_calls},
       {"retries", v.retries},
       {"total", v.total()}};
}
void from_json(const json& j, CostLedger& v) {
  v.question_gen_calls = j.at("question_gen_calls").get<std::uint64_t>();
  v.qa_calls = j.at("qa_calls").get<std::uint64_t>();
  v.refine_calls = j.at("refine_calls").get<std::uint64_t>();
  v.global_rate_calls = j.at("global_rate_calls").get<std::uint64_t>();
  v.retries = j.value("retries", std::uint64_t{0});
}

void to_json(json& j, const StopPolicy& v) {
  j = {{"gamma", v.gamma}, {"patience", v.patience}, {"epsilon", v.epsilon}, {"max_rounds", v.max_rounds}};
}
// Missing keys keep their defaults so config files may be partial.
void from_json(const json& j, StopPolicy& v) {
  const StopPolicy d;
  v.gamma = j.value("gamma", d.gamma);
  v.patience = j.value("patience", d.patience);
  v.epsilon = j.value("epsilon", d.epsilon);
  v.max_rounds = j.value("max_rounds", d.max_rounds);
}

void to_json(json& j, const Trajectory& v) {
  j = {{"conditions", v.conditions},
       {"kind", to_string(v.kind)},
       {"strategy", to_string(v.strategy)},
       {"records", v.records},
       {"ledger", v.ledger}};
  if (v.stop_reason) j["stop_reason"] = to_string(*v.stop_reason);
  put_optional(j, "selected_index", v.selected_index);
}
void from_json(const json& j, Trajectory& v) {
  v.conditions = j.at("conditions").get<GenerationConditions>();
  v.kind = trajectory_kind_from_string(j.at("kind").get<std::string>());
  v.strategy = selection_strategy_from_string(j.at("strategy").get<std::string>());
  v.records = j.at("records").get<std::vector<IterationRecord>>();
  v.ledger = j.at("ledger").get<CostLedger>();
  if (auto it = j.find("stop_reason"); it != j.end()) {
    v.stop_reason = stop_reason_from_string(it->get<std::string>());
  } else {
    v.stop_reason.reset();
  }
  get_optional(j, "selected_index", v.selected_index);
}

}  // namespace vqqa
