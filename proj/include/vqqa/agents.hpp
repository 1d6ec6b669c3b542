#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vqqa/agent_json.hpp"
#include "vqqa/backend.hpp"
#include "vqqa/core.hpp"

namespace vqqa {

// What the refiner may see of an earlier iteration. global_score is left
// empty unless GS-in-the-loop is enabled.
struct HistoryEntry {
  std::size_t iteration = 0;
  std::string prompt;
  std::vector<QAPair> qa_pairs;
  std::optional<int> global_score;
};

struct AgentContext {
  GenerationConditions conditions;
  std::string current_prompt;
  VideoArtifact current_video;
  std::vector<HistoryEntry> history;  // oldest first
};

// Builds history entries from finished records; scores are copied only when
// `include_global_scores` is set.
std::vector<HistoryEntry> make_history(std::span<const IterationRecord> records, bool include_global_scores);

struct QuestionSet {
  QuestionCategory category = QuestionCategory::Alignment;
  std::optional<std::size_t> image_index;
  std::vector<Question> questions;
};

struct CountRange {
  std::size_t min = 0;
  std::size_t max = 0;
};

// Hard question-count bounds per category.
CountRange question_count_range(QuestionCategory category);
// Suggested Alignment count for a prompt of `word_count` words (5-6, 7-8, 9-10).
CountRange alignment_count_guidance(std::size_t word_count);

// Response parsers; pure functions of the raw model text.
//   parse_question_set: MalformedResponse, CountViolation, PrefixViolation
//   parse_answers:      MalformedResponse, CountMismatch, RangeViolation
//   parse_refinement:   MalformedResponse, RangeViolation (I2V item score)
QuestionSet parse_question_set(std::string_view raw, QuestionCategory category,
                               std::optional<std::size_t> image_index = std::nullopt);
std::vector<QAPair> parse_answers(std::string_view raw, std::span<const Question> questions);
RefinementAnalysis parse_refinement(std::string_view raw, TaskKind task_kind);

// Slot renderings shared by the agents and the audit tooling.
std::string format_qa_pairs(std::span<const QAPair> pairs, std::optional<int> highlight_below = std::nullopt);
std::string format_history(std::span<const HistoryEntry> history);
std::string format_question_list(std::span<const Question> questions);

struct AgentOptions {
  int malformed_retries = 1;
  int transport_retries = 2;
  // Annotates QA pairs scoring below this value in the refinement prompt.
  std::optional<int> highlight_below;
};

// The three agents of one trajectory. Every successful call is counted in
// the bound ledger; re-issued requests go to ledger.retries.
class AgentSuite {
 public:
  AgentSuite(VlmClient& vlm, CostLedger& ledger, AgentOptions options = {});

  // `image_index` selects the reference image for ConditionFidelity.
  QuestionSet generate_questions(QuestionCategory category, const AgentContext& ctx,
                                 std::optional<std::size_t> image_index = std::nullopt);

  // One QA call over all questions; answers are matched by position.
  std::vector<QAPair> answer_questions(const VideoArtifact& video, std::span<const Question> questions,
                                       const AgentContext& ctx);

  RefinementAnalysis refine_prompt(const AgentContext& ctx, std::span<const QAPair> qa_pairs);

  // Request builders, exposed for inspection tests.
  CompletionRequest question_request(QuestionCategory category, const AgentContext& ctx,
                                     std::optional<std::size_t> image_index) const;
  CompletionRequest answer_request(const VideoArtifact& video, std::span<const Question> questions,
                                   const AgentContext& ctx) const;
  CompletionRequest refine_request(const AgentContext& ctx, std::span<const QAPair> qa_pairs) const;

 private:
  template <typename Parse>
  auto call_with_retry(const CompletionRequest& request, Parse parse);

  VlmClient& vlm_;
  CostLedger& ledger_;
  AgentOptions options_;
};

}  // namespace vqqa
