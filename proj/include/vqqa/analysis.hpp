#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "vqqa/backend.hpp"
#include "vqqa/core.hpp"
#include "vqqa/error.hpp"

namespace vqqa {

// Worst-case VLM calls for T refinement rounds with k reference images:
// (5 + k) * T + 1. T may be fractional (an average). Throws RangeViolation
// on negative or non-finite input.
double expected_vlm_calls(double rounds, double image_count);

struct AuditDeviation {
  std::string role;
  std::uint64_t expected = 0;
  std::uint64_t actual = 0;
};

struct AuditReport {
  TrajectoryKind kind = TrajectoryKind::Optimize;
  std::size_t rounds = 0;  // T = records - 1 for optimize runs
  std::size_t image_count = 0;
  std::optional<StopReason> stop_reason;
  CostLedger expected;
  CostLedger actual;
  double theoretical_max = 0.0;  // expected_vlm_calls(T, k), or N for best-of-n
  std::vector<int> scores;
  std::vector<int> best_so_far;
  std::vector<AuditDeviation> deviations;
  std::vector<std::string> notes;

  bool ok() const noexcept { return deviations.empty(); }
  bool within_max() const noexcept { return static_cast<double>(actual.total()) <= theoretical_max; }
};

// Recomputes per-role call counts from the trajectory's shape and compares
// them with its ledger. Never throws on a well-typed trajectory.
AuditReport audit_ledger(const Trajectory& trajectory);
nlohmann::json audit_to_json(const AuditReport& report);

struct CoverageInputs {
  std::vector<std::string> gt_problems;
  std::vector<Question> questions;
  std::vector<bool> relevance_flags;                           // one per question
  std::vector<std::vector<std::size_t>> problem_to_questions;  // one per problem
  std::vector<int> qa_scores;                                  // one per question
  int threshold = 60;

  // Throws PreconditionFailed on misaligned lists, IndexOutOfRange on a bad
  // question index, RangeViolation on a score or threshold outside [0, 100].
  void validate() const;
};

struct CoverageIssue {
  ErrorKind kind = ErrorKind::DegenerateDenominator;
  std::string metric;
  std::string message;
};

// Fractions in [0, 1]; a metric is absent when its denominator is zero, and
// the reason is listed in `issues`.
struct CoverageReport {
  std::size_t total_questions = 0;
  std::size_t relevant_questions = 0;
  std::size_t total_problems = 0;
  std::size_t covered_problems = 0;
  std::size_t detected_problems = 0;  // covered by a question scoring below threshold
  int threshold = 60;
  std::optional<double> precision;
  std::optional<double> q_recall;
  std::optional<double> e2e_recall;
  std::vector<CoverageIssue> issues;
};

CoverageReport coverage_metrics(const CoverageInputs& inputs);
nlohmann::json coverage_to_json(const CoverageReport& report);

// Judge-model calls that feed CoverageInputs. Each response is parsed with
// the same JSON extraction as the agents; schema problems surface as
// MalformedResponse.
class CoverageJudge {
 public:
  explicit CoverageJudge(VlmClient& vlm) : vlm_(vlm) {}

  // Empty or blank analysis returns [] without a call. Output is
  // de-duplicated, keeping first occurrences.
  std::vector<std::string> extract_gt_problems(std::string_view analysis_text);
  // Alternative flaw source: the judge inspects the video directly.
  std::vector<std::string> direct_analysis(std::string_view video_prompt, const VideoArtifact& video);
  bool judge_relevance(const Question& question, std::string_view video_prompt);
  bool judge_detected_problem(std::string_view problem, std::string_view video_prompt);
  // Throws EmptyInput when there are no questions, IndexOutOfRange for an
  // index past the list.
  std::vector<std::size_t> map_problem_to_questions(std::string_view problem, std::span<const Question> questions);

  // Runs relevance and mapping for every question and problem.
  CoverageInputs build_inputs(std::vector<std::string> problems, std::string_view video_prompt,
                              std::vector<Question> questions, std::vector<int> qa_scores, int threshold = 60);

  std::uint64_t calls() const noexcept { return calls_; }

 private:
  std::string call(const CompletionRequest& request);
  VlmClient& vlm_;
  std::uint64_t calls_ = 0;
};

}  // namespace vqqa
