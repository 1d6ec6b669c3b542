#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vqqa {

// Integer rating on the 0-100 scale used by every agent and the global rater.
class Score {
 public:
  constexpr Score() = default;
  explicit Score(int value);  // throws RangeViolation outside [0, 100]

  constexpr int value() const noexcept { return value_; }
  auto operator<=>(const Score&) const = default;

  static constexpr int kMin = 0;
  static constexpr int kMax = 100;

 private:
  int value_ = 0;
};

enum class TaskKind { TextToVideo, ImageToVideo };

struct GenerationConditions {
  std::string original_prompt;
  std::vector<std::string> reference_images;
  TaskKind task_kind = TaskKind::TextToVideo;
  std::uint32_t sample_index = 0;

  static GenerationConditions text_to_video(std::string prompt, std::uint32_t sample_index = 0);
  static GenerationConditions image_to_video(std::string prompt, std::vector<std::string> images,
                                             std::uint32_t sample_index = 0);

  std::size_t image_count() const noexcept { return reference_images.size(); }
  bool is_i2v() const noexcept { return task_kind == TaskKind::ImageToVideo; }

  // Throws PreconditionFailed if the task kind and image list disagree or the
  // prompt is blank.
  void validate() const;

  bool operator==(const GenerationConditions&) const = default;
};

struct VideoArtifact {
  std::string locator;
  std::string generator_id;
  std::optional<std::uint32_t> seed;
  std::size_t iteration_index = 0;

  bool operator==(const VideoArtifact&) const = default;
};

enum class QuestionCategory { Alignment, VisualQuality, ConditionFidelity };

struct Question {
  std::string text;
  QuestionCategory category = QuestionCategory::Alignment;
  std::optional<std::size_t> source_image_index;  // ConditionFidelity only

  bool operator==(const Question&) const = default;
};

inline constexpr std::string_view kQuestionPrefix = "On a scale of 0-100, how";

struct QAPair {
  Question question;
  Score score;

  bool operator==(const QAPair&) const = default;
};

// One entry of the refiner's flaw analysis. T2V responses fill
// vqa_pair_or_question and action_or_correlation from "vqa_pair" and
// "prompt_correlation"; I2V responses add score and category.
struct FlawItem {
  std::string vqa_pair_or_question;
  std::optional<int> score;
  std::optional<std::string> category;
  std::string identified_flaw;
  std::string action_or_correlation;

  bool operator==(const FlawItem&) const = default;
};

struct RefinementAnalysis {
  std::string historical_summary;
  std::vector<FlawItem> flaw_items;
  std::string refinement_strategy;
  std::string refined_prompt;

  bool operator==(const RefinementAnalysis&) const = default;
};

struct GlobalScoreRecord {
  std::size_t iteration_index = 0;
  Score score;
  std::string raw_response;

  bool operator==(const GlobalScoreRecord&) const = default;
};

struct IterationRecord {
  std::size_t index = 0;
  std::string prompt_used;
  std::optional<std::uint32_t> seed;
  VideoArtifact video;
  std::vector<Question> questions;
  std::vector<QAPair> qa_pairs;
  std::optional<RefinementAnalysis> refinement;
  GlobalScoreRecord global_score;
  // The generator refused this prompt; the candidate holds score 0 and no
  // agent or rater call was made for it.
  bool safety_rejected = false;

  std::optional<double> qa_mean() const;

  bool operator==(const IterationRecord&) const = default;
};

enum class StopReason { TargetSatisfied, Saturated, MaxIterations };
enum class SelectionStrategy { GlobalSelection, LastIteration, AverageQA };
enum class TrajectoryKind { Optimize, BestOfN };

struct CostLedger {
  std::uint64_t question_gen_calls = 0;
  std::uint64_t qa_calls = 0;
  std::uint64_t refine_calls = 0;
  std::uint64_t global_rate_calls = 0;
  // Re-issued requests after a malformed or unparsable response. Kept apart
  // from the per-role counts so those stay comparable with the cost model.
  std::uint64_t retries = 0;

  std::uint64_t total() const noexcept {
    return question_gen_calls + qa_calls + refine_calls + global_rate_calls;
  }

  bool operator==(const CostLedger&) const = default;
};

struct Trajectory {
  GenerationConditions conditions;
  TrajectoryKind kind = TrajectoryKind::Optimize;
  SelectionStrategy strategy = SelectionStrategy::GlobalSelection;
  std::vector<IterationRecord> records;
  std::optional<StopReason> stop_reason;
  std::optional<std::size_t> selected_index;
  CostLedger ledger;

  std::vector<int> global_scores() const;
  const IterationRecord* selected() const;

  bool operator==(const Trajectory&) const = default;
};

struct StopPolicy {
  int gamma = 100;
  int patience = 3;
  double epsilon = 0.0;
  int max_rounds = 4;

  // Throws ConfigError on an out-of-range field.
  void validate() const;

  bool operator==(const StopPolicy&) const = default;
};

// Prefix maximum: out[i] = max(scores[0..=i]). Throws EmptyInput.
std::vector<int> running_max(std::span<const int> scores);

// Appends `record` to a running trajectory. Throws SequenceViolation on an
// index gap, after a stop reason was set, or when record invariants fail.
void append_iteration(Trajectory& trajectory, IterationRecord record);

enum class QuestionViolation { EmptyText, MissingPrefix, MissingSourceImage, SourceImageOutOfRange, UnexpectedSourceImage };

struct QuestionValidation {
  std::vector<QuestionViolation> violations;
  bool ok() const noexcept { return violations.empty(); }
};

// Checks the prefix rule and the category/image-index invariants. When
// `image_count` is given, ConditionFidelity indices are range-checked too.
QuestionValidation validate_question(const Question& q, std::optional<std::size_t> image_count = std::nullopt);

std::string_view to_string(TaskKind v);
std::string_view to_string(QuestionCategory v);
std::string_view to_string(StopReason v);
std::string_view to_string(SelectionStrategy v);
std::string_view to_string(TrajectoryKind v);
std::string_view to_string(QuestionViolation v);

// Inverse of to_string; throw ConfigError on unknown names.
TaskKind task_kind_from_string(std::string_view s);
QuestionCategory question_category_from_string(std::string_view s);
StopReason stop_reason_from_string(std::string_view s);
SelectionStrategy selection_strategy_from_string(std::string_view s);
TrajectoryKind trajectory_kind_from_string(std::string_view s);

}  // namespace vqqa
