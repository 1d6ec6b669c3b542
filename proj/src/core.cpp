#include "vqqa/core.hpp"

#include <algorithm>
#include <cctype>
#include <string>

#include "vqqa/error.hpp"

namespace vqqa {
namespace {

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

}  // namespace

Score::Score(int value) : value_(value) {
  if (value < kMin || value > kMax) {
    throw Error(ErrorKind::RangeViolation, "score " + std::to_string(value) + " outside [0, 100]");
  }
}

GenerationConditions GenerationConditions::text_to_video(std::string prompt, std::uint32_t sample_index) {
  GenerationConditions c;
  c.original_prompt = std::move(prompt);
  c.task_kind = TaskKind::TextToVideo;
  c.sample_index = sample_index;
  return c;
}

GenerationConditions GenerationConditions::image_to_video(std::string prompt, std::vector<std::string> images,
                                                          std::uint32_t sample_index) {
  GenerationConditions c;
  c.original_prompt = std::move(prompt);
  c.reference_images = std::move(images);
  c.task_kind = TaskKind::ImageToVideo;
  c.sample_index = sample_index;
  return c;
}

void GenerationConditions::validate() const {
  if (is_blank(original_prompt)) {
    throw Error(ErrorKind::PreconditionFailed, "original prompt is empty");
  }
  if (is_i2v() != !reference_images.empty()) {
    throw Error(ErrorKind::PreconditionFailed,
                "task kind ImageToVideo requires reference images and TextToVideo forbids them");
  }
  for (const auto& image : reference_images) {
    if (image.empty()) throw Error(ErrorKind::PreconditionFailed, "empty reference image handle");
  }
}

std::optional<double> IterationRecord::qa_mean() const {
  if (qa_pairs.empty()) return std::nullopt;
  double sum = 0.0;
  for (const auto& qa : qa_pairs) sum += qa.score.value();
  return sum / static_cast<double>(qa_pairs.size());
}

std::vector<int> Trajectory::global_scores() const {
  std::vector<int> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.global_score.score.value());
  return out;
}

const IterationRecord* Trajectory::selected() const {
  if (!selected_index || *selected_index >= records.size()) return nullptr;
  return &records[*selected_index];
}

void StopPolicy::validate() const {
  if (gamma <= 0 || gamma > 100) throw Error(ErrorKind::ConfigError, "gamma must be in (0, 100]");
  if (patience < 1) throw Error(ErrorKind::ConfigError, "patience must be >= 1");
  if (!(epsilon >= 0.0)) throw Error(ErrorKind::ConfigError, "epsilon must be >= 0");
  if (max_rounds < 0) throw Error(ErrorKind::ConfigError, "max_rounds must be >= 0");
}

std::vector<int> running_max(std::span<const int> scores) {
  if (scores.empty()) throw Error(ErrorKind::EmptyInput, "running_max of an empty score list");
  std::vector<int> out(scores.size());
  int best = scores.front();
  for (std::size_t i = 0; i < scores.size(); ++i) {
    best = std::max(best, scores[i]);
    out[i] = best;
  }
  return out;
}

void append_iteration(Trajectory& trajectory, IterationRecord record) {
  if (trajectory.stop_reason) {
    throw Error(ErrorKind::SequenceViolation, "trajectory is frozen after stop");
  }
  const std::size_t expected = trajectory.records.size();
  if (record.index != expected) {
    throw Error(ErrorKind::SequenceViolation,
                "record index " + std::to_string(record.index) + " where " + std::to_string(expected) + " expected");
  }
  if (record.video.iteration_index != record.index || record.global_score.iteration_index != record.index) {
    throw Error(ErrorKind::SequenceViolation, "video or score carries a different iteration index");
  }
  if (record.qa_pairs.size() != record.questions.size()) {
    throw Error(ErrorKind::SequenceViolation, "qa_pairs and questions differ in length");
  }
  if (record.index == 0 && trajectory.kind == TrajectoryKind::Optimize &&
      record.prompt_used != trajectory.conditions.original_prompt) {
    throw Error(ErrorKind::SequenceViolation, "record 0 must use the original prompt");
  }
  trajectory.records.push_back(std::move(record));
}

QuestionValidation validate_question(const Question& q, std::optional<std::size_t> image_count) {
  QuestionValidation result;
  if (is_blank(q.text)) {
    result.violations.push_back(QuestionViolation::EmptyText);
  } else if (!q.text.starts_with(kQuestionPrefix)) {
    result.violations.push_back(QuestionViolation::MissingPrefix);
  }
  if (q.category == QuestionCategory::ConditionFidelity) {
    if (!q.source_image_index) {
      result.violations.push_back(QuestionViolation::MissingSourceImage);
    } else if (image_count && *q.source_image_index >= *image_count) {
      result.violations.push_back(QuestionViolation::SourceImageOutOfRange);
    }
  } else if (q.source_image_index) {
    result.violations.push_back(QuestionViolation::UnexpectedSourceImage);
  }
  return result;
}

std::string_view to_string(TaskKind v) {
  return v == TaskKind::TextToVideo ? "TextToVideo" : "ImageToVideo";
}

std::string_view to_string(QuestionCategory v) {
  switch (v) {
    case QuestionCategory::Alignment: return "Alignment";
    case QuestionCategory::VisualQuality: return "VisualQuality";
    case QuestionCategory::ConditionFidelity: return "ConditionFidelity";
  }
  return "Alignment";
}

std::string_view to_string(StopReason v) {
  switch (v) {
    case StopReason::TargetSatisfied: return "TargetSatisfied";
    case StopReason::Saturated: return "Saturated";
    case StopReason::MaxIterations: return "MaxIterations";
  }
  return "MaxIterations";
}

std::string_view to_string(SelectionStrategy v) {
  switch (v) {
    case SelectionStrategy::GlobalSelection: return "GlobalSelection";
    case SelectionStrategy::LastIteration: return "LastIteration";
    case SelectionStrategy::AverageQA: return "AverageQA";
  }
  return "GlobalSelection";
}

std::string_view to_string(TrajectoryKind v) { return v == TrajectoryKind::Optimize ? "Optimize" : "BestOfN"; }

std::string_view to_string(QuestionViolation v) {
  switch (v) {
    case QuestionViolation::EmptyText: return "EmptyText";
    case QuestionViolation::MissingPrefix: return "MissingPrefix";
    case QuestionViolation::MissingSourceImage: return "MissingSourceImage";
    case QuestionViolation::SourceImageOutOfRange: return "SourceImageOutOfRange";
    case QuestionViolation::UnexpectedSourceImage: return "UnexpectedSourceImage";
  }
  return "EmptyText";
}

TaskKind task_kind_from_string(std::string_view s) {
  if (s == "TextToVideo" || s == "t2v") return TaskKind::TextToVideo;
  if (s == "ImageToVideo" || s == "i2v") return TaskKind::ImageToVideo;
  throw Error(ErrorKind::ConfigError, "unknown task kind '" + std::string(s) + "'");
}

QuestionCategory question_category_from_string(std::string_view s) {
  if (s == "Alignment") return QuestionCategory::Alignment;
  if (s == "VisualQuality") return QuestionCategory::VisualQuality;
  if (s == "ConditionFidelity") return QuestionCategory::ConditionFidelity;
  throw Error(ErrorKind::ConfigError, "unknown question category '" + std::string(s) + "'");
}

StopReason stop_reason_from_string(std::string_view s) {
  if (s == "TargetSatisfied") return StopReason::TargetSatisfied;
  if (s == "Saturated") return StopReason::Saturated;
  if (s == "MaxIterations") return StopReason::MaxIterations;
  throw Error(ErrorKind::ConfigError, "unknown stop reason '" + std::string(s) + "'");
}

SelectionStrategy selection_strategy_from_string(std::string_view s) {
  if (s == "GlobalSelection" || s == "global") return SelectionStrategy::GlobalSelection;
  if (s == "LastIteration" || s == "last") return SelectionStrategy::LastIteration;
  if (s == "AverageQA" || s == "avg-qa") return SelectionStrategy::AverageQA;
  throw Error(ErrorKind::ConfigError, "unknown selection strategy '" + std::string(s) + "'");
}

TrajectoryKind trajectory_kind_from_string(std::string_view s) {
  if (s == "Optimize") return TrajectoryKind::Optimize;
  if (s == "BestOfN") return TrajectoryKind::BestOfN;
  throw Error(ErrorKind::ConfigError, "unknown trajectory kind '" + std::string(s) + "'");
}

}  // namespace vqqa
