#include "vqqa/agents.hpp"

#include <sstream>

#include <spdlog/spdlog.h>

#include "vqqa/error.hpp"
#include "vqqa/templates.hpp"

namespace vqqa {
namespace {

[[noreturn]] void rethrow_as_malformed(const Error& e, std::string_view what) {
  throw Error(ErrorKind::MalformedResponse, std::string(what) + ": " + e.what(), e.detail());
}

json parse_or_malformed(ResponseSchema schema, std::string_view raw, std::string_view what) {
  try {
    return parse_agent_json(schema, raw);
  } catch (const SchemaError& e) {
    if (e.fault() == SchemaFault::OutOfRange) {
      throw Error(ErrorKind::RangeViolation, std::string(what) + ": " + e.what(), e.path());
    }
    rethrow_as_malformed(e, what);
  } catch (const Error& e) {
    rethrow_as_malformed(e, what);
  }
}

std::size_t word_count(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::size_t n = 0;
  for (std::string w; in >> w;) ++n;
  return n;
}

std::string join_images(const GenerationConditions& c) {
  std::string out;
  for (std::size_t i = 0; i < c.reference_images.size(); ++i) {
    out += (i ? ", " : "") + c.reference_images[i];
  }
  return out;
}

void append_images(std::vector<MediaHandle>& out, const GenerationConditions& c) {
  for (const auto& image : c.reference_images) out.push_back({MediaKind::Image, image});
}

json qa_json(const QAPair& qa) { return {{"question", qa.question.text}, {"score", qa.score.value()}}; }

}  // namespace

std::vector<HistoryEntry> make_history(std::span<const IterationRecord> records, bool include_global_scores) {
  std::vector<HistoryEntry> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    HistoryEntry e{r.index, r.prompt_used, r.qa_pairs, std::nullopt};
    if (include_global_scores) e.global_score = r.global_score.score.value();
    out.push_back(std::move(e));
  }
  return out;
}

CountRange question_count_range(QuestionCategory category) {
  switch (category) {
    case QuestionCategory::Alignment: return {5, 10};
    case QuestionCategory::VisualQuality: return {8, 10};
    case QuestionCategory::ConditionFidelity: return {5, 10};
  }
  return {5, 10};
}

CountRange alignment_count_guidance(std::size_t words) {
  if (words < 15) return {5, 6};
  if (words <= 25) return {7, 8};
  return {9, 10};
}

QuestionSet parse_question_set(std::string_view raw, QuestionCategory category,
                               std::optional<std::size_t> image_index) {
  const json payload = parse_or_malformed(ResponseSchema::Questions, raw, "question generation");
  QuestionSet set{category, image_index, {}};
  for (const auto& text : payload["questions"]) {
    Question q{text.get<std::string>(), category, std::nullopt};
    if (category == QuestionCategory::ConditionFidelity) q.source_image_index = image_index;
    set.questions.push_back(std::move(q));
  }
  const auto range = question_count_range(category);
  if (set.questions.size() < range.min || set.questions.size() > range.max) {
    throw Error(ErrorKind::CountViolation,
                std::to_string(set.questions.size()) + " " + std::string(to_string(category)) +
                    " questions, expected " + std::to_string(range.min) + "-" + std::to_string(range.max));
  }
  for (std::size_t i = 0; i < set.questions.size(); ++i) {
    const auto check = validate_question(set.questions[i]);
    if (check.ok()) continue;
    const auto kind = check.violations.front() == QuestionViolation::MissingPrefix ||
                              check.violations.front() == QuestionViolation::EmptyText
                          ? ErrorKind::PrefixViolation
                          : ErrorKind::MalformedResponse;
    throw Error(kind, std::string(to_string(check.violations.front())) + ": " + set.questions[i].text,
                "questions[" + std::to_string(i) + "]");
  }
  return set;
}

std::vector<QAPair> parse_answers(std::string_view raw, std::span<const Question> questions) {
  const json payload = parse_or_malformed(ResponseSchema::Answers, raw, "question answering");
  const json& answers = payload["answers"];
  if (answers.size() != questions.size()) {
    throw Error(ErrorKind::CountMismatch, std::to_string(answers.size()) + " answers for " +
                                              std::to_string(questions.size()) + " questions");
  }
  std::vector<QAPair> out;
  out.reserve(questions.size());
  for (std::size_t i = 0; i < questions.size(); ++i) {
    const auto& echoed = answers[i]["question"].get_ref<const std::string&>();
    if (echoed != questions[i].text) {
      spdlog::warn("answer {} echoes '{}' for question '{}'; matched by position", i, echoed, questions[i].text);
    }
    out.push_back({questions[i], Score(answers[i]["score"].get<int>())});
  }
  return out;
}

RefinementAnalysis parse_refinement(std::string_view raw, TaskKind task_kind) {
  const bool i2v = task_kind == TaskKind::ImageToVideo;
  const json payload =
      parse_or_malformed(i2v ? ResponseSchema::RefinementI2V : ResponseSchema::RefinementT2V, raw, "prompt refinement");
  RefinementAnalysis out;
  const json& analysis = payload["analysis"];
  out.historical_summary = analysis["historical_summary"].get<std::string>();
  for (const auto& item : analysis[i2v ? "vqa_failure_analysis" : "vqa_flaw_identification"]) {
    FlawItem f;
    f.identified_flaw = item["identified_flaw"].get<std::string>();
    if (i2v) {
      f.vqa_pair_or_question = item["vqa_question"].get<std::string>();
      f.score = item["score"].get<int>();
      f.category = item["category"].get<std::string>();
      f.action_or_correlation = item["refinement_action"].get<std::string>();
    } else {
      f.vqa_pair_or_question = item["vqa_pair"].get<std::string>();
      f.action_or_correlation = item["prompt_correlation"].get<std::string>();
    }
    out.flaw_items.push_back(std::move(f));
  }
  out.refinement_strategy = payload["refinement_strategy"].get<std::string>();
  out.refined_prompt = payload["refined_prompt"].get<std::string>();
  return out;
}

std::string format_qa_pairs(std::span<const QAPair> pairs, std::optional<int> highlight_below) {
  json arr = json::array();
  for (const auto& qa : pairs) {
    json entry = qa_json(qa);
    if (highlight_below && qa.score.value() < *highlight_below) entry["low_score"] = true;
    arr.push_back(std::move(entry));
  }
  return arr.dump(2);
}

std::string format_history(std::span<const HistoryEntry> history) {
  if (history.empty()) return "No previous iterations.";
  json arr = json::array();
  for (const auto& h : history) {
    json entry{{"iteration", h.iteration}, {"prompt", h.prompt}};
    json pairs = json::array();
    for (const auto& qa : h.qa_pairs) pairs.push_back(qa_json(qa));
    entry["qa_pairs"] = std::move(pairs);
    if (h.global_score) entry["global_score"] = *h.global_score;
    arr.push_back(std::move(entry));
  }
  return arr.dump(2);
}

std::string format_question_list(std::span<const Question> questions) {
  std::string out;
  for (std::size_t i = 0; i < questions.size(); ++i) {
    out += std::to_string(i) + ". " + questions[i].text + "\n";
  }
  return out;
}

AgentSuite::AgentSuite(VlmClient& vlm, CostLedger& ledger, AgentOptions options)
    : vlm_(vlm), ledger_(ledger), options_(options) {}

template <typename Parse>
auto AgentSuite::call_with_retry(const CompletionRequest& request, Parse parse) {
  for (int attempt = 0;; ++attempt) {
    if (attempt > 0) ++ledger_.retries;
    const std::string raw = vlm_.complete(request);
    try {
      return parse(raw);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::MalformedResponse || attempt >= options_.malformed_retries) throw;
      spdlog::warn("malformed {} response, retrying once: {}", to_string(request.role), e.what());
    }
  }
}

CompletionRequest AgentSuite::question_request(QuestionCategory category, const AgentContext& ctx,
                                               std::optional<std::size_t> image_index) const {
  CompletionRequest req;
  req.role = RoleTag::QuestionGen;
  req.max_retries = options_.transport_retries;
  req.slots["t2v_prompt"] = ctx.current_prompt;
  TemplateId id = TemplateId::QgAlignment;
  switch (category) {
    case QuestionCategory::Alignment:
      break;
    case QuestionCategory::VisualQuality:
      if (ctx.current_video.locator.empty()) {
        throw Error(ErrorKind::PreconditionFailed, "visual quality questions need the current video");
      }
      id = TemplateId::QgVisualQuality;
      req.attachments.push_back({MediaKind::Video, ctx.current_video.locator});
      break;
    case QuestionCategory::ConditionFidelity:
      if (!image_index || *image_index >= ctx.conditions.image_count()) {
        throw Error(ErrorKind::PreconditionFailed, "condition fidelity questions need a valid reference image");
      }
      id = TemplateId::QgConditionFidelity;
      req.slots["reference_image"] = ctx.conditions.reference_images[*image_index];
      req.attachments.push_back({MediaKind::Image, ctx.conditions.reference_images[*image_index]});
      break;
  }
  req.template_id = template_name(id);
  req.prompt_text = render_template(id, {req.slots.begin(), req.slots.end()});
  return req;
}

QuestionSet AgentSuite::generate_questions(QuestionCategory category, const AgentContext& ctx,
                                           std::optional<std::size_t> image_index) {
  const CompletionRequest req = question_request(category, ctx, image_index);
  ++ledger_.question_gen_calls;
  QuestionSet set = call_with_retry(req, [&](const std::string& raw) {
    return parse_question_set(raw, category, category == QuestionCategory::ConditionFidelity ? image_index
                                                                                            : std::nullopt);
  });
  if (category == QuestionCategory::Alignment) {
    const auto guide = alignment_count_guidance(word_count(ctx.current_prompt));
    if (set.questions.size() < guide.min || set.questions.size() > guide.max) {
      spdlog::warn("{} alignment questions for a {}-word prompt; guidance is {}-{}", set.questions.size(),
                   word_count(ctx.current_prompt), guide.min, guide.max);
    }
  }
  return set;
}

CompletionRequest AgentSuite::answer_request(const VideoArtifact& video, std::span<const Question> questions,
                                             const AgentContext& ctx) const {
  const bool i2v = ctx.conditions.is_i2v();
  const TemplateId id = i2v ? TemplateId::QaI2v : TemplateId::QaT2v;
  json list = json::array();
  for (const auto& q : questions) list.push_back(q.text);

  CompletionRequest req;
  req.role = RoleTag::QA;
  req.max_retries = options_.transport_retries;
  req.template_id = template_name(id);
  req.slots["questions"] = list.dump();
  req.prompt_text = render_template(id, {}) + "\nQuestions:\n```json\n" + list.dump(2) + "\n```\n";
  req.attachments.push_back({MediaKind::Video, video.locator});
  if (i2v) append_images(req.attachments, ctx.conditions);
  return req;
}

std::vector<QAPair> AgentSuite::answer_questions(const VideoArtifact& video, std::span<const Question> questions,
                                                 const AgentContext& ctx) {
  if (questions.empty()) throw Error(ErrorKind::EmptyInput, "no questions to answer");
  const CompletionRequest req = answer_request(video, questions, ctx);
  ++ledger_.qa_calls;
  return call_with_retry(req, [&](const std::string& raw) { return parse_answers(raw, questions); });
}

CompletionRequest AgentSuite::refine_request(const AgentContext& ctx, std::span<const QAPair> qa_pairs) const {
  const bool i2v = ctx.conditions.is_i2v();
  const TemplateId id = i2v ? TemplateId::PrI2v : TemplateId::PrT2v;

  CompletionRequest req;
  req.role = RoleTag::Refine;
  req.max_retries = options_.transport_retries;
  req.template_id = template_name(id);
  req.slots["history"] = format_history(ctx.history);
  req.slots["original_prompt"] = ctx.conditions.original_prompt;
  req.slots["cur_iter_prompt"] = ctx.current_prompt;
  req.slots["cur_video"] = ctx.current_video.locator;
  req.slots["qa_pairs"] = format_qa_pairs(qa_pairs, options_.highlight_below);
  if (i2v) req.slots["reference_images"] = join_images(ctx.conditions);
  req.prompt_text = render_template(id, {req.slots.begin(), req.slots.end()});
  req.attachments.push_back({MediaKind::Video, ctx.current_video.locator});
  if (i2v) append_images(req.attachments, ctx.conditions);
  return req;
}

RefinementAnalysis AgentSuite::refine_prompt(const AgentContext& ctx, std::span<const QAPair> qa_pairs) {
  if (qa_pairs.empty()) throw Error(ErrorKind::EmptyInput, "no QA pairs to refine from");
  const CompletionRequest req = refine_request(ctx, qa_pairs);
  ++ledger_.refine_calls;
  return call_with_retry(req, [&](const std::string& raw) { return parse_refinement(raw, ctx.conditions.task_kind); });
}

}  // namespace vqqa
