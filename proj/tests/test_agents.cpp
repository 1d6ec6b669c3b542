#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support.hpp"
#include "vqqa/agents.hpp"
#include "vqqa/error.hpp"

using namespace vqqa;

namespace {

ErrorKind kind_of(auto fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::EmptyInput;
}

Question aq(const std::string& tail) {
  return {std::string(kQuestionPrefix) + " " + tail, QuestionCategory::Alignment, std::nullopt};
}

std::string questions_json(std::size_t n, const std::string& prefix = "On a scale of 0-100, how") {
  json arr = json::array();
  for (std::size_t i = 0; i < n; ++i) arr.push_back(prefix + " visible is thing " + std::to_string(i) + "?");
  return json{{"questions", arr}}.dump();
}

AgentContext t2v_ctx() {
  AgentContext ctx;
  ctx.conditions = GenerationConditions::text_to_video("a red fox jumps over a log");
  ctx.current_prompt = "a red fox jumps over a (log)";
  ctx.current_video = {"sim://video-1", "sim-generator", 17u, 1};
  return ctx;
}

AgentContext i2v_ctx() {
  AgentContext ctx;
  ctx.conditions = GenerationConditions::image_to_video("the cat starts to dance", {"img/a.png", "img/b.png"});
  ctx.current_prompt = ctx.conditions.original_prompt;
  ctx.current_video = {"sim://video-0", "sim-generator", 17u, 0};
  return ctx;
}

const std::string kRefinement =
    R"J({"analysis": {"historical_summary": "none", "vqa_flaw_identification": [
          {"vqa_pair": "q: 40", "identified_flaw": "log missing", "prompt_correlation": "log is weak"}]},
        "refinement_strategy": "emphasise the log", "refined_prompt": "a red fox jumps over a ((log))"})J";

}  // namespace

TEST_CASE("question count ranges and guidance") {
  CHECK(question_count_range(QuestionCategory::Alignment).min == 5);
  CHECK(question_count_range(QuestionCategory::Alignment).max == 10);
  CHECK(question_count_range(QuestionCategory::VisualQuality).min == 8);
  CHECK(question_count_range(QuestionCategory::ConditionFidelity).max == 10);
  CHECK(alignment_count_guidance(6).max == 6);
  CHECK(alignment_count_guidance(20).min == 7);
  CHECK(alignment_count_guidance(40).min == 9);
}

TEST_CASE("parse_question_set") {
  const auto set = parse_question_set(questions_json(5), QuestionCategory::Alignment);
  CHECK(set.questions.size() == 5);
  CHECK(kind_of([] { parse_question_set(questions_json(4), QuestionCategory::Alignment); }) ==
        ErrorKind::CountViolation);
  CHECK(kind_of([] { parse_question_set(questions_json(11), QuestionCategory::Alignment); }) ==
        ErrorKind::CountViolation);
  CHECK(kind_of([] { parse_question_set(questions_json(7), QuestionCategory::VisualQuality); }) ==
        ErrorKind::CountViolation);
  CHECK(kind_of([] { parse_question_set(questions_json(6, "Rate how"), QuestionCategory::Alignment); }) ==
        ErrorKind::PrefixViolation);
  CHECK(kind_of([] { parse_question_set("no json here", QuestionCategory::Alignment); }) ==
        ErrorKind::MalformedResponse);

  const auto cf = parse_question_set(questions_json(5), QuestionCategory::ConditionFidelity, 1);
  CHECK(cf.image_index == 1u);
  for (const auto& q : cf.questions) CHECK(q.source_image_index == 1u);
}

TEST_CASE("transcribed question fixtures parse") {
  const std::pair<const char*, QuestionCategory> files[] = {
      {"responses/qg_alignment_example1.json", QuestionCategory::Alignment},
      {"responses/qg_visual_quality_example1.json", QuestionCategory::VisualQuality},
      {"responses/qg_condition_fidelity_example1.json", QuestionCategory::ConditionFidelity}};
  for (const auto& [file, cat] : files) {
    CAPTURE(file);
    const auto set = parse_question_set(test::read_file(test::fixture(file)), cat,
                                        cat == QuestionCategory::ConditionFidelity ? std::optional<std::size_t>(0)
                                                                                   : std::nullopt);
    CHECK(set.questions.size() >= question_count_range(cat).min);
  }
}

TEST_CASE("parse_answers matches by position") {
  const std::vector<Question> qs{aq("red is the fox?"), aq("high is the jump?")};
  const auto pairs = parse_answers(
      R"({"answers": [{"question": "echo differs", "score": 72}, {"question": "x", "score": 45}]})", qs);
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0].question == qs[0]);
  CHECK(pairs[0].score.value() == 72);
  CHECK(pairs[1].score.value() == 45);
  CHECK(kind_of([&] { parse_answers(R"({"answers": [{"question": "a", "score": 1}]})", qs); }) ==
        ErrorKind::CountMismatch);
  CHECK(kind_of([&] {
          parse_answers(R"({"answers": [{"question": "a", "score": 1}, {"question": "b", "score": 101}]})", qs);
        }) == ErrorKind::RangeViolation);
}

TEST_CASE("parse_refinement") {
  const auto t2v = parse_refinement(kRefinement, TaskKind::TextToVideo);
  CHECK(t2v.refined_prompt == "a red fox jumps over a ((log))");
  REQUIRE(t2v.flaw_items.size() == 1);
  CHECK(t2v.flaw_items[0].action_or_correlation == "log is weak");
  CHECK_FALSE(t2v.flaw_items[0].score.has_value());

  const auto i2v =
      parse_refinement(test::read_file(test::fixture("responses/pr_i2v_example.json")), TaskKind::ImageToVideo);
  CHECK_FALSE(i2v.refined_prompt.empty());
  for (const auto& f : i2v.flaw_items) CHECK(f.score.has_value());
  // A T2V body is not a valid I2V body.
  CHECK(kind_of([] { parse_refinement(kRefinement, TaskKind::ImageToVideo); }) == ErrorKind::MalformedResponse);
}

TEST_CASE("formatters") {
  const std::vector<QAPair> pairs{{aq("a?"), Score(30)}, {aq("b?"), Score(90)}};
  const json plain = json::parse(format_qa_pairs(pairs));
  CHECK(plain.size() == 2);
  CHECK_FALSE(plain[0].contains("low_score"));
  const json hl = json::parse(format_qa_pairs(pairs, 50));
  CHECK(hl[0]["low_score"] == true);
  CHECK_FALSE(hl[1].contains("low_score"));

  CHECK(format_history({}) == "No previous iterations.");
  std::vector<IterationRecord> recs(1);
  recs[0].prompt_used = "p0";
  recs[0].qa_pairs = pairs;
  recs[0].global_score.score = Score(66);
  const json hidden = json::parse(format_history(make_history(recs, false)));
  CHECK_FALSE(hidden[0].contains("global_score"));
  CHECK(hidden[0]["qa_pairs"].size() == 2);
  const json shown = json::parse(format_history(make_history(recs, true)));
  CHECK(shown[0]["global_score"] == 66);

  const std::vector<Question> qs{aq("a?"), aq("b?")};
  CHECK(format_question_list(qs) == "0. On a scale of 0-100, how a?\n1. On a scale of 0-100, how b?\n");
}

TEST_CASE("request builders") {
  ScriptedVlm vlm;
  CostLedger ledger;
  AgentSuite suite(vlm, ledger);

  SUBCASE("alignment uses the current prompt, no media") {
    const auto ctx = t2v_ctx();
    const auto r = suite.question_request(QuestionCategory::Alignment, ctx, std::nullopt);
    CHECK(r.template_id == "qg_alignment");
    CHECK(r.slots.at("t2v_prompt") == ctx.current_prompt);
    CHECK(r.prompt_text.find(ctx.current_prompt) != std::string::npos);
    CHECK(r.attachments.empty());
    CHECK(r.temperature == 0.0);
  }
  SUBCASE("visual quality attaches the video") {
    auto ctx = t2v_ctx();
    const auto r = suite.question_request(QuestionCategory::VisualQuality, ctx, std::nullopt);
    CHECK(r.attachments == std::vector<MediaHandle>{{MediaKind::Video, "sim://video-1"}});
    ctx.current_video.locator.clear();
    CHECK(kind_of([&] { suite.question_request(QuestionCategory::VisualQuality, ctx, std::nullopt); }) ==
          ErrorKind::PreconditionFailed);
  }
  SUBCASE("condition fidelity attaches one image") {
    const auto ctx = i2v_ctx();
    const auto r = suite.question_request(QuestionCategory::ConditionFidelity, ctx, 1);
    CHECK(r.slots.at("reference_image") == "img/b.png");
    CHECK(r.attachments == std::vector<MediaHandle>{{MediaKind::Image, "img/b.png"}});
    CHECK(kind_of([&] { suite.question_request(QuestionCategory::ConditionFidelity, ctx, 2); }) ==
          ErrorKind::PreconditionFailed);
    CHECK(kind_of([&] { suite.question_request(QuestionCategory::ConditionFidelity, ctx, std::nullopt); }) ==
          ErrorKind::PreconditionFailed);
  }
  SUBCASE("answering lists every question and attaches video then images") {
    const auto ctx = i2v_ctx();
    const std::vector<Question> qs{aq("a?"), aq("b?")};
    const auto r = suite.answer_request(ctx.current_video, qs, ctx);
    CHECK(r.template_id == "qa_i2v");
    CHECK(json::parse(r.slots.at("questions")) == json::array({qs[0].text, qs[1].text}));
    CHECK(r.prompt_text.find(qs[1].text) != std::string::npos);
    CHECK(r.attachments == std::vector<MediaHandle>{{MediaKind::Video, "sim://video-0"},
                                                    {MediaKind::Image, "img/a.png"},
                                                    {MediaKind::Image, "img/b.png"}});
  }
  SUBCASE("refinement slots") {
    const auto ctx = i2v_ctx();
    const std::vector<QAPair> pairs{{aq("a?"), Score(20)}};
    const auto r = suite.refine_request(ctx, pairs);
    CHECK(r.template_id == "pr_i2v");
    CHECK(r.slots.at("history") == "No previous iterations.");
    CHECK(r.slots.at("reference_images") == "img/a.png, img/b.png");
    CHECK(r.slots.at("cur_video") == "sim://video-0");
    CHECK(r.attachments.size() == 3);
    const auto t = suite.refine_request(t2v_ctx(), pairs);
    CHECK(t.template_id == "pr_t2v");
    CHECK(t.slots.count("reference_images") == 0);
    CHECK(t.attachments.size() == 1);
  }
}

TEST_CASE("one malformed retry, counted apart from the role count") {
  auto vlm = std::make_shared<ScriptedVlm>();
  CostLedger ledger;
  AgentSuite suite(*vlm, ledger);
  const auto ctx = t2v_ctx();

  vlm->push(RoleTag::QuestionGen, "Sorry, here you go: questions are ...");
  vlm->push(RoleTag::QuestionGen, questions_json(5));
  CHECK(suite.generate_questions(QuestionCategory::Alignment, ctx).questions.size() == 5);
  CHECK(ledger.question_gen_calls == 1);
  CHECK(ledger.retries == 1);
  CHECK(vlm->requests().size() == 2);

  vlm->push(RoleTag::Refine, "{}");
  vlm->push(RoleTag::Refine, "still not it");
  const std::vector<QAPair> pairs{{aq("a?"), Score(20)}};
  CHECK(kind_of([&] { suite.refine_prompt(ctx, pairs); }) == ErrorKind::MalformedResponse);
  CHECK(ledger.refine_calls == 1);
  CHECK(ledger.retries == 2);

  // Count violations are not retried.
  vlm->push(RoleTag::QuestionGen, questions_json(3));
  CHECK(kind_of([&] { suite.generate_questions(QuestionCategory::Alignment, ctx); }) == ErrorKind::CountViolation);
  CHECK(ledger.retries == 2);
}

TEST_CASE("empty inputs are refused before any call") {
  ScriptedVlm vlm;
  CostLedger ledger;
  AgentSuite suite(vlm, ledger);
  const auto ctx = t2v_ctx();
  CHECK(kind_of([&] { suite.answer_questions(ctx.current_video, {}, ctx); }) == ErrorKind::EmptyInput);
  CHECK(kind_of([&] { suite.refine_prompt(ctx, {}); }) == ErrorKind::EmptyInput);
  CHECK(vlm.requests().empty());
  CHECK(ledger == CostLedger{});
}

TEST_CASE("sim backend answers every agent role end to end") {
  sim::SimVlm vlm;
  CostLedger ledger;
  AgentSuite suite(vlm, ledger);
  auto ctx = t2v_ctx();
  sim::SimVideoGenerator gen;
  ctx.current_video = gen.generate(ctx.current_prompt, ctx.conditions, 17);

  auto qs = suite.generate_questions(QuestionCategory::Alignment, ctx).questions;
  const auto vq = suite.generate_questions(QuestionCategory::VisualQuality, ctx).questions;
  qs.insert(qs.end(), vq.begin(), vq.end());
  const auto pairs = suite.answer_questions(ctx.current_video, qs, ctx);
  CHECK(pairs.size() == qs.size());
  const auto ref = suite.refine_prompt(ctx, pairs);
  CHECK_FALSE(ref.refined_prompt.empty());
  CHECK(ledger.question_gen_calls == 2);
  CHECK(ledger.qa_calls == 1);
  CHECK(ledger.refine_calls == 1);
  CHECK(ledger.retries == 0);
}
