#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "support.hpp"
#include "vqqa/analysis.hpp"
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

Question q(std::size_t i) {
  return {std::string(kQuestionPrefix) + " clear is item " + std::to_string(i) + "?", QuestionCategory::Alignment,
          std::nullopt};
}

CoverageInputs inputs(std::size_t nq, std::vector<bool> rel, std::vector<std::vector<std::size_t>> map,
                      std::vector<int> scores, int threshold = 60) {
  CoverageInputs in;
  for (std::size_t i = 0; i < nq; ++i) in.questions.push_back(q(i));
  for (std::size_t p = 0; p < map.size(); ++p) in.gt_problems.push_back("problem " + std::to_string(p));
  in.relevance_flags = std::move(rel);
  in.problem_to_questions = std::move(map);
  in.qa_scores = std::move(scores);
  in.threshold = threshold;
  return in;
}

Trajectory sim_run(int max_rounds, int patience, std::size_t sample = 0) {
  Optimizer opt(test::sim_backends(), test::config_with(max_rounds, patience));
  return opt.optimize(GenerationConditions::text_to_video(test::five_aspect_prompt(sample)));
}

}  // namespace

TEST_CASE("worst-case call count") {
  CHECK(expected_vlm_calls(1.245, 0) == doctest::Approx(7.225));
  CHECK(expected_vlm_calls(4, 1) == doctest::Approx(25.0));
  CHECK(expected_vlm_calls(0, 3) == doctest::Approx(1.0));
  CHECK(kind_of([] { expected_vlm_calls(-1, 0); }) == ErrorKind::RangeViolation);
  CHECK(kind_of([] { expected_vlm_calls(1, -0.5); }) == ErrorKind::RangeViolation);
  CHECK(kind_of([] { expected_vlm_calls(std::nan(""), 0); }) == ErrorKind::RangeViolation);
}

TEST_CASE("audit of a clean run") {
  auto vlm = test::scripted_over_sim();
  vlm->push_all(RoleTag::GlobalRate, {"40", "70", "100"});
  Optimizer opt({std::make_shared<sim::SimVideoGenerator>(), vlm}, test::config_with(4, 3));
  const auto t = opt.optimize(GenerationConditions::text_to_video("a fox near a log"));
  const auto rep = audit_ledger(t);
  CHECK(rep.ok());
  CHECK(rep.rounds == 2);
  CHECK(rep.theoretical_max == doctest::Approx(11.0));
  CHECK(rep.within_max());
  CHECK(rep.expected == t.ledger);
  CHECK(rep.best_so_far == std::vector<int>{40, 70, 100});
  CHECK_FALSE(rep.notes.empty());
  const json j = audit_to_json(rep);
  CHECK(j["ok"] == true);
  CHECK(j["stop_reason"] == "TargetSatisfied");
}

TEST_CASE("audit flags a tampered ledger") {
  auto t = sim_run(4, 3);
  t.ledger.qa_calls += 1;
  const auto rep = audit_ledger(t);
  CHECK_FALSE(rep.ok());
  REQUIRE(rep.deviations.size() == 1);
  CHECK(rep.deviations[0].role == "qa");
  CHECK(rep.deviations[0].actual == rep.deviations[0].expected + 1);
}

TEST_CASE("audit with no refinement rounds") {
  const auto t = sim_run(0, 3);
  const auto rep = audit_ledger(t);
  CHECK(rep.rounds == 0);
  CHECK(rep.ok());
  CHECK(rep.actual.total() == 1);
  CHECK(rep.theoretical_max == doctest::Approx(1.0));
}

TEST_CASE("audit is exact across many sim runs") {
  for (std::size_t i = 0; i < 30; ++i) {
    const auto t = sim_run(1 + static_cast<int>(i % 5), 1 + static_cast<int>(i % 3), i);
    const auto rep = audit_ledger(t);
    CHECK(rep.ok());
    CHECK(static_cast<double>(rep.actual.total()) == doctest::Approx(rep.theoretical_max));
  }
}

TEST_CASE("coverage worked examples") {
  // 4 questions, 3 relevant; 2 problems, one mapped to a failing question.
  const auto rep = coverage_metrics(inputs(4, {true, true, false, true}, {{0, 2}, {}}, {80, 30, 55, 90}));
  CHECK(rep.total_questions == 4);
  CHECK(rep.relevant_questions == 3);
  CHECK(*rep.precision == doctest::Approx(0.75));
  CHECK(rep.covered_problems == 1);
  CHECK(*rep.q_recall == doctest::Approx(0.5));
  CHECK(rep.detected_problems == 1);  // question 2 scored 55 < 60
  CHECK(*rep.e2e_recall == doctest::Approx(0.5));
  CHECK(rep.issues.empty());

  const json j = coverage_to_json(rep);
  CHECK(j["precision"]["numerator"] == 3);
  CHECK(j["precision"]["denominator"] == 4);
}

TEST_CASE("coverage threshold is strict") {
  const auto at = coverage_metrics(inputs(1, {true}, {{0}}, {60}));
  CHECK(at.detected_problems == 0);
  const auto below = coverage_metrics(inputs(1, {true}, {{0}}, {59}));
  CHECK(below.detected_problems == 1);
  CHECK(coverage_metrics(inputs(1, {true}, {{0}}, {0}, 0)).detected_problems == 0);
}

TEST_CASE("degenerate denominators are reported, not divided") {
  const auto none = coverage_metrics(inputs(0, {}, {}, {}));
  CHECK_FALSE(none.precision.has_value());
  CHECK_FALSE(none.q_recall.has_value());
  CHECK_FALSE(none.e2e_recall.has_value());
  CHECK(none.issues.size() == 3);
  for (const auto& i : none.issues) CHECK(i.kind == ErrorKind::DegenerateDenominator);

  const auto no_problems = coverage_metrics(inputs(2, {true, false}, {}, {10, 20}));
  CHECK(*no_problems.precision == doctest::Approx(0.5));
  CHECK_FALSE(no_problems.q_recall.has_value());
  CHECK(coverage_to_json(no_problems)["q_recall"]["fraction"].is_null());
}

TEST_CASE("coverage input validation") {
  CHECK(kind_of([] { coverage_metrics(inputs(2, {true}, {}, {1, 2})); }) == ErrorKind::PreconditionFailed);
  CHECK(kind_of([] { coverage_metrics(inputs(2, {true, true}, {{5}}, {1, 2})); }) == ErrorKind::IndexOutOfRange);
  CHECK(kind_of([] { coverage_metrics(inputs(1, {true}, {}, {101})); }) == ErrorKind::RangeViolation);
  CHECK(kind_of([] { coverage_metrics(inputs(1, {true}, {}, {1}, 101)); }) == ErrorKind::RangeViolation);
}

TEST_CASE("coverage is invariant under question permutation") {
  std::mt19937 rng(42);
  std::uniform_int_distribution<int> score(0, 100), coin(0, 1);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t nq = 1 + trial % 8, np = trial % 5;
    std::vector<bool> rel(nq);
    std::vector<int> scores(nq);
    for (std::size_t i = 0; i < nq; ++i) {
      rel[i] = coin(rng);
      scores[i] = score(rng);
    }
    std::vector<std::vector<std::size_t>> map(np);
    for (auto& m : map) {
      for (std::size_t i = 0; i < nq; ++i) {
        if (coin(rng)) m.push_back(i);
      }
    }
    const auto a = coverage_metrics(inputs(nq, rel, map, scores));

    std::vector<std::size_t> perm(nq);
    for (std::size_t i = 0; i < nq; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);  // new position of question i is perm[i]
    std::vector<bool> rel2(nq);
    std::vector<int> scores2(nq);
    for (std::size_t i = 0; i < nq; ++i) {
      rel2[perm[i]] = rel[i];
      scores2[perm[i]] = scores[i];
    }
    auto map2 = map;
    for (auto& m : map2) {
      for (auto& i : m) i = perm[i];
    }
    const auto b = coverage_metrics(inputs(nq, rel2, map2, scores2));
    CHECK(a.relevant_questions == b.relevant_questions);
    CHECK(a.covered_problems == b.covered_problems);
    CHECK(a.detected_problems == b.detected_problems);
  }
}

TEST_CASE("judge calls") {
  ScriptedVlm vlm;
  CoverageJudge judge(vlm);

  CHECK(judge.extract_gt_problems("   ").empty());
  CHECK(judge.calls() == 0);

  vlm.push(RoleTag::Judge, R"({"problems": ["cat floats", "tail missing", "cat floats"]})");
  const auto problems = judge.extract_gt_problems("The cat floats. Its tail is gone.");
  CHECK(problems == std::vector<std::string>{"cat floats", "tail missing"});
  const auto req = vlm.requests().back();
  CHECK(req.prompt_text.find("The cat floats. Its tail is gone.") != std::string::npos);
  CHECK(req.slots.at("analysis") == "The cat floats. Its tail is gone.");

  const std::vector<Question> qs{q(0), q(1), q(2)};
  vlm.push(RoleTag::Judge, R"({"indices": [2, 0, 2]})");
  CHECK(judge.map_problem_to_questions("cat floats", qs) == std::vector<std::size_t>{0, 2});
  CHECK(vlm.requests().back().slots.at("formatted_questions").find("2. ") != std::string::npos);

  vlm.push(RoleTag::Judge, R"({"indices": [3]})");
  CHECK(kind_of([&] { judge.map_problem_to_questions("cat floats", qs); }) == ErrorKind::IndexOutOfRange);
  vlm.push(RoleTag::Judge, R"({"indices": [-1]})");
  CHECK(kind_of([&] { judge.map_problem_to_questions("cat floats", qs); }) == ErrorKind::IndexOutOfRange);
  CHECK(kind_of([&] { judge.map_problem_to_questions("cat floats", {}); }) == ErrorKind::EmptyInput);

  vlm.push(RoleTag::Judge, R"({"is_relevant": false})");
  CHECK_FALSE(judge.judge_relevance(qs[0], "a cat"));
  vlm.push(RoleTag::Judge, "not json");
  CHECK(kind_of([&] { judge.judge_relevance(qs[0], "a cat"); }) == ErrorKind::MalformedResponse);

  vlm.push(RoleTag::Judge, R"({"problems": ["blurry"]})");
  CHECK(judge.direct_analysis("a cat", {"sim://v", "g", std::nullopt, 0}) == std::vector<std::string>{"blurry"});
  CHECK(vlm.requests().back().attachments.size() == 1);
}

TEST_CASE("build_inputs wires judge answers into metrics") {
  ScriptedVlm vlm;
  CoverageJudge judge(vlm);
  vlm.push_all(RoleTag::Judge, {R"({"is_relevant": true})", R"({"is_relevant": false})", R"({"indices": [1]})"});
  const auto in = judge.build_inputs({"tail missing"}, "a cat", {q(0), q(1)}, {90, 20});
  CHECK(in.relevance_flags == std::vector<bool>{true, false});
  CHECK(in.problem_to_questions == std::vector<std::vector<std::size_t>>{{1}});
  CHECK(judge.calls() == 3);
  const auto rep = coverage_metrics(in);
  CHECK(*rep.precision == doctest::Approx(0.5));
  CHECK(*rep.e2e_recall == doctest::Approx(1.0));
}
