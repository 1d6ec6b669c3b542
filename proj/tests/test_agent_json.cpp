#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "support.hpp"
#include "vqqa/agent_json.hpp"
#include "vqqa/error.hpp"

using namespace vqqa;

namespace {

SchemaError schema_error(ResponseSchema s, const std::string& raw) {
  try {
    parse_agent_json(s, raw);
  } catch (const SchemaError& e) {
    return e;
  }
  FAIL("expected SchemaError for " << raw);
  return SchemaError(SchemaFault::Empty, "", "");
}

}  // namespace

TEST_CASE("first object extraction") {
  CHECK(extract_first_json("{\"a\": 1}")->at("a") == 1);
  CHECK(extract_first_json("```json\n{\"a\": 1}\n```\nThanks!")->at("a") == 1);
  CHECK(extract_first_json("Sure. {\"a\": \"}{\"} trailing {\"b\": 2}")->at("a") == "}{");
  CHECK(extract_first_json("{not json} then {\"ok\": true}")->at("ok") == true);
  CHECK(extract_first_json("{\"outer\": {\"inner\": [1, {\"x\": 2}]}}")->at("outer").at("inner").size() == 2);
  CHECK(extract_first_json("{\"s\": \"escaped \\\" quote }\"}")->at("s") == "escaped \" quote }");
  CHECK_FALSE(extract_first_json("").has_value());
  CHECK_FALSE(extract_first_json("[1, 2, 3]").has_value());
  CHECK_FALSE(extract_first_json("{\"unterminated\": 1").has_value());
}

TEST_CASE("fenced and bare fixtures parse identically") {
  const std::string fenced = test::read_file(test::fixture("responses/pr_t2v_example.json"));
  const auto a = parse_agent_json(ResponseSchema::RefinementT2V, fenced);
  const auto b = parse_agent_json(ResponseSchema::RefinementT2V, a.dump());
  CHECK(a == b);
}

TEST_CASE("schema paths point at the offending field") {
  auto e = schema_error(ResponseSchema::Answers,
                        R"({"answers": [{"question": "a", "score": 1}, {"question": "b", "score": 2},
                                        {"question": "c", "score": 150}]})");
  CHECK(e.fault() == SchemaFault::OutOfRange);
  CHECK(e.path() == "answers[2].score");

  e = schema_error(ResponseSchema::Answers, R"({"answers": [{"question": "a"}]})");
  CHECK(e.fault() == SchemaFault::MissingKey);
  CHECK(e.path() == "answers[0].score");

  e = schema_error(ResponseSchema::Questions, R"({"questions": "one"})");
  CHECK(e.fault() == SchemaFault::WrongType);
  CHECK(e.path() == "questions");

  e = schema_error(ResponseSchema::RefinementT2V,
                   R"({"analysis": {"historical_summary": "", "vqa_flaw_identification": []},
                       "refinement_strategy": "s", "refined_prompt": "  "})");
  CHECK(e.fault() == SchemaFault::Empty);
  CHECK(e.path() == "refined_prompt");

  e = schema_error(ResponseSchema::RefinementI2V,
                   R"({"analysis": {"historical_summary": "", "vqa_failure_analysis": [
                          {"vqa_question": "q", "score": 101, "category": "c", "identified_flaw": "f",
                           "refinement_action": "a"}]},
                       "refinement_strategy": "s", "refined_prompt": "p"})");
  CHECK(e.path() == "analysis.vqa_failure_analysis[0].score");

  e = schema_error(ResponseSchema::Relevance, R"({"is_relevant": "yes"})");
  CHECK(e.fault() == SchemaFault::WrongType);

  e = schema_error(ResponseSchema::Indices, R"({"indices": [0, "1"]})");
  CHECK(e.path() == "indices[1]");
}

TEST_CASE("no JSON is its own error") {
  try {
    parse_agent_json(ResponseSchema::Problems, "I could not find any problems.");
    FAIL("expected NoJsonFound");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NoJsonFound);
  }
}

TEST_CASE("trailing prose is ignored") {
  const auto j = parse_agent_json(ResponseSchema::Indices, "{\"indices\": [0, 3]}\nThese two questions match.");
  CHECK(j["indices"] == nlohmann::json::array({0, 3}));
}

TEST_CASE("fuzz: arbitrary input never escapes as anything but a typed error") {
  std::mt19937_64 rng(1234);
  const std::string alphabet = "{}[]\":,0123456789abc \\\n-+.eEtrufalsn`json";
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1), len(0, 80), byte(0, 255), coin(0, 3);
  const ResponseSchema schemas[] = {ResponseSchema::Questions, ResponseSchema::Answers,
                                    ResponseSchema::RefinementT2V, ResponseSchema::RefinementI2V,
                                    ResponseSchema::Problems, ResponseSchema::Relevance, ResponseSchema::Indices};
  std::size_t parsed = 0, typed = 0;
  for (int trial = 0; trial < 20000; ++trial) {
    std::string s;
    const std::size_t n = len(rng);
    for (std::size_t i = 0; i < n; ++i) {
      s += coin(rng) == 0 ? static_cast<char>(byte(rng)) : alphabet[pick(rng)];
    }
    if (trial % 5 == 0) s = "{\"questions\": [\"" + s + "\"]}";
    try {
      (void)extract_first_json(s);
      parse_agent_json(schemas[trial % std::size(schemas)], s);
      ++parsed;
    } catch (const Error& e) {
      CHECK((e.kind() == ErrorKind::NoJsonFound || e.kind() == ErrorKind::SchemaViolation));
      ++typed;
    }
  }
  CHECK(parsed + typed == 20000);
}
