#include "vqqa/agent_json.hpp"

#include <string>

#include "vqqa/error.hpp"

namespace vqqa {
namespace {

// End (exclusive) of the balanced object starting at text[start] == '{',
// honouring JSON string literals. npos when unbalanced.
std::size_t match_object(std::string_view text, std::size_t start) {
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = start; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return i + 1;
    }
  }
  return std::string_view::npos;
}

std::string at(const std::string& path, std::string_view key) {
  return path.empty() ? std::string(key) : path + "." + std::string(key);
}

std::string idx(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

const json& require(const json& obj, std::string_view key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(SchemaFault::MissingKey, "missing key", at(path, key));
  return *it;
}

const std::string& require_string(const json& obj, std::string_view key, const std::string& path) {
  const json& v = require(obj, key, path);
  if (!v.is_string()) throw SchemaError(SchemaFault::WrongType, "expected a string", at(path, key));
  return v.get_ref<const std::string&>();
}

const json& require_array(const json& obj, std::string_view key, const std::string& path) {
  const json& v = require(obj, key, path);
  if (!v.is_array()) throw SchemaError(SchemaFault::WrongType, "expected an array", at(path, key));
  return v;
}

const json& require_object(const json& obj, std::string_view key, const std::string& path) {
  const json& v = require(obj, key, path);
  if (!v.is_object()) throw SchemaError(SchemaFault::WrongType, "expected an object", at(path, key));
  return v;
}

void require_score(const json& obj, std::string_view key, const std::string& path) {
  const json& v = require(obj, key, path);
  if (!v.is_number_integer()) throw SchemaError(SchemaFault::WrongType, "expected an integer", at(path, key));
  const auto s = v.get<long long>();
  if (s < 0 || s > 100) {
    throw SchemaError(SchemaFault::OutOfRange, "score " + std::to_string(s) + " outside [0, 100]", at(path, key));
  }
}

void check_string_list(const json& arr, const std::string& path) {
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_string()) throw SchemaError(SchemaFault::WrongType, "expected a string", idx(path, i));
  }
}

void check_refinement(const json& payload, bool i2v) {
  const json& analysis = require_object(payload, "analysis", "");
  require_string(analysis, "historical_summary", "analysis");
  const std::string list_key = i2v ? "vqa_failure_analysis" : "vqa_flaw_identification";
  const std::string list_path = "analysis." + list_key;
  const json& items = require_array(analysis, list_key, "analysis");
  for (std::size_t i = 0; i < items.size(); ++i) {
    const std::string p = idx(list_path, i);
    if (!items[i].is_object()) throw SchemaError(SchemaFault::WrongType, "expected an object", p);
    if (i2v) {
      require_string(items[i], "vqa_question", p);
      require_score(items[i], "score", p);
      require_string(items[i], "category", p);
      require_string(items[i], "identified_flaw", p);
      require_string(items[i], "refinement_action", p);
    } else {
      require_string(items[i], "vqa_pair", p);
      require_string(items[i], "identified_flaw", p);
      require_string(items[i], "prompt_correlation", p);
    }
  }
  require_string(payload, "refinement_strategy", "");
  const std::string& refined = require_string(payload, "refined_prompt", "");
  if (refined.find_first_not_of(" \t\r\n") == std::string::npos) {
    throw SchemaError(SchemaFault::Empty, "refined prompt is empty", "refined_prompt");
  }
}

}  // namespace

std::string_view to_string(ResponseSchema schema) {
  switch (schema) {
    case ResponseSchema::Questions: return "Questions";
    case ResponseSchema::Answers: return "Answers";
    case ResponseSchema::RefinementT2V: return "RefinementT2V";
    case ResponseSchema::RefinementI2V: return "RefinementI2V";
    case ResponseSchema::Problems: return "Problems";
    case ResponseSchema::Relevance: return "Relevance";
    case ResponseSchema::Indices: return "Indices";
  }
  return "Questions";
}

std::optional<json> extract_first_json(std::string_view text) noexcept {
  try {
    for (std::size_t start = text.find('{'); start != std::string_view::npos; start = text.find('{', start + 1)) {
      const std::size_t end = match_object(text, start);
      if (end == std::string_view::npos) continue;
      const std::string_view candidate = text.substr(start, end - start);
      if (!json::accept(candidate)) continue;
      json parsed = json::parse(candidate, nullptr, false);
      if (parsed.is_object()) return parsed;
    }
  } catch (...) {
  }
  return std::nullopt;
}

void validate_schema(ResponseSchema schema, const json& payload) {
  if (!payload.is_object()) throw SchemaError(SchemaFault::WrongType, "expected an object", "$");
  switch (schema) {
    case ResponseSchema::Questions:
      check_string_list(require_array(payload, "questions", ""), "questions");
      return;
    case ResponseSchema::Problems:
      check_string_list(require_array(payload, "problems", ""), "problems");
      return;
    case ResponseSchema::Answers: {
      const json& answers = require_array(payload, "answers", "");
      for (std::size_t i = 0; i < answers.size(); ++i) {
        const std::string p = idx("answers", i);
        if (!answers[i].is_object()) throw SchemaError(SchemaFault::WrongType, "expected an object", p);
        require_string(answers[i], "question", p);
        require_score(answers[i], "score", p);
      }
      return;
    }
    case ResponseSchema::RefinementT2V:
      check_refinement(payload, false);
      return;
    case ResponseSchema::RefinementI2V:
      check_refinement(payload, true);
      return;
    case ResponseSchema::Relevance: {
      const json& v = require(payload, "is_relevant", "");
      if (!v.is_boolean()) throw SchemaError(SchemaFault::WrongType, "expected a boolean", "is_relevant");
      return;
    }
    case ResponseSchema::Indices: {
      const json& arr = require_array(payload, "indices", "");
      for (std::size_t i = 0; i < arr.size(); ++i) {
        if (!arr[i].is_number_integer()) {
          throw SchemaError(SchemaFault::WrongType, "expected an integer", idx("indices", i));
        }
      }
      return;
    }
  }
}

json parse_agent_json(ResponseSchema schema, std::string_view raw) {
  auto payload = extract_first_json(raw);
  if (!payload) {
    throw Error(ErrorKind::NoJsonFound, "no JSON object in " + std::string(to_string(schema)) + " response");
  }
  validate_schema(schema, *payload);
  return std::move(*payload);
}

}  // namespace vqqa
