#include "vqqa/templates.hpp"

#include <algorithm>
#include <cctype>

#include "vqqa/error.hpp"

namespace vqqa {
namespace {

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0 || c == '_'; }
bool is_ident(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_'; }

// Walks `text`, calling on_literal for plain runs and on_slot for each
// `{name}`. Unpaired braces are kept as literals.
template <typename Literal, typename Slot>
void scan(std::string_view text, Literal on_literal, Slot on_slot) {
  std::size_t i = 0;
  std::size_t run = 0;
  auto flush = [&](std::size_t end) {
    if (end > run) on_literal(text.substr(run, end - run));
  };
  while (i < text.size()) {
    const char c = text[i];
    if ((c == '{' || c == '}') && i + 1 < text.size() && text[i + 1] == c) {
      flush(i);
      on_literal(text.substr(i, 1));
      i += 2;
      run = i;
      continue;
    }
    if (c == '{' && i + 1 < text.size() && is_ident_start(text[i + 1])) {
      std::size_t j = i + 1;
      while (j < text.size() && is_ident(text[j])) ++j;
      if (j < text.size() && text[j] == '}') {
        flush(i);
        on_slot(text.substr(i + 1, j - i - 1));
        i = j + 1;
        run = i;
        continue;
      }
    }
    ++i;
  }
  flush(text.size());
}

}  // namespace

std::string_view template_name(TemplateId id) {
  switch (id) {
    case TemplateId::QgAlignment: return "qg_alignment";
    case TemplateId::QgVisualQuality: return "qg_visual_quality";
    case TemplateId::QgConditionFidelity: return "qg_condition_fidelity";
    case TemplateId::QaT2v: return "qa_t2v";
    case TemplateId::QaI2v: return "qa_i2v";
    case TemplateId::PrT2v: return "pr_t2v";
    case TemplateId::PrI2v: return "pr_i2v";
    case TemplateId::GlobalRaterT2v: return "global_rater_t2v";
    case TemplateId::GlobalRaterI2v: return "global_rater_i2v";
    case TemplateId::JudgeGtExtraction: return "judge_gt_extraction";
    case TemplateId::JudgeDirectAnalysis: return "judge_direct_analysis";
    case TemplateId::JudgePrecision: return "judge_precision";
    case TemplateId::JudgeQRecall: return "judge_q_recall";
    case TemplateId::JudgeDetectedProblem: return "judge_detected_problem";
  }
  return "";
}

std::string_view template_source(TemplateId id) {
  const auto name = template_name(id);
  for (const auto& t : detail::embedded_templates()) {
    if (t.name == name) return t.text;
  }
  throw Error(ErrorKind::PreconditionFailed, "template asset missing: " + std::string(name));
}

std::vector<std::string> placeholders_in(std::string_view text) {
  std::vector<std::string> out;
  scan(
      text, [](std::string_view) {},
      [&](std::string_view name) {
        if (std::find(out.begin(), out.end(), name) == out.end()) out.emplace_back(name);
      });
  return out;
}

std::vector<std::string> template_placeholders(TemplateId id) { return placeholders_in(template_source(id)); }

std::string render_text(std::string_view text, const SlotMap& slots) {
  std::string out;
  out.reserve(text.size());
  std::vector<std::string> missing;
  scan(
      text, [&](std::string_view lit) { out.append(lit); },
      [&](std::string_view name) {
        if (auto it = slots.find(name); it != slots.end()) {
          out.append(it->second);
        } else if (std::find(missing.begin(), missing.end(), name) == missing.end()) {
          missing.emplace_back(name);
        }
      });
  if (!missing.empty()) {
    std::string names;
    for (const auto& m : missing) names += (names.empty() ? "" : ",") + m;
    throw Error(ErrorKind::MissingSlot, "unfilled template placeholders", names);
  }
  return out;
}

std::string render_template(TemplateId id, const SlotMap& slots) { return render_text(template_source(id), slots); }

}  // namespace vqqa
