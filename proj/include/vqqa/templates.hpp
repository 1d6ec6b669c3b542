#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace vqqa {

// Prompt templates shipped under assets/templates and embedded at build time.
// Placeholders are `{name}`; `{{` and `}}` render as literal braces.
enum class TemplateId {
  QgAlignment,
  QgVisualQuality,
  QgConditionFidelity,
  QaT2v,
  QaI2v,
  PrT2v,
  PrI2v,
  GlobalRaterT2v,
  GlobalRaterI2v,
  JudgeGtExtraction,
  JudgeDirectAnalysis,
  JudgePrecision,
  JudgeQRecall,
  JudgeDetectedProblem,
};

inline constexpr TemplateId kAllTemplates[] = {
    TemplateId::QgAlignment,       TemplateId::QgVisualQuality,     TemplateId::QgConditionFidelity,
    TemplateId::QaT2v,             TemplateId::QaI2v,               TemplateId::PrT2v,
    TemplateId::PrI2v,             TemplateId::GlobalRaterT2v,      TemplateId::GlobalRaterI2v,
    TemplateId::JudgeGtExtraction, TemplateId::JudgeDirectAnalysis, TemplateId::JudgePrecision,
    TemplateId::JudgeQRecall,      TemplateId::JudgeDetectedProblem,
};

using SlotMap = std::map<std::string, std::string, std::less<>>;

// File stem of the template asset, e.g. "qg_alignment".
std::string_view template_name(TemplateId id);

// Raw template text, byte-identical to the asset file.
std::string_view template_source(TemplateId id);

// Placeholder names in order of first appearance.
std::vector<std::string> template_placeholders(TemplateId id);
std::vector<std::string> placeholders_in(std::string_view text);

// Substitutes every placeholder. Throws MissingSlot naming all unfilled
// placeholders; extra slots are ignored.
std::string render_template(TemplateId id, const SlotMap& slots);
std::string render_text(std::string_view text, const SlotMap& slots);

namespace detail {
struct EmbeddedTemplate {
  std::string_view name;
  std::string_view text;
};
const std::vector<EmbeddedTemplate>& embedded_templates();
}  // namespace detail

}  // namespace vqqa
