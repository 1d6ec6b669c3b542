#include "vqqa/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "vqqa/agent_json.hpp"
#include "vqqa/agents.hpp"
#include "vqqa/serialization.hpp"
#include "vqqa/templates.hpp"

namespace vqqa {

using nlohmann::json;

double expected_vlm_calls(double rounds, double image_count) {
  if (!std::isfinite(rounds) || !std::isfinite(image_count) || rounds < 0.0 || image_count < 0.0) {
    throw Error(ErrorKind::RangeViolation, "rounds and image count must be finite and non-negative");
  }
  return (5.0 + image_count) * rounds + 1.0;
}

AuditReport audit_ledger(const Trajectory& tr) {
  AuditReport rep;
  rep.kind = tr.kind;
  rep.image_count = tr.conditions.image_count();
  rep.stop_reason = tr.stop_reason;
  rep.actual = tr.ledger;
  rep.scores = tr.global_scores();
  if (!rep.scores.empty()) rep.best_so_far = running_max(rep.scores);

  const std::size_t n = tr.records.size();
  const std::uint64_t k = rep.image_count;
  std::size_t rejected = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const IterationRecord& r = tr.records[i];
    if (r.safety_rejected) {
      ++rejected;
      continue;
    }
    ++rep.expected.global_rate_calls;
    if (tr.kind != TrajectoryKind::Optimize) continue;
    const bool last = i + 1 == n;
    const bool stopped_here = last && tr.stop_reason.has_value();
    if (!stopped_here || tr.strategy == SelectionStrategy::AverageQA) {
      rep.expected.question_gen_calls += 2 + k;
      ++rep.expected.qa_calls;
    }
    if (!stopped_here) ++rep.expected.refine_calls;
  }
  rep.expected.retries = tr.ledger.retries;

  if (tr.kind == TrajectoryKind::Optimize) {
    rep.rounds = n == 0 ? 0 : n - 1;
    rep.theoretical_max = expected_vlm_calls(static_cast<double>(rep.rounds), static_cast<double>(k));
  } else {
    rep.rounds = 0;
    rep.theoretical_max = static_cast<double>(n);
  }

  auto compare = [&](const char* role, std::uint64_t expected, std::uint64_t actual) {
    if (expected != actual) rep.deviations.push_back({role, expected, actual});
  };
  compare("question_gen", rep.expected.question_gen_calls, rep.actual.question_gen_calls);
  compare("qa", rep.expected.qa_calls, rep.actual.qa_calls);
  compare("refine", rep.expected.refine_calls, rep.actual.refine_calls);
  compare("global_rate", rep.expected.global_rate_calls, rep.actual.global_rate_calls);

  // Records must also agree with the shape the counts were derived from.
  for (std::size_t i = 0; i + 1 < n && tr.kind == TrajectoryKind::Optimize; ++i) {
    if (!tr.records[i].safety_rejected && !tr.records[i].refinement) {
      rep.notes.push_back("record " + std::to_string(i) + " is not final but has no refinement");
    }
  }

  if (tr.kind == TrajectoryKind::Optimize && n > 0 && tr.stop_reason) {
    rep.notes.push_back("final candidate was rated only; question, answer and refine calls for it were skipped (" +
                        std::string(to_string(*tr.stop_reason)) + ")");
  }
  if (tr.kind == TrajectoryKind::Optimize && tr.strategy == SelectionStrategy::AverageQA && n > 0) {
    rep.notes.push_back("AverageQA: final candidate received " + std::to_string(2 + k) +
                        " question calls and 1 answer call so it has a QA mean");
  }
  if (rejected > 0) {
    rep.notes.push_back(std::to_string(rejected) + " generation(s) refused by the generator; no VLM calls made for them");
  }
  if (tr.ledger.retries > 0) {
    rep.notes.push_back(std::to_string(tr.ledger.retries) + " re-issued request(s) not counted in per-role totals");
  }
  if (!rep.within_max()) {
    rep.notes.push_back("total " + std::to_string(rep.actual.total()) + " exceeds the worst-case bound");
  }
  return rep;
}

json audit_to_json(const AuditReport& r) {
  json devs = json::array();
  for (const auto& d : r.deviations) devs.push_back({{"role", d.role}, {"expected", d.expected}, {"actual", d.actual}});
  json j{{"kind", to_string(r.kind)},
         {"rounds", r.rounds},
         {"image_count", r.image_count},
         {"expected", r.expected},
         {"actual", r.actual},
         {"theoretical_max", r.theoretical_max},
         {"within_max", r.within_max()},
         {"scores", r.scores},
         {"best_so_far", r.best_so_far},
         {"deviations", devs},
         {"notes", r.notes},
         {"ok", r.ok()}};
  j["stop_reason"] = r.stop_reason ? json(to_string(*r.stop_reason)) : json(nullptr);
  return j;
}

void CoverageInputs::validate() const {
  if (threshold < Score::kMin || threshold > Score::kMax) {
    throw Error(ErrorKind::RangeViolation, "threshold must be in [0, 100]");
  }
  if (relevance_flags.size() != questions.size()) {
    throw Error(ErrorKind::PreconditionFailed, "one relevance flag per question required");
  }
  if (qa_scores.size() != questions.size()) {
    throw Error(ErrorKind::PreconditionFailed, "one QA score per question required");
  }
  if (problem_to_questions.size() != gt_problems.size()) {
    throw Error(ErrorKind::PreconditionFailed, "one question mapping per problem required");
  }
  for (int s : qa_scores) {
    if (s < Score::kMin || s > Score::kMax) throw Error(ErrorKind::RangeViolation, "QA score outside [0, 100]");
  }
  for (std::size_t p = 0; p < problem_to_questions.size(); ++p) {
    for (std::size_t q : problem_to_questions[p]) {
      if (q >= questions.size()) {
        throw Error(ErrorKind::IndexOutOfRange,
                    "problem " + std::to_string(p) + " maps to question " + std::to_string(q));
      }
    }
  }
}

CoverageReport coverage_metrics(const CoverageInputs& in) {
  in.validate();
  CoverageReport rep;
  rep.threshold = in.threshold;
  rep.total_questions = in.questions.size();
  rep.total_problems = in.gt_problems.size();
  rep.relevant_questions = static_cast<std::size_t>(std::count(in.relevance_flags.begin(), in.relevance_flags.end(), true));
  for (const auto& mapped : in.problem_to_questions) {
    if (mapped.empty()) continue;
    ++rep.covered_problems;
    // Strictly below: a score equal to the threshold is not a detection.
    if (std::any_of(mapped.begin(), mapped.end(), [&](std::size_t q) { return in.qa_scores[q] < in.threshold; })) {
      ++rep.detected_problems;
    }
  }
  if (rep.total_questions == 0) {
    rep.issues.push_back({ErrorKind::DegenerateDenominator, "precision", "no questions"});
  } else {
    rep.precision = static_cast<double>(rep.relevant_questions) / static_cast<double>(rep.total_questions);
  }
  if (rep.total_problems == 0) {
    rep.issues.push_back({ErrorKind::DegenerateDenominator, "q_recall", "no ground-truth problems"});
    rep.issues.push_back({ErrorKind::DegenerateDenominator, "e2e_recall", "no ground-truth problems"});
  } else {
    const auto total = static_cast<double>(rep.total_problems);
    rep.q_recall = static_cast<double>(rep.covered_problems) / total;
    rep.e2e_recall = static_cast<double>(rep.detected_problems) / total;
  }
  return rep;
}

json coverage_to_json(const CoverageReport& r) {
  auto metric = [](const std::optional<double>& v, std::size_t num, std::size_t den) {
    json m{{"numerator", num}, {"denominator", den}};
    m["fraction"] = v ? json(*v) : json(nullptr);
    m["percent"] = v ? json(std::round(*v * 10000.0) / 100.0) : json(nullptr);
    return m;
  };
  json issues = json::array();
  for (const auto& i : r.issues) issues.push_back({{"kind", to_string(i.kind)}, {"metric", i.metric}, {"message", i.message}});
  return {{"precision", metric(r.precision, r.relevant_questions, r.total_questions)},
          {"q_recall", metric(r.q_recall, r.covered_problems, r.total_problems)},
          {"e2e_recall", metric(r.e2e_recall, r.detected_problems, r.total_problems)},
          {"threshold", r.threshold},
          {"issues", issues}};
}

namespace {

json judge_parse(ResponseSchema schema, std::string_view raw) {
  try {
    return parse_agent_json(schema, raw);
  } catch (const Error& e) {
    throw Error(ErrorKind::MalformedResponse, std::string("judge response: ") + e.what(), e.detail());
  }
}

CompletionRequest judge_request(TemplateId id, SlotMap slots) {
  CompletionRequest req;
  req.role = RoleTag::Judge;
  req.template_id = template_name(id);
  req.prompt_text = render_template(id, slots);
  req.slots.insert(slots.begin(), slots.end());
  return req;
}

std::vector<std::string> dedup(const json& arr) {
  std::vector<std::string> out;
  std::set<std::string, std::less<>> seen;
  for (const auto& v : arr) {
    auto s = v.get<std::string>();
    if (seen.insert(s).second) out.push_back(std::move(s));
  }
  return out;
}

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

}  // namespace

std::string CoverageJudge::call(const CompletionRequest& request) {
  ++calls_;
  return vlm_.complete(request);
}

std::vector<std::string> CoverageJudge::extract_gt_problems(std::string_view analysis_text) {
  if (blank(analysis_text)) return {};
  // The extraction template has no slot for the analysis; it follows the
  // instructions.
  CompletionRequest req = judge_request(TemplateId::JudgeGtExtraction, {});
  req.prompt_text += "\nExpert analysis:\n" + std::string(analysis_text) + "\n";
  req.slots["analysis"] = std::string(analysis_text);
  return dedup(judge_parse(ResponseSchema::Problems, call(req))["problems"]);
}

std::vector<std::string> CoverageJudge::direct_analysis(std::string_view video_prompt, const VideoArtifact& video) {
  CompletionRequest req = judge_request(TemplateId::JudgeDirectAnalysis, {{"prompt", std::string(video_prompt)}});
  req.attachments.push_back({MediaKind::Video, video.locator});
  return dedup(judge_parse(ResponseSchema::Problems, call(req))["problems"]);
}

bool CoverageJudge::judge_relevance(const Question& question, std::string_view video_prompt) {
  const CompletionRequest req = judge_request(
      TemplateId::JudgePrecision, {{"video_prompt", std::string(video_prompt)}, {"question", question.text}});
  return judge_parse(ResponseSchema::Relevance, call(req))["is_relevant"].get<bool>();
}

bool CoverageJudge::judge_detected_problem(std::string_view problem, std::string_view video_prompt) {
  const CompletionRequest req =
      judge_request(TemplateId::JudgeDetectedProblem,
                    {{"video_prompt", std::string(video_prompt)}, {"detected_problem", std::string(problem)}});
  return judge_parse(ResponseSchema::Relevance, call(req))["is_relevant"].get<bool>();
}

std::vector<std::size_t> CoverageJudge::map_problem_to_questions(std::string_view problem,
                                                                 std::span<const Question> questions) {
  if (questions.empty()) throw Error(ErrorKind::EmptyInput, "no questions to map onto");
  const CompletionRequest req =
      judge_request(TemplateId::JudgeQRecall,
                    {{"problem", std::string(problem)}, {"formatted_questions", format_question_list(questions)}});
  const json payload = judge_parse(ResponseSchema::Indices, call(req));
  std::vector<std::size_t> out;
  for (const auto& v : payload["indices"]) {
    const auto idx = v.get<long long>();
    if (idx < 0 || static_cast<std::size_t>(idx) >= questions.size()) {
      throw Error(ErrorKind::IndexOutOfRange,
                  "index " + std::to_string(idx) + " over " + std::to_string(questions.size()) + " questions");
    }
    out.push_back(static_cast<std::size_t>(idx));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

CoverageInputs CoverageJudge::build_inputs(std::vector<std::string> problems, std::string_view video_prompt,
                                           std::vector<Question> questions, std::vector<int> qa_scores,
                                           int threshold) {
  CoverageInputs in;
  in.threshold = threshold;
  for (const auto& q : questions) in.relevance_flags.push_back(judge_relevance(q, video_prompt));
  for (const auto& p : problems) {
    in.problem_to_questions.push_back(questions.empty() ? std::vector<std::size_t>{}
                                                        : map_problem_to_questions(p, questions));
  }
  in.gt_problems = std::move(problems);
  in.questions = std::move(questions);
  in.qa_scores = std::move(qa_scores);
  return in;
}

}  // namespace vqqa
