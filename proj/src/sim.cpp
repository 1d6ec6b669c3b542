#include "vqqa/sim.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cmath>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "vqqa/error.hpp"
#include "vqqa/hashing.hpp"

namespace vqqa::sim {
namespace {

using json = nlohmann::json;

constexpr std::string_view kLocatorScheme = "sim://video?";

constexpr std::array<std::string_view, 40> kStopwords = {
    "a",    "an",   "the",  "of",    "in",    "on",   "at",    "to",   "and",  "or",
    "with", "is",   "are",  "its",   "their", "his",  "her",   "by",   "for",  "from",
    "into", "as",   "it",   "this",  "that",  "while", "over", "under", "near", "very",
    "be",   "was",  "were", "has",   "have",  "some", "then",  "than", "s",    "one"};

struct Mention {
  std::string token;
  std::size_t begin = 0;
  std::size_t end = 0;
  int depth = 0;
};

std::vector<Mention> scan_mentions(std::string_view prompt) {
  std::vector<Mention> out;
  int depth = 0;
  std::size_t i = 0;
  while (i < prompt.size()) {
    const unsigned char c = prompt[i];
    if (c == '(') {
      ++depth;
      ++i;
    } else if (c == ')') {
      depth = std::max(0, depth - 1);
      ++i;
    } else if (std::isalnum(c)) {
      std::size_t j = i;
      std::string token;
      while (j < prompt.size() && std::isalnum(static_cast<unsigned char>(prompt[j]))) {
        token.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(prompt[j]))));
        ++j;
      }
      if (!is_stopword(token)) out.push_back({std::move(token), i, j, depth});
      i = j;
    } else {
      ++i;
    }
  }
  return out;
}

std::string percent_encode(std::string_view s) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(kHex[c >> 4]);
      out.push_back(kHex[c & 15]);
    }
  }
  return out;
}

bool percent_decode(std::string_view s, std::string& out) {
  out.clear();
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '%') {
      out.push_back(s[i]);
      continue;
    }
    if (i + 2 >= s.size() || !std::isxdigit(static_cast<unsigned char>(s[i + 1])) ||
        !std::isxdigit(static_cast<unsigned char>(s[i + 2]))) {
      return false;
    }
    out.push_back(static_cast<char>(std::stoi(std::string(s.substr(i + 1, 2)), nullptr, 16)));
    i += 2;
  }
  return true;
}

template <typename Phrase>
std::vector<std::string> cycle_questions(std::string_view prompt, std::size_t min_count, std::size_t max_count,
                                         std::span<const Phrase> phrasings) {
  const auto aspects = aspect_tokens(prompt);
  std::vector<std::string> out;
  if (aspects.empty()) return out;
  const std::size_t n = std::clamp(aspects.size(), min_count, max_count);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& phrase = phrasings[(i / aspects.size()) % phrasings.size()];
    out.push_back(std::string(kQuestionPrefix) + std::string(phrase.first) + "'" + aspects[i % aspects.size()] + "'" +
                  std::string(phrase.second));
  }
  return out;
}

using Phrasing = std::pair<std::string_view, std::string_view>;

constexpr std::array<Phrasing, 2> kAlignmentPhrasing = {
    Phrasing{" clearly is the ", " shown?"}, Phrasing{" accurately is the ", " depicted?"}};
constexpr std::array<Phrasing, 3> kQualityPhrasing = {Phrasing{" stable is the ", " across frames?"},
                                                      Phrasing{" free of distortion is the ", "?"},
                                                      Phrasing{" natural does the ", " look in motion?"}};
constexpr std::array<Phrasing, 2> kFidelityPhrasing = {
    Phrasing{" faithfully is the reference ", " preserved?"},
    Phrasing{" naturally is the reference ", " integrated into the scene?"}};

SimScene scene_from_video(const CompletionRequest& request) {
  for (const auto& media : request.attachments) {
    std::string prompt;
    std::uint64_t seed = 0;
    if (media.kind == MediaKind::Video && decode_locator(media.uri, prompt, seed)) {
      return sim_generate(prompt, GenerationConditions{}, seed);
    }
  }
  throw Error(ErrorKind::BackendUnavailable, "request carries no simulated video attachment");
}

const std::string& slot(const CompletionRequest& request, const std::string& name) {
  auto it = request.slots.find(name);
  if (it == request.slots.end()) {
    throw Error(ErrorKind::BackendUnavailable, "sim responder needs slot '" + name + "'", request.template_id);
  }
  return it->second;
}

bool mentions_any(std::string_view text, const std::vector<std::string>& aspects) {
  const auto tokens = aspect_tokens(text);
  return std::any_of(tokens.begin(), tokens.end(), [&](const std::string& t) {
    return std::find(aspects.begin(), aspects.end(), t) != aspects.end();
  });
}

std::string respond_refine(const CompletionRequest& request, bool i2v) {
  const std::string& current = slot(request, "cur_iter_prompt");
  const json pairs = json::parse(slot(request, "qa_pairs"));
  const json* lowest = nullptr;
  std::string aspect;
  for (const auto& p : pairs) {
    std::string a;
    try {
      a = question_aspect(p.at("question").get<std::string>());
    } catch (const Error&) {
      continue;
    }
    if (lowest == nullptr || p.at("score").get<int>() < lowest->at("score").get<int>()) {
      lowest = &p;
      aspect = a;
    }
  }
  json out;
  json flaws = json::array();
  std::string refined = current;
  if (lowest != nullptr) {
    refined = emphasize_aspect(current, aspect);
    const std::string q = lowest->at("question").get<std::string>();
    const int s = lowest->at("score").get<int>();
    const std::string flaw = "The '" + aspect + "' is under-rendered.";
    if (i2v) {
      flaws.push_back({{"vqa_question", q},
                       {"score", s},
                       {"category", "Prompt Adherence"},
                       {"identified_flaw", flaw},
                       {"refinement_action", "Emphasize '" + aspect + "'."}});
    } else {
      flaws.push_back({{"vqa_pair", "Q: " + q + " A: " + std::to_string(s)},
                       {"identified_flaw", flaw},
                       {"prompt_correlation", "The prompt gives '" + aspect + "' too little weight."}});
    }
  }
  out["analysis"] = {{"historical_summary", "Simulated refinement."},
                     {i2v ? "vqa_failure_analysis" : "vqa_flaw_identification", flaws}};
  out["refinement_strategy"] =
      lowest != nullptr ? "Raise the emphasis of the lowest-scoring aspect '" + aspect + "'."
                        : "No parsable low-scoring aspect; the prompt is kept unchanged.";
  out["refined_prompt"] = refined;
  return "```json\n" + out.dump(2) + "\n```";
}

std::string respond(const CompletionRequest& request) {
  const std::string& id = request.template_id;
  if (id == "qg_alignment") {
    return json{{"questions", alignment_questions(slot(request, "t2v_prompt"))}}.dump();
  }
  if (id == "qg_visual_quality") {
    return json{{"questions", visual_quality_questions(slot(request, "t2v_prompt"))}}.dump();
  }
  if (id == "qg_condition_fidelity") {
    return json{{"questions", condition_fidelity_questions(slot(request, "t2v_prompt"))}}.dump();
  }
  if (id == "qa_t2v" || id == "qa_i2v") {
    const SimScene scene = scene_from_video(request);
    json answers = json::array();
    for (const auto& q : json::parse(slot(request, "questions"))) {
      const std::string text = q.get<std::string>();
      answers.push_back({{"question", text}, {"score", sim_answer(scene, Question{text, QuestionCategory::Alignment, std::nullopt})}});
    }
    return "```json\n" + json{{"answers", answers}}.dump(2) + "\n```";
  }
  if (id == "pr_t2v" || id == "pr_i2v") return respond_refine(request, id == "pr_i2v");
  if (id == "global_rater_t2v" || id == "global_rater_i2v") {
    GenerationConditions conditions;
    conditions.original_prompt = slot(request, "original_prompt");
    return std::to_string(sim_rate(scene_from_video(request), conditions));
  }
  if (id == "judge_gt_extraction") {
    json problems = json::array();
    std::stringstream ss(slot(request, "analysis"));
    std::string sentence;
    while (std::getline(ss, sentence, '.')) {
      const auto b = sentence.find_first_not_of(" \t\r\n");
      if (b == std::string::npos) continue;
      problems.push_back(sentence.substr(b, sentence.find_last_not_of(" \t\r\n") - b + 1));
    }
    return json{{"problems", problems}}.dump();
  }
  if (id == "judge_direct_analysis") {
    const SimScene scene = scene_from_video(request);
    json problems = json::array();
    for (const auto& a : aspect_tokens(slot(request, "prompt"))) {
      auto it = scene.aspects.find(a);
      if (it == scene.aspects.end() || to_percent(it->second) < 60) {
        problems.push_back("The '" + a + "' is poorly rendered");
      }
    }
    return json{{"problems", problems}}.dump();
  }
  if (id == "judge_precision") {
    const auto aspects = aspect_tokens(slot(request, "video_prompt"));
    bool relevant = false;
    try {
      const auto a = question_aspect(slot(request, "question"));
      relevant = std::find(aspects.begin(), aspects.end(), a) != aspects.end();
    } catch (const Error&) {
      relevant = mentions_any(slot(request, "question"), aspects);
    }
    return json{{"is_relevant", relevant}}.dump();
  }
  if (id == "judge_detected_problem") {
    return json{{"is_relevant", mentions_any(slot(request, "detected_problem"),
                                             aspect_tokens(slot(request, "video_prompt")))}}
        .dump();
  }
  if (id == "judge_q_recall") {
    const auto problem_tokens = aspect_tokens(slot(request, "problem"));
    json indices = json::array();
    std::stringstream ss(slot(request, "formatted_questions"));
    std::string line;
    while (std::getline(ss, line)) {
      const auto dot = line.find(". ");
      if (dot == std::string::npos) continue;
      int index = 0;
      try {
        index = std::stoi(line.substr(0, dot));
      } catch (...) {
        continue;
      }
      std::string a;
      try {
        a = question_aspect(line.substr(dot + 2));
      } catch (const Error&) {
        continue;
      }
      if (std::find(problem_tokens.begin(), problem_tokens.end(), a) != problem_tokens.end()) indices.push_back(index);
    }
    return json{{"indices", indices}}.dump();
  }
  throw Error(ErrorKind::BackendUnavailable, "sim responder has no rule for template '" + id + "'");
}

}  // namespace

bool is_stopword(std::string_view token) {
  return std::find(kStopwords.begin(), kStopwords.end(), token) != kStopwords.end();
}

std::vector<AspectMention> extract_aspects(std::string_view prompt) {
  std::vector<AspectMention> out;
  for (const auto& m : scan_mentions(prompt)) {
    auto it = std::find_if(out.begin(), out.end(), [&](const AspectMention& a) { return a.token == m.token; });
    if (it == out.end()) {
      out.push_back({m.token, m.depth});
    } else {
      it->emphasis += 1 + m.depth;
    }
  }
  return out;
}

std::vector<std::string> aspect_tokens(std::string_view prompt) {
  std::vector<std::string> out;
  for (auto& a : extract_aspects(prompt)) out.push_back(std::move(a.token));
  return out;
}

std::uint64_t SimScene::hash() const {
  std::uint64_t h = splitmix64(seed);
  for (const auto& [token, value] : aspects) {
    h = fnv1a64(token, h);
    h = splitmix64(h ^ std::bit_cast<std::uint64_t>(value));
  }
  return h;
}

double aspect_draw(std::string_view token, std::uint64_t seed) {
  return unit_interval(splitmix64(fnv1a64(token) ^ splitmix64(seed)));
}

double fulfillment(double draw, int emphasis) {
  return 1.0 - (1.0 - draw) * std::pow(kEmphasisDecay, emphasis);
}

SimScene sim_generate(std::string_view prompt, const GenerationConditions& /*conditions*/, std::uint64_t seed) {
  if (prompt.find_first_not_of(" \t\r\n") == std::string_view::npos) {
    throw Error(ErrorKind::EmptyInput, "sim_generate needs a prompt");
  }
  SimScene scene;
  scene.seed = seed;
  for (const auto& a : extract_aspects(prompt)) {
    scene.aspects[a.token] = fulfillment(aspect_draw(a.token, seed), a.emphasis);
  }
  return scene;
}

int to_percent(double x) { return static_cast<int>(std::lround(100.0 * x)); }

std::string question_aspect(std::string_view text) {
  for (std::size_t open = text.find('\''); open != std::string_view::npos; open = text.find('\'', open + 1)) {
    std::size_t j = open + 1;
    while (j < text.size() && std::isalnum(static_cast<unsigned char>(text[j]))) ++j;
    if (j > open + 1 && j < text.size() && text[j] == '\'') {
      std::string token(text.substr(open + 1, j - open - 1));
      std::transform(token.begin(), token.end(), token.begin(),
                     [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
      return token;
    }
  }
  throw Error(ErrorKind::UnknownAspect, "question names no quoted aspect", std::string(text));
}

int sim_answer(const SimScene& scene, const Question& question) {
  const std::string aspect = question_aspect(question.text);
  auto it = scene.aspects.find(aspect);
  return it == scene.aspects.end() ? 0 : to_percent(it->second);
}

int sim_rate(const SimScene& scene, const GenerationConditions& conditions) {
  const auto aspects = aspect_tokens(conditions.original_prompt);
  if (aspects.empty()) throw Error(ErrorKind::EmptyInput, "original prompt has no aspects to rate");
  double sum = 0.0;
  for (const auto& a : aspects) {
    if (auto it = scene.aspects.find(a); it != scene.aspects.end()) sum += it->second;
  }
  return to_percent(sum / static_cast<double>(aspects.size()));
}

std::string emphasize_aspect(std::string_view prompt, std::string_view aspect) {
  const Mention* best = nullptr;
  const auto mentions = scan_mentions(prompt);
  for (const auto& m : mentions) {
    if (m.token == aspect && (best == nullptr || m.depth > best->depth)) best = &m;
  }
  if (best == nullptr) throw Error(ErrorKind::UnknownAspect, "prompt does not mention aspect", std::string(aspect));
  std::string out;
  out.reserve(prompt.size() + 2);
  out.append(prompt.substr(0, best->begin));
  out.push_back('(');
  out.append(prompt.substr(best->begin, best->end - best->begin));
  out.push_back(')');
  out.append(prompt.substr(best->end));
  return out;
}

std::string encode_locator(std::string_view prompt, std::uint64_t seed) {
  return std::string(kLocatorScheme) + "seed=" + std::to_string(seed) + "&prompt=" + percent_encode(prompt);
}

bool decode_locator(std::string_view locator, std::string& prompt, std::uint64_t& seed) {
  if (!locator.starts_with(kLocatorScheme)) return false;
  std::string_view rest = locator.substr(kLocatorScheme.size());
  if (!rest.starts_with("seed=")) return false;
  rest.remove_prefix(5);
  const auto amp = rest.find("&prompt=");
  if (amp == std::string_view::npos || amp == 0) return false;
  const std::string digits(rest.substr(0, amp));
  if (!std::all_of(digits.begin(), digits.end(), [](unsigned char c) { return std::isdigit(c) != 0; })) return false;
  seed = std::stoull(digits);
  return percent_decode(rest.substr(amp + 8), prompt);
}

VideoArtifact SimVideoGenerator::do_generate(std::string_view prompt, const GenerationConditions& /*conditions*/,
                                             std::optional<std::uint32_t> seed) {
  for (const auto& token : aspect_tokens(prompt)) {
    if (blocked_.contains(token)) {
      throw Error(ErrorKind::SafetyRejected, "simulated safety filter refused the prompt", token);
    }
  }
  VideoArtifact video;
  video.seed = seed;
  video.generator_id = id();
  video.locator = encode_locator(prompt, seed.value_or(0));
  return video;
}

std::string SimVlm::do_complete(const CompletionRequest& request) {
  if (options_.latency.count() > 0) std::this_thread::sleep_for(options_.latency);
  return respond(request);
}

std::vector<std::string> alignment_questions(std::string_view prompt) {
  return cycle_questions<Phrasing>(prompt, 5, 10, kAlignmentPhrasing);
}

std::vector<std::string> visual_quality_questions(std::string_view prompt) {
  return cycle_questions<Phrasing>(prompt, 8, 10, kQualityPhrasing);
}

std::vector<std::string> condition_fidelity_questions(std::string_view prompt) {
  return cycle_questions<Phrasing>(prompt, 5, 10, kFidelityPhrasing);
}

}  // namespace vqqa::sim
