#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "vqqa/backend.hpp"
#include "vqqa/core.hpp"

namespace vqqa::sim {

// Deterministic desk-scale stand-in for generation and VLM judgement.
//
// A prompt is reduced to aspect tokens (lower-cased alphanumeric words that
// are not stopwords). An aspect's emphasis is its repeat count minus one plus
// the parenthesis depth of every mention, so "((car))" has emphasis 2. The
// generated scene assigns each aspect a fulfillment
//     f = 1 - (1 - u) * kEmphasisDecay^emphasis,   u = hash(token, seed) in [0,1)
// which is pointwise non-decreasing in emphasis for a fixed seed.

inline constexpr double kEmphasisDecay = 0.5;

struct AspectMention {
  std::string token;
  int emphasis = 0;

  bool operator==(const AspectMention&) const = default;
};

// Unique aspects in order of first mention.
std::vector<AspectMention> extract_aspects(std::string_view prompt);
std::vector<std::string> aspect_tokens(std::string_view prompt);
bool is_stopword(std::string_view token);

struct SimScene {
  std::map<std::string, double> aspects;  // token -> fulfillment in [0, 1]
  std::uint64_t seed = 0;

  std::uint64_t hash() const;
  bool operator==(const SimScene&) const = default;
};

// Base uniform draw for `token` under `seed`.
double aspect_draw(std::string_view token, std::uint64_t seed);
double fulfillment(double draw, int emphasis);

// Throws EmptyInput on a blank prompt.
SimScene sim_generate(std::string_view prompt, const GenerationConditions& conditions, std::uint64_t seed);

// round(100 * fulfillment) of the quoted aspect, 0 when absent. Throws
// UnknownAspect if the question names no parsable aspect.
int sim_answer(const SimScene& scene, const Question& question);

// round(100 * mean fulfillment over the original prompt's aspects).
// Throws EmptyInput if the original prompt has no aspects.
int sim_rate(const SimScene& scene, const GenerationConditions& conditions);

// Half-away-from-zero rounding of 100 * x.
int to_percent(double x);

// Aspect token quoted as 'token' in a simulated question.
std::string question_aspect(std::string_view question_text);

// Adds one level of parentheses around the most emphasised mention of
// `aspect`. Throws UnknownAspect when the prompt does not mention it.
std::string emphasize_aspect(std::string_view prompt, std::string_view aspect);

std::string encode_locator(std::string_view prompt, std::uint64_t seed);
// Returns false if `locator` is not a simulated video locator.
bool decode_locator(std::string_view locator, std::string& prompt, std::uint64_t& seed);

class SimVideoGenerator : public VideoGenerator {
 public:
  SimVideoGenerator() = default;
  // Prompts containing any blocked term (case-insensitive aspect match) are
  // refused with SafetyRejected.
  explicit SimVideoGenerator(std::set<std::string> blocked_terms) : blocked_(std::move(blocked_terms)) {}

  std::string id() const override { return "sim-generator"; }

 protected:
  VideoArtifact do_generate(std::string_view prompt, const GenerationConditions& conditions,
                            std::optional<std::uint32_t> seed) override;

 private:
  std::set<std::string> blocked_;
};

struct SimVlmOptions {
  // Artificial per-call delay, used by the batch benchmark.
  std::chrono::microseconds latency{0};
};

// Rule-based responder for every template. Reads request slots and the
// simulated video locator; never consults shared state.
class SimVlm : public VlmClient {
 public:
  SimVlm() = default;
  explicit SimVlm(SimVlmOptions options) : options_(options) {}

 protected:
  std::string do_complete(const CompletionRequest& request) override;

 private:
  SimVlmOptions options_;
};

// Simulated question texts, exposed for tests.
std::vector<std::string> alignment_questions(std::string_view prompt);
std::vector<std::string> visual_quality_questions(std::string_view prompt);
std::vector<std::string> condition_fidelity_questions(std::string_view prompt);

}  // namespace vqqa::sim
