#pragma once

// Shared helpers for the unit tests and the acceptance runner.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "vqqa/backend.hpp"
#include "vqqa/orchestrator.hpp"
#include "vqqa/sim.hpp"

namespace vqqa::test {

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(VQQA_FIXTURE_DIR) / name;
}

// Five distinct content words joined by stopwords, so the sim sees exactly
// five aspects.
inline std::string five_aspect_prompt(std::size_t i) {
  static const std::vector<std::string> nouns = {
      "panda",   "bamboo",  "river",   "castle",  "dragon",  "violin", "lantern", "meadow",  "robot",
      "glacier", "falcon",  "bicycle", "harbor",  "cactus",  "comet",  "teapot",  "tiger",   "canyon",
      "piano",   "orchid",  "zeppelin", "forest", "tram",    "whale",  "volcano", "kite",    "umbrella",
      "lighthouse", "fox",  "desert",  "bridge",  "owl",     "sailboat", "pumpkin", "statue", "monk"};
  std::mt19937_64 rng(0x5eedULL + i);
  std::vector<std::string> pool = nouns;
  std::shuffle(pool.begin(), pool.end(), rng);
  return "a " + pool[0] + " near a " + pool[1] + " with a " + pool[2] + " and a " + pool[3] + " under the " + pool[4];
}

inline Backends sim_backends() {
  return {std::make_shared<sim::SimVideoGenerator>(), std::make_shared<sim::SimVlm>()};
}

inline RunConfig config_with(int max_rounds, int patience, double epsilon = 0.0, int gamma = 100,
                             std::string run_id = "test-run") {
  RunConfig c;
  c.stop_policy.max_rounds = max_rounds;
  c.stop_policy.patience = patience;
  c.stop_policy.epsilon = epsilon;
  c.stop_policy.gamma = gamma;
  c.run_id = std::move(run_id);
  return c;
}

// Scripted rater over the sim for every other role.
inline std::shared_ptr<ScriptedVlm> scripted_over_sim() {
  return std::make_shared<ScriptedVlm>(std::make_shared<sim::SimVlm>());
}

inline std::vector<std::string> as_strings(const std::vector<int>& v) {
  std::vector<std::string> out;
  for (int x : v) out.push_back(std::to_string(x));
  return out;
}

// Independent oracle: first index holding the maximum.
template <typename T>
std::size_t first_argmax_oracle(const std::vector<T>& v) {
  T best = v[0];
  for (const T& x : v) best = x > best ? x : best;
  for (std::size_t i = 0;; ++i) {
    if (v[i] == best) return i;
  }
}

// True if `text` contains `number` as a standalone decimal token.
inline bool contains_number(const std::string& text, int number) {
  const std::string n = std::to_string(number);
  for (std::size_t pos = text.find(n); pos != std::string::npos; pos = text.find(n, pos + 1)) {
    const bool left = pos == 0 || !std::isdigit(static_cast<unsigned char>(text[pos - 1]));
    const std::size_t end = pos + n.size();
    const bool right = end >= text.size() || !std::isdigit(static_cast<unsigned char>(text[end]));
    if (left && right) return true;
  }
  return false;
}

inline std::string request_text(const CompletionRequest& r) {
  std::string s = r.prompt_text;
  for (const auto& [k, v] : r.slots) s += "\n" + k + "=" + v;
  for (const auto& a : r.attachments) s += "\n" + a.uri;
  return s;
}

}  // namespace vqqa::test
