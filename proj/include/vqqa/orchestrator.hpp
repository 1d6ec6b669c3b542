#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vqqa/agents.hpp"
#include "vqqa/backend.hpp"
#include "vqqa/core.hpp"
#include "vqqa/event_log.hpp"

namespace vqqa {

struct RunConfig {
  StopPolicy stop_policy;
  SelectionStrategy selection_strategy = SelectionStrategy::GlobalSelection;
  // Shows global scores to the refiner. Off by default; it hurt quality in
  // the ablation.
  bool gs_in_the_loop = false;
  // Extra rater attempts after an unparsable rating.
  int rater_retry_budget = 3;
  std::string run_id = "run";
  std::optional<int> highlight_below;
  int malformed_retries = 1;
  int transport_retries = 2;

  // Throws ConfigError.
  void validate() const;
  AgentOptions agent_options() const;

  bool operator==(const RunConfig&) const = default;
};

struct StopDecision {
  bool should_stop = false;
  std::optional<StopReason> reason;  // set iff should_stop
};

// Scores are the global ratings of iterations 0..t. Throws EmptyInput.
StopDecision check_stop(std::span<const int> global_scores, const StopPolicy& policy);

// Earliest index wins ties. AverageQA needs qa_means aligned with scores.
// Throws EmptyInput, MissingQaMeans.
std::size_t select_best(std::span<const int> global_scores, SelectionStrategy strategy,
                        std::optional<std::span<const double>> qa_means = std::nullopt);

// Seeds per (iteration, sample): 17 + 100*sample for the first generation,
// then a counter-based uniform 32-bit draw keyed by the run id. Stateless, so
// any (t, s) can be recomputed independently and in any order.
class SeedPolicy {
 public:
  static constexpr std::int64_t kBaseSeed = 17;
  static constexpr std::int64_t kSampleStride = 100;

  explicit SeedPolicy(std::string_view run_id);
  std::int64_t seed_for(std::size_t iteration, std::uint32_t sample_index) const noexcept;

 private:
  std::uint64_t key_;
};

// Bare integer 0-100 after trimming whitespace, otherwise nullopt.
std::optional<int> parse_rating(std::string_view raw);

struct Backends {
  std::shared_ptr<VideoGenerator> generator;
  std::shared_ptr<VlmClient> vlm;
};

struct IterationOutcome {
  IterationRecord record;
  StopDecision stop;
};

class Optimizer {
 public:
  // Throws ConfigError on an invalid config or missing backends.
  Optimizer(Backends backends, RunConfig config);

  const RunConfig& config() const noexcept { return config_; }
  const SeedPolicy& seeds() const noexcept { return seeds_; }

  // Rates against the original prompt only. Throws UnparsableRating once the
  // retry budget is spent.
  GlobalScoreRecord global_rate(const VideoArtifact& video, const GenerationConditions& conditions,
                                CostLedger& ledger) const;
  CompletionRequest rater_request(const VideoArtifact& video, const GenerationConditions& conditions) const;

  // One step of the loop on `prompt`: generate, rate, decide, and (unless
  // stopping) question, answer and refine. Updates trajectory.ledger but does
  // not append the record.
  IterationOutcome run_iteration(Trajectory& trajectory, const std::string& prompt, std::size_t t,
                                 RunLogger* log = nullptr) const;

  // Full loop from the original prompt. An error is logged and rethrown;
  // completed records stay in the log.
  Trajectory optimize(const GenerationConditions& conditions, RunLogger* log = nullptr) const;

  // n candidates from the original prompt, rated and argmax-selected.
  // Throws PreconditionFailed if n < 1.
  Trajectory best_of_n(const GenerationConditions& conditions, std::size_t n, RunLogger* log = nullptr) const;

 private:
  struct Generated {
    VideoArtifact video;
    bool rejected = false;
  };
  Generated generate(const std::string& prompt, const GenerationConditions& conditions, std::size_t t) const;
  void run_agents(Trajectory& trajectory, IterationRecord& record, bool refine, RunLogger* log) const;
  void finish(Trajectory& trajectory, StopReason reason, RunLogger* log) const;

  Backends backends_;
  RunConfig config_;
  SeedPolicy seeds_;
};

}  // namespace vqqa
