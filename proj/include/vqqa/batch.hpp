#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vqqa/error.hpp"
#include "vqqa/orchestrator.hpp"

namespace vqqa {

// Outcome of one sample; a failed sample does not stop the batch.
struct SampleResult {
  std::optional<Trajectory> trajectory;
  std::optional<ErrorKind> error_kind;  // absent for non-vqqa exceptions
  std::string error_message;

  bool ok() const noexcept { return trajectory.has_value(); }
};

struct BatchOptions {
  int workers = 0;  // 0: OpenMP default
  // When set, each sample logs to run_log_path(log_dir, run_id, sample_index).
  std::optional<std::filesystem::path> log_dir;
};

// Serial reference loops. Results are in input order.
std::vector<SampleResult> optimize_batch_serial(const Optimizer& optimizer,
                                                std::span<const GenerationConditions> samples,
                                                const BatchOptions& options = {});
std::vector<SampleResult> best_of_n_batch_serial(const Optimizer& optimizer,
                                                 std::span<const GenerationConditions> samples, std::size_t n,
                                                 const BatchOptions& options = {});

// OpenMP versions; identical results to the serial loops because every
// trajectory depends only on (run id, sample) and backends are stateless.
std::vector<SampleResult> optimize_batch(const Optimizer& optimizer, std::span<const GenerationConditions> samples,
                                         const BatchOptions& options = {});
std::vector<SampleResult> best_of_n_batch(const Optimizer& optimizer, std::span<const GenerationConditions> samples,
                                          std::size_t n, const BatchOptions& options = {});

}  // namespace vqqa
