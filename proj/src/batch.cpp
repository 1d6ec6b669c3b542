#include "vqqa/batch.hpp"

#include <omp.h>

#include "vqqa/error.hpp"
#include "vqqa/event_log.hpp"

namespace vqqa {
namespace {

template <typename Run>
SampleResult run_sample(const Optimizer& optimizer, const GenerationConditions& conditions,
                        const BatchOptions& options, Run run) {
  SampleResult out;
  try {
    if (options.log_dir) {
      const std::string sample_id = std::to_string(conditions.sample_index);
      JsonlEventWriter writer(run_log_path(*options.log_dir, optimizer.config().run_id, sample_id));
      RunLogger log(writer, optimizer.config().run_id, sample_id);
      out.trajectory = run(conditions, &log);
    } else {
      out.trajectory = run(conditions, nullptr);
    }
  } catch (const Error& e) {
    out.error_kind = e.kind();
    out.error_message = e.what();
  } catch (const std::exception& e) {
    out.error_message = e.what();
  }
  return out;
}

template <typename Run>
std::vector<SampleResult> serial(const Optimizer& optimizer, std::span<const GenerationConditions> samples,
                                 const BatchOptions& options, Run run) {
  std::vector<SampleResult> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(run_sample(optimizer, s, options, run));
  return out;
}

template <typename Run>
std::vector<SampleResult> parallel(const Optimizer& optimizer, std::span<const GenerationConditions> samples,
                                   const BatchOptions& options, Run run) {
  std::vector<SampleResult> out(samples.size());
  const int workers = options.workers > 0 ? options.workers : omp_get_max_threads();
  const auto n = static_cast<std::ptrdiff_t>(samples.size());
  // run_sample never throws, so no exception can escape the parallel region.
#pragma omp parallel for schedule(dynamic, 1) num_threads(workers)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] = run_sample(optimizer, samples[static_cast<std::size_t>(i)], options, run);
  }
  return out;
}

auto optimize_fn(const Optimizer& o) {
  return [&o](const GenerationConditions& c, RunLogger* log) { return o.optimize(c, log); };
}

auto bon_fn(const Optimizer& o, std::size_t n) {
  return [&o, n](const GenerationConditions& c, RunLogger* log) { return o.best_of_n(c, n, log); };
}

}  // namespace

std::vector<SampleResult> optimize_batch_serial(const Optimizer& optimizer,
                                                std::span<const GenerationConditions> samples,
                                                const BatchOptions& options) {
  return serial(optimizer, samples, options, optimize_fn(optimizer));
}

std::vector<SampleResult> best_of_n_batch_serial(const Optimizer& optimizer,
                                                 std::span<const GenerationConditions> samples, std::size_t n,
                                                 const BatchOptions& options) {
  return serial(optimizer, samples, options, bon_fn(optimizer, n));
}

std::vector<SampleResult> optimize_batch(const Optimizer& optimizer, std::span<const GenerationConditions> samples,
                                         const BatchOptions& options) {
  return parallel(optimizer, samples, options, optimize_fn(optimizer));
}

std::vector<SampleResult> best_of_n_batch(const Optimizer& optimizer, std::span<const GenerationConditions> samples,
                                          std::size_t n, const BatchOptions& options) {
  return parallel(optimizer, samples, options, bon_fn(optimizer, n));
}

}  // namespace vqqa
