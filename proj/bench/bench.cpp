// Serial vs OpenMP batch runner over the simulated backends. The sim VLM
// sleeps per call to stand in for network latency, so the parallel runner
// overlaps waits even on a single core.

#include <chrono>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>
#include <omp.h>
#include <spdlog/spdlog.h>

#include "vqqa/batch.hpp"
#include "vqqa/sim.hpp"

using namespace vqqa;

namespace {

std::vector<GenerationConditions> make_samples(std::size_t n) {
  static const char* words[] = {"panda", "river", "castle", "dragon", "violin", "lantern", "meadow", "robot",
                                "falcon", "harbor", "comet", "teapot", "tiger", "piano", "whale", "kite"};
  std::vector<GenerationConditions> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::string p = "a";
    for (std::size_t k = 0; k < 5; ++k) p += std::string(k ? " and a " : " ") + words[(i * 7 + k * 3) % 16];
    out.push_back(GenerationConditions::text_to_video(p, static_cast<std::uint32_t>(i)));
  }
  return out;
}

template <typename F>
double seconds(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vqqa batch benchmark"};
  std::size_t n_samples = 32, bon_n = 5;
  int latency_us = 2000, workers = 8;
  app.add_option("--samples", n_samples, "Prompts per batch");
  app.add_option("--latency-us", latency_us, "Simulated VLM latency per call");
  app.add_option("--workers", workers, "OpenMP threads for the parallel runner");
  app.add_option("--bon", bon_n, "Candidates for the best-of-n batch");
  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::err);

  Backends backends{std::make_shared<sim::SimVideoGenerator>(),
                    std::make_shared<sim::SimVlm>(sim::SimVlmOptions{std::chrono::microseconds(latency_us)})};
  RunConfig cfg;
  cfg.run_id = "bench";
  const Optimizer opt(backends, cfg);
  const auto samples = make_samples(n_samples);
  BatchOptions par;
  par.workers = workers;

  std::vector<SampleResult> s_opt, p_opt, s_bon, p_bon;
  const double t_s_opt = seconds([&] { s_opt = optimize_batch_serial(opt, samples); });
  const double t_p_opt = seconds([&] { p_opt = optimize_batch(opt, samples, par); });
  const double t_s_bon = seconds([&] { s_bon = best_of_n_batch_serial(opt, samples, bon_n); });
  const double t_p_bon = seconds([&] { p_bon = best_of_n_batch(opt, samples, bon_n, par); });

  auto same = [](const std::vector<SampleResult>& a, const std::vector<SampleResult>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i].trajectory != b[i].trajectory || a[i].error_kind != b[i].error_kind) return false;
    }
    return true;
  };
  std::uint64_t calls = 0;
  for (const auto& r : s_opt) calls += r.ok() ? r.trajectory->ledger.total() : 0;

  nlohmann::json report{{"samples", n_samples},
                        {"latency_us", latency_us},
                        {"workers", workers},
                        {"max_threads", omp_get_max_threads()},
                        {"optimize", {{"serial_s", t_s_opt}, {"parallel_s", t_p_opt}, {"speedup", t_s_opt / t_p_opt},
                                      {"vlm_calls", calls}, {"identical", same(s_opt, p_opt)}}},
                        {"best_of_n", {{"n", bon_n}, {"serial_s", t_s_bon}, {"parallel_s", t_p_bon},
                                       {"speedup", t_s_bon / t_p_bon}, {"identical", same(s_bon, p_bon)}}}};
  std::cout << report.dump(2) << "\n";
  return same(s_opt, p_opt) && same(s_bon, p_bon) ? 0 : 1;
}
