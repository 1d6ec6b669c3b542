#include "cli.hpp"

#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "vqqa/analysis.hpp"
#include "vqqa/config.hpp"
#include "vqqa/error.hpp"
#include "vqqa/event_log.hpp"
#include "vqqa/orchestrator.hpp"
#include "vqqa/serialization.hpp"

namespace vqqa {
namespace {

using nlohmann::json;

struct RunFlags {
  std::string prompt;
  std::vector<std::string> images;
  std::optional<int> max_rounds, gamma, patience;
  std::optional<double> epsilon;
  std::optional<std::string> strategy, backend, run_id, out;
  bool gs_in_the_loop = false;
  std::uint32_t sample = 0;
  std::size_t n = 5;
};

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ConfigError, "cannot read file", path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorKind::SchemaViolation, "file is not valid JSON", path);
  return j;
}

AppConfig resolve_config(const std::optional<std::string>& config_path, const RunFlags& f) {
  AppConfig cfg = config_path ? load_config_file(*config_path) : AppConfig{};
  StopPolicy& sp = cfg.run.stop_policy;
  if (f.max_rounds) sp.max_rounds = *f.max_rounds;
  if (f.gamma) sp.gamma = *f.gamma;
  if (f.patience) sp.patience = *f.patience;
  if (f.epsilon) sp.epsilon = *f.epsilon;
  if (f.strategy) cfg.run.selection_strategy = selection_strategy_from_string(*f.strategy);
  if (f.gs_in_the_loop) cfg.run.gs_in_the_loop = true;
  if (f.backend) cfg.backend.kind = *f.backend;
  if (f.run_id) cfg.run.run_id = *f.run_id;
  if (f.out) cfg.out_dir = *f.out;
  if (cfg.backend.kind != "sim" && cfg.backend.kind != "http") {
    throw Error(ErrorKind::ConfigError, "backend must be 'sim' or 'http'", cfg.backend.kind);
  }
  cfg.run.validate();
  return cfg;
}

GenerationConditions conditions_from(const RunFlags& f) {
  auto c = f.images.empty() ? GenerationConditions::text_to_video(f.prompt, f.sample)
                            : GenerationConditions::image_to_video(f.prompt, f.images, f.sample);
  c.validate();
  return c;
}

json summary(const Trajectory& t, const std::string& run_id, const std::filesystem::path& log_path) {
  json j{{"run_id", run_id},
         {"sample_id", std::to_string(t.conditions.sample_index)},
         {"kind", to_string(t.kind)},
         {"log", log_path.string()},
         {"scores", t.global_scores()},
         {"ledger", t.ledger}};
  j["stop_reason"] = t.stop_reason ? json(to_string(*t.stop_reason)) : json(nullptr);
  if (const IterationRecord* best = t.selected()) {
    j["selected_index"] = *t.selected_index;
    j["selected_score"] = best->global_score.score.value();
    j["selected_prompt"] = best->prompt_used;
    j["selected_video"] = best->video.locator;
  }
  return j;
}

int do_generate(const std::optional<std::string>& config_path, const RunFlags& f, bool bon, std::ostream& out) {
  const AppConfig cfg = resolve_config(config_path, f);
  const GenerationConditions conditions = conditions_from(f);
  Optimizer optimizer(make_backends(cfg.backend), cfg.run);
  const std::string sample_id = std::to_string(conditions.sample_index);
  const auto path = run_log_path(cfg.out_dir, cfg.run.run_id, sample_id);
  JsonlEventWriter writer(path);
  RunLogger log(writer, cfg.run.run_id, sample_id);
  const Trajectory t = bon ? optimizer.best_of_n(conditions, f.n, &log) : optimizer.optimize(conditions, &log);
  out << summary(t, cfg.run.run_id, path).dump(2) << "\n";
  return 0;
}

int do_analyze(const std::string& run_file, std::ostream& out) {
  const LoadedRun run = load_run_file(run_file);
  json j{{"run_id", run.run_id},
         {"sample_id", run.sample_id},
         {"events", run.event_count},
         {"empty", run.empty},
         {"complete", run.complete},
         {"truncated_tail", run.truncated_tail}};
  if (run.error) j["error"] = *run.error;
  if (!run.empty) {
    const AuditReport audit = audit_ledger(run.trajectory);
    j["audit"] = audit_to_json(audit);
    j["score_curve"] = audit.best_so_far;
    j["stop_reason"] = audit.stop_reason ? json(to_string(*audit.stop_reason)) : json(nullptr);
    j["selected_index"] = run.trajectory.selected_index ? json(*run.trajectory.selected_index) : json(nullptr);
    j["expected_calls"] = audit.expected.total();
    j["actual_calls"] = audit.actual.total();
    j["theoretical_max_calls"] = audit.theoretical_max;
  }
  out << j.dump(2) << "\n";
  return 0;
}

struct CoverageFlags {
  std::string critiques, questions, scores;
  int threshold = 60;
  std::optional<std::string> backend;
};

int do_coverage(const std::optional<std::string>& config_path, const CoverageFlags& f, std::ostream& out) {
  AppConfig cfg = config_path ? load_config_file(*config_path) : AppConfig{};
  if (f.backend) cfg.backend.kind = *f.backend;
  const Backends backends = make_backends(cfg.backend);

  const json critiques = read_json_file(f.critiques);
  const json qs = read_json_file(f.questions);
  const json scores = read_json_file(f.scores);
  if (!critiques.is_object() || !critiques.contains("video_prompt")) {
    throw Error(ErrorKind::SchemaViolation, "critiques file needs an object with \"video_prompt\"", f.critiques);
  }
  std::vector<Question> questions;
  std::vector<int> qa_scores;
  try {
    for (const auto& q : qs) {
      questions.push_back(q.is_string() ? Question{q.get<std::string>(), QuestionCategory::Alignment, std::nullopt}
                                        : q.get<Question>());
    }
    qa_scores = scores.get<std::vector<int>>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::SchemaViolation, std::string("bad questions or scores file: ") + e.what());
  }

  CoverageJudge judge(*backends.vlm);
  const std::string video_prompt = critiques["video_prompt"].get<std::string>();
  std::vector<std::string> problems;
  if (critiques.contains("problems")) {
    problems = critiques["problems"].get<std::vector<std::string>>();
  } else {
    problems = judge.extract_gt_problems(critiques.value("analysis", std::string{}));
  }
  const CoverageInputs inputs =
      judge.build_inputs(problems, video_prompt, std::move(questions), std::move(qa_scores), f.threshold);
  json j = coverage_to_json(coverage_metrics(inputs));
  j["problems"] = inputs.gt_problems;
  j["relevance_flags"] = inputs.relevance_flags;
  j["problem_to_questions"] = inputs.problem_to_questions;
  j["judge_calls"] = judge.calls();
  out << j.dump(2) << "\n";
  return 0;
}

void add_generation_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--prompt", f.prompt, "Original prompt")->required();
  cmd->add_option("--image", f.images, "Reference image (repeatable; makes the task image-to-video)");
  cmd->add_option("--backend", f.backend, "sim or http")->check(CLI::IsMember({"sim", "http"}));
  cmd->add_option("--run-id", f.run_id, "Run id (keys the seed stream and log path)");
  cmd->add_option("--out", f.out, "Output directory for run logs");
  cmd->add_option("--sample", f.sample, "Sample index (sets the first seed to 17 + 100*sample)");
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Closed-loop prompt optimization for video generation"};
  app.require_subcommand(1);
  std::optional<std::string> config_path;
  std::string log_level = "warn";
  app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--log-level", log_level, "spdlog level")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

  RunFlags run_flags;
  auto* run = app.add_subcommand("run", "Optimize one prompt");
  add_generation_flags(run, run_flags);
  run->add_option("--max-rounds", run_flags.max_rounds, "Maximum refinement rounds (default 4)");
  run->add_option("--gamma", run_flags.gamma, "Target score (default 100)");
  run->add_option("--patience", run_flags.patience, "Saturation window (default 3)");
  run->add_option("--epsilon", run_flags.epsilon, "Saturation tolerance (default 0)");
  run->add_option("--strategy", run_flags.strategy, "global, last or avg-qa")
      ->check(CLI::IsMember({"global", "last", "avg-qa"}));
  run->add_flag("--gs-in-the-loop", run_flags.gs_in_the_loop, "Show global scores to the refiner");

  RunFlags bon_flags;
  auto* bon = app.add_subcommand("bon", "Best-of-N baseline");
  add_generation_flags(bon, bon_flags);
  bon->add_option("-n", bon_flags.n, "Number of candidates (default 5)")->check(CLI::PositiveNumber);

  std::string run_file;
  auto* analyze = app.add_subcommand("analyze", "Audit a run log");
  analyze->add_option("--run", run_file, "Run log (JSONL)")->required();

  CoverageFlags cov;
  auto* coverage = app.add_subcommand("coverage", "Question coverage metrics");
  coverage->add_option("--critiques", cov.critiques, "JSON: video_prompt plus analysis or problems")->required();
  coverage->add_option("--questions", cov.questions, "JSON array of questions")->required();
  coverage->add_option("--scores", cov.scores, "JSON array of QA scores")->required();
  coverage->add_option("--threshold", cov.threshold, "Detection threshold (default 60)")->check(CLI::Range(0, 100));
  coverage->add_option("--backend", cov.backend, "Judge backend: sim or http")->check(CLI::IsMember({"sim", "http"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*run) return do_generate(config_path, run_flags, false, out);
    if (*bon) return do_generate(config_path, bon_flags, true, out);
    if (*analyze) return do_analyze(run_file, out);
    if (*coverage) return do_coverage(config_path, cov, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace vqqa
