#include "vqqa/orchestrator.hpp"

#include <cctype>
#include <charconv>

#include <spdlog/spdlog.h>

#include "vqqa/error.hpp"
#include "vqqa/hashing.hpp"
#include "vqqa/serialization.hpp"
#include "vqqa/templates.hpp"

namespace vqqa {

using nlohmann::json;

void RunConfig::validate() const {
  stop_policy.validate();
  if (rater_retry_budget < 0) throw Error(ErrorKind::ConfigError, "rater retry budget must be >= 0");
  if (malformed_retries < 0) throw Error(ErrorKind::ConfigError, "malformed retries must be >= 0");
  if (transport_retries < 0) throw Error(ErrorKind::ConfigError, "transport retries must be >= 0");
  if (run_id.empty()) throw Error(ErrorKind::ConfigError, "run id must not be empty");
  if (highlight_below && (*highlight_below < 0 || *highlight_below > 100)) {
    throw Error(ErrorKind::ConfigError, "highlight threshold must be in [0, 100]");
  }
}

AgentOptions RunConfig::agent_options() const { return {malformed_retries, transport_retries, highlight_below}; }

StopDecision check_stop(std::span<const int> global_scores, const StopPolicy& policy) {
  const std::vector<int> best = running_max(global_scores);
  const std::size_t t = best.size() - 1;
  const auto patience = static_cast<std::size_t>(policy.patience);
  if (best[t] >= policy.gamma) return {true, StopReason::TargetSatisfied};
  if (t >= patience && static_cast<double>(best[t] - best[t - patience]) <= policy.epsilon) {
    return {true, StopReason::Saturated};
  }
  if (t >= static_cast<std::size_t>(policy.max_rounds)) return {true, StopReason::MaxIterations};
  return {false, std::nullopt};
}

std::size_t select_best(std::span<const int> global_scores, SelectionStrategy strategy,
                        std::optional<std::span<const double>> qa_means) {
  if (global_scores.empty()) throw Error(ErrorKind::EmptyInput, "no candidates to select from");
  auto argmax = [](auto values) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
      if (values[i] > values[best]) best = i;
    }
    return best;
  };
  switch (strategy) {
    case SelectionStrategy::GlobalSelection:
      return argmax(global_scores);
    case SelectionStrategy::LastIteration:
      return global_scores.size() - 1;
    case SelectionStrategy::AverageQA:
      if (!qa_means || qa_means->size() != global_scores.size()) {
        throw Error(ErrorKind::MissingQaMeans, "AverageQA needs one QA mean per candidate");
      }
      return argmax(*qa_means);
  }
  return 0;
}

SeedPolicy::SeedPolicy(std::string_view run_id) : key_(splitmix64(fnv1a64(run_id))) {}

std::int64_t SeedPolicy::seed_for(std::size_t iteration, std::uint32_t sample_index) const noexcept {
  if (iteration == 0) return kBaseSeed + kSampleStride * static_cast<std::int64_t>(sample_index);
  std::uint64_t x = key_ ^ splitmix64(sample_index);
  x = splitmix64(x ^ splitmix64(static_cast<std::uint64_t>(iteration) * 0xd1b54a32d192ed03ULL));
  return static_cast<std::int64_t>(x >> 32);
}

std::optional<int> parse_rating(std::string_view raw) {
  while (!raw.empty() && std::isspace(static_cast<unsigned char>(raw.front()))) raw.remove_prefix(1);
  while (!raw.empty() && std::isspace(static_cast<unsigned char>(raw.back()))) raw.remove_suffix(1);
  if (raw.empty() || raw.size() > 3) return std::nullopt;
  int value = 0;
  const auto [end, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), value);
  if (ec != std::errc{} || end != raw.data() + raw.size() || raw.front() == '-') return std::nullopt;
  if (value < Score::kMin || value > Score::kMax) return std::nullopt;
  return value;
}

Optimizer::Optimizer(Backends backends, RunConfig config)
    : backends_(std::move(backends)), config_(std::move(config)), seeds_(config_.run_id) {
  config_.validate();
  if (!backends_.generator || !backends_.vlm) throw Error(ErrorKind::ConfigError, "both backends must be bound");
}

CompletionRequest Optimizer::rater_request(const VideoArtifact& video, const GenerationConditions& conditions) const {
  const bool i2v = conditions.is_i2v();
  const TemplateId id = i2v ? TemplateId::GlobalRaterI2v : TemplateId::GlobalRaterT2v;
  CompletionRequest req;
  req.role = RoleTag::GlobalRate;
  req.template_id = template_name(id);
  req.max_retries = config_.transport_retries;
  req.slots["original_prompt"] = conditions.original_prompt;
  req.attachments.push_back({MediaKind::Video, video.locator});
  if (i2v) {
    std::string joined;
    for (const auto& image : conditions.reference_images) {
      joined += (joined.empty() ? "" : ", ") + image;
      req.attachments.push_back({MediaKind::Image, image});
    }
    req.slots["reference_images"] = joined;
  }
  req.prompt_text = render_template(id, {req.slots.begin(), req.slots.end()});
  return req;
}

GlobalScoreRecord Optimizer::global_rate(const VideoArtifact& video, const GenerationConditions& conditions,
                                         CostLedger& ledger) const {
  if (video.locator.empty()) throw Error(ErrorKind::PreconditionFailed, "cannot rate a video without a locator");
  const CompletionRequest req = rater_request(video, conditions);
  ++ledger.global_rate_calls;
  std::vector<std::string> raws;
  for (int attempt = 0; attempt <= config_.rater_retry_budget; ++attempt) {
    if (attempt > 0) ++ledger.retries;
    std::string raw = backends_.vlm->complete(req);
    if (auto value = parse_rating(raw)) return {video.iteration_index, Score(*value), std::move(raw)};
    spdlog::warn("unparsable rating '{}' (attempt {})", raw, attempt + 1);
    raws.push_back(std::move(raw));
  }
  const int attempts = static_cast<int>(raws.size());
  throw Error(ErrorKind::UnparsableRating, "rater never returned a bare 0-100 integer",
              std::to_string(attempts) + " attempts")
      .with_attempts(attempts)
      .with_raw_responses(std::move(raws));
}

Optimizer::Generated Optimizer::generate(const std::string& prompt, const GenerationConditions& conditions,
                                         std::size_t t) const {
  const std::int64_t seed = seeds_.seed_for(t, conditions.sample_index);
  auto& gen = *backends_.generator;
  std::optional<std::uint32_t> used;
  if (gen.accepts_seed()) used = static_cast<std::uint32_t>(seed);
  Generated out;
  try {
    out.video = gen.generate(prompt, conditions, seed);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::SafetyRejected) throw;
    spdlog::warn("generation {} refused: {}", t, e.what());
    out.video = VideoArtifact{"", gen.id(), std::nullopt, t};
    out.rejected = true;
  }
  out.video.iteration_index = t;
  out.video.seed = used;
  return out;
}

void Optimizer::run_agents(Trajectory& trajectory, IterationRecord& record, bool refine, RunLogger* log) const {
  AgentSuite agents(*backends_.vlm, trajectory.ledger, config_.agent_options());
  const AgentContext ctx{trajectory.conditions, record.prompt_used, record.video,
                         make_history(trajectory.records, config_.gs_in_the_loop)};
  const std::size_t t = record.index;

  auto collect = [&](QuestionSet set) {
    if (log) {
      json payload{{"category", to_string(set.category)}, {"questions", set.questions}};
      if (set.image_index) payload["image_index"] = *set.image_index;
      log->emit(EventKind::Questioned, t, std::move(payload));
    }
    record.questions.insert(record.questions.end(), set.questions.begin(), set.questions.end());
  };
  collect(agents.generate_questions(QuestionCategory::Alignment, ctx));
  collect(agents.generate_questions(QuestionCategory::VisualQuality, ctx));
  for (std::size_t i = 0; i < ctx.conditions.image_count(); ++i) {
    collect(agents.generate_questions(QuestionCategory::ConditionFidelity, ctx, i));
  }

  record.qa_pairs = agents.answer_questions(record.video, record.questions, ctx);
  if (log) log->emit(EventKind::Answered, t, {{"qa_pairs", record.qa_pairs}});

  if (!refine) return;
  record.refinement = agents.refine_prompt(ctx, record.qa_pairs);
  if (log) log->emit(EventKind::Refined, t, {{"refinement", *record.refinement}});
}

IterationOutcome Optimizer::run_iteration(Trajectory& trajectory, const std::string& prompt, std::size_t t,
                                          RunLogger* log) const {
  const GenerationConditions& conditions = trajectory.conditions;
  Generated g = generate(prompt, conditions, t);

  IterationOutcome out;
  IterationRecord& r = out.record;
  r.index = t;
  r.prompt_used = prompt;
  r.seed = g.video.seed;
  r.video = std::move(g.video);
  r.safety_rejected = g.rejected;
  r.global_score.iteration_index = t;

  if (log) {
    json payload{{"prompt", r.prompt_used}, {"video", r.video}, {"safety_rejected", r.safety_rejected}};
    if (t == 0) {
      payload["conditions"] = conditions;
      payload["kind"] = to_string(trajectory.kind);
      payload["strategy"] = to_string(trajectory.strategy);
      payload["run_id"] = config_.run_id;
    }
    log->emit(EventKind::Generated, t, std::move(payload));
  }

  if (!r.safety_rejected) {
    r.global_score = global_rate(r.video, conditions, trajectory.ledger);
    if (log) log->emit(EventKind::Rated, t, {{"global_score", r.global_score}});
  }

  std::vector<int> scores = trajectory.global_scores();
  scores.push_back(r.global_score.score.value());
  out.stop = trajectory.kind == TrajectoryKind::Optimize ? check_stop(scores, config_.stop_policy) : StopDecision{};

  if (r.safety_rejected || trajectory.kind != TrajectoryKind::Optimize) return out;
  if (!out.stop.should_stop) {
    run_agents(trajectory, r, true, log);
  } else if (config_.selection_strategy == SelectionStrategy::AverageQA) {
    // The last candidate still needs a QA mean to be selectable.
    run_agents(trajectory, r, false, log);
  }
  return out;
}

void Optimizer::finish(Trajectory& trajectory, StopReason reason, RunLogger* log) const {
  trajectory.stop_reason = reason;
  if (log) log->emit(EventKind::Stopped, trajectory.records.size() - 1, {{"reason", to_string(reason)}, {"ledger", trajectory.ledger}});

  const std::vector<int> scores = trajectory.global_scores();
  std::optional<std::vector<double>> means;
  if (trajectory.strategy == SelectionStrategy::AverageQA) {
    means.emplace();
    for (const auto& r : trajectory.records) means->push_back(r.qa_mean().value_or(0.0));
  }
  trajectory.selected_index =
      means ? select_best(scores, trajectory.strategy, std::span<const double>(*means))
            : select_best(scores, trajectory.strategy);
  if (log) {
    log->emit(EventKind::Selected, trajectory.records.size() - 1,
              {{"index", *trajectory.selected_index},
               {"strategy", to_string(trajectory.strategy)},
               {"ledger", trajectory.ledger}});
  }
}

namespace {

template <typename Body>
Trajectory logged(RunLogger* log, std::size_t& t, Body body) {
  try {
    return body();
  } catch (const Error& e) {
    if (log) {
      try {
        log->emit(EventKind::Error, t, {{"kind", to_string(e.kind())}, {"message", e.what()}});
      } catch (const std::exception& inner) {
        spdlog::error("could not log failure: {}", inner.what());
      }
    }
    throw;
  }
}

}  // namespace

Trajectory Optimizer::optimize(const GenerationConditions& conditions, RunLogger* log) const {
  conditions.validate();
  std::size_t t = 0;
  return logged(log, t, [&] {
    Trajectory trajectory;
    trajectory.conditions = conditions;
    trajectory.kind = TrajectoryKind::Optimize;
    trajectory.strategy = config_.selection_strategy;
    std::string prompt = conditions.original_prompt;
    for (;; ++t) {
      IterationOutcome step = run_iteration(trajectory, prompt, t, log);
      const std::optional<StopReason> reason = step.stop.reason;
      if (step.record.refinement) prompt = step.record.refinement->refined_prompt;
      append_iteration(trajectory, std::move(step.record));
      if (reason) {
        finish(trajectory, *reason, log);
        return trajectory;
      }
    }
  });
}

Trajectory Optimizer::best_of_n(const GenerationConditions& conditions, std::size_t n, RunLogger* log) const {
  conditions.validate();
  if (n < 1) throw Error(ErrorKind::PreconditionFailed, "best-of-n needs n >= 1");
  std::size_t t = 0;
  return logged(log, t, [&] {
    Trajectory trajectory;
    trajectory.conditions = conditions;
    trajectory.kind = TrajectoryKind::BestOfN;
    trajectory.strategy = SelectionStrategy::GlobalSelection;
    for (; t < n; ++t) {
      IterationOutcome step = run_iteration(trajectory, conditions.original_prompt, t, log);
      append_iteration(trajectory, std::move(step.record));
    }
    finish(trajectory, StopReason::MaxIterations, log);
    return trajectory;
  });
}

}  // namespace vqqa
