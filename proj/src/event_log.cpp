#include "vqqa/event_log.hpp"

#include <istream>
#include <sstream>

#include "vqqa/error.hpp"
#include "vqqa/serialization.hpp"

namespace vqqa {

using nlohmann::json;

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::Generated: return "Generated";
    case EventKind::Questioned: return "Questioned";
    case EventKind::Answered: return "Answered";
    case EventKind::Refined: return "Refined";
    case EventKind::Rated: return "Rated";
    case EventKind::Stopped: return "Stopped";
    case EventKind::Selected: return "Selected";
    case EventKind::Error: return "Error";
  }
  return "?";
}

EventKind event_kind_from_string(std::string_view s) {
  for (auto k : {EventKind::Generated, EventKind::Questioned, EventKind::Answered, EventKind::Refined,
                 EventKind::Rated, EventKind::Stopped, EventKind::Selected, EventKind::Error}) {
    if (to_string(k) == s) return k;
  }
  throw vqqa::Error(ErrorKind::ConfigError, "unknown event kind '" + std::string(s) + "'");
}

json event_to_json(const RunEvent& e) {
  return {{"seq", e.sequence},  {"run_id", e.run_id},   {"sample_id", e.sample_id},
          {"iter", e.iteration}, {"event", to_string(e.kind)}, {"payload", e.payload}};
}

RunEvent event_from_json(const json& j) {
  RunEvent e;
  e.sequence = j.at("seq").get<std::uint64_t>();
  e.run_id = j.at("run_id").get<std::string>();
  e.sample_id = j.at("sample_id").get<std::string>();
  e.iteration = j.at("iter").get<std::size_t>();
  e.kind = event_kind_from_string(j.at("event").get<std::string>());
  e.payload = j.at("payload");
  return e;
}

void EventSink::write(const RunEvent& event) {
  if (event.sequence != last_sequence_ + 1) {
    throw vqqa::Error(ErrorKind::SequenceViolation, "event sequence " + std::to_string(event.sequence) +
                                                        " after " + std::to_string(last_sequence_));
  }
  const bool flush = event.kind == EventKind::Stopped || event.kind == EventKind::Selected ||
                     event.kind == EventKind::Error;
  append_line(event_to_json(event).dump(), flush);
  last_sequence_ = event.sequence;
}

void write_event(EventSink& sink, const RunEvent& event) { sink.write(event); }

JsonlEventWriter::JsonlEventWriter(const std::filesystem::path& path) : path_(path) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (std::filesystem::exists(path, ec) && std::filesystem::file_size(path, ec) > 0) {
    throw vqqa::Error(ErrorKind::IoFailure, "run log already exists", path.string());
  }
  out_.open(path, std::ios::out | std::ios::app | std::ios::binary);
  if (!out_) throw vqqa::Error(ErrorKind::IoFailure, "cannot open run log", path.string());
}

void JsonlEventWriter::append_line(const std::string& line, bool flush) {
  out_ << line << '\n';
  if (flush) out_.flush();
  if (!out_) throw vqqa::Error(ErrorKind::IoFailure, "write failed", path_.string());
}

std::string MemoryEventSink::text() const {
  std::string out;
  for (const auto& l : lines_) out += l + "\n";
  return out;
}

RunLogger::RunLogger(EventSink& sink, std::string run_id, std::string sample_id)
    : sink_(sink), run_id_(std::move(run_id)), sample_id_(std::move(sample_id)) {}

void RunLogger::emit(EventKind kind, std::size_t iteration, json payload) {
  sink_.write(RunEvent{run_id_, sample_id_, iteration, kind, std::move(payload), sink_.last_sequence() + 1});
}

std::filesystem::path run_log_path(const std::filesystem::path& out_dir, std::string_view run_id,
                                   std::string_view sample_id) {
  return out_dir / std::string(run_id) / (std::string(sample_id) + ".jsonl");
}

namespace {

struct Rebuilder {
  LoadedRun run;
  std::optional<IterationRecord> pending;
  bool pending_rated = false;
  bool ledger_from_log = false;
  CostLedger counted;

  void flush_pending() {
    if (!pending) return;
    append_iteration(run.trajectory, std::move(*pending));
    pending.reset();
  }

  void apply(const RunEvent& e) {
    const json& p = e.payload;
    switch (e.kind) {
      case EventKind::Generated: {
        flush_pending();
        if (e.iteration == 0) {
          run.trajectory.conditions = p.at("conditions").get<GenerationConditions>();
          run.trajectory.kind = trajectory_kind_from_string(p.at("kind").get<std::string>());
          run.trajectory.strategy = selection_strategy_from_string(p.at("strategy").get<std::string>());
        }
        IterationRecord r;
        r.index = e.iteration;
        r.prompt_used = p.at("prompt").get<std::string>();
        r.video = p.at("video").get<VideoArtifact>();
        r.seed = r.video.seed;
        r.safety_rejected = p.value("safety_rejected", false);
        r.global_score.iteration_index = e.iteration;
        pending = std::move(r);
        pending_rated = pending->safety_rejected;
        break;
      }
      case EventKind::Rated:
        current(e).global_score = p.at("global_score").get<GlobalScoreRecord>();
        pending_rated = true;
        ++counted.global_rate_calls;
        break;
      case EventKind::Questioned: {
        auto qs = p.at("questions").get<std::vector<Question>>();
        auto& r = current(e);
        r.questions.insert(r.questions.end(), qs.begin(), qs.end());
        ++counted.question_gen_calls;
        break;
      }
      case EventKind::Answered: {
        auto pairs = p.at("qa_pairs").get<std::vector<QAPair>>();
        auto& r = current(e);
        r.qa_pairs.insert(r.qa_pairs.end(), pairs.begin(), pairs.end());
        ++counted.qa_calls;
        break;
      }
      case EventKind::Refined:
        current(e).refinement = p.at("refinement").get<RefinementAnalysis>();
        ++counted.refine_calls;
        break;
      case EventKind::Stopped:
        flush_pending();
        run.trajectory.stop_reason = stop_reason_from_string(p.at("reason").get<std::string>());
        run.trajectory.ledger = p.at("ledger").get<CostLedger>();
        ledger_from_log = true;
        break;
      case EventKind::Selected:
        flush_pending();
        run.trajectory.selected_index = p.at("index").get<std::size_t>();
        run.trajectory.ledger = p.at("ledger").get<CostLedger>();
        ledger_from_log = true;
        run.complete = true;
        break;
      case EventKind::Error:
        run.error = p.value("message", std::string("unknown error"));
        break;
    }
  }

  IterationRecord& current(const RunEvent& e) {
    if (!pending || pending->index != e.iteration) {
      throw vqqa::Error(ErrorKind::SequenceViolation,
                        std::string(to_string(e.kind)) + " event for iteration " + std::to_string(e.iteration) +
                            " without a matching Generated event");
    }
    return *pending;
  }

  void finish() {
    // A half-finished record is kept only if it is self-consistent.
    if (pending && pending_rated && pending->questions.size() == pending->qa_pairs.size()) flush_pending();
    if (!ledger_from_log) run.trajectory.ledger = counted;
  }
};

}  // namespace

LoadedRun load_run(std::istream& in) {
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();

  Rebuilder b;
  std::uint64_t last_seq = 0;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const bool last = i + 1 == lines.size();
    RunEvent e;
    try {
      e = event_from_json(json::parse(lines[i]));
    } catch (const std::exception& ex) {
      if (last) {
        b.run.truncated_tail = true;
        break;
      }
      throw vqqa::Error(ErrorKind::CorruptLine, "line " + std::to_string(i + 1) + ": " + ex.what(),
                        std::to_string(i + 1));
    }
    if (e.sequence != last_seq + 1) {
      throw vqqa::Error(ErrorKind::SequenceViolation, "line " + std::to_string(i + 1) + " has sequence " +
                                                          std::to_string(e.sequence));
    }
    if (last_seq == 0) {
      b.run.run_id = e.run_id;
      b.run.sample_id = e.sample_id;
    } else if (e.run_id != b.run.run_id || e.sample_id != b.run.sample_id) {
      throw vqqa::Error(ErrorKind::SequenceViolation, "line " + std::to_string(i + 1) + " belongs to another run");
    }
    last_seq = e.sequence;
    try {
      b.apply(e);
    } catch (const nlohmann::json::exception& ex) {
      throw vqqa::Error(ErrorKind::CorruptLine, "line " + std::to_string(i + 1) + ": " + ex.what(),
                        std::to_string(i + 1));
    }
    ++b.run.event_count;
  }
  b.finish();
  b.run.empty = b.run.event_count == 0;
  return std::move(b.run);
}

LoadedRun load_run_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw vqqa::Error(ErrorKind::IoFailure, "cannot read run log", path.string());
  return load_run(in);
}

}  // namespace vqqa
