#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "vqqa/core.hpp"

namespace vqqa {

enum class EventKind { Generated, Questioned, Answered, Refined, Rated, Stopped, Selected, Error };
std::string_view to_string(EventKind kind);
EventKind event_kind_from_string(std::string_view s);  // ConfigError on unknown names

struct RunEvent {
  std::string run_id;
  std::string sample_id;
  std::size_t iteration = 0;
  EventKind kind = EventKind::Generated;
  nlohmann::json payload = nlohmann::json::object();
  std::uint64_t sequence = 0;

  bool operator==(const RunEvent&) const = default;
};

nlohmann::json event_to_json(const RunEvent& event);
RunEvent event_from_json(const nlohmann::json& j);

// Append-only destination for one run's events. Sequence numbers start at 1
// and must increase by exactly one.
class EventSink {
 public:
  virtual ~EventSink() = default;

  // Throws SequenceViolation if event.sequence != last_sequence() + 1, and
  // IoFailure when the line cannot be written.
  void write(const RunEvent& event);
  std::uint64_t last_sequence() const noexcept { return last_sequence_; }

 protected:
  virtual void append_line(const std::string& line, bool flush) = 0;

 private:
  std::uint64_t last_sequence_ = 0;
};

void write_event(EventSink& sink, const RunEvent& event);

// One JSONL file per (run id, sample id). Refuses to reopen a non-empty file
// so an earlier run is never appended to or rewritten.
class JsonlEventWriter : public EventSink {
 public:
  explicit JsonlEventWriter(const std::filesystem::path& path);
  const std::filesystem::path& path() const noexcept { return path_; }

 protected:
  void append_line(const std::string& line, bool flush) override;

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

class MemoryEventSink : public EventSink {
 public:
  const std::vector<std::string>& lines() const noexcept { return lines_; }
  std::string text() const;

 protected:
  void append_line(const std::string& line, bool) override { lines_.push_back(line); }

 private:
  std::vector<std::string> lines_;
};

// Stamps run/sample ids and sequence numbers onto events for one sink.
class RunLogger {
 public:
  RunLogger(EventSink& sink, std::string run_id, std::string sample_id);

  void emit(EventKind kind, std::size_t iteration, nlohmann::json payload);

  const std::string& run_id() const noexcept { return run_id_; }
  const std::string& sample_id() const noexcept { return sample_id_; }

 private:
  EventSink& sink_;
  std::string run_id_;
  std::string sample_id_;
};

// <out>/<run_id>/<sample_id>.jsonl
std::filesystem::path run_log_path(const std::filesystem::path& out_dir, std::string_view run_id,
                                   std::string_view sample_id);

struct LoadedRun {
  std::string run_id;
  std::string sample_id;
  Trajectory trajectory;
  std::size_t event_count = 0;
  bool empty = false;           // no events at all
  bool complete = false;        // a Selected event was seen
  bool truncated_tail = false;  // the final line was cut off and skipped
  std::optional<std::string> error;  // payload message of an Error event
};

// Rebuilds the trajectory from a run's events. Throws CorruptLine (detail
// holds the 1-based line number) for an unparsable line that is not the last
// one, and SequenceViolation for gaps or mixed runs.
LoadedRun load_run(std::istream& in);
LoadedRun load_run_file(const std::filesystem::path& path);  // IoFailure if unreadable

}  // namespace vqqa
