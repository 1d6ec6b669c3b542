#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "support.hpp"
#include "vqqa/error.hpp"
#include "vqqa/event_log.hpp"
#include "vqqa/serialization.hpp"

using namespace vqqa;
namespace fs = std::filesystem;

namespace {

ErrorKind kind_of(auto fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::EmptyInput;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("vqqa-log-" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::pair<Trajectory, std::string> logged_run(const GenerationConditions& c, RunConfig cfg = test::config_with(3, 2),
                                              std::optional<std::size_t> bon = std::nullopt) {
  MemoryEventSink sink;
  RunLogger log(sink, cfg.run_id, "s0");
  Optimizer opt(test::sim_backends(), cfg);
  Trajectory t = bon ? opt.best_of_n(c, *bon, &log) : opt.optimize(c, &log);
  return {t, sink.text()};
}

LoadedRun load(const std::string& text) {
  std::istringstream in(text);
  return load_run(in);
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::string join(const std::vector<std::string>& lines) {
  std::string s;
  for (const auto& l : lines) s += l + "\n";
  return s;
}

}  // namespace

TEST_CASE("event json round-trip") {
  const RunEvent e{"r", "s", 3, EventKind::Refined, {{"x", 1}}, 9};
  const json j = event_to_json(e);
  CHECK(j["seq"] == 9);
  CHECK(j["event"] == "Refined");
  CHECK(j["iter"] == 3);
  CHECK(event_from_json(j) == e);
  for (auto k : {EventKind::Generated, EventKind::Questioned, EventKind::Answered, EventKind::Refined,
                 EventKind::Rated, EventKind::Stopped, EventKind::Selected, EventKind::Error}) {
    CHECK(event_kind_from_string(to_string(k)) == k);
  }
  CHECK(kind_of([] { event_kind_from_string("Teleported"); }) == ErrorKind::ConfigError);
}

TEST_CASE("trajectory json round-trip") {
  const auto [t, text] = logged_run(GenerationConditions::text_to_video("a fox near a log with a kite"));
  const json j = t;
  CHECK(j.get<Trajectory>() == t);
  CHECK(j["ledger"]["total"] == t.ledger.total());
}

TEST_CASE("sequence numbers must be contiguous") {
  MemoryEventSink sink;
  sink.write({"r", "s", 0, EventKind::Generated, json::object(), 1});
  CHECK(kind_of([&] { sink.write({"r", "s", 0, EventKind::Rated, json::object(), 3}); }) ==
        ErrorKind::SequenceViolation);
  CHECK(kind_of([&] { sink.write({"r", "s", 0, EventKind::Rated, json::object(), 1}); }) ==
        ErrorKind::SequenceViolation);
  sink.write({"r", "s", 0, EventKind::Rated, json::object(), 2});
  CHECK(sink.lines().size() == 2);
}

TEST_CASE("replay rebuilds the exact trajectory") {
  SUBCASE("text to video") {
    const auto [t, text] = logged_run(GenerationConditions::text_to_video("a fox near a log with a kite"));
    const auto r = load(text);
    CHECK(r.complete);
    CHECK_FALSE(r.truncated_tail);
    CHECK(r.run_id == "test-run");
    CHECK(r.sample_id == "s0");
    CHECK(r.trajectory == t);
  }
  SUBCASE("image to video") {
    const auto [t, text] =
        logged_run(GenerationConditions::image_to_video("the fox jumps over the log", {"a.png", "b.png"}, 4));
    CHECK(load(text).trajectory == t);
  }
  SUBCASE("best of n") {
    const auto [t, text] =
        logged_run(GenerationConditions::text_to_video("a fox near a log"), test::config_with(3, 2), 3);
    const auto r = load(text);
    CHECK(r.trajectory == t);
    CHECK(r.trajectory.kind == TrajectoryKind::BestOfN);
  }
  SUBCASE("average QA") {
    RunConfig cfg = test::config_with(2, 5);
    cfg.selection_strategy = SelectionStrategy::AverageQA;
    const auto [t, text] = logged_run(GenerationConditions::text_to_video("a fox near a log"), cfg);
    CHECK(load(text).trajectory == t);
  }
}

TEST_CASE("empty input") {
  const auto r = load("");
  CHECK(r.empty);
  CHECK_FALSE(r.complete);
  CHECK(r.event_count == 0);
}

TEST_CASE("corrupt lines") {
  const auto [t, text] = logged_run(GenerationConditions::text_to_video("a fox near a log"));
  auto lines = lines_of(text);
  REQUIRE(lines.size() > 4);

  auto middle = lines;
  middle[2] = middle[2].substr(0, middle[2].size() / 2);
  try {
    load(join(middle));
    FAIL("expected CorruptLine");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::CorruptLine);
    CHECK(e.detail() == "3");
  }

  auto tail = lines;
  tail.back() = tail.back().substr(0, 10);
  const auto r = load(join(tail));
  CHECK(r.truncated_tail);
  CHECK_FALSE(r.complete);  // the cut line was the Selected event
  CHECK(r.trajectory.records == t.records);
}

TEST_CASE("gaps and mixed runs") {
  const auto [t, text] = logged_run(GenerationConditions::text_to_video("a fox near a log"));
  auto lines = lines_of(text);
  auto gap = lines;
  gap.erase(gap.begin() + 1);
  CHECK(kind_of([&] { load(join(gap)); }) == ErrorKind::SequenceViolation);

  auto mixed = lines;
  json j = json::parse(mixed[1]);
  j["run_id"] = "other";
  mixed[1] = j.dump();
  CHECK(kind_of([&] { load(join(mixed)); }) == ErrorKind::SequenceViolation);
}

TEST_CASE("partial run keeps completed records") {
  const auto [t, text] = logged_run(GenerationConditions::text_to_video("a fox near a log with a kite"));
  auto lines = lines_of(text);
  // Cut right after the second Generated event's iteration finishes.
  std::vector<std::string> head;
  for (const auto& l : lines) {
    head.push_back(l);
    const json j = json::parse(l);
    if (j["event"] == "Refined" && j["iter"] == 0) break;
  }
  const auto r = load(join(head));
  CHECK_FALSE(r.complete);
  REQUIRE(r.trajectory.records.size() == 1);
  CHECK(r.trajectory.records[0] == t.records[0]);
  CHECK_FALSE(r.trajectory.stop_reason.has_value());
}

TEST_CASE("error events are surfaced") {
  MemoryEventSink sink;
  RunLogger log(sink, "r", "s");
  auto vlm = std::make_shared<ScriptedVlm>();
  vlm->push_all(RoleTag::GlobalRate, {"x", "x", "x", "x"});
  Optimizer opt({std::make_shared<sim::SimVideoGenerator>(), vlm}, test::config_with(3, 2));
  CHECK(kind_of([&] { opt.optimize(GenerationConditions::text_to_video("a fox"), &log); }) ==
        ErrorKind::UnparsableRating);
  const auto r = load(sink.text());
  REQUIRE(r.error.has_value());
  CHECK(r.error->find("rater") != std::string::npos);
  CHECK_FALSE(r.complete);
}

TEST_CASE("jsonl files") {
  TempDir dir;
  const fs::path p = run_log_path(dir.path, "run-7", "3");
  CHECK(p == dir.path / "run-7" / "3.jsonl");
  Trajectory t;
  {
    JsonlEventWriter w(p);
    RunLogger log(w, "run-7", "3");
    Optimizer opt(test::sim_backends(), test::config_with(2, 2, 0.0, 100, "run-7"));
    t = opt.optimize(GenerationConditions::text_to_video("a fox near a log", 3), &log);
  }
  CHECK(load_run_file(p).trajectory == t);
  // An existing log is never reopened.
  CHECK(kind_of([&] { JsonlEventWriter again(p); }) == ErrorKind::IoFailure);
  CHECK(kind_of([&] { load_run_file(dir.path / "missing.jsonl"); }) == ErrorKind::IoFailure);
}
