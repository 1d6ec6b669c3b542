#include "vqqa/config.hpp"

#include <fstream>
#include <set>

#include "vqqa/error.hpp"
#include "vqqa/serialization.hpp"
#include "vqqa/sim.hpp"

namespace vqqa {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, std::initializer_list<std::string_view> known, const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    if (key == "api_key") {
      throw Error(ErrorKind::ConfigError, "API keys are read from VQQA_API_KEY only, not from config files");
    }
    bool ok = false;
    for (auto k : known) ok = ok || key == k;
    if (!ok) throw Error(ErrorKind::ConfigError, "unknown config key '" + key + "'", where);
  }
}

}  // namespace

AppConfig config_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorKind::ConfigError, "config must be a JSON object");
  AppConfig cfg;
  try {
    reject_unknown(j,
                   {"stop_policy", "selection_strategy", "gs_in_the_loop", "rater_retry_budget", "run_id",
                    "highlight_below", "malformed_retries", "transport_retries", "out_dir", "backend"},
                   "top level");
    RunConfig& run = cfg.run;
    if (auto it = j.find("stop_policy"); it != j.end()) {
      reject_unknown(*it, {"gamma", "patience", "epsilon", "max_rounds"}, "stop_policy");
      run.stop_policy = it->get<StopPolicy>();
    }
    if (auto it = j.find("selection_strategy"); it != j.end()) {
      run.selection_strategy = selection_strategy_from_string(it->get<std::string>());
    }
    run.gs_in_the_loop = j.value("gs_in_the_loop", run.gs_in_the_loop);
    run.rater_retry_budget = j.value("rater_retry_budget", run.rater_retry_budget);
    run.run_id = j.value("run_id", run.run_id);
    if (auto it = j.find("highlight_below"); it != j.end() && !it->is_null()) run.highlight_below = it->get<int>();
    run.malformed_retries = j.value("malformed_retries", run.malformed_retries);
    run.transport_retries = j.value("transport_retries", run.transport_retries);
    cfg.out_dir = j.value("out_dir", cfg.out_dir);

    if (auto it = j.find("backend"); it != j.end()) {
      const json& b = *it;
      reject_unknown(b, {"kind", "api_base", "model", "video_model", "timeout_s", "blocked_terms", "latency_us"},
                     "backend");
      cfg.backend.kind = b.value("kind", cfg.backend.kind);
      cfg.backend.endpoint.base_url = b.value("api_base", std::string{});
      cfg.backend.endpoint.model = b.value("model", std::string{});
      cfg.backend.endpoint.timeout = std::chrono::seconds(b.value("timeout_s", 120));
      cfg.backend.video_model = b.value("video_model", std::string{});
      cfg.backend.blocked_terms = b.value("blocked_terms", std::vector<std::string>{});
      cfg.backend.latency_us = b.value("latency_us", 0);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ConfigError, std::string("bad config value: ") + e.what());
  }
  if (cfg.backend.kind != "sim" && cfg.backend.kind != "http") {
    throw Error(ErrorKind::ConfigError, "backend kind must be 'sim' or 'http'", cfg.backend.kind);
  }
  cfg.run.validate();
  return cfg;
}

AppConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ConfigError, "cannot read config file", path.string());
  const json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorKind::ConfigError, "config file is not valid JSON", path.string());
  return config_from_json(j);
}

json config_to_json(const AppConfig& c) {
  json j{{"stop_policy", c.run.stop_policy},
         {"selection_strategy", to_string(c.run.selection_strategy)},
         {"gs_in_the_loop", c.run.gs_in_the_loop},
         {"rater_retry_budget", c.run.rater_retry_budget},
         {"run_id", c.run.run_id},
         {"malformed_retries", c.run.malformed_retries},
         {"transport_retries", c.run.transport_retries},
         {"out_dir", c.out_dir},
         {"backend",
          {{"kind", c.backend.kind},
           {"api_base", c.backend.endpoint.base_url},
           {"model", c.backend.endpoint.model},
           {"video_model", c.backend.video_model},
           {"timeout_s", c.backend.endpoint.timeout.count()},
           {"blocked_terms", c.backend.blocked_terms},
           {"latency_us", c.backend.latency_us}}}};
  if (c.run.highlight_below) j["highlight_below"] = *c.run.highlight_below;
  return j;
}

Backends make_backends(const BackendConfig& config) {
  if (config.kind == "sim") {
    std::set<std::string> blocked(config.blocked_terms.begin(), config.blocked_terms.end());
    return {std::make_shared<sim::SimVideoGenerator>(std::move(blocked)),
            std::make_shared<sim::SimVlm>(sim::SimVlmOptions{std::chrono::microseconds(config.latency_us)})};
  }
  if (config.kind == "http") {
    const HttpEndpoint ep = endpoint_from_env(config.endpoint);
    HttpEndpoint video_ep = ep;
    if (!config.video_model.empty()) video_ep.model = config.video_model;
    return {std::make_shared<HttpVideoGenerator>(video_ep), std::make_shared<HttpVlmClient>(ep)};
  }
  throw Error(ErrorKind::ConfigError, "unknown backend kind", config.kind);
}

}  // namespace vqqa
