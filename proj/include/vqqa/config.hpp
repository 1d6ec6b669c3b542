#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "vqqa/http_backend.hpp"
#include "vqqa/orchestrator.hpp"

namespace vqqa {

struct BackendConfig {
  std::string kind = "sim";  // "sim" or "http"
  // http: base URL and model may come from the file; the key only from the
  // environment.
  HttpEndpoint endpoint;
  std::string video_model;
  // sim only
  std::vector<std::string> blocked_terms;
  int latency_us = 0;
};

struct AppConfig {
  RunConfig run;
  BackendConfig backend;
  std::string out_dir = "runs";
};

// Mirrors RunConfig plus a "backend" block. Missing keys keep defaults;
// unknown keys, wrong types and any "api_key" field throw ConfigError.
AppConfig config_from_json(const nlohmann::json& j);
AppConfig load_config_file(const std::filesystem::path& path);
nlohmann::json config_to_json(const AppConfig& config);

// Instantiates the configured backends. For "http" the endpoint is completed
// from VQQA_API_* variables.
Backends make_backends(const BackendConfig& config);

}  // namespace vqqa
