#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "vqqa/http_backend.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>
#include <openssl/evp.h>
#include <spdlog/spdlog.h>

#include "vqqa/error.hpp"

namespace vqqa {

using nlohmann::json;

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path without trailing slash
};

SplitUrl split_url(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) throw Error(ErrorKind::ConfigError, "base URL needs a scheme", url);
  const auto slash = url.find('/', scheme + 3);
  SplitUrl out{url.substr(0, slash), slash == std::string::npos ? "" : url.substr(slash)};
  while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
  return out;
}

std::string mime_for(const std::filesystem::path& p, MediaKind kind) {
  std::string ext = p.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (ext == ".png") return "image/png";
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  if (ext == ".webp") return "image/webp";
  if (ext == ".gif") return "image/gif";
  if (ext == ".mp4") return "video/mp4";
  if (ext == ".webm") return "video/webm";
  if (ext == ".mov") return "video/quicktime";
  return kind == MediaKind::Image ? "image/png" : "video/mp4";
}

struct HttpReply {
  int status = 0;
  std::string body;
};

// Retries 429/503 and transport failures with doubling backoff.
HttpReply post_json(const HttpEndpoint& ep, const std::string& path, const std::string& body, int max_retries) {
  const SplitUrl url = split_url(ep.base_url);
  auto delay = ep.initial_backoff;
  int attempts = 0;
  for (;;) {
    ++attempts;
    httplib::Client cli(url.origin);
    cli.set_connection_timeout(ep.timeout);
    cli.set_read_timeout(ep.timeout);
    cli.set_write_timeout(ep.timeout);
    httplib::Headers headers;
    if (!ep.api_key.empty()) headers.emplace("Authorization", "Bearer " + ep.api_key);
    auto res = cli.Post(url.prefix + path, headers, body, "application/json");

    const bool transport_failure = !res;
    const int status = res ? res->status : 0;
    const bool retryable = transport_failure || status == 429 || status == 503;
    if (!retryable) return {status, res->body};
    if (attempts > max_retries) {
      if (status == 429) {
        throw Error(ErrorKind::RateLimited, "rate limited after " + std::to_string(attempts) + " attempts", path)
            .with_attempts(attempts);
      }
      const std::string why = transport_failure ? httplib::to_string(res.error()) : "HTTP " + std::to_string(status);
      throw Error(ErrorKind::BackendUnavailable, why + " after " + std::to_string(attempts) + " attempts", path)
          .with_attempts(attempts);
    }
    spdlog::warn("{} on {}; retrying in {} ms", transport_failure ? "transport failure" : std::to_string(status), path,
                 delay.count());
    std::this_thread::sleep_for(delay);
    delay *= 2;
  }
}

bool mentions_safety(const json& j) {
  if (!j.is_object()) return false;
  const json* err = j.contains("error") ? &j["error"] : &j;
  for (const char* key : {"code", "type", "reason"}) {
    if (err->is_object() && err->contains(key) && (*err)[key].is_string()) {
      const auto& v = (*err)[key].get_ref<const std::string&>();
      if (v.find("safety") != std::string::npos || v.find("content_policy") != std::string::npos) return true;
    }
  }
  return false;
}

std::string message_text(const json& message) {
  const json& content = message.at("content");
  if (content.is_string()) return content.get<std::string>();
  std::string out;
  for (const auto& part : content) {
    if (part.value("type", "") == "text") out += part.value("text", "");
  }
  return out;
}

}  // namespace

HttpEndpoint endpoint_from_env(HttpEndpoint base) {
  if (const char* v = std::getenv("VQQA_API_BASE"); v && *v) base.base_url = v;
  if (const char* v = std::getenv("VQQA_API_KEY"); v && *v) base.api_key = v;
  if (const char* v = std::getenv("VQQA_MODEL"); v && *v) base.model = v;
  if (base.base_url.empty()) throw Error(ErrorKind::ConfigError, "no API base URL (set VQQA_API_BASE)");
  return base;
}

std::string base64_encode(std::string_view bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(bytes.data()), static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::string media_reference(const MediaHandle& media) {
  const std::string& uri = media.uri;
  if (uri.find("://") != std::string::npos || uri.starts_with("data:")) return uri;
  std::ifstream in(uri, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoFailure, "cannot read media file", uri);
  std::ostringstream ss;
  ss << in.rdbuf();
  return "data:" + mime_for(uri, media.kind) + ";base64," + base64_encode(ss.str());
}

HttpVlmClient::HttpVlmClient(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {
  split_url(endpoint_.base_url);
}

HttpVlmClient HttpVlmClient::from_env() { return HttpVlmClient(endpoint_from_env()); }

std::string HttpVlmClient::request_body(const CompletionRequest& request) const {
  json content = json::array();
  content.push_back({{"type", "text"}, {"text", request.prompt_text}});
  for (const auto& media : request.attachments) {
    if (media.kind == MediaKind::Image) {
      content.push_back({{"type", "image_url"}, {"image_url", {{"url", media_reference(media)}}}});
    } else {
      content.push_back({{"type", "video_url"}, {"video_url", {{"url", media_reference(media)}}}});
    }
  }
  json body{{"model", endpoint_.model},
            {"temperature", request.temperature},
            {"messages", json::array({{{"role", "user"}, {"content", content}}})}};
  return body.dump();
}

std::string HttpVlmClient::do_complete(const CompletionRequest& request) {
  const HttpReply reply = post_json(endpoint_, "/chat/completions", request_body(request), request.max_retries);
  if (reply.status < 200 || reply.status >= 300) {
    throw Error(ErrorKind::BackendUnavailable, "chat completion failed with HTTP " + std::to_string(reply.status),
                reply.body.substr(0, 200));
  }
  try {
    const json j = json::parse(reply.body);
    return message_text(j.at("choices").at(0).at("message"));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::BackendUnavailable, std::string("unexpected completion payload: ") + e.what());
  }
}

HttpVideoGenerator::HttpVideoGenerator(HttpEndpoint endpoint, int max_retries)
    : endpoint_(std::move(endpoint)), max_retries_(max_retries) {
  split_url(endpoint_.base_url);
}

VideoArtifact HttpVideoGenerator::do_generate(std::string_view prompt, const GenerationConditions& conditions,
                                              std::optional<std::uint32_t> seed) {
  json body{{"model", endpoint_.model}, {"prompt", std::string(prompt)}};
  if (seed) body["seed"] = *seed;
  if (conditions.is_i2v()) {
    json images = json::array();
    for (const auto& image : conditions.reference_images) images.push_back(media_reference({MediaKind::Image, image}));
    body["images"] = std::move(images);
  }
  const HttpReply reply = post_json(endpoint_, "/videos/generations", body.dump(), max_retries_);
  const json j = json::parse(reply.body, nullptr, false);
  if (reply.status < 200 || reply.status >= 300 || (j.is_object() && j.contains("error"))) {
    if (mentions_safety(j)) throw Error(ErrorKind::SafetyRejected, "generator refused the prompt");
    throw Error(ErrorKind::BackendUnavailable, "video generation failed with HTTP " + std::to_string(reply.status),
                reply.body.substr(0, 200));
  }
  std::string locator;
  if (j.is_object()) {
    if (j.contains("url") && j["url"].is_string()) {
      locator = j["url"].get<std::string>();
    } else if (j.contains("data") && j["data"].is_array() && !j["data"].empty()) {
      locator = j["data"][0].value("url", "");
    }
  }
  if (locator.empty()) throw Error(ErrorKind::BackendUnavailable, "video response carries no url");
  return VideoArtifact{locator, id(), seed, 0};
}

}  // namespace vqqa
