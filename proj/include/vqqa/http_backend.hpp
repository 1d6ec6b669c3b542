#pragma once

#include <chrono>
#include <string>
#include <string_view>

#include "vqqa/backend.hpp"

namespace vqqa {

struct HttpEndpoint {
  std::string base_url;  // e.g. "https://api.example.com/v1"
  std::string api_key;   // sent as a bearer token when non-empty
  std::string model;
  std::chrono::seconds timeout{120};
  std::chrono::milliseconds initial_backoff{500};
};

// Reads VQQA_API_BASE, VQQA_API_KEY and VQQA_MODEL. Fields already set in
// `base` are kept unless the variable is present. Throws ConfigError if no
// base URL results.
HttpEndpoint endpoint_from_env(HttpEndpoint base = {});

// Media reference as sent on the wire: URLs pass through, local files are
// inlined as base64 data URIs. Throws IoFailure for unreadable files.
std::string media_reference(const MediaHandle& media);
std::string base64_encode(std::string_view bytes);

// OpenAI-compatible chat completions adapter. 429 and 503 responses are
// retried with exponential backoff up to request.max_retries; other failures
// map to BackendUnavailable.
class HttpVlmClient : public VlmClient {
 public:
  explicit HttpVlmClient(HttpEndpoint endpoint);
  static HttpVlmClient from_env();

  // The JSON body sent for `request`, exposed for contract tests.
  std::string request_body(const CompletionRequest& request) const;

 protected:
  std::string do_complete(const CompletionRequest& request) override;

 private:
  HttpEndpoint endpoint_;
};

// POST {base}/videos/generations. A refusal carrying a safety or content
// policy code maps to SafetyRejected.
class HttpVideoGenerator : public VideoGenerator {
 public:
  explicit HttpVideoGenerator(HttpEndpoint endpoint, int max_retries = 2);

  std::string id() const override { return "http:" + endpoint_.model; }

 protected:
  VideoArtifact do_generate(std::string_view prompt, const GenerationConditions& conditions,
                            std::optional<std::uint32_t> seed) override;

 private:
  HttpEndpoint endpoint_;
  int max_retries_;
};

}  // namespace vqqa
