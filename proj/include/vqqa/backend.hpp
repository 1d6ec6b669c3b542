#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vqqa/core.hpp"

namespace vqqa {

enum class RoleTag { QuestionGen, QA, Refine, GlobalRate, Judge };
std::string_view to_string(RoleTag role);

enum class MediaKind { Video, Image };

struct MediaHandle {
  MediaKind kind = MediaKind::Video;
  std::string uri;

  bool operator==(const MediaHandle&) const = default;
};

struct CompletionRequest {
  RoleTag role = RoleTag::QuestionGen;
  // Name of the template the prompt was rendered from ("qg_alignment", ...).
  std::string template_id;
  std::string prompt_text;
  // Sent in this order; backends must not reorder or add to them.
  std::vector<MediaHandle> attachments;
  double temperature = 0.0;
  int max_retries = 2;
  // Slot values used to render prompt_text. Network adapters ignore these;
  // offline responders read them instead of re-parsing the prompt.
  std::map<std::string, std::string> slots;

  // Throws TemperatureRejected unless temperature is exactly 0.0, and
  // PreconditionFailed on an empty prompt or negative retry budget.
  void validate() const;
};

// Multimodal completion capability. Implementations must be safe to share
// across threads; all per-call state stays local to complete().
class VlmClient {
 public:
  virtual ~VlmClient() = default;

  std::string complete(const CompletionRequest& request) {
    request.validate();
    return do_complete(request);
  }

 protected:
  virtual std::string do_complete(const CompletionRequest& request) = 0;
};

// Video generation capability, thread-safe like VlmClient.
class VideoGenerator {
 public:
  virtual ~VideoGenerator() = default;

  // Throws PreconditionFailed on an empty prompt or a seed outside
  // [0, 2^32 - 1]; SafetyRejected when the generator refuses the prompt.
  VideoArtifact generate(std::string_view prompt, const GenerationConditions& conditions,
                         std::optional<std::int64_t> seed);

  virtual std::string id() const = 0;
  // Seedless generators ignore the seed and record none.
  virtual bool accepts_seed() const { return true; }

 protected:
  virtual VideoArtifact do_generate(std::string_view prompt, const GenerationConditions& conditions,
                                    std::optional<std::uint32_t> seed) = 0;
};

// Test and replay double. Responses are served per role: first from the
// queued script, then from a per-role responder, then from the fallback
// client. Every request is recorded.
class ScriptedVlm : public VlmClient {
 public:
  using Responder = std::function<std::string(const CompletionRequest&)>;

  explicit ScriptedVlm(std::shared_ptr<VlmClient> fallback = nullptr);

  void push(RoleTag role, std::string response);
  void push_all(RoleTag role, const std::vector<std::string>& responses);
  void set_responder(RoleTag role, Responder responder);

  std::vector<CompletionRequest> requests() const;
  std::vector<CompletionRequest> requests_for(RoleTag role) const;
  void clear_requests();

 protected:
  std::string do_complete(const CompletionRequest& request) override;

 private:
  std::shared_ptr<VlmClient> fallback_;
  mutable std::mutex mu_;
  std::map<RoleTag, std::deque<std::string>> scripts_;
  std::map<RoleTag, Responder> responders_;
  std::vector<CompletionRequest> requests_;
};

}  // namespace vqqa
