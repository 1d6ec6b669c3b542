#include "vqqa/backend.hpp"

#include <algorithm>
#include <cctype>
#include <limits>

#include "vqqa/error.hpp"

namespace vqqa {

std::string_view to_string(RoleTag role) {
  switch (role) {
    case RoleTag::QuestionGen: return "QuestionGen";
    case RoleTag::QA: return "QA";
    case RoleTag::Refine: return "Refine";
    case RoleTag::GlobalRate: return "GlobalRate";
    case RoleTag::Judge: return "Judge";
  }
  return "QuestionGen";
}

void CompletionRequest::validate() const {
  // Exact comparison on purpose: only a literal 0.0 is accepted.
  if (temperature != 0.0) {
    throw Error(ErrorKind::TemperatureRejected,
                "temperature must be 0.0, got " + std::to_string(temperature));
  }
  if (prompt_text.empty()) throw Error(ErrorKind::PreconditionFailed, "empty prompt text");
  if (max_retries < 0) throw Error(ErrorKind::PreconditionFailed, "negative retry budget");
}

VideoArtifact VideoGenerator::generate(std::string_view prompt, const GenerationConditions& conditions,
                                       std::optional<std::int64_t> seed) {
  if (std::all_of(prompt.begin(), prompt.end(), [](unsigned char c) { return std::isspace(c) != 0; })) {
    throw Error(ErrorKind::PreconditionFailed, "empty generation prompt");
  }
  std::optional<std::uint32_t> checked;
  if (seed) {
    if (*seed < 0 || *seed > static_cast<std::int64_t>(std::numeric_limits<std::uint32_t>::max())) {
      throw Error(ErrorKind::PreconditionFailed, "seed " + std::to_string(*seed) + " outside [0, 2^32 - 1]");
    }
    if (accepts_seed()) checked = static_cast<std::uint32_t>(*seed);
  }
  VideoArtifact video = do_generate(prompt, conditions, checked);
  if (video.locator.empty()) throw Error(ErrorKind::BackendUnavailable, "generator returned an empty locator");
  return video;
}

ScriptedVlm::ScriptedVlm(std::shared_ptr<VlmClient> fallback) : fallback_(std::move(fallback)) {}

void ScriptedVlm::push(RoleTag role, std::string response) {
  std::lock_guard lock(mu_);
  scripts_[role].push_back(std::move(response));
}

void ScriptedVlm::push_all(RoleTag role, const std::vector<std::string>& responses) {
  std::lock_guard lock(mu_);
  auto& q = scripts_[role];
  q.insert(q.end(), responses.begin(), responses.end());
}

void ScriptedVlm::set_responder(RoleTag role, Responder responder) {
  std::lock_guard lock(mu_);
  responders_[role] = std::move(responder);
}

std::vector<CompletionRequest> ScriptedVlm::requests() const {
  std::lock_guard lock(mu_);
  return requests_;
}

std::vector<CompletionRequest> ScriptedVlm::requests_for(RoleTag role) const {
  std::lock_guard lock(mu_);
  std::vector<CompletionRequest> out;
  std::copy_if(requests_.begin(), requests_.end(), std::back_inserter(out),
               [role](const CompletionRequest& r) { return r.role == role; });
  return out;
}

void ScriptedVlm::clear_requests() {
  std::lock_guard lock(mu_);
  requests_.clear();
}

std::string ScriptedVlm::do_complete(const CompletionRequest& request) {
  Responder responder;
  {
    std::lock_guard lock(mu_);
    requests_.push_back(request);
    auto& q = scripts_[request.role];
    if (!q.empty()) {
      std::string out = std::move(q.front());
      q.pop_front();
      return out;
    }
    if (auto it = responders_.find(request.role); it != responders_.end()) responder = it->second;
  }
  if (responder) return responder(request);
  if (fallback_) return fallback_->complete(request);
  throw Error(ErrorKind::BackendUnavailable, "no scripted response for role " + std::string(to_string(request.role)));
}

}  // namespace vqqa
