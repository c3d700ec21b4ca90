#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "proofmill/core.hpp"
#include "proofmill/money.hpp"

namespace proofmill::gateway {

struct ChatRequest {
  core::CallKind role_kind = core::CallKind::general;
  std::string prompt;
  double temperature = 0.0;   // >= 0
  int max_attempts = 1;       // transport retries
  core::Phase phase = core::Phase::Normalization;  // mock-script routing
};

struct ChatResponse {
  std::string text;
  core::UsageRecord usage;
};

struct PriceEntry {
  std::string model_id;
  Money input_per_million;
  Money output_per_million;
};

// One backend serves one role. complete_once performs a single transport
// attempt; retry policy lives in the Gateway.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual std::string model_id() const = 0;
  virtual ChatResponse complete_once(const ChatRequest& request) = 0;
};

// ----------------------------------------------------------------------
// Scripted mock backend
// ----------------------------------------------------------------------

struct MockRule {
  std::optional<core::Phase> phase;  // absent = any phase
  std::string contains;              // substring of the prompt; empty = any
  std::string response;
  long long prompt_tokens = -1;      // -1: deterministic length estimate
  long long completion_tokens = -1;
  bool sticky = false;               // reusable instead of consumed once
  bool fail_transport = false;       // raise TransportError when matched
};

// Deterministic: rules are consumed in order, so an identical request
// sequence always replays the identical response sequence.
class MockBackend : public ChatBackend {
 public:
  MockBackend(std::string model_id, std::vector<MockRule> rules);
  static std::vector<MockRule> rules_from_json(const nlohmann::ordered_json& doc);
  static std::vector<MockRule> load_rules_file(const std::filesystem::path& path);

  std::string model_id() const override { return model_id_; }
  ChatResponse complete_once(const ChatRequest& request) override;

  int rules_consumed() const;

 private:
  std::string model_id_;
  std::vector<MockRule> rules_;
  std::vector<bool> used_;
  int consumed_ = 0;
  mutable std::mutex mu_;  // script consumption is serialized
};

// ----------------------------------------------------------------------
// Live HTTP backend
// ----------------------------------------------------------------------

struct HttpBackendConfig {
  std::string endpoint;   // e.g. https://host/v1/chat/completions
  std::string model_id;
  std::string api_key;
  long long timeout_s = 120;
};

// Plain chat-completion wire format: {model, messages, temperature} in,
// {choices[0].message.content, usage} out. No provider-specific behavior.
class HttpChatBackend : public ChatBackend {
 public:
  explicit HttpChatBackend(HttpBackendConfig config);
  std::string model_id() const override { return config_.model_id; }
  ChatResponse complete_once(const ChatRequest& request) override;

 private:
  HttpBackendConfig config_;
};

// ----------------------------------------------------------------------
// Gateway
// ----------------------------------------------------------------------

struct SampleResult {
  std::optional<ChatResponse> response;
  std::string error;  // per-slot error marker when response is absent

  bool ok() const { return response.has_value(); }
};

// Routes requests to the per-role backend, retries transport failures up
// to max_attempts, and appends one UsageRecord per invocation to the
// trajectory ledger — including failed invocations, which still count.
class Gateway {
 public:
  void set_backend(core::CallKind role, std::shared_ptr<ChatBackend> backend);
  ChatBackend* backend(core::CallKind role) const;

  ChatResponse complete(const ChatRequest& request,
                        core::TrajectoryBuilder& log);

  // Exactly n independent completions and exactly n usage records;
  // failures are returned as per-slot error markers.
  std::vector<SampleResult> sample_n(const ChatRequest& request, int n,
                                     core::TrajectoryBuilder& log);

 private:
  std::map<core::CallKind, std::shared_ptr<ChatBackend>> backends_;
};

// Deterministic stand-in when a mock rule does not script token counts.
long long estimate_tokens(const std::string& text);

// Sum of prompt_tokens * input rate + completion_tokens * output rate per
// million, in exact rational arithmetic. Throws UnknownModel.
Money accrue_cost(const std::vector<core::UsageRecord>& usage,
                  const std::vector<PriceEntry>& prices);

long long count_expert_calls(const std::vector<core::UsageRecord>& usage);
long long count_general_calls(const std::vector<core::UsageRecord>& usage);

}  // namespace proofmill::gateway
