#include "proofmill/gateway.hpp"

#include <fstream>

#define CPPHTTPLIB_OPENSSL_SUPPORT_DISABLED
#include <httplib.h>

namespace proofmill::gateway {

// ----------------------------------------------------------------------
// Mock backend
// ----------------------------------------------------------------------

MockBackend::MockBackend(std::string model_id, std::vector<MockRule> rules)
    : model_id_(std::move(model_id)),
      rules_(std::move(rules)),
      used_(rules_.size(), false) {}

std::vector<MockRule> MockBackend::rules_from_json(
    const nlohmann::ordered_json& doc) {
  std::vector<MockRule> rules;
  for (const auto& item : doc) {
    MockRule r;
    if (item.contains("phase") && item["phase"].is_string()) {
      auto p = core::phase_from_name(item["phase"].get<std::string>());
      if (!p) throw Error("mock rule with unknown phase: " + item.dump());
      r.phase = *p;
    }
    r.contains = item.value("contains", "");
    r.response = item.value("response", "");
    r.prompt_tokens = item.value("prompt_tokens", -1LL);
    r.completion_tokens = item.value("completion_tokens", -1LL);
    r.sticky = item.value("sticky", false);
    r.fail_transport = item.value("fail_transport", false);
    rules.push_back(std::move(r));
  }
  return rules;
}

std::vector<MockRule> MockBackend::load_rules_file(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open mock script " + path.string());
  return rules_from_json(nlohmann::ordered_json::parse(in));
}

ChatResponse MockBackend::complete_once(const ChatRequest& request) {
  std::lock_guard<std::mutex> lock(mu_);
  for (size_t i = 0; i < rules_.size(); ++i) {
    if (used_[i]) continue;
    const MockRule& rule = rules_[i];
    if (rule.phase && *rule.phase != request.phase) continue;
    if (!rule.contains.empty() &&
        request.prompt.find(rule.contains) == std::string::npos)
      continue;
    if (!rule.sticky) used_[i] = true;
    ++consumed_;
    if (rule.fail_transport)
      throw TransportError("scripted transport failure (rule " +
                           std::to_string(i) + ")");
    ChatResponse resp;
    resp.text = rule.response;
    resp.usage.model_id = model_id_;
    resp.usage.call_kind = request.role_kind;
    resp.usage.prompt_tokens = rule.prompt_tokens >= 0
                                   ? rule.prompt_tokens
                                   : estimate_tokens(request.prompt);
    resp.usage.completion_tokens = rule.completion_tokens >= 0
                                       ? rule.completion_tokens
                                       : estimate_tokens(rule.response);
    return resp;
  }
  throw BackendUnavailable(
      "mock script has no rule for phase " +
      std::string(core::phase_name(request.phase)) + " (model " + model_id_ +
      ")");
}

int MockBackend::rules_consumed() const {
  std::lock_guard<std::mutex> lock(mu_);
  return consumed_;
}

// ----------------------------------------------------------------------
// HTTP backend
// ----------------------------------------------------------------------

HttpChatBackend::HttpChatBackend(HttpBackendConfig config)
    : config_(std::move(config)) {
  if (config_.endpoint.empty())
    throw ConfigError("http backend requires an endpoint");
}

ChatResponse HttpChatBackend::complete_once(const ChatRequest& request) {
  // Split endpoint into host part and path.
  std::string url = config_.endpoint;
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw ConfigError("endpoint must be an http(s) URL: " + url);
  auto path_start = url.find('/', scheme_end + 3);
  std::string host = path_start == std::string::npos
                         ? url
                         : url.substr(0, path_start);
  std::string path =
      path_start == std::string::npos ? "/" : url.substr(path_start);

  httplib::Client client(host);
  client.set_read_timeout(config_.timeout_s, 0);
  client.set_connection_timeout(config_.timeout_s, 0);
  httplib::Headers headers;
  if (!config_.api_key.empty())
    headers.emplace("Authorization", "Bearer " + config_.api_key);

  nlohmann::ordered_json body;
  body["model"] = config_.model_id;
  body["messages"] =
      nlohmann::ordered_json::array({{{"role", "user"}, {"content", request.prompt}}});
  body["temperature"] = request.temperature;

  auto res = client.Post(path, headers, body.dump(), "application/json");
  if (!res)
    throw TransportError("no response from " + config_.endpoint);
  if (res->status < 200 || res->status >= 300)
    throw TransportError("backend returned HTTP " +
                         std::to_string(res->status));

  auto doc = nlohmann::ordered_json::parse(res->body, nullptr, false);
  if (doc.is_discarded())
    throw TransportError("backend returned malformed JSON");

  ChatResponse resp;
  try {
    resp.text = doc.at("choices").at(0).at("message").at("content")
                    .get<std::string>();
  } catch (const std::exception&) {
    throw TransportError("backend response missing choices[0].message.content");
  }
  resp.usage.model_id = config_.model_id;
  resp.usage.call_kind = request.role_kind;
  if (doc.contains("usage")) {
    resp.usage.prompt_tokens = doc["usage"].value("prompt_tokens", 0LL);
    resp.usage.completion_tokens = doc["usage"].value("completion_tokens", 0LL);
  }
  return resp;
}

// ----------------------------------------------------------------------
// Gateway
// ----------------------------------------------------------------------

void Gateway::set_backend(core::CallKind role,
                          std::shared_ptr<ChatBackend> backend) {
  backends_[role] = std::move(backend);
}

ChatBackend* Gateway::backend(core::CallKind role) const {
  auto it = backends_.find(role);
  return it == backends_.end() ? nullptr : it->second.get();
}

ChatResponse Gateway::complete(const ChatRequest& request,
                               core::TrajectoryBuilder& log) {
  ChatBackend* be = backend(request.role_kind);
  if (!be)
    throw BackendUnavailable("no backend configured for role " +
                             std::string(core::call_kind_name(request.role_kind)));

  std::string last_error;
  int attempts = std::max(1, request.max_attempts);
  for (int attempt = 0; attempt < attempts; ++attempt) {
    try {
      ChatResponse resp = be->complete_once(request);
      log.usage(resp.usage);
      if (resp.text.empty()) throw EmptyCompletion();
      return resp;
    } catch (const TransportError& e) {
      last_error = e.what();
    }
  }
  // The invocation was made and is paid for even though transport failed.
  core::UsageRecord failed;
  failed.model_id = be->model_id();
  failed.call_kind = request.role_kind;
  log.usage(failed);
  throw TransportError(last_error.empty() ? "transport failed" : last_error);
}

std::vector<SampleResult> Gateway::sample_n(const ChatRequest& request, int n,
                                            core::TrajectoryBuilder& log) {
  if (n < 1) throw Error("sample_n requires n >= 1");
  std::vector<SampleResult> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    SampleResult slot;
    try {
      slot.response = complete(request, log);
    } catch (const Error& e) {
      slot.error = e.what();
    }
    out.push_back(std::move(slot));
  }
  return out;
}

long long estimate_tokens(const std::string& text) {
  return static_cast<long long>((text.size() + 3) / 4);
}

Money accrue_cost(const std::vector<core::UsageRecord>& usage,
                  const std::vector<PriceEntry>& prices) {
  Money total;
  for (const auto& record : usage) {
    const PriceEntry* entry = nullptr;
    for (const auto& p : prices)
      if (p.model_id == record.model_id) {
        entry = &p;
        break;
      }
    if (!entry) throw UnknownModel(record.model_id);
    total += (entry->input_per_million * record.prompt_tokens)
                 .divided_by(1000000);
    total += (entry->output_per_million * record.completion_tokens)
                 .divided_by(1000000);
  }
  return total;
}

long long count_expert_calls(const std::vector<core::UsageRecord>& usage) {
  long long n = 0;
  for (const auto& u : usage)
    if (core::is_expert(u.call_kind)) ++n;
  return n;
}

long long count_general_calls(const std::vector<core::UsageRecord>& usage) {
  long long n = 0;
  for (const auto& u : usage)
    if (!core::is_expert(u.call_kind)) ++n;
  return n;
}

}  // namespace proofmill::gateway
