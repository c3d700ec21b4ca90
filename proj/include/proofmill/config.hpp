#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "proofmill/core.hpp"
#include "proofmill/gateway.hpp"
#include "proofmill/pipeline.hpp"
#include "proofmill/verification.hpp"

namespace proofmill::cli {

struct BackendConfig {
  std::string kind = "mock";  // mock | http
  std::string model_id;
  std::string endpoint;
  std::string api_key;
  std::optional<double> temperature;  // absent: role default by gemini_style
  bool gemini_style = false;          // gemini-style backends default to 1.0
  int max_attempts = 3;
  std::filesystem::path script;  // mock rule file

  double effective_temperature() const {
    if (temperature) return *temperature;
    return gemini_style ? 1.0 : 0.0;
  }
};

struct PanelConfig {
  std::vector<verification::PanelMember> members;
  bool exclude_generator = true;
  std::string generator_identity;
  std::filesystem::path scripts;  // mock judge rules keyed by model_id
  std::string endpoint;           // live judges: shared chat endpoint
  std::string api_key;
};

struct CheckerConfig {
  std::string kind = "mock";  // mock | lean
  std::filesystem::path rules;
  std::vector<std::string> command;
  std::filesystem::path project_dir;
  long long timeout_s = 300;
  int max_parallel_checks = 4;
};

struct RetrievalConfig {
  std::string kind = "mock";  // mock | http
  std::filesystem::path index_path;
  std::string endpoint;
  std::string api_key;
};

struct PathsConfig {
  std::filesystem::path problems;
  std::filesystem::path store;
  std::filesystem::path datasets_dir;
  std::filesystem::path reports_dir;
  std::filesystem::path votes;
  std::filesystem::path templates_dir;
  std::filesystem::path tag_table;  // optional tag -> macro-domain override
};

// One structured config file; ${VAR} interpolates from the environment so
// secrets stay out of the file.
struct RunConfig {
  pipeline::Mode mode = pipeline::Mode::agentic;
  unsigned long seed = 0;  // randomized tie-breaks, none by default
  std::map<core::CallKind, BackendConfig> backends;
  PanelConfig panel;
  std::vector<gateway::PriceEntry> prices;
  pipeline::Budgets budgets;
  CheckerConfig checker;
  RetrievalConfig retrieval;
  int problem_width = 1;
  PathsConfig paths;

  static RunConfig load(const std::filesystem::path& path);
  static RunConfig from_json(const nlohmann::ordered_json& doc);

  // Referenced paths must exist and every backend and panel model id must
  // be priced. Throws ConfigError.
  void validate() const;

  const BackendConfig& backend(core::CallKind role) const;
};

std::string interpolate_env(const std::string& value);

}  // namespace proofmill::cli
