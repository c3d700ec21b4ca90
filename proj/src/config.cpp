#include "proofmill/config.hpp"

#include <cstdlib>
#include <fstream>

namespace proofmill::cli {

using json = nlohmann::ordered_json;

std::string interpolate_env(const std::string& value) {
  std::string out;
  size_t pos = 0;
  while (pos < value.size()) {
    size_t open = value.find("${", pos);
    if (open == std::string::npos) {
      out.append(value, pos, value.size() - pos);
      break;
    }
    size_t close = value.find('}', open + 2);
    if (close == std::string::npos)
      throw ConfigError("unterminated ${ in config value: " + value);
    out.append(value, pos, open - pos);
    std::string name = value.substr(open + 2, close - open - 2);
    const char* env = std::getenv(name.c_str());
    if (!env)
      throw ConfigError("environment variable not set: " + name);
    out += env;
    pos = close + 1;
  }
  return out;
}

namespace {

json interpolate(const json& node) {
  if (node.is_string()) return interpolate_env(node.get<std::string>());
  if (node.is_object()) {
    json out = json::object();
    for (const auto& [k, v] : node.items()) out[k] = interpolate(v);
    return out;
  }
  if (node.is_array()) {
    json out = json::array();
    for (const auto& v : node) out.push_back(interpolate(v));
    return out;
  }
  return node;
}

Money money_field(const json& node) {
  if (node.is_string()) return Money::parse(node.get<std::string>());
  if (node.is_number()) return Money::parse(node.dump());
  throw ConfigError("price must be a decimal string or number");
}

BackendConfig backend_from_json(const json& j) {
  BackendConfig b;
  b.kind = j.value("kind", "mock");
  b.model_id = j.value("model_id", "");
  b.endpoint = j.value("endpoint", "");
  b.api_key = j.value("api_key", "");
  if (j.contains("temperature") && j["temperature"].is_number())
    b.temperature = j["temperature"].get<double>();
  b.gemini_style = j.value("gemini_style", false);
  b.max_attempts = j.value("max_attempts", 3);
  b.script = j.value("script", "");
  return b;
}

}  // namespace

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json doc = json::parse(in, nullptr, true, true);  // comments allowed
  return from_json(interpolate(doc));
}

RunConfig RunConfig::from_json(const json& doc) {
  RunConfig c;
  std::string mode = doc.value("mode", "agentic");
  if (mode == "agentic")
    c.mode = pipeline::Mode::agentic;
  else if (mode == "baseline")
    c.mode = pipeline::Mode::baseline;
  else
    throw ConfigError("mode must be agentic or baseline, got " + mode);
  c.seed = doc.value("seed", 0UL);
  c.problem_width = doc.value("problem_width", 1);

  if (doc.contains("backends")) {
    for (const auto& [role, body] : doc["backends"].items()) {
      c.backends[core::call_kind_from_name(role)] = backend_from_json(body);
    }
  }

  if (doc.contains("panel")) {
    const auto& p = doc["panel"];
    for (const auto& m : p.value("members", json::array())) {
      verification::PanelMember member;
      member.model_id = m.value("model_id", "");
      member.identity = m.value("identity", member.model_id);
      c.panel.members.push_back(std::move(member));
    }
    c.panel.exclude_generator = p.value("exclude_generator", true);
    c.panel.generator_identity = p.value("generator_identity", "");
    c.panel.scripts = p.value("scripts", "");
    c.panel.endpoint = p.value("endpoint", "");
    c.panel.api_key = p.value("api_key", "");
  }

  for (const auto& entry : doc.value("prices", json::array())) {
    gateway::PriceEntry e;
    e.model_id = entry.value("model_id", "");
    e.input_per_million = money_field(entry.at("input_per_million"));
    e.output_per_million = money_field(entry.at("output_per_million"));
    c.prices.push_back(std::move(e));
  }

  if (doc.contains("budgets")) {
    const auto& b = doc["budgets"];
    c.budgets.k_query = b.value("k_query", 5);
    c.budgets.k_formalizer = b.value("k_formalizer", 4);
    c.budgets.k_prover = b.value("k_prover", 4);
    c.budgets.k_refine = b.value("k_refine", 2);
    c.budgets.fix_chances_default = b.value("fix_chances_default", 1);
    c.budgets.top_k = b.value("top_k", 5);
    c.budgets.max_parallel_subgoals = b.value("max_parallel_subgoals", 1);
  }

  if (doc.contains("checker")) {
    const auto& k = doc["checker"];
    c.checker.kind = k.value("kind", "mock");
    c.checker.rules = k.value("rules", "");
    for (const auto& arg : k.value("command", json::array()))
      c.checker.command.push_back(arg.get<std::string>());
    c.checker.project_dir = k.value("project_dir", "");
    c.checker.timeout_s = k.value("timeout_s", 300LL);
    c.checker.max_parallel_checks = k.value("max_parallel_checks", 4);
  }

  if (doc.contains("retrieval")) {
    const auto& r = doc["retrieval"];
    c.retrieval.kind = r.value("kind", "mock");
    c.retrieval.index_path = r.value("index_path", "");
    c.retrieval.endpoint = r.value("endpoint", "");
    c.retrieval.api_key = r.value("api_key", "");
  }

  if (doc.contains("paths")) {
    const auto& p = doc["paths"];
    c.paths.problems = p.value("problems", "");
    c.paths.store = p.value("store", "");
    c.paths.datasets_dir = p.value("datasets_dir", "");
    c.paths.reports_dir = p.value("reports_dir", "");
    c.paths.votes = p.value("votes", "");
    c.paths.templates_dir = p.value("templates_dir", "");
    c.paths.tag_table = p.value("tag_table", "");
  }
  return c;
}

void RunConfig::validate() const {
  auto priced = [&](const std::string& model_id) {
    for (const auto& p : prices)
      if (p.model_id == model_id) return true;
    return false;
  };

  if (budgets.k_query < 1 || budgets.k_formalizer < 1 || budgets.k_prover < 1 ||
      budgets.k_refine < 1 || budgets.fix_chances_default < 1 ||
      budgets.top_k < 1 || budgets.max_parallel_subgoals < 1)
    throw ConfigError("every budget must be >= 1");

  for (const auto& [role, b] : backends) {
    if (b.temperature && *b.temperature < 0)
      throw ConfigError("temperature must be >= 0 for " +
                        std::string(core::call_kind_name(role)));
    if (b.model_id.empty())
      throw ConfigError("backend for " + std::string(core::call_kind_name(role)) +
                        " has no model_id");
    if (!priced(b.model_id))
      throw ConfigError("no price entry for backend model " + b.model_id);
    if (b.kind == "mock" && !b.script.empty() &&
        !std::filesystem::exists(b.script))
      throw ConfigError("mock script not found: " + b.script.string());
    if (b.kind == "http" && b.endpoint.empty())
      throw ConfigError("http backend for " +
                        std::string(core::call_kind_name(role)) +
                        " has no endpoint");
  }
  for (const auto& m : panel.members)
    if (!priced(m.model_id))
      throw ConfigError("no price entry for panel model " + m.model_id);

  if (!paths.problems.empty() && !std::filesystem::exists(paths.problems))
    throw ConfigError("problems file not found: " + paths.problems.string());
  if (!paths.templates_dir.empty() &&
      !std::filesystem::is_directory(paths.templates_dir))
    throw ConfigError("templates dir not found: " +
                      paths.templates_dir.string());
  if (checker.kind == "mock" && !checker.rules.empty() &&
      !std::filesystem::exists(checker.rules))
    throw ConfigError("checker rules not found: " + checker.rules.string());
  if (checker.kind == "lean" && checker.command.empty())
    throw ConfigError("lean checker requires a command");
  if (retrieval.kind == "mock" && !retrieval.index_path.empty() &&
      !std::filesystem::exists(retrieval.index_path))
    throw ConfigError("premise index not found: " +
                      retrieval.index_path.string());
}

const BackendConfig& RunConfig::backend(core::CallKind role) const {
  auto it = backends.find(role);
  if (it == backends.end())
    throw ConfigError("no backend configured for role " +
                      std::string(core::call_kind_name(role)));
  return it->second;
}

}  // namespace proofmill::cli
