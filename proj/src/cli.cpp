#include "proofmill/cli.hpp"

#include <atomic>
#include <fstream>
#include <iostream>
#include <set>
#include <thread>

#include "proofmill/extraction.hpp"
#include "proofmill/jsonl.hpp"
#include "proofmill/reporting.hpp"
#include "proofmill/trajectory_view.hpp"

#ifndef PROOFMILL_SOURCE_DIR
#define PROOFMILL_SOURCE_DIR "."
#endif

namespace proofmill::cli {

using json = nlohmann::ordered_json;

std::filesystem::path default_templates_dir() {
  return std::filesystem::path(PROOFMILL_SOURCE_DIR) / "templates";
}

namespace {

std::shared_ptr<gateway::ChatBackend> build_backend(const BackendConfig& b) {
  if (b.kind == "mock") {
    auto rules = b.script.empty()
                     ? std::vector<gateway::MockRule>{}
                     : gateway::MockBackend::load_rules_file(b.script);
    return std::make_shared<gateway::MockBackend>(b.model_id, std::move(rules));
  }
  if (b.kind == "http") {
    gateway::HttpBackendConfig http;
    http.endpoint = b.endpoint;
    http.model_id = b.model_id;
    http.api_key = b.api_key;
    return std::make_shared<gateway::HttpChatBackend>(http);
  }
  throw ConfigError("unknown backend kind: " + b.kind);
}

std::vector<core::Problem> load_problems(const std::filesystem::path& path) {
  std::vector<core::Problem> problems;
  for (const auto& row : jsonl::read_file(path)) {
    try {
      problems.push_back(core::validate_problem(row));
    } catch (const Error& e) {
      std::cerr << "skipping invalid problem record: " << e.what() << "\n";
    }
  }
  return problems;
}

std::vector<verification::VoteRecord> load_votes(
    const std::filesystem::path& path) {
  std::vector<verification::VoteRecord> votes;
  if (path.empty() || !std::filesystem::exists(path)) return votes;
  for (const auto& row : jsonl::read_file(path))
    votes.push_back(verification::vote_record_from_json(row));
  return votes;
}

}  // namespace

Engine build_engine(const RunConfig& config) {
  Engine engine;
  for (const auto& [role, backend] : config.backends) {
    engine.gw.set_backend(role, build_backend(backend));
    engine.roles[role] = pipeline::RoleParams{backend.effective_temperature(),
                                              backend.max_attempts};
  }

  if (config.checker.kind == "mock") {
    engine.checker = config.checker.rules.empty()
                         ? std::make_unique<leancheck::MockChecker>()
                         : std::make_unique<leancheck::MockChecker>(
                               leancheck::MockChecker::load_json(
                                   config.checker.rules));
  } else if (config.checker.kind == "lean") {
    leancheck::ToolchainConfig tc;
    tc.command = config.checker.command;
    tc.project_dir = config.checker.project_dir;
    tc.timeout_s = config.checker.timeout_s;
    tc.max_parallel_checks = config.checker.max_parallel_checks;
    engine.checker = std::make_unique<leancheck::ToolchainChecker>(tc);
  } else {
    throw ConfigError("unknown checker kind: " + config.checker.kind);
  }

  if (config.retrieval.kind == "mock") {
    engine.index = config.retrieval.index_path.empty()
                       ? std::make_unique<retrieval::MockIndex>(
                             std::vector<core::Premise>{})
                       : std::make_unique<retrieval::MockIndex>(
                             retrieval::MockIndex::load_jsonl(
                                 config.retrieval.index_path));
  } else if (config.retrieval.kind == "http") {
    retrieval::HttpIndexConfig hc;
    hc.endpoint = config.retrieval.endpoint;
    hc.api_key = config.retrieval.api_key;
    engine.index = std::make_unique<retrieval::HttpIndex>(hc);
  } else {
    throw ConfigError("unknown retrieval kind: " + config.retrieval.kind);
  }

  auto dir = config.paths.templates_dir.empty() ? default_templates_dir()
                                                : config.paths.templates_dir;
  engine.prompt_lib = prompts::PromptLibrary::load_dir(dir);
  return engine;
}

CompactResult compact_store(const std::filesystem::path& path) {
  CompactResult result;
  if (!std::filesystem::exists(path) ||
      std::filesystem::file_size(path) == 0)
    return result;

  auto store = core::TrajectoryStore::read(path);
  result.mode = store.mode;
  for (const auto& t : store.trajectories)
    if (t.terminal()) result.terminal.insert(t.problem_id);

  // Rewrite keeping the original event order of finished trajectories.
  auto rows = jsonl::read_file(path);
  std::vector<json> kept;
  kept.push_back(rows.front());  // header
  for (size_t i = 1; i < rows.size(); ++i) {
    if (result.terminal.count(rows[i].value("problem_id", "")))
      kept.push_back(rows[i]);
  }
  jsonl::write_file(path, kept);
  return result;
}

int cmd_run(const RunConfig& config) {
  config.validate();
  if (config.paths.problems.empty())
    throw ConfigError("run requires paths.problems");
  if (config.paths.store.empty())
    throw ConfigError("run requires paths.store");

  Engine engine = build_engine(config);
  auto problems = load_problems(config.paths.problems);

  std::string mode_name =
      config.mode == pipeline::Mode::agentic ? "agentic" : "baseline";
  auto compacted = compact_store(config.paths.store);
  if (!compacted.mode.empty() && compacted.mode != mode_name)
    throw ConfigError("store " + config.paths.store.string() + " holds a " +
                      compacted.mode + " run; refusing to resume in " +
                      mode_name + " mode");
  const auto& done = compacted.terminal;
  core::TrajectoryStoreWriter writer(config.paths.store, mode_name);

  pipeline::Runner runner(engine.deps(), config.budgets, config.mode);

  std::atomic<size_t> next{0};
  std::atomic<long long> ran{0};
  auto worker = [&] {
    while (true) {
      size_t i = next.fetch_add(1);
      if (i >= problems.size()) return;
      if (done.count(problems[i].id)) continue;
      runner.run_problem(problems[i], &writer);
      ran.fetch_add(1);
    }
  };

  int width = std::max(1, config.problem_width);
  if (width == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < std::min<int>(width, problems.size()); ++t)
      pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  writer.flush();
  std::cout << "ran " << ran.load() << " problem(s), skipped "
            << done.size() << " already terminal\n";
  return 0;
}

int cmd_extract(const std::filesystem::path& store_path,
                const std::filesystem::path& out_dir) {
  auto store = core::TrajectoryStore::read(store_path);
  auto summary = extraction::export_datasets(store.trajectories, out_dir);
  auto line = [](const char* name, const extraction::ManifestCounts& c) {
    std::cout << name << ": " << c.from_successful + c.from_failed << " ("
              << c.from_successful << " from successful, " << c.from_failed
              << " from failed)\n";
  };
  line("statements", summary.statements);
  line("proofs", summary.proofs);
  line("premises", summary.premises);
  line("corrections", summary.corrections);
  line("sketches", summary.sketches);
  return 0;
}

int cmd_verify(const RunConfig& config,
               const std::filesystem::path& store_path,
               const std::filesystem::path& votes_out) {
  if (config.panel.members.empty())
    throw ConfigError("verify requires a panel");
  auto store = core::TrajectoryStore::read(store_path);
  // Baseline runs keep the full panel.
  bool exclude =
      store.mode == "baseline" ? false : config.panel.exclude_generator;

  std::map<std::string, core::Problem> problems;
  if (!config.paths.problems.empty())
    for (auto& p : load_problems(config.paths.problems))
      problems.emplace(p.id, std::move(p));

  // One backend per panel member.
  std::map<std::string, std::shared_ptr<gateway::ChatBackend>> judges;
  if (!config.panel.scripts.empty()) {
    std::ifstream in(config.panel.scripts);
    if (!in)
      throw ConfigError("cannot open panel scripts " +
                        config.panel.scripts.string());
    json doc = json::parse(in);
    for (const auto& m : config.panel.members) {
      auto rules = doc.contains(m.model_id)
                       ? gateway::MockBackend::rules_from_json(doc[m.model_id])
                       : std::vector<gateway::MockRule>{};
      judges[m.model_id] =
          std::make_shared<gateway::MockBackend>(m.model_id, std::move(rules));
    }
  } else {
    for (const auto& m : config.panel.members) {
      gateway::HttpBackendConfig http;
      http.endpoint = config.panel.endpoint;
      http.model_id = m.model_id;
      http.api_key = config.panel.api_key;
      judges[m.model_id] = std::make_shared<gateway::HttpChatBackend>(http);
    }
  }

  auto templates_dir = config.paths.templates_dir.empty()
                           ? default_templates_dir()
                           : config.paths.templates_dir;
  auto prompt_lib = prompts::PromptLibrary::load_dir(templates_dir);

  verification::VerifierPanel panel{config.panel.members};
  auto eligible = verification::effective_verifiers(
      panel, config.panel.generator_identity, exclude);

  std::vector<json> rows;
  for (const auto& t : store.trajectories) {
    auto view = core::TrajectoryView::from(t);
    if (!view.final_proof) continue;  // VR covers proved statements only
    auto pit = problems.find(t.problem_id);
    if (pit == problems.end()) {
      std::cerr << "no problem record for " << t.problem_id << ", skipping\n";
      continue;
    }
    std::string statement =
        view.selected_source.value_or(view.final_proof->source);

    verification::VoteRecord record;
    record.problem_id = t.problem_id;
    record.generator_identity = config.panel.generator_identity;
    core::TrajectoryBuilder scratch(t.problem_id);
    scratch.begin_phase(core::Phase::Verification);
    for (const auto& model_id : eligible)
      record.votes[model_id] = verification::judge(
          *judges[model_id], prompt_lib, pit->second, statement, scratch);
    rows.push_back(verification::vote_record_to_json(record));
  }
  jsonl::write_file(votes_out, rows);
  std::cout << "judged " << rows.size() << " proved problem(s) with "
            << eligible.size() << " effective verifier(s)\n";
  return 0;
}

int cmd_report(const RunConfig& config,
               const std::filesystem::path& store_path,
               const std::filesystem::path& votes_path,
               const std::filesystem::path& out_dir) {
  auto store = core::TrajectoryStore::read(store_path);
  auto votes = load_votes(votes_path);
  std::vector<core::Problem> problems;
  if (!config.paths.problems.empty())
    problems = load_problems(config.paths.problems);

  auto tags = config.paths.tag_table.empty()
                  ? reporting::default_tag_table()
                  : reporting::load_tag_table(config.paths.tag_table);
  auto report = reporting::build_report(problems, store.trajectories, votes,
                                        config.prices, tags);
  reporting::emit_report(report, out_dir);
  std::cout << reporting::render_report_text(report);
  return 0;
}

int cmd_replay(const std::filesystem::path& store_path,
               const std::string& problem_id, std::ostream& out) {
  auto store = core::TrajectoryStore::read(store_path);
  const core::Trajectory* t = store.find(problem_id);
  if (!t) throw UnknownProblem(problem_id);

  out << "problem " << t->problem_id << "\n";
  if (t->terminal())
    out << "outcome " << core::outcome_name(t->outcome()) << " at "
        << core::phase_name(t->final_phase()) << "\n";
  out << "\n";

  for (const auto& e : t->events) {
    out << "[" << e.seq << "] " << core::phase_name(e.phase) << "/" << e.kind;
    const auto& d = e.data;
    if (e.kind == core::event::kNormalized) {
      out << (d.value("fallback", false) ? " (fallback)" : "") << "\n  "
          << d.value("text", "") << "\n";
    } else if (e.kind == core::event::kQueries) {
      out << "\n";
      for (const auto& q : d.value("queries", json::array()))
        out << "  - " << q.get<std::string>() << "\n";
    } else if (e.kind == core::event::kSearch) {
      out << " \"" << d.value("query", "") << "\" -> "
          << d.value("hits", json::array()).size() << " hit(s)"
          << (d.value("failed", false) ? " [failed]" : "") << "\n";
    } else if (e.kind == core::event::kPremises) {
      out << " selected " << d.value("selected", json::array()).size()
          << ", unselected " << d.value("unselected", json::array()).size()
          << "\n";
    } else if (e.kind == core::event::kCandidate) {
      out << " #" << d.value("index", 0) << "\n  "
          << d.value("source", "") << "\n";
    } else if (e.kind == core::event::kCandidateCheck) {
      out << " #" << d.value("index", 0)
          << (d.value("ok", false) ? " ok" : " failed") << "\n";
    } else if (e.kind == core::event::kSemantic) {
      out << " #" << d.value("index", 0) << " " << d.value("verdict", "")
          << "\n";
    } else if (e.kind == core::event::kRefinement) {
      out << " target=" << d.value("target", "")
          << (d.value("ok", false) ? " ok" : " failed") << "\n";
      auto diags = leancheck::diagnostics_from_json(
          d.value("diagnostics", json::array()));
      out << leancheck::annotate_errors(d.value("original", ""), diags);
    } else if (e.kind == core::event::kProofAttempt) {
      out << " target=" << d.value("target", "") << " sample "
          << d.value("sample", 0)
          << (d.value("ok", false) ? " ok" : " failed") << "\n";
    } else if (e.kind == core::event::kSubgoalResult) {
      out << " #" << d.value("index", 0) << " " << d.value("status", "")
          << "\n";
    } else if (e.kind == core::event::kUsage) {
      out << " " << d.value("model_id", "") << " "
          << d.value("call_kind", "") << " " << d.value("prompt_tokens", 0LL)
          << "+" << d.value("completion_tokens", 0LL) << " tokens\n";
    } else if (e.kind == core::event::kNote) {
      out << " [" << d.value("context", "") << "] " << d.value("detail", "")
          << "\n";
    } else {
      out << "\n";
    }
  }

  auto usage = t->usage();
  out << "\nusage: " << usage.size() << " call(s), "
      << gateway::count_expert_calls(usage) << " expert, "
      << gateway::count_general_calls(usage) << " general\n";
  return 0;
}

}  // namespace proofmill::cli
