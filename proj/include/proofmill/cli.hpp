#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <set>

#include "proofmill/config.hpp"
#include "proofmill/leancheck.hpp"
#include "proofmill/pipeline.hpp"
#include "proofmill/prompts.hpp"
#include "proofmill/retrieval.hpp"
#include "proofmill/store.hpp"

namespace proofmill::cli {

// Backends and shared services assembled from a validated config. Owns
// everything a Runner borrows, so keep it alive for the run's duration.
struct Engine {
  gateway::Gateway gw;
  std::unique_ptr<leancheck::Checker> checker;
  std::unique_ptr<retrieval::PremiseIndex> index;
  prompts::PromptLibrary prompt_lib;
  std::map<core::CallKind, pipeline::RoleParams> roles;

  pipeline::Runner::Deps deps() {
    return {gw, *checker, *index, prompt_lib, roles};
  }
};

Engine build_engine(const RunConfig& config);

std::filesystem::path default_templates_dir();

// Drops non-terminal trajectories from an interrupted store so a resumed
// run re-executes them from scratch.
struct CompactResult {
  std::set<std::string> terminal;
  std::string mode;  // empty when the store did not exist
};
CompactResult compact_store(const std::filesystem::path& path);

int cmd_run(const RunConfig& config);
int cmd_extract(const std::filesystem::path& store_path,
                const std::filesystem::path& out_dir);
int cmd_verify(const RunConfig& config,
               const std::filesystem::path& store_path,
               const std::filesystem::path& votes_out);
int cmd_report(const RunConfig& config,
               const std::filesystem::path& store_path,
               const std::filesystem::path& votes_path,
               const std::filesystem::path& out_dir);
int cmd_replay(const std::filesystem::path& store_path,
               const std::string& problem_id, std::ostream& out);

// All subcommands behind one entry point; maps ConfigError to exit 1 and
// IoError/store problems to exit 2.
int run_main(int argc, char** argv);

}  // namespace proofmill::cli
