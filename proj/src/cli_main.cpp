#include <iostream>

#include <CLI11.hpp>

#include "proofmill/cli.hpp"

namespace proofmill::cli {

namespace {

RunConfig load_config_or_default(const std::string& path) {
  if (path.empty()) return RunConfig{};
  return RunConfig::load(path);
}

}  // namespace

int run_main(int argc, char** argv) {
  CLI::App app{"formalization pipeline runner and dataset harvester"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("-c,--config", config_path, "config JSON file")
      ->envname("PROOFMILL_CONFIG");

  // run
  auto* run = app.add_subcommand("run", "run problems through the pipeline");
  std::string run_mode, run_problems, run_store;
  int run_width = 0;
  run->add_option("--mode", run_mode, "agentic|baseline (overrides config)");
  run->add_option("--problems", run_problems, "problems JSONL (overrides config)");
  run->add_option("--store", run_store, "trajectory store path (overrides config)");
  run->add_option("--width", run_width, "concurrent problems (overrides config)");

  // extract
  auto* extract = app.add_subcommand("extract", "emit the five datasets");
  std::string ex_store, ex_out;
  extract->add_option("--store", ex_store, "trajectory store path");
  extract->add_option("--out", ex_out, "output directory");

  // verify
  auto* verify = app.add_subcommand("verify", "ensemble semantic verification");
  std::string vf_store, vf_votes;
  verify->add_option("--store", vf_store, "trajectory store path");
  verify->add_option("--votes", vf_votes, "votes JSONL output path");

  // report
  auto* report = app.add_subcommand("report", "metrics and attribution report");
  std::string rp_store, rp_votes, rp_out;
  report->add_option("--store", rp_store, "trajectory store path");
  report->add_option("--votes", rp_votes, "votes JSONL path");
  report->add_option("--out", rp_out, "report output directory");

  // replay
  auto* replay = app.add_subcommand("replay", "print one trajectory");
  std::string rl_store, rl_problem;
  replay->add_option("--store", rl_store, "trajectory store path");
  replay->add_option("problem_id", rl_problem, "problem id")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    RunConfig config = load_config_or_default(config_path);

    if (run->parsed()) {
      if (!run_mode.empty()) {
        if (run_mode == "agentic")
          config.mode = pipeline::Mode::agentic;
        else if (run_mode == "baseline")
          config.mode = pipeline::Mode::baseline;
        else
          throw ConfigError("unknown mode: " + run_mode);
      }
      if (!run_problems.empty()) config.paths.problems = run_problems;
      if (!run_store.empty()) config.paths.store = run_store;
      if (run_width > 0) config.problem_width = run_width;
      return cmd_run(config);
    }
    auto pick = [](const std::string& flag,
                   const std::filesystem::path& fallback) {
      return flag.empty() ? fallback : std::filesystem::path(flag);
    };
    if (extract->parsed()) {
      std::filesystem::path store = pick(ex_store, config.paths.store);
      std::filesystem::path out = pick(ex_out, config.paths.datasets_dir);
      if (store.empty() || out.empty())
        throw ConfigError("extract requires --store and --out (or config paths)");
      return cmd_extract(store, out);
    }
    if (verify->parsed()) {
      std::filesystem::path store = pick(vf_store, config.paths.store);
      std::filesystem::path votes = pick(vf_votes, config.paths.votes);
      if (store.empty() || votes.empty())
        throw ConfigError("verify requires --store and --votes (or config paths)");
      return cmd_verify(config, store, votes);
    }
    if (report->parsed()) {
      std::filesystem::path store = pick(rp_store, config.paths.store);
      std::filesystem::path votes = pick(rp_votes, config.paths.votes);
      std::filesystem::path out = pick(rp_out, config.paths.reports_dir);
      if (store.empty() || out.empty())
        throw ConfigError("report requires --store and --out (or config paths)");
      return cmd_report(config, store, votes, out);
    }
    if (replay->parsed()) {
      std::filesystem::path store = pick(rl_store, config.paths.store);
      if (store.empty()) throw ConfigError("replay requires --store");
      return cmd_replay(store, rl_problem, std::cout);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace proofmill::cli
