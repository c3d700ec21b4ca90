#pragma once

#include <atomic>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "proofmill/core.hpp"
#include "proofmill/gateway.hpp"
#include "proofmill/leancheck.hpp"
#include "proofmill/prompts.hpp"
#include "proofmill/retrieval.hpp"

namespace proofmill::pipeline {

struct Budgets {
  int k_query = 5;
  int k_formalizer = 4;
  int k_prover = 4;
  int k_refine = 2;
  int fix_chances_default = 1;
  int top_k = 5;
  int max_parallel_subgoals = 1;
};

enum class Mode { agentic, baseline };

struct StageResult {
  core::Phase phase = core::Phase::ExpertProving;
  bool success = false;
  int attempts_used = 0;
};

struct TaggedOutput {
  std::string raw;
  std::map<std::string, std::string> extracted;
};

// ----------------------------------------------------------------------
// Output-contract parsing
// ----------------------------------------------------------------------

// Inner text of the first <tag>...</tag> pair, trimmed. Supported tags:
// normalized, verdict, fixed_formal_statement, selected, analysis.
// verdict must be exactly ALIGNED or NOT_ALIGNED; selected must be a
// positive integer; fixed_formal_statement strips an inner lean fence.
std::string parse_tagged(const std::string& output, std::string_view tag);

// Extracts every supported tag that parses cleanly; missing or invalid
// tags are simply absent from the map.
TaggedOutput collect_tags(const std::string& output);

// Content of the last ```lean4 (or ```lean) fenced block; with no fences
// the whole output, trimmed.
std::string extract_lean_block(const std::string& output);
std::vector<std::string> extract_all_lean_blocks(const std::string& output);

// Whitespace-insensitive form used to deduplicate sampled candidates.
std::string normalize_source(const std::string& source);

std::string trim(const std::string& s);

// ----------------------------------------------------------------------
// Runner
// ----------------------------------------------------------------------

struct RoleParams {
  double temperature = 0.0;
  int max_attempts = 1;
};

// Drives one problem through the statement-formalization and
// proof-generation machines (or the non-agentic baseline), logging every
// step into the trajectory so extraction can replay it afterwards.
class Runner {
 public:
  struct Deps {
    gateway::Gateway& gw;
    leancheck::Checker& checker;
    retrieval::PremiseIndex& index;
    const prompts::PromptLibrary& prompts;
    std::map<core::CallKind, RoleParams> roles;
  };

  Runner(Deps deps, Budgets budgets, Mode mode);

  core::Trajectory run_problem(const core::Problem& problem,
                               core::EventSink* sink = nullptr);

  // -- stage operations (public so tests can drive them directly) --

  core::NormalizedStatement normalize_statement(const core::Problem& problem,
                                                core::TrajectoryBuilder& log);

  retrieval::RetrievalOutcome retrieve(const std::string& statement_text,
                                       core::Phase phase,
                                       core::TrajectoryBuilder& log);

  struct Candidate {
    int index = 0;
    std::string source;
    bool compiled = false;
  };

  // Samples k_formalizer candidates, dedupes, syntax-checks, and when all
  // fail gives each one general-model fix chance. Throws
  // AllCandidatesFailed when nothing compiles.
  std::vector<Candidate> formalize_statement(
      const core::NormalizedStatement& normalized,
      const std::vector<core::Premise>& premises,
      core::TrajectoryBuilder& log);

  // LLM-as-judge alignment check with one compile-gated correction.
  // Returns the surviving (possibly corrected) candidate or nullopt.
  std::optional<Candidate> semantic_check(
      const core::Problem& problem, const core::NormalizedStatement& normalized,
      const Candidate& candidate, const std::vector<core::Premise>& premises,
      core::TrajectoryBuilder& log);

  // Single candidates skip the model call. Out-of-range or unparseable
  // selections fall back to the first candidate, logged.
  core::FormalStatement select_best(const core::NormalizedStatement& normalized,
                                    const std::vector<Candidate>& aligned,
                                    core::TrajectoryBuilder& log);

  struct ProveResult {
    std::optional<core::ProofArtifact> proof;
    int attempts_used = 0;
    bool via_refinement = false;

    StageResult stage() const {
      return {via_refinement ? core::Phase::Refinement
                             : core::Phase::ExpertProving,
              proof.has_value(), attempts_used};
    }
  };

  // pass@k_prover expert sampling; when every sample fails, one refinement
  // round per textually distinct failure, stopping at the first success.
  ProveResult expert_prove(const core::FormalStatement& statement,
                           core::TrajectoryBuilder& log);

  // Stateless repair: the prompt is a pure function of (source, report
  // diagnostics), no interaction history. Records a correction-pair event
  // on success.
  std::optional<core::ProofArtifact> refine_proof(
      const std::string& source, const leancheck::CheckReport& report,
      core::Phase phase, const std::string& target,
      core::TrajectoryBuilder& log);

  std::string refine_prompt(const std::string& source,
                            const std::vector<leancheck::Diagnostic>& diagnostics)
      const;

  struct SketchBundle {
    core::InformalProof informal;
    core::Sketch sketch;
    retrieval::RetrievalOutcome premises;  // theorem-retrieval round
  };

  // Theorem retrieval (fresh queries from the formal statement), informal
  // proof, then the sketch with one fix chance.
  std::optional<SketchBundle> generate_sketch(
      const core::FormalStatement& statement, core::TrajectoryBuilder& log);

  // One model call lifts each `have` into a standalone lemma; lemmas that
  // do not compile standalone are dropped with a logged event.
  std::vector<core::Subgoal> extract_subgoals(const core::Sketch& sketch,
                                              core::TrajectoryBuilder& log);

  // Bounded-parallel solve with the early-stop policy: the first definitive
  // failure cancels every not-yet-terminal subgoal.
  void solve_subgoals(std::vector<core::Subgoal>& subgoals,
                      const std::vector<core::Premise>& premises,
                      core::TrajectoryBuilder& log);

  std::optional<core::ProofArtifact> assemble_proof(
      const core::Sketch& sketch, const std::vector<core::Subgoal>& solved,
      core::TrajectoryBuilder& log);

  const Budgets& budgets() const { return budgets_; }
  Mode mode() const { return mode_; }

 private:
  gateway::ChatRequest request(core::CallKind role, std::string prompt,
                               core::Phase phase) const;
  std::optional<std::string> try_complete(core::CallKind role,
                                          const std::string& prompt,
                                          core::Phase phase,
                                          core::TrajectoryBuilder& log,
                                          const char* context);

  void run_agentic(const core::Problem& problem, core::TrajectoryBuilder& log);
  void run_baseline(const core::Problem& problem, core::TrajectoryBuilder& log);

  core::SubgoalStatus solve_one(core::Subgoal& subgoal,
                                const std::vector<core::Premise>& premises,
                                std::atomic<bool>& stop,
                                core::TrajectoryBuilder& log);

  Deps deps_;
  Budgets budgets_;
  Mode mode_;
};

}  // namespace proofmill::pipeline
