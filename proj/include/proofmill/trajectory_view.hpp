#pragma once

#include <optional>
#include <string>
#include <vector>

#include "proofmill/core.hpp"
#include "proofmill/leancheck.hpp"

namespace proofmill::core {

// Structured replay of a trajectory's event log. Extraction and reporting
// consume runs only through this view, which keeps them pure functions of
// the persisted events.

struct RetrievalView {
  std::vector<std::string> queries;
  std::vector<Premise> selected;
  std::vector<Premise> unselected;
  int search_events = 0;
};

struct CandidateView {
  int index = 0;
  std::string compiled_source;  // after a successful syntax fix, the fix
  bool compiled = false;
  bool semantic_checked = false;
  bool semantic_pass = false;
  std::string final_source;  // after a compile-gated semantic correction
};

struct RefinementView {
  Phase phase = Phase::Refinement;
  std::string target;
  std::string original;
  std::vector<leancheck::Diagnostic> diagnostics;
  std::string fixed;
  bool ok = false;
};

struct SubgoalView {
  int index = 0;
  std::string source;
  SubgoalStatus status = SubgoalStatus::pending;
  std::optional<std::string> proof;
};

struct ProofView {
  enum class Via { expert, refinement, assembly };
  std::string source;
  Via via = Via::expert;
};

struct TrajectoryView {
  std::string problem_id;
  std::optional<Outcome> outcome;
  Phase final_phase = Phase::Normalization;

  std::optional<std::string> normalized;
  std::optional<RetrievalView> definition_retrieval;
  std::optional<RetrievalView> theorem_retrieval;
  std::vector<CandidateView> candidates;
  std::optional<int> selected_index;
  std::optional<std::string> selected_source;
  std::vector<RefinementView> refinements;
  std::optional<std::string> informal_proof_main;
  std::optional<std::string> sketch_source;  // last compiling sketch
  int sketch_attempts = 0;
  bool sketch_compiled = false;
  std::vector<SubgoalView> subgoals;
  int subgoals_dropped = 0;
  std::optional<std::string> assembled_source;
  bool assembly_ok = false;
  std::optional<ProofView> final_proof;

  static TrajectoryView from(const Trajectory& t);

  bool any_candidate_compiled() const;
  bool successful() const;  // a Strict-verified final proof exists
};

}  // namespace proofmill::core
