#pragma once

#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "proofmill/errors.hpp"

namespace proofmill::core {

using json = nlohmann::ordered_json;

// ----------------------------------------------------------------------
// Enums
// ----------------------------------------------------------------------

enum class Source { DeepMath, DeepTheorem, Other };

std::string_view source_name(Source s);
Source source_from_name(std::string_view name);  // unknown -> Other

enum class CallKind { general, expert_formalizer, expert_prover };

std::string_view call_kind_name(CallKind k);
CallKind call_kind_from_name(std::string_view name);

inline bool is_expert(CallKind k) { return k != CallKind::general; }

// Workflow phases in execution order. An event sequence is valid when its
// phase indices are non-decreasing (stages may be skipped, never revisited).
enum class Phase {
  Normalization,
  DefinitionRetrieval,
  StatementSampling,
  SemanticCheck,
  Selection,
  ExpertProving,
  Refinement,
  TheoremRetrieval,
  InformalProof,
  Sketching,
  SubgoalSolving,
  Assembly,
  Verification,
};

constexpr int kPhaseCount = 13;

int phase_index(Phase p);
std::string_view phase_name(Phase p);
std::optional<Phase> phase_from_name(std::string_view name);

enum class Outcome { verified, proof_found_unverified, statement_only, failed };

std::string_view outcome_name(Outcome o);
Outcome outcome_from_name(std::string_view name);

enum class SubgoalStatus { pending, solved, failed, cancelled };

std::string_view subgoal_status_name(SubgoalStatus s);
SubgoalStatus subgoal_status_from_name(std::string_view name);

// ----------------------------------------------------------------------
// Domain types
// ----------------------------------------------------------------------

struct Problem {
  std::string id;
  Source source = Source::Other;
  std::string informal_statement;
  std::optional<std::string> answer;
  std::vector<std::string> domain_tags;
  std::optional<double> difficulty;  // source-native scale
};

// Validates one parsed input record. Defaults source to Other; rejects
// records missing id or statement.
Problem validate_problem(const json& record);

json problem_to_json(const Problem& p);

struct NormalizedStatement {
  std::string text;
};

struct Premise {
  enum class Kind { definition, theorem };
  std::string name;       // fully qualified constant name
  std::string signature;  // pretty-printed declaration type
  Kind kind = Kind::theorem;

  bool operator==(const Premise& o) const { return name == o.name; }
};

json premise_to_json(const Premise& p);
Premise premise_from_json(const json& j);

struct FormalStatement {
  std::string lean_source;  // theorem header ending in a `sorry` body
  bool compiled = false;
  std::optional<bool> aligned;
};

struct ProofArtifact {
  std::string lean_source;
  bool verified = false;
};

struct InformalProof {
  std::string text;
};

struct Sketch {
  std::string lean_source;
  bool compiled = false;
  int subgoal_count = 0;
};

struct Subgoal {
  int index = 0;
  std::string lemma_source;  // standalone statement with `sorry`
  SubgoalStatus status = SubgoalStatus::pending;
  std::optional<ProofArtifact> proof;
};

struct UsageRecord {
  std::string model_id;
  long long prompt_tokens = 0;
  long long completion_tokens = 0;
  CallKind call_kind = CallKind::general;
};

json usage_to_json(const UsageRecord& u);
UsageRecord usage_from_json(const json& j);

// ----------------------------------------------------------------------
// Trajectory event log
// ----------------------------------------------------------------------

// Event kinds. Payload schemas are fixed by the TrajectoryBuilder append
// helpers; extraction and reporting replay runs purely from these records.
namespace event {
inline constexpr const char* kNormalized = "normalized";
inline constexpr const char* kQueries = "queries";
inline constexpr const char* kSearch = "search";
inline constexpr const char* kPremises = "premises";
inline constexpr const char* kCandidate = "candidate";
inline constexpr const char* kCandidateCheck = "candidate_check";
inline constexpr const char* kCandidateFix = "candidate_fix";
inline constexpr const char* kSemantic = "semantic";
inline constexpr const char* kSelectedStatement = "selected_statement";
inline constexpr const char* kProofAttempt = "proof_attempt";
inline constexpr const char* kRefinement = "refinement";
inline constexpr const char* kInformalProof = "informal_proof";
inline constexpr const char* kSketch = "sketch";
inline constexpr const char* kSubgoal = "subgoal";
inline constexpr const char* kSubgoalResult = "subgoal_result";
inline constexpr const char* kAssembly = "assembly";
inline constexpr const char* kNote = "note";
inline constexpr const char* kUsage = "usage";
inline constexpr const char* kOutcome = "outcome";
}  // namespace event

struct TrajectoryEvent {
  int seq = 0;  // per-problem, assigned by the builder
  Phase phase = Phase::Normalization;
  std::string kind;
  json data;
};

json event_to_json(const std::string& problem_id, const TrajectoryEvent& e);
TrajectoryEvent event_from_json(const json& j);

// Append-only event log of one pipeline run. final_phase, outcome and the
// usage ledger are derived from the events so they cannot drift.
struct Trajectory {
  std::string problem_id;
  std::vector<TrajectoryEvent> events;

  Phase final_phase() const;
  Outcome outcome() const;  // throws Error when no terminal event exists
  bool terminal() const;
  std::vector<UsageRecord> usage() const;
};

// Appends with the phase-order check: the event's phase must not precede
// the trajectory's last phase. Throws PhaseOrderViolation.
void append_event(Trajectory& t, TrajectoryEvent e);

inline bool phase_transition_legal(Phase last, Phase next) {
  return phase_index(next) >= phase_index(last);
}

class EventSink {
 public:
  virtual ~EventSink() = default;
  virtual void append(const std::string& problem_id,
                      const TrajectoryEvent& e) = 0;
};

// Single writer per problem. Appends are serialized internally because
// subgoal workers log usage and results from pool threads.
class TrajectoryBuilder {
 public:
  explicit TrajectoryBuilder(std::string problem_id,
                             EventSink* sink = nullptr);

  const Trajectory& trajectory() const { return traj_; }
  Trajectory take() { return std::move(traj_); }

  // Sets the phase used for subsequent usage/note events. Must not move
  // backward. Emits no event by itself.
  void begin_phase(Phase p);
  Phase current_phase() const { return current_; }

  void normalized(const std::string& text, bool fallback);
  void queries(Phase phase, const std::vector<std::string>& queries);
  void search(Phase phase, const std::string& query,
              const std::vector<Premise>& hits, bool failed);
  void premises(Phase phase, const std::vector<Premise>& selected,
                const std::vector<Premise>& unselected);
  void candidate(int index, const std::string& source);
  void candidate_check(int index, bool ok, bool uses_sorry,
                       const json& diagnostics);
  void candidate_fix(int index, const std::string& original,
                     const std::string& fixed, bool ok);
  void semantic(int index, const std::string& verdict,
                const std::optional<std::string>& corrected,
                std::optional<bool> corrected_ok);
  void selected_statement(int index, const std::string& source, bool fallback);
  void proof_attempt(Phase phase, const std::string& target, int sample,
                     const std::string& source, bool ok);
  void refinement(Phase phase, const std::string& target,
                  const std::string& original, const json& diagnostics,
                  const std::string& fixed, bool ok);
  void informal_proof(Phase phase, const std::string& target,
                      const std::string& text);
  void sketch(const std::string& source, bool ok, int attempt);
  void subgoal(int index, const std::string& source, bool ok);
  void subgoal_result(int index, SubgoalStatus status,
                      const std::optional<std::string>& proof_source);
  void assembly(const std::string& source, bool ok, int attempt);
  void note(const std::string& context, const std::string& detail);
  void usage(const UsageRecord& u);
  void outcome(Outcome o);

 private:
  // absent phase = the current one, resolved under the lock
  void push(std::optional<Phase> phase, const char* kind, json data);

  mutable std::mutex mu_;
  Trajectory traj_;
  Phase current_ = Phase::Normalization;
  EventSink* sink_ = nullptr;
};

// Subgoal proof-attempt targets are encoded as "subgoal:<index>"; the main
// theorem is "main".
std::string subgoal_target(int index);
std::optional<int> parse_subgoal_target(std::string_view target);

}  // namespace proofmill::core
