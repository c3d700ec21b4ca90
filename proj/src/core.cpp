#include "proofmill/core.hpp"

#include <algorithm>
#include <array>

namespace proofmill::core {

namespace {

constexpr std::array<std::string_view, 3> kSourceNames = {"DeepMath",
                                                          "DeepTheorem",
                                                          "Other"};

constexpr std::array<std::string_view, 3> kCallKindNames = {
    "general", "expert_formalizer", "expert_prover"};

constexpr std::array<std::string_view, kPhaseCount> kPhaseNames = {
    "Normalization",  "DefinitionRetrieval", "StatementSampling",
    "SemanticCheck",  "Selection",           "ExpertProving",
    "Refinement",     "TheoremRetrieval",    "InformalProof",
    "Sketching",      "SubgoalSolving",      "Assembly",
    "Verification"};

constexpr std::array<std::string_view, 4> kOutcomeNames = {
    "verified", "proof_found_unverified", "statement_only", "failed"};

constexpr std::array<std::string_view, 4> kSubgoalStatusNames = {
    "pending", "solved", "failed", "cancelled"};

}  // namespace

std::string_view source_name(Source s) {
  return kSourceNames[static_cast<int>(s)];
}

Source source_from_name(std::string_view name) {
  for (size_t i = 0; i < kSourceNames.size(); ++i)
    if (kSourceNames[i] == name) return static_cast<Source>(i);
  return Source::Other;
}

std::string_view call_kind_name(CallKind k) {
  return kCallKindNames[static_cast<int>(k)];
}

CallKind call_kind_from_name(std::string_view name) {
  for (size_t i = 0; i < kCallKindNames.size(); ++i)
    if (kCallKindNames[i] == name) return static_cast<CallKind>(i);
  throw Error("unknown call kind: " + std::string(name));
}

int phase_index(Phase p) { return static_cast<int>(p); }

std::string_view phase_name(Phase p) {
  return kPhaseNames[static_cast<size_t>(p)];
}

std::optional<Phase> phase_from_name(std::string_view name) {
  for (size_t i = 0; i < kPhaseNames.size(); ++i)
    if (kPhaseNames[i] == name) return static_cast<Phase>(i);
  return std::nullopt;
}

std::string_view outcome_name(Outcome o) {
  return kOutcomeNames[static_cast<int>(o)];
}

Outcome outcome_from_name(std::string_view name) {
  for (size_t i = 0; i < kOutcomeNames.size(); ++i)
    if (kOutcomeNames[i] == name) return static_cast<Outcome>(i);
  throw Error("unknown outcome: " + std::string(name));
}

std::string_view subgoal_status_name(SubgoalStatus s) {
  return kSubgoalStatusNames[static_cast<int>(s)];
}

SubgoalStatus subgoal_status_from_name(std::string_view name) {
  for (size_t i = 0; i < kSubgoalStatusNames.size(); ++i)
    if (kSubgoalStatusNames[i] == name) return static_cast<SubgoalStatus>(i);
  throw Error("unknown subgoal status: " + std::string(name));
}

// ----------------------------------------------------------------------

Problem validate_problem(const json& record) {
  Problem p;
  if (!record.contains("id") || !record["id"].is_string() ||
      record["id"].get<std::string>().empty())
    throw MissingField("id");
  p.id = record["id"].get<std::string>();
  if (!record.contains("informal_statement"))
    throw MissingField("informal_statement");
  if (!record["informal_statement"].is_string() ||
      record["informal_statement"].get<std::string>().empty())
    throw EmptyStatement();
  p.informal_statement = record["informal_statement"].get<std::string>();
  if (record.contains("source") && record["source"].is_string())
    p.source = source_from_name(record["source"].get<std::string>());
  if (record.contains("answer") && record["answer"].is_string())
    p.answer = record["answer"].get<std::string>();
  if (record.contains("domain_tags") && record["domain_tags"].is_array())
    for (const auto& t : record["domain_tags"])
      if (t.is_string()) p.domain_tags.push_back(t.get<std::string>());
  if (record.contains("difficulty") && record["difficulty"].is_number())
    p.difficulty = record["difficulty"].get<double>();
  return p;
}

json problem_to_json(const Problem& p) {
  json j;
  j["id"] = p.id;
  j["source"] = source_name(p.source);
  j["informal_statement"] = p.informal_statement;
  if (p.answer) j["answer"] = *p.answer;
  j["domain_tags"] = p.domain_tags;
  if (p.difficulty) j["difficulty"] = *p.difficulty;
  return j;
}

json premise_to_json(const Premise& p) {
  json j;
  j["name"] = p.name;
  j["signature"] = p.signature;
  j["kind"] = p.kind == Premise::Kind::definition ? "definition" : "theorem";
  return j;
}

Premise premise_from_json(const json& j) {
  Premise p;
  p.name = j.value("name", "");
  p.signature = j.value("signature", "");
  p.kind = j.value("kind", "theorem") == std::string("definition")
               ? Premise::Kind::definition
               : Premise::Kind::theorem;
  return p;
}

json usage_to_json(const UsageRecord& u) {
  json j;
  j["model_id"] = u.model_id;
  j["prompt_tokens"] = u.prompt_tokens;
  j["completion_tokens"] = u.completion_tokens;
  j["call_kind"] = call_kind_name(u.call_kind);
  return j;
}

UsageRecord usage_from_json(const json& j) {
  UsageRecord u;
  u.model_id = j.value("model_id", "");
  u.prompt_tokens = j.value("prompt_tokens", 0LL);
  u.completion_tokens = j.value("completion_tokens", 0LL);
  u.call_kind = call_kind_from_name(j.value("call_kind", "general"));
  return u;
}

// ----------------------------------------------------------------------

json event_to_json(const std::string& problem_id, const TrajectoryEvent& e) {
  json j;
  j["problem_id"] = problem_id;
  j["seq"] = e.seq;
  j["phase"] = phase_name(e.phase);
  j["kind"] = e.kind;
  j["data"] = e.data;
  return j;
}

TrajectoryEvent event_from_json(const json& j) {
  TrajectoryEvent e;
  e.seq = j.value("seq", 0);
  auto p = phase_from_name(j.value("phase", ""));
  if (!p) throw Error("event with unknown phase: " + j.dump());
  e.phase = *p;
  e.kind = j.value("kind", "");
  e.data = j.value("data", json::object());
  return e;
}

Phase Trajectory::final_phase() const {
  if (events.empty()) return Phase::Normalization;
  return events.back().phase;
}

bool Trajectory::terminal() const {
  return !events.empty() && events.back().kind == event::kOutcome;
}

Outcome Trajectory::outcome() const {
  for (auto it = events.rbegin(); it != events.rend(); ++it)
    if (it->kind == event::kOutcome)
      return outcome_from_name(it->data.at("outcome").get<std::string>());
  throw Error("trajectory has no terminal outcome event: " + problem_id);
}

std::vector<UsageRecord> Trajectory::usage() const {
  std::vector<UsageRecord> out;
  for (const auto& e : events)
    if (e.kind == event::kUsage) out.push_back(usage_from_json(e.data));
  return out;
}

void append_event(Trajectory& t, TrajectoryEvent e) {
  if (!t.events.empty()) {
    Phase last = t.events.back().phase;
    if (!phase_transition_legal(last, e.phase))
      throw PhaseOrderViolation(std::string(phase_name(last)),
                                std::string(phase_name(e.phase)));
  }
  e.seq = static_cast<int>(t.events.size());
  t.events.push_back(std::move(e));
}

// ----------------------------------------------------------------------

TrajectoryBuilder::TrajectoryBuilder(std::string problem_id, EventSink* sink)
    : sink_(sink) {
  traj_.problem_id = std::move(problem_id);
}

void TrajectoryBuilder::begin_phase(Phase p) {
  std::lock_guard<std::mutex> lock(mu_);
  if (!phase_transition_legal(current_, p))
    throw PhaseOrderViolation(std::string(phase_name(current_)),
                              std::string(phase_name(p)));
  current_ = p;
}

void TrajectoryBuilder::push(std::optional<Phase> phase, const char* kind,
                             json data) {
  std::lock_guard<std::mutex> lock(mu_);
  Phase resolved = phase.value_or(current_);
  TrajectoryEvent e;
  e.phase = resolved;
  e.kind = kind;
  e.data = std::move(data);
  append_event(traj_, std::move(e));
  current_ = resolved;
  if (sink_) sink_->append(traj_.problem_id, traj_.events.back());
}

void TrajectoryBuilder::normalized(const std::string& text, bool fallback) {
  json d;
  d["text"] = text;
  d["fallback"] = fallback;
  push(Phase::Normalization, event::kNormalized, std::move(d));
}

void TrajectoryBuilder::queries(Phase phase,
                                const std::vector<std::string>& queries) {
  json d;
  d["queries"] = queries;
  push(phase, event::kQueries, std::move(d));
}

void TrajectoryBuilder::search(Phase phase, const std::string& query,
                               const std::vector<Premise>& hits, bool failed) {
  json d;
  d["query"] = query;
  json hs = json::array();
  for (const auto& h : hits) hs.push_back(premise_to_json(h));
  d["hits"] = std::move(hs);
  d["failed"] = failed;
  push(phase, event::kSearch, std::move(d));
}

void TrajectoryBuilder::premises(Phase phase,
                                 const std::vector<Premise>& selected,
                                 const std::vector<Premise>& unselected) {
  json d;
  json sel = json::array(), uns = json::array();
  for (const auto& p : selected) sel.push_back(premise_to_json(p));
  for (const auto& p : unselected) uns.push_back(premise_to_json(p));
  d["selected"] = std::move(sel);
  d["unselected"] = std::move(uns);
  push(phase, event::kPremises, std::move(d));
}

void TrajectoryBuilder::candidate(int index, const std::string& source) {
  json d;
  d["index"] = index;
  d["source"] = source;
  push(Phase::StatementSampling, event::kCandidate, std::move(d));
}

void TrajectoryBuilder::candidate_check(int index, bool ok, bool uses_sorry,
                                        const json& diagnostics) {
  json d;
  d["index"] = index;
  d["ok"] = ok;
  d["uses_sorry"] = uses_sorry;
  d["diagnostics"] = diagnostics;
  push(Phase::StatementSampling, event::kCandidateCheck, std::move(d));
}

void TrajectoryBuilder::candidate_fix(int index, const std::string& original,
                                      const std::string& fixed, bool ok) {
  json d;
  d["index"] = index;
  d["original"] = original;
  d["fixed"] = fixed;
  d["ok"] = ok;
  push(Phase::StatementSampling, event::kCandidateFix, std::move(d));
}

void TrajectoryBuilder::semantic(int index, const std::string& verdict,
                                 const std::optional<std::string>& corrected,
                                 std::optional<bool> corrected_ok) {
  json d;
  d["index"] = index;
  d["verdict"] = verdict;
  d["corrected"] = corrected ? json(*corrected) : json(nullptr);
  d["corrected_ok"] = corrected_ok ? json(*corrected_ok) : json(nullptr);
  push(Phase::SemanticCheck, event::kSemantic, std::move(d));
}

void TrajectoryBuilder::selected_statement(int index, const std::string& source,
                                           bool fallback) {
  json d;
  d["index"] = index;
  d["source"] = source;
  d["fallback"] = fallback;
  push(Phase::Selection, event::kSelectedStatement, std::move(d));
}

void TrajectoryBuilder::proof_attempt(Phase phase, const std::string& target,
                                      int sample, const std::string& source,
                                      bool ok) {
  json d;
  d["target"] = target;
  d["sample"] = sample;
  d["source"] = source;
  d["ok"] = ok;
  push(phase, event::kProofAttempt, std::move(d));
}

void TrajectoryBuilder::refinement(Phase phase, const std::string& target,
                                   const std::string& original,
                                   const json& diagnostics,
                                   const std::string& fixed, bool ok) {
  json d;
  d["target"] = target;
  d["original"] = original;
  d["diagnostics"] = diagnostics;
  d["fixed"] = fixed;
  d["ok"] = ok;
  push(phase, event::kRefinement, std::move(d));
}

void TrajectoryBuilder::informal_proof(Phase phase, const std::string& target,
                                       const std::string& text) {
  json d;
  d["target"] = target;
  d["text"] = text;
  push(phase, event::kInformalProof, std::move(d));
}

void TrajectoryBuilder::sketch(const std::string& source, bool ok,
                               int attempt) {
  json d;
  d["source"] = source;
  d["ok"] = ok;
  d["attempt"] = attempt;
  push(Phase::Sketching, event::kSketch, std::move(d));
}

void TrajectoryBuilder::subgoal(int index, const std::string& source, bool ok) {
  json d;
  d["index"] = index;
  d["source"] = source;
  d["ok"] = ok;
  push(Phase::Sketching, event::kSubgoal, std::move(d));
}

void TrajectoryBuilder::subgoal_result(
    int index, SubgoalStatus status,
    const std::optional<std::string>& proof_source) {
  json d;
  d["index"] = index;
  d["status"] = subgoal_status_name(status);
  d["proof"] = proof_source ? json(*proof_source) : json(nullptr);
  push(Phase::SubgoalSolving, event::kSubgoalResult, std::move(d));
}

void TrajectoryBuilder::assembly(const std::string& source, bool ok,
                                 int attempt) {
  json d;
  d["source"] = source;
  d["ok"] = ok;
  d["attempt"] = attempt;
  push(Phase::Assembly, event::kAssembly, std::move(d));
}

void TrajectoryBuilder::note(const std::string& context,
                             const std::string& detail) {
  json d;
  d["context"] = context;
  d["detail"] = detail;
  push(std::nullopt, event::kNote, std::move(d));
}

void TrajectoryBuilder::usage(const UsageRecord& u) {
  push(std::nullopt, event::kUsage, usage_to_json(u));
}

void TrajectoryBuilder::outcome(Outcome o) {
  json d;
  d["outcome"] = outcome_name(o);
  push(std::nullopt, event::kOutcome, std::move(d));
}

std::string subgoal_target(int index) {
  return "subgoal:" + std::to_string(index);
}

std::optional<int> parse_subgoal_target(std::string_view target) {
  constexpr std::string_view prefix = "subgoal:";
  if (target.substr(0, prefix.size()) != prefix) return std::nullopt;
  return std::atoi(std::string(target.substr(prefix.size())).c_str());
}

}  // namespace proofmill::core
