#include "proofmill/trajectory_view.hpp"

#include <algorithm>

namespace proofmill::core {

namespace {

RetrievalView& round_for(TrajectoryView& v, Phase phase) {
  auto& slot = phase == Phase::DefinitionRetrieval ? v.definition_retrieval
                                                   : v.theorem_retrieval;
  if (!slot) slot = RetrievalView{};
  return *slot;
}

CandidateView* candidate_by_index(TrajectoryView& v, int index) {
  for (auto& c : v.candidates)
    if (c.index == index) return &c;
  return nullptr;
}

SubgoalView* subgoal_by_index(TrajectoryView& v, int index) {
  for (auto& s : v.subgoals)
    if (s.index == index) return &s;
  return nullptr;
}

}  // namespace

TrajectoryView TrajectoryView::from(const Trajectory& t) {
  TrajectoryView v;
  v.problem_id = t.problem_id;
  v.final_phase = t.final_phase();

  for (const auto& e : t.events) {
    const auto& d = e.data;
    if (e.kind == event::kNormalized) {
      v.normalized = d.value("text", "");
    } else if (e.kind == event::kQueries) {
      auto& round = round_for(v, e.phase);
      for (const auto& q : d.value("queries", json::array()))
        round.queries.push_back(q.get<std::string>());
    } else if (e.kind == event::kSearch) {
      round_for(v, e.phase).search_events += 1;
    } else if (e.kind == event::kPremises) {
      auto& round = round_for(v, e.phase);
      for (const auto& p : d.value("selected", json::array()))
        round.selected.push_back(premise_from_json(p));
      for (const auto& p : d.value("unselected", json::array()))
        round.unselected.push_back(premise_from_json(p));
    } else if (e.kind == event::kCandidate) {
      CandidateView c;
      c.index = d.value("index", 0);
      c.compiled_source = d.value("source", "");
      c.final_source = c.compiled_source;
      v.candidates.push_back(std::move(c));
    } else if (e.kind == event::kCandidateCheck) {
      if (auto* c = candidate_by_index(v, d.value("index", 0)))
        c->compiled = d.value("ok", false);
    } else if (e.kind == event::kCandidateFix) {
      if (auto* c = candidate_by_index(v, d.value("index", 0))) {
        if (d.value("ok", false)) {
          c->compiled = true;
          c->compiled_source = d.value("fixed", "");
          c->final_source = c->compiled_source;
        }
      }
    } else if (e.kind == event::kSemantic) {
      if (auto* c = candidate_by_index(v, d.value("index", 0))) {
        c->semantic_checked = true;
        std::string verdict = d.value("verdict", "INVALID");
        if (verdict == "ALIGNED") {
          c->semantic_pass = true;
        } else if (verdict == "NOT_ALIGNED" && d.contains("corrected_ok") &&
                   d["corrected_ok"].is_boolean() &&
                   d["corrected_ok"].get<bool>()) {
          c->semantic_pass = true;
          c->final_source = d.value("corrected", "");
        }
      }
    } else if (e.kind == event::kSelectedStatement) {
      v.selected_index = d.value("index", 0);
      v.selected_source = d.value("source", "");
    } else if (e.kind == event::kProofAttempt) {
      if (d.value("ok", false) && d.value("target", "") == "main")
        v.final_proof = ProofView{d.value("source", ""), ProofView::Via::expert};
    } else if (e.kind == event::kRefinement) {
      RefinementView r;
      r.phase = e.phase;
      r.target = d.value("target", "");
      r.original = d.value("original", "");
      r.diagnostics =
          leancheck::diagnostics_from_json(d.value("diagnostics", json::array()));
      r.fixed = d.value("fixed", "");
      r.ok = d.value("ok", false);
      if (r.ok && r.target == "main")
        v.final_proof = ProofView{r.fixed, ProofView::Via::refinement};
      v.refinements.push_back(std::move(r));
    } else if (e.kind == event::kInformalProof) {
      if (d.value("target", "") == "main")
        v.informal_proof_main = d.value("text", "");
    } else if (e.kind == event::kSketch) {
      v.sketch_attempts += 1;
      if (d.value("ok", false)) {
        v.sketch_compiled = true;
        v.sketch_source = d.value("source", "");
      }
    } else if (e.kind == event::kSubgoal) {
      int index = d.value("index", -1);
      if (index < 0 || !d.value("ok", false)) {
        v.subgoals_dropped += 1;
      } else {
        SubgoalView s;
        s.index = index;
        s.source = d.value("source", "");
        v.subgoals.push_back(std::move(s));
      }
    } else if (e.kind == event::kSubgoalResult) {
      if (auto* s = subgoal_by_index(v, d.value("index", 0))) {
        s->status = subgoal_status_from_name(d.value("status", "pending"));
        if (d.contains("proof") && d["proof"].is_string())
          s->proof = d["proof"].get<std::string>();
      }
    } else if (e.kind == event::kAssembly) {
      v.assembled_source = d.value("source", "");
      v.assembly_ok = d.value("ok", false);
      if (v.assembly_ok)
        v.final_proof =
            ProofView{*v.assembled_source, ProofView::Via::assembly};
    } else if (e.kind == event::kOutcome) {
      v.outcome = outcome_from_name(d.value("outcome", "failed"));
    }
  }
  return v;
}

bool TrajectoryView::any_candidate_compiled() const {
  return std::any_of(candidates.begin(), candidates.end(),
                     [](const CandidateView& c) { return c.compiled; });
}

bool TrajectoryView::successful() const { return final_proof.has_value(); }

}  // namespace proofmill::core
