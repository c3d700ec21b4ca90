#include "proofmill/extraction.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

#include "proofmill/jsonl.hpp"

namespace proofmill::extraction {

using core::TrajectoryView;
using json = nlohmann::ordered_json;

namespace {

json premises_to_json(const std::vector<core::Premise>& ps) {
  json arr = json::array();
  for (const auto& p : ps) arr.push_back(core::premise_to_json(p));
  return arr;
}

bool is_successful(core::Outcome o) {
  return o == core::Outcome::verified ||
         o == core::Outcome::proof_found_unverified;
}

std::string last_segment(const std::string& name) {
  auto pos = name.rfind('.');
  return pos == std::string::npos ? name : name.substr(pos + 1);
}

// Verified sources of a run: the final proof plus every solved subgoal.
std::vector<const std::string*> verified_sources(const TrajectoryView& v) {
  std::vector<const std::string*> out;
  if (v.final_proof) out.push_back(&v.final_proof->source);
  for (const auto& s : v.subgoals)
    if (s.status == core::SubgoalStatus::solved && s.proof)
      out.push_back(&*s.proof);
  return out;
}

}  // namespace

bool premise_appears(const std::string& source, const std::string& name) {
  auto ident_char = [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' ||
           c == '.' || c == '\'';
  };
  std::string shortname = last_segment(name);
  size_t i = 0;
  while (i < source.size()) {
    if (!ident_char(source[i])) {
      ++i;
      continue;
    }
    size_t j = i;
    while (j < source.size() && ident_char(source[j])) ++j;
    std::string token = source.substr(i, j - i);
    // trim stray dots so "add_comm." matches
    while (!token.empty() && token.front() == '.') token.erase(0, 1);
    while (!token.empty() && token.back() == '.') token.pop_back();
    if (token == name || token == shortname) return true;
    i = j;
  }
  return false;
}

std::vector<StatementSample> extract_statement_samples(
    const core::Trajectory& t) {
  auto v = TrajectoryView::from(t);
  std::vector<StatementSample> out;
  if (!v.normalized) return out;
  std::vector<core::Premise> premises =
      v.definition_retrieval ? v.definition_retrieval->selected
                             : std::vector<core::Premise>{};
  // Every candidate that passed both checks becomes a sample, not only the
  // selected one.
  for (const auto& c : v.candidates) {
    if (!c.compiled || !c.semantic_pass) continue;
    StatementSample s;
    s.s_n = *v.normalized;
    s.premises = premises;
    s.s_f = c.final_source;
    s.trajectory_outcome = v.outcome.value_or(core::Outcome::failed);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<ProofSample> extract_proof_samples(const core::Trajectory& t) {
  auto v = TrajectoryView::from(t);
  std::vector<ProofSample> out;

  std::vector<core::Premise> root_premises;
  if (v.theorem_retrieval)
    root_premises = v.theorem_retrieval->selected;
  else if (v.definition_retrieval)
    root_premises = v.definition_retrieval->selected;

  if (v.final_proof && v.selected_source) {
    ProofSample s;
    s.s_f = *v.selected_source;
    s.premises = root_premises;
    s.r_f = v.final_proof->source;
    s.origin = ProofSample::Origin::main_theorem;
    out.push_back(std::move(s));
  }
  // Solved subgoals count even when the parent failed; premises reuse the
  // root retrieval outcome.
  for (const auto& sg : v.subgoals) {
    if (sg.status != core::SubgoalStatus::solved || !sg.proof) continue;
    ProofSample s;
    s.s_f = sg.source;
    s.premises = root_premises;
    s.r_f = *sg.proof;
    s.origin = ProofSample::Origin::subgoal;
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<PremiseSample> extract_premise_samples(const core::Trajectory& t) {
  auto v = TrajectoryView::from(t);
  std::vector<PremiseSample> out;
  auto sources = verified_sources(v);
  if (sources.empty()) return out;

  auto harvest = [&](const core::RetrievalView& round,
                     const std::string& statement) {
    PremiseSample s;
    s.statement = statement;
    for (const auto& q : round.queries) s.queries.push_back(q);
    std::set<std::string> positive_names;
    for (const auto& p : round.selected) {
      bool used = std::any_of(sources.begin(), sources.end(),
                              [&](const std::string* src) {
                                return premise_appears(*src, p.name);
                              });
      if (used) {
        s.positives.push_back(p);
        positive_names.insert(p.name);
      }
    }
    if (s.positives.empty()) return;  // essential premises only
    for (const auto& p : round.unselected) s.hard_negatives.push_back(p);
    for (const auto& p : round.selected)
      if (!positive_names.count(p.name)) s.hard_negatives.push_back(p);
    out.push_back(std::move(s));
  };

  if (v.definition_retrieval && v.normalized)
    harvest(*v.definition_retrieval, *v.normalized);
  if (v.theorem_retrieval && v.selected_source)
    harvest(*v.theorem_retrieval, *v.selected_source);
  return out;
}

std::vector<CorrectionSample> extract_correction_samples(
    const core::Trajectory& t) {
  auto v = TrajectoryView::from(t);
  std::vector<CorrectionSample> out;
  // Proof-level repairs only; statement fixes live in candidate_fix events
  // and are excluded by construction.
  for (const auto& r : v.refinements) {
    if (!r.ok) continue;
    CorrectionSample s;
    s.r_f = r.original;
    s.errors = r.diagnostics;
    s.r_f_fixed = r.fixed;
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<SketchSample> extract_sketch_samples(const core::Trajectory& t) {
  auto v = TrajectoryView::from(t);
  std::vector<SketchSample> out;
  if (!v.sketch_compiled || !v.sketch_source || !v.selected_source) return out;
  SketchSample s;
  s.s_f = *v.selected_source;
  if (v.theorem_retrieval) s.premises = v.theorem_retrieval->selected;
  s.r_n = v.informal_proof_main.value_or("");
  s.r_s = *v.sketch_source;
  s.verified_closed = v.assembly_ok;
  out.push_back(std::move(s));
  return out;
}

// ----------------------------------------------------------------------
// Serialization + export
// ----------------------------------------------------------------------

json statement_sample_to_json(const StatementSample& s) {
  json j;
  j["S_N"] = s.s_n;
  j["P"] = premises_to_json(s.premises);
  j["S_F"] = s.s_f;
  j["trajectory_outcome"] = core::outcome_name(s.trajectory_outcome);
  return j;
}

json proof_sample_to_json(const ProofSample& s) {
  json j;
  j["S_F"] = s.s_f;
  j["P"] = premises_to_json(s.premises);
  j["R_F"] = s.r_f;
  j["origin"] =
      s.origin == ProofSample::Origin::main_theorem ? "main_theorem" : "subgoal";
  return j;
}

json premise_sample_to_json(const PremiseSample& s) {
  json j;
  j["statement"] = s.statement;
  j["Q"] = s.queries;
  j["positives"] = premises_to_json(s.positives);
  j["hard_negatives"] = premises_to_json(s.hard_negatives);
  return j;
}

json correction_sample_to_json(const CorrectionSample& s) {
  json j;
  j["R_F"] = s.r_f;
  j["E"] = leancheck::diagnostics_to_json(s.errors);
  j["R_F_fixed"] = s.r_f_fixed;
  return j;
}

json sketch_sample_to_json(const SketchSample& s) {
  json j;
  j["S_F"] = s.s_f;
  j["P"] = premises_to_json(s.premises);
  j["R_N"] = s.r_n;
  j["R_S"] = s.r_s;
  j["verified_closed"] = s.verified_closed;
  return j;
}

ExportSummary export_datasets(const std::vector<core::Trajectory>& trajectories,
                              const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);

  std::vector<json> statements, proofs, premises, corrections, sketches;
  ExportSummary summary;

  for (const auto& t : trajectories) {
    bool success = false;
    if (t.terminal()) success = is_successful(t.outcome());
    auto bump = [&](ManifestCounts& c, size_t n) {
      (success ? c.from_successful : c.from_failed) += n;
    };

    auto ss = extract_statement_samples(t);
    bump(summary.statements, ss.size());
    for (const auto& s : ss) statements.push_back(statement_sample_to_json(s));

    auto ps = extract_proof_samples(t);
    bump(summary.proofs, ps.size());
    for (const auto& s : ps) proofs.push_back(proof_sample_to_json(s));

    auto rs = extract_premise_samples(t);
    bump(summary.premises, rs.size());
    for (const auto& s : rs) premises.push_back(premise_sample_to_json(s));

    auto cs = extract_correction_samples(t);
    bump(summary.corrections, cs.size());
    for (const auto& s : cs) corrections.push_back(correction_sample_to_json(s));

    auto ks = extract_sketch_samples(t);
    bump(summary.sketches, ks.size());
    for (const auto& s : ks) sketches.push_back(sketch_sample_to_json(s));
  }

  jsonl::write_file(out_dir / "statements.jsonl", statements);
  jsonl::write_file(out_dir / "proofs.jsonl", proofs);
  jsonl::write_file(out_dir / "premises.jsonl", premises);
  jsonl::write_file(out_dir / "corrections.jsonl", corrections);
  jsonl::write_file(out_dir / "sketches.jsonl", sketches);

  auto counts = [](const ManifestCounts& c) {
    json j;
    j["from_successful"] = c.from_successful;
    j["from_failed"] = c.from_failed;
    return j;
  };
  json manifest;
  manifest["statements"] = counts(summary.statements);
  manifest["proofs"] = counts(summary.proofs);
  manifest["premises"] = counts(summary.premises);
  manifest["corrections"] = counts(summary.corrections);
  manifest["sketches"] = counts(summary.sketches);
  std::ofstream out(out_dir / "manifest.json");
  if (!out) throw IoError("cannot write manifest in " + out_dir.string());
  out << manifest.dump(2) << "\n";

  return summary;
}

}  // namespace proofmill::extraction
