#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "proofmill/core.hpp"
#include "proofmill/leancheck.hpp"
#include "proofmill/trajectory_view.hpp"

namespace proofmill::extraction {

// Every extractor is a pure function of the trajectory event log, so
// locally verified work is harvested even when the run as a whole failed.

struct StatementSample {
  std::string s_n;
  std::vector<core::Premise> premises;
  std::string s_f;
  core::Outcome trajectory_outcome = core::Outcome::failed;
};

struct ProofSample {
  enum class Origin { main_theorem, subgoal };
  std::string s_f;
  std::vector<core::Premise> premises;
  std::string r_f;
  Origin origin = Origin::main_theorem;
};

struct PremiseSample {
  std::string statement;  // S_N for the definition round, S_F for the theorem round
  std::vector<std::string> queries;
  std::vector<core::Premise> positives;
  std::vector<core::Premise> hard_negatives;
};

struct CorrectionSample {
  std::string r_f;
  std::vector<leancheck::Diagnostic> errors;
  std::string r_f_fixed;
};

struct SketchSample {
  std::string s_f;
  std::vector<core::Premise> premises;
  std::string r_n;
  std::string r_s;
  bool verified_closed = false;
};

std::vector<StatementSample> extract_statement_samples(const core::Trajectory& t);
std::vector<ProofSample> extract_proof_samples(const core::Trajectory& t);
std::vector<PremiseSample> extract_premise_samples(const core::Trajectory& t);
std::vector<CorrectionSample> extract_correction_samples(const core::Trajectory& t);
std::vector<SketchSample> extract_sketch_samples(const core::Trajectory& t);

// Whole-token match on the fully qualified name or its final path segment
// (Lean code commonly uses short names after `open`).
bool premise_appears(const std::string& source, const std::string& name);

struct ManifestCounts {
  long long from_successful = 0;
  long long from_failed = 0;
};

struct ExportSummary {
  ManifestCounts statements, proofs, premises, corrections, sketches;
};

// Writes the five JSONL datasets plus manifest.json with per-dataset counts
// split by trajectory outcome.
ExportSummary export_datasets(const std::vector<core::Trajectory>& trajectories,
                              const std::filesystem::path& out_dir);

nlohmann::ordered_json statement_sample_to_json(const StatementSample& s);
nlohmann::ordered_json proof_sample_to_json(const ProofSample& s);
nlohmann::ordered_json premise_sample_to_json(const PremiseSample& s);
nlohmann::ordered_json correction_sample_to_json(const CorrectionSample& s);
nlohmann::ordered_json sketch_sample_to_json(const SketchSample& s);

}  // namespace proofmill::extraction
