#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "proofmill/core.hpp"
#include "proofmill/gateway.hpp"
#include "proofmill/money.hpp"
#include "proofmill/trajectory_view.hpp"
#include "proofmill/verification.hpp"

namespace proofmill::reporting {

struct Metrics {
  double fr = 0;  // fraction with a compiled statement
  double pr = 0;  // fraction with a Strict-verified proof
  double vr = 0;  // fraction judged consistent by majority vote
  long long expert_calls = 0;
  Money total_cost;
  std::optional<Money> avg_cost_per_verified;  // undefined when none verified
  long long n = 0;  // total problems
  long long m = 0;  // problems with proofs (vote records)
};

Metrics compute_metrics(const std::vector<core::Trajectory>& trajectories,
                        const std::vector<verification::VoteRecord>& votes,
                        const std::vector<gateway::PriceEntry>& prices);

enum class DifficultyTier { Easy, Normal, Hard };

std::string_view tier_name(DifficultyTier t);

// Source-conditioned thresholds; inclusive on "up to", exclusive on "above".
// DeepTheorem: <=6 Easy, >8 Hard; DeepMath: <=4 Easy, >7 Hard. Absent
// values are rejected, never defaulted.
DifficultyTier difficulty_tier(core::Source source, double value);
DifficultyTier difficulty_tier(core::Source source,
                               std::optional<double> value);

enum class MacroDomain {
  Algebra,
  Geometry,
  Analysis,
  DiscreteMathematics,
  NumberTheory,
  AppliedMathematics,
  Other,
};

std::string_view domain_name(MacroDomain d);

using TagTable = std::map<std::string, MacroDomain>;

// Default tag -> macro-category table covering the seven categories.
const TagTable& default_tag_table();
TagTable load_tag_table(const std::filesystem::path& path);

// The first tag is the primary label; unmapped tags bucket to Other.
MacroDomain domain_bucket(const std::vector<std::string>& tags,
                          const TagTable& table = default_tag_table());

enum class SuccessReason { ExpertProver, IterativeRefinement, SubgoalDecomposition };
enum class FailurePhase {
  StatementFormalization,
  ExpertProving,
  ProofSketching,
  SubgoalSolving,
  Assembly,
  SemanticVerification,
};

std::string_view success_reason_name(SuccessReason r);
std::string_view failure_phase_name(FailurePhase p);

struct OutcomeAttribution {
  std::optional<SuccessReason> success_reason;
  std::optional<FailurePhase> failure_phase;
};

// Proof-carrying trajectories attribute to the phase that produced the
// final proof; failed ones to the deepest phase reached with a failure.
// judged_ok, when present, reattributes judge-rejected proofs to
// SemanticVerification.
OutcomeAttribution attribute_outcome(const core::Trajectory& t,
                                     std::optional<int> judged_ok = std::nullopt);

struct Report {
  Metrics metrics;
  std::map<std::string, long long> success_counts;  // reason -> count
  std::map<std::string, long long> failure_counts;  // phase -> count
  std::map<std::string, double> domain_vr;          // macro-domain -> VR
  std::map<std::string, long long> tier_verified;   // tier -> verified count
  std::map<std::string, long long> tier_total;      // tier -> problem count
};

Report build_report(const std::vector<core::Problem>& problems,
                    const std::vector<core::Trajectory>& trajectories,
                    const std::vector<verification::VoteRecord>& votes,
                    const std::vector<gateway::PriceEntry>& prices,
                    const TagTable& tags = default_tag_table());

// Machine-readable JSON plus fixed-width tables for the terminal, and one
// CSV per table.
void emit_report(const Report& report, const std::filesystem::path& out_dir);

std::string render_report_text(const Report& report);

}  // namespace proofmill::reporting
