#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "proofmill/core.hpp"
#include "proofmill/gateway.hpp"
#include "proofmill/prompts.hpp"

namespace proofmill::verification {

struct PanelMember {
  std::string model_id;
  std::string identity;  // variants of one underlying model share this
};

struct VerifierPanel {
  std::vector<PanelMember> members;

  size_t size() const { return members.size(); }
};

// Drops every member whose identity equals the generator's (self-evaluation
// bias); with exclude=false (baseline) the whole panel is eligible.
// Throws EmptyPanel when nothing remains.
std::vector<std::string> effective_verifiers(const VerifierPanel& panel,
                                             const std::string& generator_identity,
                                             bool exclude);

struct VoteRecord {
  std::string problem_id;
  std::string generator_identity;
  std::map<std::string, int> votes;  // model_id -> {0,1}, eligible members only
};

nlohmann::ordered_json vote_record_to_json(const VoteRecord& r);
VoteRecord vote_record_from_json(const nlohmann::ordered_json& j);

enum class AggregationRule { Majority, Strict, Lenient };

std::string_view rule_name(AggregationRule r);

// Majority: sum >= ceil(n/2); Strict: sum == n; Lenient: sum >= 1.
int aggregate(const std::vector<int>& votes, AggregationRule rule);

int aggregate_record(const VoteRecord& record, AggregationRule rule);

// (1/N) * sum of aggregated decisions over the records: the denominator is
// every problem, the numerator only the proved-and-verified ones.
double verified_rate(const std::vector<VoteRecord>& records, long long total_problems,
                     AggregationRule rule);

// Pairwise agreement over co-eligible problems; null where two judges never
// co-voted. Symmetric with unit diagonal where defined.
struct AgreementMatrix {
  std::vector<std::string> model_ids;
  std::vector<std::vector<std::optional<double>>> cells;

  std::optional<double> at(const std::string& a, const std::string& b) const;
};

AgreementMatrix agreement_matrix(const std::vector<VoteRecord>& records);

// Vote parsing: 1 iff the last "Final Judgment:" is followed by "Correct".
// nullopt when no judgment marker is present.
std::optional<int> parse_judgment(const std::string& text);

// One judge call against a specific verifier backend. A missing judgment is
// a conservative 0 with a logged event; the vote domain has no abstain state.
int judge(gateway::ChatBackend& verifier, const prompts::PromptLibrary& prompts,
          const core::Problem& problem, const std::string& formal_statement,
          core::TrajectoryBuilder& log);

}  // namespace proofmill::verification
