#include "proofmill/verification.hpp"

#include <algorithm>
#include <cctype>

namespace proofmill::verification {

using json = nlohmann::ordered_json;

std::vector<std::string> effective_verifiers(const VerifierPanel& panel,
                                             const std::string& generator_identity,
                                             bool exclude) {
  std::vector<std::string> out;
  for (const auto& m : panel.members) {
    if (exclude && m.identity == generator_identity) continue;
    out.push_back(m.model_id);
  }
  if (out.empty()) throw EmptyPanel();
  return out;
}

json vote_record_to_json(const VoteRecord& r) {
  json j;
  j["problem_id"] = r.problem_id;
  j["generator_identity"] = r.generator_identity;
  json votes;  // std::map iterates sorted, serialization is stable
  for (const auto& [model, vote] : r.votes) votes[model] = vote;
  j["votes"] = std::move(votes);
  return j;
}

VoteRecord vote_record_from_json(const json& j) {
  VoteRecord r;
  r.problem_id = j.value("problem_id", "");
  r.generator_identity = j.value("generator_identity", "");
  if (j.contains("votes"))
    for (const auto& [model, vote] : j["votes"].items())
      r.votes[model] = vote.get<int>();
  return r;
}

std::string_view rule_name(AggregationRule r) {
  switch (r) {
    case AggregationRule::Majority: return "majority";
    case AggregationRule::Strict: return "strict";
    case AggregationRule::Lenient: return "lenient";
  }
  return "majority";
}

int aggregate(const std::vector<int>& votes, AggregationRule rule) {
  if (votes.empty()) throw EmptyVotes();
  long long n = static_cast<long long>(votes.size());
  long long sum = 0;
  for (int v : votes) sum += v;
  switch (rule) {
    case AggregationRule::Majority:
      return sum >= (n + 1) / 2 ? 1 : 0;  // ceil(n/2)
    case AggregationRule::Strict:
      return sum == n ? 1 : 0;
    case AggregationRule::Lenient:
      return sum >= 1 ? 1 : 0;
  }
  return 0;
}

int aggregate_record(const VoteRecord& record, AggregationRule rule) {
  std::vector<int> votes;
  votes.reserve(record.votes.size());
  for (const auto& [model, vote] : record.votes) votes.push_back(vote);
  return aggregate(votes, rule);
}

double verified_rate(const std::vector<VoteRecord>& records,
                     long long total_problems, AggregationRule rule) {
  if (total_problems <= 0) throw Error("verified_rate: N must be positive");
  long long verified = 0;
  for (const auto& r : records) verified += aggregate_record(r, rule);
  return static_cast<double>(verified) / static_cast<double>(total_problems);
}

AgreementMatrix agreement_matrix(const std::vector<VoteRecord>& records) {
  std::vector<std::string> ids;
  for (const auto& r : records)
    for (const auto& [model, vote] : r.votes)
      if (std::find(ids.begin(), ids.end(), model) == ids.end())
        ids.push_back(model);
  std::sort(ids.begin(), ids.end());

  size_t k = ids.size();
  AgreementMatrix m;
  m.model_ids = ids;
  m.cells.assign(k, std::vector<std::optional<double>>(k, std::nullopt));

  for (size_t a = 0; a < k; ++a) {
    for (size_t b = 0; b < k; ++b) {
      long long both = 0, equal = 0;
      for (const auto& r : records) {
        auto va = r.votes.find(ids[a]);
        auto vb = r.votes.find(ids[b]);
        if (va == r.votes.end() || vb == r.votes.end()) continue;
        ++both;
        if (va->second == vb->second) ++equal;
      }
      if (both > 0)
        m.cells[a][b] = static_cast<double>(equal) / static_cast<double>(both);
    }
  }
  return m;
}

std::optional<double> AgreementMatrix::at(const std::string& a,
                                          const std::string& b) const {
  auto ia = std::find(model_ids.begin(), model_ids.end(), a);
  auto ib = std::find(model_ids.begin(), model_ids.end(), b);
  if (ia == model_ids.end() || ib == model_ids.end()) return std::nullopt;
  return cells[ia - model_ids.begin()][ib - model_ids.begin()];
}

std::optional<int> parse_judgment(const std::string& text) {
  constexpr std::string_view marker = "Final Judgment:";
  size_t pos = text.rfind(marker);
  if (pos == std::string::npos) return std::nullopt;
  size_t i = pos + marker.size();
  while (i < text.size() &&
         std::isspace(static_cast<unsigned char>(text[i])))
    ++i;
  if (text.compare(i, 7, "Correct") == 0) return 1;
  if (text.compare(i, 9, "Incorrect") == 0) return 0;
  return std::nullopt;
}

int judge(gateway::ChatBackend& verifier, const prompts::PromptLibrary& prompts,
          const core::Problem& problem, const std::string& formal_statement,
          core::TrajectoryBuilder& log) {
  std::string statement = problem.informal_statement;
  if (problem.answer) statement += "\n\nAnswer: " + *problem.answer;
  gateway::ChatRequest req;
  req.role_kind = core::CallKind::general;
  req.phase = core::Phase::Verification;
  // Judges see the original informal statement, not the normalized one.
  req.prompt = prompts.render("judge", {{"informal_statement", statement},
                                        {"formal_statement", formal_statement}});
  try {
    auto resp = verifier.complete_once(req);
    log.usage(resp.usage);
    auto vote = parse_judgment(resp.text);
    if (!vote) {
      log.note("judge", "no final judgment from " + verifier.model_id());
      return 0;
    }
    return *vote;
  } catch (const Error& e) {
    log.note("judge", e.what());
    return 0;
  }
}

}  // namespace proofmill::verification
