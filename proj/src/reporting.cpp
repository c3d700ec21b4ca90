#include "proofmill/reporting.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "proofmill/jsonl.hpp"

namespace proofmill::reporting {

using core::TrajectoryView;
using json = nlohmann::ordered_json;

Metrics compute_metrics(const std::vector<core::Trajectory>& trajectories,
                        const std::vector<verification::VoteRecord>& votes,
                        const std::vector<gateway::PriceEntry>& prices) {
  if (trajectories.empty()) throw Error("compute_metrics: no problems");
  Metrics m;
  m.n = static_cast<long long>(trajectories.size());
  m.m = static_cast<long long>(votes.size());

  long long compiled = 0, proved = 0;
  std::vector<core::UsageRecord> usage;
  for (const auto& t : trajectories) {
    auto view = TrajectoryView::from(t);
    if (view.any_candidate_compiled()) ++compiled;
    if (view.successful()) ++proved;
    for (auto& u : t.usage()) usage.push_back(std::move(u));
  }
  m.fr = static_cast<double>(compiled) / static_cast<double>(m.n);
  m.pr = static_cast<double>(proved) / static_cast<double>(m.n);

  long long verified = 0;
  for (const auto& r : votes)
    verified += verification::aggregate_record(
        r, verification::AggregationRule::Majority);
  m.vr = static_cast<double>(verified) / static_cast<double>(m.n);

  m.expert_calls = gateway::count_expert_calls(usage);
  m.total_cost = gateway::accrue_cost(usage, prices);
  if (verified > 0)
    m.avg_cost_per_verified = m.total_cost.divided_by(verified);
  return m;
}

std::string_view tier_name(DifficultyTier t) {
  switch (t) {
    case DifficultyTier::Easy: return "Easy";
    case DifficultyTier::Normal: return "Normal";
    case DifficultyTier::Hard: return "Hard";
  }
  return "Normal";
}

DifficultyTier difficulty_tier(core::Source source, double value) {
  double easy_max, hard_above;
  switch (source) {
    case core::Source::DeepTheorem:
      easy_max = 6;
      hard_above = 8;
      break;
    case core::Source::DeepMath:
      easy_max = 4;
      hard_above = 7;
      break;
    default:
      throw UnknownSource();
  }
  if (value <= easy_max) return DifficultyTier::Easy;
  if (value > hard_above) return DifficultyTier::Hard;
  return DifficultyTier::Normal;
}

DifficultyTier difficulty_tier(core::Source source,
                               std::optional<double> value) {
  if (!value) throw MissingDifficulty();
  return difficulty_tier(source, *value);
}

std::string_view domain_name(MacroDomain d) {
  switch (d) {
    case MacroDomain::Algebra: return "Algebra";
    case MacroDomain::Geometry: return "Geometry";
    case MacroDomain::Analysis: return "Analysis";
    case MacroDomain::DiscreteMathematics: return "DiscreteMathematics";
    case MacroDomain::NumberTheory: return "NumberTheory";
    case MacroDomain::AppliedMathematics: return "AppliedMathematics";
    case MacroDomain::Other: return "Other";
  }
  return "Other";
}

namespace {

std::string lower(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return out;
}

std::optional<MacroDomain> domain_from_name(const std::string& name) {
  static const std::map<std::string, MacroDomain> kNames = {
      {"algebra", MacroDomain::Algebra},
      {"geometry", MacroDomain::Geometry},
      {"analysis", MacroDomain::Analysis},
      {"discretemathematics", MacroDomain::DiscreteMathematics},
      {"numbertheory", MacroDomain::NumberTheory},
      {"appliedmathematics", MacroDomain::AppliedMathematics},
      {"other", MacroDomain::Other},
  };
  std::string key;
  for (char c : lower(name))
    if (std::isalnum(static_cast<unsigned char>(c))) key += c;
  auto it = kNames.find(key);
  if (it == kNames.end()) return std::nullopt;
  return it->second;
}

}  // namespace

const TagTable& default_tag_table() {
  static const TagTable table = {
      {"algebra", MacroDomain::Algebra},
      {"linear algebra", MacroDomain::Algebra},
      {"abstract algebra", MacroDomain::Algebra},
      {"group theory", MacroDomain::Algebra},
      {"ring theory", MacroDomain::Algebra},
      {"field theory", MacroDomain::Algebra},
      {"polynomials", MacroDomain::Algebra},
      {"inequalities", MacroDomain::Algebra},
      {"geometry", MacroDomain::Geometry},
      {"euclidean geometry", MacroDomain::Geometry},
      {"plane geometry", MacroDomain::Geometry},
      {"solid geometry", MacroDomain::Geometry},
      {"trigonometry", MacroDomain::Geometry},
      {"topology", MacroDomain::Geometry},
      {"analysis", MacroDomain::Analysis},
      {"real analysis", MacroDomain::Analysis},
      {"complex analysis", MacroDomain::Analysis},
      {"calculus", MacroDomain::Analysis},
      {"differential equations", MacroDomain::Analysis},
      {"functional analysis", MacroDomain::Analysis},
      {"measure theory", MacroDomain::Analysis},
      {"sequences and series", MacroDomain::Analysis},
      {"discrete mathematics", MacroDomain::DiscreteMathematics},
      {"combinatorics", MacroDomain::DiscreteMathematics},
      {"graph theory", MacroDomain::DiscreteMathematics},
      {"logic", MacroDomain::DiscreteMathematics},
      {"set theory", MacroDomain::DiscreteMathematics},
      {"number theory", MacroDomain::NumberTheory},
      {"elementary number theory", MacroDomain::NumberTheory},
      {"applied mathematics", MacroDomain::AppliedMathematics},
      {"probability", MacroDomain::AppliedMathematics},
      {"statistics", MacroDomain::AppliedMathematics},
      {"optimization", MacroDomain::AppliedMathematics},
      {"numerical analysis", MacroDomain::AppliedMathematics},
  };
  return table;
}

TagTable load_tag_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open tag table " + path.string());
  json doc = json::parse(in);
  TagTable table;
  for (const auto& [tag, domain] : doc.items()) {
    auto d = domain_from_name(domain.get<std::string>());
    if (!d) throw ConfigError("tag table maps to unknown domain: " +
                              domain.get<std::string>());
    table[lower(tag)] = *d;
  }
  return table;
}

MacroDomain domain_bucket(const std::vector<std::string>& tags,
                          const TagTable& table) {
  if (tags.empty()) return MacroDomain::Other;
  // Primary label only.
  auto it = table.find(lower(tags.front()));
  return it == table.end() ? MacroDomain::Other : it->second;
}

std::string_view success_reason_name(SuccessReason r) {
  switch (r) {
    case SuccessReason::ExpertProver: return "ExpertProver";
    case SuccessReason::IterativeRefinement: return "IterativeRefinement";
    case SuccessReason::SubgoalDecomposition: return "SubgoalDecomposition";
  }
  return "ExpertProver";
}

std::string_view failure_phase_name(FailurePhase p) {
  switch (p) {
    case FailurePhase::StatementFormalization: return "StatementFormalization";
    case FailurePhase::ExpertProving: return "ExpertProving";
    case FailurePhase::ProofSketching: return "ProofSketching";
    case FailurePhase::SubgoalSolving: return "SubgoalSolving";
    case FailurePhase::Assembly: return "Assembly";
    case FailurePhase::SemanticVerification: return "SemanticVerification";
  }
  return "StatementFormalization";
}

OutcomeAttribution attribute_outcome(const core::Trajectory& t,
                                     std::optional<int> judged_ok) {
  auto view = TrajectoryView::from(t);
  OutcomeAttribution a;
  if (view.final_proof) {
    if (judged_ok && *judged_ok == 0) {
      // Proof found but rejected by the judges.
      a.failure_phase = FailurePhase::SemanticVerification;
      return a;
    }
    switch (view.final_proof->via) {
      case core::ProofView::Via::expert:
        a.success_reason = SuccessReason::ExpertProver;
        break;
      case core::ProofView::Via::refinement:
        a.success_reason = SuccessReason::IterativeRefinement;
        break;
      case core::ProofView::Via::assembly:
        a.success_reason = SuccessReason::SubgoalDecomposition;
        break;
    }
    return a;
  }

  // Deepest phase reached with a failure, from the terminal event's phase.
  switch (view.final_phase) {
    case core::Phase::Normalization:
    case core::Phase::DefinitionRetrieval:
    case core::Phase::StatementSampling:
    case core::Phase::SemanticCheck:
    case core::Phase::Selection:
      a.failure_phase = FailurePhase::StatementFormalization;
      break;
    case core::Phase::ExpertProving:
    case core::Phase::Refinement:
      a.failure_phase = FailurePhase::ExpertProving;
      break;
    case core::Phase::TheoremRetrieval:
    case core::Phase::InformalProof:
    case core::Phase::Sketching:
      a.failure_phase = FailurePhase::ProofSketching;
      break;
    case core::Phase::SubgoalSolving:
      a.failure_phase = FailurePhase::SubgoalSolving;
      break;
    case core::Phase::Assembly:
      a.failure_phase = FailurePhase::Assembly;
      break;
    case core::Phase::Verification:
      a.failure_phase = FailurePhase::SemanticVerification;
      break;
  }
  return a;
}

Report build_report(const std::vector<core::Problem>& problems,
                    const std::vector<core::Trajectory>& trajectories,
                    const std::vector<verification::VoteRecord>& votes,
                    const std::vector<gateway::PriceEntry>& prices,
                    const TagTable& tags) {
  Report report;
  report.metrics = compute_metrics(trajectories, votes, prices);

  std::map<std::string, int> majority;  // problem_id -> aggregated vote
  for (const auto& r : votes)
    majority[r.problem_id] = verification::aggregate_record(
        r, verification::AggregationRule::Majority);

  std::map<std::string, const core::Problem*> by_id;
  for (const auto& p : problems) by_id[p.id] = &p;

  std::map<std::string, long long> domain_total, domain_verified;

  for (const auto& t : trajectories) {
    std::optional<int> judged;
    auto mv = majority.find(t.problem_id);
    if (mv != majority.end()) judged = mv->second;

    auto attribution = attribute_outcome(t, judged);
    if (attribution.success_reason)
      report.success_counts[std::string(
          success_reason_name(*attribution.success_reason))] += 1;
    else if (attribution.failure_phase)
      report.failure_counts[std::string(
          failure_phase_name(*attribution.failure_phase))] += 1;

    bool verified = judged && *judged == 1;
    auto pit = by_id.find(t.problem_id);
    if (pit == by_id.end()) continue;
    const core::Problem& problem = *pit->second;

    std::string domain = std::string(domain_name(domain_bucket(problem.domain_tags, tags)));
    domain_total[domain] += 1;
    if (verified) domain_verified[domain] += 1;

    if (problem.difficulty && (problem.source == core::Source::DeepMath ||
                               problem.source == core::Source::DeepTheorem)) {
      auto tier =
          std::string(tier_name(difficulty_tier(problem.source, *problem.difficulty)));
      report.tier_total[tier] += 1;
      if (verified) report.tier_verified[tier] += 1;
    }
  }

  for (const auto& [domain, total] : domain_total)
    report.domain_vr[domain] =
        static_cast<double>(domain_verified[domain]) / static_cast<double>(total);
  return report;
}

namespace {

std::string percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f%%", fraction * 100.0);
  return buf;
}

void write_csv(const std::filesystem::path& path,
               const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& row : rows) {
    for (size_t i = 0; i < row.size(); ++i) {
      if (i) out << ",";
      out << row[i];
    }
    out << "\n";
  }
}

}  // namespace

std::string render_report_text(const Report& report) {
  std::ostringstream out;
  const auto& m = report.metrics;
  out << "Run metrics (N=" << m.n << ", M=" << m.m << ")\n";
  out << "  FR            " << percent(m.fr) << "\n";
  out << "  PR            " << percent(m.pr) << "\n";
  out << "  VR (majority) " << percent(m.vr) << "\n";
  out << "  expert calls  " << m.expert_calls << "\n";
  out << "  total cost    " << usd(m.total_cost) << "\n";
  out << "  avg cost/verified "
      << (m.avg_cost_per_verified ? usd(*m.avg_cost_per_verified)
                                  : std::string("undefined"))
      << "\n";

  auto table = [&](const char* title,
                   const std::map<std::string, long long>& counts) {
    out << "\n" << title << "\n";
    for (const auto& [key, value] : counts) {
      out << "  " << key;
      for (size_t i = key.size(); i < 24; ++i) out << ' ';
      out << value << "\n";
    }
  };
  table("Success reasons", report.success_counts);
  table("Failure phases", report.failure_counts);

  out << "\nPer-domain VR\n";
  for (const auto& [domain, vr] : report.domain_vr) {
    out << "  " << domain;
    for (size_t i = domain.size(); i < 24; ++i) out << ' ';
    out << percent(vr) << "\n";
  }

  out << "\nPer-tier verified\n";
  for (const auto& [tier, total] : report.tier_total) {
    auto it = report.tier_verified.find(tier);
    long long verified = it == report.tier_verified.end() ? 0 : it->second;
    out << "  " << tier;
    for (size_t i = tier.size(); i < 24; ++i) out << ' ';
    out << verified << " / " << total << "\n";
  }
  return out.str();
}

void emit_report(const Report& report, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  const auto& m = report.metrics;

  json j;
  j["N"] = m.n;
  j["M"] = m.m;
  j["FR"] = m.fr;
  j["PR"] = m.pr;
  j["VR_majority"] = m.vr;
  j["expert_calls"] = m.expert_calls;
  j["total_cost"] = m.total_cost.to_string();
  j["avg_cost_per_verified"] =
      m.avg_cost_per_verified ? json(m.avg_cost_per_verified->to_string())
                              : json(nullptr);
  j["success_reasons"] = report.success_counts;
  j["failure_phases"] = report.failure_counts;
  j["domain_vr"] = report.domain_vr;
  json tiers;
  for (const auto& [tier, total] : report.tier_total) {
    auto it = report.tier_verified.find(tier);
    json row;
    row["verified"] = it == report.tier_verified.end() ? 0 : it->second;
    row["total"] = total;
    tiers[tier] = row;
  }
  j["tiers"] = tiers;
  {
    std::ofstream out(out_dir / "report.json");
    if (!out) throw IoError("cannot write report.json");
    out << j.dump(2) << "\n";
  }
  {
    std::ofstream out(out_dir / "report.txt");
    if (!out) throw IoError("cannot write report.txt");
    out << render_report_text(report);
  }

  std::vector<std::vector<std::string>> success_rows{{"reason", "count"}};
  for (const auto& [k, v] : report.success_counts)
    success_rows.push_back({k, std::to_string(v)});
  write_csv(out_dir / "success_reasons.csv", success_rows);

  std::vector<std::vector<std::string>> failure_rows{{"phase", "count"}};
  for (const auto& [k, v] : report.failure_counts)
    failure_rows.push_back({k, std::to_string(v)});
  write_csv(out_dir / "failure_phases.csv", failure_rows);

  std::vector<std::vector<std::string>> domain_rows{{"domain", "vr"}};
  for (const auto& [k, v] : report.domain_vr)
    domain_rows.push_back({k, std::to_string(v)});
  write_csv(out_dir / "domain_vr.csv", domain_rows);

  std::vector<std::vector<std::string>> tier_rows{{"tier", "verified", "total"}};
  for (const auto& [tier, total] : report.tier_total) {
    auto it = report.tier_verified.find(tier);
    long long verified = it == report.tier_verified.end() ? 0 : it->second;
    tier_rows.push_back({tier, std::to_string(verified), std::to_string(total)});
  }
  write_csv(out_dir / "tiers.csv", tier_rows);
}

}  // namespace proofmill::reporting
