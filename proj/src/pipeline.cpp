#include "proofmill/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <thread>

namespace proofmill::pipeline {

using core::CallKind;
using core::Phase;

// ----------------------------------------------------------------------
// Output-contract parsing
// ----------------------------------------------------------------------

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> extract_all_lean_blocks(const std::string& output) {
  std::vector<std::string> blocks;
  size_t pos = 0;
  while (true) {
    size_t open = output.find("```", pos);
    if (open == std::string::npos) break;
    size_t lang_end = output.find('\n', open + 3);
    if (lang_end == std::string::npos) break;
    std::string lang = trim(output.substr(open + 3, lang_end - open - 3));
    size_t close = output.find("```", lang_end + 1);
    if (close == std::string::npos) break;
    if (lang == "lean4" || lang == "lean") {
      std::string body = output.substr(lang_end + 1, close - lang_end - 1);
      while (!body.empty() && (body.back() == '\n' || body.back() == '\r'))
        body.pop_back();
      blocks.push_back(std::move(body));
    }
    pos = close + 3;
  }
  return blocks;
}

std::string extract_lean_block(const std::string& output) {
  auto blocks = extract_all_lean_blocks(output);
  if (!blocks.empty()) return blocks.back();
  return trim(output);
}

std::string parse_tagged(const std::string& output, std::string_view tag) {
  static const std::set<std::string, std::less<>> kKnownTags = {
      "normalized", "verdict", "fixed_formal_statement", "selected",
      "analysis"};
  if (kKnownTags.find(tag) == kKnownTags.end())
    throw Error("parse_tagged: unsupported tag " + std::string(tag));

  std::string open = "<" + std::string(tag) + ">";
  std::string close = "</" + std::string(tag) + ">";
  size_t a = output.find(open);
  if (a == std::string::npos) throw TagMissing(std::string(tag));
  size_t b = output.find(close, a + open.size());
  if (b == std::string::npos) throw TagMissing(std::string(tag));
  std::string inner = trim(output.substr(a + open.size(), b - a - open.size()));

  if (tag == "verdict") {
    if (inner != "ALIGNED" && inner != "NOT_ALIGNED")
      throw InvalidVerdict(inner);
  } else if (tag == "selected") {
    if (inner.empty() ||
        !std::all_of(inner.begin(), inner.end(), [](unsigned char c) {
          return std::isdigit(c);
        }) ||
        inner == std::string(inner.size(), '0'))
      throw InvalidSelection(inner);
  } else if (tag == "fixed_formal_statement") {
    auto blocks = extract_all_lean_blocks(inner);
    if (!blocks.empty()) return trim(blocks.back());
  }
  return inner;
}

TaggedOutput collect_tags(const std::string& output) {
  TaggedOutput out;
  out.raw = output;
  for (const char* tag : {"normalized", "verdict", "fixed_formal_statement",
                          "selected", "analysis"}) {
    try {
      out.extracted[tag] = parse_tagged(output, tag);
    } catch (const Error&) {
    }
  }
  return out;
}

std::string normalize_source(const std::string& source) {
  std::string out;
  bool in_space = false;
  for (char c : source) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      in_space = true;
      continue;
    }
    if (in_space && !out.empty()) out += ' ';
    in_space = false;
    out += c;
  }
  return out;
}

// ----------------------------------------------------------------------
// Runner plumbing
// ----------------------------------------------------------------------

Runner::Runner(Deps deps, Budgets budgets, Mode mode)
    : deps_(std::move(deps)), budgets_(budgets), mode_(mode) {}

gateway::ChatRequest Runner::request(CallKind role, std::string prompt,
                                     Phase phase) const {
  gateway::ChatRequest req;
  req.role_kind = role;
  req.prompt = std::move(prompt);
  req.phase = phase;
  auto it = deps_.roles.find(role);
  if (it != deps_.roles.end()) {
    req.temperature = it->second.temperature;
    req.max_attempts = it->second.max_attempts;
  }
  return req;
}

std::optional<std::string> Runner::try_complete(CallKind role,
                                                const std::string& prompt,
                                                Phase phase,
                                                core::TrajectoryBuilder& log,
                                                const char* context) {
  try {
    return deps_.gw.complete(request(role, prompt, phase), log).text;
  } catch (const TransportError& e) {
    log.note(context, e.what());
  } catch (const EmptyCompletion& e) {
    log.note(context, e.what());
  }
  return std::nullopt;
}

core::Trajectory Runner::run_problem(const core::Problem& problem,
                                     core::EventSink* sink) {
  core::TrajectoryBuilder builder(problem.id, sink);
  try {
    if (mode_ == Mode::agentic)
      run_agentic(problem, builder);
    else
      run_baseline(problem, builder);
  } catch (const Error& e) {
    if (!builder.trajectory().terminal()) {
      builder.note("run_problem", e.what());
      builder.outcome(core::Outcome::failed);
    }
  }
  return builder.take();
}

// ----------------------------------------------------------------------
// Statement formalization stages
// ----------------------------------------------------------------------

core::NormalizedStatement Runner::normalize_statement(
    const core::Problem& problem, core::TrajectoryBuilder& log) {
  std::map<std::string, std::string> vars{
      {"informal_statement", problem.informal_statement}};
  auto text = try_complete(CallKind::general,
                           deps_.prompts.render("normalize", vars),
                           Phase::Normalization, log, "normalize");
  std::string normalized;
  bool fallback = false;
  if (text) {
    try {
      normalized = parse_tagged(*text, "normalized");
    } catch (const TagMissing&) {
      fallback = true;
    }
  } else {
    fallback = true;
  }
  if (fallback || trim(normalized).empty()) {
    normalized = problem.informal_statement;
    fallback = true;
    log.note("normalize", "model omitted <normalized> tags; using raw statement");
  }
  log.normalized(normalized, fallback);
  return core::NormalizedStatement{normalized};
}

retrieval::RetrievalOutcome Runner::retrieve(const std::string& statement_text,
                                             Phase phase,
                                             core::TrajectoryBuilder& log) {
  retrieval::Retriever retriever{deps_.gw, deps_.index, budgets_.k_query,
                                 budgets_.top_k, 1};
  auto it = deps_.roles.find(CallKind::general);
  if (it != deps_.roles.end()) retriever.max_attempts = it->second.max_attempts;

  auto queries = retriever.generate_queries(
      deps_.prompts.render("gen_queries",
                           {{"statement", statement_text},
                            {"k_query", std::to_string(budgets_.k_query)}}),
      phase, log);
  auto results = retriever.run_searches(queries, phase, log);

  std::string queries_text;
  for (const auto& q : queries) queries_text += "- " + q.text + "\n";
  auto candidates = retrieval::dedup_hits(results);
  auto prompt = deps_.prompts.render(
      "select_premises",
      {{"statement", statement_text},
       {"queries", queries_text},
       {"candidates", retrieval::render_premises(candidates)}});
  return retriever.select_premises(prompt, queries, results, phase, log);
}

std::vector<Runner::Candidate> Runner::formalize_statement(
    const core::NormalizedStatement& normalized,
    const std::vector<core::Premise>& premises, core::TrajectoryBuilder& log) {
  auto prompt = deps_.prompts.render(
      "formalize", {{"normalized_statement", normalized.text},
                    {"premises", retrieval::render_premises(premises)}});
  auto samples = deps_.gw.sample_n(
      request(CallKind::expert_formalizer, prompt, Phase::StatementSampling),
      budgets_.k_formalizer, log);

  // Identical samples waste judge calls; dedupe before checking.
  std::vector<Candidate> candidates;
  std::set<std::string> seen;
  for (const auto& slot : samples) {
    if (!slot.ok()) {
      log.note("formalize_sample", slot.error);
      continue;
    }
    auto source = extract_lean_block(slot.response->text);
    if (trim(source).empty()) {
      log.note("formalize_sample", "empty candidate");
      continue;
    }
    if (!seen.insert(normalize_source(source)).second) continue;
    Candidate c;
    c.index = static_cast<int>(candidates.size());
    c.source = source;
    candidates.push_back(std::move(c));
  }

  std::vector<leancheck::CheckReport> reports;
  for (auto& c : candidates) {
    log.candidate(c.index, c.source);
    auto report = deps_.checker.check(c.source, leancheck::CheckMode::SorryOk);
    log.candidate_check(c.index, report.ok, report.uses_sorry,
                        leancheck::diagnostics_to_json(report.diagnostics));
    c.compiled = report.ok;
    reports.push_back(std::move(report));
  }

  bool any_compiled = std::any_of(candidates.begin(), candidates.end(),
                                  [](const Candidate& c) { return c.compiled; });
  if (!any_compiled) {
    // One correction chance per failed candidate, general model.
    for (auto& c : candidates) {
      const auto& report = reports[c.index];
      if (!report.has_errors()) continue;
      auto fix_prompt = deps_.prompts.render(
          "statement_fix",
          {{"formal_statement", c.source},
           {"error_blocks",
            leancheck::annotate_errors(c.source, report.diagnostics)}});
      auto text = try_complete(CallKind::general, fix_prompt,
                               Phase::StatementSampling, log, "statement_fix");
      if (!text) continue;
      auto fixed = extract_lean_block(*text);
      auto fixed_report =
          deps_.checker.check(fixed, leancheck::CheckMode::SorryOk);
      log.candidate_fix(c.index, c.source, fixed, fixed_report.ok);
      if (fixed_report.ok) {
        c.source = fixed;
        c.compiled = true;
      }
    }
  }

  std::vector<Candidate> survivors;
  for (const auto& c : candidates)
    if (c.compiled) survivors.push_back(c);
  if (survivors.empty()) throw AllCandidatesFailed();
  return survivors;
}

std::optional<Runner::Candidate> Runner::semantic_check(
    const core::Problem& problem, const core::NormalizedStatement& normalized,
    const Candidate& candidate, const std::vector<core::Premise>& premises,
    core::TrajectoryBuilder& log) {
  auto prompt = deps_.prompts.render(
      "semantic_check",
      {{"informal_statement", problem.informal_statement},
       {"normalized_statement", normalized.text},
       {"premises", retrieval::render_premises(premises)},
       {"formal_statement", candidate.source}});
  auto text = try_complete(CallKind::general, prompt, Phase::SemanticCheck, log,
                           "semantic_check");
  if (!text) {
    log.semantic(candidate.index, "INVALID", std::nullopt, std::nullopt);
    return std::nullopt;
  }

  std::string verdict;
  try {
    verdict = parse_tagged(*text, "verdict");
  } catch (const Error&) {
    // Unparseable or out-of-vocabulary verdicts reject conservatively.
    log.semantic(candidate.index, "INVALID", std::nullopt, std::nullopt);
    return std::nullopt;
  }

  if (verdict == "ALIGNED") {
    log.semantic(candidate.index, "ALIGNED", std::nullopt, std::nullopt);
    return candidate;
  }

  auto tags = collect_tags(*text);
  std::optional<std::string> fixed;
  if (auto it = tags.extracted.find("fixed_formal_statement");
      it != tags.extracted.end() && !trim(it->second).empty())
    fixed = it->second;
  if (!fixed) {
    log.semantic(candidate.index, "NOT_ALIGNED", std::nullopt, false);
    return std::nullopt;
  }
  auto report = deps_.checker.check(*fixed, leancheck::CheckMode::SorryOk);
  log.semantic(candidate.index, "NOT_ALIGNED", fixed, report.ok);
  if (!report.ok) return std::nullopt;
  // A compiling correction is deemed to have passed; it is not re-judged.
  Candidate corrected = candidate;
  corrected.source = *fixed;
  corrected.compiled = true;
  return corrected;
}

core::FormalStatement Runner::select_best(
    const core::NormalizedStatement& normalized,
    const std::vector<Candidate>& aligned, core::TrajectoryBuilder& log) {
  if (aligned.empty()) throw Error("select_best: no candidates");

  if (aligned.size() == 1) {
    // The selection prompt presupposes multiple candidates; skip the call.
    log.selected_statement(aligned[0].index, aligned[0].source, false);
    return core::FormalStatement{aligned[0].source, true, true};
  }

  std::string candidates_text;
  for (size_t i = 0; i < aligned.size(); ++i) {
    candidates_text += "Candidate " + std::to_string(i + 1) + ":\n```lean4\n" +
                       aligned[i].source + "\n```\n\n";
  }
  auto prompt = deps_.prompts.render(
      "select_best", {{"informal_statement", normalized.text},
                      {"candidates", candidates_text}});
  auto text = try_complete(CallKind::general, prompt, Phase::Selection, log,
                           "select_best");

  size_t choice = 0;
  bool fallback = true;
  if (text) {
    try {
      auto selected = parse_tagged(*text, "selected");
      size_t k = static_cast<size_t>(std::stoul(selected));
      if (k >= 1 && k <= aligned.size()) {
        choice = k - 1;
        fallback = false;
      } else {
        log.note("select_best", "selection out of range: " + selected);
      }
    } catch (const Error& e) {
      log.note("select_best", e.what());
    }
  }
  const Candidate& chosen = aligned[choice];
  log.selected_statement(chosen.index, chosen.source, fallback);
  return core::FormalStatement{chosen.source, true, true};
}

// ----------------------------------------------------------------------
// Proof generation stages
// ----------------------------------------------------------------------

Runner::ProveResult Runner::expert_prove(const core::FormalStatement& statement,
                                         core::TrajectoryBuilder& log) {
  auto prompt = deps_.prompts.render(
      "prove", {{"formal_statement", statement.lean_source}});
  auto samples = deps_.gw.sample_n(
      request(CallKind::expert_prover, prompt, Phase::ExpertProving),
      budgets_.k_prover, log);

  ProveResult result;
  std::vector<std::pair<std::string, leancheck::CheckReport>> failures;
  for (size_t i = 0; i < samples.size(); ++i) {
    const auto& slot = samples[i];
    if (!slot.ok()) {
      log.note("prove_sample", slot.error);
      continue;
    }
    auto source = extract_lean_block(slot.response->text);
    auto report = deps_.checker.check(source, leancheck::CheckMode::Strict);
    log.proof_attempt(Phase::ExpertProving, "main", static_cast<int>(i + 1),
                      source, report.ok);
    if (report.ok) {
      result.proof = core::ProofArtifact{source, true};
      result.attempts_used = static_cast<int>(i + 1);
      return result;
    }
    failures.emplace_back(source, std::move(report));
  }

  // All candidates failed: one refinement round per textually distinct
  // failure, stopping at the first success.
  std::set<std::string> seen;
  for (const auto& [source, report] : failures) {
    if (!seen.insert(normalize_source(source)).second) continue;
    auto fixed = refine_proof(source, report, Phase::Refinement, "main", log);
    if (fixed) {
      result.proof = fixed;
      result.attempts_used = static_cast<int>(samples.size());
      result.via_refinement = true;
      return result;
    }
  }
  result.attempts_used = static_cast<int>(samples.size());
  return result;
}

std::string Runner::refine_prompt(
    const std::string& source,
    const std::vector<leancheck::Diagnostic>& diagnostics) const {
  return deps_.prompts.render(
      "refine",
      {{"error_blocks", leancheck::annotate_errors(source, diagnostics)}});
}

std::optional<core::ProofArtifact> Runner::refine_proof(
    const std::string& source, const leancheck::CheckReport& report,
    Phase phase, const std::string& target, core::TrajectoryBuilder& log) {
  if (!report.has_errors()) return std::nullopt;
  auto text = try_complete(CallKind::general,
                           refine_prompt(source, report.diagnostics), phase,
                           log, "refine");
  if (!text) return std::nullopt;
  auto fixed = extract_lean_block(*text);
  auto fixed_report = deps_.checker.check(fixed, leancheck::CheckMode::Strict);
  log.refinement(phase, target, source,
                 leancheck::diagnostics_to_json(report.diagnostics), fixed,
                 fixed_report.ok);
  if (!fixed_report.ok) return std::nullopt;
  return core::ProofArtifact{fixed, true};
}

std::optional<Runner::SketchBundle> Runner::generate_sketch(
    const core::FormalStatement& statement, core::TrajectoryBuilder& log) {
  log.begin_phase(Phase::TheoremRetrieval);
  // Fresh queries come from the formal statement, not the normalized one.
  auto outcome = retrieve(statement.lean_source, Phase::TheoremRetrieval, log);
  auto premises_text = retrieval::render_premises(outcome.selected);

  log.begin_phase(Phase::InformalProof);
  auto informal = try_complete(
      CallKind::general,
      deps_.prompts.render("informal_proof",
                           {{"formal_statement", statement.lean_source},
                            {"premises", premises_text}}),
      Phase::InformalProof, log, "informal_proof");
  if (!informal) return std::nullopt;
  log.informal_proof(Phase::InformalProof, "main", *informal);

  log.begin_phase(Phase::Sketching);
  auto text = try_complete(
      CallKind::general,
      deps_.prompts.render("sketch",
                           {{"formal_statement", statement.lean_source},
                            {"premises", premises_text},
                            {"informal_proof", *informal}}),
      Phase::Sketching, log, "sketch");
  if (!text) return std::nullopt;
  auto source = extract_lean_block(*text);
  auto report = deps_.checker.check(source, leancheck::CheckMode::SorryOk);
  log.sketch(source, report.ok, 1);

  if (!report.ok) {
    if (!report.has_errors()) return std::nullopt;
    auto fix_text = try_complete(
        CallKind::general,
        deps_.prompts.render(
            "sketch_fix",
            {{"sketch", source},
             {"error_blocks",
              leancheck::annotate_errors(source, report.diagnostics)}}),
        Phase::Sketching, log, "sketch_fix");
    if (!fix_text) return std::nullopt;
    auto fixed = extract_lean_block(*fix_text);
    auto fixed_report =
        deps_.checker.check(fixed, leancheck::CheckMode::SorryOk);
    log.sketch(fixed, fixed_report.ok, 2);
    if (!fixed_report.ok) return std::nullopt;
    source = fixed;
  }

  SketchBundle bundle;
  bundle.informal = core::InformalProof{*informal};
  bundle.sketch = core::Sketch{source, true, 0};
  bundle.premises = std::move(outcome);
  return bundle;
}

std::vector<core::Subgoal> Runner::extract_subgoals(
    const core::Sketch& sketch, core::TrajectoryBuilder& log) {
  auto text = try_complete(
      CallKind::general,
      deps_.prompts.render("extract_subgoals", {{"sketch", sketch.lean_source}}),
      Phase::Sketching, log, "extract_subgoals");
  std::vector<core::Subgoal> out;
  if (!text) return out;
  for (const auto& block : extract_all_lean_blocks(*text)) {
    auto lemma = trim(block);
    if (lemma.empty()) continue;
    auto report = deps_.checker.check(lemma, leancheck::CheckMode::SorryOk);
    if (report.ok) {
      int index = static_cast<int>(out.size());
      log.subgoal(index, lemma, true);
      out.push_back(core::Subgoal{index, lemma, core::SubgoalStatus::pending,
                                  std::nullopt});
    } else {
      // Does not compile standalone: dropped, count decremented.
      log.subgoal(-1, lemma, false);
    }
  }
  return out;
}

core::SubgoalStatus Runner::solve_one(core::Subgoal& subgoal,
                                      const std::vector<core::Premise>& premises,
                                      std::atomic<bool>& stop,
                                      core::TrajectoryBuilder& log) {
  const std::string target = core::subgoal_target(subgoal.index);
  auto stopped = [&] { return stop.load(std::memory_order_relaxed); };

  if (stopped()) return core::SubgoalStatus::cancelled;

  // 1. expert pass@k_prover
  auto prompt = deps_.prompts.render(
      "prove", {{"formal_statement", subgoal.lemma_source}});
  auto samples = deps_.gw.sample_n(
      request(CallKind::expert_prover, prompt, Phase::SubgoalSolving),
      budgets_.k_prover, log);
  std::vector<std::pair<std::string, leancheck::CheckReport>> failures;
  for (size_t i = 0; i < samples.size(); ++i) {
    if (stopped()) return core::SubgoalStatus::cancelled;
    const auto& slot = samples[i];
    if (!slot.ok()) {
      log.note("subgoal_prove_sample", slot.error);
      continue;
    }
    auto source = extract_lean_block(slot.response->text);
    auto report = deps_.checker.check(source, leancheck::CheckMode::Strict);
    log.proof_attempt(Phase::SubgoalSolving, target, static_cast<int>(i + 1),
                      source, report.ok);
    if (report.ok) {
      subgoal.proof = core::ProofArtifact{source, true};
      return core::SubgoalStatus::solved;
    }
    failures.emplace_back(source, std::move(report));
  }

  // 2. one refinement chance on the first annotatable failure
  for (const auto& [source, report] : failures) {
    if (!report.has_errors()) continue;
    if (stopped()) return core::SubgoalStatus::cancelled;
    auto fixed = refine_proof(source, report, Phase::SubgoalSolving, target, log);
    if (fixed) {
      subgoal.proof = fixed;
      return core::SubgoalStatus::solved;
    }
    break;
  }

  // 3. general-model informal proof, then a formal attempt from it
  if (stopped()) return core::SubgoalStatus::cancelled;
  auto premises_text = retrieval::render_premises(premises);
  auto informal = try_complete(
      CallKind::general,
      deps_.prompts.render("subgoal_informal",
                           {{"formal_statement", subgoal.lemma_source},
                            {"premises", premises_text}}),
      Phase::SubgoalSolving, log, "subgoal_informal");
  if (informal) log.informal_proof(Phase::SubgoalSolving, target, *informal);

  if (stopped()) return core::SubgoalStatus::cancelled;
  std::optional<std::pair<std::string, leancheck::CheckReport>> current;
  auto attempt_text = try_complete(
      CallKind::general,
      deps_.prompts.render("subgoal_formal",
                           {{"formal_statement", subgoal.lemma_source},
                            {"informal_proof", informal.value_or("")},
                            {"premises", premises_text}}),
      Phase::SubgoalSolving, log, "subgoal_formal");
  if (attempt_text) {
    auto source = extract_lean_block(*attempt_text);
    auto report = deps_.checker.check(source, leancheck::CheckMode::Strict);
    log.proof_attempt(Phase::SubgoalSolving, target, -1, source, report.ok);
    if (report.ok) {
      subgoal.proof = core::ProofArtifact{source, true};
      return core::SubgoalStatus::solved;
    }
    current = {source, std::move(report)};
  }

  // 4. up to k_refine chained fixes of the latest failed attempt
  for (int round = 0; round < budgets_.k_refine && current; ++round) {
    if (stopped()) return core::SubgoalStatus::cancelled;
    const auto& [source, report] = *current;
    if (!report.has_errors()) break;
    auto text = try_complete(CallKind::general,
                             refine_prompt(source, report.diagnostics),
                             Phase::SubgoalSolving, log, "subgoal_refine");
    if (!text) break;
    auto fixed = extract_lean_block(*text);
    auto fixed_report =
        deps_.checker.check(fixed, leancheck::CheckMode::Strict);
    log.refinement(Phase::SubgoalSolving, target, source,
                   leancheck::diagnostics_to_json(report.diagnostics), fixed,
                   fixed_report.ok);
    if (fixed_report.ok) {
      subgoal.proof = core::ProofArtifact{fixed, true};
      return core::SubgoalStatus::solved;
    }
    current = {fixed, std::move(fixed_report)};
  }

  return core::SubgoalStatus::failed;
}

void Runner::solve_subgoals(std::vector<core::Subgoal>& subgoals,
                            const std::vector<core::Premise>& premises,
                            core::TrajectoryBuilder& log) {
  if (subgoals.empty()) return;
  std::atomic<bool> stop{false};
  std::atomic<size_t> next{0};

  auto worker = [&] {
    while (true) {
      size_t i = next.fetch_add(1);
      if (i >= subgoals.size()) return;
      core::Subgoal& sg = subgoals[i];
      core::SubgoalStatus status;
      if (stop.load()) {
        status = core::SubgoalStatus::cancelled;
      } else {
        status = solve_one(sg, premises, stop, log);
        if (status == core::SubgoalStatus::failed) {
          // First definitive failure wins; a concurrent loser is cancelled.
          bool expected = false;
          if (!stop.compare_exchange_strong(expected, true))
            status = core::SubgoalStatus::cancelled;
        }
      }
      sg.status = status;
      log.subgoal_result(sg.index, status,
                         sg.proof ? std::optional<std::string>(
                                        sg.proof->lean_source)
                                  : std::nullopt);
    }
  };

  int width = std::max(1, budgets_.max_parallel_subgoals);
  if (width == 1) {
    worker();  // serial schedule: index order, deterministic
    return;
  }
  std::vector<std::thread> pool;
  int threads = std::min<int>(width, static_cast<int>(subgoals.size()));
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

std::optional<core::ProofArtifact> Runner::assemble_proof(
    const core::Sketch& sketch, const std::vector<core::Subgoal>& solved,
    core::TrajectoryBuilder& log) {
  std::string subproofs;
  for (const auto& sg : solved) {
    if (!sg.proof) throw Error("assemble_proof: unsolved subgoal");
    subproofs += "```lean4\n" + sg.proof->lean_source + "\n```\n\n";
  }
  auto text = try_complete(
      CallKind::general,
      deps_.prompts.render("assemble", {{"sketch", sketch.lean_source},
                                        {"subproofs", subproofs}}),
      Phase::Assembly, log, "assemble");
  if (!text) return std::nullopt;
  auto source = extract_lean_block(*text);
  auto report = deps_.checker.check(source, leancheck::CheckMode::Strict);
  log.assembly(source, report.ok, 1);
  if (report.ok) return core::ProofArtifact{source, true};

  if (!report.has_errors()) return std::nullopt;
  auto fix_text = try_complete(
      CallKind::general,
      deps_.prompts.render(
          "assemble_fix",
          {{"formal_statement", source},
           {"error_blocks",
            leancheck::annotate_errors(source, report.diagnostics)}}),
      Phase::Assembly, log, "assemble_fix");
  if (!fix_text) return std::nullopt;
  auto fixed = extract_lean_block(*fix_text);
  auto fixed_report = deps_.checker.check(fixed, leancheck::CheckMode::Strict);
  // Proof-level fix at the Strict bar: record the correction pair.
  log.refinement(Phase::Assembly, "assembly", source,
                 leancheck::diagnostics_to_json(report.diagnostics), fixed,
                 fixed_report.ok);
  log.assembly(fixed, fixed_report.ok, 2);
  if (!fixed_report.ok) return std::nullopt;
  return core::ProofArtifact{fixed, true};
}

// ----------------------------------------------------------------------
// Full runs
// ----------------------------------------------------------------------

void Runner::run_agentic(const core::Problem& problem,
                         core::TrajectoryBuilder& log) {
  log.begin_phase(Phase::Normalization);
  auto normalized = normalize_statement(problem, log);

  log.begin_phase(Phase::DefinitionRetrieval);
  auto def_retrieval =
      retrieve(normalized.text, Phase::DefinitionRetrieval, log);

  log.begin_phase(Phase::StatementSampling);
  std::vector<Candidate> survivors;
  try {
    survivors = formalize_statement(normalized, def_retrieval.selected, log);
  } catch (const AllCandidatesFailed& e) {
    log.note("formalize", e.what());
    log.outcome(core::Outcome::failed);
    return;
  }

  log.begin_phase(Phase::SemanticCheck);
  std::vector<Candidate> aligned;
  for (const auto& c : survivors) {
    auto kept =
        semantic_check(problem, normalized, c, def_retrieval.selected, log);
    if (kept) aligned.push_back(*kept);
  }
  if (aligned.empty()) {
    log.note("semantic_check", "no candidate passed the semantic check");
    log.outcome(core::Outcome::failed);
    return;
  }

  log.begin_phase(Phase::Selection);
  auto statement = select_best(normalized, aligned, log);

  log.begin_phase(Phase::ExpertProving);
  auto prove_result = expert_prove(statement, log);
  if (prove_result.proof) {
    log.begin_phase(Phase::Verification);
    log.outcome(core::Outcome::proof_found_unverified);
    return;
  }

  auto bundle = generate_sketch(statement, log);
  if (!bundle) {
    log.note("sketch", "no compilable sketch");
    log.outcome(core::Outcome::statement_only);
    return;
  }

  auto subgoals = extract_subgoals(bundle->sketch, log);
  if (subgoals.empty()) {
    log.note("extract_subgoals", "no subgoal compiled standalone");
    log.outcome(core::Outcome::statement_only);
    return;
  }
  bundle->sketch.subgoal_count = static_cast<int>(subgoals.size());

  log.begin_phase(Phase::SubgoalSolving);
  solve_subgoals(subgoals, bundle->premises.selected, log);
  bool all_solved =
      std::all_of(subgoals.begin(), subgoals.end(), [](const core::Subgoal& s) {
        return s.status == core::SubgoalStatus::solved;
      });
  if (!all_solved) {
    log.outcome(core::Outcome::statement_only);
    return;
  }

  log.begin_phase(Phase::Assembly);
  auto assembled = assemble_proof(bundle->sketch, subgoals, log);
  if (!assembled) {
    log.outcome(core::Outcome::statement_only);
    return;
  }

  log.begin_phase(Phase::Verification);
  log.outcome(core::Outcome::proof_found_unverified);
}

void Runner::run_baseline(const core::Problem& problem,
                          core::TrajectoryBuilder& log) {
  // Expert models only: no normalization, retrieval, semantic repair,
  // refinement, or sketching.
  log.begin_phase(Phase::StatementSampling);
  auto prompt = deps_.prompts.render(
      "formalize", {{"normalized_statement", problem.informal_statement},
                    {"premises", ""}});
  auto samples = deps_.gw.sample_n(
      request(CallKind::expert_formalizer, prompt, Phase::StatementSampling),
      budgets_.k_formalizer, log);

  std::optional<Candidate> first_compiling;
  int index = 0;
  for (const auto& slot : samples) {
    if (!slot.ok()) {
      log.note("formalize_sample", slot.error);
      continue;
    }
    auto source = extract_lean_block(slot.response->text);
    if (trim(source).empty()) continue;
    log.candidate(index, source);
    auto report = deps_.checker.check(source, leancheck::CheckMode::SorryOk);
    log.candidate_check(index, report.ok, report.uses_sorry,
                        leancheck::diagnostics_to_json(report.diagnostics));
    if (report.ok && !first_compiling)
      first_compiling = Candidate{index, source, true};
    ++index;
  }
  if (!first_compiling) {
    log.outcome(core::Outcome::failed);
    return;
  }

  log.begin_phase(Phase::Selection);
  log.selected_statement(first_compiling->index, first_compiling->source,
                         false);

  log.begin_phase(Phase::ExpertProving);
  auto prove_prompt = deps_.prompts.render(
      "prove", {{"formal_statement", first_compiling->source}});
  auto prove_samples = deps_.gw.sample_n(
      request(CallKind::expert_prover, prove_prompt, Phase::ExpertProving),
      budgets_.k_prover, log);
  for (size_t i = 0; i < prove_samples.size(); ++i) {
    const auto& slot = prove_samples[i];
    if (!slot.ok()) {
      log.note("prove_sample", slot.error);
      continue;
    }
    auto source = extract_lean_block(slot.response->text);
    auto report = deps_.checker.check(source, leancheck::CheckMode::Strict);
    log.proof_attempt(Phase::ExpertProving, "main", static_cast<int>(i + 1),
                      source, report.ok);
    if (report.ok) {
      log.begin_phase(Phase::Verification);
      log.outcome(core::Outcome::proof_found_unverified);
      return;
    }
  }
  log.outcome(core::Outcome::statement_only);
}

}  // namespace proofmill::pipeline
