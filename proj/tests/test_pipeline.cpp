#include <doctest.h>

#include <set>

#include "../tests/support/scripted.hpp"
#include "proofmill/pipeline.hpp"
#include "proofmill/trajectory_view.hpp"

using namespace proofmill;
using core::CallKind;
using core::Phase;
using pipeline::Budgets;
using pipeline::Mode;
using pipeline::Runner;
using scripted::any_rule;
using scripted::make_harness;
using scripted::rule;

TEST_SUITE_BEGIN("pipeline");

// ----------------------------------------------------------------------
// Output-contract parsing
// ----------------------------------------------------------------------

TEST_CASE("parse_tagged extracts known tags") {
  CHECK(pipeline::parse_tagged("<verdict>ALIGNED</verdict>", "verdict") ==
        "ALIGNED");
  CHECK(pipeline::parse_tagged("pre <selected>2</selected> post", "selected") ==
        "2");
  CHECK(pipeline::parse_tagged("<normalized>\n  x = 1\n</normalized>",
                               "normalized") == "x = 1");
}

TEST_CASE("parse_tagged enforces the verdict vocabulary") {
  CHECK_THROWS_AS(
      pipeline::parse_tagged("<verdict>MAYBE</verdict>", "verdict"),
      InvalidVerdict);
  CHECK(pipeline::parse_tagged("<verdict> NOT_ALIGNED </verdict>", "verdict") ==
        "NOT_ALIGNED");
}

TEST_CASE("parse_tagged enforces positive integer selections") {
  CHECK_THROWS_AS(pipeline::parse_tagged("<selected>zero</selected>",
                                         "selected"),
                  InvalidSelection);
  CHECK_THROWS_AS(pipeline::parse_tagged("<selected>0</selected>", "selected"),
                  InvalidSelection);
}

TEST_CASE("parse_tagged reports missing tags") {
  CHECK_THROWS_AS(pipeline::parse_tagged("no tags", "verdict"), TagMissing);
  CHECK_THROWS_AS(pipeline::parse_tagged("<verdict>ALIGNED", "verdict"),
                  TagMissing);
  CHECK_THROWS_AS(pipeline::parse_tagged("x", "unknown_tag"), Error);
}

TEST_CASE("fixed_formal_statement strips an inner lean fence") {
  std::string out =
      "<fixed_formal_statement>\n```lean4\ntheorem t : True := by "
      "sorry\n```\n</fixed_formal_statement>";
  CHECK(pipeline::parse_tagged(out, "fixed_formal_statement") ==
        "theorem t : True := by sorry");
}

TEST_CASE("extract_lean_block takes the last fence") {
  CHECK(pipeline::extract_lean_block("```lean4\nfirst\n```") == "first");
  // oracle: scanning all fences and taking the last one
  std::string two = "prose\n```lean4\nfirst\n```\nmore\n```lean\nsecond\n```";
  auto all = pipeline::extract_all_lean_blocks(two);
  REQUIRE(all.size() == 2);
  CHECK(pipeline::extract_lean_block(two) == all.back());
  CHECK(all.back() == "second");
}

TEST_CASE("extract_lean_block falls back to trimmed raw text") {
  CHECK(pipeline::extract_lean_block("  theorem t : True := trivial \n") ==
        "theorem t : True := trivial");
  // non-lean fences are ignored by the scanner, so fallback applies
  CHECK(pipeline::extract_lean_block("```python\nx\n```") ==
        "```python\nx\n```");
}

TEST_CASE("collect_tags gathers only the tags that parse cleanly") {
  std::string raw =
      "<analysis>thinking</analysis>\n<verdict>MAYBE</verdict>\n"
      "<selected>2</selected>";
  auto tags = pipeline::collect_tags(raw);
  CHECK(tags.raw == raw);
  CHECK(tags.extracted.count("analysis") == 1);
  CHECK(tags.extracted.at("selected") == "2");
  CHECK(tags.extracted.count("verdict") == 0);  // invalid vocabulary
  CHECK(tags.extracted.count("normalized") == 0);
}

TEST_CASE("normalize_source collapses whitespace") {
  CHECK(pipeline::normalize_source("a  b\n\tc ") == "a b c");
  CHECK(pipeline::normalize_source(" a b ") ==
        pipeline::normalize_source("a\nb"));
}

// ----------------------------------------------------------------------
// Statement stages
// ----------------------------------------------------------------------

namespace {
core::Problem problem(const std::string& id, const std::string& text) {
  core::Problem p;
  p.id = id;
  p.informal_statement = text;
  return p;
}
}  // namespace

TEST_CASE("normalize_statement parses the tag and falls back") {
  auto h = make_harness(
      {rule(Phase::Normalization, "", "<normalized>x equals 1</normalized>"),
       rule(Phase::Normalization, "", "no tags in this reply")},
      {}, {});
  Runner runner(h.deps(), Budgets{}, Mode::agentic);

  core::TrajectoryBuilder log1("p1");
  auto s1 = runner.normalize_statement(problem("p1", "What is x?"), log1);
  CHECK(s1.text == "x equals 1");
  CHECK_FALSE(log1.trajectory().events.back().data.value("fallback", true));

  core::TrajectoryBuilder log2("p2");
  auto s2 = runner.normalize_statement(problem("p2", "Already declarative."),
                                       log2);
  CHECK(s2.text == "Already declarative.");  // raw statement fallback
  bool logged = false;
  for (const auto& e : log2.trajectory().events)
    if (e.kind == core::event::kNormalized && e.data.value("fallback", false))
      logged = true;
  CHECK(logged);
}

namespace {
const char* kGood0 = "theorem cand_a : 1 = 1 := by sorry";
const char* kGood1 = "theorem cand_b : 2 = 2 := by sorry";
const char* kBad0 = "theorem cand_c : 3 = 3 := by CANDBAD0";
const char* kBad1 = "theorem cand_d : 4 = 4 := by CANDBAD1";

std::vector<leancheck::MockCheckRule> cand_checker_rules() {
  std::vector<leancheck::MockCheckRule> rules;
  for (const char* marker : {"CANDBAD0", "CANDBAD1", "BADPROOF", "FIXFAIL"}) {
    leancheck::MockCheckRule r;
    r.contains = marker;
    leancheck::Diagnostic d;
    d.message = std::string("unknown tactic '") + marker + "'";
    d.start_line = 1;
    d.start_col = 1;
    r.diagnostics = {d};
    rules.push_back(r);
  }
  return rules;
}

std::string fenced(const std::string& src) {
  return "```lean4\n" + src + "\n```";
}
}  // namespace

TEST_CASE("formalize_statement: two of four compile, no fix round") {
  auto h = make_harness({},
                        {any_rule(fenced(kGood0)), any_rule(fenced(kBad0)),
                         any_rule(fenced(kGood1)), any_rule(fenced(kBad1))},
                        {}, cand_checker_rules());
  Runner runner(h.deps(), Budgets{}, Mode::agentic);
  core::TrajectoryBuilder log("p");
  log.begin_phase(Phase::StatementSampling);
  auto survivors =
      runner.formalize_statement(core::NormalizedStatement{"s"}, {}, log);
  REQUIRE(survivors.size() == 2);
  CHECK(survivors[0].source == kGood0);
  CHECK(survivors[1].source == kGood1);
  // no general fix calls were made
  CHECK(h.general->rules_consumed() == 0);
}

TEST_CASE("formalize_statement: all fail, one fix repairs one") {
  auto h = make_harness(
      {rule(Phase::StatementSampling, "CANDBAD0", fenced(kGood0)),
       rule(Phase::StatementSampling, "CANDBAD1", fenced("still " ) )},
      {any_rule(fenced(kBad0)), any_rule(fenced(kBad0)),
       any_rule(fenced(kBad1)), any_rule(fenced(kBad1))},
      {}, cand_checker_rules());
  // second fix returns text that trims to something compiling? make it fail:
  Runner runner(h.deps(), Budgets{}, Mode::agentic);
  core::TrajectoryBuilder log("p");
  log.begin_phase(Phase::StatementSampling);
  auto survivors =
      runner.formalize_statement(core::NormalizedStatement{"s"}, {}, log);
  // four samples dedupe to two distinct candidates, both failing; each gets
  // one correction chance and the first one compiles after its fix
  REQUIRE(survivors.size() >= 1);
  CHECK(survivors[0].source == kGood0);
  CHECK(h.general->rules_consumed() == 2);
}

TEST_CASE("formalize_statement: total failure raises AllCandidatesFailed") {
  auto h = make_harness(
      {rule(Phase::StatementSampling, "", fenced(kBad1)),
       rule(Phase::StatementSampling, "", fenced(kBad1))},
      {any_rule(fenced(kBad0)), any_rule(fenced(kBad0)),
       any_rule(fenced(kBad1)), any_rule(fenced(kBad1))},
      {}, cand_checker_rules());
  Runner runner(h.deps(), Budgets{}, Mode::agentic);
  core::TrajectoryBuilder log("p");
  log.begin_phase(Phase::StatementSampling);
  CHECK_THROWS_AS(
      runner.formalize_statement(core::NormalizedStatement{"s"}, {}, log),
      AllCandidatesFailed);
}

TEST_CASE("formalize_statement: empty samples raise AllCandidatesFailed") {
  auto h = make_harness({}, {any_rule(""), any_rule(""), any_rule(""),
                             any_rule("")},
                        {});
  Runner runner(h.deps(), Budgets{}, Mode::agentic);
  core::TrajectoryBuilder log("p");
  log.begin_phase(Phase::StatementSampling);
  CHECK_THROWS_AS(
      runner.formalize_statement(core::NormalizedStatement{"s"}, {}, log),
      AllCandidatesFailed);
}

TEST_CASE("semantic_check verdicts") {
  Runner::Candidate cand{0, kGood0, true};
  auto normalized = core::NormalizedStatement{"n"};

  SUBCASE("ALIGNED keeps the candidate unchanged") {
    auto h = make_harness({any_rule("<verdict>ALIGNED</verdict>")}, {}, {});
    Runner runner(h.deps(), Budgets{}, Mode::agentic);
    core::TrajectoryBuilder log("p");
    log.begin_phase(Phase::SemanticCheck);
    auto kept = runner.semantic_check(problem("p", "i"), normalized, cand, {},
                                      log);
    REQUIRE(kept.has_value());
    CHECK(kept->source == kGood0);
  }

  SUBCASE("NOT_ALIGNED with a compiling fix passes corrected") {
    std::string reply =
        "<verdict>NOT_ALIGNED</verdict>\n<fixed_formal_statement>\n" +
        fenced(kGood1) + "\n</fixed_formal_statement>";
    auto h = make_harness({any_rule(reply)}, {}, {});
    Runner runner(h.deps(), Budgets{}, Mode::agentic);
    core::TrajectoryBuilder log("p");
    log.begin_phase(Phase::SemanticCheck);
    auto kept = runner.semantic_check(problem("p", "i"), normalized, cand, {},
                                      log);
    REQUIRE(kept.has_value());
    CHECK(kept->source == kGood1);
  }

  SUBCASE("NOT_ALIGNED with a non-compiling fix rejects") {
    std::string reply =
        "<verdict>NOT_ALIGNED</verdict>\n<fixed_formal_statement>\n" +
        fenced(kBad0) + "\n</fixed_formal_statement>";
    auto h = make_harness({any_rule(reply)}, {}, {}, cand_checker_rules());
    Runner runner(h.deps(), Budgets{}, Mode::agentic);
    core::TrajectoryBuilder log("p");
    log.begin_phase(Phase::SemanticCheck);
    CHECK_FALSE(runner.semantic_check(problem("p", "i"), normalized, cand, {},
                                      log)
                    .has_value());
  }

  SUBCASE("invalid verdict rejects conservatively") {
    auto h = make_harness({any_rule("<verdict>MAYBE</verdict>")}, {}, {});
    Runner runner(h.deps(), Budgets{}, Mode::agentic);
    core::TrajectoryBuilder log("p");
    log.begin_phase(Phase::SemanticCheck);
    CHECK_FALSE(runner.semantic_check(problem("p", "i"), normalized, cand, {},
                                      log)
                    .has_value());
  }
}

TEST_CASE("select_best") {
  std::vector<Runner::Candidate> three = {
      {0, kGood0, true}, {1, kGood1, true}, {2, "theorem cand_e : 5 = 5 := by sorry", true}};
  auto normalized = core::NormalizedStatement{"n"};

  SUBCASE("selection index is honored") {
    auto h = make_harness(
        {any_rule("<analysis>b</analysis><selected>2</selected>")}, {}, {});
    Runner runner(h.deps(), Budgets{}, Mode::agentic);
    core::TrajectoryBuilder log("p");
    log.begin_phase(Phase::Selection);
    auto chosen = runner.select_best(normalized, three, log);
    CHECK(chosen.lean_source == kGood1);
  }

  SUBCASE("out-of-range selection falls back to the first, logged") {
    auto h = make_harness({any_rule("<selected>9</selected>")}, {}, {});
    Runner runner(h.deps(), Budgets{}, Mode::agentic);
    core::TrajectoryBuilder log("p");
    log.begin_phase(Phase::Selection);
    auto chosen = runner.select_best(normalized, three, log);
    CHECK(chosen.lean_source == kGood0);
    bool fallback = false;
    for (const auto& e : log.trajectory().events)
      if (e.kind == core::event::kSelectedStatement)
        fallback = e.data.value("fallback", false);
    CHECK(fallback);
  }

  SUBCASE("single candidate skips the model call") {
    auto h = make_harness({}, {}, {});
    Runner runner(h.deps(), Budgets{}, Mode::agentic);
    core::TrajectoryBuilder log("p");
    log.begin_phase(Phase::Selection);
    auto chosen = runner.select_best(normalized, {three[0]}, log);
    CHECK(chosen.lean_source == kGood0);
    CHECK(h.general->rules_consumed() == 0);
  }
}

// ----------------------------------------------------------------------
// Proof stages
// ----------------------------------------------------------------------

namespace {
const char* kStatement = "theorem main_t : 1 + 1 = 2 := by sorry";
const char* kProofGood = "theorem main_t : 1 + 1 = 2 := by norm_num";
const char* kProofBad = "theorem main_t : 1 + 1 = 2 := by BADPROOF";
const char* kProofFixFail = "theorem main_t : 1 + 1 = 2 := by FIXFAIL";

core::FormalStatement aligned_statement() {
  return core::FormalStatement{kStatement, true, true};
}
}  // namespace

TEST_CASE("expert_prove: first sample verifies, all samples invoked") {
  auto h = make_harness({}, {},
                        {any_rule(fenced(kProofGood)), any_rule(fenced(kProofBad)),
                         any_rule(fenced(kProofBad)), any_rule(fenced(kProofBad))},
                        cand_checker_rules());
  Runner runner(h.deps(), Budgets{}, Mode::agentic);
  core::TrajectoryBuilder log("p");
  log.begin_phase(Phase::ExpertProving);
  auto result = runner.expert_prove(aligned_statement(), log);
  REQUIRE(result.proof.has_value());
  CHECK(result.attempts_used == 1);
  CHECK_FALSE(result.via_refinement);
  auto stage = result.stage();
  CHECK(stage.success);
  CHECK(stage.phase == Phase::ExpertProving);
  CHECK(stage.attempts_used == 1);
  // all four samples were invoked and paid for
  CHECK(gateway::count_expert_calls(log.trajectory().usage()) == 4);
}

TEST_CASE("expert_prove: refinement round fixes a distinct failure") {
  auto h = make_harness(
      {rule(Phase::Refinement, "BADPROOF", fenced(kProofGood))}, {},
      {any_rule(fenced(kProofBad)), any_rule(fenced(kProofBad)),
       any_rule(fenced(kProofBad)), any_rule(fenced(kProofBad))},
      cand_checker_rules());
  Runner runner(h.deps(), Budgets{}, Mode::agentic);
  core::TrajectoryBuilder log("p");
  log.begin_phase(Phase::ExpertProving);
  auto result = runner.expert_prove(aligned_statement(), log);
  REQUIRE(result.proof.has_value());
  CHECK(result.via_refinement);
  CHECK(result.stage().phase == Phase::Refinement);
  // four identical failures dedupe to one refinement call
  CHECK(h.general->rules_consumed() == 1);
}

TEST_CASE("expert_prove: everything fails routes to the sketch path") {
  auto h = make_harness(
      {rule(Phase::Refinement, "BADPROOF", fenced(kProofFixFail))}, {},
      {any_rule(fenced(kProofBad)), any_rule(fenced(kProofBad)),
       any_rule(fenced(kProofBad)), any_rule(fenced(kProofBad))},
      cand_checker_rules());
  Runner runner(h.deps(), Budgets{}, Mode::agentic);
  core::TrajectoryBuilder log("p");
  log.begin_phase(Phase::ExpertProving);
  auto result = runner.expert_prove(aligned_statement(), log);
  CHECK_FALSE(result.proof.has_value());
}

TEST_CASE("refine_proof is stateless: prompt bytes depend only on (R_F, E)") {
  auto h = make_harness({}, {}, {});
  Runner runner(h.deps(), Budgets{}, Mode::agentic);

  leancheck::Diagnostic d;
  d.severity = leancheck::Severity::error;
  d.start_line = 1;
  d.start_col = 34;
  d.end_line = 1;
  d.end_col = 34;
  d.message = "type mismatch\n  h has type A but is expected to have type B";

  auto p1 = runner.refine_prompt(kProofBad, {d});
  auto p2 = runner.refine_prompt(kProofBad, {d});
  CHECK(p1 == p2);
  // the annotated snippet inside the prompt strips back to the source
  CHECK(p1.find("<error>") != std::string::npos);
  auto strip = [](std::string s) {
    for (const char* m : {"<error>", "</error>"}) {
      size_t pos;
      while ((pos = s.find(m)) != std::string::npos) s.erase(pos, strlen(m));
    }
    return s;
  };
  CHECK(strip(p1).find(kProofBad) != std::string::npos);

  // different diagnostics produce a different prompt
  leancheck::Diagnostic d2 = d;
  d2.message = "unsolved goals";
  CHECK(runner.refine_prompt(kProofBad, {d2}) != p1);
}

TEST_CASE("refine_proof records a correction pair on success") {
  auto h = make_harness(
      {rule(Phase::Refinement, "BADPROOF", fenced(kProofGood))}, {}, {},
      cand_checker_rules());
  Runner runner(h.deps(), Budgets{}, Mode::agentic);
  core::TrajectoryBuilder log("p");
  log.begin_phase(Phase::Refinement);

  auto report = h.checker->check(kProofBad, leancheck::CheckMode::Strict);
  REQUIRE_FALSE(report.ok);
  auto fixed =
      runner.refine_proof(kProofBad, report, Phase::Refinement, "main", log);
  REQUIRE(fixed.has_value());
  CHECK(fixed->verified);
  CHECK(fixed->lean_source == kProofGood);

  // the event carries the pair for decoupled extraction
  bool found = false;
  for (const auto& e : log.trajectory().events)
    if (e.kind == core::event::kRefinement && e.data.value("ok", false)) {
      CHECK(e.data.value("original", "") == kProofBad);
      CHECK(e.data.value("fixed", "") == kProofGood);
      found = true;
    }
  CHECK(found);
}

TEST_CASE("refine_proof with a non-compiling fix returns absent") {
  auto h = make_harness(
      {rule(Phase::Refinement, "BADPROOF", fenced(kProofFixFail))}, {}, {},
      cand_checker_rules());
  Runner runner(h.deps(), Budgets{}, Mode::agentic);
  core::TrajectoryBuilder log("p");
  log.begin_phase(Phase::Refinement);
  auto report = h.checker->check(kProofBad, leancheck::CheckMode::Strict);
  CHECK_FALSE(runner.refine_proof(kProofBad, report, Phase::Refinement, "main",
                                  log)
                  .has_value());
}

TEST_CASE("refine_proof skips reports without error diagnostics") {
  auto h = make_harness({}, {}, {});
  Runner runner(h.deps(), Budgets{}, Mode::agentic);
  core::TrajectoryBuilder log("p");
  log.begin_phase(Phase::Refinement);
  // a sorry-only Strict failure has no error diagnostics to annotate
  auto report = h.checker->check(kStatement, leancheck::CheckMode::Strict);
  REQUIRE_FALSE(report.ok);
  CHECK_FALSE(runner.refine_proof(kStatement, report, Phase::Refinement,
                                  "main", log)
                  .has_value());
  CHECK(h.general->rules_consumed() == 0);
}

// ----------------------------------------------------------------------
// Sketch path
// ----------------------------------------------------------------------

namespace {
std::string sketch_source() {
  return "theorem main_t : 1 + 1 = 2 := by\n"
         "  have stp_one : 1 + 1 = 2 := by sorry\n"
         "  have stp_two : (2 : Nat) = 2 := by sorry\n"
         "  exact stp_one";
}

std::vector<gateway::MockRule> sketch_general_rules(bool first_sketch_ok,
                                                    bool fix_ok) {
  std::vector<gateway::MockRule> rules;
  rules.push_back(rule(Phase::TheoremRetrieval, "", "1. no useful query"));
  rules.push_back(rule(Phase::InformalProof, "", "1. Compute both sides."));
  std::string first =
      first_sketch_ok ? fenced(sketch_source())
                      : fenced("theorem main_t : 1 + 1 = 2 := by BADPROOF");
  rules.push_back(rule(Phase::Sketching, "main_t", first));
  if (!first_sketch_ok) {
    std::string fix = fix_ok ? fenced(sketch_source())
                             : fenced("theorem main_t : 1 = 1 := by FIXFAIL");
    rules.push_back(rule(Phase::Sketching, "BADPROOF", fix));
  }
  return rules;
}
}  // namespace

TEST_CASE("generate_sketch: compiling sketch on the first attempt") {
  auto h = make_harness(sketch_general_rules(true, false), {}, {},
                        cand_checker_rules());
  Runner runner(h.deps(), Budgets{}, Mode::agentic);
  core::TrajectoryBuilder log("p");
  log.begin_phase(Phase::ExpertProving);
  auto bundle = runner.generate_sketch(aligned_statement(), log);
  REQUIRE(bundle.has_value());
  CHECK(bundle->sketch.compiled);
  CHECK(bundle->informal.text == "1. Compute both sides.");
}

TEST_CASE("generate_sketch: failing sketch is fixed once") {
  auto h = make_harness(sketch_general_rules(false, true), {}, {},
                        cand_checker_rules());
  Runner runner(h.deps(), Budgets{}, Mode::agentic);
  core::TrajectoryBuilder log("p");
  log.begin_phase(Phase::ExpertProving);
  auto bundle = runner.generate_sketch(aligned_statement(), log);
  REQUIRE(bundle.has_value());
  int sketch_events = 0;
  for (const auto& e : log.trajectory().events)
    if (e.kind == core::event::kSketch) ++sketch_events;
  CHECK(sketch_events == 2);
}

TEST_CASE("generate_sketch: both attempts failing is a sketch failure") {
  auto h = make_harness(sketch_general_rules(false, false), {}, {},
                        cand_checker_rules());
  Runner runner(h.deps(), Budgets{}, Mode::agentic);
  core::TrajectoryBuilder log("p");
  log.begin_phase(Phase::ExpertProving);
  CHECK_FALSE(runner.generate_sketch(aligned_statement(), log).has_value());
}

TEST_CASE("extract_subgoals keeps compiling lemmas in source order") {
  std::string reply = fenced("theorem stp_one : 1 + 1 = 2 := by sorry") +
                      "\n\n" +
                      fenced("theorem stp_two (n : Nat) : n = n := by sorry") +
                      "\n\n" + fenced("theorem stp_bad : T := by CANDBAD0");
  auto h = make_harness({rule(Phase::Sketching, "", reply)}, {}, {},
                        cand_checker_rules());
  Runner runner(h.deps(), Budgets{}, Mode::agentic);
  core::TrajectoryBuilder log("p");
  log.begin_phase(Phase::Sketching);
  core::Sketch sketch{sketch_source(), true, 0};
  auto subgoals = runner.extract_subgoals(sketch, log);
  REQUIRE(subgoals.size() == 2);  // the malformed one is dropped
  CHECK(subgoals[0].index == 0);
  CHECK(subgoals[1].index == 1);
  int dropped = 0;
  for (const auto& e : log.trajectory().events)
    if (e.kind == core::event::kSubgoal && !e.data.value("ok", false))
      ++dropped;
  CHECK(dropped == 1);
}

// ----------------------------------------------------------------------
// Subgoal solving and early stop
// ----------------------------------------------------------------------

namespace {
std::string lemma(int i) {
  return "theorem sub_" + std::to_string(i) + " (n : Nat) : n = n := by sorry";
}
std::string lemma_proof(int i) {
  return "theorem sub_" + std::to_string(i) + " (n : Nat) : n = n := by rfl";
}
std::string lemma_bad(int i, const std::string& marker) {
  return "theorem sub_" + std::to_string(i) + " (n : Nat) : n = n := by " +
         marker;
}

// scripts a subgoal that the expert solves on its first sample
void script_solved(std::vector<gateway::MockRule>& prover, int i) {
  std::string key = "sub_" + std::to_string(i);
  prover.push_back(rule(Phase::SubgoalSolving, key, fenced(lemma_proof(i))));
  for (int s = 0; s < 3; ++s)
    prover.push_back(rule(Phase::SubgoalSolving, key, fenced(lemma_proof(i))));
}

// scripts a subgoal that exhausts every stage and definitively fails
void script_failed(std::vector<gateway::MockRule>& prover,
                   std::vector<gateway::MockRule>& general, int i) {
  std::string key = "sub_" + std::to_string(i);
  for (int s = 0; s < 4; ++s)
    prover.push_back(
        rule(Phase::SubgoalSolving, key, fenced(lemma_bad(i, "BADPROOF"))));
  // one refinement chance
  general.push_back(
      rule(Phase::SubgoalSolving, key, fenced(lemma_bad(i, "FIXFAIL"))));
  // informal proof + formal attempt
  general.push_back(rule(Phase::SubgoalSolving, key, "1. Should be easy."));
  general.push_back(
      rule(Phase::SubgoalSolving, key, fenced(lemma_bad(i, "BADPROOF"))));
  // k_refine = 2 chained fixes
  general.push_back(
      rule(Phase::SubgoalSolving, key, fenced(lemma_bad(i, "FIXFAIL"))));
  general.push_back(
      rule(Phase::SubgoalSolving, key, fenced(lemma_bad(i, "BADPROOF"))));
}
}  // namespace

TEST_CASE("solve_subgoals: early stop cancels everything after a failure") {
  std::vector<gateway::MockRule> prover, general;
  script_solved(prover, 0);
  script_solved(prover, 1);
  script_failed(prover, general, 2);
  auto h = make_harness(general, {}, prover, cand_checker_rules());
  Runner runner(h.deps(), Budgets{}, Mode::agentic);

  std::vector<core::Subgoal> subgoals;
  for (int i = 0; i < 10; ++i)
    subgoals.push_back(
        core::Subgoal{i, lemma(i), core::SubgoalStatus::pending, std::nullopt});

  core::TrajectoryBuilder log("p");
  log.begin_phase(Phase::SubgoalSolving);
  runner.solve_subgoals(subgoals, {}, log);

  int solved = 0, failed = 0, cancelled = 0;
  for (const auto& sg : subgoals) {
    if (sg.status == core::SubgoalStatus::solved) ++solved;
    if (sg.status == core::SubgoalStatus::failed) ++failed;
    if (sg.status == core::SubgoalStatus::cancelled) ++cancelled;
  }
  CHECK(solved == 2);
  CHECK(failed == 1);
  CHECK(cancelled == 7);
  CHECK(solved + failed + cancelled == 10);
  CHECK(subgoals[2].status == core::SubgoalStatus::failed);

  // budget ceiling: at most k_prover expert samples per subgoal target
  CHECK(gateway::count_expert_calls(log.trajectory().usage()) == 3 * 4);

  // no retrieval during subgoal solving
  for (const auto& e : log.trajectory().events)
    if (e.phase == Phase::SubgoalSolving)
      CHECK(e.kind != core::event::kSearch);
}

TEST_CASE("solve_subgoals: all solved, none cancelled") {
  std::vector<gateway::MockRule> prover, general;
  for (int i = 0; i < 3; ++i) script_solved(prover, i);
  auto h = make_harness(general, {}, prover, cand_checker_rules());
  Runner runner(h.deps(), Budgets{}, Mode::agentic);
  std::vector<core::Subgoal> subgoals;
  for (int i = 0; i < 3; ++i)
    subgoals.push_back(
        core::Subgoal{i, lemma(i), core::SubgoalStatus::pending, std::nullopt});
  core::TrajectoryBuilder log("p");
  log.begin_phase(Phase::SubgoalSolving);
  runner.solve_subgoals(subgoals, {}, log);
  for (const auto& sg : subgoals) {
    CHECK(sg.status == core::SubgoalStatus::solved);
    CHECK(sg.proof.has_value());
  }
}

TEST_CASE("solve_subgoals: a subgoal can be rescued by the general model") {
  // expert fails everything, refinement fails, but the general formal
  // attempt succeeds after the informal proof
  std::vector<gateway::MockRule> prover, general;
  std::string key = "sub_0";
  for (int s = 0; s < 4; ++s)
    prover.push_back(
        rule(Phase::SubgoalSolving, key, fenced(lemma_bad(0, "BADPROOF"))));
  general.push_back(
      rule(Phase::SubgoalSolving, key, fenced(lemma_bad(0, "FIXFAIL"))));
  general.push_back(rule(Phase::SubgoalSolving, key, "1. Try rfl."));
  general.push_back(rule(Phase::SubgoalSolving, key, fenced(lemma_proof(0))));
  auto h = make_harness(general, {}, prover, cand_checker_rules());
  Runner runner(h.deps(), Budgets{}, Mode::agentic);
  std::vector<core::Subgoal> subgoals{
      core::Subgoal{0, lemma(0), core::SubgoalStatus::pending, std::nullopt}};
  core::TrajectoryBuilder log("p");
  log.begin_phase(Phase::SubgoalSolving);
  runner.solve_subgoals(subgoals, {}, log);
  CHECK(subgoals[0].status == core::SubgoalStatus::solved);
}

TEST_CASE("solve_subgoals: chained k_refine fixes can close a subgoal") {
  std::vector<gateway::MockRule> prover, general;
  std::string key = "sub_0";
  for (int s = 0; s < 4; ++s)
    prover.push_back(
        rule(Phase::SubgoalSolving, key, fenced(lemma_bad(0, "BADPROOF"))));
  general.push_back(
      rule(Phase::SubgoalSolving, key, fenced(lemma_bad(0, "FIXFAIL"))));
  general.push_back(rule(Phase::SubgoalSolving, key, "1. informal."));
  general.push_back(
      rule(Phase::SubgoalSolving, key, fenced(lemma_bad(0, "BADPROOF"))));
  // fix 1 still fails, fix 2 lands
  general.push_back(
      rule(Phase::SubgoalSolving, key, fenced(lemma_bad(0, "FIXFAIL"))));
  general.push_back(rule(Phase::SubgoalSolving, key, fenced(lemma_proof(0))));
  auto h = make_harness(general, {}, prover, cand_checker_rules());
  Runner runner(h.deps(), Budgets{}, Mode::agentic);
  std::vector<core::Subgoal> subgoals{
      core::Subgoal{0, lemma(0), core::SubgoalStatus::pending, std::nullopt}};
  core::TrajectoryBuilder log("p");
  log.begin_phase(Phase::SubgoalSolving);
  runner.solve_subgoals(subgoals, {}, log);
  CHECK(subgoals[0].status == core::SubgoalStatus::solved);
  // refinement rounds stayed within k_refine
  int refinements = 0;
  for (const auto& e : log.trajectory().events)
    if (e.kind == core::event::kRefinement) ++refinements;
  CHECK(refinements <= 1 + 2);  // one expert-refine chance + k_refine fixes
}

TEST_CASE("solve_subgoals: bounded parallel pool conserves statuses") {
  // every subgoal solvable: a 4-wide pool must solve them all
  {
    std::vector<gateway::MockRule> prover, general;
    for (int i = 0; i < 8; ++i) script_solved(prover, i);
    auto h = make_harness(general, {}, prover, cand_checker_rules());
    Budgets budgets;
    budgets.max_parallel_subgoals = 4;
    Runner runner(h.deps(), budgets, Mode::agentic);
    std::vector<core::Subgoal> subgoals;
    for (int i = 0; i < 8; ++i)
      subgoals.push_back(core::Subgoal{i, lemma(i),
                                       core::SubgoalStatus::pending,
                                       std::nullopt});
    core::TrajectoryBuilder log("par1");
    log.begin_phase(Phase::SubgoalSolving);
    runner.solve_subgoals(subgoals, {}, log);
    for (const auto& sg : subgoals)
      CHECK(sg.status == core::SubgoalStatus::solved);
  }
  // one scripted failure under parallelism: conservation still holds and
  // at most one subgoal ends failed
  {
    std::vector<gateway::MockRule> prover, general;
    for (int i = 0; i < 6; ++i) {
      if (i == 3)
        script_failed(prover, general, i);
      else
        script_solved(prover, i);
    }
    auto h = make_harness(general, {}, prover, cand_checker_rules());
    Budgets budgets;
    budgets.max_parallel_subgoals = 3;
    Runner runner(h.deps(), budgets, Mode::agentic);
    std::vector<core::Subgoal> subgoals;
    for (int i = 0; i < 6; ++i)
      subgoals.push_back(core::Subgoal{i, lemma(i),
                                       core::SubgoalStatus::pending,
                                       std::nullopt});
    core::TrajectoryBuilder log("par2");
    log.begin_phase(Phase::SubgoalSolving);
    runner.solve_subgoals(subgoals, {}, log);
    int solved = 0, failed = 0, cancelled = 0, pending = 0;
    for (const auto& sg : subgoals) {
      solved += sg.status == core::SubgoalStatus::solved;
      failed += sg.status == core::SubgoalStatus::failed;
      cancelled += sg.status == core::SubgoalStatus::cancelled;
      pending += sg.status == core::SubgoalStatus::pending;
    }
    CHECK(pending == 0);
    CHECK(solved + failed + cancelled == 6);
    CHECK(failed <= 1);
    CHECK(subgoals[3].status != core::SubgoalStatus::solved);
  }
}

// ----------------------------------------------------------------------
// Assembly
// ----------------------------------------------------------------------

TEST_CASE("assemble_proof: success, fix path, and failure") {
  core::Sketch sketch{sketch_source(), true, 2};
  std::vector<core::Subgoal> solved{
      {0, lemma(0), core::SubgoalStatus::solved,
       core::ProofArtifact{lemma_proof(0), true}},
      {1, lemma(1), core::SubgoalStatus::solved,
       core::ProofArtifact{lemma_proof(1), true}}};
  std::string assembled = "theorem sub_0 (n : Nat) : n = n := by rfl\n"
                          "theorem main_t : 1 + 1 = 2 := by norm_num";

  SUBCASE("strict-clean assembly verifies") {
    auto h = make_harness({rule(Phase::Assembly, "", fenced(assembled))}, {},
                          {}, cand_checker_rules());
    Runner runner(h.deps(), Budgets{}, Mode::agentic);
    core::TrajectoryBuilder log("p");
    log.begin_phase(Phase::Assembly);
    auto proof = runner.assemble_proof(sketch, solved, log);
    REQUIRE(proof.has_value());
    CHECK(proof->verified);
    CHECK(proof->lean_source == assembled);
  }

  SUBCASE("one fix chance repairs a failed assembly") {
    auto h = make_harness(
        {rule(Phase::Assembly, "", fenced("theorem a : T := by BADPROOF")),
         rule(Phase::Assembly, "BADPROOF", fenced(assembled))},
        {}, {}, cand_checker_rules());
    Runner runner(h.deps(), Budgets{}, Mode::agentic);
    core::TrajectoryBuilder log("p");
    log.begin_phase(Phase::Assembly);
    auto proof = runner.assemble_proof(sketch, solved, log);
    REQUIRE(proof.has_value());
    int assembly_events = 0;
    for (const auto& e : log.trajectory().events)
      if (e.kind == core::event::kAssembly) ++assembly_events;
    CHECK(assembly_events == 2);
  }

  SUBCASE("both attempts failing is an assembly failure") {
    auto h = make_harness(
        {rule(Phase::Assembly, "", fenced("theorem a : T := by BADPROOF")),
         rule(Phase::Assembly, "BADPROOF",
              fenced("theorem a : T := by FIXFAIL"))},
        {}, {}, cand_checker_rules());
    Runner runner(h.deps(), Budgets{}, Mode::agentic);
    core::TrajectoryBuilder log("p");
    log.begin_phase(Phase::Assembly);
    CHECK_FALSE(runner.assemble_proof(sketch, solved, log).has_value());
  }
}

// ----------------------------------------------------------------------
// Full runs
// ----------------------------------------------------------------------

TEST_CASE("baseline run: pass@4 twice means exactly 8 expert calls") {
  std::vector<gateway::MockRule> formalizer, prover;
  for (int i = 0; i < 4; ++i)
    formalizer.push_back(
        rule(Phase::StatementSampling, "", fenced(kStatement)));
  // proof sample 2 verifies
  prover.push_back(rule(Phase::ExpertProving, "", fenced(kProofBad)));
  prover.push_back(rule(Phase::ExpertProving, "", fenced(kProofGood)));
  prover.push_back(rule(Phase::ExpertProving, "", fenced(kProofBad)));
  prover.push_back(rule(Phase::ExpertProving, "", fenced(kProofBad)));
  auto h = make_harness({}, formalizer, prover, cand_checker_rules());
  Runner runner(h.deps(), Budgets{}, Mode::baseline);

  auto t = runner.run_problem(problem("b1", "Show that 1 + 1 = 2."));
  CHECK(t.outcome() == core::Outcome::proof_found_unverified);
  auto usage = t.usage();
  CHECK(gateway::count_expert_calls(usage) == 8);
  CHECK(gateway::count_general_calls(usage) == 0);

  // mode purity: no agentic-only phases in the event log
  for (const auto& e : t.events) {
    CHECK(e.phase != Phase::Normalization);
    CHECK(e.phase != Phase::DefinitionRetrieval);
    CHECK(e.phase != Phase::SemanticCheck);
    CHECK(e.phase != Phase::TheoremRetrieval);
    CHECK(e.phase != Phase::Sketching);
  }
}

TEST_CASE("baseline run with nothing compiling fails at the statement stage") {
  std::vector<gateway::MockRule> formalizer;
  for (int i = 0; i < 4; ++i)
    formalizer.push_back(rule(Phase::StatementSampling, "",
                              fenced("theorem b : T := by CANDBAD0")));
  auto h = make_harness({}, formalizer, {}, cand_checker_rules());
  Runner runner(h.deps(), Budgets{}, Mode::baseline);
  auto t = runner.run_problem(problem("b2", "s"));
  CHECK(t.outcome() == core::Outcome::failed);
  CHECK(t.final_phase() == Phase::StatementSampling);
}

TEST_CASE("agentic run: direct expert success ends with Verification") {
  std::vector<gateway::MockRule> general = {
      rule(Phase::Normalization, "", "<normalized>one plus one is two</normalized>"),
      rule(Phase::DefinitionRetrieval, "", "no queries, sorry"),
      rule(Phase::SemanticCheck, "", "<verdict>ALIGNED</verdict>"),
  };
  std::vector<gateway::MockRule> formalizer, prover;
  for (int i = 0; i < 4; ++i)
    formalizer.push_back(rule(Phase::StatementSampling, "", fenced(kStatement)));
  prover.push_back(rule(Phase::ExpertProving, "", fenced(kProofGood)));
  for (int i = 0; i < 3; ++i)
    prover.push_back(rule(Phase::ExpertProving, "", fenced(kProofBad)));
  auto h = make_harness(general, formalizer, prover, cand_checker_rules());
  Runner runner(h.deps(), Budgets{}, Mode::agentic);

  auto t = runner.run_problem(problem("a1", "What is 1 + 1?"));
  CHECK(t.outcome() == core::Outcome::proof_found_unverified);
  CHECK(t.final_phase() == Phase::Verification);

  auto view = core::TrajectoryView::from(t);
  REQUIRE(view.final_proof.has_value());
  CHECK(view.final_proof->via == core::ProofView::Via::expert);

  // any verified artifact re-verifies under a fresh Strict check
  auto recheck =
      h.checker->check(view.final_proof->source, leancheck::CheckMode::Strict);
  CHECK(recheck.ok);
}

TEST_SUITE_END();
