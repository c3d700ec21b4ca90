#include <doctest.h>

#include <random>

#include "proofmill/leancheck.hpp"

using namespace proofmill;
using namespace proofmill::leancheck;

TEST_SUITE_BEGIN("leancheck");

// Golden outputs frozen in the shape the pinned toolchain prints:
// file:line:col: severity: message, continuations indented under the header.

TEST_CASE("parse_diagnostics handles a single error header") {
  auto ds = parse_diagnostics("Main.lean:3:2: error: unknown identifier 'fo'");
  REQUIRE(ds.size() == 1);
  CHECK(ds[0].severity == Severity::error);
  CHECK(ds[0].start_line == 3);
  CHECK(ds[0].start_col == 2);
  CHECK(ds[0].message == "unknown identifier 'fo'");
}

TEST_CASE("parse_diagnostics on empty input") {
  CHECK(parse_diagnostics("").empty());
}

TEST_CASE("parse_diagnostics captures continuation lines") {
  std::string raw =
      "Main.lean:5:10: error: unsolved goals\n"
      "P : Polynomial Int\n"
      "h : P.eval 1 = 0\n"
      "Main.lean:9:4: error: type mismatch\n"
      "  h has type A but is expected to have type B\n";
  auto ds = parse_diagnostics(raw);
  REQUIRE(ds.size() == 2);
  CHECK(ds[0].message ==
        "unsolved goals\nP : Polynomial Int\nh : P.eval 1 = 0");
  CHECK(ds[1].message ==
        "type mismatch\n  h has type A but is expected to have type B");
}

TEST_CASE("parse_diagnostics flags sorry warnings and counts skips") {
  std::string raw =
      "some build noise\n"
      "Main.lean:1:0: warning: declaration uses 'sorry'\n"
      "Main.lean:2:0: info: trace output\n";
  int skipped = 0;
  bool uses_sorry = false;
  auto ds = parse_diagnostics(raw, &skipped, &uses_sorry);
  REQUIRE(ds.size() == 1);
  CHECK(ds[0].severity == Severity::warning);
  CHECK(uses_sorry);
  CHECK(skipped == 2);  // noise line + info header
}

TEST_CASE("make_report enforces the ok invariant") {
  Diagnostic err;
  err.severity = Severity::error;
  err.message = "boom";
  Diagnostic warn;
  warn.severity = Severity::warning;
  warn.message = "declaration uses 'sorry'";

  CHECK(make_report({}, false, CheckMode::Strict).ok);
  CHECK(make_report({warn}, true, CheckMode::SorryOk).ok);
  CHECK_FALSE(make_report({warn}, true, CheckMode::Strict).ok);
  CHECK_FALSE(make_report({err}, false, CheckMode::SorryOk).ok);
  CHECK_FALSE(make_report({err}, true, CheckMode::Strict).ok);
}

namespace {
Diagnostic span(int sl, int sc, int el, int ec) {
  Diagnostic d;
  d.severity = Severity::error;
  d.start_line = sl;
  d.start_col = sc;
  d.end_line = el;
  d.end_col = ec;
  d.message = "m";
  return d;
}

std::string strip_markers(std::string s) {
  for (const char* marker : {"<error>", "</error>"}) {
    size_t pos;
    while ((pos = s.find(marker)) != std::string::npos)
      s.erase(pos, std::string(marker).size());
  }
  return s;
}
}  // namespace

TEST_CASE("annotate_span wraps a multi-line span") {
  std::string src = "line one\nline two\nline three";
  auto out = annotate_span(src, {span(2, 1, 2, 9)});
  CHECK(out == "line one\n<error>line two</error>\nline three");
}

TEST_CASE("annotate_span extends point spans to end of line") {
  std::string src = "  exact h\nnext";
  auto out = annotate_span(src, {span(1, 3, 1, 3)});
  CHECK(out == "  <error>exact h</error>\nnext");
}

TEST_CASE("annotate_span clamps out-of-range positions") {
  std::string src = "ab";
  auto out = annotate_span(src, {span(9, 9, 10, 2)});
  CHECK(strip_markers(out) == src);
}

TEST_CASE("marker strip round trip on random spans") {
  std::mt19937 rng(11);
  std::uniform_int_distribution<int> dim(1, 12);
  const std::string alphabet = "abc defg\nhij";
  for (int trial = 0; trial < 300; ++trial) {
    // random source of 1..6 lines
    std::string src;
    int lines = 1 + static_cast<int>(rng() % 6);
    for (int l = 0; l < lines; ++l) {
      int len = static_cast<int>(rng() % 10);
      for (int c = 0; c < len; ++c)
        src += alphabet[rng() % alphabet.size()];
      if (l + 1 < lines) src += '\n';
    }
    std::vector<Diagnostic> spans;
    int nspans = 1 + static_cast<int>(rng() % 3);
    for (int s = 0; s < nspans; ++s)
      spans.push_back(span(dim(rng), dim(rng), dim(rng), dim(rng)));
    auto out = annotate_span(src, spans);
    CHECK(strip_markers(out) == src);
  }
}

TEST_CASE("annotate_span nests overlapping spans deterministically") {
  std::string src = "abcdefgh";
  std::vector<Diagnostic> spans = {span(1, 1, 1, 9), span(1, 3, 1, 5)};
  auto out = annotate_span(src, spans);
  CHECK(out == "<error>ab<error>cd</error>efgh</error>");
  // same result regardless of input order
  std::vector<Diagnostic> reversed = {span(1, 3, 1, 5), span(1, 1, 1, 9)};
  CHECK(annotate_span(src, reversed) == out);
}

TEST_CASE("annotate_errors renders numbered blocks") {
  std::string src = "line one\nbad line\nline three";
  auto out = annotate_errors(src, {span(2, 1, 2, 9)});
  std::string expected =
      "Error 1:\n\n"
      "Corresponding Code:\n"
      "```lean4\n"
      "line one\n<error>bad line</error>\nline three"
      "\n\n```\n\n"
      "Error Message: m\n";
  CHECK(out == expected);
}

TEST_CASE("annotate_errors with zero diagnostics is empty") {
  CHECK(annotate_errors("src", {}).empty());
}

TEST_CASE("annotate_errors emits one section per diagnostic") {
  std::string src = "a\nb\nc";
  auto d1 = span(1, 1, 1, 2);
  auto d2 = span(3, 1, 3, 2);
  auto out = annotate_errors(src, {d1, d2});
  CHECK(out.find("Error 1:") != std::string::npos);
  CHECK(out.find("Error 2:") != std::string::npos);
  // each section strips back to the full source
  CHECK(strip_markers(out).find("a\nb\nc") != std::string::npos);
}

TEST_CASE("mock checker default simulation") {
  MockChecker checker;
  auto ok = checker.check("theorem t : 1 = 1 := rfl", CheckMode::Strict);
  CHECK(ok.ok);
  CHECK_FALSE(ok.uses_sorry);

  auto with_sorry =
      checker.check("theorem t : 1 = 1 := by sorry", CheckMode::Strict);
  CHECK_FALSE(with_sorry.ok);
  CHECK(with_sorry.uses_sorry);

  auto sorry_ok =
      checker.check("theorem t : 1 = 1 := by sorry", CheckMode::SorryOk);
  CHECK(sorry_ok.ok);
}

TEST_CASE("mock checker rules supply diagnostics") {
  MockCheckRule bad;
  bad.contains = "BOOM";
  bad.diagnostics = {span(1, 4, 1, 4)};
  bad.diagnostics[0].message = "unsolved goals\ncase h";
  MockChecker checker({bad});

  auto report = checker.check("theorem t : T := by BOOM", CheckMode::Strict);
  CHECK_FALSE(report.ok);
  REQUIRE(report.diagnostics.size() == 1);
  CHECK(report.diagnostics[0].message.rfind("unsolved goals", 0) == 0);
}

TEST_CASE("strict ok implies sorry-ok ok") {
  MockCheckRule bad;
  bad.contains = "BOOM";
  bad.diagnostics = {span(1, 1, 1, 2)};
  MockChecker checker({bad});
  for (const std::string src :
       {"theorem a : True := trivial", "theorem b : T := by BOOM",
        "theorem c : T := by sorry", "-- sorry in a comment\ntheorem d : True := trivial"}) {
    auto strict = checker.check(src, CheckMode::Strict);
    auto lax = checker.check(src, CheckMode::SorryOk);
    if (strict.ok) CHECK(lax.ok);
    // idempotence: same source + mode, same verdict
    CHECK(checker.check(src, CheckMode::Strict).ok == strict.ok);
  }
}

TEST_CASE("sorry detection ignores comments and respects token boundaries") {
  CHECK(source_mentions_sorry("theorem t : T := by sorry"));
  CHECK_FALSE(source_mentions_sorry("-- sorry\ntheorem t : True := trivial"));
  CHECK_FALSE(source_mentions_sorry("/- sorry -/ theorem t : True := trivial"));
  CHECK_FALSE(source_mentions_sorry("theorem sorryfree : True := trivial"));
  CHECK_FALSE(source_mentions_sorry("theorem no_sorry : True := trivial"));
  CHECK(source_mentions_sorry("have h := by\n  sorry"));
}

TEST_CASE("empty source is rejected") {
  MockChecker checker;
  CHECK_THROWS_AS(checker.check("", CheckMode::Strict), Error);
}

TEST_CASE("diagnostic json round trip") {
  auto d = span(2, 3, 4, 5);
  d.severity = Severity::warning;
  d.message = "multi\nline";
  auto back = diagnostic_from_json(diagnostic_to_json(d));
  CHECK(back.severity == Severity::warning);
  CHECK(back.start_line == 2);
  CHECK(back.start_col == 3);
  CHECK(back.end_line == 4);
  CHECK(back.end_col == 5);
  CHECK(back.message == "multi\nline");
}

TEST_CASE("run_process captures output and exit code") {
  auto res = leancheck::run_process({"/bin/sh", "-c", "echo hi; exit 3"}, {},
                                    10);
  CHECK(res.exit_code == 3);
  CHECK(res.output == "hi\n");
  CHECK_FALSE(res.timed_out);
}

TEST_CASE("run_process enforces the wall-clock timeout") {
  auto res = leancheck::run_process({"/bin/sh", "-c", "sleep 30"}, {}, 1);
  CHECK(res.timed_out);
}

TEST_SUITE_END();
