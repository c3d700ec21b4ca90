#pragma once

#include <condition_variable>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "proofmill/errors.hpp"

namespace proofmill::leancheck {

using json = nlohmann::ordered_json;

// Strict fails on errors and sorries; SorryOk fails on errors only.
// Sketches and statement headers carry `sorry` bodies by construction,
// final proofs are checked Strict.
enum class CheckMode { Strict, SorryOk };

enum class Severity { error, warning };

// Positions are 1-based. end_col is exclusive; a span with
// (end_line, end_col) == (start_line, start_col) is a point diagnostic,
// which annotation extends to the end of its line.
struct Diagnostic {
  Severity severity = Severity::error;
  int start_line = 1;
  int start_col = 1;
  int end_line = 1;
  int end_col = 1;
  std::string message;
};

json diagnostic_to_json(const Diagnostic& d);
Diagnostic diagnostic_from_json(const json& j);
json diagnostics_to_json(const std::vector<Diagnostic>& ds);
std::vector<Diagnostic> diagnostics_from_json(const json& j);

struct CheckReport {
  bool ok = false;
  std::vector<Diagnostic> diagnostics;
  bool uses_sorry = false;
  long long elapsed_ms = 0;

  bool has_errors() const;
};

// ok is a pure function of the other fields; keeping it that way is the
// report invariant.
CheckReport make_report(std::vector<Diagnostic> diagnostics, bool uses_sorry,
                        CheckMode mode, long long elapsed_ms = 0);

// Parses the toolchain's line-oriented `file:line:col: severity: message`
// output. Continuation lines attach to the preceding message until the next
// header. Unparseable lines are skipped and counted. A
// "declaration uses 'sorry'" warning raises *uses_sorry.
std::vector<Diagnostic> parse_diagnostics(const std::string& raw,
                                          int* skipped_lines = nullptr,
                                          bool* uses_sorry = nullptr);

// Inserts <error>/</error> markers around every span. Stripping all markers
// reproduces the input byte-for-byte; overlaps nest deterministically by
// (start, end) ordering.
std::string annotate_span(const std::string& source,
                          const std::vector<Diagnostic>& spans);

// Renders the numbered repair-prompt blocks: per diagnostic an
// "Error k:" section with the marked-up source and its message.
std::string annotate_errors(const std::string& source,
                            const std::vector<Diagnostic>& diagnostics);

class Checker {
 public:
  virtual ~Checker() = default;
  virtual CheckReport check(const std::string& source, CheckMode mode) = 0;
};

// ----------------------------------------------------------------------
// Mock backend
// ----------------------------------------------------------------------

struct MockCheckRule {
  std::string contains;  // substring matched against the source
  std::vector<Diagnostic> diagnostics;
  std::optional<bool> uses_sorry;  // overrides the token scan
};

// Rule-driven simulation: first matching rule supplies the diagnostics.
// Unmatched sources report no diagnostics, and `sorry` usage is detected by
// a comment-aware token scan the way the compiler would report it.
class MockChecker : public Checker {
 public:
  MockChecker() = default;
  explicit MockChecker(std::vector<MockCheckRule> rules);
  static MockChecker load_json(const std::filesystem::path& path);

  CheckReport check(const std::string& source, CheckMode mode) override;

 private:
  std::vector<MockCheckRule> rules_;
};

// Whole-token `sorry` scan ignoring -- line and /- -/ block comments.
bool source_mentions_sorry(const std::string& source);

// ----------------------------------------------------------------------
// Toolchain backend
// ----------------------------------------------------------------------

struct ToolchainConfig {
  std::vector<std::string> command;  // "{file}" expands to the scratch path
  std::filesystem::path project_dir;
  long long timeout_s = 300;
  int max_parallel_checks = 4;
};

// Writes each source into a scratch file inside a prepared (warm) project
// and invokes the pinned toolchain as a subprocess. A timeout is scored as
// a failed check with a synthetic error diagnostic.
class ToolchainChecker : public Checker {
 public:
  explicit ToolchainChecker(ToolchainConfig config);
  CheckReport check(const std::string& source, CheckMode mode) override;

 private:
  ToolchainConfig config_;
  std::mutex slot_mu_;
  std::condition_variable slot_cv_;
  int slots_in_use_ = 0;
};

struct ProcessResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr interleaved
  bool timed_out = false;
};

ProcessResult run_process(const std::vector<std::string>& argv,
                          const std::filesystem::path& cwd,
                          long long timeout_s);

}  // namespace proofmill::leancheck
