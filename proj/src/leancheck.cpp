#include "proofmill/leancheck.hpp"

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <csignal>
#include <fstream>
#include <mutex>
#include <regex>
#include <sstream>

#include "proofmill/jsonl.hpp"

namespace proofmill::leancheck {

json diagnostic_to_json(const Diagnostic& d) {
  json j;
  j["severity"] = d.severity == Severity::error ? "error" : "warning";
  j["start_line"] = d.start_line;
  j["start_col"] = d.start_col;
  j["end_line"] = d.end_line;
  j["end_col"] = d.end_col;
  j["message"] = d.message;
  return j;
}

Diagnostic diagnostic_from_json(const json& j) {
  Diagnostic d;
  d.severity = j.value("severity", "error") == std::string("warning")
                   ? Severity::warning
                   : Severity::error;
  d.start_line = j.value("start_line", 1);
  d.start_col = j.value("start_col", 1);
  d.end_line = j.value("end_line", d.start_line);
  d.end_col = j.value("end_col", d.start_col);
  d.message = j.value("message", "");
  return d;
}

json diagnostics_to_json(const std::vector<Diagnostic>& ds) {
  json arr = json::array();
  for (const auto& d : ds) arr.push_back(diagnostic_to_json(d));
  return arr;
}

std::vector<Diagnostic> diagnostics_from_json(const json& j) {
  std::vector<Diagnostic> out;
  if (!j.is_array()) return out;
  for (const auto& item : j) out.push_back(diagnostic_from_json(item));
  return out;
}

bool CheckReport::has_errors() const {
  return std::any_of(diagnostics.begin(), diagnostics.end(),
                     [](const Diagnostic& d) {
                       return d.severity == Severity::error;
                     });
}

CheckReport make_report(std::vector<Diagnostic> diagnostics, bool uses_sorry,
                        CheckMode mode, long long elapsed_ms) {
  CheckReport r;
  r.diagnostics = std::move(diagnostics);
  r.uses_sorry = uses_sorry;
  r.elapsed_ms = elapsed_ms;
  r.ok = !r.has_errors() && (mode == CheckMode::SorryOk || !uses_sorry);
  return r;
}

// ----------------------------------------------------------------------
// Diagnostics parsing
// ----------------------------------------------------------------------

namespace {

const std::regex kHeaderRe(R"(^(.+?):(\d+):(\d+):\s*([A-Za-z]+):\s?(.*)$)");

void rtrim(std::string& s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r' ||
                        s.back() == ' ' || s.back() == '\t'))
    s.pop_back();
}

}  // namespace

std::vector<Diagnostic> parse_diagnostics(const std::string& raw,
                                          int* skipped_lines,
                                          bool* uses_sorry) {
  std::vector<Diagnostic> out;
  int skipped = 0;
  bool sorry_flag = false;
  bool in_message = false;

  auto finalize = [&] {
    if (!out.empty()) {
      rtrim(out.back().message);
      if (out.back().severity == Severity::warning &&
          out.back().message.find("declaration uses 'sorry'") !=
              std::string::npos)
        sorry_flag = true;
    }
  };

  std::istringstream in(raw);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::smatch m;
    if (std::regex_match(line, m, kHeaderRe)) {
      std::string severity = m[4].str();
      if (severity == "error" || severity == "warning") {
        finalize();
        Diagnostic d;
        d.severity =
            severity == "error" ? Severity::error : Severity::warning;
        d.start_line = std::stoi(m[2].str());
        d.start_col = std::stoi(m[3].str());
        d.end_line = d.start_line;
        d.end_col = d.start_col;
        d.message = m[5].str();
        out.push_back(std::move(d));
        in_message = true;
        continue;
      }
      // info/trace headers end the current message and are not captured
      finalize();
      in_message = false;
      ++skipped;
      continue;
    }
    if (in_message && !out.empty()) {
      out.back().message += "\n" + line;
    } else {
      if (line.find_first_not_of(" \t") != std::string::npos) ++skipped;
    }
  }
  finalize();

  if (skipped_lines) *skipped_lines = skipped;
  if (uses_sorry) *uses_sorry = sorry_flag;
  return out;
}

// ----------------------------------------------------------------------
// Annotation
// ----------------------------------------------------------------------

namespace {

struct LineMap {
  std::vector<size_t> starts;  // byte offset of each line start
  const std::string& src;

  explicit LineMap(const std::string& s) : src(s) {
    starts.push_back(0);
    for (size_t i = 0; i < s.size(); ++i)
      if (s[i] == '\n') starts.push_back(i + 1);
  }

  size_t line_count() const { return starts.size(); }

  size_t line_end(size_t line0) const {  // offset of '\n' or EOF
    size_t end = line0 + 1 < starts.size() ? starts[line0 + 1] - 1 : src.size();
    return end;
  }

  // 1-based line/col to byte offset, clamped into the source.
  size_t offset(int line, int col) const {
    if (line < 1) return 0;
    size_t line0 = static_cast<size_t>(line - 1);
    if (line0 >= line_count()) return src.size();
    size_t start = starts[line0];
    size_t len = line_end(line0) - start;
    size_t col0 = col < 1 ? 0 : std::min<size_t>(col - 1, len);
    return start + col0;
  }
};

struct MarkerSpan {
  size_t open = 0;
  size_t close = 0;
  int idx = 0;
};

std::vector<MarkerSpan> resolve_spans(const std::string& source,
                                      const std::vector<Diagnostic>& spans) {
  LineMap map(source);
  std::vector<MarkerSpan> out;
  int idx = 0;
  for (const auto& d : spans) {
    MarkerSpan s;
    s.idx = idx++;
    s.open = map.offset(d.start_line, d.start_col);
    bool point =
        d.end_line == d.start_line && d.end_col == d.start_col;
    if (point) {
      size_t line0 = std::min<size_t>(
          d.start_line < 1 ? 0 : d.start_line - 1, map.line_count() - 1);
      s.close = map.line_end(line0);
    } else {
      s.close = map.offset(d.end_line, d.end_col);
    }
    if (s.close < s.open) s.close = s.open;
    out.push_back(s);
  }
  return out;
}

}  // namespace

std::string annotate_span(const std::string& source,
                          const std::vector<Diagnostic>& spans) {
  struct Ins {
    size_t pos;
    bool open;
    size_t other;  // the span's opposite endpoint, for nesting order
    int idx;
  };
  std::vector<Ins> ins;
  for (const auto& s : resolve_spans(source, spans)) {
    ins.push_back({s.open, true, s.close, s.idx});
    ins.push_back({s.close, false, s.open, s.idx});
  }
  std::sort(ins.begin(), ins.end(), [](const Ins& a, const Ins& b) {
    if (a.pos != b.pos) return a.pos < b.pos;
    if (a.open != b.open) return !a.open;  // closes precede opens
    if (a.open) {
      // outermost opens first: larger close first
      if (a.other != b.other) return a.other > b.other;
      return a.idx < b.idx;
    }
    // innermost closes first: later open first
    if (a.other != b.other) return a.other > b.other;
    return a.idx > b.idx;
  });

  std::string out;
  out.reserve(source.size() + ins.size() * 8);
  size_t cursor = 0;
  for (const auto& i : ins) {
    out.append(source, cursor, i.pos - cursor);
    out += i.open ? "<error>" : "</error>";
    cursor = i.pos;
  }
  out.append(source, cursor, source.size() - cursor);
  return out;
}

std::string annotate_errors(const std::string& source,
                            const std::vector<Diagnostic>& diagnostics) {
  std::string out;
  int k = 0;
  for (const auto& d : diagnostics) {
    ++k;
    if (k > 1) out += "\n";
    out += "Error " + std::to_string(k) + ":\n\n";
    out += "Corresponding Code:\n";
    out += "```lean4\n";
    out += annotate_span(source, {d});
    out += "\n\n```\n\n";
    out += "Error Message: " + d.message + "\n";
  }
  return out;
}

// ----------------------------------------------------------------------
// Mock backend
// ----------------------------------------------------------------------

bool source_mentions_sorry(const std::string& source) {
  std::string text;
  text.reserve(source.size());
  int block_depth = 0;
  for (size_t i = 0; i < source.size(); ++i) {
    if (block_depth > 0) {
      if (source.compare(i, 2, "/-") == 0) {
        ++block_depth;
        ++i;
      } else if (source.compare(i, 2, "-/") == 0) {
        --block_depth;
        ++i;
      }
      continue;
    }
    if (source.compare(i, 2, "/-") == 0) {
      block_depth = 1;
      ++i;
      continue;
    }
    if (source.compare(i, 2, "--") == 0) {
      while (i < source.size() && source[i] != '\n') ++i;
      text += '\n';
      continue;
    }
    text += source[i];
  }
  auto is_word = [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\'';
  };
  size_t pos = 0;
  while ((pos = text.find("sorry", pos)) != std::string::npos) {
    bool left_ok = pos == 0 || !is_word(text[pos - 1]);
    size_t after = pos + 5;
    bool right_ok = after >= text.size() || !is_word(text[after]);
    if (left_ok && right_ok) return true;
    pos = after;
  }
  return false;
}

MockChecker::MockChecker(std::vector<MockCheckRule> rules)
    : rules_(std::move(rules)) {}

MockChecker MockChecker::load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checker rules " + path.string());
  json doc = json::parse(in);
  std::vector<MockCheckRule> rules;
  for (const auto& item : doc) {
    MockCheckRule r;
    r.contains = item.value("contains", "");
    if (item.contains("diagnostics"))
      r.diagnostics = diagnostics_from_json(item["diagnostics"]);
    if (item.contains("uses_sorry"))
      r.uses_sorry = item["uses_sorry"].get<bool>();
    rules.push_back(std::move(r));
  }
  return MockChecker(std::move(rules));
}

CheckReport MockChecker::check(const std::string& source, CheckMode mode) {
  if (source.empty()) throw Error("check: empty source");
  for (const auto& rule : rules_) {
    if (!rule.contains.empty() &&
        source.find(rule.contains) == std::string::npos)
      continue;
    bool uses_sorry =
        rule.uses_sorry ? *rule.uses_sorry : source_mentions_sorry(source);
    return make_report(rule.diagnostics, uses_sorry, mode);
  }
  return make_report({}, source_mentions_sorry(source), mode);
}

// ----------------------------------------------------------------------
// Toolchain backend
// ----------------------------------------------------------------------

ProcessResult run_process(const std::vector<std::string>& argv,
                          const std::filesystem::path& cwd,
                          long long timeout_s) {
  int fds[2];
  if (pipe(fds) != 0) throw Error("pipe() failed");

  pid_t pid = fork();
  if (pid < 0) {
    close(fds[0]);
    close(fds[1]);
    throw Error("fork() failed");
  }
  if (pid == 0) {
    // child: merge stdout/stderr into the pipe, run from the project dir
    dup2(fds[1], STDOUT_FILENO);
    dup2(fds[1], STDERR_FILENO);
    close(fds[0]);
    close(fds[1]);
    if (!cwd.empty() && chdir(cwd.c_str()) != 0) _exit(127);
    std::vector<char*> args;
    for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
    args.push_back(nullptr);
    execvp(args[0], args.data());
    _exit(127);
  }

  close(fds[1]);
  ProcessResult result;
  auto deadline =
      std::chrono::steady_clock::now() + std::chrono::seconds(timeout_s);
  char buf[4096];
  bool open = true;
  while (open) {
    auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
                         deadline - std::chrono::steady_clock::now())
                         .count();
    if (remaining <= 0) {
      result.timed_out = true;
      kill(pid, SIGKILL);
      break;
    }
    struct pollfd pfd{fds[0], POLLIN, 0};
    int rc = poll(&pfd, 1, static_cast<int>(std::min<long long>(remaining, 1000)));
    if (rc > 0) {
      ssize_t n = read(fds[0], buf, sizeof(buf));
      if (n <= 0)
        open = false;
      else
        result.output.append(buf, static_cast<size_t>(n));
    }
  }
  close(fds[0]);
  int status = 0;
  waitpid(pid, &status, 0);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

ToolchainChecker::ToolchainChecker(ToolchainConfig config)
    : config_(std::move(config)) {
  if (config_.command.empty())
    throw ToolchainMissing("checker command is not configured");
}

CheckReport ToolchainChecker::check(const std::string& source,
                                    CheckMode mode) {
  if (source.empty()) throw Error("check: empty source");

  // Bounded pool of concurrent checker subprocesses.
  {
    std::unique_lock<std::mutex> lock(slot_mu_);
    slot_cv_.wait(lock,
                  [&] { return slots_in_use_ < config_.max_parallel_checks; });
    ++slots_in_use_;
  }
  struct SlotRelease {
    ToolchainChecker* self;
    ~SlotRelease() {
      std::lock_guard<std::mutex> lock(self->slot_mu_);
      --self->slots_in_use_;
      self->slot_cv_.notify_one();
    }
  } release{this};

  static std::atomic<unsigned long> counter{0};
  auto scratch_dir = config_.project_dir / "proofmill_scratch";
  std::error_code ec;
  std::filesystem::create_directories(scratch_dir, ec);
  auto scratch = scratch_dir / ("chk_" + std::to_string(getpid()) + "_" +
                                std::to_string(counter.fetch_add(1)) + ".lean");
  {
    std::ofstream out(scratch);
    if (!out) throw ScratchIOError("cannot write " + scratch.string());
    out << source;
  }

  std::vector<std::string> argv;
  bool substituted = false;
  for (const auto& arg : config_.command) {
    std::string a = arg;
    size_t pos = a.find("{file}");
    if (pos != std::string::npos) {
      a.replace(pos, 6, scratch.string());
      substituted = true;
    }
    argv.push_back(std::move(a));
  }
  if (!substituted) argv.push_back(scratch.string());

  auto start = std::chrono::steady_clock::now();
  ProcessResult proc = run_process(argv, config_.project_dir, config_.timeout_s);
  auto elapsed_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                        std::chrono::steady_clock::now() - start)
                        .count();
  std::filesystem::remove(scratch, ec);

  if (proc.timed_out) {
    // Scored as a failed check rather than retried.
    Diagnostic d;
    d.message = "check timed out after " + std::to_string(config_.timeout_s) +
                "s (wall clock)";
    return make_report({d}, false, mode, elapsed_ms);
  }
  if (proc.exit_code == 127)
    throw ToolchainMissing("cannot execute checker command: " + argv[0]);

  bool uses_sorry = false;
  auto diagnostics = parse_diagnostics(proc.output, nullptr, &uses_sorry);
  if (proc.exit_code != 0 &&
      std::none_of(diagnostics.begin(), diagnostics.end(),
                   [](const Diagnostic& d) {
                     return d.severity == Severity::error;
                   })) {
    Diagnostic d;
    d.message = "checker exited with code " + std::to_string(proc.exit_code);
    diagnostics.push_back(std::move(d));
  }
  return make_report(std::move(diagnostics), uses_sorry, mode, elapsed_ms);
}

}  // namespace proofmill::leancheck
