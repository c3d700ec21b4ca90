#pragma once

#include <stdexcept>
#include <string>

namespace proofmill {

// Base for every domain error. CLI exit codes are derived from the
// concrete type: ConfigError -> 1, IoError -> 2, everything else is
// per-problem data, not a process failure.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

// -- core --------------------------------------------------------------
struct MissingField : Error {
  explicit MissingField(const std::string& field)
      : Error("missing required field: " + field), field(field) {}
  std::string field;
};

struct EmptyStatement : Error {
  EmptyStatement() : Error("informal_statement is empty") {}
};

struct PhaseOrderViolation : Error {
  PhaseOrderViolation(const std::string& last, const std::string& attempted)
      : Error("phase order violation: " + attempted + " after " + last),
        last(last),
        attempted(attempted) {}
  std::string last;
  std::string attempted;
};

// -- gateway -----------------------------------------------------------
struct BackendUnavailable : Error {
  using Error::Error;
};

struct TransportError : Error {
  using Error::Error;
};

struct EmptyCompletion : Error {
  EmptyCompletion() : Error("backend returned an empty completion") {}
};

struct UnknownModel : Error {
  explicit UnknownModel(const std::string& id)
      : Error("no price entry for model: " + id), model_id(id) {}
  std::string model_id;
};

// -- leancheck ---------------------------------------------------------
struct CheckerTimeout : Error {
  explicit CheckerTimeout(long long limit_s)
      : Error("checker timed out after " + std::to_string(limit_s) + "s"),
        limit_s(limit_s) {}
  long long limit_s;
};

struct ToolchainMissing : Error {
  using Error::Error;
};

struct ScratchIOError : IoError {
  using IoError::IoError;
};

// -- pipeline ----------------------------------------------------------
struct TagMissing : Error {
  explicit TagMissing(const std::string& tag)
      : Error("tag not found in model output: <" + tag + ">"), tag(tag) {}
  std::string tag;
};

struct InvalidVerdict : Error {
  explicit InvalidVerdict(const std::string& got)
      : Error("verdict must be ALIGNED or NOT_ALIGNED, got: " + got) {}
};

struct InvalidSelection : Error {
  explicit InvalidSelection(const std::string& got)
      : Error("selection must be a positive integer, got: " + got) {}
};

struct AllCandidatesFailed : Error {
  AllCandidatesFailed() : Error("no statement candidate passed the syntax check") {}
};

// -- verification ------------------------------------------------------
struct EmptyPanel : Error {
  EmptyPanel() : Error("effective verifier set is empty") {}
};

struct EmptyVotes : Error {
  EmptyVotes() : Error("cannot aggregate an empty vote list") {}
};

struct UnknownProblem : Error {
  explicit UnknownProblem(const std::string& id)
      : Error("no trajectory for problem: " + id) {}
};

// -- reporting -----------------------------------------------------------
struct UnknownSource : Error {
  UnknownSource() : Error("no difficulty scale for this source") {}
};

struct MissingDifficulty : Error {
  MissingDifficulty() : Error("difficulty value is absent") {}
};

}  // namespace proofmill
