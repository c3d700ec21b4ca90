#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "proofmill/core.hpp"
#include "proofmill/gateway.hpp"

namespace proofmill::retrieval {

struct Query {
  std::string text;
  bool operator==(const Query& o) const { return text == o.text; }
};

struct SearchResult {
  Query query;
  std::vector<core::Premise> hits;  // ordered, length <= top_k
};

struct RetrievalOutcome {
  std::vector<Query> queries;
  std::vector<core::Premise> selected;
  std::vector<core::Premise> unselected;  // rejected hits, kept for hard negatives
};

class PremiseIndex {
 public:
  virtual ~PremiseIndex() = default;
  // Throws on transport problems; callers degrade to empty hits.
  virtual SearchResult search(const Query& query, int top_k) = 0;
};

// Local mock index over a bundled JSONL premise file. Scoring is
// case-insensitive token overlap between the query and the premise's
// name + signature; tokens match exactly or by prefix when the shorter
// side has at least three characters (so "commutativity" finds "comm").
// Ties break by name.
class MockIndex : public PremiseIndex {
 public:
  explicit MockIndex(std::vector<core::Premise> premises);
  static MockIndex load_jsonl(const std::filesystem::path& path);

  SearchResult search(const Query& query, int top_k) override;

  static int score(const Query& query, const core::Premise& premise);

 private:
  std::vector<core::Premise> premises_;
};

struct HttpIndexConfig {
  std::string endpoint;
  std::string api_key;
  long long timeout_s = 60;
};

// Client for a remote premise search service: GET {endpoint}?q=...&limit=n
// returning {"results": [{name, signature, kind}]}.
class HttpIndex : public PremiseIndex {
 public:
  explicit HttpIndex(HttpIndexConfig config);
  SearchResult search(const Query& query, int top_k) override;

 private:
  HttpIndexConfig config_;
};

// ----------------------------------------------------------------------
// Parsing of the numbered-list contracts
// ----------------------------------------------------------------------

// Accepts "1. item", "2) item" and "- item" lines; everything else is prose.
std::vector<std::string> parse_numbered_list(const std::string& text);

std::vector<std::string> tokenize_lower(const std::string& text);

// ----------------------------------------------------------------------
// Operations
// ----------------------------------------------------------------------

struct Retriever {
  gateway::Gateway& gw;
  PremiseIndex& index;
  int k_query = 5;
  int top_k = 5;
  int max_attempts = 1;

  // Parses up to k_query queries from one general-model completion,
  // deduplicated preserving order. An output with no list items degrades
  // to no queries (logged) and the pipeline continues.
  std::vector<Query> generate_queries(const std::string& prompt,
                                      core::Phase phase,
                                      core::TrajectoryBuilder& log);

  // Runs every query against the index. An unavailable index degrades to
  // empty hits with a logged event; the pipeline continues.
  std::vector<SearchResult> run_searches(const std::vector<Query>& queries,
                                         core::Phase phase,
                                         core::TrajectoryBuilder& log);

  // One general-model call partitions the deduplicated union of hits into
  // selected / unselected; selections that are not actual hits are dropped.
  RetrievalOutcome select_premises(const std::string& prompt,
                                   const std::vector<Query>& queries,
                                   const std::vector<SearchResult>& results,
                                   core::Phase phase,
                                   core::TrajectoryBuilder& log);
};

std::vector<core::Premise> dedup_hits(const std::vector<SearchResult>& results);

// "name : signature", one per line, for prompt contexts.
std::string render_premises(const std::vector<core::Premise>& premises);

}  // namespace proofmill::retrieval
