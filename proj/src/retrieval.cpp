#include "proofmill/retrieval.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include <httplib.h>

#include "proofmill/jsonl.hpp"

namespace proofmill::retrieval {

// ----------------------------------------------------------------------
// Mock index
// ----------------------------------------------------------------------

MockIndex::MockIndex(std::vector<core::Premise> premises)
    : premises_(std::move(premises)) {}

MockIndex MockIndex::load_jsonl(const std::filesystem::path& path) {
  std::vector<core::Premise> premises;
  for (const auto& row : jsonl::read_file(path))
    premises.push_back(core::premise_from_json(row));
  return MockIndex(std::move(premises));
}

std::vector<std::string> tokenize_lower(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

namespace {

bool token_match(const std::string& a, const std::string& b) {
  if (a == b) return true;
  const std::string& shorter = a.size() <= b.size() ? a : b;
  const std::string& longer = a.size() <= b.size() ? b : a;
  if (shorter.size() < 3) return false;
  return longer.compare(0, shorter.size(), shorter) == 0;
}

}  // namespace

int MockIndex::score(const Query& query, const core::Premise& premise) {
  auto query_tokens = tokenize_lower(query.text);
  auto premise_tokens = tokenize_lower(premise.name);
  for (auto& t : tokenize_lower(premise.signature))
    premise_tokens.push_back(std::move(t));

  std::set<std::string> counted;
  int score = 0;
  for (const auto& qt : query_tokens) {
    if (counted.count(qt)) continue;
    for (const auto& pt : premise_tokens) {
      if (token_match(qt, pt)) {
        ++score;
        counted.insert(qt);
        break;
      }
    }
  }
  return score;
}

SearchResult MockIndex::search(const Query& query, int top_k) {
  struct Scored {
    int score;
    const core::Premise* premise;
  };
  std::vector<Scored> scored;
  for (const auto& p : premises_) {
    int s = score(query, p);
    if (s > 0) scored.push_back({s, &p});
  }
  std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.premise->name < b.premise->name;
  });
  SearchResult result;
  result.query = query;
  for (const auto& s : scored) {
    if (static_cast<int>(result.hits.size()) >= top_k) break;
    result.hits.push_back(*s.premise);
  }
  return result;
}

// ----------------------------------------------------------------------
// HTTP index
// ----------------------------------------------------------------------

HttpIndex::HttpIndex(HttpIndexConfig config) : config_(std::move(config)) {
  if (config_.endpoint.empty())
    throw ConfigError("http index requires an endpoint");
}

SearchResult HttpIndex::search(const Query& query, int top_k) {
  std::string url = config_.endpoint;
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw ConfigError("index endpoint must be an http(s) URL: " + url);
  auto path_start = url.find('/', scheme_end + 3);
  std::string host =
      path_start == std::string::npos ? url : url.substr(0, path_start);
  std::string path =
      path_start == std::string::npos ? "/" : url.substr(path_start);

  httplib::Client client(host);
  client.set_read_timeout(config_.timeout_s, 0);
  httplib::Headers headers;
  if (!config_.api_key.empty())
    headers.emplace("Authorization", "Bearer " + config_.api_key);
  httplib::Params params{{"q", query.text},
                         {"limit", std::to_string(top_k)}};
  auto res = client.Get(path, params, headers);
  if (!res || res->status < 200 || res->status >= 300)
    throw TransportError("premise search unavailable: " + config_.endpoint);

  auto doc = nlohmann::ordered_json::parse(res->body, nullptr, false);
  if (doc.is_discarded())
    throw TransportError("premise search returned malformed JSON");

  SearchResult result;
  result.query = query;
  if (doc.contains("results"))
    for (const auto& item : doc["results"]) {
      result.hits.push_back(core::premise_from_json(item));
      if (static_cast<int>(result.hits.size()) >= top_k) break;
    }
  return result;
}

// ----------------------------------------------------------------------
// Numbered-list parsing
// ----------------------------------------------------------------------

std::vector<std::string> parse_numbered_list(const std::string& text) {
  std::vector<std::string> items;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    size_t i = line.find_first_not_of(" \t");
    if (i == std::string::npos) continue;
    size_t j = i;
    bool digits = false;
    while (j < line.size() && std::isdigit(static_cast<unsigned char>(line[j]))) {
      ++j;
      digits = true;
    }
    if (digits && j < line.size() && (line[j] == '.' || line[j] == ')')) {
      ++j;
    } else if (line[i] == '-' || line[i] == '*') {
      j = i + 1;
    } else {
      continue;
    }
    size_t k = line.find_first_not_of(" \t", j);
    if (k == std::string::npos) continue;
    std::string item = line.substr(k);
    while (!item.empty() && (item.back() == ' ' || item.back() == '\t' ||
                             item.back() == '\r'))
      item.pop_back();
    if (!item.empty()) items.push_back(std::move(item));
  }
  return items;
}

// ----------------------------------------------------------------------
// Operations
// ----------------------------------------------------------------------

std::vector<Query> Retriever::generate_queries(const std::string& prompt,
                                               core::Phase phase,
                                               core::TrajectoryBuilder& log) {
  gateway::ChatRequest req;
  req.role_kind = core::CallKind::general;
  req.prompt = prompt;
  req.max_attempts = max_attempts;
  req.phase = phase;

  std::vector<Query> queries;
  try {
    auto resp = gw.complete(req, log);
    std::set<std::string> seen;
    for (const auto& item : parse_numbered_list(resp.text)) {
      if (static_cast<int>(queries.size()) >= k_query) break;
      if (seen.insert(item).second) queries.push_back(Query{item});
    }
  } catch (const Error& e) {
    log.note("generate_queries", e.what());
  }
  if (queries.empty())
    log.note("generate_queries", "no queries parsed; retrieval degrades to empty");

  std::vector<std::string> texts;
  for (const auto& q : queries) texts.push_back(q.text);
  log.queries(phase, texts);
  return queries;
}

std::vector<SearchResult> Retriever::run_searches(
    const std::vector<Query>& queries, core::Phase phase,
    core::TrajectoryBuilder& log) {
  std::vector<SearchResult> results;
  for (const auto& q : queries) {
    SearchResult r;
    r.query = q;
    bool failed = false;
    try {
      r = index.search(q, top_k);
    } catch (const Error& e) {
      failed = true;
      log.note("search", std::string("search unavailable: ") + e.what());
    }
    log.search(phase, q.text, r.hits, failed);
    results.push_back(std::move(r));
  }
  return results;
}

std::vector<core::Premise> dedup_hits(const std::vector<SearchResult>& results) {
  std::vector<core::Premise> out;
  std::set<std::string> seen;
  for (const auto& r : results)
    for (const auto& h : r.hits)
      if (seen.insert(h.name).second) out.push_back(h);
  return out;
}

RetrievalOutcome Retriever::select_premises(
    const std::string& prompt, const std::vector<Query>& queries,
    const std::vector<SearchResult>& results, core::Phase phase,
    core::TrajectoryBuilder& log) {
  RetrievalOutcome outcome;
  outcome.queries = queries;
  auto candidates = dedup_hits(results);

  std::set<std::string> picked;
  if (!candidates.empty()) {
    gateway::ChatRequest req;
    req.role_kind = core::CallKind::general;
    req.prompt = prompt;
    req.max_attempts = max_attempts;
    req.phase = phase;
    try {
      auto resp = gw.complete(req, log);
      auto items = parse_numbered_list(resp.text);
      if (items.empty()) {
        log.note("select_premises", "selection parse error; keeping none");
      } else {
        for (const auto& item : items) {
          // first token of the item is the premise name
          size_t end = item.find_first_of(" \t:");
          picked.insert(item.substr(0, end));
        }
      }
    } catch (const Error& e) {
      log.note("select_premises", e.what());
    }
  }

  for (const auto& c : candidates) {
    if (picked.count(c.name))
      outcome.selected.push_back(c);
    else
      outcome.unselected.push_back(c);
  }
  log.premises(phase, outcome.selected, outcome.unselected);
  return outcome;
}

std::string render_premises(const std::vector<core::Premise>& premises) {
  std::string out;
  for (const auto& p : premises) {
    out += p.name;
    out += " : ";
    out += p.signature;
    out += "\n";
  }
  return out;
}

}  // namespace proofmill::retrieval
