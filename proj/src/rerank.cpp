#include "skb/rerank.hpp"

#include <algorithm>
#include <chrono>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace skb {
namespace {

using nlohmann::json;

std::pair<std::string, std::string> split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  std::size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
  auto path_start = url.find('/', host_start);
  if (path_start == std::string::npos) return {url, "/score"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

std::string truncated(const std::string& text, int max_chars) {
  if (max_chars <= 0 || text.size() <= static_cast<std::size_t>(max_chars)) return text;
  return text.substr(0, static_cast<std::size_t>(max_chars));
}

// One POST with retry/backoff; returns the parsed score list.
std::vector<double> post_scores(const ScorerSpec& spec, std::string_view query,
                                std::span<const CandidateDoc> docs, const char* mode) {
  auto [base, path] = split_url(spec.endpoint);
  httplib::Client client(base);
  client.set_connection_timeout(spec.timeout_sec, 0);
  client.set_read_timeout(spec.timeout_sec, 0);

  json body;
  body["query"] = std::string(query);
  body["mode"] = mode;
  json doc_array = json::array();
  for (const auto& d : docs) {
    doc_array.push_back({{"id", d.id}, {"text", truncated(d.text, spec.max_doc_chars)}});
  }
  body["docs"] = std::move(doc_array);
  const std::string payload = body.dump();

  std::string last_error;
  double backoff = spec.backoff_initial_sec;
  for (int attempt = 0; attempt <= spec.retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
      backoff *= 2.0;
    }
    auto res = client.Post(path, payload, "application/json");
    if (!res) {
      last_error = "no response (" + httplib::to_string(res.error()) + ")";
      continue;
    }
    if (res->status != 200) {
      last_error = "status " + std::to_string(res->status);
      continue;
    }
    json parsed;
    try {
      parsed = json::parse(res->body);
    } catch (const json::exception& e) {
      throw EndpointError(std::string("scorer returned bad JSON: ") + e.what());
    }
    if (!parsed.contains("scores") || !parsed["scores"].is_array()) {
      throw EndpointError("scorer response is missing 'scores'");
    }
    std::vector<double> scores = parsed["scores"].get<std::vector<double>>();
    if (scores.size() != docs.size()) {
      throw EndpointError("scorer returned " + std::to_string(scores.size()) + " scores for " +
                          std::to_string(docs.size()) + " docs");
    }
    return scores;
  }
  throw EndpointError("scorer endpoint failed after " + std::to_string(spec.retries + 1) +
                      " attempts: " + spec.endpoint + " (" + last_error + ")");
}

class LexicalScorer final : public Scorer {
 public:
  std::vector<double> score(std::string_view query, std::span<const CandidateDoc> docs) override {
    PreprocessConfig lower_only;
    lower_only.expand_contractions = false;
    lower_only.strip_special_chars = false;
    lower_only.strip_punctuation = false;
    lower_only.remove_stopwords = false;
    std::vector<std::string> query_tokens = tokenize(clean_text(query, lower_only));
    std::vector<double> out;
    out.reserve(docs.size());
    for (const auto& d : docs) {
      std::vector<std::string> doc_tokens = tokenize(clean_text(d.text, lower_only));
      out.push_back(lexical_overlap_score(query_tokens, doc_tokens));
    }
    return out;
  }
};

class ExternalScorer final : public Scorer {
 public:
  explicit ExternalScorer(ScorerSpec spec) : spec_(std::move(spec)) {}

  std::vector<double> score(std::string_view query, std::span<const CandidateDoc> docs) override {
    if (spec_.kind == ScorerKind::external_setwise) {
      return external_score_setwise(query, docs, spec_);
    }
    return external_score_pointwise(query, docs, spec_);
  }

 private:
  ScorerSpec spec_;
};

class OracleScorer final : public Scorer {
 public:
  explicit OracleScorer(std::unordered_set<NodeId> relevant) : relevant_(std::move(relevant)) {}

  std::vector<double> score(std::string_view, std::span<const CandidateDoc> docs) override {
    std::vector<double> out;
    out.reserve(docs.size());
    for (const auto& d : docs) out.push_back(relevant_.count(d.id) ? 1.0 : 0.0);
    return out;
  }

 private:
  std::unordered_set<NodeId> relevant_;
};

}  // namespace

void ScorerSpec::validate() const {
  const bool external =
      kind == ScorerKind::external_pointwise || kind == ScorerKind::external_setwise;
  if (external && endpoint.empty()) {
    throw ConfigError("external scorer requires an endpoint");
  }
  if (!external && !endpoint.empty()) {
    throw ConfigError("endpoint is only valid for external scorers");
  }
  if (batch_size < 1) throw ConfigError("scorer batch_size must be >= 1");
  if (max_doc_chars < 1) throw ConfigError("scorer max_doc_chars must be >= 1");
}

std::unique_ptr<Scorer> make_scorer(const ScorerSpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case ScorerKind::lexical_builtin:
      return std::make_unique<LexicalScorer>();
    case ScorerKind::external_pointwise:
    case ScorerKind::external_setwise:
      return std::make_unique<ExternalScorer>(spec);
    case ScorerKind::oracle_test:
      throw ConfigError("oracle_test scorer needs ground truth; use make_oracle_scorer");
  }
  throw ConfigError("unknown scorer kind");
}

std::unique_ptr<Scorer> make_oracle_scorer(std::unordered_set<NodeId> relevant_ids) {
  return std::make_unique<OracleScorer>(std::move(relevant_ids));
}

double lexical_overlap_score(std::span<const std::string> query_tokens,
                             std::span<const std::string> doc_tokens) {
  std::unordered_set<std::string_view> query_set(query_tokens.begin(), query_tokens.end());
  if (query_set.empty()) return 0.0;
  std::unordered_set<std::string_view> doc_set(doc_tokens.begin(), doc_tokens.end());
  std::size_t hits = 0;
  for (std::string_view t : query_set) {
    if (doc_set.count(t)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(query_set.size());
}

std::vector<double> external_score_pointwise(std::string_view query,
                                             std::span<const CandidateDoc> docs,
                                             const ScorerSpec& spec) {
  std::vector<double> out;
  out.reserve(docs.size());
  const std::size_t batch = static_cast<std::size_t>(std::max(1, spec.batch_size));
  for (std::size_t start = 0; start < docs.size(); start += batch) {
    const std::size_t end = std::min(docs.size(), start + batch);
    std::vector<double> scores =
        post_scores(spec, query, docs.subspan(start, end - start), "pointwise");
    out.insert(out.end(), scores.begin(), scores.end());
  }
  return out;
}

std::vector<double> external_score_setwise(std::string_view query,
                                           std::span<const CandidateDoc> docs,
                                           const ScorerSpec& spec) {
  if (docs.empty()) return {};
  return post_scores(spec, query, docs, "setwise");
}

RankedList rerank(std::string_view query_text, const RankedList& candidates,
                  const DocumentMap& documents, Scorer& scorer) {
  std::vector<CandidateDoc> docs;
  docs.reserve(candidates.entries.size());
  for (const auto& e : candidates.entries) {
    auto it = documents.find(e.node_id);
    if (it == documents.end()) {
      throw EvalError("no document for candidate node " + std::to_string(e.node_id));
    }
    docs.push_back({e.node_id, it->second.text});
  }

  std::vector<double> scores = scorer.score(query_text, docs);
  if (scores.size() != docs.size()) {
    throw EndpointError("scorer returned " + std::to_string(scores.size()) + " scores for " +
                        std::to_string(docs.size()) + " candidates");
  }

  std::vector<std::size_t> order(candidates.entries.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RankedList out;
  out.query_id = candidates.query_id;
  out.k_retrieved = 0;
  out.entries.reserve(order.size());
  for (std::size_t i : order) {
    RankedEntry e = candidates.entries[i];
    e.score = scores[i];
    out.entries.push_back(e);
  }
  return out;
}

RankedList rerank(std::string_view query_text, const RankedList& candidates,
                  const DocumentMap& documents, const ScorerSpec& spec) {
  auto scorer = make_scorer(spec);
  return rerank(query_text, candidates, documents, *scorer);
}

}  // namespace skb
