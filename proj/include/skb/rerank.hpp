#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "skb/ranked_list.hpp"
#include "skb/textprep.hpp"

namespace skb {

enum class ScorerKind {
  lexical_builtin,     // deterministic token-overlap scorer, no model needed
  external_pointwise,  // one HTTP request per batch of documents
  external_setwise,    // one HTTP request carrying the whole candidate set
  oracle_test,         // scores 1 for relevant ids; test-only, reads ground truth
};

struct ScorerSpec {
  ScorerKind kind = ScorerKind::lexical_builtin;
  std::string endpoint;  // required for external kinds; http://host:port[/path]
  int batch_size = 16;
  int max_doc_chars = 4000;  // wire-level truncation of document text
  int timeout_sec = 30;
  int retries = 2;
  double backoff_initial_sec = 0.1;

  void validate() const;
};

struct CandidateDoc {
  NodeId id = 0;
  std::string text;
};

class Scorer {
 public:
  virtual ~Scorer() = default;
  // One score per doc, aligned with the input order.
  virtual std::vector<double> score(std::string_view query,
                                    std::span<const CandidateDoc> docs) = 0;
};

// Scorer factory. oracle_test needs ground truth and must be constructed
// through make_oracle_scorer instead.
std::unique_ptr<Scorer> make_scorer(const ScorerSpec& spec);
std::unique_ptr<Scorer> make_oracle_scorer(std::unordered_set<NodeId> relevant_ids);

// |query tokens ∩ doc tokens| / |query tokens|; 0 for an empty query.
double lexical_overlap_score(std::span<const std::string> query_tokens,
                             std::span<const std::string> doc_tokens);

std::vector<double> external_score_pointwise(std::string_view query,
                                             std::span<const CandidateDoc> docs,
                                             const ScorerSpec& spec);
std::vector<double> external_score_setwise(std::string_view query,
                                           std::span<const CandidateDoc> docs,
                                           const ScorerSpec& spec);

using DocumentMap = std::unordered_map<NodeId, Document>;

// Reorders candidates by descending scorer output; equal scores keep their
// input order. Every candidate must have a document. The output is a
// permutation of the input with rerank scores recorded and k_retrieved reset
// to 0 (the retrieved-prefix guarantee no longer holds).
RankedList rerank(std::string_view query_text, const RankedList& candidates,
                  const DocumentMap& documents, Scorer& scorer);
RankedList rerank(std::string_view query_text, const RankedList& candidates,
                  const DocumentMap& documents, const ScorerSpec& spec);

}  // namespace skb
