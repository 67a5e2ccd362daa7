#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "skb/ranked_list.hpp"
#include "skb/textprep.hpp"

namespace skb {

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

struct Posting {
  NodeId doc_id = 0;
  std::uint32_t term_frequency = 0;
};

// Term -> postings inverted index with the document statistics BM25 needs.
// Immutable after build; concurrent searches are safe. Persisted as a single
// binary file (docs/file_formats.md) that reloads bit-identically.
class InvertedIndex {
 public:
  std::size_t doc_count() const { return doc_lengths_.size(); }
  double avg_doc_length() const { return avg_doc_length_; }
  const Bm25Params& params() const { return params_; }
  const PreprocessConfig& preprocess() const { return preprocess_; }

  std::size_t doc_frequency(const std::string& term) const;
  // Postings sorted by doc_id; empty span for unknown terms.
  std::span<const Posting> postings(const std::string& term) const;
  bool contains_doc(NodeId doc_id) const { return doc_lengths_.count(doc_id) != 0; }
  std::size_t doc_length(NodeId doc_id) const;

  void save(const std::filesystem::path& path) const;
  static InvertedIndex load(const std::filesystem::path& path);

  friend InvertedIndex build_sparse_index(std::span<const Document> documents,
                                          const Bm25Params& params,
                                          const PreprocessConfig& preprocess);

 private:
  std::unordered_map<std::string, std::vector<Posting>> postings_;
  std::unordered_map<NodeId, std::uint32_t> doc_lengths_;
  double avg_doc_length_ = 0.0;
  Bm25Params params_;
  PreprocessConfig preprocess_;  // cleaning used for documents; reused for queries
};

// Documents must have unique node ids. The preprocess config is stored with
// the index so query-time cleaning matches document cleaning after reload.
InvertedIndex build_sparse_index(std::span<const Document> documents, const Bm25Params& params,
                                 const PreprocessConfig& preprocess = {});

// Okapi BM25 with idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5)). Every
// occurrence of a term in query_terms contributes once.
double bm25_score(const InvertedIndex& index, std::span<const std::string> query_terms,
                  NodeId doc_id, const Bm25Params& params);

// Top-k by descending score, ties by ascending doc id. Documents sharing no
// query term are excluded, so the result may be shorter than k.
RankedList search_sparse(const InvertedIndex& index, std::string_view query_text, int k,
                         const PreprocessConfig& config);

}  // namespace skb
