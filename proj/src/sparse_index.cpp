#include "skb/sparse_index.hpp"

#include <algorithm>
#include <cmath>

#include "skb/binio.hpp"

namespace skb {
namespace {

constexpr std::string_view kMagic = "SKBSPIDX";
constexpr std::uint32_t kVersion = 1;

void write_preprocess(BinWriter& w, const PreprocessConfig& c) {
  w.u8(c.lowercase);
  w.u8(c.expand_contractions);
  w.u8(c.strip_special_chars);
  w.u8(c.strip_punctuation);
  w.u8(c.remove_stopwords);
  w.u8(c.remove_digits);
  w.u8(c.lemmatize);
  w.varint(c.fields_included.size());
  for (const auto& f : c.fields_included) w.str(f);
}

PreprocessConfig read_preprocess(BinReader& r) {
  PreprocessConfig c;
  c.lowercase = r.u8() != 0;
  c.expand_contractions = r.u8() != 0;
  c.strip_special_chars = r.u8() != 0;
  c.strip_punctuation = r.u8() != 0;
  c.remove_stopwords = r.u8() != 0;
  c.remove_digits = r.u8() != 0;
  c.lemmatize = r.u8() != 0;
  std::uint64_t n = r.varint();
  c.fields_included.clear();
  for (std::uint64_t i = 0; i < n; ++i) c.fields_included.push_back(r.str());
  return c;
}

}  // namespace

std::size_t InvertedIndex::doc_frequency(const std::string& term) const {
  auto it = postings_.find(term);
  return it == postings_.end() ? 0 : it->second.size();
}

std::span<const Posting> InvertedIndex::postings(const std::string& term) const {
  auto it = postings_.find(term);
  if (it == postings_.end()) return {};
  return it->second;
}

std::size_t InvertedIndex::doc_length(NodeId doc_id) const {
  auto it = doc_lengths_.find(doc_id);
  if (it == doc_lengths_.end()) throw EvalError("unknown doc id: " + std::to_string(doc_id));
  return it->second;
}

InvertedIndex build_sparse_index(std::span<const Document> documents, const Bm25Params& params,
                                 const PreprocessConfig& preprocess) {
  if (documents.empty()) throw EvalError("cannot build an index over zero documents");
  if (!(params.k1 > 0.0)) throw ConfigError("bm25 k1 must be > 0");
  if (params.b < 0.0 || params.b > 1.0) throw ConfigError("bm25 b must be in [0, 1]");

  InvertedIndex index;
  index.params_ = params;
  index.preprocess_ = preprocess;

  std::uint64_t total_length = 0;
  for (const Document& doc : documents) {
    if (!index.doc_lengths_.emplace(doc.node_id, 0).second) {
      throw EvalError("duplicate doc id: " + std::to_string(doc.node_id));
    }
    std::vector<std::string> tokens = tokenize(doc.text);
    index.doc_lengths_[doc.node_id] = static_cast<std::uint32_t>(tokens.size());
    total_length += tokens.size();

    std::unordered_map<std::string, std::uint32_t> counts;
    for (auto& t : tokens) counts[std::move(t)]++;
    for (auto& [term, tf] : counts) {
      index.postings_[term].push_back({doc.node_id, tf});
    }
  }
  for (auto& [term, list] : index.postings_) {
    std::sort(list.begin(), list.end(),
              [](const Posting& a, const Posting& b) { return a.doc_id < b.doc_id; });
  }
  index.avg_doc_length_ =
      static_cast<double>(total_length) / static_cast<double>(documents.size());
  return index;
}

double bm25_score(const InvertedIndex& index, std::span<const std::string> query_terms,
                  NodeId doc_id, const Bm25Params& params) {
  const double dl = static_cast<double>(index.doc_length(doc_id));  // throws if unknown
  const double n = static_cast<double>(index.doc_count());
  const double norm = params.k1 * (1.0 - params.b + params.b * dl / index.avg_doc_length());

  double score = 0.0;
  for (const std::string& term : query_terms) {
    auto list = index.postings(term);
    if (list.empty()) continue;
    auto it = std::lower_bound(list.begin(), list.end(), doc_id,
                               [](const Posting& p, NodeId id) { return p.doc_id < id; });
    if (it == list.end() || it->doc_id != doc_id) continue;
    const double df = static_cast<double>(list.size());
    const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
    const double tf = static_cast<double>(it->term_frequency);
    score += idf * tf * (params.k1 + 1.0) / (tf + norm);
  }
  return score;
}

RankedList search_sparse(const InvertedIndex& index, std::string_view query_text, int k,
                         const PreprocessConfig& config) {
  if (k < 1) throw ConfigError("k must be >= 1");

  RankedList result;
  std::vector<std::string> terms = tokenize(clean_text(query_text, config));
  if (terms.empty()) return result;

  const double n = static_cast<double>(index.doc_count());
  const double avgdl = index.avg_doc_length();
  std::unordered_map<NodeId, double> accum;
  for (const std::string& term : terms) {
    auto list = index.postings(term);
    if (list.empty()) continue;
    const double df = static_cast<double>(list.size());
    const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
    const Bm25Params& params = index.params();
    for (const Posting& p : list) {
      const double dl = static_cast<double>(index.doc_length(p.doc_id));
      const double norm = params.k1 * (1.0 - params.b + params.b * dl / avgdl);
      const double tf = static_cast<double>(p.term_frequency);
      accum[p.doc_id] += idf * tf * (params.k1 + 1.0) / (tf + norm);
    }
  }

  std::vector<std::pair<NodeId, double>> scored(accum.begin(), accum.end());
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (scored.size() > static_cast<std::size_t>(k)) scored.resize(static_cast<std::size_t>(k));

  result.entries.reserve(scored.size());
  for (const auto& [id, score] : scored) {
    result.entries.push_back({id, score, Origin::retrieved});
  }
  result.k_retrieved = result.entries.size();
  return result;
}

void InvertedIndex::save(const std::filesystem::path& path) const {
  BinWriter w(path);
  w.bytes(kMagic);
  w.u32(kVersion);
  w.f64(params_.k1);
  w.f64(params_.b);
  write_preprocess(w, preprocess_);

  w.u64(doc_lengths_.size());
  w.f64(avg_doc_length_);
  std::vector<std::pair<NodeId, std::uint32_t>> docs(doc_lengths_.begin(), doc_lengths_.end());
  std::sort(docs.begin(), docs.end());
  NodeId prev = 0;
  for (const auto& [id, len] : docs) {
    w.zigzag(id - prev);
    w.varint(len);
    prev = id;
  }

  std::vector<const std::string*> terms;
  terms.reserve(postings_.size());
  for (const auto& [term, list] : postings_) terms.push_back(&term);
  std::sort(terms.begin(), terms.end(),
            [](const std::string* a, const std::string* b) { return *a < *b; });
  w.u64(terms.size());
  for (const std::string* term : terms) {
    w.str(*term);
    const auto& list = postings_.at(*term);
    w.varint(list.size());
    NodeId prev_doc = 0;
    for (const Posting& p : list) {
      w.zigzag(p.doc_id - prev_doc);
      w.varint(p.term_frequency);
      prev_doc = p.doc_id;
    }
  }
  w.close();
}

InvertedIndex InvertedIndex::load(const std::filesystem::path& path) {
  BinReader r(path);
  r.expect_magic(kMagic);
  std::uint32_t version = r.u32();
  if (version != kVersion) {
    throw IoError("unsupported index version " + std::to_string(version) + " in " + path.string());
  }

  InvertedIndex index;
  index.params_.k1 = r.f64();
  index.params_.b = r.f64();
  index.preprocess_ = read_preprocess(r);

  std::uint64_t doc_count = r.u64();
  index.avg_doc_length_ = r.f64();
  index.doc_lengths_.reserve(doc_count);
  NodeId prev = 0;
  for (std::uint64_t i = 0; i < doc_count; ++i) {
    NodeId id = prev + r.zigzag();
    std::uint32_t len = static_cast<std::uint32_t>(r.varint());
    index.doc_lengths_.emplace(id, len);
    prev = id;
  }

  std::uint64_t term_count = r.u64();
  index.postings_.reserve(term_count);
  for (std::uint64_t i = 0; i < term_count; ++i) {
    std::string term = r.str();
    std::uint64_t n = r.varint();
    std::vector<Posting> list;
    list.reserve(n);
    NodeId prev_doc = 0;
    for (std::uint64_t j = 0; j < n; ++j) {
      NodeId id = prev_doc + r.zigzag();
      std::uint32_t tf = static_cast<std::uint32_t>(r.varint());
      list.push_back({id, tf});
      prev_doc = id;
    }
    index.postings_.emplace(std::move(term), std::move(list));
  }
  return index;
}

}  // namespace skb
