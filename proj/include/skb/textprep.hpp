#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "skb/corpus.hpp"

namespace skb {

// Cleaning flags applied in a fixed order (see clean_text) plus the ordered
// field list used for document assembly. Flag presets TP1..TP4 and field
// presets F1..F4 are addressable by name.
struct PreprocessConfig {
  bool lowercase = true;
  bool expand_contractions = true;
  bool strip_special_chars = true;
  bool strip_punctuation = true;
  bool remove_stopwords = true;
  bool remove_digits = false;
  bool lemmatize = false;
  std::vector<std::string> fields_included;  // empty means the F4 field set

  bool operator==(const PreprocessConfig&) const = default;
};

// Throws ConfigError for unknown names. TP presets leave fields untouched,
// F presets leave flags untouched.
void apply_preset(PreprocessConfig& config, std::string_view name);
PreprocessConfig preprocess_preset(std::string_view name);

// Field names accepted in fields_included, and the F4 set (all text fields).
const std::vector<std::string>& document_field_names();
// Label prepended to a field's cleaned value, e.g. "brand" -> "Brand:".
std::string_view field_label(std::string_view field);

// Applies enabled steps in order: lowercase, contraction expansion,
// special-char strip, punctuation strip, stopword removal, digit removal,
// suffix lemmatization. Output is single-space separated tokens.
std::string clean_text(std::string_view text, const PreprocessConfig& config);

// Whitespace split of already-cleaned text.
std::vector<std::string> tokenize(std::string_view text);

// "$14.99" -> 14.99; blank -> absent; unparsable non-blank -> absent, and
// *warned set when provided.
std::optional<double> format_price(std::string_view raw, bool* warned = nullptr);

// Keeps digit characters only: "950,041 in Sports & Outdoors" -> "950041".
std::string format_rank(std::string_view raw);

// Per-review summary + body concatenated in stored order.
std::string flatten_reviews(const NodeRecord& node);

// Mean review rating; absent when no review carries a rating.
std::optional<double> average_rating(const NodeRecord& node);

struct Document {
  NodeId node_id = 0;
  std::string text;
  std::size_t token_count = 0;
};

// Labeled-field concatenation in fields_included order; labels stay verbatim,
// values go through clean_text. Non-product nodes reduce to their single name
// field under the node type's label.
Document build_document(const NodeRecord& node, const PreprocessConfig& config);

// Documents for every graph node, ordered by ascending node_id.
std::vector<Document> build_documents(const KnowledgeGraph& graph, const PreprocessConfig& config);

// Bundled static word lists (wordlists.cpp).
bool is_stopword(std::string_view token);
std::optional<std::string_view> expand_contraction(std::string_view token);

}  // namespace skb
