#include "skb/textprep.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <sstream>

namespace skb {
namespace {

bool is_ascii_alpha(unsigned char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool is_ascii_digit(unsigned char c) { return c >= '0' && c <= '9'; }
bool is_ascii_punct(unsigned char c) { return std::ispunct(c) != 0 && c < 0x80; }
bool is_space_byte(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

std::string to_lower_ascii(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

// Replaces the typographic apostrophe (U+2019) so the contraction table
// matches either spelling.
std::string normalize_apostrophes(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i + 2 < s.size() && static_cast<unsigned char>(s[i]) == 0xE2 &&
        static_cast<unsigned char>(s[i + 1]) == 0x80 &&
        static_cast<unsigned char>(s[i + 2]) == 0x99) {
      out.push_back('\'');
      i += 2;
    } else {
      out.push_back(s[i]);
    }
  }
  return out;
}

// Rewrites alphabetic+apostrophe chunks through the contraction table.
// Expansions are emitted lowercase regardless of the source casing.
std::string expand_contractions_pass(std::string_view s) {
  std::string in = normalize_apostrophes(s);
  std::string out;
  out.reserve(in.size());
  std::size_t i = 0;
  while (i < in.size()) {
    unsigned char c = static_cast<unsigned char>(in[i]);
    if (is_ascii_alpha(c) || c == '\'') {
      std::size_t j = i;
      while (j < in.size() &&
             (is_ascii_alpha(static_cast<unsigned char>(in[j])) || in[j] == '\'')) {
        ++j;
      }
      std::string chunk = to_lower_ascii(std::string_view(in).substr(i, j - i));
      if (auto expanded = expand_contraction(chunk)) {
        out.append(*expanded);
      } else {
        out.append(in, i, j - i);
      }
      i = j;
    } else {
      out.push_back(in[i]);
      ++i;
    }
  }
  return out;
}

// The lemmatize flag maps to a small suffix stemmer: plural endings first,
// then -ing/-ed/-ly. Not a faithful reproduction of any dictionary lemmatizer.
std::string stem_token(const std::string& token) {
  auto has_vowel = [](std::string_view s) {
    return s.find_first_of("aeiouy") != std::string_view::npos;
  };
  auto ends_with = [&](std::string_view t, std::string_view suf) {
    return t.size() >= suf.size() && t.substr(t.size() - suf.size()) == suf;
  };
  std::string t = token;
  if (ends_with(t, "sses")) {
    t.resize(t.size() - 2);
  } else if (ends_with(t, "ies") && t.size() > 4) {
    t.resize(t.size() - 3);
    t.push_back('y');
  } else if (ends_with(t, "s") && t.size() > 3 && !ends_with(t, "ss") && !ends_with(t, "us") &&
             !ends_with(t, "is")) {
    t.resize(t.size() - 1);
  }
  if (ends_with(t, "ing") && t.size() > 5 && has_vowel(std::string_view(t).substr(0, t.size() - 3))) {
    t.resize(t.size() - 3);
  } else if (ends_with(t, "ed") && t.size() > 4 &&
             has_vowel(std::string_view(t).substr(0, t.size() - 2))) {
    t.resize(t.size() - 2);
  } else if (ends_with(t, "ly") && t.size() > 4) {
    t.resize(t.size() - 2);
  }
  return t;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) {
    if (p.empty()) continue;
    if (!out.empty()) out.push_back(' ');
    out.append(p);
  }
  return out;
}

const std::vector<std::string> kF1 = {"title"};
const std::vector<std::string> kF2 = {"title", "brand", "global_category", "category", "color"};
const std::vector<std::string> kF3 = {"title",   "brand",       "global_category", "category",
                                      "color",   "feature",     "description",     "details",
                                      "price",   "rank"};
const std::vector<std::string> kF4 = {"title",   "brand",       "global_category", "category",
                                      "color",   "feature",     "description",     "details",
                                      "price",   "rank",        "review",          "qa"};

}  // namespace

void apply_preset(PreprocessConfig& config, std::string_view name) {
  if (name == "TP1") {
    config.lowercase = true;
    config.expand_contractions = false;
    config.strip_special_chars = false;
    config.strip_punctuation = false;
    config.remove_stopwords = false;
    config.remove_digits = false;
    config.lemmatize = false;
  } else if (name == "TP2") {
    config.lowercase = true;
    config.expand_contractions = true;
    config.strip_special_chars = true;
    config.strip_punctuation = true;
    config.remove_stopwords = false;
    config.remove_digits = false;
    config.lemmatize = false;
  } else if (name == "TP3") {
    config.lowercase = true;
    config.expand_contractions = true;
    config.strip_special_chars = true;
    config.strip_punctuation = true;
    config.remove_stopwords = true;
    config.remove_digits = true;
    config.lemmatize = true;
  } else if (name == "TP4") {
    config.lowercase = true;
    config.expand_contractions = true;
    config.strip_special_chars = true;
    config.strip_punctuation = true;
    config.remove_stopwords = true;
    config.remove_digits = false;
    config.lemmatize = false;
  } else if (name == "F1") {
    config.fields_included = kF1;
  } else if (name == "F2") {
    config.fields_included = kF2;
  } else if (name == "F3") {
    config.fields_included = kF3;
  } else if (name == "F4") {
    config.fields_included = kF4;
  } else {
    throw ConfigError("unknown preprocess preset: " + std::string(name));
  }
}

PreprocessConfig preprocess_preset(std::string_view name) {
  PreprocessConfig config;
  apply_preset(config, name);
  return config;
}

const std::vector<std::string>& document_field_names() {
  static const std::vector<std::string> kAll = {
      "asin",    "title",  "global_category", "category", "price",  "brand", "color",
      "feature", "rank",   "details",         "description", "review", "qa"};
  return kAll;
}

std::string_view field_label(std::string_view field) {
  if (field == "asin") return "ASIN:";
  if (field == "title") return "Title:";
  if (field == "global_category") return "Department:";  // no label is a substring of another
  if (field == "category") return "Category:";
  if (field == "price") return "Price:";
  if (field == "brand") return "Brand:";
  if (field == "color") return "Color:";
  if (field == "feature") return "Features:";
  if (field == "rank") return "Rank:";
  if (field == "details") return "Details:";
  if (field == "description") return "Description:";
  if (field == "review") return "Reviews:";
  if (field == "qa") return "QA:";
  throw ConfigError("unknown document field: " + std::string(field));
}

std::string clean_text(std::string_view text, const PreprocessConfig& config) {
  std::string s(text);
  if (config.lowercase) s = to_lower_ascii(s);
  if (config.expand_contractions) s = expand_contractions_pass(s);
  if (config.strip_special_chars) {
    for (char& c : s) {
      unsigned char u = static_cast<unsigned char>(c);
      if (!is_ascii_alpha(u) && !is_ascii_digit(u) && !is_ascii_punct(u) && !is_space_byte(u)) {
        c = ' ';
      }
    }
  }
  if (config.strip_punctuation) {
    for (char& c : s) {
      if (is_ascii_punct(static_cast<unsigned char>(c))) c = ' ';
    }
  }

  std::vector<std::string> tokens = tokenize(s);
  if (config.remove_stopwords) {
    std::erase_if(tokens, [](const std::string& t) { return is_stopword(t); });
  }
  if (config.remove_digits) {
    for (auto& t : tokens) {
      t.erase(std::remove_if(t.begin(), t.end(),
                             [](unsigned char c) { return is_ascii_digit(c); }),
              t.end());
    }
    std::erase_if(tokens, [](const std::string& t) { return t.empty(); });
  }
  if (config.lemmatize) {
    for (auto& t : tokens) t = stem_token(t);
  }

  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out.push_back(' ');
    out.append(t);
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space_byte(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_space_byte(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) tokens.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return tokens;
}

std::optional<double> format_price(std::string_view raw, bool* warned) {
  std::string s(raw);
  std::erase_if(s, [](unsigned char c) { return is_space_byte(c) || c == ','; });
  if (!s.empty() && s.front() == '$') s.erase(s.begin());
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end == nullptr || *end != '\0') {
    if (warned) *warned = true;
    return std::nullopt;
  }
  return v;
}

std::string format_rank(std::string_view raw) {
  std::string out;
  for (char c : raw) {
    if (is_ascii_digit(static_cast<unsigned char>(c))) out.push_back(c);
  }
  return out;
}

std::string flatten_reviews(const NodeRecord& node) {
  std::string out;
  for (const auto& r : node.review) {
    for (const std::string* part : {&r.summary, &r.text}) {
      if (part->empty()) continue;
      if (!out.empty()) out.push_back(' ');
      out.append(*part);
    }
  }
  return out;
}

std::optional<double> average_rating(const NodeRecord& node) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& r : node.review) {
    if (r.rating) {
      sum += *r.rating;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

namespace {

std::string raw_field_text(const NodeRecord& node, const std::string& field) {
  if (field == "asin") return node.asin.value_or("");
  if (field == "title") return node.title.value_or("");
  if (field == "global_category") return node.global_category.value_or("");
  if (field == "category") return join(node.category);
  if (field == "price") {
    auto price = format_price(node.price.value_or(""));
    return price ? format_double(*price) : "";
  }
  if (field == "brand") return node.brand.value_or("");
  if (field == "color") return join(node.color);
  if (field == "feature") return join(node.feature);
  if (field == "rank") return format_rank(node.rank.value_or(""));
  if (field == "details") return node.details.value_or("");
  if (field == "description") return join(node.description);
  if (field == "review") return flatten_reviews(node);
  if (field == "qa") {
    std::string out;
    for (const auto& entry : node.qa) {
      for (const std::string* part : {&entry.question, &entry.answer}) {
        if (part->empty()) continue;
        if (!out.empty()) out.push_back(' ');
        out.append(*part);
      }
    }
    return out;
  }
  throw ConfigError("unknown document field: " + field);
}

void append_labeled(std::string& text, std::string_view label, const std::string& cleaned) {
  if (!text.empty()) text.push_back(' ');
  text.append(label);
  if (!cleaned.empty()) {
    text.push_back(' ');
    text.append(cleaned);
  }
}

}  // namespace

Document build_document(const NodeRecord& node, const PreprocessConfig& config) {
  Document doc;
  doc.node_id = node.node_id;

  if (!node.is_product()) {
    std::string name = node.title.value_or("");
    std::string_view label = "Title:";
    switch (node.node_type) {
      case NodeType::brand:
        label = "Brand:";
        if (name.empty()) name = node.brand.value_or("");
        break;
      case NodeType::category:
        label = "Category:";
        if (name.empty()) name = join(node.category);
        break;
      case NodeType::color:
        label = "Color:";
        if (name.empty()) name = join(node.color);
        break;
      default:
        break;
    }
    append_labeled(doc.text, label, clean_text(name, config));
    doc.token_count = tokenize(doc.text).size();
    return doc;
  }

  const std::vector<std::string>& fields =
      config.fields_included.empty() ? kF4 : config.fields_included;
  for (const auto& field : fields) {
    append_labeled(doc.text, field_label(field), clean_text(raw_field_text(node, field), config));
  }
  doc.token_count = tokenize(doc.text).size();
  return doc;
}

std::vector<Document> build_documents(const KnowledgeGraph& graph, const PreprocessConfig& config) {
  std::vector<NodeId> ids = graph.ids();
  std::sort(ids.begin(), ids.end());
  std::vector<Document> docs;
  docs.reserve(ids.size());
  for (NodeId id : ids) docs.push_back(build_document(graph.node(id), config));
  return docs;
}

}  // namespace skb
