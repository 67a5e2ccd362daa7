#include <algorithm>
#include <array>
#include <string_view>
#include <utility>

#include "skb/textprep.hpp"

namespace skb {
namespace {

// Classic English stopword list; sorted so lookup can binary-search.
constexpr std::array<std::string_view, 127> kStopwords = {
    "a",       "about",   "above",  "after",   "again",    "against", "all",     "am",
    "an",      "and",     "any",    "are",     "as",       "at",      "be",      "because",
    "been",    "before",  "being",  "below",   "between",  "both",    "but",     "by",
    "can",     "cannot",  "could",  "did",     "do",       "does",    "doing",   "down",
    "during",  "each",    "few",    "for",     "from",     "further", "had",     "has",
    "have",    "having",  "he",     "her",     "here",     "hers",    "herself", "him",
    "himself", "his",     "how",    "i",       "if",       "in",      "into",    "is",
    "it",      "its",     "itself", "just",    "me",       "more",    "most",    "my",
    "myself",  "no",      "nor",    "not",     "now",      "of",      "off",     "on",
    "once",    "only",    "or",     "other",   "our",      "ours",    "ourselves", "out",
    "over",    "own",     "same",   "she",     "should",   "so",      "some",    "such",
    "than",    "that",    "the",    "their",   "theirs",   "them",    "themselves", "then",
    "there",   "these",   "they",   "this",    "those",    "through", "to",      "too",
    "under",   "until",   "up",     "very",    "was",      "we",      "were",    "what",
    "when",    "where",   "which",  "while",   "who",      "whom",    "why",     "will",
    "with",    "would",   "you",    "your",    "yours",    "yourself", "yourselves",
};

constexpr std::array<std::pair<std::string_view, std::string_view>, 58> kContractions = {{
    {"ain't", "is not"},
    {"aren't", "are not"},
    {"can't", "cannot"},
    {"could've", "could have"},
    {"couldn't", "could not"},
    {"didn't", "did not"},
    {"doesn't", "does not"},
    {"don't", "do not"},
    {"hadn't", "had not"},
    {"hasn't", "has not"},
    {"haven't", "have not"},
    {"he'd", "he would"},
    {"he'll", "he will"},
    {"he's", "he is"},
    {"here's", "here is"},
    {"how's", "how is"},
    {"i'd", "i would"},
    {"i'll", "i will"},
    {"i'm", "i am"},
    {"i've", "i have"},
    {"isn't", "is not"},
    {"it'd", "it would"},
    {"it'll", "it will"},
    {"it's", "it is"},
    {"let's", "let us"},
    {"mightn't", "might not"},
    {"might've", "might have"},
    {"must've", "must have"},
    {"mustn't", "must not"},
    {"needn't", "need not"},
    {"shan't", "shall not"},
    {"she'd", "she would"},
    {"she'll", "she will"},
    {"she's", "she is"},
    {"should've", "should have"},
    {"shouldn't", "should not"},
    {"that's", "that is"},
    {"there's", "there is"},
    {"they'd", "they would"},
    {"they'll", "they will"},
    {"they're", "they are"},
    {"they've", "they have"},
    {"wasn't", "was not"},
    {"we'd", "we would"},
    {"we'll", "we will"},
    {"we're", "we are"},
    {"we've", "we have"},
    {"weren't", "were not"},
    {"what's", "what is"},
    {"where's", "where is"},
    {"who's", "who is"},
    {"won't", "will not"},
    {"would've", "would have"},
    {"wouldn't", "would not"},
    {"you'd", "you would"},
    {"you'll", "you will"},
    {"you're", "you are"},
    {"you've", "you have"},
}};

}  // namespace

bool is_stopword(std::string_view token) {
  return std::binary_search(kStopwords.begin(), kStopwords.end(), token);
}

std::optional<std::string_view> expand_contraction(std::string_view token) {
  for (const auto& [from, to] : kContractions) {
    if (from == token) return to;
  }
  return std::nullopt;
}

}  // namespace skb
