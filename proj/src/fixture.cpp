#include "skb/fixture.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "skb/corpus.hpp"
#include "skb/dense_index.hpp"
#include "skb/rng.hpp"
#include "skb/textprep.hpp"

namespace skb {
namespace {

constexpr std::array<std::string_view, 8> kNouns = {
    "bike rack", "tent", "kayak paddle", "climbing rope",
    "camping stove", "trail map", "unicycle", "sleeping bag"};

constexpr std::array<std::string_view, 12> kAdjectives = {
    "durable", "compact",    "lightweight", "waterproof", "foldable",  "premium",
    "ergonomic", "portable", "adjustable",  "reinforced", "insulated", "collapsible"};

// Paraphrases used by half the queries; none of these tokens appear in any
// document, so retrieval cannot rely on the adjective for those queries.
constexpr std::array<std::string_view, 12> kAdjectiveParaphrases = {
    "long lasting", "space saving", "featherweight", "rainproof",
    "folding",      "high end",     "comfortable",   "travel friendly",
    "tunable",      "extra sturdy", "thermal lined", "packable"};

constexpr std::array<std::string_view, 12> kBrands = {
    "rhode gear", "aue verlag", "summit works", "trailforge", "northpeak", "basecamp co",
    "riverline",  "stonepath",  "alpenglow",    "driftwood",  "ironwood",  "clearwater"};

constexpr std::array<std::string_view, 10> kCategories = {
    "bike racks", "tents",     "paddles",       "ropes",    "stoves",
    "maps",       "unicycles", "sleeping bags", "lanterns", "backpacks"};

constexpr std::array<std::string_view, 8> kColors = {
    "forest green", "slate gray",  "burnt orange", "deep indigo",
    "sandstone",    "crimson",     "arctic white", "charcoal"};

constexpr std::array<std::string_view, 8> kFeatures = {
    "securely carries heavy loads",
    "fits most standard mounts",
    "powder-coated steel construction",
    "easy to store in a corner",
    "weather resistant coating",
    "quick release buckles",
    "padded shoulder straps",
    "tool-free assembly"};

constexpr std::array<std::string_view, 6> kReviewSummaries = {
    "very solid", "works great", "not bad",
    "excellent value", "would buy again", "does the job"};

constexpr std::array<std::string_view, 6> kReviewTexts = {
    "Used it every weekend and it held up well.",
    "Setup took five minutes and it feels sturdy.",
    "Decent quality for the price, shipping was quick.",
    "Exactly as described, my whole family uses it.",
    "A bit heavy but extremely reliable outdoors.",
    "The finish scratched quickly but it still works."};

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// Deterministic pseudo-embedding: sum of per-token gaussian vectors, then
// normalized, so token overlap translates into cosine similarity.
std::vector<float> text_embedding(const std::string& cleaned, int dim, std::uint64_t seed) {
  std::vector<double> accum(static_cast<std::size_t>(dim), 0.0);
  for (const std::string& token : tokenize(cleaned)) {
    Rng token_rng(fnv1a(token) ^ seed);
    for (int d = 0; d < dim; ++d) accum[static_cast<std::size_t>(d)] += token_rng.next_gaussian();
  }
  double norm_sq = 0.0;
  for (double v : accum) norm_sq += v * v;
  if (norm_sq <= 0.0) {
    accum.assign(static_cast<std::size_t>(dim), 1.0);
    norm_sq = static_cast<double>(dim);
  }
  const double inv = 1.0 / std::sqrt(norm_sq);
  std::vector<float> out(static_cast<std::size_t>(dim));
  for (int d = 0; d < dim; ++d) {
    out[static_cast<std::size_t>(d)] = static_cast<float>(accum[static_cast<std::size_t>(d)] * inv);
  }
  return out;
}

}  // namespace

FixturePaths write_fixture(const std::filesystem::path& dir, const FixtureSpec& spec) {
  std::filesystem::create_directories(dir / "embeddings");
  Rng rng(spec.seed);

  const NodeId brand_base = spec.products;
  const NodeId category_base = brand_base + spec.brands;
  const NodeId color_base = category_base + spec.categories;
  const NodeId node_count = color_base + spec.colors;

  std::vector<NodeRecord> nodes;
  nodes.reserve(static_cast<std::size_t>(node_count));

  std::vector<std::size_t> noun_of(static_cast<std::size_t>(spec.products));
  std::vector<std::size_t> adjective_of(static_cast<std::size_t>(spec.products));

  for (int i = 0; i < spec.products; ++i) {
    NodeRecord rec;
    rec.node_id = i;
    rec.node_type = NodeType::product;
    const std::size_t noun = static_cast<std::size_t>(i) % kNouns.size();
    const std::size_t adjective = static_cast<std::size_t>(rng.next_below(kAdjectives.size()));
    noun_of[static_cast<std::size_t>(i)] = noun;
    adjective_of[static_cast<std::size_t>(i)] = adjective;

    rec.title = std::string(kAdjectives[adjective]) + " " + std::string(kNouns[noun]) + " mk" +
                std::to_string(i);
    rec.asin = "B" + std::to_string(100000000 + i);
    rec.global_category = "Sports and Outdoors";
    rec.category = {std::string(kCategories[noun % kCategories.size()])};
    if (rng.next_below(8) != 0) {
      rec.price = "$" + std::to_string(5 + rng.next_below(200)) + "." +
                  std::to_string(10 + rng.next_below(90));
    } else {
      rec.price = "";  // blank price, as in real exports
    }
    if (rng.next_below(10) != 0) {
      rec.brand = std::string(kBrands[rng.next_below(kBrands.size())]);
    }
    if (rng.next_below(3) == 0) {
      rec.color = {std::string(kColors[rng.next_below(kColors.size())])};
    }
    const std::uint64_t n_features = rng.next_below(3);
    for (std::uint64_t f = 0; f < n_features; ++f) {
      rec.feature.push_back(std::string(kFeatures[rng.next_below(kFeatures.size())]));
    }
    rec.rank = std::to_string(1000 + rng.next_below(900000)) + " in Sports & Outdoors";
    rec.description = {"An affordable " + std::string(kNouns[noun]) + " for everyday use."};
    const std::uint64_t n_reviews = rng.next_below(4);
    for (std::uint64_t r = 0; r < n_reviews; ++r) {
      Review review;
      review.reviewer_id = "A" + std::to_string(10000 + rng.next_below(90000));
      review.summary = std::string(kReviewSummaries[rng.next_below(kReviewSummaries.size())]);
      review.text = std::string(kReviewTexts[rng.next_below(kReviewTexts.size())]);
      review.rating = static_cast<double>(1 + rng.next_below(5));
      rec.review.push_back(std::move(review));
    }
    if (rng.next_below(5) == 0) {
      rec.qa.push_back({"Can this be attached to a truck?", "Yes, with the standard mount."});
    }

    const std::uint64_t n_buy = rng.next_below(7);
    for (std::uint64_t e = 0; e < n_buy; ++e) {
      rec.also_buy.push_back(static_cast<NodeId>(rng.next_below(spec.products)));
    }
    if (rng.next_below(17) == 0) rec.also_buy.push_back(rec.node_id);  // self-loop fodder
    const std::uint64_t n_view = rng.next_below(7);
    for (std::uint64_t e = 0; e < n_view; ++e) {
      rec.also_view.push_back(static_cast<NodeId>(rng.next_below(spec.products)));
    }
    if (rng.next_below(10) == 0) {
      // occasional non-product neighbor so the expansion filter has work to do
      rec.also_view.push_back(brand_base + static_cast<NodeId>(rng.next_below(spec.brands)));
    }
    nodes.push_back(std::move(rec));
  }

  for (int i = 0; i < spec.brands; ++i) {
    NodeRecord rec;
    rec.node_id = brand_base + i;
    rec.node_type = NodeType::brand;
    rec.brand = std::string(kBrands[static_cast<std::size_t>(i) % kBrands.size()]);
    nodes.push_back(std::move(rec));
  }
  for (int i = 0; i < spec.categories; ++i) {
    NodeRecord rec;
    rec.node_id = category_base + i;
    rec.node_type = NodeType::category;
    rec.category = {std::string(kCategories[static_cast<std::size_t>(i) % kCategories.size()])};
    nodes.push_back(std::move(rec));
  }
  for (int i = 0; i < spec.colors; ++i) {
    NodeRecord rec;
    rec.node_id = color_base + i;
    rec.node_type = NodeType::color;
    rec.color = {std::string(kColors[static_cast<std::size_t>(i) % kColors.size()])};
    nodes.push_back(std::move(rec));
  }

  std::vector<QueryRecord> queries;
  queries.reserve(static_cast<std::size_t>(spec.queries + spec.big_queries));
  for (int q = 0; q < spec.queries; ++q) {
    const std::size_t target = static_cast<std::size_t>(rng.next_below(spec.products));
    QueryRecord record;
    record.query_id = 1000 + q;
    // Half the queries name the adjective verbatim; the other half paraphrase
    // it, so lexical retrieval only sees the (much more common) noun.
    const std::string_view wording = rng.next_below(2) == 0
                                         ? kAdjectives[adjective_of[target]]
                                         : kAdjectiveParaphrases[adjective_of[target]];
    record.text = "What are some " + std::string(wording) + " " +
                  std::string(kNouns[noun_of[target]]) + " options?";
    for (int i = 0; i < spec.products; ++i) {
      if (noun_of[static_cast<std::size_t>(i)] == noun_of[target] &&
          adjective_of[static_cast<std::size_t>(i)] == adjective_of[target]) {
        record.answer_ids.push_back(i);
      }
    }
    queries.push_back(std::move(record));
  }
  for (int q = 0; q < spec.big_queries; ++q) {
    const std::size_t noun = static_cast<std::size_t>(q) % kNouns.size();
    QueryRecord record;
    record.query_id = 1000 + spec.queries + q;
    record.text = "Show me every " + std::string(kNouns[noun]) + " you have";
    for (int i = 0; i < spec.products; ++i) {
      if (noun_of[static_cast<std::size_t>(i)] == noun) record.answer_ids.push_back(i);
    }
    queries.push_back(std::move(record));
  }

  FixturePaths paths;
  paths.nodes = dir / "nodes.jsonl";
  paths.queries = dir / "queries.jsonl";
  paths.nodes_manifest = dir / "embeddings" / "nodes.manifest.json";
  paths.nodes_data = dir / "embeddings" / "nodes.f32";
  paths.queries_manifest = dir / "embeddings" / "queries.manifest.json";
  paths.queries_data = dir / "embeddings" / "queries.f32";

  {
    std::ofstream out(paths.nodes, std::ios::trunc);
    if (!out) throw IoError("cannot write fixture nodes: " + paths.nodes.string());
    for (const auto& rec : nodes) out << node_to_jsonl(rec) << "\n";
  }
  {
    std::ofstream out(paths.queries, std::ios::trunc);
    if (!out) throw IoError("cannot write fixture queries: " + paths.queries.string());
    for (const auto& rec : queries) out << query_to_jsonl(rec) << "\n";
  }

  if (spec.embeddings) {
    PreprocessConfig config = preprocess_preset("TP4");
    apply_preset(config, "F4");

    std::vector<NodeId> node_ids;
    std::vector<float> node_data;
    node_data.reserve(nodes.size() * static_cast<std::size_t>(spec.dim));
    for (const auto& rec : nodes) {
      node_ids.push_back(rec.node_id);
      Document doc = build_document(rec, config);
      std::vector<float> vec = text_embedding(doc.text, spec.dim, spec.seed);
      node_data.insert(node_data.end(), vec.begin(), vec.end());
    }
    EmbeddingMatrix node_matrix =
        EmbeddingMatrix::from_rows(std::move(node_ids), std::move(node_data), spec.dim, true);
    node_matrix.save(paths.nodes_manifest, paths.nodes_data);

    std::vector<NodeId> query_ids;
    std::vector<float> query_data;
    for (const auto& rec : queries) {
      query_ids.push_back(rec.query_id);
      std::vector<float> vec = text_embedding(clean_text(rec.text, config), spec.dim, spec.seed);
      query_data.insert(query_data.end(), vec.begin(), vec.end());
    }
    EmbeddingMatrix query_matrix =
        EmbeddingMatrix::from_rows(std::move(query_ids), std::move(query_data), spec.dim, true);
    query_matrix.save(paths.queries_manifest, paths.queries_data);
  }

  return paths;
}

}  // namespace skb
