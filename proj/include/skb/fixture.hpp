#pragma once

#include <cstdint>
#include <filesystem>

namespace skb {

// Synthetic product-catalog corpus for demos and tests: typed nodes, graph
// edges, queries with ground truth, and deterministic pseudo-embeddings that
// correlate with token overlap. Output is a pure function of these parameters.
// Defaults give 200 nodes (170 products round-robin over 8 nouns, so every
// noun covers >20 products) and 50 queries.
struct FixtureSpec {
  int products = 170;
  int brands = 12;
  int categories = 10;
  int colors = 8;
  int queries = 47;       // answer sets of 1..~6 products
  int big_queries = 3;    // answer sets of >20 products (partition filter fodder)
  int dim = 64;
  std::uint64_t seed = 1234;
  bool embeddings = true;
};

struct FixturePaths {
  std::filesystem::path nodes;
  std::filesystem::path queries;
  std::filesystem::path nodes_manifest;
  std::filesystem::path nodes_data;
  std::filesystem::path queries_manifest;
  std::filesystem::path queries_data;
};

FixturePaths write_fixture(const std::filesystem::path& dir, const FixtureSpec& spec = {});

}  // namespace skb
