#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "skb/dense_index.hpp"
#include "skb/ranked_list.hpp"

namespace skb {

enum class Metric : std::uint8_t { inner_product = 0, euclidean = 1 };

struct HnswParams {
  int m = 16;                 // max neighbors per node per layer (2m at layer 0)
  int ef_construction = 200;  // beam width while inserting
  int ef_search = 50;         // default beam width at query time
  double level_lambda = 0.0;  // level multiplier; <= 0 means 1/ln(m)

  double effective_lambda() const;
  void validate() const;  // ef_construction >= m, ef_search >= 1
};

// Layered proximity graph over the rows of an EmbeddingMatrix. Vectors are not
// copied; searches take the matrix the index was built from. Construction is
// single-threaded and fully determined by (matrix, params, seed). After the
// final repair pass adjacency is symmetric and degree-capped.
class HnswIndex {
 public:
  const HnswParams& params() const { return params_; }
  Metric metric() const { return metric_; }
  std::size_t size() const { return levels_.size(); }
  int dim() const { return dim_; }
  std::uint32_t entry_point() const { return entry_; }
  int entry_level() const { return entry_level_; }
  int node_level(std::uint32_t node) const { return levels_[node]; }
  std::span<const std::uint32_t> links(std::uint32_t node, int level) const {
    return links_[node][static_cast<std::size_t>(level)];
  }
  std::size_t max_degree(int level) const {
    return level == 0 ? 2 * static_cast<std::size_t>(params_.m)
                      : static_cast<std::size_t>(params_.m);
  }

  void save(const std::filesystem::path& path) const;
  static HnswIndex load(const std::filesystem::path& path);

  friend HnswIndex build_hnsw(const EmbeddingMatrix& matrix, const HnswParams& params,
                              std::uint64_t seed, Metric metric);
  friend class HnswBuilder;

 private:
  HnswParams params_;
  Metric metric_ = Metric::inner_product;
  int dim_ = 0;
  std::uint32_t entry_ = 0;
  int entry_level_ = 0;
  std::vector<int> levels_;
  std::vector<std::vector<std::vector<std::uint32_t>>> links_;  // [node][level]
};

HnswIndex build_hnsw(const EmbeddingMatrix& matrix, const HnswParams& params, std::uint64_t seed,
                     Metric metric = Metric::inner_product);

// Greedy descent through the upper layers, then a beam of width
// max(ef_search, k) at layer 0. Ties break by ascending node id.
RankedList search_hnsw(const HnswIndex& index, const EmbeddingMatrix& matrix,
                       std::span<const float> query, int k,
                       std::optional<int> ef_search_override = std::nullopt);

}  // namespace skb
