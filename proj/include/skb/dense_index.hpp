#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "skb/ranked_list.hpp"

namespace skb {

// Precomputed vectors, one row per id, row-major float32. Manifest is a JSON
// object {dim, count, normalized, ids}; the data file is raw little-endian
// floats with no header.
class EmbeddingMatrix {
 public:
  int dim() const { return dim_; }
  std::size_t count() const { return ids_.size(); }
  bool normalized() const { return normalized_; }
  const std::vector<NodeId>& ids() const { return ids_; }
  NodeId id_at(std::size_t row) const { return ids_[row]; }

  std::span<const float> row(std::size_t i) const {
    return {data_.data() + i * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
  }
  std::optional<std::size_t> row_of(NodeId id) const {
    auto it = id_to_row_.find(id);
    if (it == id_to_row_.end()) return std::nullopt;
    return it->second;
  }

  static EmbeddingMatrix from_rows(std::vector<NodeId> ids, std::vector<float> data, int dim,
                                   bool normalize);

  void save(const std::filesystem::path& manifest_path,
            const std::filesystem::path& data_path) const;

 private:
  int dim_ = 0;
  bool normalized_ = false;
  std::vector<NodeId> ids_;
  std::vector<float> data_;
  std::unordered_map<NodeId, std::size_t> id_to_row_;

  friend EmbeddingMatrix load_embeddings(const std::filesystem::path& manifest_path,
                                         const std::filesystem::path& data_path);
};

// Validates data size against the manifest and L2-normalizes rows when the
// manifest requests it.
EmbeddingMatrix load_embeddings(const std::filesystem::path& manifest_path,
                                const std::filesystem::path& data_path);

// Exact top-k by descending inner product (cosine on unit vectors), ties by
// ascending node id. Scores accumulate in double, sequentially, so results are
// reproducible bit-for-bit.
RankedList search_flat(const EmbeddingMatrix& matrix, std::span<const float> query, int k);

double dot_product(std::span<const float> a, std::span<const float> b);

struct EmbedEndpoint {
  std::string url;  // http://host:port[/path], path defaults to /embed
  int timeout_sec = 30;
  int batch_size = 32;
};

// POST {"texts": [...]} -> {"vectors": [[...], ...]}, batched. Vector count
// and order follow the input; expected_dim > 0 enforces the index dimension.
std::vector<std::vector<float>> embed_external(std::span<const std::string> texts,
                                               const EmbedEndpoint& endpoint,
                                               int expected_dim = 0);

}  // namespace skb
