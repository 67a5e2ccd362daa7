#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "skb/common.hpp"

namespace skb {

enum class NodeType : int { product = 0, brand = 1, category = 2, color = 3 };

struct Review {
  std::string reviewer_id;
  std::string summary;
  std::string text;
  std::optional<double> rating;
};

struct QaEntry {
  std::string question;
  std::string answer;
};

// One knowledge-base entity. Product nodes carry the full attribute set;
// brand/category/color nodes carry a single name (title or the matching
// attribute field).
struct NodeRecord {
  NodeId node_id = 0;
  NodeType node_type = NodeType::product;
  std::optional<std::string> asin;
  std::optional<std::string> title;
  std::optional<std::string> global_category;
  std::vector<std::string> category;
  std::optional<std::string> price;
  std::optional<std::string> brand;
  std::vector<std::string> color;
  std::vector<std::string> feature;
  std::optional<std::string> rank;
  std::optional<std::string> details;
  std::vector<std::string> description;
  std::vector<Review> review;
  std::vector<QaEntry> qa;
  std::vector<NodeId> also_buy;
  std::vector<NodeId> also_view;

  bool is_product() const { return node_type == NodeType::product; }
};

struct GraphStats {
  std::array<std::size_t, 4> type_counts{};
  std::size_t dropped_dangling_edges = 0;
  std::size_t removed_self_loops = 0;
  std::size_t removed_duplicate_neighbors = 0;
};

// Immutable after load; safe to share across concurrent readers. Adjacency
// lives in the normalized also_buy/also_view lists of each record
// (deduplicated, self-loops removed, dangling ids handled per LoadOptions).
class KnowledgeGraph {
 public:
  bool contains(NodeId id) const { return by_id_.count(id) != 0; }
  const NodeRecord& node(NodeId id) const;
  // Node ids in input-file order.
  const std::vector<NodeId>& ids() const { return order_; }
  std::size_t size() const { return order_.size(); }
  const GraphStats& stats() const { return stats_; }

  void add(NodeRecord record);            // load-time only; throws on duplicate id
  void finalize(bool strict_edges);       // normalizes adjacency, fills stats

 private:
  std::unordered_map<NodeId, NodeRecord> by_id_;
  std::vector<NodeId> order_;
  GraphStats stats_;
};

enum class Relation { also_buy, also_view, both };

struct LoadOptions {
  bool strict_edges = false;   // error on dangling edge instead of dropping
  std::size_t max_warnings = 10;  // stderr cap; counts keep accumulating
};

// Reads line-delimited JSON node records. Errors carry file and line number.
KnowledgeGraph load_nodes(const std::filesystem::path& path, const LoadOptions& options = {});

// 1-hop neighbor ids in stored order; relation=both unions also_buy then
// also_view keeping first occurrences. Unknown node id throws.
std::vector<NodeId> neighbors(const KnowledgeGraph& graph, NodeId node_id, Relation relation);

struct QueryRecord {
  QueryId query_id = 0;
  std::string text;
  std::vector<NodeId> answer_ids;  // non-empty, no duplicates
};

// Reads {"query_id": int, "query": str, "answer_ids": [int,...]} lines,
// preserving file order. Duplicate query_id or an empty answer list is an error.
std::vector<QueryRecord> load_queries(const std::filesystem::path& path);

// Canonical single-line JSON forms (no trailing newline) used when writing
// normalized corpora and fixtures.
std::string node_to_jsonl(const NodeRecord& record);
std::string query_to_jsonl(const QueryRecord& record);

struct QueryPartition {
  std::vector<QueryRecord> validation;
  std::vector<QueryRecord> eval_filtered;  // answer count <= 20
  std::vector<QueryRecord> eval_full;      // everything
};

// Draws the validation sample from eval_filtered, stratified over answer-count
// buckets {1, 2-5, 6-10, 11-20} with largest-remainder allocation. The sample
// size is round(sample_fraction * |eval_full|), capped at |eval_filtered|.
// Deterministic in (queries, sample_fraction, seed).
QueryPartition partition_queries(const std::vector<QueryRecord>& queries, double sample_fraction,
                                 std::uint64_t seed);

}  // namespace skb
