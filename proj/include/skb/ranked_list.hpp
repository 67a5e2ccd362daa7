#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "skb/common.hpp"

namespace skb {

// Where an entry came from: the retriever itself, or 1-hop graph expansion.
enum class Origin : std::uint8_t { retrieved = 0, expanded = 1 };

struct RankedEntry {
  NodeId node_id = 0;
  double score = 0.0;
  Origin origin = Origin::retrieved;
};

// Ordered candidate list for one query. The first k_retrieved entries are the
// retriever's output in rank order; anything after is expansion tail. Entries
// never repeat a node id.
struct RankedList {
  QueryId query_id = 0;
  std::vector<RankedEntry> entries;
  std::size_t k_retrieved = 0;

  std::vector<NodeId> ids() const {
    std::vector<NodeId> out;
    out.reserve(entries.size());
    for (const auto& e : entries) out.push_back(e.node_id);
    return out;
  }
};

}  // namespace skb
