#pragma once

#include <optional>

#include "skb/corpus.hpp"
#include "skb/ranked_list.hpp"

namespace skb {

struct ExpandOptions {
  Relation relation = Relation::both;
  std::optional<int> cap;          // truncates the expanded tail only
  bool include_nonproduct = false; // brand/category/color neighbors are skipped by default
  bool strict = true;              // unknown retrieved node id is an error
};

// Appends the 1-hop neighbors of each retrieved entry after the retrieved
// prefix, walking entries in rank order and each adjacency list in stored
// order. Already-present ids are skipped; appended entries carry score 0 and
// origin=expanded. The retrieved prefix is preserved byte-for-byte.
RankedList expand_one_hop(const RankedList& ranked, const KnowledgeGraph& graph,
                          const ExpandOptions& options = {});

}  // namespace skb
