#include "skb/graph_expand.hpp"

#include <unordered_set>

namespace skb {

RankedList expand_one_hop(const RankedList& ranked, const KnowledgeGraph& graph,
                          const ExpandOptions& options) {
  RankedList out;
  out.query_id = ranked.query_id;
  out.k_retrieved = ranked.k_retrieved;
  out.entries = ranked.entries;

  std::unordered_set<NodeId> present;
  present.reserve(ranked.entries.size() * 2);
  for (const auto& e : ranked.entries) present.insert(e.node_id);

  std::size_t appended = 0;
  for (std::size_t i = 0; i < ranked.k_retrieved; ++i) {
    const NodeId source = ranked.entries[i].node_id;
    if (!graph.contains(source)) {
      if (options.strict) {
        throw EvalError("retrieved node " + std::to_string(source) + " is not in the graph");
      }
      continue;
    }
    for (NodeId nb : neighbors(graph, source, options.relation)) {
      if (options.cap && appended >= static_cast<std::size_t>(*options.cap)) return out;
      if (present.count(nb)) continue;
      if (!options.include_nonproduct && !graph.node(nb).is_product()) continue;
      present.insert(nb);
      out.entries.push_back({nb, 0.0, Origin::expanded});
      ++appended;
    }
  }
  return out;
}

}  // namespace skb
