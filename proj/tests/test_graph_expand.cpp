#include <doctest.h>

#include <fstream>
#include <set>
#include <unordered_set>

#include "skb/graph_expand.hpp"
#include "skb/rng.hpp"
#include "test_util.hpp"

using namespace skb;
using test::TempDir;

namespace {

// Builds a product-only graph from explicit adjacency.
KnowledgeGraph make_graph(const std::vector<std::pair<NodeId, std::vector<NodeId>>>& also_buy,
                          const std::vector<std::pair<NodeId, std::vector<NodeId>>>& also_view) {
  KnowledgeGraph graph;
  std::set<NodeId> ids;
  for (const auto& [id, list] : also_buy) {
    ids.insert(id);
    for (NodeId nb : list) ids.insert(nb);
  }
  for (const auto& [id, list] : also_view) {
    ids.insert(id);
    for (NodeId nb : list) ids.insert(nb);
  }
  for (NodeId id : ids) {
    NodeRecord rec;
    rec.node_id = id;
    rec.node_type = NodeType::product;
    for (const auto& [source, list] : also_buy) {
      if (source == id) rec.also_buy = list;
    }
    for (const auto& [source, list] : also_view) {
      if (source == id) rec.also_view = list;
    }
    graph.add(std::move(rec));
  }
  graph.finalize(false);
  return graph;
}

RankedList retrieved_list(const std::vector<NodeId>& ids) {
  RankedList list;
  list.query_id = 1;
  double score = static_cast<double>(ids.size());
  for (NodeId id : ids) list.entries.push_back({id, score--, Origin::retrieved});
  list.k_retrieved = list.entries.size();
  return list;
}

}  // namespace

TEST_CASE("expansion appends deduplicated neighbors after the prefix") {
  // retrieved [A=1, B=2]; A.also_buy=[B, C], B.also_view=[D]
  KnowledgeGraph graph = make_graph({{1, {2, 3}}}, {{2, {4}}});
  RankedList input = retrieved_list({1, 2});
  ExpandOptions options;
  options.relation = Relation::both;
  RankedList out = expand_one_hop(input, graph, options);
  CHECK(out.ids() == std::vector<NodeId>{1, 2, 3, 4});
  CHECK(out.k_retrieved == 2);
  CHECK(out.entries[2].origin == Origin::expanded);
  CHECK(out.entries[2].score == 0.0);
}

TEST_CASE("no neighbors means output equals input") {
  KnowledgeGraph graph = make_graph({{1, {}}, {2, {}}}, {});
  RankedList input = retrieved_list({1, 2});
  RankedList out = expand_one_hop(input, graph, {});
  CHECK(out.ids() == input.ids());
}

TEST_CASE("self-loops were removed at load, so a self-edge adds nothing") {
  KnowledgeGraph graph = make_graph({{1, {1}}}, {});
  RankedList input = retrieved_list({1});
  RankedList out = expand_one_hop(input, graph, {});
  CHECK(out.ids() == std::vector<NodeId>{1});
}

TEST_CASE("cap truncates only the expanded tail") {
  KnowledgeGraph graph = make_graph({{1, {2, 3, 4, 5}}}, {});
  RankedList input = retrieved_list({1});
  ExpandOptions options;
  options.cap = 2;
  RankedList out = expand_one_hop(input, graph, options);
  CHECK(out.ids() == std::vector<NodeId>{1, 2, 3});
}

TEST_CASE("strict mode rejects retrieved ids missing from the graph") {
  KnowledgeGraph graph = make_graph({{1, {2}}}, {});
  RankedList input = retrieved_list({1, 999});
  ExpandOptions strict;
  strict.strict = true;
  CHECK_THROWS_AS(expand_one_hop(input, graph, strict), EvalError);
  ExpandOptions lenient;
  lenient.strict = false;
  CHECK(expand_one_hop(input, graph, lenient).ids() == std::vector<NodeId>{1, 999, 2});
}

TEST_CASE("non-product neighbors are excluded unless enabled") {
  KnowledgeGraph graph;
  NodeRecord product;
  product.node_id = 1;
  product.node_type = NodeType::product;
  product.also_view = {2, 3};
  graph.add(std::move(product));
  NodeRecord other_product;
  other_product.node_id = 3;
  other_product.node_type = NodeType::product;
  graph.add(std::move(other_product));
  NodeRecord brand;
  brand.node_id = 2;
  brand.node_type = NodeType::brand;
  brand.brand = "bdd";
  graph.add(std::move(brand));
  graph.finalize(false);

  RankedList input = retrieved_list({1});
  CHECK(expand_one_hop(input, graph, {}).ids() == std::vector<NodeId>{1, 3});

  ExpandOptions with_all;
  with_all.include_nonproduct = true;
  CHECK(expand_one_hop(input, graph, with_all).ids() == std::vector<NodeId>{1, 2, 3});
}

TEST_CASE("expansion properties hold on random instances") {
  Rng rng(2025);
  for (int trial = 0; trial < 200; ++trial) {
    // random product-only graph
    const std::size_t n = 3 + rng.next_below(30);
    std::vector<std::pair<NodeId, std::vector<NodeId>>> buy, view;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<NodeId> buys, views;
      const std::size_t eb = rng.next_below(5);
      for (std::size_t e = 0; e < eb; ++e) buys.push_back(static_cast<NodeId>(rng.next_below(n)));
      const std::size_t ev = rng.next_below(5);
      for (std::size_t e = 0; e < ev; ++e) views.push_back(static_cast<NodeId>(rng.next_below(n)));
      buy.emplace_back(static_cast<NodeId>(i), buys);
      view.emplace_back(static_cast<NodeId>(i), views);
    }
    KnowledgeGraph graph = make_graph(buy, view);

    // random retrieved list (unique ids)
    std::vector<NodeId> pool;
    for (std::size_t i = 0; i < n; ++i) pool.push_back(static_cast<NodeId>(i));
    rng.shuffle(pool);
    pool.resize(1 + rng.next_below(n));
    RankedList input = retrieved_list(pool);

    const Relation relation = static_cast<Relation>(rng.next_below(3));
    ExpandOptions options;
    options.relation = relation;
    RankedList out = expand_one_hop(input, graph, options);

    // prefix preservation: retrieved entries unchanged, in order, same scores
    REQUIRE(out.entries.size() >= input.entries.size());
    for (std::size_t i = 0; i < input.entries.size(); ++i) {
      CHECK(out.entries[i].node_id == input.entries[i].node_id);
      CHECK(out.entries[i].score == input.entries[i].score);
      CHECK(out.entries[i].origin == Origin::retrieved);
    }

    // uniqueness
    std::unordered_set<NodeId> seen;
    for (const auto& e : out.entries) CHECK(seen.insert(e.node_id).second);

    // soundness: every expanded id is a 1-hop neighbor of some retrieved id
    std::unordered_set<NodeId> neighborhood;
    for (NodeId id : pool) {
      for (NodeId nb : neighbors(graph, id, relation)) neighborhood.insert(nb);
    }
    for (std::size_t i = input.entries.size(); i < out.entries.size(); ++i) {
      CHECK(out.entries[i].origin == Origin::expanded);
      CHECK(neighborhood.count(out.entries[i].node_id));
    }

    // set equality with the union of retrieved ids and their neighborhoods
    std::unordered_set<NodeId> want(pool.begin(), pool.end());
    for (NodeId nb : neighborhood) want.insert(nb);
    CHECK(seen == want);

    // expanding a second time over the same retrieved prefix adds nothing
    RankedList again = expand_one_hop(out, graph, options);
    CHECK(again.ids() == out.ids());
  }
}
