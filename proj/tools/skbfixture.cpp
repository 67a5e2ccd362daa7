#include <exception>
#include <iostream>

#include <CLI11.hpp>

#include "skb/fixture.hpp"

// Writes the synthetic demo corpus (nodes, queries, embeddings) so the full
// CLI workflow can be exercised without the real dataset.
int main(int argc, char** argv) {
  CLI::App app{"Generate a synthetic mini-corpus"};
  std::string out_dir;
  skb::FixtureSpec spec;
  app.add_option("--out", out_dir, "Output directory")->required();
  app.add_option("--products", spec.products, "Product node count");
  app.add_option("--queries", spec.queries, "Query count (answer sets of a few products)");
  app.add_option("--big-queries", spec.big_queries, "Queries with more than 20 answers");
  app.add_option("--dim", spec.dim, "Embedding dimension");
  app.add_option("--seed", spec.seed, "Generation seed");
  CLI11_PARSE(app, argc, argv);

  try {
    skb::FixturePaths paths = skb::write_fixture(out_dir, spec);
    std::cerr << "fixture written: " << paths.nodes << ", " << paths.queries
              << ", embeddings under " << paths.nodes_manifest.parent_path() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
