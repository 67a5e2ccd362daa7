#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "skb/dense_index.hpp"
#include "skb/graph_expand.hpp"
#include "skb/hnsw.hpp"
#include "skb/rerank.hpp"
#include "skb/sparse_index.hpp"

namespace skb {

enum class RetrieverKind { bm25, dense_flat, dense_hnsw };

std::string_view retriever_kind_name(RetrieverKind kind);
RetrieverKind retriever_kind_from(std::string_view name);

// One named retriever(+expansion)(+reranker) configuration.
struct PipelineConfig {
  std::string name;
  RetrieverKind retriever = RetrieverKind::bm25;
  int k = 100;  // retrieval depth fed to the reranker
  Bm25Params bm25;
  HnswParams hnsw{64, 100, 200, 0.0};
  std::optional<ExpandOptions> expansion;  // requires a reranker
  std::optional<ScorerSpec> reranker;
  PreprocessConfig preprocess;  // defaults are the TP4 flags + F4 fields

  void validate() const;
};

// Built-in configurations: BM25 (sparse retrieval only), BARMR (sparse +
// 1-hop expansion + pointwise reranker), FRMR (hnsw + pointwise reranker),
// FRWSR (hnsw + setwise reranker). External endpoints come from the config
// file or SKBBENCH_SCORER_URL.
PipelineConfig pipeline_preset(std::string_view name);

// Experiment file: corpus location, embedding/index paths and named pipelines.
struct ExperimentConfig {
  std::filesystem::path corpus_dir;
  std::filesystem::path index_dir;
  std::filesystem::path node_embeddings_manifest;
  std::filesystem::path node_embeddings_data;
  std::filesystem::path query_embeddings_manifest;
  std::filesystem::path query_embeddings_data;
  std::optional<EmbedEndpoint> embedder;  // used when query vectors are not on disk
  std::vector<PipelineConfig> pipelines;

  const PipelineConfig& pipeline(std::string_view name) const;
};

// Relative paths resolve against the config file's directory.
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

// Stable JSON echo of a pipeline config, recorded in run metadata.
std::string pipeline_config_json(const PipelineConfig& config);

}  // namespace skb
