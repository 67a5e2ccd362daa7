#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "skb/pipeline.hpp"

namespace skb {

// Command entry points shared by the CLI and the integration tests. All of
// them throw (IoError/ConfigError -> exit 2, EndpointError -> 3, others -> 1).

struct IngestOptions {
  std::filesystem::path nodes_path;
  std::filesystem::path queries_path;
  std::filesystem::path out_dir;
  bool force = false;
  bool strict_edges = false;
  double sample_fraction = 0.1;
  std::uint64_t seed = 42;
};

// Loads and validates the raw corpus, then writes the normalized corpus
// (nodes.jsonl, queries.jsonl), corpus_meta.json and partitions.json.
void cmd_ingest(const IngestOptions& options);

struct BuildIndexOptions {
  std::filesystem::path corpus_dir;
  std::string kind;  // bm25 | hnsw | flat
  std::filesystem::path out_path;  // default <corpus_dir>/indexes/<kind>.idx
  Bm25Params bm25;
  HnswParams hnsw{64, 100, 200, 0.0};
  PreprocessConfig preprocess;  // document building for bm25
  std::uint64_t seed = 42;
  bool force = false;
  std::filesystem::path nodes_manifest;  // default <corpus_dir>/embeddings/nodes.manifest.json
  std::filesystem::path nodes_data;      // default <corpus_dir>/embeddings/nodes.f32
};

void cmd_build_index(const BuildIndexOptions& options);

struct RunOptions {
  std::filesystem::path config_path;
  std::string pipeline;  // empty runs every pipeline in the config
  std::string partition = "validation";  // validation | eval-filtered | eval-full
  std::filesystem::path out_dir;
  std::uint64_t seed = 42;
  int workers = 1;
  bool force = false;
};

// Executes pipelines over the chosen partition. Per pipeline writes
// <name>.retrieved.jsonl, <name>.reranked.jsonl (when a reranker is
// configured), <name>.timing.json and <name>.meta.json. Predictions are
// produced blind: ground truth is only read for the test-only oracle scorer.
void cmd_run(const RunOptions& options);

struct EvaluateOptions {
  std::filesystem::path run_path;  // a .jsonl prediction file
  std::filesystem::path corpus_dir;
  std::filesystem::path out_base;  // default: run path minus .jsonl
};

void cmd_evaluate(const EvaluateOptions& options);

struct CompareOptions {
  std::vector<std::filesystem::path> run_paths;
  std::filesystem::path corpus_dir;
  std::vector<std::string> metrics = {"hit@1", "hit@5", "recall@20", "mrr"};
  double alpha = 0.05;
  std::filesystem::path out_path;  // JSON report; human table goes to stdout
};

void cmd_compare(const CompareOptions& options);

struct ReportOptions {
  std::vector<std::filesystem::path> metric_paths;  // .metrics.json files
  std::filesystem::path out_base;  // writes .summary.csv, .summary.md, .ci.csv
  double ci_level = 0.95;
  int resamples = 10000;
  std::uint64_t seed = 0;
};

void cmd_report(const ReportOptions& options);

}  // namespace skb
