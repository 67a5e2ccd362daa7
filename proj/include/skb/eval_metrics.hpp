#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "skb/corpus.hpp"

namespace skb {

struct StageTiming {
  double retriever_sec_per_query = 0.0;
  double reranker_sec_per_query = 0.0;
  double total_sec_per_query() const { return retriever_sec_per_query + reranker_sec_per_query; }
};

// Predictions of one pipeline over one partition, ordered by query id.
struct RunResult {
  std::string pipeline_name;
  std::vector<std::pair<QueryId, std::vector<NodeId>>> per_query;
  StageTiming timing;
};

// 1 iff any of the first min(k, |predicted|) ids is relevant.
int hit_at_k(std::span<const NodeId> predicted, const std::unordered_set<NodeId>& answers, int k);

// |top-k ∩ answers| / |answers|. Answers must be non-empty.
double recall_at_k(std::span<const NodeId> predicted, const std::unordered_set<NodeId>& answers,
                   int k);

// 1/rank of the first relevant id; 0 when none appears.
double reciprocal_rank(std::span<const NodeId> predicted,
                       const std::unordered_set<NodeId>& answers);

struct MetricReport {
  std::string pipeline_name;
  std::vector<std::string> metrics;             // e.g. hit@1, hit@5, recall@20, mrr
  std::vector<QueryId> query_ids;               // ascending
  std::vector<std::vector<double>> per_query;   // [metric][query position]
  std::vector<double> means;                    // [metric]
  std::size_t n_queries = 0;

  const std::vector<double>& values(const std::string& metric) const;
  double mean(const std::string& metric) const;
};

inline constexpr int kDefaultKs[] = {1, 5, 20};

// hit@k and recall@k for every cutoff plus mrr, with arithmetic means. Every
// run query id must have a QueryRecord.
MetricReport evaluate_run(const RunResult& run, const std::vector<QueryRecord>& queries,
                          std::span<const int> ks = kDefaultKs);

// Line-delimited {"query_id": int, "predicted": [int, ...]}, sorted by query id.
void save_run(const RunResult& run, const std::filesystem::path& path);
RunResult load_run(const std::filesystem::path& path);

void save_metric_report_json(const MetricReport& report, const std::filesystem::path& path);
MetricReport load_metric_report_json(const std::filesystem::path& path);
// Single-row CSV with the benchmark's column order: Hit@1, Hit@5, R@20, MRR.
void save_metric_report_csv(const MetricReport& report, const std::filesystem::path& path);

}  // namespace skb
