#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "skb/commands.hpp"

namespace {

int run(int argc, char** argv) {
  CLI::App app{"Retriever-reranker benchmark harness over a semi-structured knowledge base"};
  app.require_subcommand(1);

  skb::IngestOptions ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "Validate and normalize a corpus");
  ingest_cmd->add_option("--nodes", ingest.nodes_path, "Node records (jsonl)")->required();
  ingest_cmd->add_option("--queries", ingest.queries_path, "Query records (jsonl)")->required();
  ingest_cmd->add_option("--out", ingest.out_dir, "Output corpus directory")->required();
  ingest_cmd->add_flag("--force", ingest.force, "Overwrite an existing corpus directory");
  ingest_cmd->add_flag("--strict-edges", ingest.strict_edges,
                       "Error on dangling edges instead of dropping them");
  ingest_cmd->add_option("--sample-fraction", ingest.sample_fraction,
                         "Validation sample fraction (of the full query set)");
  ingest_cmd->add_option("--seed", ingest.seed, "Partition sampling seed");

  skb::BuildIndexOptions build;
  std::string preprocess_presets = "TP4,F4";
  auto* build_cmd = app.add_subcommand("build-index", "Build a retrieval index");
  build_cmd->add_option("--corpus", build.corpus_dir, "Ingested corpus directory")->required();
  build_cmd->add_option("--kind", build.kind, "bm25 | hnsw | flat")->required();
  build_cmd->add_option("--out", build.out_path, "Index output path");
  build_cmd->add_option("--k1", build.bm25.k1, "BM25 k1");
  build_cmd->add_option("--b", build.bm25.b, "BM25 b");
  build_cmd->add_option("--m", build.hnsw.m, "HNSW M");
  build_cmd->add_option("--ef-construction", build.hnsw.ef_construction, "HNSW efConstruction");
  build_cmd->add_option("--ef-search", build.hnsw.ef_search, "HNSW efSearch default");
  build_cmd->add_option("--seed", build.seed, "HNSW construction seed");
  build_cmd->add_option("--preprocess", preprocess_presets,
                        "Comma-separated preprocess presets for bm25 documents");
  build_cmd->add_flag("--force", build.force, "Overwrite an existing index");
  build_cmd->add_option("--nodes-manifest", build.nodes_manifest, "Embedding manifest override");
  build_cmd->add_option("--nodes-data", build.nodes_data, "Embedding data override");

  skb::RunOptions run_options;
  auto* run_cmd = app.add_subcommand("run", "Execute pipelines over a partition");
  run_cmd->add_option("--config", run_options.config_path, "Experiment config (json)")->required();
  run_cmd->add_option("--pipeline", run_options.pipeline,
                      "Pipeline name (default: every pipeline in the config)");
  run_cmd->add_option("--partition", run_options.partition,
                      "validation | eval-filtered | eval-full");
  run_cmd->add_option("--out", run_options.out_dir, "Output directory for run files")->required();
  run_cmd->add_option("--seed", run_options.seed, "Run seed (recorded in metadata)");
  run_cmd->add_option("--workers", run_options.workers, "Concurrent query workers");
  run_cmd->add_flag("--force", run_options.force, "Overwrite existing run files");

  skb::EvaluateOptions evaluate;
  auto* eval_cmd = app.add_subcommand("evaluate", "Score a run against ground truth");
  eval_cmd->add_option("--run", evaluate.run_path, "Run prediction file (jsonl)")->required();
  eval_cmd->add_option("--corpus", evaluate.corpus_dir, "Ingested corpus directory")->required();
  eval_cmd->add_option("--out", evaluate.out_base, "Output base path (default: run path)");

  skb::CompareOptions compare;
  auto* compare_cmd = app.add_subcommand("compare", "Statistical comparison of runs");
  compare_cmd->add_option("--runs", compare.run_paths, "Run prediction files")
      ->required()
      ->expected(-2);
  compare_cmd->add_option("--corpus", compare.corpus_dir, "Ingested corpus directory")->required();
  compare_cmd->add_option("--metrics", compare.metrics, "Metrics to compare");
  compare_cmd->add_option("--alpha", compare.alpha, "Family-wise significance level");
  compare_cmd->add_option("--out", compare.out_path, "JSON report path");

  skb::ReportOptions report;
  auto* report_cmd = app.add_subcommand("report", "Summary tables with bootstrap intervals");
  report_cmd->add_option("--metrics", report.metric_paths, "Metric report files (json)")
      ->required()
      ->expected(-1);
  report_cmd->add_option("--out", report.out_base, "Output base path")->required();
  report_cmd->add_option("--level", report.ci_level, "Confidence level");
  report_cmd->add_option("--resamples", report.resamples, "Bootstrap resamples");
  report_cmd->add_option("--seed", report.seed, "Bootstrap seed");

  CLI11_PARSE(app, argc, argv);

  if (ingest_cmd->parsed()) {
    skb::cmd_ingest(ingest);
  } else if (build_cmd->parsed()) {
    std::size_t start = 0;
    while (start <= preprocess_presets.size()) {
      const auto comma = preprocess_presets.find(',', start);
      const std::string name =
          preprocess_presets.substr(start, comma == std::string::npos ? comma : comma - start);
      if (!name.empty()) skb::apply_preset(build.preprocess, name);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    skb::cmd_build_index(build);
  } else if (run_cmd->parsed()) {
    skb::cmd_run(run_options);
  } else if (eval_cmd->parsed()) {
    skb::cmd_evaluate(evaluate);
  } else if (compare_cmd->parsed()) {
    skb::cmd_compare(compare);
  } else if (report_cmd->parsed()) {
    skb::cmd_report(report);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const skb::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const skb::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const skb::EndpointError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
