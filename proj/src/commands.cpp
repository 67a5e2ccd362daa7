#include "skb/commands.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>
#include <unordered_map>

#include <json.hpp>

#include "skb/eval_metrics.hpp"
#include "skb/stats.hpp"

namespace skb {
namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

json read_json_file(const std::filesystem::path& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw IoError(std::string("cannot open ") + what + ": " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw IoError(std::string("bad ") + what + " " + path.string() + ": " + e.what());
  }
}

void write_json_file(const json& j, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write: " + path.string());
  out << j.dump(2) << "\n";
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<QueryRecord> partition_slice(const std::filesystem::path& corpus_dir,
                                         const std::vector<QueryRecord>& queries,
                                         const std::string& partition) {
  json manifest = read_json_file(corpus_dir / "partitions.json", "partition manifest");
  std::string key;
  if (partition == "validation") {
    key = "validation";
  } else if (partition == "eval-filtered") {
    key = "eval_filtered";
  } else if (partition == "eval-full") {
    key = "eval_full";
  } else {
    throw ConfigError("unknown partition: " + partition);
  }
  std::vector<QueryId> ids = manifest.at(key).get<std::vector<QueryId>>();
  std::unordered_map<QueryId, const QueryRecord*> by_id;
  for (const auto& q : queries) by_id.emplace(q.query_id, &q);
  std::vector<QueryRecord> out;
  out.reserve(ids.size());
  for (QueryId id : ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) {
      throw IoError("partition manifest references unknown query " + std::to_string(id));
    }
    out.push_back(*it->second);
  }
  return out;
}

void refuse_existing(const std::filesystem::path& path, bool force) {
  if (!force && std::filesystem::exists(path)) {
    throw IoError("refusing to overwrite " + path.string() + " (use --force)");
  }
}

// Strips trailing ".retrieved"/".reranked" from a run file stem so sidecar
// files (<pipeline>.meta.json, <pipeline>.timing.json) can be located.
std::filesystem::path run_base_path(const std::filesystem::path& run_path) {
  std::filesystem::path base = run_path;
  base.replace_extension();  // drop .jsonl
  std::string stem = base.filename().string();
  for (std::string_view stage : {".retrieved", ".reranked"}) {
    if (stem.size() > stage.size() &&
        stem.compare(stem.size() - stage.size(), stage.size(), stage) == 0) {
      stem.resize(stem.size() - stage.size());
      break;
    }
  }
  return base.parent_path() / stem;
}

std::string pipeline_name_for_run(const std::filesystem::path& run_path) {
  const std::filesystem::path meta = run_base_path(run_path).string() + ".meta.json";
  if (std::filesystem::exists(meta)) {
    json j = read_json_file(meta, "run metadata");
    if (j.contains("pipeline") && j["pipeline"].is_string()) {
      return j["pipeline"].get<std::string>();
    }
  }
  return run_path.stem().string();
}

struct LoadedCorpus {
  KnowledgeGraph graph;
  std::vector<QueryRecord> queries;
};

LoadedCorpus load_corpus_dir(const std::filesystem::path& corpus_dir) {
  const auto nodes_path = corpus_dir / "nodes.jsonl";
  const auto queries_path = corpus_dir / "queries.jsonl";
  if (!std::filesystem::exists(nodes_path)) {
    throw IoError("no ingested corpus at " + corpus_dir.string() + " (missing nodes.jsonl)");
  }
  LoadedCorpus corpus;
  corpus.graph = load_nodes(nodes_path);
  corpus.queries = load_queries(queries_path);
  return corpus;
}

}  // namespace

void cmd_ingest(const IngestOptions& options) {
  if (!std::filesystem::exists(options.nodes_path)) {
    throw IoError("node file does not exist: " + options.nodes_path.string());
  }
  if (!std::filesystem::exists(options.queries_path)) {
    throw IoError("query file does not exist: " + options.queries_path.string());
  }
  refuse_existing(options.out_dir / "corpus_meta.json", options.force);

  LoadOptions load_options;
  load_options.strict_edges = options.strict_edges;
  KnowledgeGraph graph = load_nodes(options.nodes_path, load_options);
  std::vector<QueryRecord> queries = load_queries(options.queries_path);
  for (const auto& q : queries) {
    for (NodeId id : q.answer_ids) {
      if (!graph.contains(id)) {
        throw IoError("query " + std::to_string(q.query_id) + " references unknown node " +
                      std::to_string(id));
      }
    }
  }
  QueryPartition partition = partition_queries(queries, options.sample_fraction, options.seed);

  std::filesystem::create_directories(options.out_dir);
  {
    std::ofstream out(options.out_dir / "nodes.jsonl", std::ios::trunc);
    if (!out) throw IoError("cannot write normalized nodes");
    for (NodeId id : graph.ids()) out << node_to_jsonl(graph.node(id)) << "\n";
  }
  {
    std::ofstream out(options.out_dir / "queries.jsonl", std::ios::trunc);
    if (!out) throw IoError("cannot write normalized queries");
    for (const auto& q : queries) out << query_to_jsonl(q) << "\n";
  }

  auto ids_of = [](const std::vector<QueryRecord>& qs) {
    std::vector<QueryId> ids;
    ids.reserve(qs.size());
    for (const auto& q : qs) ids.push_back(q.query_id);
    return ids;
  };
  json partitions;
  partitions["sample_fraction"] = options.sample_fraction;
  partitions["seed"] = options.seed;
  partitions["validation"] = ids_of(partition.validation);
  partitions["eval_filtered"] = ids_of(partition.eval_filtered);
  partitions["eval_full"] = ids_of(partition.eval_full);
  write_json_file(partitions, options.out_dir / "partitions.json");

  const GraphStats& stats = graph.stats();
  double rating_sum = 0.0;
  std::size_t rated_nodes = 0;
  for (NodeId id : graph.ids()) {
    if (auto rating = average_rating(graph.node(id))) {
      rating_sum += *rating;
      ++rated_nodes;
    }
  }
  json meta;
  meta["node_count"] = graph.size();
  meta["type_counts"] = {{"product", stats.type_counts[0]},
                         {"brand", stats.type_counts[1]},
                         {"category", stats.type_counts[2]},
                         {"color", stats.type_counts[3]}};
  meta["query_count"] = queries.size();
  meta["dropped_dangling_edges"] = stats.dropped_dangling_edges;
  meta["removed_self_loops"] = stats.removed_self_loops;
  meta["removed_duplicate_neighbors"] = stats.removed_duplicate_neighbors;
  meta["nodes_with_ratings"] = rated_nodes;
  meta["mean_of_average_ratings"] =
      rated_nodes ? rating_sum / static_cast<double>(rated_nodes) : 0.0;
  write_json_file(meta, options.out_dir / "corpus_meta.json");

  std::cerr << "ingested " << graph.size() << " nodes ("
            << stats.type_counts[0] << " product, " << stats.type_counts[1] << " brand, "
            << stats.type_counts[2] << " category, " << stats.type_counts[3] << " color), "
            << queries.size() << " queries; partitions " << partition.validation.size() << "/"
            << partition.eval_filtered.size() << "/" << partition.eval_full.size() << "\n";
}

void cmd_build_index(const BuildIndexOptions& options) {
  std::filesystem::path out = options.out_path;
  if (out.empty()) out = options.corpus_dir / "indexes" / (options.kind + ".idx");

  std::filesystem::path nodes_manifest = options.nodes_manifest;
  std::filesystem::path nodes_data = options.nodes_data;
  if (nodes_manifest.empty()) {
    nodes_manifest = options.corpus_dir / "embeddings" / "nodes.manifest.json";
  }
  if (nodes_data.empty()) nodes_data = options.corpus_dir / "embeddings" / "nodes.f32";

  const auto start = Clock::now();
  if (options.kind == "bm25") {
    refuse_existing(out, options.force);
    LoadedCorpus corpus = load_corpus_dir(options.corpus_dir);
    std::vector<Document> docs = build_documents(corpus.graph, options.preprocess);
    InvertedIndex index = build_sparse_index(docs, options.bm25, options.preprocess);
    std::filesystem::create_directories(out.parent_path());
    index.save(out);
    std::cerr << "bm25 index over " << index.doc_count() << " documents written to " << out
              << " in " << seconds_since(start) << " s\n";
  } else if (options.kind == "hnsw") {
    refuse_existing(out, options.force);
    if (!std::filesystem::exists(nodes_manifest)) {
      throw IoError("dense index needs embeddings; missing " + nodes_manifest.string());
    }
    EmbeddingMatrix matrix = load_embeddings(nodes_manifest, nodes_data);
    HnswIndex index = build_hnsw(matrix, options.hnsw, options.seed);
    std::filesystem::create_directories(out.parent_path());
    index.save(out);
    std::cerr << "hnsw index over " << index.size() << " vectors written to " << out << " in "
              << seconds_since(start) << " s\n";
  } else if (options.kind == "flat") {
    // Exhaustive search runs straight off the embedding matrix.
    if (!std::filesystem::exists(nodes_manifest)) {
      throw IoError("dense index needs embeddings; missing " + nodes_manifest.string());
    }
    EmbeddingMatrix matrix = load_embeddings(nodes_manifest, nodes_data);
    std::cerr << "flat search needs no build artifact; validated " << matrix.count()
              << " vectors of dim " << matrix.dim() << "\n";
  } else {
    throw ConfigError("unknown index kind: " + options.kind);
  }
}

namespace {

struct QueryOutput {
  bool done = false;
  std::vector<NodeId> retrieved;
  std::vector<NodeId> reranked;
  double retriever_sec = 0.0;
  double reranker_sec = 0.0;
};

struct PipelineRuntime {
  const PipelineConfig* config = nullptr;
  const ExperimentConfig* experiment = nullptr;
  const LoadedCorpus* corpus = nullptr;
  const InvertedIndex* sparse = nullptr;
  const EmbeddingMatrix* node_vectors = nullptr;
  const EmbeddingMatrix* query_vectors = nullptr;
  const HnswIndex* hnsw = nullptr;
  Scorer* shared_scorer = nullptr;  // null for oracle_test (built per query)

  QueryOutput run_query(const QueryRecord& query) const {
    QueryOutput out;
    const auto t0 = Clock::now();

    RankedList candidates;
    switch (config->retriever) {
      case RetrieverKind::bm25:
        candidates = search_sparse(*sparse, query.text, config->k, sparse->preprocess());
        break;
      case RetrieverKind::dense_flat:
      case RetrieverKind::dense_hnsw: {
        std::vector<float> embedded;
        std::span<const float> vec;
        if (auto row = query_vectors ? query_vectors->row_of(query.query_id) : std::nullopt) {
          vec = query_vectors->row(*row);
        } else if (experiment->embedder) {
          std::vector<std::string> texts = {query.text};
          auto vecs = embed_external(texts, *experiment->embedder, node_vectors->dim());
          embedded = std::move(vecs.front());
          vec = embedded;
        } else {
          throw IoError("no embedding for query " + std::to_string(query.query_id) +
                        " and no embedder endpoint configured");
        }
        candidates = config->retriever == RetrieverKind::dense_flat
                         ? search_flat(*node_vectors, vec, config->k)
                         : search_hnsw(*hnsw, *node_vectors, vec, config->k,
                                       config->hnsw.ef_search);
        break;
      }
    }
    candidates.query_id = query.query_id;
    if (config->expansion) {
      candidates = expand_one_hop(candidates, corpus->graph, *config->expansion);
    }
    out.retriever_sec = seconds_since(t0);
    out.retrieved = candidates.ids();

    if (config->reranker) {
      const auto t1 = Clock::now();
      DocumentMap documents;
      documents.reserve(candidates.entries.size());
      for (const auto& e : candidates.entries) {
        documents.emplace(e.node_id,
                          build_document(corpus->graph.node(e.node_id), config->preprocess));
      }
      RankedList reranked;
      if (config->reranker->kind == ScorerKind::oracle_test) {
        auto oracle = make_oracle_scorer(
            std::unordered_set<NodeId>(query.answer_ids.begin(), query.answer_ids.end()));
        reranked = rerank(query.text, candidates, documents, *oracle);
      } else {
        reranked = rerank(query.text, candidates, documents, *shared_scorer);
      }
      out.reranker_sec = seconds_since(t1);
      out.reranked = reranked.ids();
    }
    out.done = true;
    return out;
  }
};

void write_run_outputs(const std::filesystem::path& out_dir, const PipelineConfig& config,
                       const RunOptions& options, const std::vector<QueryRecord>& queries,
                       const std::vector<QueryOutput>& outputs, bool complete,
                       const std::string& error) {
  RunResult retrieved;
  retrieved.pipeline_name = config.name;
  RunResult reranked;
  reranked.pipeline_name = config.name;
  double retr_total = 0.0, rerank_total = 0.0;
  std::size_t done = 0;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    if (!outputs[i].done) continue;
    ++done;
    retrieved.per_query.emplace_back(queries[i].query_id, outputs[i].retrieved);
    if (config.reranker) {
      reranked.per_query.emplace_back(queries[i].query_id, outputs[i].reranked);
    }
    retr_total += outputs[i].retriever_sec;
    rerank_total += outputs[i].reranker_sec;
  }

  save_run(retrieved, out_dir / (config.name + ".retrieved.jsonl"));
  if (config.reranker) {
    save_run(reranked, out_dir / (config.name + ".reranked.jsonl"));
  }

  const double retr_mean = done ? retr_total / static_cast<double>(done) : 0.0;
  const double rerank_mean = done ? rerank_total / static_cast<double>(done) : 0.0;
  json timing;
  timing["pipeline"] = config.name;
  timing["n_queries"] = done;
  timing["retriever_sec_per_query"] = retr_mean;
  timing["reranker_sec_per_query"] = rerank_mean;
  timing["total_sec_per_query"] = retr_mean + rerank_mean;  // exact sum of the stage means
  write_json_file(timing, out_dir / (config.name + ".timing.json"));

  json meta;
  meta["pipeline"] = config.name;
  meta["partition"] = options.partition;
  meta["seed"] = options.seed;
  meta["n_queries"] = done;
  meta["complete"] = complete;
  if (!error.empty()) meta["error"] = error;
  meta["config"] = json::parse(pipeline_config_json(config));
  write_json_file(meta, out_dir / (config.name + ".meta.json"));
}

void run_one_pipeline(PipelineConfig config, const ExperimentConfig& experiment,
                      const LoadedCorpus& corpus, const std::vector<QueryRecord>& queries,
                      const RunOptions& options) {
  // Environment override for the scorer endpoint.
  if (config.reranker) {
    if (const char* url = std::getenv("SKBBENCH_SCORER_URL"); url && *url) {
      config.reranker->endpoint = url;
    }
  }
  config.validate();
  if (config.reranker && config.reranker->kind == ScorerKind::oracle_test) {
    std::cerr << "note: pipeline '" << config.name
              << "' uses the oracle_test scorer, which reads ground truth (test-only)\n";
  }

  refuse_existing(options.out_dir / (config.name + ".retrieved.jsonl"), options.force);

  InvertedIndex sparse;
  EmbeddingMatrix node_vectors;
  EmbeddingMatrix query_vectors;
  HnswIndex hnsw;
  bool have_query_vectors = false;

  PipelineRuntime runtime;
  runtime.config = &config;
  runtime.experiment = &experiment;
  runtime.corpus = &corpus;

  if (config.retriever == RetrieverKind::bm25) {
    const auto path = experiment.index_dir / "bm25.idx";
    if (!std::filesystem::exists(path)) {
      throw IoError("missing bm25 index at " + path.string() + " (run build-index first)");
    }
    sparse = InvertedIndex::load(path);
    runtime.sparse = &sparse;
  } else {
    node_vectors =
        load_embeddings(experiment.node_embeddings_manifest, experiment.node_embeddings_data);
    for (NodeId id : node_vectors.ids()) {
      if (!corpus.graph.contains(id)) {
        throw IoError("embedding id " + std::to_string(id) + " is not a corpus node");
      }
    }
    runtime.node_vectors = &node_vectors;
    if (std::filesystem::exists(experiment.query_embeddings_manifest)) {
      query_vectors = load_embeddings(experiment.query_embeddings_manifest,
                                      experiment.query_embeddings_data);
      have_query_vectors = true;
    }
    if (have_query_vectors) runtime.query_vectors = &query_vectors;
    if (config.retriever == RetrieverKind::dense_hnsw) {
      const auto path = experiment.index_dir / "hnsw.idx";
      if (!std::filesystem::exists(path)) {
        throw IoError("missing hnsw index at " + path.string() + " (run build-index first)");
      }
      hnsw = HnswIndex::load(path);
      runtime.hnsw = &hnsw;
    }
  }

  std::unique_ptr<Scorer> shared_scorer;
  if (config.reranker && config.reranker->kind != ScorerKind::oracle_test) {
    shared_scorer = make_scorer(*config.reranker);
    runtime.shared_scorer = shared_scorer.get();
  }

  std::filesystem::create_directories(options.out_dir);
  std::vector<QueryOutput> outputs(queries.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::mutex error_mutex;
  std::string error_message;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= queries.size() || failed.load()) return;
      try {
        outputs[i] = runtime.run_query(queries[i]);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!failed.exchange(true)) {
          error_message = "query " + std::to_string(queries[i].query_id) + ": " + e.what();
        }
        return;
      }
    }
  };

  const int n_workers = std::max(1, options.workers);
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(n_workers));
    for (int t = 0; t < n_workers; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }

  if (failed.load()) {
    write_run_outputs(options.out_dir, config, options, queries, outputs, false, error_message);
    throw EndpointError("pipeline '" + config.name + "' aborted: " + error_message +
                        " (partial results preserved)");
  }
  write_run_outputs(options.out_dir, config, options, queries, outputs, true, "");
  std::cerr << "pipeline '" << config.name << "' finished " << queries.size() << " queries\n";
}

}  // namespace

void cmd_run(const RunOptions& options) {
  ExperimentConfig experiment = load_experiment_config(options.config_path);
  LoadedCorpus corpus = load_corpus_dir(experiment.corpus_dir);
  std::vector<QueryRecord> queries =
      partition_slice(experiment.corpus_dir, corpus.queries, options.partition);
  if (queries.empty()) throw EvalError("partition '" + options.partition + "' is empty");

  bool matched = false;
  for (const auto& pipeline : experiment.pipelines) {
    if (!options.pipeline.empty() && pipeline.name != options.pipeline) continue;
    matched = true;
    run_one_pipeline(pipeline, experiment, corpus, queries, options);
  }
  if (!matched) {
    throw ConfigError("no pipeline named '" + options.pipeline + "' in " +
                      options.config_path.string());
  }
}

void cmd_evaluate(const EvaluateOptions& options) {
  RunResult run = load_run(options.run_path);
  if (run.per_query.empty()) throw EvalError("run is empty: " + options.run_path.string());
  run.pipeline_name = pipeline_name_for_run(options.run_path);

  const std::filesystem::path meta_path = run_base_path(options.run_path).string() + ".meta.json";
  if (std::filesystem::exists(meta_path)) {
    json meta = read_json_file(meta_path, "run metadata");
    if (meta.contains("complete") && !meta["complete"].get<bool>()) {
      throw EvalError("run is marked incomplete: " + options.run_path.string());
    }
  }

  std::vector<QueryRecord> queries = load_queries(options.corpus_dir / "queries.jsonl");
  MetricReport report = evaluate_run(run, queries);

  std::filesystem::path base = options.out_base;
  if (base.empty()) {
    base = options.run_path;
    base.replace_extension();  // strip .jsonl
  }
  save_metric_report_json(report, base.string() + ".metrics.json");
  save_metric_report_csv(report, base.string() + ".metrics.csv");

  std::cout << report.pipeline_name;
  char buf[32];
  for (const char* metric : {"hit@1", "hit@5", "recall@20", "mrr"}) {
    std::snprintf(buf, sizeof(buf), "%.4f", report.mean(metric));
    std::cout << "  " << metric << "=" << buf;
  }
  std::cout << "\n";
}

void cmd_compare(const CompareOptions& options) {
  if (options.run_paths.size() < 2) throw ConfigError("compare needs at least two runs");
  std::vector<QueryRecord> queries = load_queries(options.corpus_dir / "queries.jsonl");

  std::vector<MetricReport> reports;
  std::vector<std::string> labels;
  for (const auto& path : options.run_paths) {
    RunResult run = load_run(path);
    if (run.per_query.empty()) throw EvalError("run is empty: " + path.string());
    run.pipeline_name = pipeline_name_for_run(path);
    reports.push_back(evaluate_run(run, queries));
    std::string label = run.pipeline_name;
    if (std::find(labels.begin(), labels.end(), label) != labels.end()) {
      label += "#" + std::to_string(labels.size());
    }
    labels.push_back(label);
  }
  for (std::size_t i = 1; i < reports.size(); ++i) {
    if (reports[i].query_ids != reports[0].query_ids) {
      throw EvalError("runs cover different query sets; compare needs paired samples");
    }
  }

  json out;
  out["alpha"] = options.alpha;
  out["labels"] = labels;
  json per_metric = json::object();

  std::cout << "pairwise Wilcoxon signed-rank, Bonferroni-corrected (alpha=" << options.alpha
            << ")\n";
  for (const auto& metric : options.metrics) {
    json section;
    PairedSamples samples;
    samples.labels = labels;
    for (const auto& report : reports) samples.columns.push_back(report.values(metric));

    if (reports.size() >= 3) {
      StatReport friedman = friedman_test(samples);
      section["friedman"] = {{"statistic", friedman.statistic},
                             {"p_value", friedman.p_value},
                             {"kendalls_w", friedman.effect_size.value_or(0.0)},
                             {"degenerate", friedman.degenerate}};
      std::cout << metric << ": Friedman chi2=" << friedman.statistic
                << " p=" << friedman.p_value << " W=" << friedman.effect_size.value_or(0.0)
                << "\n";
    } else {
      section["friedman"] = nullptr;
    }

    std::vector<double> p_values;
    json pairs = json::array();
    for (std::size_t i = 0; i < reports.size(); ++i) {
      for (std::size_t j = i + 1; j < reports.size(); ++j) {
        StatReport w = wilcoxon_signed_rank(samples.columns[i], samples.columns[j]);
        p_values.push_back(w.p_value);
        pairs.push_back({{"a", labels[i]},
                         {"b", labels[j]},
                         {"statistic", w.statistic},
                         {"p_value", w.p_value},
                         {"n_used", w.n_used},
                         {"degenerate", w.degenerate}});
      }
    }
    BonferroniDecision decision = bonferroni(p_values, options.alpha);
    section["alpha_corrected"] = decision.alpha_corrected;
    section["m_comparisons"] = p_values.size();
    for (std::size_t p = 0; p < p_values.size(); ++p) {
      pairs[p]["significant"] = static_cast<bool>(decision.significant[p]);
    }
    section["pairwise"] = std::move(pairs);
    per_metric[metric] = std::move(section);

    std::cout << "  m=" << p_values.size() << " alpha_corrected=" << decision.alpha_corrected
              << "\n";
    std::size_t idx = 0;
    for (std::size_t i = 0; i < reports.size(); ++i) {
      for (std::size_t j = i + 1; j < reports.size(); ++j, ++idx) {
        std::cout << "  " << labels[i] << " vs " << labels[j] << ": p=" << p_values[idx]
                  << (decision.significant[idx] ? "  *" : "") << "\n";
      }
    }
  }
  out["metrics"] = std::move(per_metric);

  if (!options.out_path.empty()) {
    write_json_file(out, options.out_path);
    std::cerr << "comparison report written to " << options.out_path << "\n";
  }
}

void cmd_report(const ReportOptions& options) {
  if (options.metric_paths.empty()) throw EvalError("report needs at least one metric file");

  struct Row {
    MetricReport report;
    std::optional<StageTiming> timing;
  };
  std::vector<Row> rows;
  for (const auto& path : options.metric_paths) {
    Row row;
    row.report = load_metric_report_json(path);
    // <name>.retrieved.metrics.json -> <name>.timing.json
    std::filesystem::path base = path;
    base.replace_extension();  // .metrics
    base.replace_extension();  // .retrieved / .reranked
    const std::filesystem::path timing_path = run_base_path(base).string() + ".timing.json";
    if (std::filesystem::exists(timing_path)) {
      json t = read_json_file(timing_path, "timing report");
      StageTiming timing;
      timing.retriever_sec_per_query = t.value("retriever_sec_per_query", 0.0);
      timing.reranker_sec_per_query = t.value("reranker_sec_per_query", 0.0);
      row.timing = timing;
    }
    rows.push_back(std::move(row));
  }

  const char* kColumns[] = {"hit@1", "hit@5", "recall@20", "mrr"};
  char buf[64];

  std::ofstream csv(options.out_base.string() + ".summary.csv", std::ios::trunc);
  if (!csv) throw IoError("cannot write summary csv");
  csv << "pipeline,Hit@1,Hit@5,R@20,MRR,retriever_sec_per_query,reranker_sec_per_query,"
         "total_sec_per_query\n";
  for (const auto& row : rows) {
    csv << row.report.pipeline_name;
    for (const char* metric : kColumns) {
      std::snprintf(buf, sizeof(buf), "%.4f", row.report.mean(metric));
      csv << "," << buf;
    }
    if (row.timing) {
      std::snprintf(buf, sizeof(buf), ",%.6f,%.6f,%.6f", row.timing->retriever_sec_per_query,
                    row.timing->reranker_sec_per_query, row.timing->total_sec_per_query());
      csv << buf;
    } else {
      csv << ",,,";
    }
    csv << "\n";
  }
  csv.close();

  std::ofstream ci(options.out_base.string() + ".ci.csv", std::ios::trunc);
  if (!ci) throw IoError("cannot write ci csv");
  ci << "pipeline,metric,mean,ci_lo,ci_hi\n";
  for (const auto& row : rows) {
    for (const char* metric : kColumns) {
      auto [lo, hi] = bootstrap_ci(row.report.values(metric), options.ci_level,
                                   options.resamples, options.seed);
      std::snprintf(buf, sizeof(buf), "%.4f,%.4f,%.4f", row.report.mean(metric), lo, hi);
      ci << row.report.pipeline_name << "," << metric << "," << buf << "\n";
    }
  }
  ci.close();

  std::ofstream md(options.out_base.string() + ".summary.md", std::ios::trunc);
  if (!md) throw IoError("cannot write summary markdown");
  md << "| Pipeline | Hit@1 | Hit@5 | R@20 | MRR | Retriever s/q | Reranker s/q |\n";
  md << "|---|---|---|---|---|---|---|\n";
  for (const auto& row : rows) {
    md << "| " << row.report.pipeline_name;
    for (const char* metric : kColumns) {
      std::snprintf(buf, sizeof(buf), " | %.4f", row.report.mean(metric));
      md << buf;
    }
    if (row.timing) {
      std::snprintf(buf, sizeof(buf), " | %.4f | %.4f |\n", row.timing->retriever_sec_per_query,
                    row.timing->reranker_sec_per_query);
      md << buf;
    } else {
      md << " | - | - |\n";
    }
  }
  md.close();

  std::cerr << "report written to " << options.out_base.string() << ".summary.{csv,md} and .ci.csv\n";
}

}  // namespace skb
