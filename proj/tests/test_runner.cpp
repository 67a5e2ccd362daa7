#include <doctest.h>

#include <fstream>

#include <json.hpp>

#include "skb/commands.hpp"
#include "skb/eval_metrics.hpp"
#include "skb/fixture.hpp"
#include "stub_servers.hpp"
#include "test_util.hpp"

using namespace skb;
using test::StubServer;
using test::TempDir;
using test::read_file;
using test::write_file;

namespace {

// fixture + ingest under one temp root; returns the corpus dir
std::filesystem::path prepare_corpus(const TempDir& dir, std::uint64_t seed = 42) {
  FixturePaths paths = write_fixture(dir.file("fixture"), FixtureSpec{});
  IngestOptions ingest;
  ingest.nodes_path = paths.nodes;
  ingest.queries_path = paths.queries;
  ingest.out_dir = dir.file("corpus");
  ingest.seed = seed;
  cmd_ingest(ingest);
  return ingest.out_dir;
}

void write_experiment_config(const TempDir& dir, const std::string& pipelines_json) {
  write_file(dir.file("config.json"), std::string(R"({
  "corpus_dir": "corpus",
  "embeddings": {
    "nodes_manifest": "fixture/embeddings/nodes.manifest.json",
    "nodes_data": "fixture/embeddings/nodes.f32",
    "queries_manifest": "fixture/embeddings/queries.manifest.json",
    "queries_data": "fixture/embeddings/queries.f32"
  },
  "pipelines": )") + pipelines_json + "\n}\n");
}

void build_bm25(const std::filesystem::path& corpus_dir) {
  BuildIndexOptions build;
  build.corpus_dir = corpus_dir;
  build.kind = "bm25";
  build.preprocess = preprocess_preset("TP4");
  apply_preset(build.preprocess, "F4");
  cmd_build_index(build);
}

void build_hnsw_index(const TempDir& dir, const std::filesystem::path& corpus_dir) {
  BuildIndexOptions build;
  build.corpus_dir = corpus_dir;
  build.kind = "hnsw";
  build.hnsw = HnswParams{16, 64, 64, 0.0};
  build.nodes_manifest = dir.file("fixture/embeddings/nodes.manifest.json");
  build.nodes_data = dir.file("fixture/embeddings/nodes.f32");
  cmd_build_index(build);
}

}  // namespace

TEST_CASE("built-in pipeline presets have the documented shapes") {
  PipelineConfig bm25 = pipeline_preset("BM25");
  CHECK(bm25.retriever == RetrieverKind::bm25);
  CHECK_FALSE(bm25.expansion.has_value());
  CHECK_FALSE(bm25.reranker.has_value());
  bm25.validate();

  PipelineConfig barmr = pipeline_preset("BARMR");
  CHECK(barmr.retriever == RetrieverKind::bm25);
  REQUIRE(barmr.expansion.has_value());
  CHECK(barmr.expansion->relation == Relation::both);
  REQUIRE(barmr.reranker.has_value());
  CHECK(barmr.reranker->kind == ScorerKind::external_pointwise);

  PipelineConfig frmr = pipeline_preset("FRMR");
  CHECK(frmr.retriever == RetrieverKind::dense_hnsw);
  CHECK(frmr.hnsw.m == 64);
  CHECK(frmr.hnsw.ef_construction == 100);
  CHECK(frmr.hnsw.ef_search == 200);
  CHECK(frmr.reranker->kind == ScorerKind::external_pointwise);

  PipelineConfig frwsr = pipeline_preset("FRWSR");
  CHECK(frwsr.retriever == RetrieverKind::dense_hnsw);
  CHECK(frwsr.reranker->kind == ScorerKind::external_setwise);

  CHECK_THROWS_AS(pipeline_preset("NOPE"), ConfigError);

  // expansion without a reranker is rejected
  PipelineConfig invalid = pipeline_preset("BM25");
  invalid.expansion = ExpandOptions{};
  CHECK_THROWS_AS(invalid.validate(), ConfigError);

  // defaults: retrieval depth 100, TP4-style cleaning flags
  CHECK(bm25.k == 100);
  CHECK(bm25.preprocess.remove_stopwords);
  CHECK_FALSE(bm25.preprocess.lemmatize);
}

TEST_CASE("ingest writes the corpus and refuses to overwrite") {
  TempDir dir("runner-ingest");
  std::filesystem::path corpus = prepare_corpus(dir);

  CHECK(std::filesystem::exists(corpus / "nodes.jsonl"));
  CHECK(std::filesystem::exists(corpus / "queries.jsonl"));
  CHECK(std::filesystem::exists(corpus / "partitions.json"));
  CHECK(std::filesystem::exists(corpus / "corpus_meta.json"));

  nlohmann::json meta = nlohmann::json::parse(read_file(corpus / "corpus_meta.json"));
  CHECK(meta["node_count"] == 200);
  CHECK(meta["type_counts"]["product"] == 170);

  nlohmann::json partitions = nlohmann::json::parse(read_file(corpus / "partitions.json"));
  CHECK(partitions["eval_full"].size() == 50);
  CHECK(partitions["eval_filtered"].size() == 47);
  CHECK(partitions["validation"].size() == 5);  // round(0.1 * 50)

  IngestOptions again;
  again.nodes_path = dir.file("fixture/nodes.jsonl");
  again.queries_path = dir.file("fixture/queries.jsonl");
  again.out_dir = corpus;
  CHECK_THROWS_AS(cmd_ingest(again), IoError);  // no --force
  again.force = true;
  cmd_ingest(again);  // now allowed

  IngestOptions missing = again;
  missing.nodes_path = dir.file("nope.jsonl");
  CHECK_THROWS_WITH_AS(cmd_ingest(missing), doctest::Contains("nope.jsonl"), IoError);
}

TEST_CASE("build-index produces reloadable artifacts and validates inputs") {
  TempDir dir("runner-build");
  std::filesystem::path corpus = prepare_corpus(dir);

  build_bm25(corpus);
  CHECK(std::filesystem::exists(corpus / "indexes" / "bm25.idx"));
  InvertedIndex index = InvertedIndex::load(corpus / "indexes" / "bm25.idx");
  CHECK(index.doc_count() == 200);

  BuildIndexOptions again;
  again.corpus_dir = corpus;
  again.kind = "bm25";
  CHECK_THROWS_AS(cmd_build_index(again), IoError);  // refuse overwrite

  build_hnsw_index(dir, corpus);
  CHECK(std::filesystem::exists(corpus / "indexes" / "hnsw.idx"));

  // default parameters (m=64, efConstruction=100, efSearch=200) also build
  BuildIndexOptions default_hnsw;
  default_hnsw.corpus_dir = corpus;
  default_hnsw.kind = "hnsw";
  default_hnsw.out_path = dir.file("hnsw-default.idx");
  default_hnsw.nodes_manifest = dir.file("fixture/embeddings/nodes.manifest.json");
  default_hnsw.nodes_data = dir.file("fixture/embeddings/nodes.f32");
  cmd_build_index(default_hnsw);
  HnswIndex reloaded = HnswIndex::load(dir.file("hnsw-default.idx"));
  CHECK(reloaded.params().m == 64);
  CHECK(reloaded.params().ef_construction == 100);
  CHECK(reloaded.params().ef_search == 200);

  BuildIndexOptions flat;
  flat.corpus_dir = corpus;
  flat.kind = "flat";
  flat.nodes_manifest = dir.file("fixture/embeddings/nodes.manifest.json");
  flat.nodes_data = dir.file("fixture/embeddings/nodes.f32");
  cmd_build_index(flat);  // validates embeddings, writes nothing
  CHECK_FALSE(std::filesystem::exists(corpus / "indexes" / "flat.idx"));

  BuildIndexOptions missing_embeddings;
  missing_embeddings.corpus_dir = corpus;
  missing_embeddings.kind = "hnsw";
  missing_embeddings.nodes_manifest = dir.file("absent.json");
  CHECK_THROWS_AS(cmd_build_index(missing_embeddings), IoError);

  BuildIndexOptions unknown;
  unknown.corpus_dir = corpus;
  unknown.kind = "fancy";
  CHECK_THROWS_AS(cmd_build_index(unknown), ConfigError);
}

TEST_CASE("run produces stage files per pipeline shape") {
  TempDir dir("runner-run");
  std::filesystem::path corpus = prepare_corpus(dir);
  build_bm25(corpus);
  build_hnsw_index(dir, corpus);

  write_experiment_config(dir, R"([
    {"name": "bm25-plain", "preset": "BM25"},
    {"name": "bm25-lex", "preset": "BM25", "reranker": {"kind": "lexical_builtin"}}
  ])");

  RunOptions run;
  run.config_path = dir.file("config.json");
  run.partition = "validation";
  run.out_dir = dir.file("runs");
  cmd_run(run);

  // no reranker -> retrieved stage only
  CHECK(std::filesystem::exists(dir.file("runs/bm25-plain.retrieved.jsonl")));
  CHECK_FALSE(std::filesystem::exists(dir.file("runs/bm25-plain.reranked.jsonl")));
  // reranker -> both stages
  CHECK(std::filesystem::exists(dir.file("runs/bm25-lex.retrieved.jsonl")));
  CHECK(std::filesystem::exists(dir.file("runs/bm25-lex.reranked.jsonl")));
  CHECK(std::filesystem::exists(dir.file("runs/bm25-lex.timing.json")));

  nlohmann::json meta =
      nlohmann::json::parse(read_file(dir.file("runs/bm25-lex.meta.json")));
  CHECK(meta["complete"] == true);
  CHECK(meta["n_queries"] == 5);

  // rerunning without --force refuses
  CHECK_THROWS_AS(cmd_run(run), IoError);

  // unknown pipeline name
  RunOptions bad = run;
  bad.force = true;
  bad.pipeline = "missing";
  CHECK_THROWS_AS(cmd_run(bad), ConfigError);
}

TEST_CASE("dense pipelines run off the embedding files and the stub scorer") {
  TempDir dir("runner-dense");
  std::filesystem::path corpus = prepare_corpus(dir);
  build_hnsw_index(dir, corpus);
  StubServer stub(test::length_scorer);

  write_experiment_config(dir, std::string(R"([
    {"name": "flat-run", "retriever": "dense_flat", "k": 50},
    {"name": "frmr-stub", "preset": "FRMR",
     "hnsw": {"m": 16, "ef_construction": 64, "ef_search": 64},
     "reranker": {"kind": "external_pointwise", "endpoint": ")") + stub.url() + R"("}}
  ])");

  RunOptions run;
  run.config_path = dir.file("config.json");
  run.partition = "validation";
  run.out_dir = dir.file("runs");
  cmd_run(run);

  RunResult flat = load_run(dir.file("runs/flat-run.retrieved.jsonl"));
  CHECK(flat.per_query.size() == 5);
  CHECK(flat.per_query[0].second.size() == 50);

  RunResult reranked = load_run(dir.file("runs/frmr-stub.reranked.jsonl"));
  CHECK(reranked.per_query.size() == 5);
  CHECK(stub.request_count() > 0);
}

TEST_CASE("BARMR-style pipeline expands candidates before the external reranker") {
  TempDir dir("runner-barmr");
  std::filesystem::path corpus = prepare_corpus(dir);
  build_bm25(corpus);
  StubServer stub(test::length_scorer);

  write_experiment_config(dir, std::string(R"([
    {"name": "barmr-stub", "preset": "BARMR", "k": 10,
     "reranker": {"kind": "external_pointwise", "endpoint": ")") + stub.url() + R"("}}
  ])");

  RunOptions run;
  run.config_path = dir.file("config.json");
  run.partition = "validation";
  run.out_dir = dir.file("runs");
  cmd_run(run);

  // retrieved stage includes the expansion tail beyond the top-10 prefix for
  // at least one query, and the reranked stage is a permutation of it
  RunResult retrieved = load_run(dir.file("runs/barmr-stub.retrieved.jsonl"));
  RunResult reranked = load_run(dir.file("runs/barmr-stub.reranked.jsonl"));
  REQUIRE(retrieved.per_query.size() == 5);
  bool expanded_somewhere = false;
  for (std::size_t i = 0; i < retrieved.per_query.size(); ++i) {
    if (retrieved.per_query[i].second.size() > 10) expanded_somewhere = true;
    std::vector<NodeId> a = retrieved.per_query[i].second;
    std::vector<NodeId> b = reranked.per_query[i].second;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    CHECK(a == b);
  }
  CHECK(expanded_somewhere);
  CHECK(stub.request_count() > 0);
}

TEST_CASE("scorer endpoint failure preserves partial results and marks them") {
  TempDir dir("runner-fail");
  std::filesystem::path corpus = prepare_corpus(dir);
  build_bm25(corpus);
  write_experiment_config(dir, R"([
    {"name": "doomed", "preset": "BM25",
     "reranker": {"kind": "external_pointwise", "endpoint": "http://127.0.0.1:9",
                  "timeout_sec": 1, "retries": 0}}
  ])");
  RunOptions run;
  run.config_path = dir.file("config.json");
  run.partition = "validation";
  run.out_dir = dir.file("runs");
  CHECK_THROWS_AS(cmd_run(run), EndpointError);
  CHECK(std::filesystem::exists(dir.file("runs/doomed.meta.json")));
  nlohmann::json meta = nlohmann::json::parse(read_file(dir.file("runs/doomed.meta.json")));
  CHECK(meta["complete"] == false);

  EvaluateOptions evaluate;
  evaluate.run_path = dir.file("runs/doomed.retrieved.jsonl");
  evaluate.corpus_dir = corpus;
  CHECK_THROWS_AS(cmd_evaluate(evaluate), EvalError);  // incomplete run
}

TEST_CASE("identical config and seed give byte-identical artifacts") {
  TempDir dir("runner-determinism");
  std::filesystem::path corpus = prepare_corpus(dir);
  build_bm25(corpus);
  write_experiment_config(dir, R"([
    {"name": "lex", "preset": "BM25", "reranker": {"kind": "lexical_builtin"}}
  ])");

  for (const char* out : {"runs-a", "runs-b"}) {
    RunOptions run;
    run.config_path = dir.file("config.json");
    run.partition = "validation";
    run.out_dir = dir.file(out);
    cmd_run(run);
    EvaluateOptions evaluate;
    evaluate.run_path = dir.file(std::string(out) + "/lex.reranked.jsonl");
    evaluate.corpus_dir = corpus;
    cmd_evaluate(evaluate);
  }
  for (const char* name :
       {"lex.retrieved.jsonl", "lex.reranked.jsonl", "lex.meta.json",
        "lex.reranked.metrics.json", "lex.reranked.metrics.csv"}) {
    CHECK_MESSAGE(read_file(dir.file(std::string("runs-a/") + name)) ==
                      read_file(dir.file(std::string("runs-b/") + name)),
                  name);
  }
}

TEST_CASE("worker count does not change the predictions") {
  TempDir dir("runner-workers");
  std::filesystem::path corpus = prepare_corpus(dir);
  build_bm25(corpus);
  write_experiment_config(dir, R"([
    {"name": "lex", "preset": "BM25", "reranker": {"kind": "lexical_builtin"}}
  ])");
  for (int workers : {1, 4}) {
    RunOptions run;
    run.config_path = dir.file("config.json");
    run.partition = "eval-filtered";
    run.out_dir = dir.file("runs-w" + std::to_string(workers));
    run.workers = workers;
    cmd_run(run);
  }
  CHECK(read_file(dir.file("runs-w1/lex.reranked.jsonl")) ==
        read_file(dir.file("runs-w4/lex.reranked.jsonl")));
}

TEST_CASE("predictions are blind to the answer labels") {
  TempDir dir("runner-blind");
  FixturePaths paths = write_fixture(dir.file("fixture"), FixtureSpec{});

  // second query file with every answer id mapped through a bijection
  std::vector<QueryRecord> queries = load_queries(paths.queries);
  std::ofstream out(dir.file("fixture/queries2.jsonl"), std::ios::trunc);
  for (QueryRecord q : queries) {
    for (auto& id : q.answer_ids) id = 169 - id;  // products are 0..169
    std::unordered_set<NodeId> dedup(q.answer_ids.begin(), q.answer_ids.end());
    REQUIRE(dedup.size() == q.answer_ids.size());
    out << query_to_jsonl(q) << "\n";
  }
  out.close();

  for (const char* variant : {"a", "b"}) {
    IngestOptions ingest;
    ingest.nodes_path = paths.nodes;
    ingest.queries_path = variant == std::string("a") ? paths.queries
                                                      : dir.file("fixture/queries2.jsonl");
    ingest.out_dir = dir.file(std::string("corpus-") + variant);
    cmd_ingest(ingest);
    build_bm25(ingest.out_dir);
    write_file(dir.file(std::string("config-") + variant + ".json"),
               "{\"corpus_dir\": \"corpus-" + std::string(variant) +
                   "\", \"pipelines\": [{\"name\": \"lex\", \"preset\": \"BM25\", "
                   "\"reranker\": {\"kind\": \"lexical_builtin\"}}]}");
    RunOptions run;
    run.config_path = dir.file(std::string("config-") + variant + ".json");
    run.partition = "eval-filtered";
    run.out_dir = dir.file(std::string("runs-") + variant);
    cmd_run(run);
  }
  // same predictions even though every ground-truth label changed
  CHECK(read_file(dir.file("runs-a/lex.reranked.jsonl")) ==
        read_file(dir.file("runs-b/lex.reranked.jsonl")));
}

TEST_CASE("evaluate and compare close the loop") {
  TempDir dir("runner-compare");
  std::filesystem::path corpus = prepare_corpus(dir);

  // synthetic runs over the validation partition query ids
  nlohmann::json partitions = nlohmann::json::parse(read_file(corpus / "partitions.json"));
  std::vector<QueryId> qids = partitions["validation"].get<std::vector<QueryId>>();
  std::vector<QueryRecord> queries = load_queries(corpus / "queries.jsonl");
  std::unordered_map<QueryId, const QueryRecord*> by_id;
  for (const auto& q : queries) by_id.emplace(q.query_id, &q);

  auto write_run = [&](const std::string& name, bool correct_first, NodeId junk_base) {
    RunResult run;
    run.pipeline_name = name;
    for (QueryId qid : qids) {
      std::vector<NodeId> predicted;
      if (correct_first) predicted.push_back(by_id.at(qid)->answer_ids.front());
      predicted.push_back(junk_base);
      predicted.push_back(junk_base + 1);
      run.per_query.emplace_back(qid, predicted);
    }
    save_run(run, dir.file(name + ".jsonl"));
    return dir.file(name + ".jsonl");
  };

  auto good = write_run("good", true, 9000);
  auto bad = write_run("bad", false, 9100);
  auto good_copy = write_run("good-copy", true, 9000);

  EvaluateOptions evaluate;
  evaluate.run_path = good;
  evaluate.corpus_dir = corpus;
  cmd_evaluate(evaluate);
  MetricReport report = load_metric_report_json(dir.file("good.metrics.json"));
  CHECK(report.mean("hit@1") == 1.0);

  // evaluate twice -> identical artifacts
  std::string first = read_file(dir.file("good.metrics.json"));
  cmd_evaluate(evaluate);
  CHECK(read_file(dir.file("good.metrics.json")) == first);

  // two identical runs: every pairwise p-value is 1
  CompareOptions same;
  same.run_paths = {good, good_copy};
  same.corpus_dir = corpus;
  same.out_path = dir.file("same.json");
  cmd_compare(same);
  nlohmann::json same_report = nlohmann::json::parse(read_file(dir.file("same.json")));
  for (const auto& [metric, section] : same_report["metrics"].items()) {
    for (const auto& pair : section["pairwise"]) {
      CHECK(pair["p_value"] == 1.0);
    }
  }

  // six runs -> m = 15 pairwise comparisons, alpha_corrected ~ 0.0033
  CompareOptions six;
  six.corpus_dir = corpus;
  six.out_path = dir.file("six.json");
  for (int i = 0; i < 6; ++i) {
    six.run_paths.push_back(
        write_run("run6-" + std::to_string(i), i % 2 == 0, 9200 + 10 * i));
  }
  cmd_compare(six);
  nlohmann::json six_report = nlohmann::json::parse(read_file(dir.file("six.json")));
  CHECK(six_report["metrics"]["hit@1"]["m_comparisons"] == 15);
  CHECK(std::fabs(six_report["metrics"]["hit@1"]["alpha_corrected"].get<double>() -
                  0.05 / 15.0) <= 1e-12);

  // seven runs -> m = 21, alpha_corrected ~ 0.0024
  CompareOptions seven = six;
  seven.out_path = dir.file("seven.json");
  seven.run_paths.push_back(write_run("run7", true, 9900));
  cmd_compare(seven);
  nlohmann::json seven_report = nlohmann::json::parse(read_file(dir.file("seven.json")));
  CHECK(seven_report["metrics"]["hit@1"]["m_comparisons"] == 21);
  CHECK(std::fabs(seven_report["metrics"]["hit@1"]["alpha_corrected"].get<double>() -
                  0.05 / 21.0) <= 1e-12);

  // mismatched query sets are rejected
  RunResult short_run;
  short_run.per_query.emplace_back(qids[0], std::vector<NodeId>{1});
  save_run(short_run, dir.file("short.jsonl"));
  CompareOptions mismatch;
  mismatch.run_paths = {good, dir.file("short.jsonl")};
  mismatch.corpus_dir = corpus;
  CHECK_THROWS_AS(cmd_compare(mismatch), EvalError);
}

TEST_CASE("report emits summary, markdown and CI tables") {
  TempDir dir("runner-report");
  std::filesystem::path corpus = prepare_corpus(dir);
  build_bm25(corpus);
  write_experiment_config(dir, R"([
    {"name": "lex", "preset": "BM25", "reranker": {"kind": "lexical_builtin"}}
  ])");
  RunOptions run;
  run.config_path = dir.file("config.json");
  run.partition = "validation";
  run.out_dir = dir.file("runs");
  cmd_run(run);
  EvaluateOptions evaluate;
  evaluate.run_path = dir.file("runs/lex.reranked.jsonl");
  evaluate.corpus_dir = corpus;
  cmd_evaluate(evaluate);

  ReportOptions report;
  report.metric_paths = {dir.file("runs/lex.reranked.metrics.json")};
  report.out_base = dir.file("summary");
  cmd_report(report);

  std::string csv = read_file(dir.file("summary.summary.csv"));
  CHECK(csv.find("pipeline,Hit@1,Hit@5,R@20,MRR,retriever_sec_per_query") == 0);
  CHECK(csv.find("lex,") != std::string::npos);
  std::string ci = read_file(dir.file("summary.ci.csv"));
  CHECK(ci.find("pipeline,metric,mean,ci_lo,ci_hi") == 0);
  CHECK(std::filesystem::exists(dir.file("summary.summary.md")));

  ReportOptions empty;
  empty.out_base = dir.file("nothing");
  CHECK_THROWS_AS(cmd_report(empty), EvalError);
}

TEST_CASE("evaluate rejects an empty run file") {
  TempDir dir("runner-empty");
  std::filesystem::path corpus = prepare_corpus(dir);
  write_file(dir.file("empty.jsonl"), "");
  EvaluateOptions evaluate;
  evaluate.run_path = dir.file("empty.jsonl");
  evaluate.corpus_dir = corpus;
  CHECK_THROWS_AS(cmd_evaluate(evaluate), EvalError);
}
