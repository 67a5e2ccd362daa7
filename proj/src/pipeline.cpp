#include "skb/pipeline.hpp"

#include <fstream>

#include <json.hpp>

namespace skb {
namespace {

using nlohmann::json;

Relation relation_from(std::string_view name) {
  if (name == "also_buy") return Relation::also_buy;
  if (name == "also_view") return Relation::also_view;
  if (name == "both") return Relation::both;
  throw ConfigError("unknown relation: " + std::string(name));
}

std::string_view relation_name(Relation r) {
  switch (r) {
    case Relation::also_buy:
      return "also_buy";
    case Relation::also_view:
      return "also_view";
    case Relation::both:
      return "both";
  }
  return "both";
}

ScorerKind scorer_kind_from(std::string_view name) {
  if (name == "lexical_builtin") return ScorerKind::lexical_builtin;
  if (name == "external_pointwise") return ScorerKind::external_pointwise;
  if (name == "external_setwise") return ScorerKind::external_setwise;
  if (name == "oracle_test") return ScorerKind::oracle_test;
  throw ConfigError("unknown scorer kind: " + std::string(name));
}

std::string_view scorer_kind_name(ScorerKind kind) {
  switch (kind) {
    case ScorerKind::lexical_builtin:
      return "lexical_builtin";
    case ScorerKind::external_pointwise:
      return "external_pointwise";
    case ScorerKind::external_setwise:
      return "external_setwise";
    case ScorerKind::oracle_test:
      return "oracle_test";
  }
  return "lexical_builtin";
}

void parse_preprocess(const json& j, PreprocessConfig& config) {
  if (j.is_string()) {
    apply_preset(config, j.get<std::string>());
    return;
  }
  if (!j.is_object()) throw ConfigError("preprocess must be a preset name or an object");
  if (j.contains("presets")) {
    for (const auto& name : j["presets"]) apply_preset(config, name.get<std::string>());
  }
  if (j.contains("preset")) apply_preset(config, j["preset"].get<std::string>());
  auto flag = [&](const char* key, bool& target) {
    if (j.contains(key)) target = j[key].get<bool>();
  };
  flag("lowercase", config.lowercase);
  flag("expand_contractions", config.expand_contractions);
  flag("strip_special_chars", config.strip_special_chars);
  flag("strip_punctuation", config.strip_punctuation);
  flag("remove_stopwords", config.remove_stopwords);
  flag("remove_digits", config.remove_digits);
  flag("lemmatize", config.lemmatize);
  if (j.contains("fields_included")) {
    config.fields_included = j["fields_included"].get<std::vector<std::string>>();
    for (const auto& f : config.fields_included) field_label(f);  // rejects unknown names
  }
}

PipelineConfig parse_pipeline(const json& j) {
  PipelineConfig config;
  if (j.contains("preset")) config = pipeline_preset(j["preset"].get<std::string>());
  if (j.contains("name")) config.name = j["name"].get<std::string>();
  if (config.name.empty()) throw ConfigError("pipeline needs a name");
  if (j.contains("retriever")) {
    config.retriever = retriever_kind_from(j["retriever"].get<std::string>());
  }
  if (j.contains("k")) config.k = j["k"].get<int>();
  if (j.contains("bm25")) {
    const auto& b = j["bm25"];
    if (b.contains("k1")) config.bm25.k1 = b["k1"].get<double>();
    if (b.contains("b")) config.bm25.b = b["b"].get<double>();
  }
  if (j.contains("hnsw")) {
    const auto& h = j["hnsw"];
    if (h.contains("m")) config.hnsw.m = h["m"].get<int>();
    if (h.contains("ef_construction")) config.hnsw.ef_construction = h["ef_construction"].get<int>();
    if (h.contains("ef_search")) config.hnsw.ef_search = h["ef_search"].get<int>();
    if (h.contains("level_lambda")) config.hnsw.level_lambda = h["level_lambda"].get<double>();
  }
  if (j.contains("expansion")) {
    if (j["expansion"].is_null()) {
      config.expansion.reset();
    } else {
      ExpandOptions expansion = config.expansion.value_or(ExpandOptions{});
      const auto& e = j["expansion"];
      if (e.contains("relation")) expansion.relation = relation_from(e["relation"].get<std::string>());
      if (e.contains("cap") && !e["cap"].is_null()) expansion.cap = e["cap"].get<int>();
      if (e.contains("include_nonproduct")) {
        expansion.include_nonproduct = e["include_nonproduct"].get<bool>();
      }
      config.expansion = expansion;
    }
  }
  if (j.contains("reranker")) {
    if (j["reranker"].is_null()) {
      config.reranker.reset();
    } else {
      ScorerSpec spec = config.reranker.value_or(ScorerSpec{});
      const auto& r = j["reranker"];
      if (r.contains("kind")) spec.kind = scorer_kind_from(r["kind"].get<std::string>());
      if (r.contains("endpoint")) spec.endpoint = r["endpoint"].get<std::string>();
      if (r.contains("batch_size")) spec.batch_size = r["batch_size"].get<int>();
      if (r.contains("max_doc_chars")) spec.max_doc_chars = r["max_doc_chars"].get<int>();
      if (r.contains("timeout_sec")) spec.timeout_sec = r["timeout_sec"].get<int>();
      if (r.contains("retries")) spec.retries = r["retries"].get<int>();
      config.reranker = spec;
    }
  }
  if (j.contains("preprocess")) parse_preprocess(j["preprocess"], config.preprocess);
  return config;
}

}  // namespace

std::string_view retriever_kind_name(RetrieverKind kind) {
  switch (kind) {
    case RetrieverKind::bm25:
      return "bm25";
    case RetrieverKind::dense_flat:
      return "dense_flat";
    case RetrieverKind::dense_hnsw:
      return "dense_hnsw";
  }
  return "bm25";
}

RetrieverKind retriever_kind_from(std::string_view name) {
  if (name == "bm25") return RetrieverKind::bm25;
  if (name == "dense_flat") return RetrieverKind::dense_flat;
  if (name == "dense_hnsw") return RetrieverKind::dense_hnsw;
  throw ConfigError("unknown retriever kind: " + std::string(name));
}

void PipelineConfig::validate() const {
  if (name.empty()) throw ConfigError("pipeline needs a name");
  if (k < 1) throw ConfigError("pipeline k must be >= 1");
  if (expansion && !reranker) {
    throw ConfigError("pipeline '" + name + "': expansion requires a reranker");
  }
  if (retriever == RetrieverKind::dense_hnsw) hnsw.validate();
  if (reranker) reranker->validate();
}

PipelineConfig pipeline_preset(std::string_view name) {
  PipelineConfig config;
  config.name = std::string(name);
  if (name == "BM25") {
    config.retriever = RetrieverKind::bm25;
    return config;
  }
  if (name == "BARMR") {
    config.retriever = RetrieverKind::bm25;
    config.expansion = ExpandOptions{};
    ScorerSpec scorer;
    scorer.kind = ScorerKind::external_pointwise;
    config.reranker = scorer;
    return config;
  }
  if (name == "FRMR" || name == "FRWSR") {
    config.retriever = RetrieverKind::dense_hnsw;
    config.hnsw = HnswParams{64, 100, 200, 0.0};
    ScorerSpec scorer;
    scorer.kind =
        name == "FRWSR" ? ScorerKind::external_setwise : ScorerKind::external_pointwise;
    config.reranker = scorer;
    return config;
  }
  throw ConfigError("unknown pipeline preset: " + std::string(name));
}

const PipelineConfig& ExperimentConfig::pipeline(std::string_view name) const {
  for (const auto& p : pipelines) {
    if (p.name == name) return p;
  }
  throw ConfigError("no pipeline named '" + std::string(name) + "' in config");
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("bad config " + path.string() + ": " + e.what());
  }

  const std::filesystem::path base = path.has_parent_path()
                                         ? path.parent_path()
                                         : std::filesystem::path(".");
  auto resolve = [&](const std::filesystem::path& p) {
    return p.is_absolute() ? p : base / p;
  };

  ExperimentConfig config;
  if (!j.contains("corpus_dir")) throw ConfigError("config needs corpus_dir");
  config.corpus_dir = resolve(j["corpus_dir"].get<std::string>());
  config.index_dir = j.contains("index_dir") ? resolve(j["index_dir"].get<std::string>())
                                             : config.corpus_dir / "indexes";

  const std::filesystem::path emb = config.corpus_dir / "embeddings";
  config.node_embeddings_manifest = emb / "nodes.manifest.json";
  config.node_embeddings_data = emb / "nodes.f32";
  config.query_embeddings_manifest = emb / "queries.manifest.json";
  config.query_embeddings_data = emb / "queries.f32";
  if (j.contains("embeddings")) {
    const auto& e = j["embeddings"];
    auto set = [&](const char* key, std::filesystem::path& target) {
      if (e.contains(key)) target = resolve(e[key].get<std::string>());
    };
    set("nodes_manifest", config.node_embeddings_manifest);
    set("nodes_data", config.node_embeddings_data);
    set("queries_manifest", config.query_embeddings_manifest);
    set("queries_data", config.query_embeddings_data);
  }
  if (j.contains("embedder")) {
    EmbedEndpoint endpoint;
    endpoint.url = j["embedder"].at("url").get<std::string>();
    if (j["embedder"].contains("timeout_sec")) {
      endpoint.timeout_sec = j["embedder"]["timeout_sec"].get<int>();
    }
    if (j["embedder"].contains("batch_size")) {
      endpoint.batch_size = j["embedder"]["batch_size"].get<int>();
    }
    config.embedder = endpoint;
  }

  if (!j.contains("pipelines") || !j["pipelines"].is_array() || j["pipelines"].empty()) {
    throw ConfigError("config needs a non-empty pipelines list");
  }
  for (const auto& pj : j["pipelines"]) config.pipelines.push_back(parse_pipeline(pj));
  return config;
}

std::string pipeline_config_json(const PipelineConfig& config) {
  json j;
  j["name"] = config.name;
  j["retriever"] = std::string(retriever_kind_name(config.retriever));
  j["k"] = config.k;
  if (config.retriever == RetrieverKind::bm25) {
    j["bm25"] = {{"k1", config.bm25.k1}, {"b", config.bm25.b}};
  } else if (config.retriever == RetrieverKind::dense_hnsw) {
    j["hnsw"] = {{"m", config.hnsw.m},
                 {"ef_construction", config.hnsw.ef_construction},
                 {"ef_search", config.hnsw.ef_search},
                 {"level_lambda", config.hnsw.level_lambda}};
  }
  if (config.expansion) {
    j["expansion"] = {{"relation", std::string(relation_name(config.expansion->relation))},
                      {"include_nonproduct", config.expansion->include_nonproduct}};
    if (config.expansion->cap) j["expansion"]["cap"] = *config.expansion->cap;
  }
  if (config.reranker) {
    j["reranker"] = {{"kind", std::string(scorer_kind_name(config.reranker->kind))},
                     {"endpoint", config.reranker->endpoint},
                     {"batch_size", config.reranker->batch_size},
                     {"max_doc_chars", config.reranker->max_doc_chars}};
  }
  const PreprocessConfig& p = config.preprocess;
  j["preprocess"] = {{"lowercase", p.lowercase},
                     {"expand_contractions", p.expand_contractions},
                     {"strip_special_chars", p.strip_special_chars},
                     {"strip_punctuation", p.strip_punctuation},
                     {"remove_stopwords", p.remove_stopwords},
                     {"remove_digits", p.remove_digits},
                     {"lemmatize", p.lemmatize},
                     {"fields_included", p.fields_included}};
  return j.dump(2);
}

}  // namespace skb
