#include "skb/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <unordered_set>

#include <json.hpp>

#include "skb/rng.hpp"

namespace skb {
namespace {

using nlohmann::json;

[[noreturn]] void parse_fail(const std::filesystem::path& path, std::size_t line,
                             const std::string& what) {
  throw IoError(path.string() + ":" + std::to_string(line) + ": " + what);
}

std::optional<std::string> opt_string(const json& j, const char* key,
                                      const std::filesystem::path& path, std::size_t line) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number() || it->is_object() || it->is_array()) return it->dump();
  parse_fail(path, line, std::string("field '") + key + "' is not a string");
}

std::vector<std::string> string_list(const json& j, const char* key,
                                     const std::filesystem::path& path, std::size_t line) {
  auto it = j.find(key);
  std::vector<std::string> out;
  if (it == j.end() || it->is_null()) return out;
  if (it->is_string()) {  // tolerated: single value instead of a list
    out.push_back(it->get<std::string>());
    return out;
  }
  if (!it->is_array()) parse_fail(path, line, std::string("field '") + key + "' is not a list");
  for (const auto& v : *it) {
    if (v.is_null()) continue;
    if (v.is_string()) {
      out.push_back(v.get<std::string>());
    } else {
      out.push_back(v.dump());
    }
  }
  return out;
}

std::vector<NodeId> id_list(const json& j, const char* key, const std::filesystem::path& path,
                            std::size_t line) {
  auto it = j.find(key);
  std::vector<NodeId> out;
  if (it == j.end() || it->is_null()) return out;
  if (!it->is_array()) parse_fail(path, line, std::string("field '") + key + "' is not a list");
  for (const auto& v : *it) {
    if (!v.is_number_integer()) {
      parse_fail(path, line, std::string("field '") + key + "' contains a non-integer id");
    }
    out.push_back(v.get<NodeId>());
  }
  return out;
}

std::string first_string(const json& j, std::initializer_list<const char*> keys) {
  for (const char* key : keys) {
    auto it = j.find(key);
    if (it != j.end() && it->is_string()) return it->get<std::string>();
  }
  return {};
}

std::vector<Review> review_list(const json& j, const std::filesystem::path& path,
                                std::size_t line) {
  auto it = j.find("review");
  std::vector<Review> out;
  if (it == j.end() || it->is_null()) return out;
  if (!it->is_array()) parse_fail(path, line, "field 'review' is not a list");
  for (const auto& v : *it) {
    if (!v.is_object()) parse_fail(path, line, "field 'review' contains a non-object entry");
    Review r;
    r.reviewer_id = first_string(v, {"reviewerID", "reviewer_id"});
    r.summary = first_string(v, {"summary"});
    r.text = first_string(v, {"reviewText", "text"});
    for (const char* key : {"overall", "rating"}) {
      auto rit = v.find(key);
      if (rit != v.end() && rit->is_number()) {
        r.rating = rit->get<double>();
        break;
      }
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<QaEntry> qa_list(const json& j, const std::filesystem::path& path, std::size_t line) {
  auto it = j.find("qa");
  std::vector<QaEntry> out;
  if (it == j.end() || it->is_null()) return out;
  if (!it->is_array()) parse_fail(path, line, "field 'qa' is not a list");
  for (const auto& v : *it) {
    if (!v.is_object()) parse_fail(path, line, "field 'qa' contains a non-object entry");
    QaEntry entry;
    entry.question = first_string(v, {"question"});
    entry.answer = first_string(v, {"answer"});
    out.push_back(std::move(entry));
  }
  return out;
}

// Dedup preserving first occurrence; also drops self-loops.
std::size_t normalize_neighbor_list(std::vector<NodeId>& list, NodeId self,
                                    std::size_t& self_loops) {
  std::unordered_set<NodeId> seen;
  std::size_t duplicates = 0;
  std::vector<NodeId> out;
  out.reserve(list.size());
  for (NodeId id : list) {
    if (id == self) {
      ++self_loops;
      continue;
    }
    if (!seen.insert(id).second) {
      ++duplicates;
      continue;
    }
    out.push_back(id);
  }
  list = std::move(out);
  return duplicates;
}

}  // namespace

const NodeRecord& KnowledgeGraph::node(NodeId id) const {
  auto it = by_id_.find(id);
  if (it == by_id_.end()) throw EvalError("unknown node id: " + std::to_string(id));
  return it->second;
}

void KnowledgeGraph::add(NodeRecord record) {
  NodeId id = record.node_id;
  if (!by_id_.emplace(id, std::move(record)).second) {
    throw IoError("duplicate node_id: " + std::to_string(id));
  }
  order_.push_back(id);
}

void KnowledgeGraph::finalize(bool strict_edges) {
  stats_ = GraphStats{};
  for (NodeId id : order_) {
    NodeRecord& rec = by_id_.at(id);
    stats_.type_counts[static_cast<int>(rec.node_type)]++;
    for (std::vector<NodeId>* list : {&rec.also_buy, &rec.also_view}) {
      stats_.removed_duplicate_neighbors +=
          normalize_neighbor_list(*list, id, stats_.removed_self_loops);
      std::vector<NodeId> kept;
      kept.reserve(list->size());
      for (NodeId target : *list) {
        if (by_id_.count(target)) {
          kept.push_back(target);
          continue;
        }
        if (strict_edges) {
          throw IoError("dangling edge: node " + std::to_string(id) + " references missing node " +
                        std::to_string(target));
        }
        if (stats_.dropped_dangling_edges < 10) {
          std::cerr << "warning: node " << id << " references missing node " << target
                    << " (edge dropped)\n";
        }
        stats_.dropped_dangling_edges++;
      }
      *list = std::move(kept);
    }
  }
}

KnowledgeGraph load_nodes(const std::filesystem::path& path, const LoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open node file: " + path.string());

  KnowledgeGraph graph;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      parse_fail(path, line_no, e.what());
    }
    if (!j.is_object()) parse_fail(path, line_no, "record is not a JSON object");

    NodeRecord rec;
    auto id_it = j.find("node_id");
    if (id_it == j.end() || !id_it->is_number_integer()) {
      parse_fail(path, line_no, "field 'node_id' missing or not an integer");
    }
    rec.node_id = id_it->get<NodeId>();

    auto type_it = j.find("node_type");
    if (type_it == j.end() || !type_it->is_number_integer()) {
      parse_fail(path, line_no, "field 'node_type' missing or not an integer");
    }
    int type = type_it->get<int>();
    if (type < 0 || type > 3) {
      parse_fail(path, line_no, "field 'node_type' out of range: " + std::to_string(type));
    }
    rec.node_type = static_cast<NodeType>(type);

    rec.asin = opt_string(j, "asin", path, line_no);
    rec.title = opt_string(j, "title", path, line_no);
    rec.global_category = opt_string(j, "global_category", path, line_no);
    rec.category = string_list(j, "category", path, line_no);
    rec.price = opt_string(j, "price", path, line_no);
    rec.brand = opt_string(j, "brand", path, line_no);
    rec.color = string_list(j, "color", path, line_no);
    rec.feature = string_list(j, "feature", path, line_no);
    rec.rank = opt_string(j, "rank", path, line_no);
    rec.details = opt_string(j, "details", path, line_no);
    rec.description = string_list(j, "description", path, line_no);
    rec.review = review_list(j, path, line_no);
    rec.qa = qa_list(j, path, line_no);
    rec.also_buy = id_list(j, "also_buy", path, line_no);
    rec.also_view = id_list(j, "also_view", path, line_no);

    // Name fields used by non-product node dumps.
    if (!rec.brand && j.contains("brand_name") && j["brand_name"].is_string()) {
      rec.brand = j["brand_name"].get<std::string>();
    }
    if (rec.category.empty() && j.contains("category_name") && j["category_name"].is_string()) {
      rec.category.push_back(j["category_name"].get<std::string>());
    }
    if (rec.color.empty() && j.contains("color_name") && j["color_name"].is_string()) {
      rec.color.push_back(j["color_name"].get<std::string>());
    }

    try {
      graph.add(std::move(rec));
    } catch (const IoError& e) {
      parse_fail(path, line_no, e.what());
    }
  }
  graph.finalize(options.strict_edges);
  return graph;
}

std::vector<NodeId> neighbors(const KnowledgeGraph& graph, NodeId node_id, Relation relation) {
  const NodeRecord& rec = graph.node(node_id);
  switch (relation) {
    case Relation::also_buy:
      return rec.also_buy;
    case Relation::also_view:
      return rec.also_view;
    case Relation::both: {
      std::vector<NodeId> out = rec.also_buy;
      std::unordered_set<NodeId> seen(out.begin(), out.end());
      for (NodeId id : rec.also_view) {
        if (seen.insert(id).second) out.push_back(id);
      }
      return out;
    }
  }
  throw EvalError("invalid relation");
}

std::vector<QueryRecord> load_queries(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open query file: " + path.string());

  std::vector<QueryRecord> out;
  std::unordered_set<QueryId> seen_ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      parse_fail(path, line_no, e.what());
    }
    QueryRecord q;
    auto id_it = j.find("query_id");
    if (id_it == j.end() || !id_it->is_number_integer()) {
      parse_fail(path, line_no, "field 'query_id' missing or not an integer");
    }
    q.query_id = id_it->get<QueryId>();
    if (!seen_ids.insert(q.query_id).second) {
      parse_fail(path, line_no, "duplicate query_id: " + std::to_string(q.query_id));
    }
    auto text_it = j.find("query");
    if (text_it == j.end() || !text_it->is_string()) {
      parse_fail(path, line_no, "field 'query' missing or not a string");
    }
    q.text = text_it->get<std::string>();
    q.answer_ids = id_list(j, "answer_ids", path, line_no);
    // Answers are a set; repeated ids collapse to the first occurrence.
    std::unordered_set<NodeId> seen_answers;
    std::erase_if(q.answer_ids, [&](NodeId id) { return !seen_answers.insert(id).second; });
    if (q.answer_ids.empty()) parse_fail(path, line_no, "empty answer_ids");
    out.push_back(std::move(q));
  }
  return out;
}

std::string node_to_jsonl(const NodeRecord& record) {
  json j;
  j["node_id"] = record.node_id;
  j["node_type"] = static_cast<int>(record.node_type);
  auto set_opt = [&](const char* key, const std::optional<std::string>& v) {
    if (v) j[key] = *v;
  };
  set_opt("asin", record.asin);
  set_opt("title", record.title);
  set_opt("global_category", record.global_category);
  if (!record.category.empty()) j["category"] = record.category;
  set_opt("price", record.price);
  set_opt("brand", record.brand);
  if (!record.color.empty()) j["color"] = record.color;
  if (!record.feature.empty()) j["feature"] = record.feature;
  set_opt("rank", record.rank);
  set_opt("details", record.details);
  if (!record.description.empty()) j["description"] = record.description;
  if (!record.review.empty()) {
    json reviews = json::array();
    for (const auto& r : record.review) {
      json rj;
      if (!r.reviewer_id.empty()) rj["reviewerID"] = r.reviewer_id;
      if (!r.summary.empty()) rj["summary"] = r.summary;
      if (!r.text.empty()) rj["reviewText"] = r.text;
      if (r.rating) rj["overall"] = *r.rating;
      reviews.push_back(std::move(rj));
    }
    j["review"] = std::move(reviews);
  }
  if (!record.qa.empty()) {
    json qa = json::array();
    for (const auto& entry : record.qa) {
      json qj;
      if (!entry.question.empty()) qj["question"] = entry.question;
      if (!entry.answer.empty()) qj["answer"] = entry.answer;
      qa.push_back(std::move(qj));
    }
    j["qa"] = std::move(qa);
  }
  j["also_buy"] = record.also_buy;
  j["also_view"] = record.also_view;
  return j.dump();
}

std::string query_to_jsonl(const QueryRecord& record) {
  json j;
  j["query_id"] = record.query_id;
  j["query"] = record.text;
  j["answer_ids"] = record.answer_ids;
  return j.dump();
}

QueryPartition partition_queries(const std::vector<QueryRecord>& queries, double sample_fraction,
                                 std::uint64_t seed) {
  if (!(sample_fraction > 0.0) || sample_fraction > 1.0) {
    throw ConfigError("sample_fraction must be in (0, 1]");
  }

  QueryPartition part;
  part.eval_full = queries;
  std::vector<std::size_t> filtered_indices;  // into `queries`
  for (std::size_t i = 0; i < queries.size(); ++i) {
    if (queries[i].answer_ids.size() <= 20) {
      filtered_indices.push_back(i);
      part.eval_filtered.push_back(queries[i]);
    }
  }

  std::size_t target = static_cast<std::size_t>(
      std::llround(sample_fraction * static_cast<double>(queries.size())));
  target = std::min(target, filtered_indices.size());
  if (target == 0 || filtered_indices.empty()) return part;

  // Buckets over answer-list length: {1}, {2-5}, {6-10}, {11-20}.
  auto bucket_of = [](std::size_t n) -> int {
    if (n <= 1) return 0;
    if (n <= 5) return 1;
    if (n <= 10) return 2;
    return 3;
  };
  std::array<std::vector<std::size_t>, 4> buckets;  // positions into filtered_indices
  for (std::size_t pos = 0; pos < filtered_indices.size(); ++pos) {
    buckets[bucket_of(queries[filtered_indices[pos]].answer_ids.size())].push_back(pos);
  }

  // Largest-remainder allocation of `target` across buckets.
  const std::size_t total = filtered_indices.size();
  std::array<std::size_t, 4> take{};
  std::array<std::size_t, 4> remainder{};
  std::size_t allocated = 0;
  for (int b = 0; b < 4; ++b) {
    std::size_t numer = target * buckets[b].size();
    take[b] = numer / total;
    remainder[b] = numer % total;
    take[b] = std::min(take[b], buckets[b].size());
    allocated += take[b];
  }
  std::array<int, 4> order = {0, 1, 2, 3};
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (remainder[a] != remainder[b]) return remainder[a] > remainder[b];
    return a < b;
  });
  for (int b : order) {
    if (allocated >= target) break;
    if (take[b] < buckets[b].size()) {
      ++take[b];
      ++allocated;
    }
  }
  // Spill-over if some bucket was smaller than its share.
  for (int b = 0; b < 4 && allocated < target; ++b) {
    while (take[b] < buckets[b].size() && allocated < target) {
      ++take[b];
      ++allocated;
    }
  }

  Rng rng(seed);
  std::vector<bool> selected(filtered_indices.size(), false);
  for (int b = 0; b < 4; ++b) {
    std::vector<std::size_t> pool = buckets[b];
    rng.shuffle(pool);
    for (std::size_t i = 0; i < take[b]; ++i) selected[pool[i]] = true;
  }
  for (std::size_t pos = 0; pos < filtered_indices.size(); ++pos) {
    if (selected[pos]) part.validation.push_back(queries[filtered_indices[pos]]);
  }
  return part;
}

}  // namespace skb
