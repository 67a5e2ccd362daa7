#include "skb/eval_metrics.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_map>

#include <json.hpp>

namespace skb {
namespace {

using nlohmann::json;

}  // namespace

int hit_at_k(std::span<const NodeId> predicted, const std::unordered_set<NodeId>& answers, int k) {
  if (k < 1) throw EvalError("k must be >= 1");
  const std::size_t limit = std::min<std::size_t>(predicted.size(), static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < limit; ++i) {
    if (answers.count(predicted[i])) return 1;
  }
  return 0;
}

double recall_at_k(std::span<const NodeId> predicted, const std::unordered_set<NodeId>& answers,
                   int k) {
  if (k < 1) throw EvalError("k must be >= 1");
  if (answers.empty()) throw EvalError("recall over an empty answer set");
  const std::size_t limit = std::min<std::size_t>(predicted.size(), static_cast<std::size_t>(k));
  std::size_t found = 0;
  for (std::size_t i = 0; i < limit; ++i) {
    if (answers.count(predicted[i])) ++found;
  }
  return static_cast<double>(found) / static_cast<double>(answers.size());
}

double reciprocal_rank(std::span<const NodeId> predicted,
                       const std::unordered_set<NodeId>& answers) {
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (answers.count(predicted[i])) return 1.0 / static_cast<double>(i + 1);
  }
  return 0.0;
}

const std::vector<double>& MetricReport::values(const std::string& metric) const {
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    if (metrics[i] == metric) return per_query[i];
  }
  throw EvalError("metric not in report: " + metric);
}

double MetricReport::mean(const std::string& metric) const {
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    if (metrics[i] == metric) return means[i];
  }
  throw EvalError("metric not in report: " + metric);
}

MetricReport evaluate_run(const RunResult& run, const std::vector<QueryRecord>& queries,
                          std::span<const int> ks) {
  if (run.per_query.empty()) throw EvalError("run has no predictions");

  std::unordered_map<QueryId, std::unordered_set<NodeId>> answers;
  answers.reserve(queries.size());
  for (const auto& q : queries) {
    answers.emplace(q.query_id,
                    std::unordered_set<NodeId>(q.answer_ids.begin(), q.answer_ids.end()));
  }

  MetricReport report;
  report.pipeline_name = run.pipeline_name;
  for (int k : ks) report.metrics.push_back("hit@" + std::to_string(k));
  for (int k : ks) report.metrics.push_back("recall@" + std::to_string(k));
  report.metrics.push_back("mrr");
  report.per_query.assign(report.metrics.size(), {});
  report.n_queries = run.per_query.size();

  for (const auto& [query_id, predicted] : run.per_query) {
    auto it = answers.find(query_id);
    if (it == answers.end()) {
      throw EvalError("run contains query " + std::to_string(query_id) +
                      " with no ground-truth record");
    }
    report.query_ids.push_back(query_id);
    std::size_t m = 0;
    for (int k : ks) report.per_query[m++].push_back(hit_at_k(predicted, it->second, k));
    for (int k : ks) report.per_query[m++].push_back(recall_at_k(predicted, it->second, k));
    report.per_query[m].push_back(reciprocal_rank(predicted, it->second));
  }

  report.means.reserve(report.metrics.size());
  for (const auto& column : report.per_query) {
    double sum = 0.0;
    for (double v : column) sum += v;
    report.means.push_back(sum / static_cast<double>(column.size()));
  }
  return report;
}

void save_run(const RunResult& run, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write run file: " + path.string());
  auto sorted = run.per_query;
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (const auto& [query_id, predicted] : sorted) {
    json line;
    line["query_id"] = query_id;
    line["predicted"] = predicted;
    out << line.dump() << "\n";
  }
  if (!out) throw IoError("write failed: " + path.string());
}

RunResult load_run(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open run file: " + path.string());
  RunResult run;
  run.pipeline_name = path.stem().string();
  std::unordered_set<QueryId> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (!j.contains("query_id") || !j["query_id"].is_number_integer() ||
        !j.contains("predicted") || !j["predicted"].is_array()) {
      throw IoError(path.string() + ":" + std::to_string(line_no) +
                    ": expected {\"query_id\": int, \"predicted\": [int,...]}");
    }
    QueryId qid = j["query_id"].get<QueryId>();
    if (!seen.insert(qid).second) {
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": duplicate query_id " +
                    std::to_string(qid));
    }
    std::vector<NodeId> predicted = j["predicted"].get<std::vector<NodeId>>();
    std::unordered_set<NodeId> unique(predicted.begin(), predicted.end());
    if (unique.size() != predicted.size()) {
      throw IoError(path.string() + ":" + std::to_string(line_no) +
                    ": duplicate ids in predicted list");
    }
    run.per_query.emplace_back(qid, std::move(predicted));
  }
  std::sort(run.per_query.begin(), run.per_query.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return run;
}

void save_metric_report_json(const MetricReport& report, const std::filesystem::path& path) {
  json j;
  j["pipeline"] = report.pipeline_name;
  j["n_queries"] = report.n_queries;
  j["metrics"] = report.metrics;
  j["query_ids"] = report.query_ids;
  json means = json::object();
  json per_query = json::object();
  for (std::size_t i = 0; i < report.metrics.size(); ++i) {
    means[report.metrics[i]] = report.means[i];
    per_query[report.metrics[i]] = report.per_query[i];
  }
  j["means"] = std::move(means);
  j["per_query"] = std::move(per_query);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write metric report: " + path.string());
  out << j.dump(2) << "\n";
  if (!out) throw IoError("write failed: " + path.string());
}

MetricReport load_metric_report_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open metric report: " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw IoError("bad metric report " + path.string() + ": " + e.what());
  }
  MetricReport report;
  report.pipeline_name = j.value("pipeline", path.stem().string());
  report.n_queries = j.at("n_queries").get<std::size_t>();
  report.metrics = j.at("metrics").get<std::vector<std::string>>();
  report.query_ids = j.at("query_ids").get<std::vector<QueryId>>();
  for (const auto& metric : report.metrics) {
    report.means.push_back(j.at("means").at(metric).get<double>());
    report.per_query.push_back(j.at("per_query").at(metric).get<std::vector<double>>());
  }
  return report;
}

void save_metric_report_csv(const MetricReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write metric csv: " + path.string());
  out << "pipeline,Hit@1,Hit@5,R@20,MRR\n";
  out << report.pipeline_name;
  char buf[32];
  for (const char* metric : {"hit@1", "hit@5", "recall@20", "mrr"}) {
    std::snprintf(buf, sizeof(buf), "%.4f", report.mean(metric));
    out << "," << buf;
  }
  out << "\n";
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace skb
