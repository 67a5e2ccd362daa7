#include "skb/dense_index.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <httplib.h>
#include <json.hpp>

namespace skb {
namespace {

using nlohmann::json;

void normalize_rows(std::vector<float>& data, int dim) {
  const std::size_t d = static_cast<std::size_t>(dim);
  for (std::size_t off = 0; off + d <= data.size(); off += d) {
    double sq = 0.0;
    for (std::size_t i = 0; i < d; ++i) sq += static_cast<double>(data[off + i]) * data[off + i];
    if (sq <= 0.0) continue;  // zero rows stay zero
    const float inv = static_cast<float>(1.0 / std::sqrt(sq));
    for (std::size_t i = 0; i < d; ++i) data[off + i] *= inv;
  }
}

// Splits "http://host:port/path" into client base and path.
std::pair<std::string, std::string> split_url(const std::string& url, const char* default_path) {
  auto scheme_end = url.find("://");
  std::size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
  auto path_start = url.find('/', host_start);
  if (path_start == std::string::npos) return {url, default_path};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

EmbeddingMatrix EmbeddingMatrix::from_rows(std::vector<NodeId> ids, std::vector<float> data,
                                           int dim, bool normalize) {
  if (dim <= 0) throw ConfigError("embedding dim must be positive");
  if (data.size() != ids.size() * static_cast<std::size_t>(dim)) {
    throw EvalError("embedding data size does not match ids * dim");
  }
  EmbeddingMatrix m;
  m.dim_ = dim;
  m.ids_ = std::move(ids);
  m.data_ = std::move(data);
  if (normalize) {
    normalize_rows(m.data_, dim);
    m.normalized_ = true;
  }
  m.id_to_row_.reserve(m.ids_.size());
  for (std::size_t i = 0; i < m.ids_.size(); ++i) {
    if (!m.id_to_row_.emplace(m.ids_[i], i).second) {
      throw EvalError("duplicate id in embedding matrix: " + std::to_string(m.ids_[i]));
    }
  }
  return m;
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& manifest_path,
                                const std::filesystem::path& data_path) {
  std::ifstream mf(manifest_path);
  if (!mf) throw IoError("cannot open embedding manifest: " + manifest_path.string());
  json manifest;
  try {
    manifest = json::parse(mf);
  } catch (const json::exception& e) {
    throw IoError("bad embedding manifest " + manifest_path.string() + ": " + e.what());
  }
  if (!manifest.contains("dim") || !manifest.contains("count") || !manifest.contains("ids")) {
    throw IoError("embedding manifest must carry dim, count and ids: " + manifest_path.string());
  }
  const int dim = manifest["dim"].get<int>();
  const std::size_t count = manifest["count"].get<std::size_t>();
  const bool normalized = manifest.value("normalized", false);
  std::vector<NodeId> ids = manifest["ids"].get<std::vector<NodeId>>();
  if (ids.size() != count) {
    throw IoError("embedding manifest count does not match ids length: " +
                  manifest_path.string());
  }
  if (dim <= 0) throw IoError("embedding manifest dim must be positive");

  std::ifstream df(data_path, std::ios::binary | std::ios::ate);
  if (!df) throw IoError("cannot open embedding data: " + data_path.string());
  const std::uint64_t size = static_cast<std::uint64_t>(df.tellg());
  const std::uint64_t expected = static_cast<std::uint64_t>(count) * dim * 4;
  if (size != expected) {
    throw IoError("embedding data size mismatch: expected " + std::to_string(expected) +
                  " bytes, found " + std::to_string(size) + " in " + data_path.string());
  }
  df.seekg(0);
  std::vector<float> data(count * static_cast<std::size_t>(dim));
  df.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(size));
  if (!df) throw IoError("short read from embedding data: " + data_path.string());

  EmbeddingMatrix m = EmbeddingMatrix::from_rows(std::move(ids), std::move(data), dim, normalized);
  return m;
}

void EmbeddingMatrix::save(const std::filesystem::path& manifest_path,
                           const std::filesystem::path& data_path) const {
  json manifest;
  manifest["dim"] = dim_;
  manifest["count"] = ids_.size();
  manifest["normalized"] = normalized_;
  manifest["ids"] = ids_;
  std::ofstream mf(manifest_path, std::ios::trunc);
  if (!mf) throw IoError("cannot write embedding manifest: " + manifest_path.string());
  mf << manifest.dump() << "\n";

  std::ofstream df(data_path, std::ios::binary | std::ios::trunc);
  if (!df) throw IoError("cannot write embedding data: " + data_path.string());
  df.write(reinterpret_cast<const char*>(data_.data()),
           static_cast<std::streamsize>(data_.size() * sizeof(float)));
  if (!df) throw IoError("write failed: " + data_path.string());
}

double dot_product(std::span<const float> a, std::span<const float> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sum += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return sum;
}

RankedList search_flat(const EmbeddingMatrix& matrix, std::span<const float> query, int k) {
  if (static_cast<int>(query.size()) != matrix.dim()) {
    throw EvalError("query dimension " + std::to_string(query.size()) +
                    " does not match index dimension " + std::to_string(matrix.dim()));
  }
  if (k < 1) throw ConfigError("k must be >= 1");

  std::vector<std::pair<double, NodeId>> scored;
  scored.reserve(matrix.count());
  for (std::size_t i = 0; i < matrix.count(); ++i) {
    scored.emplace_back(dot_product(matrix.row(i), query), matrix.id_at(i));
  }
  auto better = [](const std::pair<double, NodeId>& a, const std::pair<double, NodeId>& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  };
  const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(k), scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take),
                    scored.end(), better);
  scored.resize(take);

  RankedList result;
  result.entries.reserve(take);
  for (const auto& [score, id] : scored) result.entries.push_back({id, score, Origin::retrieved});
  result.k_retrieved = result.entries.size();
  return result;
}

std::vector<std::vector<float>> embed_external(std::span<const std::string> texts,
                                               const EmbedEndpoint& endpoint, int expected_dim) {
  std::vector<std::vector<float>> out;
  if (texts.empty()) return out;
  if (endpoint.url.empty()) throw ConfigError("embedding endpoint url is empty");

  auto [base, path] = split_url(endpoint.url, "/embed");
  httplib::Client client(base);
  client.set_connection_timeout(endpoint.timeout_sec, 0);
  client.set_read_timeout(endpoint.timeout_sec, 0);

  const std::size_t batch = endpoint.batch_size > 0 ? endpoint.batch_size : texts.size();
  for (std::size_t start = 0; start < texts.size(); start += batch) {
    const std::size_t end = std::min(texts.size(), start + batch);
    json body;
    body["texts"] = std::vector<std::string>(texts.begin() + start, texts.begin() + end);
    auto res = client.Post(path, body.dump(), "application/json");
    if (!res || res->status != 200) {
      throw EndpointError("embedding endpoint failed: " + endpoint.url +
                          (res ? " status " + std::to_string(res->status) : " (no response)"));
    }
    json parsed;
    try {
      parsed = json::parse(res->body);
    } catch (const json::exception& e) {
      throw EndpointError(std::string("embedding endpoint returned bad JSON: ") + e.what());
    }
    if (!parsed.contains("vectors") || !parsed["vectors"].is_array() ||
        parsed["vectors"].size() != end - start) {
      throw EndpointError("embedding endpoint returned wrong vector count");
    }
    for (const auto& v : parsed["vectors"]) {
      std::vector<float> vec = v.get<std::vector<float>>();
      if (expected_dim > 0 && static_cast<int>(vec.size()) != expected_dim) {
        throw EndpointError("embedding dimension " + std::to_string(vec.size()) +
                            " does not match index dimension " + std::to_string(expected_dim));
      }
      out.push_back(std::move(vec));
    }
  }
  return out;
}

}  // namespace skb
