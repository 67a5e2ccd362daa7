#include "skb/hnsw.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "skb/binio.hpp"
#include "skb/rng.hpp"

namespace skb {
namespace {

constexpr std::string_view kMagic = "SKBHNSW1";
constexpr std::uint32_t kVersion = 1;
constexpr int kMaxLevel = 48;

// (distance, node). Lower distance is better; ids break ties so every queue
// decision is reproducible.
using DistId = std::pair<double, std::uint32_t>;

struct MinFirst {
  bool operator()(const DistId& a, const DistId& b) const {
    if (a.first != b.first) return a.first > b.first;
    return a.second > b.second;
  }
};
struct MaxFirst {
  bool operator()(const DistId& a, const DistId& b) const {
    if (a.first != b.first) return a.first < b.first;
    return a.second < b.second;
  }
};

// Visited marks without clearing a bitmap per query.
struct VisitedTable {
  std::vector<std::uint32_t> stamp;
  std::uint32_t current = 0;

  void reset(std::size_t n) {
    if (stamp.size() < n) {
      stamp.assign(n, 0);
      current = 1;
      return;
    }
    if (++current == 0) {
      std::fill(stamp.begin(), stamp.end(), 0);
      current = 1;
    }
  }
  bool test_and_set(std::uint32_t i) {
    if (stamp[i] == current) return true;
    stamp[i] = current;
    return false;
  }
};

double distance(Metric metric, std::span<const float> a, std::span<const float> b) {
  if (metric == Metric::inner_product) return -dot_product(a, b);
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    sum += d * d;
  }
  return sum;
}

class Searcher {
 public:
  Searcher(const HnswIndex& index, const EmbeddingMatrix& matrix)
      : index_(index), matrix_(matrix) {}

  double dist_to(std::span<const float> q, std::uint32_t node) const {
    return distance(index_.metric(), q, matrix_.row(node));
  }

  void greedy_descend(std::span<const float> q, std::uint32_t& ep, double& ep_dist,
                      int level) const {
    bool improved = true;
    while (improved) {
      improved = false;
      for (std::uint32_t nb : index_.links(ep, level)) {
        const double d = dist_to(q, nb);
        if (d < ep_dist) {
          ep = nb;
          ep_dist = d;
          improved = true;
        }
      }
    }
  }

  // Classic beam search on one layer; returns candidates sorted by
  // (distance, id) ascending.
  std::vector<DistId> search_layer(std::span<const float> q, DistId entry, std::size_t ef,
                                   int level, VisitedTable& visited) const {
    visited.reset(index_.size());
    std::priority_queue<DistId, std::vector<DistId>, MinFirst> candidates;
    std::priority_queue<DistId, std::vector<DistId>, MaxFirst> results;
    candidates.push(entry);
    results.push(entry);
    visited.test_and_set(entry.second);

    while (!candidates.empty()) {
      DistId c = candidates.top();
      if (c.first > results.top().first && results.size() >= ef) break;
      candidates.pop();
      for (std::uint32_t nb : index_.links(c.second, level)) {
        if (visited.test_and_set(nb)) continue;
        const double d = dist_to(q, nb);
        if (results.size() < ef || d < results.top().first) {
          candidates.push({d, nb});
          results.push({d, nb});
          if (results.size() > ef) results.pop();
        }
      }
    }

    std::vector<DistId> out;
    out.reserve(results.size());
    while (!results.empty()) {
      out.push_back(results.top());
      results.pop();
    }
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  const HnswIndex& index_;
  const EmbeddingMatrix& matrix_;
};

}  // namespace

class HnswBuilder {
 public:
  HnswBuilder(HnswIndex& index, const EmbeddingMatrix& matrix)
      : index_(index), matrix_(matrix), searcher_(index, matrix) {}

  void insert(std::uint32_t node) {
    const int level = index_.levels_[node];
    index_.links_[node].assign(static_cast<std::size_t>(level) + 1, {});
    std::span<const float> q = matrix_.row(node);

    std::uint32_t ep = index_.entry_;
    double ep_dist = searcher_.dist_to(q, ep);
    for (int lc = index_.entry_level_; lc > level; --lc) {
      searcher_.greedy_descend(q, ep, ep_dist, lc);
    }

    for (int lc = std::min(level, index_.entry_level_); lc >= 0; --lc) {
      std::vector<DistId> found = searcher_.search_layer(
          q, {ep_dist, ep}, static_cast<std::size_t>(index_.params_.ef_construction), lc,
          visited_);
      std::vector<std::uint32_t> selected =
          select_neighbors(found, static_cast<std::size_t>(index_.params_.m));
      for (std::uint32_t s : selected) {
        index_.links_[node][lc].push_back(s);
        index_.links_[s][lc].push_back(node);
        if (index_.links_[s][lc].size() > index_.max_degree(lc)) shrink(s, lc);
      }
      ep = found.front().second;
      ep_dist = found.front().first;
    }

    if (level > index_.entry_level_) {
      index_.entry_ = node;
      index_.entry_level_ = level;
    }
  }

  // One-way edges either gain their reverse edge (capacity permitting) or are
  // dropped, leaving every layer symmetric and degree-capped.
  void repair_symmetry() {
    const std::size_t n = index_.size();
    for (int lc = 0; lc <= index_.entry_level_; ++lc) {
      const std::size_t cap = index_.max_degree(lc);
      std::vector<std::vector<std::uint32_t>> sorted(n);
      for (std::uint32_t u = 0; u < n; ++u) {
        if (index_.levels_[u] < lc) continue;
        sorted[u] = index_.links_[u][lc];
        std::sort(sorted[u].begin(), sorted[u].end());
      }
      auto linked = [&](std::uint32_t from, std::uint32_t to) {
        return std::binary_search(sorted[from].begin(), sorted[from].end(), to);
      };
      for (std::uint32_t u = 0; u < n; ++u) {
        if (index_.levels_[u] < lc) continue;
        for (std::uint32_t v : sorted[u]) {
          if (linked(v, u)) continue;
          auto& lv = index_.links_[v][lc];
          if (lv.size() < cap && std::find(lv.begin(), lv.end(), u) == lv.end()) {
            lv.push_back(u);  // add the missing reverse edge
          }
        }
      }
      // Refresh membership and drop edges that stayed one-way.
      for (std::uint32_t u = 0; u < n; ++u) {
        if (index_.levels_[u] < lc) continue;
        sorted[u] = index_.links_[u][lc];
        std::sort(sorted[u].begin(), sorted[u].end());
      }
      for (std::uint32_t u = 0; u < n; ++u) {
        if (index_.levels_[u] < lc) continue;
        auto& lu = index_.links_[u][lc];
        std::erase_if(lu, [&](std::uint32_t v) { return !linked(v, u); });
      }
    }
  }

 private:
  // Occlusion heuristic: a candidate is kept only if no already-kept neighbor
  // lies closer to it than the target does.
  std::vector<std::uint32_t> select_neighbors(const std::vector<DistId>& candidates,
                                              std::size_t max_count) const {
    std::vector<std::uint32_t> selected;
    for (const auto& [d, c] : candidates) {
      if (selected.size() >= max_count) break;
      bool keep = true;
      for (std::uint32_t s : selected) {
        if (distance(index_.metric_, matrix_.row(c), matrix_.row(s)) < d) {
          keep = false;
          break;
        }
      }
      if (keep) selected.push_back(c);
    }
    return selected;
  }

  void shrink(std::uint32_t node, int level) {
    auto& list = index_.links_[node][level];
    std::vector<DistId> candidates;
    candidates.reserve(list.size());
    std::span<const float> base = matrix_.row(node);
    for (std::uint32_t nb : list) {
      candidates.push_back({distance(index_.metric_, base, matrix_.row(nb)), nb});
    }
    std::sort(candidates.begin(), candidates.end());
    list = select_neighbors(candidates, index_.max_degree(level));
  }

  HnswIndex& index_;
  const EmbeddingMatrix& matrix_;
  Searcher searcher_;
  VisitedTable visited_;
};

double HnswParams::effective_lambda() const {
  if (level_lambda > 0.0) return level_lambda;
  return 1.0 / std::log(static_cast<double>(m));
}

void HnswParams::validate() const {
  if (m < 2) throw ConfigError("hnsw m must be >= 2");
  if (ef_construction < m) throw ConfigError("hnsw ef_construction must be >= m");
  if (ef_search < 1) throw ConfigError("hnsw ef_search must be >= 1");
}

HnswIndex build_hnsw(const EmbeddingMatrix& matrix, const HnswParams& params, std::uint64_t seed,
                     Metric metric) {
  params.validate();
  if (matrix.count() == 0) throw EvalError("cannot build an hnsw index over zero vectors");

  HnswIndex index;
  index.params_ = params;
  index.metric_ = metric;
  index.dim_ = matrix.dim();

  const std::size_t n = matrix.count();
  index.levels_.resize(n);
  index.links_.resize(n);
  Rng rng(seed);
  const double lambda = params.effective_lambda();
  for (std::size_t i = 0; i < n; ++i) {
    const double u = 1.0 - rng.next_double();  // (0, 1]
    index.levels_[i] = std::min(kMaxLevel, static_cast<int>(-std::log(u) * lambda));
  }

  index.entry_ = 0;
  index.entry_level_ = index.levels_[0];
  index.links_[0].assign(static_cast<std::size_t>(index.levels_[0]) + 1, {});

  HnswBuilder builder(index, matrix);
  for (std::uint32_t i = 1; i < n; ++i) builder.insert(i);
  builder.repair_symmetry();
  return index;
}

RankedList search_hnsw(const HnswIndex& index, const EmbeddingMatrix& matrix,
                       std::span<const float> query, int k,
                       std::optional<int> ef_search_override) {
  if (static_cast<int>(query.size()) != index.dim()) {
    throw EvalError("query dimension " + std::to_string(query.size()) +
                    " does not match index dimension " + std::to_string(index.dim()));
  }
  if (matrix.count() != index.size() || matrix.dim() != index.dim()) {
    throw EvalError("embedding matrix does not match the hnsw index it was built from");
  }
  if (k < 1) throw ConfigError("k must be >= 1");

  const int requested = ef_search_override.value_or(index.params().ef_search);
  if (requested < 1) throw ConfigError("ef_search must be >= 1");
  const std::size_t ef = static_cast<std::size_t>(std::max(requested, k));

  Searcher searcher(index, matrix);
  std::uint32_t ep = index.entry_point();
  double ep_dist = searcher.dist_to(query, ep);
  for (int lc = index.entry_level(); lc >= 1; --lc) {
    searcher.greedy_descend(query, ep, ep_dist, lc);
  }

  thread_local VisitedTable visited;
  std::vector<DistId> found = searcher.search_layer(query, {ep_dist, ep}, ef, 0, visited);
  if (found.size() > static_cast<std::size_t>(k)) found.resize(static_cast<std::size_t>(k));

  RankedList result;
  result.entries.reserve(found.size());
  for (const auto& [dist, node] : found) {
    // Scores rank descending: the dot product itself for inner_product,
    // negative squared distance for euclidean.
    result.entries.push_back({matrix.id_at(node), -dist, Origin::retrieved});
  }
  result.k_retrieved = result.entries.size();
  return result;
}

void HnswIndex::save(const std::filesystem::path& path) const {
  BinWriter w(path);
  w.bytes(kMagic);
  w.u32(kVersion);
  w.u8(static_cast<std::uint8_t>(metric_));
  w.u32(static_cast<std::uint32_t>(params_.m));
  w.u32(static_cast<std::uint32_t>(params_.ef_construction));
  w.u32(static_cast<std::uint32_t>(params_.ef_search));
  w.f64(params_.level_lambda);
  w.u32(static_cast<std::uint32_t>(dim_));
  w.u64(levels_.size());
  w.u32(entry_);
  w.u32(static_cast<std::uint32_t>(entry_level_));
  for (std::size_t i = 0; i < levels_.size(); ++i) {
    w.varint(static_cast<std::uint64_t>(levels_[i]));
    for (const auto& level_links : links_[i]) {
      w.varint(level_links.size());
      for (std::uint32_t nb : level_links) w.varint(nb);
    }
  }
  w.close();
}

HnswIndex HnswIndex::load(const std::filesystem::path& path) {
  BinReader r(path);
  r.expect_magic(kMagic);
  std::uint32_t version = r.u32();
  if (version != kVersion) {
    throw IoError("unsupported hnsw version " + std::to_string(version) + " in " + path.string());
  }

  HnswIndex index;
  index.metric_ = static_cast<Metric>(r.u8());
  index.params_.m = static_cast<int>(r.u32());
  index.params_.ef_construction = static_cast<int>(r.u32());
  index.params_.ef_search = static_cast<int>(r.u32());
  index.params_.level_lambda = r.f64();
  index.dim_ = static_cast<int>(r.u32());
  const std::uint64_t n = r.u64();
  index.entry_ = r.u32();
  index.entry_level_ = static_cast<int>(r.u32());
  index.levels_.resize(n);
  index.links_.resize(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    const int level = static_cast<int>(r.varint());
    index.levels_[i] = level;
    index.links_[i].resize(static_cast<std::size_t>(level) + 1);
    for (int lc = 0; lc <= level; ++lc) {
      const std::uint64_t count = r.varint();
      auto& list = index.links_[i][static_cast<std::size_t>(lc)];
      list.reserve(count);
      for (std::uint64_t j = 0; j < count; ++j) {
        list.push_back(static_cast<std::uint32_t>(r.varint()));
      }
    }
  }
  return index;
}

}  // namespace skb
