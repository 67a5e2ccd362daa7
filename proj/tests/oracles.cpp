#include "oracles.hpp"

#include <algorithm>
#include <cmath>

namespace skb::test {
namespace {

bool contains(const std::vector<NodeId>& v, NodeId id) {
  for (NodeId x : v) {
    if (x == id) return true;
  }
  return false;
}

double adaptive_simpson(double (*f)(double, double), double param, double a, double b, double eps,
                        int depth) {
  const double m = (a + b) / 2.0;
  const double fa = f(a, param), fb = f(b, param), fm = f(m, param);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  const double lm = (a + m) / 2.0, rm = (m + b) / 2.0;
  const double flm = f(lm, param), frm = f(rm, param);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::fabs(left + right - whole) < 15.0 * eps) {
    return left + right + (left + right - whole) / 15.0;
  }
  return adaptive_simpson(f, param, a, m, eps / 2.0, depth - 1) +
         adaptive_simpson(f, param, m, b, eps / 2.0, depth - 1);
}

double chi2_pdf(double x, double dof) {
  if (x <= 0.0) return 0.0;
  const double half = dof / 2.0;
  return std::exp((half - 1.0) * std::log(x) - x / 2.0 - half * std::log(2.0) -
                  std::lgamma(half));
}

// dof=1 density is singular at 0; substituting x = t^2 gives a smooth
// integrand sqrt(2/pi) * exp(-t^2/2) over [0, sqrt(x)].
double chi2_dof1_cdf_integrand(double t, double) {
  return std::sqrt(2.0 / 3.14159265358979323846) * std::exp(-t * t / 2.0);
}

double normal_pdf(double x, double) {
  return std::exp(-x * x / 2.0) / std::sqrt(2.0 * 3.14159265358979323846);
}

// Rank by counting smaller / equal values; no sorting shared with the library.
std::vector<double> counting_ranks(const std::vector<double>& values) {
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::size_t smaller = 0, equal = 0;
    for (std::size_t j = 0; j < values.size(); ++j) {
      if (values[j] < values[i]) ++smaller;
      if (j != i && values[j] == values[i]) ++equal;
    }
    ranks[i] = 1.0 + static_cast<double>(smaller) + static_cast<double>(equal) / 2.0;
  }
  return ranks;
}

}  // namespace

double oracle_hit_at_k(const std::vector<NodeId>& predicted, const std::vector<NodeId>& answers,
                       int k) {
  for (std::size_t i = 0; i < predicted.size() && i < static_cast<std::size_t>(k); ++i) {
    if (contains(answers, predicted[i])) return 1.0;
  }
  return 0.0;
}

double oracle_recall_at_k(const std::vector<NodeId>& predicted,
                          const std::vector<NodeId>& answers, int k) {
  std::size_t found = 0;
  for (NodeId answer : answers) {
    for (std::size_t i = 0; i < predicted.size() && i < static_cast<std::size_t>(k); ++i) {
      if (predicted[i] == answer) {
        ++found;
        break;
      }
    }
  }
  return static_cast<double>(found) / static_cast<double>(answers.size());
}

double oracle_reciprocal_rank(const std::vector<NodeId>& predicted,
                              const std::vector<NodeId>& answers) {
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (contains(answers, predicted[i])) return 1.0 / static_cast<double>(i + 1);
  }
  return 0.0;
}

double oracle_bm25_score(const std::vector<std::vector<std::string>>& corpus_tokens,
                         std::size_t doc_index, const std::vector<std::string>& query_tokens,
                         double k1, double b) {
  const std::size_t n_docs = corpus_tokens.size();
  double total_len = 0.0;
  for (const auto& doc : corpus_tokens) total_len += static_cast<double>(doc.size());
  const double avgdl = total_len / static_cast<double>(n_docs);
  const double dl = static_cast<double>(corpus_tokens[doc_index].size());

  double score = 0.0;
  for (const auto& term : query_tokens) {
    std::size_t df = 0;
    for (const auto& doc : corpus_tokens) {
      if (std::find(doc.begin(), doc.end(), term) != doc.end()) ++df;
    }
    std::size_t tf = 0;
    for (const auto& token : corpus_tokens[doc_index]) {
      if (token == term) ++tf;
    }
    if (tf == 0) continue;
    const double idf = std::log(1.0 + (static_cast<double>(n_docs) - static_cast<double>(df) +
                                       0.5) /
                                          (static_cast<double>(df) + 0.5));
    score += idf * static_cast<double>(tf) * (k1 + 1.0) /
             (static_cast<double>(tf) + k1 * (1.0 - b + b * dl / avgdl));
  }
  return score;
}

std::vector<std::pair<double, NodeId>> oracle_full_sort(const EmbeddingMatrix& matrix,
                                                        std::span<const float> query) {
  std::vector<std::pair<double, NodeId>> scored;
  scored.reserve(matrix.count());
  for (std::size_t i = 0; i < matrix.count(); ++i) {
    auto row = matrix.row(i);
    double dot = 0.0;
    for (std::size_t d = 0; d < row.size(); ++d) {
      dot += static_cast<double>(row[d]) * static_cast<double>(query[d]);
    }
    scored.emplace_back(dot, matrix.id_at(i));
  }
  std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  return scored;
}

double oracle_chi_square_sf(double x, int dof) {
  if (x <= 0.0) return 1.0;
  // Integrate the density from 0 to x and subtract; the tail beyond is implied.
  const double cdf =
      dof == 1
          ? adaptive_simpson(chi2_dof1_cdf_integrand, 0.0, 0.0, std::sqrt(x), 1e-13, 40)
          : adaptive_simpson(chi2_pdf, static_cast<double>(dof), 0.0, x, 1e-13, 40);
  return std::max(0.0, 1.0 - cdf);
}

double oracle_normal_sf(double z) {
  if (z < 0.0) return 1.0 - oracle_normal_sf(-z);
  const double half_to_z = adaptive_simpson(normal_pdf, 0.0, 0.0, z, 1e-14, 40);
  return std::max(0.0, 0.5 - half_to_z);
}

OracleFriedman oracle_friedman(const std::vector<std::vector<double>>& columns) {
  const std::size_t k = columns.size();
  const std::size_t n = columns.front().size();
  std::vector<double> rank_sums(k, 0.0);
  double tie_correction_sum = 0.0;
  for (std::size_t row = 0; row < n; ++row) {
    std::vector<double> values(k);
    for (std::size_t col = 0; col < k; ++col) values[col] = columns[col][row];
    std::vector<double> ranks = counting_ranks(values);
    for (std::size_t col = 0; col < k; ++col) rank_sums[col] += ranks[col];
    // tie groups by counting equal values
    std::vector<bool> seen(k, false);
    for (std::size_t i = 0; i < k; ++i) {
      if (seen[i]) continue;
      double t = 0.0;
      for (std::size_t j = i; j < k; ++j) {
        if (values[j] == values[i]) {
          t += 1.0;
          seen[j] = true;
        }
      }
      tie_correction_sum += t * t * t - t;
    }
  }

  const double dn = static_cast<double>(n), dk = static_cast<double>(k);
  double ssq = 0.0;
  for (double r : rank_sums) ssq += r * r;
  double chi2 = 12.0 / (dn * dk * (dk + 1.0)) * ssq - 3.0 * dn * (dk + 1.0);
  const double c = 1.0 - tie_correction_sum / (dn * dk * (dk * dk - 1.0));

  OracleFriedman out;
  if (c <= 0.0) {
    out.degenerate = true;
    return out;
  }
  chi2 = std::max(0.0, chi2 / c);
  out.chi2 = chi2;
  out.p = oracle_chi_square_sf(chi2, static_cast<int>(k) - 1);
  out.kendalls_w = chi2 / (dn * (dk - 1.0));
  return out;
}

OracleWilcoxon oracle_wilcoxon(std::span<const double> a, std::span<const double> b) {
  std::vector<double> diffs;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) diffs.push_back(a[i] - b[i]);
  }
  OracleWilcoxon out;
  out.n_used = diffs.size();
  if (diffs.empty()) {
    out.degenerate = true;
    return out;
  }

  const std::size_t n = diffs.size();
  std::vector<double> abs_diffs(n);
  for (std::size_t i = 0; i < n; ++i) abs_diffs[i] = std::fabs(diffs[i]);
  std::vector<double> ranks = counting_ranks(abs_diffs);

  double w_plus = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (diffs[i] > 0.0) w_plus += ranks[i];
  }
  const double total = static_cast<double>(n) * (static_cast<double>(n) + 1.0) / 2.0;
  out.statistic = std::min(w_plus, total - w_plus);

  if (n <= 25) {
    // Every sign assignment, brute force.
    std::uint64_t le = 0, ge = 0;
    const std::uint64_t limit = 1ULL << n;
    for (std::uint64_t mask = 0; mask < limit; ++mask) {
      double w = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (mask & (1ULL << i)) w += ranks[i];
      }
      if (w <= w_plus + 1e-12) ++le;
      if (w >= w_plus - 1e-12) ++ge;
    }
    const double denom = static_cast<double>(limit);
    out.p = std::min(1.0, 2.0 * std::min(static_cast<double>(le), static_cast<double>(ge)) /
                              denom);
    return out;
  }

  const double dn = static_cast<double>(n);
  double tie_sum = 0.0;
  std::vector<bool> seen(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    if (seen[i]) continue;
    double t = 0.0;
    for (std::size_t j = i; j < n; ++j) {
      if (abs_diffs[j] == abs_diffs[i]) {
        t += 1.0;
        seen[j] = true;
      }
    }
    tie_sum += t * t * t - t;
  }
  const double mu = dn * (dn + 1.0) / 4.0;
  const double var = dn * (dn + 1.0) * (2.0 * dn + 1.0) / 24.0 - tie_sum / 48.0;
  if (var <= 0.0) {
    out.degenerate = true;
    return out;
  }
  const double z = (w_plus - mu) / std::sqrt(var);
  out.p = std::min(1.0, 2.0 * oracle_normal_sf(std::fabs(z)));
  return out;
}

}  // namespace skb::test
