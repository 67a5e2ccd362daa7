#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "skb/common.hpp"

namespace skb {

// Per-query metric values, one column per pipeline. No missing cells.
struct PairedSamples {
  std::vector<std::string> labels;
  std::vector<std::vector<double>> columns;  // columns[pipeline][query]

  std::size_t cols() const { return columns.size(); }
  std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
  void validate() const;
};

struct StatReport {
  std::string test;
  double statistic = 0.0;
  double p_value = 1.0;
  std::optional<double> effect_size;  // Kendall's W for Friedman
  std::size_t n_used = 0;             // rows (Friedman) or non-zero diffs (Wilcoxon)
  bool degenerate = false;            // no rank variation / all differences zero
};

// Rank-based Friedman chi-square with average-rank tie correction; p from the
// chi-square distribution with (cols-1) dof; effect size is Kendall's W =
// chi2 / (n * (cols-1)). Needs >= 3 columns and >= 5 rows.
StatReport friedman_test(const PairedSamples& samples);

// Two-sided Wilcoxon signed-rank. Zero differences are dropped; ties get
// average ranks. Exact distribution (over sign assignments) for n <= 25, the
// tie-corrected normal approximation above. Reports min(W+, W-).
StatReport wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b);

struct BonferroniDecision {
  double alpha_corrected = 0.0;
  std::vector<bool> significant;  // p < alpha / m
};

BonferroniDecision bonferroni(std::span<const double> p_values, double alpha);

// Percentile bootstrap interval for the mean; deterministic given seed.
std::pair<double, double> bootstrap_ci(std::span<const double> values, double level = 0.95,
                                       int resamples = 10000, std::uint64_t seed = 0);

// Survival functions backing the tests; exposed so tests can probe them.
double chi_square_sf(double x, int dof);
double normal_sf(double z);

// Average ranks, ascending; ties share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> values);

}  // namespace skb
