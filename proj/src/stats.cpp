#include "skb/stats.hpp"

#include <algorithm>
#include <cmath>

#include "skb/rng.hpp"

namespace skb {
namespace {

// Regularized lower incomplete gamma P(a, x), series expansion. Valid for
// x < a + 1.
double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int i = 0; i < 500; ++i) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Regularized upper incomplete gamma Q(a, x), Lentz continued fraction. Valid
// for x >= a + 1.
double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 500; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-15) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

double gamma_q(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw EvalError("invalid incomplete gamma arguments");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_cf(a, x);
}

}  // namespace

double chi_square_sf(double x, int dof) {
  if (dof < 1) throw EvalError("chi-square dof must be >= 1");
  if (x <= 0.0) return 1.0;
  return gamma_q(static_cast<double>(dof) / 2.0, x / 2.0);
}

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

void PairedSamples::validate() const {
  if (cols() < 2) throw EvalError("paired samples need at least 2 columns");
  const std::size_t n = rows();
  for (const auto& col : columns) {
    if (col.size() != n) throw EvalError("paired sample columns differ in length");
  }
  if (labels.size() != cols()) throw EvalError("paired sample labels do not match columns");
}

StatReport friedman_test(const PairedSamples& samples) {
  samples.validate();
  const std::size_t k = samples.cols();
  const std::size_t n = samples.rows();
  if (k < 3) throw EvalError("friedman test needs at least 3 columns");
  if (n < 5) throw EvalError("friedman test needs at least 5 rows");

  std::vector<double> rank_sums(k, 0.0);
  double tie_term = 0.0;  // sum over rows of sum(t^3 - t) per tie group
  std::vector<double> row(k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) row[j] = samples.columns[j][i];
    std::vector<double> ranks = average_ranks(row);
    for (std::size_t j = 0; j < k; ++j) rank_sums[j] += ranks[j];

    std::vector<double> sorted_row = row;
    std::sort(sorted_row.begin(), sorted_row.end());
    std::size_t a = 0;
    while (a < k) {
      std::size_t b = a;
      while (b + 1 < k && sorted_row[b + 1] == sorted_row[a]) ++b;
      const double t = static_cast<double>(b - a + 1);
      tie_term += t * t * t - t;
      a = b + 1;
    }
  }

  const double dn = static_cast<double>(n);
  const double dk = static_cast<double>(k);
  double ssq = 0.0;
  for (double r : rank_sums) ssq += r * r;
  double chi2 = 12.0 / (dn * dk * (dk + 1.0)) * ssq - 3.0 * dn * (dk + 1.0);
  const double correction = 1.0 - tie_term / (dn * dk * (dk * dk - 1.0));

  StatReport report;
  report.test = "friedman";
  report.n_used = n;
  if (correction <= 0.0) {
    // Every row fully tied: no rank variation at all.
    report.degenerate = true;
    report.statistic = 0.0;
    report.p_value = 1.0;
    report.effect_size = 0.0;
    return report;
  }
  chi2 /= correction;
  if (chi2 < 0.0) chi2 = 0.0;
  report.statistic = chi2;
  report.p_value = chi_square_sf(chi2, static_cast<int>(k) - 1);
  report.effect_size = chi2 / (dn * (dk - 1.0));
  return report;
}

StatReport wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw EvalError("wilcoxon samples differ in length");

  std::vector<double> diffs;
  diffs.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    if (d != 0.0) diffs.push_back(d);
  }

  StatReport report;
  report.test = "wilcoxon_signed_rank";
  report.n_used = diffs.size();
  if (diffs.empty()) {
    report.degenerate = true;
    report.statistic = 0.0;
    report.p_value = 1.0;
    return report;
  }

  const std::size_t n = diffs.size();
  std::vector<double> abs_diffs(n);
  for (std::size_t i = 0; i < n; ++i) abs_diffs[i] = std::fabs(diffs[i]);
  std::vector<double> ranks = average_ranks(abs_diffs);

  double w_plus = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (diffs[i] > 0.0) w_plus += ranks[i];
  }
  const double total = static_cast<double>(n) * (static_cast<double>(n) + 1.0) / 2.0;
  const double w_minus = total - w_plus;
  report.statistic = std::min(w_plus, w_minus);

  if (n <= 25) {
    // Exact null distribution of W+ over all sign assignments. Average ranks
    // are multiples of 1/2, so doubling them gives integer subset sums.
    std::vector<std::int64_t> r2(n);
    std::int64_t max_sum = 0;
    for (std::size_t i = 0; i < n; ++i) {
      r2[i] = std::llround(2.0 * ranks[i]);
      max_sum += r2[i];
    }
    std::vector<double> count(static_cast<std::size_t>(max_sum) + 1, 0.0);
    count[0] = 1.0;
    std::int64_t reached = 0;
    for (std::size_t i = 0; i < n; ++i) {
      reached += r2[i];
      for (std::int64_t s = reached; s >= r2[i]; --s) {
        count[static_cast<std::size_t>(s)] += count[static_cast<std::size_t>(s - r2[i])];
      }
    }
    const double denom = std::pow(2.0, static_cast<double>(n));
    const std::int64_t w2 = std::llround(2.0 * w_plus);
    double cdf = 0.0, sf = 0.0;
    for (std::int64_t s = 0; s <= max_sum; ++s) {
      if (s <= w2) cdf += count[static_cast<std::size_t>(s)];
      if (s >= w2) sf += count[static_cast<std::size_t>(s)];
    }
    report.p_value = std::min(1.0, 2.0 * std::min(cdf, sf) / denom);
    return report;
  }

  // Normal approximation with tie correction, no continuity correction.
  const double dn = static_cast<double>(n);
  double tie_term = 0.0;
  std::vector<double> sorted_abs = abs_diffs;
  std::sort(sorted_abs.begin(), sorted_abs.end());
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && sorted_abs[j + 1] == sorted_abs[i]) ++j;
    const double t = static_cast<double>(j - i + 1);
    tie_term += t * t * t - t;
    i = j + 1;
  }
  const double mu = dn * (dn + 1.0) / 4.0;
  const double var = dn * (dn + 1.0) * (2.0 * dn + 1.0) / 24.0 - tie_term / 48.0;
  if (var <= 0.0) {
    report.degenerate = true;
    report.p_value = 1.0;
    return report;
  }
  const double z = (w_plus - mu) / std::sqrt(var);
  report.p_value = std::min(1.0, 2.0 * normal_sf(std::fabs(z)));
  return report;
}

BonferroniDecision bonferroni(std::span<const double> p_values, double alpha) {
  if (!(alpha > 0.0) || alpha >= 1.0) throw ConfigError("alpha must be in (0, 1)");
  if (p_values.empty()) throw EvalError("bonferroni needs at least one p-value");
  BonferroniDecision decision;
  decision.alpha_corrected = alpha / static_cast<double>(p_values.size());
  decision.significant.reserve(p_values.size());
  for (double p : p_values) decision.significant.push_back(p < decision.alpha_corrected);
  return decision;
}

std::pair<double, double> bootstrap_ci(std::span<const double> values, double level,
                                       int resamples, std::uint64_t seed) {
  if (values.empty()) throw EvalError("bootstrap over an empty sample");
  if (!(level > 0.0) || level >= 1.0) throw ConfigError("confidence level must be in (0, 1)");
  if (resamples < 1) throw ConfigError("resamples must be >= 1");

  const std::size_t n = values.size();
  Rng rng(seed);
  std::vector<double> means;
  means.reserve(static_cast<std::size_t>(resamples));
  for (int r = 0; r < resamples; ++r) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      sum += values[static_cast<std::size_t>(rng.next_below(n))];
    }
    means.push_back(sum / static_cast<double>(n));
  }
  std::sort(means.begin(), means.end());

  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(means.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, means.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return means[lo] * (1.0 - frac) + means[hi] * frac;
  };
  const double tail = (1.0 - level) / 2.0;
  return {quantile(tail), quantile(1.0 - tail)};
}

}  // namespace skb
