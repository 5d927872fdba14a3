#pragma once

// Ranking of treatment result distributions: Scott-Knott recursive
// partitioning, with each cut gated by Cliff's delta effect size.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace frugal {

// |delta| below this is a "small" (negligible) effect.
inline constexpr double kSmallEffect = 0.147;

struct Percentiles {
  double p25 = 0;
  double p50 = 0;
  double p75 = 0;
};

// Nearest-rank percentile of already-sorted values.
inline double nearest_rank(std::span<const double> sorted, double pct) {
  if (sorted.empty()) throw std::invalid_argument("percentile of empty list");
  const double rank = std::ceil(pct / 100.0 * static_cast<double>(sorted.size()));
  const auto i = static_cast<std::size_t>(std::max(1.0, rank)) - 1;
  return sorted[std::min(i, sorted.size() - 1)];
}

inline Percentiles percentiles(std::span<const double> values) {
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  return {nearest_rank(v, 25), nearest_rank(v, 50), nearest_rank(v, 75)};
}

inline double mean(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("mean of empty list");
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

// (#(x>y) - #(x<y)) / (|a|*|b|) over all pairs. Counts come from binary
// search on a sorted copy of b, so this is exact in O((n+m) log m).
inline double cliffs_delta(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("cliffs_delta: empty list");
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sb.begin(), sb.end());
  long long gt = 0, lt = 0;
  for (double x : a) {
    lt += sb.end() - std::upper_bound(sb.begin(), sb.end(), x);
    gt += std::lower_bound(sb.begin(), sb.end(), x) - sb.begin();
  }
  return static_cast<double>(gt - lt) / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

inline bool different(double delta) { return std::abs(delta) >= kSmallEffect; }

struct Treatment {
  std::string name;
  std::size_t budget = 0;  // labels used
  std::vector<double> results;
};

struct RankedTreatment {
  Treatment treatment;
  std::size_t rank = 0;
  double mean = 0;
  double median = 0;
  double p25 = 0;
  double p75 = 0;
  double spread() const { return p75 - p25; }
};

namespace detail {
inline std::vector<double> pooled(std::span<const Treatment> ts) {
  std::vector<double> out;
  for (const auto& t : ts) out.insert(out.end(), t.results.begin(), t.results.end());
  return out;
}
}  // namespace detail

// Cut index in [1, ts.size()) maximizing
//   E = (n1*|mean1 - mean| + n2*|mean2 - mean|) / n
// over pooled values; first maximum wins (E values within 1e-12 count as
// equal, so rounding noise cannot move the cut). nullopt for fewer than 2.
inline std::optional<std::size_t> best_split(std::span<const Treatment> ts) {
  if (ts.size() < 2) return std::nullopt;
  std::vector<double> sums(ts.size()), counts(ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) {
    sums[i] = std::accumulate(ts[i].results.begin(), ts[i].results.end(), 0.0);
    counts[i] = static_cast<double>(ts[i].results.size());
  }
  const double total = std::accumulate(sums.begin(), sums.end(), 0.0);
  const double n = std::accumulate(counts.begin(), counts.end(), 0.0);
  const double mu = total / n;
  double left_sum = 0, left_n = 0, best = -1;
  std::size_t cut = 1;
  for (std::size_t i = 1; i < ts.size(); ++i) {
    left_sum += sums[i - 1];
    left_n += counts[i - 1];
    const double right_n = n - left_n;
    const double e = (left_n * std::abs(left_sum / left_n - mu) +
                      right_n * std::abs((total - left_sum) / right_n - mu)) / n;
    if (e > best + 1e-12) {
      best = e;
      cut = i;
    }
  }
  return cut;
}

// Sort treatments by mean (median breaks ties), then split recursively
// wherever the best cut separates two sides that Cliff's delta calls
// different. Ranks count up from 0 in sorted order.
inline std::vector<RankedTreatment> scott_knott(std::vector<Treatment> treatments) {
  if (treatments.empty()) throw std::invalid_argument("scott_knott: no treatments");
  std::vector<RankedTreatment> ranked;
  for (auto& t : treatments) {
    if (t.results.empty()) throw std::invalid_argument("scott_knott: treatment '" + t.name + "' has no results");
    const Percentiles p = percentiles(t.results);
    const double mu = mean(t.results);
    ranked.push_back({std::move(t), 0, mu, p.p50, p.p25, p.p75});
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](const RankedTreatment& a, const RankedTreatment& b) {
    return a.mean != b.mean ? a.mean < b.mean : a.median < b.median;
  });
  std::vector<Treatment> sorted;
  for (const auto& r : ranked) sorted.push_back(r.treatment);

  std::size_t next_rank = 0;
  auto recurse = [&](auto& self, std::size_t lo, std::size_t hi) -> void {
    std::span<const Treatment> part(sorted.data() + lo, hi - lo);
    if (auto cut = best_split(part)) {
      const auto left = detail::pooled(part.subspan(0, *cut));
      const auto right = detail::pooled(part.subspan(*cut));
      if (different(cliffs_delta(left, right))) {
        self(self, lo, lo + *cut);
        self(self, lo + *cut, hi);
        return;
      }
    }
    for (std::size_t i = lo; i < hi; ++i) ranked[i].rank = next_rank;
    ++next_rank;
  };
  recurse(recurse, 0, sorted.size());
  return ranked;
}

}  // namespace frugal
