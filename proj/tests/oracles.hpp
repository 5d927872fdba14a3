#pragma once

// Independent brute-force versions of the stats computations.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "frugal/rng.hpp"
#include "frugal/stats.hpp"

namespace oracles {

inline double brute_cliffs(const std::vector<double>& a, const std::vector<double>& b) {
  long gt = 0, lt = 0;
  for (double x : a)
    for (double y : b) {
      gt += x > y;
      lt += x < y;
    }
  return static_cast<double>(gt - lt) / static_cast<double>(a.size() * b.size());
}

inline double brute_mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Exhaustive E(delta) search over cut points of already-sorted treatments.
inline std::size_t brute_split(const std::vector<frugal::Treatment>& ts) {
  std::vector<double> all;
  for (const auto& t : ts) all.insert(all.end(), t.results.begin(), t.results.end());
  const double mu = brute_mean(all);
  double best = -1;
  std::size_t cut = 0;
  for (std::size_t i = 1; i < ts.size(); ++i) {
    std::vector<double> l, r;
    for (std::size_t j = 0; j < ts.size(); ++j) {
      auto& side = j < i ? l : r;
      side.insert(side.end(), ts[j].results.begin(), ts[j].results.end());
    }
    const double e = (static_cast<double>(l.size()) * std::abs(brute_mean(l) - mu) +
                      static_cast<double>(r.size()) * std::abs(brute_mean(r) - mu)) /
                     static_cast<double>(all.size());
    if (e > best + 1e-12) best = e, cut = i;
  }
  return cut;
}

// <= 8 treatments of <= 10 values on a coarse grid, so ties happen.
inline std::vector<frugal::Treatment> random_treatments(frugal::Rng& rng) {
  std::vector<frugal::Treatment> ts(1 + rng.below(8));
  for (std::size_t i = 0; i < ts.size(); ++i) {
    ts[i].name = "t" + std::to_string(i);
    ts[i].budget = i;
    const double centre = rng.uniform();
    const double width = 0.3 * rng.uniform();
    ts[i].results.resize(1 + rng.below(10));
    for (auto& v : ts[i].results)
      v = std::round(std::clamp(centre + width * (rng.uniform() - 0.5), 0.0, 1.0) * 20) / 20;
  }
  return ts;
}

inline std::vector<double> pooled(const std::vector<frugal::RankedTreatment>& r, std::size_t lo, std::size_t hi) {
  std::vector<double> out;
  for (std::size_t i = lo; i < hi; ++i)
    out.insert(out.end(), r[i].treatment.results.begin(), r[i].treatment.results.end());
  return out;
}

// Replays scott_knott's recursion over its output and returns the smallest
// |delta| among accepted splits (2 when nothing was split).
inline double smallest_accepted_effect(const std::vector<frugal::RankedTreatment>& ranked) {
  std::vector<frugal::Treatment> sorted;
  for (const auto& r : ranked) sorted.push_back(r.treatment);
  double smallest = 2;
  auto walk = [&](auto& self, std::size_t lo, std::size_t hi) -> void {
    if (ranked[lo].rank == ranked[hi - 1].rank) return;
    const std::size_t cut = lo + *frugal::best_split(std::span<const frugal::Treatment>(sorted.data() + lo, hi - lo));
    smallest = std::min(smallest, std::abs(brute_cliffs(pooled(ranked, lo, cut), pooled(ranked, cut, hi))));
    self(self, lo, cut);
    self(self, cut, hi);
  };
  walk(walk, 0, ranked.size());
  return smallest;
}

}  // namespace oracles
