#pragma once

// SWAY: recursive FASTMAP-style bi-clustering on the independent columns.
// Each level finds two distant rows, labels them, keeps the half nearer the
// better one and recurses, reusing the previous level's winner.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "frugal/oracle.hpp"
#include "frugal/rng.hpp"
#include "frugal/table.hpp"

namespace frugal {

struct SwayResult {
  std::vector<Row> best_leaf;    // surviving rows
  std::vector<Row> rest;         // rows pruned along the way
  std::size_t labels_used = 0;
  std::size_t levels = 0;        // number of halvings
  std::optional<Row> last_best;  // final "left" endpoint, labeled
};

struct HalfSplit {
  std::vector<Row> lefts;
  std::vector<Row> rights;
  Row left;
  Row right;
};

class SwaySearch {
 public:
  SwaySearch(const Dataset& data, Oracle& oracle, Rng& rng, const Config& cfg = {})
      : data_(data), oracle_(oracle), rng_(rng), cfg_(cfg) {
    cfg_.validate();
  }

  // Two distant rows of `rows`. "Distant" is the far-quantile of distances,
  // which skips outliers. With `sortp`, both are labeled and ordered so the
  // first has the lower d2h.
  std::pair<Row, Row> faraway(std::span<const Row> rows, bool sortp,
                              const std::optional<Row>& last = std::nullopt) {
    if (rows.size() < 2) throw std::invalid_argument("faraway: need at least 2 rows");
    const std::size_t n = far_index(rows.size());
    Row left = last ? *last : data_.near(rows[rng_.below(rows.size())], rows)[n];
    Row right = data_.near(left, rows)[n];
    if (sortp) {
      left = label(left);
      right = label(right);
      const Dataset frame = data_.clone(labeled_);
      if (frame.d2h(right) < frame.d2h(left)) std::swap(left, right);
    }
    return {std::move(left), std::move(right)};
  }

  std::size_t far_index(std::size_t len) const {
    const auto n = static_cast<std::size_t>(std::floor(static_cast<double>(len) * cfg_.far));
    return std::min(n, len - 1);
  }

  // Splits `rows` at the median of their projection onto the line between
  // two distant endpoints found in a random sample of at most `half` rows.
  HalfSplit half(std::span<const Row> rows, bool sortp, const std::optional<Row>& last = std::nullopt) {
    if (rows.size() < 4) throw std::invalid_argument("half: need at least 4 rows");
    const std::size_t k = std::min(cfg_.half, rows.size());
    std::vector<Row> sample;
    sample.reserve(k);
    if (rows.size() <= cfg_.half) {
      for (std::size_t i : rng_.sample_indices(rows.size(), k)) sample.push_back(rows[i]);
    } else {
      for (std::size_t i = 0; i < k; ++i) sample.push_back(rows[rng_.below(rows.size())]);
    }
    auto [left, right] = faraway(sample, sortp, last);

    const std::size_t cut = (rows.size() + 1) / 2;  // indices n < len/2 go left
    const double c = data_.dist(left, right);
    std::vector<std::size_t> idx(rows.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    if (c >= 1e-12) {
      std::vector<double> x(rows.size());
      for (std::size_t i = 0; i < rows.size(); ++i) x[i] = project(rows[i], left, right, c);
      std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    }
    HalfSplit out{{}, {}, std::move(left), std::move(right)};
    out.lefts.reserve(cut);
    out.rights.reserve(rows.size() - cut);
    for (std::size_t i = 0; i < idx.size(); ++i) (i < cut ? out.lefts : out.rights).push_back(rows[idx[i]]);
    return out;
  }

  // Cosine-rule position of `row` along the left..right line of length c.
  double project(const Row& row, const Row& left, const Row& right, double c) const {
    const double a = data_.dist(row, left);
    const double b = data_.dist(row, right);
    return (a * a + c * c - b * b) / (2 * c);
  }

  // Halves until at most 2*N^stop rows remain, N fixed at the start.
  SwayResult run(bool sortp = true) {
    const std::size_t before = oracle_.label_count();
    std::vector<Row> rows = data_.rows();
    const double stop = 2 * std::pow(static_cast<double>(rows.size()), cfg_.stop);
    SwayResult out;
    while (static_cast<double>(rows.size()) > stop && rows.size() >= 4) {
      HalfSplit h = half(rows, sortp, out.last_best);
      for (auto& r : h.rights) out.rest.push_back(std::move(r));
      rows = std::move(h.lefts);
      if (sortp) out.last_best = std::move(h.left);
      ++out.levels;
    }
    out.best_leaf = std::move(rows);
    out.labels_used = oracle_.label_count() - before;
    return out;
  }

  const std::vector<Row>& labeled() const { return labeled_; }

 private:
  Row label(const Row& row) {
    Row out = oracle_.label(row).row;
    const bool known = std::any_of(labeled_.begin(), labeled_.end(),
                                   [&](const Row& r) { return r.id == out.id; });
    if (!known) labeled_.push_back(out);
    return out;
  }

  const Dataset& data_;
  Oracle& oracle_;
  Rng& rng_;
  Config cfg_;
  std::vector<Row> labeled_;
};

inline SwayResult sway_run(const Dataset& data, Oracle& oracle, Rng& rng, const Config& cfg = {}) {
  return SwaySearch(data, oracle, rng, cfg).run();
}

// The run's final winner. A run that never split has labeled nothing, so
// one random leaf row is labeled instead.
inline LabeledRow sway_best(const SwayResult& result, Oracle& oracle, Rng& rng) {
  if (result.last_best) return {*result.last_best, oracle.kind()};
  if (result.best_leaf.empty()) throw std::invalid_argument("sway_best: empty leaf");
  return oracle.label(result.best_leaf[rng.below(result.best_leaf.size())]);
}

}  // namespace frugal
