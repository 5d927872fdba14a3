#pragma once

// LITE: label a few seed rows, split the labeled rows into best/rest by
// d2h, score the unlabeled pool with a two-class Bayes model, label the
// top-scoring row, and repeat until the budget is spent.

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstddef>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "frugal/oracle.hpp"
#include "frugal/rng.hpp"
#include "frugal/table.hpp"

namespace frugal {

enum class Policy { certain, uncertain };

inline const char* to_string(Policy p) { return p == Policy::certain ? "certain" : "uncertain"; }

inline std::optional<Policy> parse_policy(std::string_view s) {
  if (s == "certain") return Policy::certain;
  if (s == "uncertain") return Policy::uncertain;
  return std::nullopt;
}

// Desirability of a row given its best/rest log-likelihoods B and R.
//   certain:   b/r, computed as B - R.
//   uncertain: (b+r)/|b-r| in probability space, both rescaled by
//              exp(-max(B,R)) first so neither overflows nor underflows.
inline double policy_score(Policy policy, double best, double rest) {
  if (policy == Policy::certain) return best - rest;
  const double top = std::max(best, rest);
  const double b = std::exp(best - top);
  const double r = std::exp(rest - top);
  return (b + r) / (std::abs(b - r) + 1e-32);
}

// round(n^best), kept within [1, n-1] so both classes are populated.
inline std::size_t best_count(std::size_t n, const Config& cfg) {
  if (n < 2) throw std::invalid_argument("best/rest split needs at least 2 labeled rows");
  const auto want = static_cast<std::size_t>(std::pow(static_cast<double>(n), cfg.best) + 0.5);
  return std::clamp<std::size_t>(want, 1, n - 1);
}

struct BestRest {
  Dataset best;
  Dataset rest;
};

// `labeled` must already be sorted ascending by d2h.
inline BestRest split_best_rest(const Dataset& labeled, const Config& cfg = {}) {
  const std::size_t n = best_count(labeled.size(), cfg);
  const auto& rows = labeled.rows();
  return {labeled.clone({rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n)}),
          labeled.clone({rows.begin() + static_cast<std::ptrdiff_t>(n), rows.end()})};
}

// Two-class best/rest Bayes model.
class Model {
 public:
  Model(Dataset best, Dataset rest, std::size_t nall, Policy policy, Config cfg = {})
      : best_(std::move(best)), rest_(std::move(rest)), nall_(nall), policy_(policy), cfg_(cfg) {}

  // Model over a d2h-sorted labeled set; nall is the labeled count.
  static Model from_sorted(const Dataset& labeled, Policy policy, const Config& cfg = {}) {
    auto [best, rest] = split_best_rest(labeled, cfg);
    return Model(std::move(best), std::move(rest), labeled.size(), policy, cfg);
  }

  Scores score(const Row& row) const {
    Scores s;
    s.best = best_.loglike(row, nall_, 2, cfg_);
    s.rest = rest_.loglike(row, nall_, 2, cfg_);
    s.score = policy_score(policy_, s.best, s.rest);
    return s;
  }

  const Dataset& best() const { return best_; }
  const Dataset& rest() const { return rest_; }
  std::size_t nall() const { return nall_; }
  Policy policy() const { return policy_; }
  const Config& config() const { return cfg_; }

 private:
  Dataset best_;
  Dataset rest_;
  std::size_t nall_;
  Policy policy_;
  Config cfg_;
};

struct ScoredRow {
  Row row;
  Scores scores;
};

// Sorts `pool` by descending policy score (ties keep pool order) and keeps
// the top floor(len * upper) rows, or `keep_at_least` rows when that is
// larger (capped at the pool size). The first row is the next to label.
inline std::vector<ScoredRow> acquire(const Model& model, std::vector<Row> pool, const Config& cfg,
                                      std::size_t keep_at_least = 0) {
  std::vector<Scores> scores;
  scores.reserve(pool.size());
  for (const auto& row : pool) scores.push_back(model.score(row));
  std::vector<std::size_t> idx(pool.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a].score > scores[b].score; });
  std::size_t keep = static_cast<std::size_t>(std::floor(static_cast<double>(pool.size()) * cfg.upper));
  keep = std::max(keep, std::min(pool.size(), keep_at_least));
  std::vector<ScoredRow> out;
  out.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) out.push_back({std::move(pool[idx[i]]), scores[idx[i]]});
  return out;
}

struct TrajectoryPoint {
  std::size_t labels = 0;
  double d2h = 0;

  friend bool operator==(const TrajectoryPoint&, const TrajectoryPoint&) = default;
};

// Best d2h seen after each labeling, measured in the frame of all of
// `labeled` (in labeling order). Non-increasing by construction.
inline std::vector<TrajectoryPoint> incumbent_trajectory(const Dataset& like,
                                                         const std::vector<Row>& labeled) {
  std::vector<TrajectoryPoint> out;
  if (labeled.empty()) return out;
  const Dataset frame = like.clone(labeled);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < labeled.size(); ++i) {
    best = std::min(best, frame.d2h(labeled[i]));
    out.push_back({i + 1, best});
  }
  return out;
}

struct LiteResult {
  std::optional<LabeledRow> best_row;  // d2h-minimal labeled row
  std::size_t labels_used = 0;
  std::optional<Model> model;          // best/rest model over the final labeled set
  std::vector<TrajectoryPoint> trajectory;
  std::vector<Row> labeled;            // in labeling order
  bool aborted = false;
  std::string error;
};

// Runs the acquisition loop on a shuffled copy of data's rows. `budget`
// counts every label, seeds included: start seeds, then budget - start
// acquisitions. Goal cells in `data` are never read; labels come from the
// oracle.
inline LiteResult lite_run(const Dataset& data, Oracle& oracle, std::size_t budget, Policy policy,
                           Rng& rng, const Config& cfg = {}) {
  cfg.validate();
  if (budget < cfg.start + 1)
    throw std::invalid_argument("lite: budget " + std::to_string(budget) + " is below start+1");
  if (data.size() < cfg.start + 3)
    throw std::invalid_argument("lite: need at least " + std::to_string(cfg.start + 3) + " rows");

  const std::size_t halt = budget - cfg.start;
  std::vector<Row> rows = data.rows();
  rng.shuffle(rows);

  LiteResult result;
  std::vector<Row>& done = result.labeled;
  std::vector<Row> todo(std::make_move_iterator(rows.begin() + static_cast<std::ptrdiff_t>(cfg.start)),
                        std::make_move_iterator(rows.end()));
  OracleKind source = oracle.kind();
  try {
    for (std::size_t i = 0; i < cfg.start; ++i) {
      LabelContext ctx{true, std::nullopt, done.size(), budget};
      done.push_back(oracle.label(rows[i], ctx).row);
    }
    Dataset sorted = data.clone(done, true);
    for (std::size_t i = 0; i < halt; ++i) {
      if (todo.size() < 3) break;
      const Model model = Model::from_sorted(sorted, policy, cfg);
      // Keep enough candidates for the remaining acquisitions.
      const std::size_t remaining = halt - i - 1;
      auto ranked = acquire(model, std::move(todo), cfg, remaining + 3);
      LabelContext ctx{false, ranked.front().scores, done.size(), budget};
      Row top = std::move(ranked.front().row);
      todo.clear();
      todo.reserve(ranked.size() - 1);
      for (std::size_t j = 1; j < ranked.size(); ++j) todo.push_back(std::move(ranked[j].row));
      done.push_back(oracle.label(top, ctx).row);
      sorted = data.clone(done, true);
    }
  } catch (const OracleError& e) {
    result.aborted = true;
    result.error = e.what();
  }

  result.labels_used = done.size();
  if (!done.empty()) {
    Dataset sorted = data.clone(done, true);
    result.best_row = LabeledRow{sorted.rows().front(), source};
    if (sorted.size() >= 2) result.model = Model::from_sorted(sorted, policy, cfg);
    result.trajectory = incumbent_trajectory(data, done);
  }
  return result;
}

}  // namespace frugal
