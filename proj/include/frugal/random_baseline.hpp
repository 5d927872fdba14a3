#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "frugal/oracle.hpp"
#include "frugal/rng.hpp"
#include "frugal/table.hpp"

namespace frugal {

struct RandomResult {
  LabeledRow best;
  std::size_t labels_used = 0;
};

// random(N): label `budget` distinct rows chosen uniformly, return the one
// with the lowest d2h among them.
inline RandomResult random_n(const Dataset& data, Oracle& oracle, std::size_t budget, Rng& rng) {
  if (budget < 1) throw std::invalid_argument("random: budget must be >= 1");
  if (budget > data.size())
    throw std::invalid_argument("random: budget " + std::to_string(budget) + " exceeds " +
                                std::to_string(data.size()) + " rows");
  std::vector<Row> labeled;
  labeled.reserve(budget);
  for (std::size_t i : rng.sample_indices(data.size(), budget))
    labeled.push_back(oracle.label(data.rows()[i]).row);
  const Dataset sorted = data.clone(std::move(labeled), true);
  return {LabeledRow{sorted.rows().front(), oracle.kind()}, sorted.size()};
}

// Trials needed to see an event of probability p with confidence C:
// log(1-C)/log(1-p), rounded to the nearest count.
inline std::size_t hamlet_n(double confidence, double p) {
  if (!(confidence > 0 && confidence < 1) || !(p > 0 && p < 1))
    throw std::invalid_argument("hamlet_n: confidence and p must be in (0,1)");
  const double n = std::log(1 - confidence) / std::log(1 - p);
  return static_cast<std::size_t>(std::max(1.0, std::round(n)));
}

}  // namespace frugal
