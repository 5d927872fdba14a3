// One PASS/FAIL line per acceptance criterion. Exit status is the number of
// failures. Data comes from $FRUGAL_DATA_DIR (default: the repo's data/).

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "frugal/harness.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace frugal;
namespace fs = std::filesystem;

namespace {

// Tolerances.
constexpr double kBaselineMedian = 0.51, kBaselineMedianTol = 0.02;
constexpr double kBaselineIqr = 0.20, kBaselineIqrTol = 0.03;
constexpr double kLiteMedianMax = 0.15;
constexpr double kRandomMedianMax = 0.15;
constexpr double kD2hExample = 0.26, kD2hExampleTol = 0.005;
constexpr std::size_t kHamlet = 49;
constexpr std::size_t kSwayLabelsMax10k = 10;
constexpr double kTrendRank0Share = 0.5;
constexpr double kTrendRank0LabelsMax = 46;
constexpr std::size_t kTrendMinDatasets = 10;
constexpr std::uint64_t kMasterSeed = 1;

constexpr double kBaselineSeconds = 1, kLiteSeconds = 10, kRandomSeconds = 10, kTrendSeconds = 600;

int failures = 0;

void report(const std::string& name, bool ok, const std::string& detail) {
  std::cout << (ok ? "PASS" : "FAIL") << "  " << name << "  " << detail << std::endl;
  failures += !ok;
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<double> d2h_of(const std::vector<RunRecord>& recs, const std::string& algo, std::size_t budget) {
  std::vector<double> out;
  for (const auto& r : recs)
    if (r.ok() && r.algorithm == algo && r.budget == budget) out.push_back(r.best_d2h);
  return out;
}

ExperimentPlan pom3a_plan(std::vector<Algorithm> algos, std::vector<std::size_t> budgets) {
  ExperimentPlan plan;
  plan.datasets = {testing_support::data_file("pom3a")};
  plan.algorithms = std::move(algos);
  plan.budgets = std::move(budgets);
  plan.repeats = 20;
  plan.seed = kMasterSeed;
  return plan;
}

void baseline_fidelity() {
  const auto t0 = std::chrono::steady_clock::now();
  const Dataset d = load_csv(testing_support::data_file("pom3a"));
  std::vector<double> v;
  for (const auto& r : baseline_records(d, "pom3a", kMasterSeed)) v.push_back(r.best_d2h);
  const Percentiles p = percentiles(v);
  const double secs = seconds_since(t0);
  const bool ok = d.size() == 500 && std::abs(p.p50 - kBaselineMedian) <= kBaselineMedianTol &&
                  std::abs((p.p75 - p.p25) - kBaselineIqr) <= kBaselineIqrTol && secs < kBaselineSeconds;
  report("baseline-fidelity", ok,
         fmt("rows=%.0f median=%.3f iqr=%.3f time=%.2fs", static_cast<double>(d.size()), p.p50, p.p75 - p.p25, secs) +
             " (want median 0.51+-0.02, iqr 0.20+-0.03)");
}

void lite_effectiveness() {
  const auto t0 = std::chrono::steady_clock::now();
  auto out = run_experiment(pom3a_plan({Algorithm::lite_certain}, {30}));
  const double secs = seconds_since(t0);
  const auto v = d2h_of(out.records, "lite-certain", 30);
  const double med = v.empty() ? 1 : percentiles(v).p50;
  report("lite-certain-effectiveness", v.size() == 20 && med <= kLiteMedianMax && secs < kLiteSeconds,
         fmt("pom3a certain&30 median=%.3f over %.0f repeats time=%.2fs (want <= 0.15)", med,
             static_cast<double>(v.size()), secs));
}

void random_bound() {
  const auto t0 = std::chrono::steady_clock::now();
  auto out = run_experiment(pom3a_plan({Algorithm::random}, {10, 50}));
  const double secs = seconds_since(t0);
  const auto r10 = d2h_of(out.records, "random", 10), r50 = d2h_of(out.records, "random", 50);
  const double med50 = percentiles(r50).p50;
  const double delta = cliffs_delta(r10, r50);  // > 0: random(10) has larger (worse) d2h
  const bool worse = delta >= kSmallEffect;
  report("random-baseline-bound", med50 <= kRandomMedianMax && worse && secs < kRandomSeconds,
         fmt("random&50 median=%.3f, cliffs(random10, random50)=%.3f time=%.2fs (want <= 0.15 and >= 0.147)", med50,
             delta, secs));
}

void label_accounting() {
  const Dataset pom = load_csv(testing_support::data_file("pom3a"));
  const Dataset pom_blind = blinded(pom);
  const std::vector<std::size_t> budgets{10, 20, 30, 40, 50, 60, 80};
  std::size_t runs = 0, bad = 0;
  std::string first_bad;
  auto miss = [&](const std::string& what) {
    if (!bad++) first_bad = what;
  };
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    for (std::size_t b : budgets) {
      for (Policy p : {Policy::certain, Policy::uncertain}) {
        CachedOracle o(pom);
        Rng rng(seed);
        LiteResult r = lite_run(pom_blind, o, b, p, rng);
        ++runs;
        if (o.label_count() != b || r.labels_used != b) miss("lite budget " + std::to_string(b));
      }
      CachedOracle o(pom);
      Rng rng(seed);
      random_n(pom_blind, o, b, rng);
      ++runs;
      if (o.label_count() != b) miss("random budget " + std::to_string(b));
    }
    CachedOracle o(pom);
    Rng rng(seed);
    SwayResult s = SwaySearch(pom_blind, o, rng).run();
    sway_best(s, o, rng);
    ++runs;
    if (o.label_count() > 2 + s.levels) miss("sway on pom3a");
  }

  // Sway on every 10,000-row dataset.
  std::size_t max10k = 0;
  for (const char* name : {"flight", "ground", "osp", "osp2"}) {
    const Dataset d = load_csv(testing_support::data_file(name));
    if (d.size() != 10000) {
      miss(std::string(name) + " is not 10,000 rows");
      continue;
    }
    const Dataset blind = blinded(d);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      CachedOracle o(d);
      Rng rng(seed);
      SwayResult s = SwaySearch(blind, o, rng).run();
      sway_best(s, o, rng);
      ++runs;
      max10k = std::max(max10k, o.label_count());
      if (o.label_count() > 2 + s.levels || o.label_count() > kSwayLabelsMax10k) miss(std::string("sway on ") + name);
    }
  }
  report("label-accounting", bad == 0,
         fmt("%.0f runs, %.0f violations, sway max labels on 10k rows=%.0f", static_cast<double>(runs),
             static_cast<double>(bad), static_cast<double>(max10k)) +
             (bad ? " first: " + first_bad : ""));
}

void scott_knott_equivalence() {
  Rng rng(20240601);
  std::size_t mismatches = 0, small = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    auto ranked = scott_knott(oracles::random_treatments(rng));
    std::vector<Treatment> sorted;
    for (const auto& r : ranked) sorted.push_back(r.treatment);
    if (sorted.size() >= 2 && *best_split(sorted) != oracles::brute_split(sorted)) ++mismatches;
    if (oracles::smallest_accepted_effect(ranked) < kSmallEffect) ++small;
  }
  report("scott-knott-oracle-equivalence", mismatches == 0 && small == 0,
         fmt("1000 sets: %.0f split mismatches, %.0f accepted splits below 0.147", static_cast<double>(mismatches),
             static_cast<double>(small)));
}

void worked_examples() {
  Dataset d = Dataset::with_header({"X", "Bugs-", "Features+"});
  d.add({0, {1.0, 0.0, 0.0}});
  d.add({1, {1.0, 100.0, 100.0}});
  const double eg = d.d2h({2, {1.0, 30.0, 80.0}});
  const std::size_t h = hamlet_n(0.95, 1.0 / 17);

  const Dataset t3 = testing_support::table3();
  std::vector<Row> rows = t3.rows();
  std::reverse(rows.begin(), rows.end());
  auto [best, rest] = split_best_rest(t3.clone(rows, true));
  bool top = best.size() == 3 && rest.size() == 6;
  for (std::size_t i = 0; top && i < 3; ++i) top = best.rows()[i] == t3.rows()[i];

  report("worked-examples", std::abs(eg - kD2hExample) <= kD2hExampleTol && h == kHamlet && top,
         fmt("d2h=%.4f hamlet=%.0f best/rest=%.0f/%.0f", eg, static_cast<double>(h), static_cast<double>(best.size()),
             static_cast<double>(rest.size())) +
             (top ? " best rows on top" : " best rows out of place"));
}

void determinism() {
  const fs::path dir = fs::temp_directory_path() / ("frugal-acceptance-" + std::to_string(::getpid()));
  fs::create_directories(dir);
  ExperimentPlan plan;
  plan.datasets = {testing_support::data_file("auto93"), testing_support::data_file("pom3c")};
  plan.budgets = {10, 30};
  plan.repeats = 3;
  plan.seed = 4242;
  std::vector<std::string> files;
  for (unsigned threads : {1u, 3u}) {
    plan.threads = threads;
    const fs::path f = dir / ("results-" + std::to_string(threads) + ".csv");
    std::ofstream(f, std::ios::binary) << results_to_string(run_experiment(plan).records);
    std::ifstream in(f, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    files.push_back(s.str());
  }
  fs::remove_all(dir);
  report("determinism", files[0] == files[1] && !files[0].empty(),
         fmt("two runs, %.0f bytes each, identical=%.0f", static_cast<double>(files[0].size()),
             static_cast<double>(files[0] == files[1])));
}

void cross_dataset_trend() {
  ExperimentPlan plan;
  for (const auto& e : fs::directory_iterator(testing_support::data_dir()))
    if (e.path().extension() == ".csv") plan.datasets.push_back(e.path().string());
  std::sort(plan.datasets.begin(), plan.datasets.end());
  plan.seed = kMasterSeed;
  const auto t0 = std::chrono::steady_clock::now();
  auto out = run_experiment(plan);
  const double secs = seconds_since(t0);
  const auto reports = rank_records(out.records);
  const CrossSummary s = summarize_best(reports);
  double share = 0, labels = 1e9;
  if (auto f = s.cells.find("certain"); f != s.cells.end())
    if (auto c = f->second.find(0); c != f->second.end()) share = c->second.frequency, labels = c->second.labels.mean;
  for (const auto& rep : reports) {
    for (const auto& b : best_per_family(rep))
      std::cout << "      " << rep.dataset << " " << b.family << " rank " << b.rank << " labels " << b.labels << '\n';
  }
  report("cross-dataset-trend",
         reports.size() >= kTrendMinDatasets && share >= kTrendRank0Share && labels <= kTrendRank0LabelsMax &&
             secs < kTrendSeconds,
         fmt("%.0f datasets, certain at rank 0 in %.0f%%, rank-0 mean labels=%.1f, time=%.0fs", static_cast<double>(reports.size()),
             100 * share, labels, secs) +
             " (want >= 10, >= 50%, <= 46)");
}

void guarded(const char* name, const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    report(name, false, std::string("threw: ") + e.what());
  }
}

}  // namespace

int main() {
  std::cout << "data: " << testing_support::data_dir().string() << std::endl;
  guarded("baseline-fidelity", baseline_fidelity);
  guarded("lite-certain-effectiveness", lite_effectiveness);
  guarded("random-baseline-bound", random_bound);
  guarded("label-accounting", label_accounting);
  guarded("scott-knott-oracle-equivalence", scott_knott_equivalence);
  guarded("worked-examples", worked_examples);
  guarded("determinism", determinism);
  guarded("cross-dataset-trend", cross_dataset_trend);
  std::cout << failures << " failure(s)" << std::endl;
  return failures;
}
