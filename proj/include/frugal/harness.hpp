#pragma once

// Simulation rig: run every (dataset, treatment, repeat) against a cached
// oracle, persist one record per run, and rank treatments per dataset.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "frugal/lite.hpp"
#include "frugal/oracle.hpp"
#include "frugal/random_baseline.hpp"
#include "frugal/rng.hpp"
#include "frugal/stats.hpp"
#include "frugal/sway.hpp"
#include "frugal/table.hpp"

namespace frugal {

enum class Algorithm { lite_certain, lite_uncertain, sway, random, baseline };

inline const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::lite_certain: return "lite-certain";
    case Algorithm::lite_uncertain: return "lite-uncertain";
    case Algorithm::sway: return "sway";
    case Algorithm::random: return "random";
    case Algorithm::baseline: return "baseline";
  }
  return "?";
}

inline std::optional<Algorithm> parse_algorithm(std::string_view s) {
  for (auto a : {Algorithm::lite_certain, Algorithm::lite_uncertain, Algorithm::sway, Algorithm::random,
                 Algorithm::baseline})
    if (s == to_string(a)) return a;
  return std::nullopt;
}

// Only lite and random consume the budget grid.
inline bool budgeted(Algorithm a) {
  return a == Algorithm::lite_certain || a == Algorithm::lite_uncertain || a == Algorithm::random;
}

struct ExperimentPlan {
  std::vector<std::string> datasets;  // csv paths
  std::vector<Algorithm> algorithms{Algorithm::lite_certain, Algorithm::lite_uncertain, Algorithm::sway,
                                    Algorithm::random, Algorithm::baseline};
  std::vector<std::size_t> budgets{10, 20, 30, 40, 50, 60, 70, 80};
  std::size_t repeats = 20;
  std::uint64_t seed = 1;
  Config config;
  unsigned threads = 0;  // 0: hardware concurrency

  void validate() const {
    if (repeats < 1) throw std::invalid_argument("plan: repeats must be >= 1");
    if (datasets.empty()) throw std::invalid_argument("plan: no datasets");
    if (algorithms.empty()) throw std::invalid_argument("plan: no algorithms");
    const bool needs_budget = std::any_of(algorithms.begin(), algorithms.end(), budgeted);
    if (needs_budget && budgets.empty()) throw std::invalid_argument("plan: budgets required");
    config.validate();
  }
};

struct RunRecord {
  std::string dataset;
  std::string algorithm;
  std::string policy;  // lite policy, "stop=<x>" for sway, "-" otherwise
  std::size_t budget = 0;
  std::size_t repeat = 0;  // for baseline: the row index
  std::uint64_t seed = 0;
  std::size_t labels_used = 0;
  double best_d2h = 0;
  std::string status = "ok";  // ok | failed

  bool ok() const { return status == "ok"; }
  friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

inline std::string dataset_name(const std::string& path) {
  return std::filesystem::path(path).stem().string();
}

inline std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw std::runtime_error("format_double failed");
  return {buf, end};
}

// Seed for one run, from a stable hash of its identity.
inline std::uint64_t run_seed(std::uint64_t master, const std::string& dataset, const std::string& algorithm,
                              const std::string& policy, std::size_t budget, std::size_t repeat) {
  std::uint64_t h = fnv1a(dataset);
  h = fnv1a("\x1f" + algorithm, h);
  h = fnv1a("\x1f" + policy, h);
  h = fnv1a("\x1f" + std::to_string(budget), h);
  h = fnv1a("\x1f" + std::to_string(repeat), h);
  return splitmix64(master ^ splitmix64(h));
}

// Rows in a new order, re-identified by position. Returns the labeled truth;
// blind it with Dataset::blind for the algorithm's view.
inline Dataset shuffled_truth(const Dataset& data, Rng& rng) {
  std::vector<Row> rows = data.rows();
  rng.shuffle(rows);
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i].id = i;
  return data.clone(std::move(rows));
}

inline Dataset blinded(const Dataset& truth) {
  Dataset out = truth.clone({});
  for (const auto& r : truth.rows()) out.add(truth.blind(r));
  return out;
}

struct RunSpec {
  std::size_t dataset = 0;
  Algorithm algorithm = Algorithm::random;
  std::size_t budget = 0;
  std::size_t repeat = 0;
};

namespace detail {

inline std::string policy_field(Algorithm a, const Config& cfg) {
  switch (a) {
    case Algorithm::lite_certain: return "certain";
    case Algorithm::lite_uncertain: return "uncertain";
    case Algorithm::sway: return "stop=" + format_double(cfg.stop);
    default: return "-";
  }
}

// One run. `data` is the full labeled dataset; the result is scored in its
// frame, so every treatment shares one scale.
inline RunRecord execute(const Dataset& data, const std::string& name, const RunSpec& spec,
                         const ExperimentPlan& plan) {
  RunRecord rec;
  rec.dataset = name;
  rec.algorithm = to_string(spec.algorithm);
  rec.policy = policy_field(spec.algorithm, plan.config);
  rec.budget = budgeted(spec.algorithm) ? spec.budget : 0;
  rec.repeat = spec.repeat;
  rec.seed = run_seed(plan.seed, name, rec.algorithm, rec.policy, rec.budget, rec.repeat);
  try {
    Rng rng(rec.seed);
    const Dataset truth = shuffled_truth(data, rng);
    const Dataset blind = blinded(truth);
    CachedOracle oracle(truth);
    Row best;
    switch (spec.algorithm) {
      case Algorithm::lite_certain:
      case Algorithm::lite_uncertain: {
        const Policy p = spec.algorithm == Algorithm::lite_certain ? Policy::certain : Policy::uncertain;
        LiteResult r = lite_run(blind, oracle, spec.budget, p, rng, plan.config);
        if (r.aborted || !r.best_row) throw std::runtime_error(r.error);
        best = r.best_row->row;
        break;
      }
      case Algorithm::sway: {
        SwayResult r = SwaySearch(blind, oracle, rng, plan.config).run();
        best = sway_best(r, oracle, rng).row;
        break;
      }
      case Algorithm::random:
        best = random_n(blind, oracle, spec.budget, rng).best.row;
        break;
      case Algorithm::baseline:
        throw std::logic_error("baseline is not a search");
    }
    rec.labels_used = oracle.label_count();
    rec.best_d2h = data.d2h(best);
  } catch (const std::exception&) {
    rec.status = "failed";
    rec.labels_used = 0;
    rec.best_d2h = 0;
  }
  return rec;
}

}  // namespace detail

// d2h of every row, each as its own record (repeat = row index). No
// acquisition logic runs.
inline std::vector<RunRecord> baseline_records(const Dataset& data, const std::string& name,
                                               std::uint64_t master) {
  std::vector<RunRecord> out;
  out.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    RunRecord rec;
    rec.dataset = name;
    rec.algorithm = "baseline";
    rec.policy = "-";
    rec.repeat = i;
    rec.seed = run_seed(master, name, rec.algorithm, rec.policy, 0, i);
    rec.labels_used = data.size();
    rec.best_d2h = data.d2h(data.rows()[i]);
    out.push_back(std::move(rec));
  }
  return out;
}

struct ExperimentOutput {
  std::vector<RunRecord> records;
  std::vector<double> seconds;             // wall time per record
  std::vector<std::string> skipped;        // "path: reason"
};

// Runs the plan. Records come back in plan order regardless of threading.
inline ExperimentOutput run_experiment(const ExperimentPlan& plan,
                                       const std::function<void(std::size_t, std::size_t)>& progress = {}) {
  plan.validate();
  std::vector<Dataset> data;
  std::vector<std::string> names;
  ExperimentOutput out;
  for (const auto& path : plan.datasets) {
    try {
      data.push_back(load_csv(path));
      names.push_back(dataset_name(path));
    } catch (const std::exception& e) {
      out.skipped.push_back(path + ": " + e.what());
    }
  }

  // Flatten to jobs; the baseline is a block of records per dataset.
  struct Job {
    RunSpec spec;
    bool baseline = false;
  };
  std::vector<Job> jobs;
  for (std::size_t d = 0; d < data.size(); ++d) {
    for (Algorithm a : plan.algorithms) {
      if (a == Algorithm::baseline) {
        jobs.push_back({{d, a, 0, 0}, true});
        continue;
      }
      const std::vector<std::size_t> budgets = budgeted(a) ? plan.budgets : std::vector<std::size_t>{0};
      for (std::size_t b : budgets)
        for (std::size_t r = 0; r < plan.repeats; ++r) jobs.push_back({{d, a, b, r}, false});
    }
  }

  std::vector<std::vector<RunRecord>> results(jobs.size());
  std::vector<double> seconds(jobs.size());
  std::atomic<std::size_t> next{0}, finished{0};
  std::mutex progress_mutex;
  auto worker = [&] {
    for (std::size_t j; (j = next.fetch_add(1)) < jobs.size();) {
      const auto t0 = std::chrono::steady_clock::now();
      const Job& job = jobs[j];
      const Dataset& d = data[job.spec.dataset];
      const std::string& name = names[job.spec.dataset];
      if (job.baseline)
        results[j] = baseline_records(d, name, plan.seed);
      else
        results[j] = {detail::execute(d, name, job.spec, plan)};
      seconds[j] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      const std::size_t n = ++finished;
      if (progress) {
        std::lock_guard lock(progress_mutex);
        progress(n, jobs.size());
      }
    }
  };
  unsigned threads = plan.threads ? plan.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(jobs.size(), 1)));
  std::vector<std::thread> pool;
  for (unsigned i = 1; i < threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  for (std::size_t j = 0; j < jobs.size(); ++j) {
    const double each = seconds[j] / static_cast<double>(std::max<std::size_t>(results[j].size(), 1));
    for (auto& rec : results[j]) {
      out.records.push_back(std::move(rec));
      out.seconds.push_back(each);
    }
  }
  return out;
}

// ---- results file --------------------------------------------------------

inline constexpr const char* kResultsHeader =
    "dataset,algorithm,policy,budget,repeat,seed,labels_used,best_d2h,status";

inline void write_results(std::ostream& out, const std::vector<RunRecord>& records) {
  out << kResultsHeader << '\n';
  for (const auto& r : records) {
    out << r.dataset << ',' << r.algorithm << ',' << r.policy << ',' << r.budget << ',' << r.repeat << ','
        << r.seed << ',' << r.labels_used << ',' << format_double(r.best_d2h) << ',' << r.status << '\n';
  }
}

namespace detail {
template <class T>
T parse_int(std::string_view s, std::size_t line) {
  T v{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size())
    throw std::runtime_error("results line " + std::to_string(line) + ": bad integer '" + std::string(s) + "'");
  return v;
}
}  // namespace detail

inline std::vector<RunRecord> read_results(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != kResultsHeader)
    throw std::runtime_error("results: missing or unexpected header");
  std::vector<RunRecord> out;
  for (std::size_t n = 2; std::getline(in, line); ++n) {
    if (trim(line).empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 9) throw std::runtime_error("results line " + std::to_string(n) + ": expected 9 fields");
    RunRecord r;
    r.dataset = f[0];
    r.algorithm = f[1];
    r.policy = f[2];
    r.budget = detail::parse_int<std::size_t>(f[3], n);
    r.repeat = detail::parse_int<std::size_t>(f[4], n);
    r.seed = detail::parse_int<std::uint64_t>(f[5], n);
    r.labels_used = detail::parse_int<std::size_t>(f[6], n);
    auto d = parse_number(f[7]);
    if (!d) throw std::runtime_error("results line " + std::to_string(n) + ": bad d2h");
    r.best_d2h = *d;
    r.status = f[8];
    out.push_back(std::move(r));
  }
  return out;
}

inline std::string results_to_string(const std::vector<RunRecord>& records) {
  std::ostringstream s;
  write_results(s, records);
  return s.str();
}

// ---- reports -------------------------------------------------------------

// Display name of a record's treatment, as in "certain&30".
inline std::string treatment_name(const RunRecord& r) {
  if (r.algorithm == "lite-certain") return "certain";
  if (r.algorithm == "lite-uncertain") return "uncertain";
  return r.algorithm;
}

struct DatasetReport {
  std::string dataset;
  std::vector<RankedTreatment> ranked;  // Scott-Knott order
};

// Groups ok records by (algorithm, policy, budget). A treatment's label
// count is the rounded mean labels_used of its runs.
inline std::vector<DatasetReport> rank_records(const std::vector<RunRecord>& records) {
  struct Key {
    std::string algorithm, policy;
    std::size_t budget;
    auto operator<=>(const Key&) const = default;
  };
  std::map<std::string, std::map<Key, std::pair<Treatment, double>>> groups;
  for (const auto& r : records) {
    if (!r.ok()) continue;
    auto& [t, labels] = groups[r.dataset][{r.algorithm, r.policy, r.budget}];
    t.name = treatment_name(r);
    t.results.push_back(r.best_d2h);
    labels += static_cast<double>(r.labels_used);
  }
  std::vector<DatasetReport> out;
  for (auto& [name, ts] : groups) {
    std::vector<Treatment> list;
    for (auto& [key, entry] : ts) {
      auto& [t, labels] = entry;
      t.budget = static_cast<std::size_t>(std::lround(labels / static_cast<double>(t.results.size())));
      list.push_back(std::move(t));
    }
    out.push_back({name, scott_knott(std::move(list))});
  }
  return out;
}

inline constexpr std::size_t kBoxWidth = 50;

inline std::size_t box_column(double v) {
  const double c = std::clamp(v, 0.0, 1.0) * static_cast<double>(kBoxWidth - 1);
  return static_cast<std::size_t>(std::lround(c));
}

// 50 columns: '-' from p25 to p75, 'o' at the median, spaces elsewhere.
inline std::string box_plot(double p25, double median, double p75) {
  std::string s(kBoxWidth, ' ');
  for (std::size_t i = box_column(p25); i <= box_column(p75); ++i) s[i] = '-';
  s[box_column(median)] = 'o';
  return s;
}

inline std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

namespace detail {
inline void table_header(std::ostream& out, bool box) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%4s  %-16s %6s %6s %9s", "rank", "treatment", "labels", "50th", "(75-25)th");
  out << buf;
  if (box) out << "  |" << std::string(kBoxWidth, ' ') << '|';
  out << '\n';
}

inline void table_row(std::ostream& out, const RankedTreatment& r, bool box) {
  const std::string name = r.treatment.name + "&" + std::to_string(r.treatment.budget);
  char buf[160];
  std::snprintf(buf, sizeof buf, "%4zu  %-16s %6zu %6s %9s", r.rank, name.c_str(), r.treatment.budget,
                fixed2(r.median).c_str(), fixed2(r.spread()).c_str());
  out << buf;
  if (box) out << "  |" << box_plot(r.p25, r.median, r.p75) << '|';
  out << '\n';
}
}  // namespace detail

// Rank order, median within a rank.
inline std::vector<RankedTreatment> by_rank_median(std::vector<RankedTreatment> v) {
  std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
    return a.rank != b.rank ? a.rank < b.rank : a.median < b.median;
  });
  return v;
}

// Rank order, fewest labels within a rank: the first mention of each
// treatment family is its best result.
inline std::vector<RankedTreatment> by_rank_labels(std::vector<RankedTreatment> v) {
  std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
    if (a.rank != b.rank) return a.rank < b.rank;
    if (a.treatment.budget != b.treatment.budget) return a.treatment.budget < b.treatment.budget;
    return a.median < b.median;
  });
  return v;
}

inline void render_report(std::ostream& out, const DatasetReport& rep) {
  out << "# " << rep.dataset << ": d2h percentiles, ranked\n";
  detail::table_header(out, true);
  for (const auto& r : by_rank_median(rep.ranked)) detail::table_row(out, r, true);
  out << "\n# " << rep.dataset << ": sorted by rank, then labels\n";
  detail::table_header(out, false);
  for (const auto& r : by_rank_labels(rep.ranked)) detail::table_row(out, r, false);
}

// ---- cross-dataset summary -----------------------------------------------

struct MeanSd {
  double mean = 0;
  double sd = 0;
  std::size_t n = 0;
};

inline MeanSd mean_sd(const std::vector<double>& v) {
  MeanSd m;
  m.n = v.size();
  if (v.empty()) return m;
  m.mean = mean(v);
  if (v.size() > 1) {
    double ss = 0;
    for (double x : v) ss += (x - m.mean) * (x - m.mean);
    m.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return m;
}

// Where each treatment family did best on one dataset: lowest rank, then
// fewest labels.
struct BestResult {
  std::string family;
  std::size_t rank = 0;
  std::size_t labels = 0;
};

inline std::vector<BestResult> best_per_family(const DatasetReport& rep) {
  std::vector<BestResult> out;
  for (const auto& r : by_rank_labels(rep.ranked)) {
    if (r.treatment.name == "baseline") continue;
    const bool seen = std::any_of(out.begin(), out.end(), [&](const auto& b) { return b.family == r.treatment.name; });
    if (!seen) out.push_back({r.treatment.name, r.rank, r.treatment.budget});
  }
  return out;
}

// Fewest labels in the partition just above the baseline's. nullopt when
// the dataset has no baseline or the baseline shares rank 0.
inline std::optional<std::size_t> fewest_distinguishable_labels(const DatasetReport& rep) {
  std::optional<std::size_t> base;
  for (const auto& r : rep.ranked)
    if (r.treatment.name == "baseline") base = r.rank;
  if (!base || *base == 0) return std::nullopt;
  std::optional<std::size_t> best;
  for (const auto& r : rep.ranked)
    if (r.rank == *base - 1 && (!best || r.treatment.budget < *best)) best = r.treatment.budget;
  return best;
}

struct SummaryCell {
  std::size_t count = 0;  // datasets where the family's best result sits at this rank
  double frequency = 0;   // count / datasets
  MeanSd labels;
};

struct CrossSummary {
  std::size_t datasets = 0;
  std::vector<std::string> families;
  std::size_t max_rank = 0;
  std::map<std::string, std::map<std::size_t, SummaryCell>> cells;
  MeanSd fewest_labels;  // over datasets where it is defined
};

inline CrossSummary summarize_best(const std::vector<DatasetReport>& reports) {
  CrossSummary s;
  s.datasets = reports.size();
  std::map<std::string, std::map<std::size_t, std::vector<double>>> labels;
  std::vector<double> fewest;
  for (const auto& rep : reports) {
    for (const auto& b : best_per_family(rep)) {
      if (std::find(s.families.begin(), s.families.end(), b.family) == s.families.end())
        s.families.push_back(b.family);
      labels[b.family][b.rank].push_back(static_cast<double>(b.labels));
      s.max_rank = std::max(s.max_rank, b.rank);
    }
    if (auto f = fewest_distinguishable_labels(rep)) fewest.push_back(static_cast<double>(*f));
  }
  const std::vector<std::string> order{"random", "certain", "uncertain", "sway"};
  std::stable_sort(s.families.begin(), s.families.end(), [&](const auto& a, const auto& b) {
    auto pos = [&](const std::string& f) { return std::find(order.begin(), order.end(), f) - order.begin(); };
    return pos(a) < pos(b);
  });
  for (auto& [family, ranks] : labels)
    for (auto& [rank, v] : ranks)
      s.cells[family][rank] = {v.size(), static_cast<double>(v.size()) / static_cast<double>(s.datasets), mean_sd(v)};
  s.fewest_labels = mean_sd(fewest);
  return s;
}

inline void render_summary(std::ostream& out, const CrossSummary& s) {
  out << "# best result per treatment family over " << s.datasets << " dataset(s)\n";
  out << "# cell: mean (sd) labels [% of datasets]\n";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%4s", "rank");
  out << buf;
  for (const auto& f : s.families) {
    std::snprintf(buf, sizeof buf, "  %-20s", f.c_str());
    out << buf;
  }
  out << '\n';
  for (std::size_t rank = 0; rank <= s.max_rank; ++rank) {
    std::snprintf(buf, sizeof buf, "%4zu", rank);
    out << buf;
    for (const auto& f : s.families) {
      std::string cell;
      auto fit = s.cells.find(f);
      if (fit != s.cells.end()) {
        if (auto it = fit->second.find(rank); it != fit->second.end()) {
          const auto& c = it->second;
          char tmp[64];
          std::snprintf(tmp, sizeof tmp, "%.0f (%.0f) [%.0f%%]", c.labels.mean, c.labels.sd, 100 * c.frequency);
          cell = tmp;
        }
      }
      std::snprintf(buf, sizeof buf, "  %-20s", cell.c_str());
      out << buf;
    }
    out << '\n';
  }
  if (s.fewest_labels.n) {
    std::snprintf(buf, sizeof buf, "%.1f (sd %.1f)", s.fewest_labels.mean, s.fewest_labels.sd);
    out << "fewest labels distinguishable from baseline: " << buf << " over " << s.fewest_labels.n
        << " dataset(s)\n";
  }
}

}  // namespace frugal
