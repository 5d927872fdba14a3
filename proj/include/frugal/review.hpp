#pragma once

// Review sessions: a human answers the LITE loop's labeling requests.
// Each session runs lite_run on its own thread against an
// InteractiveOracle; callers read the pending candidate and submit goal
// values. Sessions are journaled (one JSONL file each) and replayed on
// restart. Requires nlohmann/json on the include path.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <regex>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "frugal/harness.hpp"
#include "frugal/lite.hpp"
#include "frugal/oracle.hpp"
#include "frugal/table.hpp"

namespace frugal::review {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

// Carries an HTTP-style status so the transport can map it directly.
class ServiceError : public std::runtime_error {
 public:
  ServiceError(int status, const std::string& what) : std::runtime_error(what), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

inline json versioned(json body) {
  body["schema_version"] = kSchemaVersion;
  return body;
}

// ---- cells and rows on the wire ------------------------------------------

inline json cell_json(const Cell& c) {
  if (is_missing(c)) return nullptr;
  if (const auto* d = std::get_if<double>(&c)) return *d;
  return std::get<std::string>(c);
}

inline Cell json_cell(const json& j, const ColumnName& col) {
  if (j.is_null()) return missing;
  if (col.numeric()) {
    if (!j.is_number()) throw ServiceError(400, "column '" + col.text + "' expects a number or null");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw ServiceError(400, "column '" + col.text + "' must be finite");
    return v;
  }
  if (j.is_string()) {
    std::string s = j.get<std::string>();
    if (s == "?") return missing;
    return s;
  }
  if (j.is_number()) return to_text(Cell{j.get<double>()});
  throw ServiceError(400, "column '" + col.text + "' expects a string or null");
}

inline json row_json(const Schema& schema, const Row& row) {
  json cells = json::array();
  for (const auto& c : row.cells) cells.push_back(cell_json(c));
  json x = json::object();
  for (std::size_t p : schema.x) x[schema.columns[p].text] = cell_json(row.cells[p]);
  json y = json::object();
  for (std::size_t p : schema.y) y[schema.columns[p].text] = cell_json(row.cells[p]);
  return {{"row_id", row.id}, {"cells", cells}, {"x", x}, {"y", y}};
}

// A row given either as a full "cells" array or as an object of column
// name -> value (absent columns are missing).
inline Row json_row(const Schema& schema, const json& j, std::size_t id) {
  Row row{id, std::vector<Cell>(schema.arity(), missing)};
  if (j.is_object() && j.contains("cells")) {
    const json& cells = j["cells"];
    if (!cells.is_array() || cells.size() != schema.arity())
      throw ServiceError(400, "cells must be an array of " + std::to_string(schema.arity()) + " values");
    for (std::size_t i = 0; i < schema.arity(); ++i) row.cells[i] = json_cell(cells[i], schema.columns[i]);
  } else if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      auto col = std::find_if(schema.columns.begin(), schema.columns.end(),
                              [&](const ColumnName& c) { return c.text == it.key(); });
      if (col == schema.columns.end()) throw ServiceError(400, "unknown column '" + it.key() + "'");
      row.cells[col->position] = json_cell(it.value(), *col);
    }
  } else {
    throw ServiceError(400, "row must be an object");
  }
  return row;
}

inline json schema_json(const Schema& schema) {
  json cols = json::array();
  for (const auto& c : schema.columns) {
    json g = nullptr;
    if (c.goal() == Goal::minimize) g = "minimize";
    if (c.goal() == Goal::maximize) g = "maximize";
    cols.push_back({{"name", c.text},
                    {"role", c.is_goal() ? "goal" : "x"},
                    {"type", c.numeric() ? "num" : "sym"},
                    {"goal", g}});
  }
  return cols;
}

inline json summaries_json(const Dataset& d, std::size_t top = 5) {
  json cols = json::array();
  const Schema& schema = d.schema();
  for (const auto& col : d.x()) {
    if (const auto* n = std::get_if<NumSummary>(&col)) {
      cols.push_back({{"name", schema.columns[n->position()].text},
                      {"type", "num"},
                      {"n", n->n()},
                      {"mu", n->mu()},
                      {"sd", n->sd()}});
    } else {
      const auto& s = std::get<SymSummary>(col);
      std::vector<std::pair<std::string, std::size_t>> counts(s.counts().begin(), s.counts().end());
      std::stable_sort(counts.begin(), counts.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
      json freq = json::array();
      for (std::size_t i = 0; i < counts.size() && i < top; ++i)
        freq.push_back({{"value", counts[i].first}, {"count", counts[i].second}});
      cols.push_back({{"name", schema.columns[s.position()].text}, {"type", "sym"}, {"n", s.n()}, {"top", freq}});
    }
  }
  return {{"rows", d.size()}, {"columns", cols}};
}

inline json scores_json(const Scores& s) { return {{"best", s.best}, {"rest", s.rest}, {"score", s.score}}; }

inline std::string policy_name(Policy p) { return to_string(p); }

// ---- datasets ------------------------------------------------------------

struct DatasetEntry {
  std::string name;
  std::shared_ptr<const Dataset> data;  // as loaded; goals may be missing
  std::uint64_t hash = 0;               // of the csv text
};

inline bool valid_name(const std::string& s) {
  static const std::regex re("[A-Za-z0-9_.-]{1,64}");
  return std::regex_match(s, re) && s != "." && s != "..";
}

class DatasetRegistry {
 public:
  // Parses and registers csv text. Re-registering identical content is a
  // no-op; different content under a taken name is a conflict.
  std::shared_ptr<const DatasetEntry> add(const std::string& name, const std::string& csv) {
    if (!valid_name(name)) throw ServiceError(400, "invalid dataset name '" + name + "'");
    std::shared_ptr<Dataset> data;
    try {
      data = std::make_shared<Dataset>(read_csv_text(csv));
    } catch (const std::exception& e) {
      throw ServiceError(400, std::string("dataset does not parse: ") + e.what());
    }
    if (data->schema().x.empty() || data->schema().y.empty())
      throw ServiceError(400, "dataset needs independent and goal columns");
    auto entry = std::make_shared<DatasetEntry>(DatasetEntry{name, std::move(data), fnv1a(csv)});
    std::unique_lock lock(mutex_);
    if (auto it = entries_.find(name); it != entries_.end()) {
      if (it->second->hash == entry->hash) return it->second;
      throw ServiceError(409, "dataset '" + name + "' already exists with different content");
    }
    entries_[name] = entry;
    return entry;
  }

  std::shared_ptr<const DatasetEntry> get(const std::string& name) const {
    std::shared_lock lock(mutex_);
    auto it = entries_.find(name);
    if (it == entries_.end()) throw ServiceError(404, "unknown dataset '" + name + "'");
    return it->second;
  }

  std::vector<std::shared_ptr<const DatasetEntry>> list() const {
    std::shared_lock lock(mutex_);
    std::vector<std::shared_ptr<const DatasetEntry>> out;
    for (const auto& [_, e] : entries_) out.push_back(e);
    return out;
  }

 private:
  mutable std::shared_mutex mutex_;
  std::map<std::string, std::shared_ptr<const DatasetEntry>> entries_;
};

inline json dataset_json(const DatasetEntry& e) {
  return {{"name", e.name}, {"rows", e.data->size()}, {"columns", schema_json(e.data->schema())}};
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// ---- frozen model --------------------------------------------------------

// A finished session's model, rebuilt from its labeled rows.
class FrozenModel {
 public:
  FrozenModel(std::shared_ptr<const Schema> schema, std::vector<Row> labeled, Policy policy, Config cfg)
      : schema_(std::move(schema)), labeled_(std::move(labeled)), policy_(policy), cfg_(cfg) {
    if (labeled_.size() < 2) throw ServiceError(409, "model needs at least 2 labeled rows");
    model_.emplace(Model::from_sorted(Dataset(schema_).clone(labeled_, true), policy_, cfg_));
  }

  Scores score(const Row& row) const { return model_->score(row); }
  const Model& model() const { return *model_; }
  const Schema& schema() const { return *schema_; }

  // Inverse of review report snapshots (see Session::report).
  static FrozenModel from_snapshot(const json& snap) {
    std::vector<std::string> header;
    for (const auto& c : snap.at("header")) header.push_back(c.get<std::string>());
    auto schema = parse_header(header);
    auto policy = parse_policy(snap.at("policy").get<std::string>());
    if (!policy) throw ServiceError(400, "snapshot has an unknown policy");
    Config cfg;
    cfg.start = snap.at("config").at("start").get<std::size_t>();
    cfg.best = snap.at("config").at("best").get<double>();
    cfg.m = snap.at("config").at("m").get<double>();
    cfg.k = snap.at("config").at("k").get<double>();
    std::vector<Row> rows;
    for (const auto& h : snap.at("history")) rows.push_back(json_row(*schema, h, h.at("row_id").get<std::size_t>()));
    return FrozenModel(std::move(schema), std::move(rows), *policy, cfg);
  }

 private:
  std::shared_ptr<const Schema> schema_;
  std::vector<Row> labeled_;
  Policy policy_;
  Config cfg_;
  std::optional<Model> model_;
};

// ---- sessions ------------------------------------------------------------

enum class State { awaiting_label, idle, finished };

inline const char* to_string(State s) {
  switch (s) {
    case State::awaiting_label: return "awaiting-label";
    case State::idle: return "idle";
    case State::finished: return "finished";
  }
  return "?";
}

struct SessionParams {
  std::string id;
  std::string dataset;
  Policy policy = Policy::certain;
  std::size_t budget = 20;
  std::uint64_t seed = 0;
  bool simulate = false;  // answer from the dataset's own goals
  Config config;
};

class Session {
 public:
  Session(SessionParams params, std::shared_ptr<const DatasetEntry> dataset,
          std::optional<std::filesystem::path> journal_dir)
      : params_(std::move(params)),
        dataset_(std::move(dataset)),
        blind_(blinded(*dataset_->data)),
        journal_dir_(std::move(journal_dir)) {
    const Dataset& d = *dataset_->data;
    if (params_.budget < params_.config.start + 1)
      throw ServiceError(400, "budget must be at least " + std::to_string(params_.config.start + 1));
    if (params_.budget > d.size())
      throw ServiceError(400, "budget exceeds the dataset's " + std::to_string(d.size()) + " rows");
    if (d.size() < params_.config.start + 3)
      throw ServiceError(400, "dataset has too few rows for a session");
    if (params_.simulate &&
        !std::all_of(d.rows().begin(), d.rows().end(), [&](const Row& r) { return d.labeled(r); }))
      throw ServiceError(400, "simulation needs a dataset with every goal filled in");
  }

  ~Session() { close(false); }

  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  const SessionParams& params() const { return params_; }

  // Journals the creation (unless replaying) and starts the search. In
  // simulation mode the whole run happens here.
  void start(bool journal = true) {
    if (journal) append({{"event", "create"},
                         {"id", params_.id},
                         {"dataset", params_.dataset},
                         {"dataset_hash", std::to_string(dataset_->hash)},
                         {"policy", policy_name(params_.policy)},
                         {"budget", params_.budget},
                         {"seed", std::to_string(params_.seed)},
                         {"simulate", params_.simulate}});
    if (params_.simulate) {
      CachedOracle oracle(*dataset_->data);
      Rng rng(params_.seed);
      LiteResult r = lite_run(blind_, oracle, params_.budget, params_.policy, rng, params_.config);
      finish(std::move(r));
      return;
    }
    oracle_ = std::make_unique<InteractiveOracle>(dataset_->data->schema_ptr());
    worker_ = std::thread([this] {
      Rng rng(params_.seed);
      LiteResult r;
      try {
        r = lite_run(blind_, *oracle_, params_.budget, params_.policy, rng, params_.config);
      } catch (const std::exception& e) {
        r.aborted = true;
        r.error = e.what();
      }
      finish(std::move(r));
      oracle_->mark_done();
    });
    oracle_->wait_for_request();
  }

  State state() const {
    std::lock_guard lock(state_mutex_);
    if (finished_) return State::finished;
    if (oracle_ && oracle_->pending()) return State::awaiting_label;
    return State::idle;
  }

  json candidate() const {
    std::optional<InteractiveOracle::Request> req;
    if (oracle_ && state() != State::finished) req = oracle_->pending();
    if (!req) throw ServiceError(409, "no candidate: session is " + std::string(to_string(state())));
    json c = row_json(dataset_->data->schema(), req->row);
    c.erase("y");
    c["session"] = params_.id;
    c["seed"] = req->context.seed;
    c["scores"] = req->context.scores ? scores_json(*req->context.scores) : json(nullptr);
    c["labels_used"] = req->context.labels_used;
    c["budget"] = params_.budget;
    c["budget_remaining"] = params_.budget - req->context.labels_used;
    c["serial"] = req->serial;
    return versioned(c);
  }

  // Goals as an array in goal-column order, or an object keyed by goal
  // column name.
  std::vector<double> parse_goals(const json& goals) const {
    const Schema& schema = dataset_->data->schema();
    std::vector<double> out;
    auto number = [](const json& v, const std::string& name) {
      if (!v.is_number()) throw ServiceError(400, "goal '" + name + "' must be a number");
      const double d = v.get<double>();
      if (!std::isfinite(d)) throw ServiceError(400, "goal '" + name + "' must be finite");
      return d;
    };
    if (goals.is_array()) {
      if (goals.size() != schema.y.size())
        throw ServiceError(400, "expected " + std::to_string(schema.y.size()) + " goal values");
      for (std::size_t i = 0; i < goals.size(); ++i) out.push_back(number(goals[i], schema.columns[schema.y[i]].text));
    } else if (goals.is_object()) {
      if (goals.size() != schema.y.size())
        throw ServiceError(400, "expected " + std::to_string(schema.y.size()) + " goal values");
      for (std::size_t p : schema.y) {
        const std::string& name = schema.columns[p].text;
        if (!goals.contains(name)) throw ServiceError(400, "missing goal '" + name + "'");
        out.push_back(number(goals[name], name));
      }
    } else {
      throw ServiceError(400, "goals must be an array or an object");
    }
    return out;
  }

  // Answers the pending candidate and waits for the search to post the next
  // one (or finish). Returns the updated session summary.
  json submit(std::size_t row_id, const json& goals_json, bool journal = true) {
    std::lock_guard writer(write_mutex_);
    const std::vector<double> goals = parse_goals(goals_json);
    if (!oracle_ || state() == State::finished) throw ServiceError(409, "session is finished");
    const auto req = oracle_->pending();
    if (!req) throw ServiceError(409, "no pending candidate");
    if (req->row.id != row_id)
      throw ServiceError(409, "row " + std::to_string(row_id) + " is not the pending candidate (" +
                                  std::to_string(req->row.id) + ")");
    Row labeled = req->row;
    for (std::size_t i = 0; i < goals.size(); ++i) labeled.cells[dataset_->data->schema().y[i]] = goals[i];
    if (journal) append({{"event", "label"}, {"row", row_id}, {"goals", goals}});
    {
      std::lock_guard lock(state_mutex_);
      history_.push_back(labeled);
    }
    switch (oracle_->answer(row_id, goals)) {
      case InteractiveOracle::Answer::accepted: break;
      case InteractiveOracle::Answer::conflict: throw ServiceError(409, "stale candidate");
      default: throw ServiceError(409, "session is not awaiting a label");
    }
    oracle_->wait_for_request();
    return summary();
  }

  // Stops the search. Labels gathered so far stay in the report.
  void close(bool journal = true) {
    std::lock_guard writer(write_mutex_);
    if (oracle_) {
      const bool was_running = state() != State::finished;
      oracle_->close();
      if (worker_.joinable()) worker_.join();
      if (journal && was_running) append({{"event", "close"}});
    }
  }

  json summary() const {
    json s = {{"id", params_.id}, {"state", to_string(state())}, {"budget", params_.budget}};
    const json rep = report();
    s["labels_used"] = rep["labels_used"];
    s["incumbent"] = rep["incumbent"];
    s["trajectory_point"] = rep["trajectory"].empty() ? json(nullptr) : rep["trajectory"].back();
    s["candidate"] = nullptr;
    if (s["state"] == to_string(State::awaiting_label)) {
      try {
        json c = candidate();
        c.erase("schema_version");
        s["candidate"] = std::move(c);
      } catch (const ServiceError&) {
      }
    }
    return versioned(s);
  }

  // Model, labeled history, incumbent and trajectory. d2h values are in the
  // frame of the labeled rows.
  json report() const {
    std::vector<Row> history;
    bool finished;
    std::string error;
    {
      std::lock_guard lock(state_mutex_);
      history = history_;
      finished = finished_;
      error = error_;
    }
    const Dataset& d = *dataset_->data;
    json rep = {{"id", params_.id},
                {"dataset", params_.dataset},
                {"algorithm", "lite"},
                {"policy", policy_name(params_.policy)},
                {"budget", params_.budget},
                {"seed", std::to_string(params_.seed)},
                {"simulate", params_.simulate},
                {"state", finished ? "finished" : to_string(state())},
                {"labels_used", history.size()},
                {"config", {{"start", params_.config.start}, {"best", params_.config.best},
                            {"m", params_.config.m}, {"k", params_.config.k}}}};
    json header = json::array();
    for (const auto& c : d.schema().columns) header.push_back(c.text);
    rep["header"] = header;
    rep["model"] = nullptr;
    rep["history"] = json::array();
    rep["incumbent"] = nullptr;
    rep["trajectory"] = json::array();
    if (!error.empty()) rep["error"] = error;
    if (history.empty()) return versioned(rep);

    const Dataset frame = d.clone(history);
    for (const auto& r : history) {
      json h = row_json(d.schema(), r);
      h["d2h"] = frame.d2h(r);
      rep["history"].push_back(std::move(h));
    }
    const Dataset sorted = d.clone(history, true);
    json inc = row_json(d.schema(), sorted.rows().front());
    inc["d2h"] = frame.d2h(sorted.rows().front());
    rep["incumbent"] = inc;
    for (const auto& t : incumbent_trajectory(d, history))
      rep["trajectory"].push_back({{"labels", t.labels}, {"d2h", t.d2h}});
    if (history.size() >= 2) {
      const Model m = Model::from_sorted(sorted, params_.policy, params_.config);
      rep["model"] = {{"nall", m.nall()}, {"best", summaries_json(m.best())}, {"rest", summaries_json(m.rest())}};
    }
    return versioned(rep);
  }

  // Frozen model from the current labels.
  FrozenModel frozen() const {
    std::lock_guard lock(state_mutex_);
    return FrozenModel(dataset_->data->schema_ptr(), history_, params_.policy, params_.config);
  }

  std::optional<std::filesystem::path> snapshot_path() const {
    if (!journal_dir_) return std::nullopt;
    return *journal_dir_ / "reports" / (params_.id + ".json");
  }

 private:
  void finish(LiteResult r) {
    {
      std::lock_guard lock(state_mutex_);
      history_ = r.labeled;
      finished_ = true;
      if (r.aborted) error_ = r.error;
    }
    if (auto p = snapshot_path()) {
      std::filesystem::create_directories(p->parent_path());
      std::ofstream out(*p, std::ios::trunc);
      out << report().dump(2) << '\n';
    }
  }

  void append(const json& event) {
    if (!journal_dir_) return;
    const auto dir = *journal_dir_ / "sessions";
    std::filesystem::create_directories(dir);
    std::ofstream out(dir / (params_.id + ".jsonl"), std::ios::app);
    out << event.dump() << '\n';
    out.flush();
    if (!out) throw ServiceError(500, "journal write failed");
  }

  SessionParams params_;
  std::shared_ptr<const DatasetEntry> dataset_;
  Dataset blind_;
  std::optional<std::filesystem::path> journal_dir_;
  std::unique_ptr<InteractiveOracle> oracle_;
  std::thread worker_;
  mutable std::mutex write_mutex_;  // one mutation at a time
  mutable std::mutex state_mutex_;  // guards the fields below
  std::vector<Row> history_;
  bool finished_ = false;
  std::string error_;
};

// ---- manager -------------------------------------------------------------

struct CreateRequest {
  std::string dataset;
  std::string algorithm = "lite";
  std::string policy = "certain";
  std::size_t budget = 20;
  std::optional<std::uint64_t> seed;
  bool simulate = false;
};

inline CreateRequest parse_create(const json& j) {
  if (!j.is_object()) throw ServiceError(400, "request body must be a JSON object");
  CreateRequest r;
  try {
    r.dataset = j.at("dataset").get<std::string>();
    std::string algo = j.value("algorithm", std::string("lite"));
    // "lite-certain" carries the policy in the algorithm name.
    if (algo.rfind("lite-", 0) == 0) {
      r.policy = algo.substr(5);
      algo = "lite";
    }
    r.algorithm = algo;
    r.policy = j.value("policy", r.policy);
    const json& b = j.at("budget");
    if (!b.is_number_integer() || b.get<long long>() < 0) throw ServiceError(400, "budget must be a non-negative integer");
    r.budget = b.get<std::size_t>();
    if (j.contains("seed") && !j["seed"].is_null()) {
      const json& s = j["seed"];
      if (s.is_number_unsigned()) r.seed = s.get<std::uint64_t>();
      else if (s.is_string()) r.seed = std::stoull(s.get<std::string>());
      else throw ServiceError(400, "seed must be an unsigned integer");
    }
    r.simulate = j.value("simulate", false);
  } catch (const json::exception& e) {
    throw ServiceError(400, std::string("malformed session request: ") + e.what());
  } catch (const std::logic_error& e) {
    throw ServiceError(400, std::string("malformed session request: ") + e.what());
  }
  if (r.algorithm != "lite") throw ServiceError(400, "only lite sessions are interactive");
  if (!parse_policy(r.policy)) throw ServiceError(400, "unknown policy '" + r.policy + "'");
  return r;
}

class SessionManager {
 public:
  explicit SessionManager(std::optional<std::filesystem::path> journal_dir = std::nullopt)
      : journal_dir_(std::move(journal_dir)) {}

  ~SessionManager() {
    std::lock_guard lock(mutex_);
    sessions_.clear();
  }

  DatasetRegistry& datasets() { return datasets_; }

  // Registers every *.csv under dir.
  std::vector<std::string> load_directory(const std::filesystem::path& dir) {
    std::vector<std::string> warnings;
    if (!std::filesystem::is_directory(dir)) throw std::runtime_error(dir.string() + " is not a directory");
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir))
      if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      try {
        datasets_.add(f.stem().string(), read_file(f));
      } catch (const std::exception& e) {
        warnings.push_back(f.string() + ": " + e.what());
      }
    }
    return warnings;
  }

  // Registers an uploaded dataset, keeping a copy beside the journal so
  // replay can find it.
  std::shared_ptr<const DatasetEntry> upload(const std::string& name, const std::string& csv) {
    auto entry = datasets_.add(name, csv);
    if (journal_dir_) {
      const auto dir = *journal_dir_ / "datasets";
      std::filesystem::create_directories(dir);
      std::ofstream(dir / (name + ".csv"), std::ios::binary | std::ios::trunc) << csv;
    }
    return entry;
  }

  std::shared_ptr<Session> create(const CreateRequest& req) {
    auto entry = datasets_.get(req.dataset);
    SessionParams p;
    p.id = new_id();
    p.dataset = req.dataset;
    p.policy = *parse_policy(req.policy);
    p.budget = req.budget;
    p.seed = req.seed ? *req.seed : std::random_device{}();
    p.simulate = req.simulate;
    auto s = std::make_shared<Session>(p, entry, journal_dir_);
    s->start();
    std::lock_guard lock(mutex_);
    sessions_[p.id] = s;
    return s;
  }

  std::shared_ptr<Session> get(const std::string& id) const {
    std::lock_guard lock(mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw ServiceError(404, "unknown session '" + id + "'");
    return it->second;
  }

  std::vector<std::shared_ptr<Session>> list() const {
    std::lock_guard lock(mutex_);
    std::vector<std::shared_ptr<Session>> out;
    for (const auto& [_, s] : sessions_) out.push_back(s);
    return out;
  }

  // Rebuilds sessions from the journal directory: uploaded datasets first,
  // then each session's events in order. Returns problems found.
  std::vector<std::string> restore() {
    std::vector<std::string> problems;
    if (!journal_dir_) return problems;
    if (std::filesystem::is_directory(*journal_dir_ / "datasets")) {
      for (auto& w : load_directory(*journal_dir_ / "datasets")) problems.push_back(w);
    }
    const auto dir = *journal_dir_ / "sessions";
    if (!std::filesystem::is_directory(dir)) return problems;
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir))
      if (e.path().extension() == ".jsonl") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      try {
        replay(f);
      } catch (const std::exception& e) {
        problems.push_back(f.string() + ": " + e.what());
      }
    }
    return problems;
  }

 private:
  void replay(const std::filesystem::path& file) {
    std::ifstream in(file);
    std::string line;
    std::shared_ptr<Session> s;
    for (std::size_t n = 1; std::getline(in, line); ++n) {
      if (trim(line).empty()) continue;
      const json ev = json::parse(line);
      const std::string kind = ev.at("event").get<std::string>();
      if (kind == "create") {
        if (s) throw std::runtime_error("second create event at line " + std::to_string(n));
        auto entry = datasets_.get(ev.at("dataset").get<std::string>());
        if (std::to_string(entry->hash) != ev.at("dataset_hash").get<std::string>())
          throw std::runtime_error("dataset '" + entry->name + "' changed since the session began");
        SessionParams p;
        p.id = ev.at("id").get<std::string>();
        p.dataset = entry->name;
        p.policy = *parse_policy(ev.at("policy").get<std::string>());
        p.budget = ev.at("budget").get<std::size_t>();
        p.seed = std::stoull(ev.at("seed").get<std::string>());
        p.simulate = ev.at("simulate").get<bool>();
        s = std::make_shared<Session>(p, entry, journal_dir_);
        s->start(false);
      } else if (!s) {
        throw std::runtime_error("event before create at line " + std::to_string(n));
      } else if (kind == "label") {
        s->submit(ev.at("row").get<std::size_t>(), ev.at("goals"), false);
      } else if (kind == "close") {
        s->close(false);
      } else {
        throw std::runtime_error("unknown event '" + kind + "' at line " + std::to_string(n));
      }
    }
    if (!s) throw std::runtime_error("empty journal");
    std::lock_guard lock(mutex_);
    sessions_[s->params().id] = s;
  }

  std::string new_id() {
    static std::mutex m;
    static std::mt19937_64 gen{std::random_device{}()};
    std::lock_guard lock(m);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(gen()));
    return buf;
  }

  std::optional<std::filesystem::path> journal_dir_;
  DatasetRegistry datasets_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
};

}  // namespace frugal::review
