#pragma once

// The labeling boundary. Algorithms see rows whose goal cells are missing
// and must go through an Oracle to learn them; every first labeling of a
// row id is counted.

#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "frugal/table.hpp"

namespace frugal {

enum class OracleKind { cached, interactive };

inline const char* to_string(OracleKind k) { return k == OracleKind::cached ? "cached" : "interactive"; }

struct LabeledRow {
  Row row;
  OracleKind source = OracleKind::cached;
};

// Model scores attached to an acquisition request.
struct Scores {
  double best = 0;  // log-likelihood under the "best" class
  double rest = 0;  // log-likelihood under the "rest" class
  double score = 0; // policy desirability

  friend bool operator==(const Scores&, const Scores&) = default;
};

// What the caller knows about why a row is being labeled.
struct LabelContext {
  bool seed = false;
  std::optional<Scores> scores;
  std::size_t labels_used = 0;
  std::size_t budget = 0;
};

class OracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised by an interactive oracle whose session was closed mid-request.
class SessionTerminated : public OracleError {
 public:
  SessionTerminated() : OracleError("session terminated") {}
};

class Oracle {
 public:
  explicit Oracle(std::shared_ptr<const Schema> schema) : schema_(std::move(schema)) {}
  virtual ~Oracle() = default;
  Oracle(const Oracle&) = delete;
  Oracle& operator=(const Oracle&) = delete;

  virtual OracleKind kind() const = 0;

  // Fills the row's goal cells. Repeat requests for the same row id return
  // the first answer and do not count again.
  LabeledRow label(const Row& row, const LabelContext& ctx = {}) {
    {
      std::lock_guard lock(cache_mutex_);
      if (auto it = cache_.find(row.id); it != cache_.end()) return {it->second, kind()};
    }
    std::vector<double> goals = fetch(row, ctx);
    const auto& y = schema_->y;
    if (goals.size() != y.size())
      throw OracleError("oracle returned " + std::to_string(goals.size()) + " goals, expected " +
                        std::to_string(y.size()));
    Row out = row;
    for (std::size_t i = 0; i < y.size(); ++i) out.cells[y[i]] = goals[i];
    {
      std::lock_guard lock(cache_mutex_);
      auto [it, inserted] = cache_.emplace(row.id, out);
      if (inserted) ++count_;
      return {it->second, kind()};
    }
  }

  std::size_t label_count() const { return count_.load(); }

  bool is_labeled(std::size_t id) const {
    std::lock_guard lock(cache_mutex_);
    return cache_.contains(id);
  }

  const Schema& schema() const { return *schema_; }

 protected:
  virtual std::vector<double> fetch(const Row& row, const LabelContext& ctx) = 0;

 private:
  std::shared_ptr<const Schema> schema_;
  mutable std::mutex cache_mutex_;
  std::unordered_map<std::size_t, Row> cache_;
  std::atomic<std::size_t> count_{0};
};

// Simulation oracle: looks goals up in a fully labeled dataset by row id.
class CachedOracle : public Oracle {
 public:
  // `truth` must outlive the oracle; its row ids are the lookup keys.
  explicit CachedOracle(const Dataset& truth) : Oracle(truth.schema_ptr()), truth_(&truth) {
    for (std::size_t i = 0; i < truth.rows().size(); ++i) index_.emplace(truth.rows()[i].id, i);
  }

  OracleKind kind() const override { return OracleKind::cached; }

 protected:
  std::vector<double> fetch(const Row& row, const LabelContext&) override {
    auto it = index_.find(row.id);
    if (it == index_.end()) throw OracleError("cached oracle: unknown row " + std::to_string(row.id));
    const Row& known = truth_->rows()[it->second];
    std::vector<double> goals;
    for (std::size_t p : schema().y) {
      if (is_missing(known.cells[p]))
        throw OracleError("cached oracle: row " + std::to_string(row.id) + " has no stored goals");
      goals.push_back(std::get<double>(known.cells[p]));
    }
    return goals;
  }

 private:
  const Dataset* truth_;
  std::unordered_map<std::size_t, std::size_t> index_;
};

// Human-backed oracle. The search thread blocks inside label() until some
// other thread answers the posted request, or the oracle is closed. At most
// one request is outstanding.
class InteractiveOracle : public Oracle {
 public:
  struct Request {
    Row row;
    LabelContext context;
    std::size_t serial = 0;
  };

  using Oracle::Oracle;

  OracleKind kind() const override { return OracleKind::interactive; }

  // Snapshot of the outstanding request, if any.
  std::optional<Request> pending() const {
    std::lock_guard lock(mutex_);
    return pending_;
  }

  // Waits until a request is outstanding, or the producer has finished, or
  // the oracle is closed. Returns the outstanding request if there is one.
  std::optional<Request> wait_for_request() const {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return (pending_ && !answer_) || done_ || closed_; });
    if (pending_ && !answer_) return pending_;
    return std::nullopt;
  }

  enum class Answer { accepted, conflict, idle, closed };

  // Supplies goals for the outstanding request if its row id matches.
  Answer answer(std::size_t row_id, std::vector<double> goals) {
    std::lock_guard lock(mutex_);
    if (closed_) return Answer::closed;
    if (!pending_ || answer_) return Answer::idle;
    if (pending_->row.id != row_id) return Answer::conflict;
    answer_ = std::move(goals);
    cv_.notify_all();
    return Answer::accepted;
  }

  // Wakes the blocked producer with SessionTerminated.
  void close() {
    std::lock_guard lock(mutex_);
    closed_ = true;
    cv_.notify_all();
  }

  // Called by the producer when it will make no more requests.
  void mark_done() {
    std::lock_guard lock(mutex_);
    done_ = true;
    cv_.notify_all();
  }

  bool closed() const {
    std::lock_guard lock(mutex_);
    return closed_;
  }

 protected:
  std::vector<double> fetch(const Row& row, const LabelContext& ctx) override {
    std::unique_lock lock(mutex_);
    if (closed_) throw SessionTerminated();
    pending_ = Request{row, ctx, ++serial_};
    answer_.reset();
    cv_.notify_all();
    cv_.wait(lock, [&] { return answer_.has_value() || closed_; });
    if (!answer_) {
      pending_.reset();
      throw SessionTerminated();
    }
    std::vector<double> goals = std::move(*answer_);
    answer_.reset();
    pending_.reset();
    return goals;
  }

 private:
  mutable std::mutex mutex_;
  mutable std::condition_variable cv_;
  std::optional<Request> pending_;
  std::optional<std::vector<double>> answer_;
  std::size_t serial_ = 0;
  bool closed_ = false;
  bool done_ = false;
};

}  // namespace frugal
