#pragma once

// Tabular examples: column roles from header names, incremental column
// summaries, mixed-type distance, distance-to-heaven and Bayes likelihoods.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <numeric>
#include <set>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

namespace frugal {

struct Missing {
  friend bool operator==(Missing, Missing) { return true; }
};
inline constexpr Missing missing{};

using Cell = std::variant<Missing, double, std::string>;

inline bool is_missing(const Cell& c) { return std::holds_alternative<Missing>(c); }

struct Row {
  std::size_t id = 0;  // position in the (possibly shuffled) source dataset
  std::vector<Cell> cells;

  friend bool operator==(const Row&, const Row&) = default;
};

enum class Goal { none, minimize, maximize };

// Header conventions: a leading uppercase letter marks a numeric column; a
// trailing '+' or '-' marks a goal to maximize or minimize.
struct ColumnName {
  std::string text;
  std::size_t position = 0;

  bool numeric() const {
    return !text.empty() && std::isupper(static_cast<unsigned char>(text.front()));
  }
  Goal goal() const {
    if (text.empty()) return Goal::none;
    if (text.back() == '+') return Goal::maximize;
    if (text.back() == '-') return Goal::minimize;
    return Goal::none;
  }
  bool is_goal() const { return goal() != Goal::none; }
};

struct Config {
  std::size_t start = 4;  // seed labels before acquisition begins
  std::size_t halt = 16;  // acquisitions after the seed batch
  double best = 0.5;      // best/rest split keeps n^best rows as "best"
  double upper = 0.8;     // after scoring, keep this fraction of the pool
  double m = 2;           // symbol smoothing
  double k = 1;           // class-prior smoothing
  double far = 0.95;      // "distant" means this quantile of distances
  std::size_t half = 256; // endpoint search sample size
  double stop = 0.5;      // sway leaves hold at most 2*N^stop rows

  void validate() const {
    auto fail = [](const char* what) { throw std::invalid_argument(what); };
    if (!(best > 0 && best <= 1)) fail("config: best must be in (0,1]");
    if (!(upper > 0 && upper <= 1)) fail("config: upper must be in (0,1]");
    if (!(far > 0 && far <= 1)) fail("config: far must be in (0,1]");
    if (half < 2) fail("config: half must be >= 2");
    if (start < 2) fail("config: start must be >= 2");
    if (m < 0 || k < 0) fail("config: m and k must be >= 0");
    if (!(stop > 0 && stop <= 1)) fail("config: stop must be in (0,1]");
  }
};

namespace detail {
inline constexpr double kLikeEpsilon = 1e-64;
inline constexpr double kFlatRange = 1e-32;
}  // namespace detail

class NumSummary {
 public:
  NumSummary() = default;
  NumSummary(std::size_t position, Goal goal) : position_(position), goal_(goal) {}

  // Rebuild from stored statistics; m2 is the sum of squared deviations.
  static NumSummary from_stats(std::size_t position, Goal goal, std::size_t n, double mu,
                               double m2, double lo, double hi) {
    NumSummary s(position, goal);
    s.n_ = n;
    s.mu_ = mu;
    s.m2_ = m2;
    s.lo_ = lo;
    s.hi_ = hi;
    return s;
  }

  void add(double v) {
    ++n_;
    const double delta = v - mu_;
    mu_ += delta / static_cast<double>(n_);
    m2_ += delta * (v - mu_);
    lo_ = std::min(lo_, v);
    hi_ = std::max(hi_, v);
  }

  std::size_t position() const { return position_; }
  Goal goal() const { return goal_; }
  std::size_t n() const { return n_; }
  double mu() const { return mu_; }
  double m2() const { return m2_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  double sd() const {
    return n_ < 2 ? 0.0 : std::sqrt(std::max(0.0, m2_) / static_cast<double>(n_ - 1));
  }
  double heaven() const { return goal_ == Goal::maximize ? 1.0 : 0.0; }

  double norm(double v) const {
    const double range = hi_ - lo_;
    if (!(range >= detail::kFlatRange)) return 0.0;
    return std::clamp((v - lo_) / range, 0.0, 1.0);
  }

  double like(double v) const {
    const double s = sd();
    return std::exp(-(v - mu_) * (v - mu_) / (2 * s * s + detail::kLikeEpsilon)) /
           ((s + detail::kLikeEpsilon) * std::sqrt(2 * std::numbers::pi));
  }

  // log(like(v)) evaluated without the exp, so it stays finite when the
  // density underflows (sd = 0 and v != mu).
  double log_like(double v) const {
    const double s = sd();
    return -(v - mu_) * (v - mu_) / (2 * s * s + detail::kLikeEpsilon) -
           std::log((s + detail::kLikeEpsilon) * std::sqrt(2 * std::numbers::pi));
  }

  // Missing sides take whichever extreme maximizes the gap.
  double dist(const Cell& a, const Cell& b) const {
    const bool ma = is_missing(a), mb = is_missing(b);
    if (ma && mb) return 1.0;
    double x = ma ? 0.0 : norm(std::get<double>(a));
    double y = mb ? 0.0 : norm(std::get<double>(b));
    if (ma) x = y < 0.5 ? 1.0 : 0.0;
    if (mb) y = x < 0.5 ? 1.0 : 0.0;
    return std::abs(x - y);
  }

 private:
  std::size_t position_ = 0;
  Goal goal_ = Goal::none;
  std::size_t n_ = 0;
  double mu_ = 0;
  double m2_ = 0;
  double lo_ = std::numeric_limits<double>::infinity();
  double hi_ = -std::numeric_limits<double>::infinity();
};

class SymSummary {
 public:
  SymSummary() = default;
  explicit SymSummary(std::size_t position) : position_(position) {}

  void add(const std::string& v, std::size_t times = 1) {
    n_ += times;
    counts_[v] += times;
  }

  std::size_t position() const { return position_; }
  std::size_t n() const { return n_; }
  const std::map<std::string, std::size_t>& counts() const { return counts_; }
  std::size_t count(const std::string& v) const {
    auto it = counts_.find(v);
    return it == counts_.end() ? 0 : it->second;
  }

  double like(const std::string& v, double m, double prior) const {
    return (static_cast<double>(count(v)) + m * prior) / (static_cast<double>(n_) + m);
  }

  double dist(const Cell& a, const Cell& b) const {
    if (is_missing(a) || is_missing(b)) return 1.0;
    return std::get<std::string>(a) == std::get<std::string>(b) ? 0.0 : 1.0;
  }

 private:
  std::size_t position_ = 0;
  std::size_t n_ = 0;
  std::map<std::string, std::size_t> counts_;
};

using ColumnSummary = std::variant<NumSummary, SymSummary>;

inline std::size_t position_of(const ColumnSummary& col) {
  return std::visit([](const auto& c) { return c.position(); }, col);
}

struct Schema {
  std::vector<ColumnName> columns;
  std::vector<std::size_t> x;  // independent column positions
  std::vector<std::size_t> y;  // goal column positions

  std::size_t arity() const { return columns.size(); }
};

// Assigns numeric/symbolic and independent/goal roles.
inline std::shared_ptr<const Schema> parse_header(std::span<const std::string> names) {
  if (names.empty()) throw std::invalid_argument("header: no columns");
  auto schema = std::make_shared<Schema>();
  std::set<std::string> seen;
  for (std::size_t i = 0; i < names.size(); ++i) {
    ColumnName col{names[i], i};
    if (col.text.empty()) throw std::invalid_argument("header: empty column name");
    if (!seen.insert(col.text).second)
      throw std::invalid_argument("header: duplicate column '" + col.text + "'");
    if (col.is_goal() && !col.numeric())
      throw std::invalid_argument("header: goal column '" + col.text + "' must be numeric");
    (col.is_goal() ? schema->y : schema->x).push_back(i);
    schema->columns.push_back(std::move(col));
  }
  return schema;
}

inline std::string to_text(const Cell& c) {
  if (is_missing(c)) return "?";
  if (const auto* s = std::get_if<std::string>(&c)) return *s;
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, std::get<double>(c));
  return std::string(buf, end);
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline std::optional<double> parse_number(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty() || !std::isfinite(v))
    return std::nullopt;
  return v;
}

class Dataset {
 public:
  explicit Dataset(std::shared_ptr<const Schema> schema) : schema_(std::move(schema)) {
    for (std::size_t pos : schema_->x) {
      if (schema_->columns[pos].numeric())
        x_.emplace_back(NumSummary(pos, Goal::none));
      else
        x_.emplace_back(SymSummary(pos));
    }
    for (std::size_t pos : schema_->y) y_.emplace_back(pos, schema_->columns[pos].goal());
  }

  static Dataset with_header(const std::vector<std::string>& names) {
    return Dataset(parse_header(names));
  }

  const Schema& schema() const { return *schema_; }
  const std::shared_ptr<const Schema>& schema_ptr() const { return schema_; }
  const std::vector<Row>& rows() const { return rows_; }
  std::size_t size() const { return rows_.size(); }
  const std::vector<ColumnSummary>& x() const { return x_; }
  const std::vector<NumSummary>& y() const { return y_; }

  void add(Row row) {
    check_row(row);
    for (auto& col : x_) {
      const Cell& c = row.cells[position_of(col)];
      if (is_missing(c)) continue;
      std::visit(
          [&](auto& s) {
            if constexpr (std::is_same_v<std::decay_t<decltype(s)>, NumSummary>)
              s.add(std::get<double>(c));
            else
              s.add(std::get<std::string>(c));
          },
          col);
    }
    for (auto& col : y_) {
      const Cell& c = row.cells[col.position()];
      if (!is_missing(c)) col.add(std::get<double>(c));
    }
    rows_.push_back(std::move(row));
  }

  // Same header, fresh summaries over `rows` only. With `order`, rows are
  // sorted ascending by d2h under the new summaries (stable on input order).
  Dataset clone(std::vector<Row> rows, bool order = false) const {
    Dataset out(schema_);
    out.rows_.reserve(rows.size());
    for (auto& r : rows) out.add(std::move(r));
    if (order) out.sort_by_d2h();
    return out;
  }

  void sort_by_d2h() {
    std::vector<double> keys(rows_.size());
    for (std::size_t i = 0; i < rows_.size(); ++i) keys[i] = d2h(rows_[i]);
    std::vector<std::size_t> idx(rows_.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });
    std::vector<Row> sorted;
    sorted.reserve(rows_.size());
    for (std::size_t i : idx) sorted.push_back(std::move(rows_[i]));
    rows_ = std::move(sorted);
  }

  bool labeled(const Row& row) const {
    return std::none_of(schema_->y.begin(), schema_->y.end(),
                        [&](std::size_t p) { return is_missing(row.cells[p]); });
  }

  // Aha distance over independent columns, scaled into [0,1].
  double dist(const Row& a, const Row& b) const {
    if (x_.empty()) throw std::invalid_argument("dist: dataset has no independent columns");
    double sum = 0;
    for (const auto& col : x_) {
      const std::size_t p = position_of(col);
      const double d = std::visit([&](const auto& s) { return s.dist(a.cells[p], b.cells[p]); }, col);
      sum += d * d;
    }
    return std::sqrt(sum) / std::sqrt(static_cast<double>(x_.size()));
  }

  // Distance from a row's normalized goals to the ideal point, in [0,1].
  double d2h(const Row& row) const {
    if (y_.empty()) throw std::invalid_argument("d2h: dataset has no goal columns");
    double sum = 0;
    for (const auto& col : y_) {
      const Cell& c = row.cells.at(col.position());
      if (is_missing(c)) throw std::invalid_argument("d2h: row " + std::to_string(row.id) + " is unlabeled");
      const double gap = col.heaven() - col.norm(std::get<double>(c));
      sum += gap * gap;
    }
    return std::sqrt(sum) / std::sqrt(static_cast<double>(y_.size()));
  }

  double prior(std::size_t nall, std::size_t nh, const Config& cfg) const {
    return (static_cast<double>(rows_.size()) + cfg.k) /
           (static_cast<double>(nall) + cfg.k * static_cast<double>(nh));
  }

  // Log-likelihood that `row` belongs to this dataset, as one class out of
  // `nh` classes sharing `nall` rows. Missing cells contribute nothing.
  double loglike(const Row& row, std::size_t nall, std::size_t nh, const Config& cfg) const {
    const double p = prior(nall, nh, cfg);
    double out = std::log(p);
    for (const auto& col : x_) {
      const Cell& c = row.cells[position_of(col)];
      if (is_missing(c)) continue;
      if (const auto* num = std::get_if<NumSummary>(&col))
        out += num->log_like(std::get<double>(c));
      else
        out += std::log(std::get<SymSummary>(col).like(std::get<std::string>(c), cfg.m, p));
    }
    return out;
  }

  // `rows` sorted by distance to `row`, nearest first.
  std::vector<Row> near(const Row& row, std::span<const Row> rows) const {
    std::vector<double> keys(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) keys[i] = dist(row, rows[i]);
    std::vector<std::size_t> idx(rows.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });
    std::vector<Row> out;
    out.reserve(rows.size());
    for (std::size_t i : idx) out.push_back(rows[i]);
    return out;
  }

  // Copy of `row` with every goal cell set to missing.
  Row blind(const Row& row) const {
    Row out = row;
    for (std::size_t p : schema_->y) out.cells[p] = missing;
    return out;
  }

 private:
  void check_row(const Row& row) const {
    if (row.cells.size() != schema_->arity())
      throw std::invalid_argument("row " + std::to_string(row.id) + ": expected " +
                                  std::to_string(schema_->arity()) + " cells, got " +
                                  std::to_string(row.cells.size()));
    for (std::size_t i = 0; i < row.cells.size(); ++i) {
      const Cell& c = row.cells[i];
      if (is_missing(c)) continue;
      const bool numeric = schema_->columns[i].numeric();
      if (numeric != std::holds_alternative<double>(c))
        throw std::invalid_argument("row " + std::to_string(row.id) + ": column '" +
                                    schema_->columns[i].text + "' expects " +
                                    (numeric ? "a number" : "a symbol"));
    }
  }

  std::shared_ptr<const Schema> schema_;
  std::vector<Row> rows_;
  std::vector<ColumnSummary> x_;
  std::vector<NumSummary> y_;
};

// Converts one text field to a cell of the column's kind. Returns missing
// (and sets `bad`) when a numeric column holds unparseable text.
inline Cell parse_cell(std::string_view text, const ColumnName& col, bool* bad = nullptr) {
  text = trim(text);
  if (text == "?") return missing;
  if (!col.numeric()) return std::string(text);
  if (auto v = parse_number(text)) return *v;
  if (bad) *bad = true;
  return missing;
}

inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.emplace_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

// Comma-separated text: header line, then one row per line. Blank lines are
// skipped. Unparseable numbers become missing and are reported in `warnings`.
inline Dataset read_csv(std::istream& in, std::vector<std::string>* warnings = nullptr) {
  std::string line;
  std::size_t lineno = 0;
  std::optional<Dataset> data;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto fields = split_csv_line(line);
    if (!data) {
      data.emplace(parse_header(fields));
      continue;
    }
    const Schema& schema = data->schema();
    if (fields.size() != schema.arity())
      throw std::invalid_argument("line " + std::to_string(lineno) + ": expected " +
                                  std::to_string(schema.arity()) + " fields, got " +
                                  std::to_string(fields.size()));
    Row row{data->size(), {}};
    row.cells.reserve(fields.size());
    for (std::size_t i = 0; i < fields.size(); ++i) {
      bool bad = false;
      row.cells.push_back(parse_cell(fields[i], schema.columns[i], &bad));
      if (bad && warnings)
        warnings->push_back("line " + std::to_string(lineno) + ": '" + fields[i] +
                            "' is not a number in column " + schema.columns[i].text +
                            "; treated as missing");
    }
    data->add(std::move(row));
  }
  if (!data) throw std::invalid_argument("csv: no header line");
  return std::move(*data);
}

inline Dataset read_csv_text(const std::string& text, std::vector<std::string>* warnings = nullptr) {
  std::istringstream in(text);
  return read_csv(in, warnings);
}

inline Dataset load_csv(const std::string& path, std::vector<std::string>* warnings = nullptr) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_csv(in, warnings);
}

inline void write_csv(std::ostream& out, const Dataset& data) {
  const auto& cols = data.schema().columns;
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i].text;
  out << '\n';
  for (const auto& row : data.rows()) {
    for (std::size_t i = 0; i < row.cells.size(); ++i) out << (i ? "," : "") << to_text(row.cells[i]);
    out << '\n';
  }
}

}  // namespace frugal
