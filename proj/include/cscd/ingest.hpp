#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <istream>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "json.hpp"

#include "cscd/detector.hpp"
#include "cscd/errors.hpp"
#include "cscd/thresholds.hpp"

// Observation input formats:
//   ndjson  {"t": 1, "stream": 7, "x": 0.31} per line
//   csv     header t,stream,x then one row per observation
//   wide    header t,<stream id>,<stream id>,.. then one row per time; empty cells are missing
// Blank lines and lines starting with '#' are ignored in the CSV forms.

namespace cscd {

enum class InputFormat { ndjson, csv, wide };

struct ObservationRow {
  std::int64_t t = 0;
  std::int64_t stream = 0;
  double x = 0.0;
  std::size_t line = 0;
};

inline InputFormat parse_format(const std::string& s) {
  if (s == "ndjson" || s == "jsonl") return InputFormat::ndjson;
  if (s == "csv") return InputFormat::csv;
  if (s == "wide") return InputFormat::wide;
  throw std::invalid_argument("unknown input format '" + s + "'");
}

class RowReader {
 public:
  /// With no format given, a leading '{' selects NDJSON, a "t,stream,x" header
  /// the long CSV form, and any other header the wide form.
  explicit RowReader(std::istream& in, std::optional<InputFormat> format = std::nullopt) : in_(in), format_(format) {}

  std::optional<ObservationRow> next() {
    while (pending_.empty()) {
      if (!read_line()) return std::nullopt;
      parse_line();
    }
    ObservationRow r = pending_.front();
    pending_.pop_front();
    return r;
  }

 private:
  bool read_line() {
    while (std::getline(in_, line_)) {
      ++line_no_;
      if (!line_.empty() && line_.back() == '\r') line_.pop_back();
      const auto first = line_.find_first_not_of(" \t");
      if (first == std::string::npos) continue;
      if (line_[first] == '#' && format_ != InputFormat::ndjson) continue;
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw data_error("row " + std::to_string(line_no_) + ": " + what);
  }

  std::int64_t parse_int(const std::string& s) const {
    std::size_t used = 0;
    std::int64_t v = 0;
    try {
      v = std::stoll(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size()) fail("expected an integer, got '" + s + "'");
    return v;
  }

  double parse_real(const std::string& s) const {
    try {
      const double v = detail::parse_double(s);
      if (!std::isfinite(v)) fail("non-finite observation");
      return v;
    } catch (const data_error&) {
      fail("expected a number, got '" + s + "'");
    }
  }

  void parse_line() {
    if (!format_) {
      const auto first = line_.find_first_not_of(" \t");
      if (line_[first] == '{') {
        format_ = InputFormat::ndjson;
      } else {
        format_ = line_ == "t,stream,x" ? InputFormat::csv : InputFormat::wide;
      }
    }
    switch (*format_) {
      case InputFormat::ndjson: parse_ndjson(); break;
      case InputFormat::csv: parse_csv(); break;
      case InputFormat::wide: parse_wide(); break;
    }
  }

  void parse_ndjson() {
    try {
      const auto j = nlohmann::json::parse(line_);
      const auto& x = j.at("x");
      if (!x.is_number()) fail("field x is not a number");
      ObservationRow r{j.at("t").get<std::int64_t>(), j.at("stream").get<std::int64_t>(), x.get<double>(), line_no_};
      pending_.push_back(r);
    } catch (const nlohmann::json::exception& e) {
      fail(std::string("malformed JSON row: ") + e.what());
    }
  }

  void parse_csv() {
    if (!header_seen_) {
      if (line_ != "t,stream,x") fail("expected header t,stream,x");
      header_seen_ = true;
      return;
    }
    const auto cells = detail::split(line_, ',');
    if (cells.size() != 3) fail("expected 3 fields");
    pending_.push_back(ObservationRow{parse_int(cells[0]), parse_int(cells[1]), parse_real(cells[2]), line_no_});
  }

  void parse_wide() {
    const auto cells = detail::split(line_, ',');
    if (!header_seen_) {
      if (cells.size() < 2 || cells[0] != "t") fail("wide header must be t,<stream ids>");
      for (std::size_t i = 1; i < cells.size(); ++i) wide_ids_.push_back(parse_int(cells[i]));
      header_seen_ = true;
      return;
    }
    if (cells.size() != wide_ids_.size() + 1) fail("expected " + std::to_string(wide_ids_.size() + 1) + " fields");
    const std::int64_t t = parse_int(cells[0]);
    for (std::size_t i = 1; i < cells.size(); ++i) {
      if (cells[i].empty()) continue;
      pending_.push_back(ObservationRow{t, wide_ids_[i - 1], parse_real(cells[i]), line_no_});
    }
  }

  std::istream& in_;
  std::optional<InputFormat> format_;
  std::string line_;
  std::size_t line_no_ = 0;
  bool header_seen_ = false;
  std::vector<std::int64_t> wide_ids_;
  std::deque<ObservationRow> pending_;
};

/// All observations of one time index.
struct Batch {
  std::int64_t t = 0;
  std::vector<ObservationRow> rows;
};

/// Groups rows by time, rejecting decreasing times and repeated (t, stream) pairs.
class BatchReader {
 public:
  explicit BatchReader(RowReader& rows) : rows_(rows) {}

  std::optional<Batch> next() {
    if (!lookahead_) lookahead_ = rows_.next();
    if (!lookahead_) return std::nullopt;
    Batch b;
    b.t = lookahead_->t;
    if (last_t_ && b.t < *last_t_) {
      throw data_error("row " + std::to_string(lookahead_->line) + ": input not sorted by time");
    }
    std::unordered_set<std::int64_t> seen;
    while (lookahead_ && lookahead_->t == b.t) {
      if (!seen.insert(lookahead_->stream).second) {
        throw data_error("row " + std::to_string(lookahead_->line) + ": duplicate observation for stream " +
                         std::to_string(lookahead_->stream) + " at t=" + std::to_string(b.t));
      }
      b.rows.push_back(*lookahead_);
      lookahead_ = rows_.next();
    }
    if (lookahead_ && lookahead_->t < b.t) {
      throw data_error("row " + std::to_string(lookahead_->line) + ": input not sorted by time");
    }
    last_t_ = b.t;
    return b;
  }

 private:
  RowReader& rows_;
  std::optional<ObservationRow> lookahead_;
  std::optional<std::int64_t> last_t_;
};

/// Feeds one batch at time det.time() + 1 into the detector. Rows for streams
/// that are no longer active are discarded; every active stream needs a row.
inline const StepReport& feed_batch(Detector& det, const std::unordered_map<std::int64_t, std::size_t>& index_of,
                                    const std::vector<std::int64_t>& labels, const Batch& b) {
  const std::int64_t expected = det.time() + 1;
  const std::size_t first_line = b.rows.empty() ? 0 : b.rows.front().line;
  if (b.t != expected) {
    throw data_error("row " + std::to_string(first_line) + ": time gap, expected t=" + std::to_string(expected) +
                     " but found t=" + std::to_string(b.t));
  }
  std::vector<std::optional<double>> by_index(det.size());
  for (const auto& r : b.rows) {
    const auto it = index_of.find(r.stream);
    if (it == index_of.end()) {
      throw data_error("row " + std::to_string(r.line) + ": unknown stream id " + std::to_string(r.stream));
    }
    by_index[it->second] = r.x;
  }
  det.select();
  const auto& active = det.active();
  std::vector<double> x(active.size());
  for (std::size_t i = 0; i < active.size(); ++i) {
    const auto& v = by_index[active[i]];
    if (!v) {
      throw data_error("row " + std::to_string(first_line) + ": missing observation for active stream " +
                       std::to_string(labels[active[i]]) + " at t=" + std::to_string(b.t));
    }
    x[i] = *v;
  }
  try {
    det.observe(x);
  } catch (const std::invalid_argument& e) {
    throw data_error("t=" + std::to_string(b.t) + ": " + e.what());
  }
  return det.last_report();
}

}  // namespace cscd
