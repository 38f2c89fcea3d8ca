#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cscd/errors.hpp"
#include "cscd/numeric.hpp"

namespace cscd {

/// Per-time deactivation thresholds lambda_t, t = 0, 1, .., with lambda_0 = 1,
/// and the calibration run that produced them.
struct ThresholdTable {
  std::vector<double> lambda;
  std::vector<double> survival_frac;
  std::vector<double> retained_mean;

  double theta = 0.0;
  double alpha = 0.0;
  std::string model_fingerprint;
  std::uint64_t n_streams = 0;
  std::uint64_t seed = 0;

  std::int64_t horizon() const { return static_cast<std::int64_t>(lambda.size()) - 1; }

  double at(std::int64_t t) const {
    if (t < 0 || t >= static_cast<std::int64_t>(lambda.size())) {
      throw std::out_of_range("threshold table exhausted at t=" + std::to_string(t));
    }
    return lambda[static_cast<std::size_t>(t)];
  }
};

inline void write_threshold_csv(std::ostream& out, const ThresholdTable& table) {
  out << "# cscd threshold table\n";
  out << "# theta=" << to_decimal(table.theta) << " alpha=" << to_decimal(table.alpha) << " n=" << table.n_streams
      << " seed=" << table.seed << "\n";
  out << "# model=" << table.model_fingerprint << "\n";
  out << "t,lambda,survival_frac,retained_mean\n";
  for (std::size_t t = 0; t < table.lambda.size(); ++t) {
    out << t << ',' << to_decimal(table.lambda[t]) << ',' << to_decimal(table.survival_frac.at(t)) << ','
        << to_decimal(table.retained_mean.at(t)) << '\n';
  }
}

namespace detail {
inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) parts.push_back(cur);
  if (!s.empty() && s.back() == sep) parts.emplace_back();
  return parts;
}

inline double parse_double(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw data_error("not a number: '" + s + "'");
  }
  if (used != s.size()) throw data_error("not a number: '" + s + "'");
  return v;
}
}  // namespace detail

inline ThresholdTable read_threshold_csv(std::istream& in) {
  ThresholdTable table;
  std::map<std::string, std::string> meta;
  std::string line;
  bool header = false;
  std::int64_t expected_t = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      std::istringstream fields(line.substr(1));
      std::string kv;
      while (fields >> kv) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) continue;
        // fingerprints contain '=' but never spaces
        meta[kv.substr(0, eq)] = kv.substr(eq + 1);
      }
      continue;
    }
    if (!header) {
      if (line != "t,lambda,survival_frac,retained_mean") throw data_error("unexpected threshold table header");
      header = true;
      continue;
    }
    const auto cols = detail::split(line, ',');
    if (cols.size() != 4) throw data_error("threshold row needs 4 columns: " + line);
    if (std::stoll(cols[0]) != expected_t) throw data_error("threshold rows must be consecutive from t=0");
    ++expected_t;
    const double lambda = detail::parse_double(cols[1]);
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw data_error("threshold outside [0,1]");
    table.lambda.push_back(lambda);
    table.survival_frac.push_back(detail::parse_double(cols[2]));
    table.retained_mean.push_back(detail::parse_double(cols[3]));
  }
  if (table.lambda.empty()) throw data_error("threshold table has no rows");
  if (table.lambda.front() != 1.0) throw data_error("threshold table must start with lambda_0 = 1");
  try {
    table.theta = detail::parse_double(meta.at("theta"));
    table.alpha = detail::parse_double(meta.at("alpha"));
    table.n_streams = std::stoull(meta.at("n"));
    table.seed = std::stoull(meta.at("seed"));
    table.model_fingerprint = meta.at("model");
  } catch (const std::out_of_range&) {
    throw data_error("threshold table metadata incomplete");
  }
  return table;
}

}  // namespace cscd
