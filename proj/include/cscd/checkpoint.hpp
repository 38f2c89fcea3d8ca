#pragma once

#include <boost/crc.hpp>

#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "cscd/detector.hpp"
#include "cscd/errors.hpp"
#include "cscd/numeric.hpp"

namespace cscd {

// Checkpoint layout:
//   line 1: "cscd-checkpoint <format_version> <crc32 of the remaining bytes, 8 hex digits>"
//   rest:   JSON document. Reals are hexadecimal floating point strings.

inline constexpr int kCheckpointVersion = 1;

namespace detail {
inline std::uint32_t crc32(std::string_view bytes) {
  boost::crc_32_type crc;
  crc.process_bytes(bytes.data(), bytes.size());
  return crc.checksum();
}

inline nlohmann::json hex_array(const std::vector<double>& xs) {
  auto a = nlohmann::json::array();
  for (double x : xs) a.push_back(to_hex(x));
  return a;
}

inline std::vector<double> from_hex_array(const nlohmann::json& a) {
  std::vector<double> xs;
  for (const auto& v : a) xs.push_back(from_hex(v.get<std::string>()));
  return xs;
}
}  // namespace detail

/// Serialises a detector between steps. `labels` are optional external stream ids.
inline std::string checkpoint(const Detector& detector, const std::vector<std::int64_t>& labels = {}) {
  const DetectorSnapshot s = detector.snapshot();
  if (!labels.empty() && labels.size() != s.posterior.size()) throw std::invalid_argument("label count mismatch");
  nlohmann::json doc;
  doc["format_version"] = kCheckpointVersion;
  doc["t"] = s.t;
  doc["alpha"] = to_hex(s.alpha);
  doc["mode"] = to_string(s.mode);
  doc["model_fingerprint"] = s.model_fingerprint;
  auto streams = nlohmann::json::array();
  for (std::size_t k = 0; k < s.posterior.size(); ++k) {
    nlohmann::json r;
    r["index"] = k;
    if (!labels.empty()) r["label"] = labels[k];
    r["log_odds"] = to_hex(s.posterior.log_odds[k]);
    r["frozen"] = s.posterior.frozen[k] != 0;
    r["T"] = s.trace.stop[k].time;
    r["censored"] = s.trace.stop[k].censored;
    streams.push_back(std::move(r));
  }
  doc["streams"] = std::move(streams);
  doc["active"] = s.active;
  doc["trace_active_sizes"] = s.trace.active_sizes;
  doc["trace_lfnr"] = detail::hex_array(s.trace.lfnr);
  auto engine = nlohmann::json::array();
  for (const auto& row : s.engine_state) engine.push_back(detail::hex_array(row));
  doc["engine_state"] = std::move(engine);
  doc["log_rho"] = to_hex(s.log_rho);

  const std::string body = doc.dump(1) + "\n";
  char head[64];
  std::snprintf(head, sizeof head, "cscd-checkpoint %d %08x\n", kCheckpointVersion,
                static_cast<unsigned>(detail::crc32(body)));
  return head + body;
}

struct RestoredCheckpoint {
  DetectorSnapshot snapshot;
  std::vector<std::int64_t> labels;
};

inline RestoredCheckpoint parse_checkpoint(std::string_view blob) {
  const auto nl = blob.find('\n');
  if (nl == std::string_view::npos) throw checkpoint_error("checkpoint header missing");
  const std::string header(blob.substr(0, nl));
  const std::string_view body = blob.substr(nl + 1);
  int version = 0;
  unsigned crc = 0;
  if (std::sscanf(header.c_str(), "cscd-checkpoint %d %8x", &version, &crc) != 2) {
    throw checkpoint_error("checkpoint header malformed");
  }
  if (version != kCheckpointVersion) {
    throw checkpoint_error("checkpoint format version " + std::to_string(version) + " is not supported");
  }
  if (detail::crc32(body) != crc) throw checkpoint_error("checkpoint checksum mismatch (corrupted or truncated)");

  RestoredCheckpoint out;
  try {
    const auto doc = nlohmann::json::parse(body);
    if (doc.at("format_version").get<int>() != version) throw checkpoint_error("checkpoint version fields disagree");
    DetectorSnapshot& s = out.snapshot;
    s.t = doc.at("t").get<std::int64_t>();
    s.alpha = from_hex(doc.at("alpha").get<std::string>());
    s.mode = parse_mode(doc.at("mode").get<std::string>());
    s.model_fingerprint = doc.at("model_fingerprint").get<std::string>();
    const auto& streams = doc.at("streams");
    s.posterior = PosteriorState(streams.size());
    s.posterior.t = s.t;
    s.trace.stop.resize(streams.size());
    for (std::size_t k = 0; k < streams.size(); ++k) {
      const auto& r = streams[k];
      if (r.at("index").get<std::size_t>() != k) throw checkpoint_error("stream records out of order");
      if (r.contains("label")) out.labels.push_back(r.at("label").get<std::int64_t>());
      s.posterior.log_odds[k] = from_hex(r.at("log_odds").get<std::string>());
      s.posterior.frozen[k] = r.at("frozen").get<bool>() ? 1 : 0;
      s.trace.stop[k] = StopTime{r.at("T").get<std::int64_t>(), r.at("censored").get<bool>()};
    }
    if (!out.labels.empty() && out.labels.size() != streams.size()) throw checkpoint_error("partial stream labels");
    s.active = doc.at("active").get<std::vector<std::size_t>>();
    s.trace.active_sizes = doc.at("trace_active_sizes").get<std::vector<std::size_t>>();
    s.trace.lfnr = detail::from_hex_array(doc.at("trace_lfnr"));
    for (const auto& row : doc.at("engine_state")) s.engine_state.push_back(detail::from_hex_array(row));
    s.log_rho = from_hex(doc.at("log_rho").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw checkpoint_error(std::string("checkpoint body malformed: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw checkpoint_error(std::string("checkpoint body malformed: ") + e.what());
  }
  return out;
}

inline Detector restore(std::string_view blob, EnsembleModel model, DetectorConfig config) {
  const auto r = parse_checkpoint(blob);
  try {
    return Detector::from_snapshot(std::move(model), std::move(config), r.snapshot);
  } catch (const std::invalid_argument& e) {
    throw checkpoint_error(e.what());
  }
}

}  // namespace cscd
