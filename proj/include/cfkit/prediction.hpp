#pragma once

// PredictionSet: aligned (user, movie, value) rows for one target split,
// produced by every model family and consumed by evaluation and blending.

#include <fstream>
#include <string>
#include <vector>

#include "cfkit/dataset.hpp"
#include "json.hpp"

namespace cfkit {

struct PredRow {
  uint32_t user;
  uint32_t movie;
  double value;
};

struct PredictionSet {
  std::string model_id;
  std::string split_id;
  std::vector<PredRow> rows;
  size_t fallbacks = 0;  // rows that fell back to a default prediction
  bool clipped = false;
};

// Target pairs of a split, in the split's canonical (by-user) order.
inline std::vector<std::pair<uint32_t, uint32_t>> pairs_of(const RatingsDataset& ds) {
  std::vector<std::pair<uint32_t, uint32_t>> pairs;
  pairs.reserve(ds.size());
  for (const Rating& r : ds.ratings()) pairs.emplace_back(r.user, r.movie);
  return pairs;
}

// The split's true ratings as a PredictionSet (for evaluation alignment).
inline PredictionSet truth_of(const RatingsDataset& ds, const std::string& split_id = "") {
  PredictionSet out;
  out.model_id = "truth";
  out.split_id = split_id;
  out.rows.reserve(ds.size());
  for (const Rating& r : ds.ratings()) out.rows.push_back({r.user, r.movie, r.value});
  return out;
}

inline void write_prediction_csv(const PredictionSet& ps, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "user,movie,prediction\n";
  char buf[64];
  for (const PredRow& r : ps.rows) {
    std::snprintf(buf, sizeof(buf), "%u,%u,%.17g\n", r.user, r.movie, r.value);
    out << buf;
  }
  if (!out) throw std::runtime_error("write failed: " + path);
  nlohmann::json side{{"schema_version", 1},
                      {"model_id", ps.model_id},
                      {"split_id", ps.split_id},
                      {"clipped", ps.clipped},
                      {"fallbacks", ps.fallbacks}};
  std::ofstream sc(path + ".json");
  sc << side.dump(2) << '\n';
}

inline PredictionSet read_prediction_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  PredictionSet ps;
  std::string line;
  uint32_t lineno = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view sv = detail::trim(line);
    if (sv.empty()) continue;
    auto fields = detail::split_csv(sv);
    if (first) {
      first = false;
      int64_t probe;
      if (!detail::parse_i64(fields[0], probe)) continue;  // header
    }
    int64_t u, m;
    double v;
    if (fields.size() != 3 || !detail::parse_i64(fields[0], u) ||
        !detail::parse_i64(fields[1], m) || !detail::parse_f64(fields[2], v))
      throw std::runtime_error("malformed prediction row at " + path + ":" +
                               std::to_string(lineno));
    ps.rows.push_back({static_cast<uint32_t>(u), static_cast<uint32_t>(m), v});
  }
  std::ifstream sc(path + ".json");
  if (sc) {
    nlohmann::json side = nlohmann::json::parse(sc);
    ps.model_id = side.value("model_id", "");
    ps.split_id = side.value("split_id", "");
    ps.clipped = side.value("clipped", false);
    ps.fallbacks = side.value("fallbacks", size_t{0});
  }
  return ps;
}

}  // namespace cfkit
