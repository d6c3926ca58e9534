#pragma once

// Sparse ratings store with dual (by-user, by-movie) indexing, parsers for
// the Netflix per-movie format and a portable triplet CSV, train/probe
// splitting, and a synthetic low-rank generator with planted truth.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cfkit/common.hpp"

namespace cfkit {

constexpr int32_t kNoDate = std::numeric_limits<int32_t>::min();

struct Rating {
  uint32_t user;
  uint32_t movie;
  float value;
  int32_t date = kNoDate;  // days since 1970-01-01, kNoDate when absent
};

// Days-from-civil-date (proleptic Gregorian), Hinnant's algorithm.
inline int32_t days_from_civil(int y, unsigned m, unsigned d) {
  y -= m <= 2;
  const int era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<int>(doe) - 719468;
}

namespace detail {

inline bool parse_i64(std::string_view s, int64_t& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [p, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && p == last;
}

inline bool parse_f64(std::string_view s, double& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [p, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && p == last && std::isfinite(out);
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  size_t start = 0;
  while (true) {
    size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return out;
}

// Accepts either an integer day count or an ISO date YYYY-MM-DD.
inline bool parse_date(std::string_view s, int32_t& out) {
  if (s.find('-') != std::string_view::npos && s.size() >= 8) {
    int64_t y, m, d;
    size_t p1 = s.find('-');
    size_t p2 = s.find('-', p1 + 1);
    if (p2 == std::string_view::npos) return false;
    if (!parse_i64(s.substr(0, p1), y) || !parse_i64(s.substr(p1 + 1, p2 - p1 - 1), m) ||
        !parse_i64(s.substr(p2 + 1), d))
      return false;
    if (m < 1 || m > 12 || d < 1 || d > 31) return false;
    out = days_from_civil(static_cast<int>(y), static_cast<unsigned>(m), static_cast<unsigned>(d));
    return true;
  }
  int64_t v;
  if (!parse_i64(s, v)) return false;
  out = static_cast<int32_t>(v);
  return true;
}

}  // namespace detail

// Immutable sparse triplet store. Ratings are kept once, sorted by
// (user, movie); the by-movie view is a permutation index over the same
// storage. Values are 4-byte floats so that residual and unclipped
// synthetic datasets (real-valued) share the representation.
class RatingsDataset {
 public:
  RatingsDataset() = default;

  // `triplets` use dense 0-based ids; throws on out-of-range ids or
  // duplicate (user, movie) pairs. `original_*_ids` default to identity.
  static RatingsDataset from_triplets(uint32_t num_users, uint32_t num_movies,
                                      std::vector<Rating> triplets, int k_levels = 5,
                                      std::vector<int64_t> original_user_ids = {},
                                      std::vector<int64_t> original_movie_ids = {}) {
    RatingsDataset ds;
    ds.num_users_ = num_users;
    ds.num_movies_ = num_movies;
    ds.k_levels_ = k_levels;
    ds.ratings_ = std::move(triplets);
    for (const Rating& r : ds.ratings_) {
      if (r.user >= num_users || r.movie >= num_movies)
        throw std::runtime_error("rating index out of range: user " + std::to_string(r.user) +
                                 ", movie " + std::to_string(r.movie));
    }
    std::sort(ds.ratings_.begin(), ds.ratings_.end(), [](const Rating& a, const Rating& b) {
      return a.user != b.user ? a.user < b.user : a.movie < b.movie;
    });
    for (size_t i = 1; i < ds.ratings_.size(); ++i) {
      if (ds.ratings_[i].user == ds.ratings_[i - 1].user &&
          ds.ratings_[i].movie == ds.ratings_[i - 1].movie)
        throw std::runtime_error("duplicate (user,movie) pair (" +
                                 std::to_string(ds.ratings_[i].user) + "," +
                                 std::to_string(ds.ratings_[i].movie) + ")");
    }
    if (original_user_ids.empty()) {
      original_user_ids.resize(num_users);
      for (uint32_t i = 0; i < num_users; ++i) original_user_ids[i] = i;
    }
    if (original_movie_ids.empty()) {
      original_movie_ids.resize(num_movies);
      for (uint32_t j = 0; j < num_movies; ++j) original_movie_ids[j] = j;
    }
    ds.user_ids_ = std::move(original_user_ids);
    ds.movie_ids_ = std::move(original_movie_ids);
    ds.build_indices();
    return ds;
  }

  uint32_t num_users() const { return num_users_; }
  uint32_t num_movies() const { return num_movies_; }
  int k_levels() const { return k_levels_; }
  size_t size() const { return ratings_.size(); }

  // All ratings, sorted by (user, movie).
  const std::vector<Rating>& ratings() const { return ratings_; }

  // J(i): the contiguous slice of ratings belonging to user i.
  std::span<const Rating> user_ratings(uint32_t i) const {
    return std::span<const Rating>(ratings_.data() + user_offsets_[i],
                                   user_offsets_[i + 1] - user_offsets_[i]);
  }

  // I(j): indices into ratings() for the entries of movie j, user-ascending.
  std::span<const uint32_t> movie_rating_indices(uint32_t j) const {
    return std::span<const uint32_t>(movie_perm_.data() + movie_offsets_[j],
                                     movie_offsets_[j + 1] - movie_offsets_[j]);
  }

  size_t user_count(uint32_t i) const { return user_offsets_[i + 1] - user_offsets_[i]; }
  size_t movie_count(uint32_t j) const { return movie_offsets_[j + 1] - movie_offsets_[j]; }

  const std::vector<int64_t>& user_ids() const { return user_ids_; }
  const std::vector<int64_t>& movie_ids() const { return movie_ids_; }

  std::optional<uint32_t> dense_user(int64_t original_id) const {
    auto it = user_lookup_.find(original_id);
    if (it == user_lookup_.end()) return std::nullopt;
    return it->second;
  }
  std::optional<uint32_t> dense_movie(int64_t original_id) const {
    auto it = movie_lookup_.find(original_id);
    if (it == movie_lookup_.end()) return std::nullopt;
    return it->second;
  }

  bool has_dates() const {
    for (const Rating& r : ratings_)
      if (r.date != kNoDate) return true;
    return false;
  }

  // Same structure with replaced values (aligned with ratings() order);
  // used to build residual datasets for downstream models.
  RatingsDataset with_values(const std::vector<double>& values) const {
    if (values.size() != ratings_.size())
      throw std::runtime_error("with_values: size mismatch");
    RatingsDataset ds = *this;
    for (size_t n = 0; n < values.size(); ++n)
      ds.ratings_[n].value = static_cast<float>(values[n]);
    return ds;
  }

 private:
  void build_indices() {
    user_offsets_.assign(num_users_ + 1, 0);
    for (const Rating& r : ratings_) ++user_offsets_[r.user + 1];
    for (uint32_t i = 0; i < num_users_; ++i) user_offsets_[i + 1] += user_offsets_[i];

    movie_offsets_.assign(num_movies_ + 1, 0);
    for (const Rating& r : ratings_) ++movie_offsets_[r.movie + 1];
    for (uint32_t j = 0; j < num_movies_; ++j) movie_offsets_[j + 1] += movie_offsets_[j];

    movie_perm_.resize(ratings_.size());
    std::vector<uint32_t> cursor(movie_offsets_.begin(), movie_offsets_.end() - 1);
    // ratings_ is (user, movie)-sorted, so each movie's slice comes out
    // user-ascending.
    for (uint32_t n = 0; n < ratings_.size(); ++n)
      movie_perm_[cursor[ratings_[n].movie]++] = n;

    user_lookup_.clear();
    for (uint32_t i = 0; i < num_users_; ++i) user_lookup_[user_ids_[i]] = i;
    movie_lookup_.clear();
    for (uint32_t j = 0; j < num_movies_; ++j) movie_lookup_[movie_ids_[j]] = j;
  }

  uint32_t num_users_ = 0;
  uint32_t num_movies_ = 0;
  int k_levels_ = 5;
  std::vector<Rating> ratings_;
  std::vector<uint32_t> user_offsets_;
  std::vector<uint32_t> movie_offsets_;
  std::vector<uint32_t> movie_perm_;
  std::vector<int64_t> user_ids_;
  std::vector<int64_t> movie_ids_;
  std::unordered_map<int64_t, uint32_t> user_lookup_;
  std::unordered_map<int64_t, uint32_t> movie_lookup_;
};

struct ParseOptions {
  int k_levels = 5;
  // Strict mode rejects values that are not integers in 1..K. Permissive
  // mode admits real-valued files (residual exports, unclipped synthetic).
  bool require_integral = true;
};

namespace detail {

struct RawTriplet {
  int64_t user;
  int64_t movie;
  double value;
  int32_t date;
  uint32_t line;
  uint32_t file;  // index into the source-file list
};

inline void check_value(double v, const ParseOptions& opt, const std::string& where) {
  if (v < 1.0 || v > opt.k_levels)
    throw std::runtime_error("rating " + std::to_string(v) + " outside 1.." +
                             std::to_string(opt.k_levels) + " at " + where);
  if (std::abs(v - std::round(v)) > 1e-9)
    throw std::runtime_error("non-integer rating " + std::to_string(v) + " at " + where);
}

// Dense ids are assigned in ascending original-id order, which makes the
// CSV round-trip reproduce identical dense indices.
inline RatingsDataset assemble(std::vector<RawTriplet>& raw,
                               const std::vector<std::string>& files,
                               const ParseOptions& opt) {
  if (raw.empty()) throw std::runtime_error("empty dataset");
  std::vector<int64_t> users, movies;
  users.reserve(raw.size());
  movies.reserve(raw.size());
  for (const auto& t : raw) {
    users.push_back(t.user);
    movies.push_back(t.movie);
  }
  std::sort(users.begin(), users.end());
  users.erase(std::unique(users.begin(), users.end()), users.end());
  std::sort(movies.begin(), movies.end());
  movies.erase(std::unique(movies.begin(), movies.end()), movies.end());

  std::unordered_map<int64_t, uint32_t> umap, mmap;
  for (uint32_t i = 0; i < users.size(); ++i) umap[users[i]] = i;
  for (uint32_t j = 0; j < movies.size(); ++j) mmap[movies[j]] = j;

  std::sort(raw.begin(), raw.end(), [&](const RawTriplet& a, const RawTriplet& b) {
    if (a.user != b.user) return a.user < b.user;
    return a.movie < b.movie;
  });
  for (size_t n = 1; n < raw.size(); ++n) {
    if (raw[n].user == raw[n - 1].user && raw[n].movie == raw[n - 1].movie)
      throw std::runtime_error("duplicate (user,movie) pair (" + std::to_string(raw[n].user) +
                               "," + std::to_string(raw[n].movie) + ") at " +
                               files[raw[n].file] + ":" + std::to_string(raw[n].line));
  }

  std::vector<Rating> triplets;
  triplets.reserve(raw.size());
  for (const auto& t : raw)
    triplets.push_back({umap[t.user], mmap[t.movie], static_cast<float>(t.value), t.date});
  const auto num_users = static_cast<uint32_t>(users.size());
  const auto num_movies = static_cast<uint32_t>(movies.size());
  return RatingsDataset::from_triplets(num_users, num_movies, std::move(triplets), opt.k_levels,
                                       std::move(users), std::move(movies));
}

}  // namespace detail

// Portable `user,movie,rating[,date]` CSV; a header row is auto-detected by
// a non-numeric first field.
inline RatingsDataset parse_triplet_csv(const std::string& path, const ParseOptions& opt = {}) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<detail::RawTriplet> raw;
  std::string line;
  uint32_t lineno = 0;
  bool first_content = true;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view sv = detail::trim(line);
    if (sv.empty()) continue;
    auto fields = detail::split_csv(sv);
    if (first_content) {
      first_content = false;
      int64_t probe;
      if (!detail::parse_i64(fields[0], probe)) continue;  // header row
    }
    const std::string where = path + ":" + std::to_string(lineno);
    if (fields.size() != 3 && fields.size() != 4)
      throw std::runtime_error("malformed line at " + where + ": '" + std::string(sv) + "'");
    int64_t u, m;
    double v;
    if (!detail::parse_i64(fields[0], u) || !detail::parse_i64(fields[1], m) ||
        !detail::parse_f64(fields[2], v))
      throw std::runtime_error("malformed line at " + where + ": '" + std::string(sv) + "'");
    if (opt.require_integral) detail::check_value(v, opt, where);
    int32_t date = kNoDate;
    if (fields.size() == 4 && !fields[3].empty()) {
      if (!detail::parse_date(fields[3], date))
        throw std::runtime_error("malformed date at " + where + ": '" + std::string(fields[3]) + "'");
    }
    raw.push_back({u, m, v, date, lineno, 0});
  }
  std::vector<std::string> files{path};
  return detail::assemble(raw, files, opt);
}

// Netflix per-movie text format: a `<MovieID>:` header line opens each
// movie section, followed by `UserID,Rating,Date` lines. A file may hold
// one or several sections.
inline RatingsDataset parse_netflix_movie_files(const std::string& directory_path,
                                                const ParseOptions& opt = {}) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(directory_path))
    throw std::runtime_error("not a directory: " + directory_path);
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(directory_path))
    if (entry.is_regular_file()) files.push_back(entry.path().string());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw std::runtime_error("no movie files in " + directory_path);

  std::vector<detail::RawTriplet> raw;
  for (uint32_t f = 0; f < files.size(); ++f) {
    std::ifstream in(files[f]);
    if (!in) throw std::runtime_error("cannot open " + files[f]);
    std::string line;
    uint32_t lineno = 0;
    int64_t current_movie = -1;
    while (std::getline(in, line)) {
      ++lineno;
      std::string_view sv = detail::trim(line);
      if (sv.empty()) continue;
      const std::string where = files[f] + ":" + std::to_string(lineno);
      if (sv.back() == ':') {
        int64_t id;
        if (!detail::parse_i64(sv.substr(0, sv.size() - 1), id) || id < 0)
          throw std::runtime_error("malformed movie header at " + where);
        current_movie = id;
        continue;
      }
      if (current_movie < 0)
        throw std::runtime_error("rating line before movie header at " + where);
      auto fields = detail::split_csv(sv);
      if (fields.size() != 2 && fields.size() != 3)
        throw std::runtime_error("malformed line at " + where + ": '" + std::string(sv) + "'");
      int64_t u;
      double v;
      if (!detail::parse_i64(fields[0], u) || !detail::parse_f64(fields[1], v))
        throw std::runtime_error("malformed line at " + where + ": '" + std::string(sv) + "'");
      detail::check_value(v, opt, where);
      int32_t date = kNoDate;
      if (fields.size() == 3 && !fields[2].empty()) {
        if (!detail::parse_date(fields[2], date))
          throw std::runtime_error("malformed date at " + where + ": '" +
                                   std::string(fields[2]) + "'");
      }
      raw.push_back({u, current_movie, v, date, lineno, f});
    }
  }
  return detail::assemble(raw, files, opt);
}

// Writes original ids and float-exact values; reparsing yields an
// identical dataset (same I, J, N, triplets, dense indexing).
inline void write_triplet_csv(const RatingsDataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  const bool dates = ds.has_dates();
  out << (dates ? "user,movie,rating,date\n" : "user,movie,rating\n");
  char buf[64];
  for (const Rating& r : ds.ratings()) {
    out << ds.user_ids()[r.user] << ',' << ds.movie_ids()[r.movie] << ',';
    std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(r.value));
    out << buf;
    if (dates) {
      out << ',';
      if (r.date != kNoDate) out << r.date;
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

struct SplitSpec {
  enum class Mode { holdout_fraction, explicit_list };
  Mode mode = Mode::holdout_fraction;
  double fraction = 0.1;
  std::vector<std::pair<uint32_t, uint32_t>> pairs;  // dense (user, movie)
  uint64_t seed = 0;
};

// Partition into (train, probe). Both halves keep the parent's id universe
// (num_users/num_movies and id maps), matching the probe-set discipline:
// a user may end up with no training ratings.
inline std::pair<RatingsDataset, RatingsDataset> split(const RatingsDataset& ds,
                                                       const SplitSpec& spec) {
  const size_t n = ds.size();
  std::vector<char> in_probe(n, 0);
  if (spec.mode == SplitSpec::Mode::holdout_fraction) {
    if (!(spec.fraction > 0.0 && spec.fraction < 1.0))
      throw std::runtime_error("holdout fraction must be in (0,1)");
    size_t n_probe = static_cast<size_t>(std::llround(spec.fraction * static_cast<double>(n)));
    if (n_probe < 1 || n_probe >= n)
      throw std::runtime_error("split leaves train or probe empty");
    std::vector<uint32_t> idx(n);
    for (uint32_t k = 0; k < n; ++k) idx[k] = k;
    auto rng = substream(spec.seed, "split");
    std::shuffle(idx.begin(), idx.end(), rng);
    for (size_t k = 0; k < n_probe; ++k) in_probe[idx[k]] = 1;
  } else {
    std::map<std::pair<uint32_t, uint32_t>, size_t> locate;
    for (size_t k = 0; k < n; ++k)
      locate[{ds.ratings()[k].user, ds.ratings()[k].movie}] = k;
    for (const auto& p : spec.pairs) {
      auto it = locate.find(p);
      if (it == locate.end())
        throw std::runtime_error("explicit probe pair (" + std::to_string(p.first) + "," +
                                 std::to_string(p.second) + ") not in dataset");
      in_probe[it->second] = 1;
    }
    size_t n_probe = std::count(in_probe.begin(), in_probe.end(), 1);
    if (n_probe == 0 || n_probe == n)
      throw std::runtime_error("split leaves train or probe empty");
  }
  std::vector<Rating> train_r, probe_r;
  for (size_t k = 0; k < n; ++k)
    (in_probe[k] ? probe_r : train_r).push_back(ds.ratings()[k]);
  auto train = RatingsDataset::from_triplets(ds.num_users(), ds.num_movies(), std::move(train_r),
                                             ds.k_levels(), ds.user_ids(), ds.movie_ids());
  auto probe = RatingsDataset::from_triplets(ds.num_users(), ds.num_movies(), std::move(probe_r),
                                             ds.k_levels(), ds.user_ids(), ds.movie_ids());
  return {std::move(train), std::move(probe)};
}

struct SyntheticSpec {
  uint32_t num_users = 0;
  uint32_t num_movies = 0;
  int rank = 0;
  double mu = 0.0;
  std::vector<double> factor_std;  // per feature; scalar broadcast; empty = 1.0
  double user_bias_std = 0.0;
  double movie_bias_std = 0.0;
  double noise_std = 0.0;
  double density = 1.0;
  uint64_t seed = 0;
  bool clip_to_integers = false;
  int k_levels = 5;
};

struct PlantedTruth {
  double mu = 0.0;
  std::vector<double> alpha;  // per user
  std::vector<double> beta;   // per movie
  std::vector<double> U;      // row-major num_users x rank
  std::vector<double> V;      // row-major num_movies x rank
  int rank = 0;
};

// r_{i,j} = mu + alpha_i + beta_j + u_i'v_j + eps on density-sampled cells.
// The planted parameters are returned for recovery checks.
inline std::pair<RatingsDataset, PlantedTruth> generate_synthetic(const SyntheticSpec& spec) {
  if (!(spec.density > 0.0 && spec.density <= 1.0))
    throw std::runtime_error("density must be in (0,1]");
  if (spec.rank < 0) throw std::runtime_error("rank must be >= 0");
  if (spec.num_users == 0 || spec.num_movies == 0)
    throw std::runtime_error("synthetic spec needs users and movies");
  std::vector<double> fstd(static_cast<size_t>(spec.rank), 1.0);
  if (spec.factor_std.size() == 1)
    std::fill(fstd.begin(), fstd.end(), spec.factor_std[0]);
  else if (spec.factor_std.size() == static_cast<size_t>(spec.rank))
    fstd = spec.factor_std;
  else if (!spec.factor_std.empty())
    throw std::runtime_error("factor_std must have length 1 or rank");

  PlantedTruth truth;
  truth.mu = spec.mu;
  truth.rank = spec.rank;
  truth.alpha.resize(spec.num_users, 0.0);
  truth.beta.resize(spec.num_movies, 0.0);
  truth.U.resize(static_cast<size_t>(spec.num_users) * spec.rank, 0.0);
  truth.V.resize(static_cast<size_t>(spec.num_movies) * spec.rank, 0.0);

  {
    auto rng = substream(spec.seed, "synth-params");
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (auto& a : truth.alpha) a = spec.user_bias_std * gauss(rng);
    for (auto& b : truth.beta) b = spec.movie_bias_std * gauss(rng);
    for (uint32_t i = 0; i < spec.num_users; ++i)
      for (int k = 0; k < spec.rank; ++k)
        truth.U[static_cast<size_t>(i) * spec.rank + k] = fstd[k] * gauss(rng);
    for (uint32_t j = 0; j < spec.num_movies; ++j)
      for (int k = 0; k < spec.rank; ++k)
        truth.V[static_cast<size_t>(j) * spec.rank + k] = fstd[k] * gauss(rng);
  }

  auto mask_rng = substream(spec.seed, "synth-mask");
  auto noise_rng = substream(spec.seed, "synth-noise");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Rating> triplets;
  for (uint32_t i = 0; i < spec.num_users; ++i) {
    for (uint32_t j = 0; j < spec.num_movies; ++j) {
      if (unif(mask_rng) >= spec.density) continue;
      double dot = 0.0;
      for (int k = 0; k < spec.rank; ++k)
        dot += truth.U[static_cast<size_t>(i) * spec.rank + k] *
               truth.V[static_cast<size_t>(j) * spec.rank + k];
      double v = spec.mu + truth.alpha[i] + truth.beta[j] + dot;
      if (spec.noise_std > 0.0) v += spec.noise_std * gauss(noise_rng);
      if (spec.clip_to_integers) v = clip_rating(std::round(v), spec.k_levels);
      triplets.push_back({i, j, static_cast<float>(v), kNoDate});
    }
  }
  auto ds = RatingsDataset::from_triplets(spec.num_users, spec.num_movies, std::move(triplets),
                                          spec.k_levels);
  return {std::move(ds), std::move(truth)};
}

struct SummaryStats {
  size_t n = 0;
  uint32_t num_users = 0;
  uint32_t num_movies = 0;
  int k_levels = 5;
  double mean = 0.0;
  double std_dev = 0.0;  // population convention (1/N)
  std::vector<double> user_mean, movie_mean;  // 0.0 for empty groups
  std::vector<uint32_t> user_count, movie_count;
  // power-of-two support bins: count of groups with support in (edge/2, edge]
  std::vector<std::pair<uint64_t, uint64_t>> user_support_hist, movie_support_hist;
};

namespace detail {
inline std::vector<std::pair<uint64_t, uint64_t>> support_hist(const std::vector<uint32_t>& counts) {
  std::map<uint64_t, uint64_t> bins;
  for (uint32_t c : counts) {
    uint64_t edge = 1;
    while (edge < c) edge <<= 1;
    ++bins[edge];
  }
  return {bins.begin(), bins.end()};
}
}  // namespace detail

inline SummaryStats summary_stats(const RatingsDataset& ds) {
  if (ds.size() == 0) throw std::runtime_error("summary_stats: empty dataset");
  SummaryStats s;
  s.n = ds.size();
  s.num_users = ds.num_users();
  s.num_movies = ds.num_movies();
  s.k_levels = ds.k_levels();
  double sum = 0.0, sumsq = 0.0;
  for (const Rating& r : ds.ratings()) {
    sum += r.value;
    sumsq += static_cast<double>(r.value) * r.value;
  }
  s.mean = sum / static_cast<double>(s.n);
  s.std_dev = std::sqrt(std::max(0.0, sumsq / static_cast<double>(s.n) - s.mean * s.mean));
  s.user_mean.resize(ds.num_users(), 0.0);
  s.user_count.resize(ds.num_users(), 0);
  for (uint32_t i = 0; i < ds.num_users(); ++i) {
    auto slice = ds.user_ratings(i);
    s.user_count[i] = static_cast<uint32_t>(slice.size());
    if (slice.empty()) continue;
    double t = 0.0;
    for (const Rating& r : slice) t += r.value;
    s.user_mean[i] = t / static_cast<double>(slice.size());
  }
  s.movie_mean.resize(ds.num_movies(), 0.0);
  s.movie_count.resize(ds.num_movies(), 0);
  for (uint32_t j = 0; j < ds.num_movies(); ++j) {
    auto idx = ds.movie_rating_indices(j);
    s.movie_count[j] = static_cast<uint32_t>(idx.size());
    if (idx.empty()) continue;
    double t = 0.0;
    for (uint32_t n : idx) t += ds.ratings()[n].value;
    s.movie_mean[j] = t / static_cast<double>(idx.size());
  }
  s.user_support_hist = detail::support_hist(s.user_count);
  s.movie_support_hist = detail::support_hist(s.movie_count);
  return s;
}

}  // namespace cfkit
