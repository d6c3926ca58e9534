#include "cfkit/dataset.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace cfkit;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  static int counter = 0;
  fs::path p = fs::temp_directory_path() / ("cfkit_ds_test_" + std::to_string(counter++));
  fs::create_directories(p);
  return p;
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p);
  out << content;
}

}  // namespace

TEST(Dataset, FromTripletsBuildsDualIndex) {
  std::vector<Rating> t = {{0, 1, 4.f}, {1, 0, 3.f}, {0, 0, 5.f}, {2, 1, 2.f}};
  auto ds = RatingsDataset::from_triplets(3, 2, t);
  EXPECT_EQ(ds.size(), 4u);
  EXPECT_EQ(ds.user_count(0), 2u);
  EXPECT_EQ(ds.user_count(2), 1u);
  EXPECT_EQ(ds.movie_count(0), 2u);
  EXPECT_EQ(ds.movie_count(1), 2u);
  // by-user slice is movie-sorted
  EXPECT_EQ(ds.user_ratings(0)[0].movie, 0u);
  EXPECT_EQ(ds.user_ratings(0)[1].movie, 1u);
  // by-movie permutation is user-ascending
  auto idx = ds.movie_rating_indices(1);
  EXPECT_EQ(ds.ratings()[idx[0]].user, 0u);
  EXPECT_EQ(ds.ratings()[idx[1]].user, 2u);
}

TEST(Dataset, DuplicatePairRejected) {
  std::vector<Rating> t = {{0, 0, 5.f}, {0, 0, 4.f}};
  EXPECT_THROW(RatingsDataset::from_triplets(1, 1, t), std::runtime_error);
}

// Index coherence: by_user and by_movie enumerate the same multiset.
TEST(Dataset, IndexCoherence) {
  SyntheticSpec spec;
  spec.num_users = 40;
  spec.num_movies = 25;
  spec.rank = 2;
  spec.mu = 3.0;
  spec.density = 0.3;
  spec.noise_std = 0.2;
  spec.seed = 7;
  auto [ds, truth] = generate_synthetic(spec);
  std::vector<std::tuple<uint32_t, uint32_t, float>> by_user, by_movie;
  for (uint32_t i = 0; i < ds.num_users(); ++i)
    for (const Rating& r : ds.user_ratings(i)) by_user.emplace_back(r.user, r.movie, r.value);
  for (uint32_t j = 0; j < ds.num_movies(); ++j)
    for (uint32_t n : ds.movie_rating_indices(j)) {
      const Rating& r = ds.ratings()[n];
      by_movie.emplace_back(r.user, r.movie, r.value);
    }
  std::sort(by_user.begin(), by_user.end());
  std::sort(by_movie.begin(), by_movie.end());
  EXPECT_EQ(by_user, by_movie);
  size_t sum_ji = 0, sum_ij = 0;
  for (uint32_t i = 0; i < ds.num_users(); ++i) sum_ji += ds.user_count(i);
  for (uint32_t j = 0; j < ds.num_movies(); ++j) sum_ij += ds.movie_count(j);
  EXPECT_EQ(sum_ji, ds.size());
  EXPECT_EQ(sum_ij, ds.size());
}

TEST(TripletCsv, ParsesRowsAndHeader) {
  auto dir = temp_dir();
  write_file(dir / "a.csv", "user,movie,rating\n1,1,5\n2,1,3\n");
  auto ds = parse_triplet_csv((dir / "a.csv").string());
  EXPECT_EQ(ds.size(), 2u);
  EXPECT_EQ(ds.num_users(), 2u);
  EXPECT_EQ(ds.num_movies(), 1u);
  EXPECT_EQ(ds.movie_count(0), 2u);
}

TEST(TripletCsv, EmptyFileIsError) {
  auto dir = temp_dir();
  write_file(dir / "empty.csv", "user,movie,rating\n");
  try {
    parse_triplet_csv((dir / "empty.csv").string());
    FAIL() << "expected error";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("empty dataset"), std::string::npos);
  }
}

TEST(TripletCsv, DuplicatePairNamesLocation) {
  auto dir = temp_dir();
  write_file(dir / "dup.csv", "1,1,5\n1,1,4\n");
  try {
    parse_triplet_csv((dir / "dup.csv").string());
    FAIL() << "expected error";
  } catch (const std::runtime_error& e) {
    std::string msg = e.what();
    EXPECT_NE(msg.find("duplicate"), std::string::npos);
    EXPECT_NE(msg.find(":2"), std::string::npos);
  }
}

TEST(TripletCsv, OutOfRangeRatingNamesLine) {
  auto dir = temp_dir();
  write_file(dir / "bad.csv", "1,1,5\n2,1,6\n");
  try {
    parse_triplet_csv((dir / "bad.csv").string());
    FAIL() << "expected error";
  } catch (const std::runtime_error& e) {
    std::string msg = e.what();
    EXPECT_NE(msg.find("outside 1..5"), std::string::npos);
    EXPECT_NE(msg.find(":2"), std::string::npos);
  }
}

TEST(TripletCsv, MalformedLineNamesLine) {
  auto dir = temp_dir();
  write_file(dir / "bad.csv", "1,1,5\ngarbage-line\n");
  try {
    parse_triplet_csv((dir / "bad.csv").string());
    FAIL() << "expected error";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find(":2"), std::string::npos);
  }
}

TEST(NetflixFormat, ParsesMovieFile) {
  auto dir = temp_dir();
  write_file(dir / "mv_1.txt", "1:\n7,3,2005-09-06\n9,5,2005-05-13\n");
  auto ds = parse_netflix_movie_files(dir.string());
  EXPECT_EQ(ds.num_users(), 2u);
  EXPECT_EQ(ds.num_movies(), 1u);
  EXPECT_EQ(ds.size(), 2u);
  // original ids survive the dense remap
  EXPECT_EQ(ds.user_ids()[0], 7);
  EXPECT_EQ(ds.user_ids()[1], 9);
  EXPECT_EQ(ds.movie_ids()[0], 1);
  // 2005-09-06 is day 13032 since 1970-01-01
  ASSERT_TRUE(ds.dense_user(7).has_value());
  EXPECT_EQ(ds.user_ratings(*ds.dense_user(7))[0].date, 13032);
}

TEST(NetflixFormat, EmptyDirectoryIsError) {
  auto dir = temp_dir();
  try {
    parse_netflix_movie_files(dir.string());
    FAIL() << "expected error";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("no movie files"), std::string::npos);
  }
}

TEST(NetflixFormat, OutOfRangeRatingRejected) {
  auto dir = temp_dir();
  write_file(dir / "mv_1.txt", "1:\n7,6,2005-09-06\n");
  try {
    parse_netflix_movie_files(dir.string());
    FAIL() << "expected error";
  } catch (const std::runtime_error& e) {
    std::string msg = e.what();
    EXPECT_NE(msg.find("outside 1..5"), std::string::npos);
    EXPECT_NE(msg.find(":2"), std::string::npos);
  }
}

TEST(Split, FractionDeterministicGivenSeed) {
  std::vector<Rating> t;
  for (uint32_t n = 0; n < 10; ++n) t.push_back({n, n % 3, float(1 + n % 5)});
  auto ds = RatingsDataset::from_triplets(10, 3, t);
  SplitSpec spec;
  spec.fraction = 0.5;
  spec.seed = 42;
  auto [train1, probe1] = split(ds, spec);
  auto [train2, probe2] = split(ds, spec);
  EXPECT_EQ(probe1.size(), 5u);
  EXPECT_EQ(train1.size(), 5u);
  ASSERT_EQ(probe1.size(), probe2.size());
  for (size_t k = 0; k < probe1.size(); ++k) {
    EXPECT_EQ(probe1.ratings()[k].user, probe2.ratings()[k].user);
    EXPECT_EQ(probe1.ratings()[k].movie, probe2.ratings()[k].movie);
  }
}

TEST(Split, DifferentSeedsDiffer) {
  SyntheticSpec sp;
  sp.num_users = 20;
  sp.num_movies = 10;
  sp.mu = 3.0;
  sp.density = 0.9;
  sp.seed = 1;
  sp.clip_to_integers = true;
  auto [ds, truth] = generate_synthetic(sp);
  ASSERT_GE(ds.size(), 100u);
  SplitSpec a{SplitSpec::Mode::holdout_fraction, 0.3, {}, 1};
  SplitSpec b{SplitSpec::Mode::holdout_fraction, 0.3, {}, 2};
  auto [ta, pa] = split(ds, a);
  auto [tb, pb] = split(ds, b);
  bool same = pa.size() == pb.size();
  if (same) {
    for (size_t k = 0; k < pa.size(); ++k) {
      if (pa.ratings()[k].user != pb.ratings()[k].user ||
          pa.ratings()[k].movie != pb.ratings()[k].movie) {
        same = false;
        break;
      }
    }
  }
  EXPECT_FALSE(same);
}

TEST(Split, ExplicitListSelectsExactPairs) {
  std::vector<Rating> t;
  for (uint32_t n = 0; n < 8; ++n) t.push_back({n / 2, n % 2, 3.f});
  auto ds = RatingsDataset::from_triplets(4, 2, t);
  SplitSpec spec;
  spec.mode = SplitSpec::Mode::explicit_list;
  spec.pairs = {{0, 0}, {1, 1}, {3, 0}};
  auto [train, probe] = split(ds, spec);
  EXPECT_EQ(probe.size(), 3u);
  EXPECT_EQ(train.size(), 5u);
  using PairSet = std::set<std::pair<uint32_t, uint32_t>>;
  PairSet got;
  for (const Rating& r : probe.ratings()) got.insert({r.user, r.movie});
  EXPECT_EQ(got, PairSet(spec.pairs.begin(), spec.pairs.end()));
}

TEST(Split, FullHoldoutIsError) {
  std::vector<Rating> t = {{0, 0, 3.f}, {1, 0, 4.f}};
  auto ds = RatingsDataset::from_triplets(2, 1, t);
  SplitSpec spec;
  spec.fraction = 1.0;
  EXPECT_THROW(split(ds, spec), std::runtime_error);
}

TEST(Synthetic, RankZeroNoNoiseIsConstant) {
  SyntheticSpec spec;
  spec.num_users = 6;
  spec.num_movies = 4;
  spec.mu = 3.0;
  spec.clip_to_integers = true;
  spec.seed = 3;
  auto [ds, truth] = generate_synthetic(spec);
  for (const Rating& r : ds.ratings()) EXPECT_FLOAT_EQ(r.value, 3.f);
}

// Planted rank bound, checked against a dense SVD of the bias-removed matrix.
TEST(Synthetic, PlantedRankTwoHasNumericalRankTwo) {
  SyntheticSpec spec;
  spec.num_users = 12;
  spec.num_movies = 9;
  spec.rank = 2;
  spec.mu = 3.1;
  spec.user_bias_std = 0.4;
  spec.movie_bias_std = 0.3;
  spec.density = 1.0;
  spec.noise_std = 0.0;
  spec.seed = 9;
  auto [ds, truth] = generate_synthetic(spec);
  ASSERT_EQ(ds.size(), 12u * 9u);
  Eigen::MatrixXd resid(12, 9);
  for (const Rating& r : ds.ratings())
    resid(r.user, r.movie) = r.value - truth.mu - truth.alpha[r.user] - truth.beta[r.movie];
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(resid);
  const auto& sing = svd.singularValues();
  EXPECT_GT(sing(1), 1e-6);
  for (int k = 2; k < sing.size(); ++k) EXPECT_LT(sing(k), 1e-5);
}

TEST(Synthetic, DensitySamplingWithinBinomialBound) {
  SyntheticSpec spec;
  spec.num_users = 200;
  spec.num_movies = 50;
  spec.mu = 3.0;
  spec.density = 0.1;
  spec.seed = 11;
  auto [ds, truth] = generate_synthetic(spec);
  const double mean = 200 * 50 * 0.1;
  const double sigma = std::sqrt(200 * 50 * 0.1 * 0.9);
  EXPECT_NEAR(static_cast<double>(ds.size()), mean, 4.0 * sigma);
}

TEST(SummaryStats, MeanAndPopulationStd) {
  std::vector<Rating> t = {{0, 0, 1.f}, {1, 0, 5.f}};
  auto ds = RatingsDataset::from_triplets(2, 1, t);
  auto s = summary_stats(ds);
  EXPECT_DOUBLE_EQ(s.mean, 3.0);
  EXPECT_DOUBLE_EQ(s.std_dev, 2.0);
}

TEST(SummaryStats, ConstantRatingsHaveZeroStd) {
  std::vector<Rating> t = {{0, 0, 4.f}, {1, 0, 4.f}, {0, 1, 4.f}};
  auto ds = RatingsDataset::from_triplets(2, 2, t);
  auto s = summary_stats(ds);
  EXPECT_DOUBLE_EQ(s.std_dev, 0.0);
}

TEST(SummaryStats, SyntheticMeanNearPlantedMu) {
  SyntheticSpec spec;
  spec.num_users = 100;
  spec.num_movies = 100;
  spec.mu = 3.6;
  spec.noise_std = 0.5;
  spec.density = 0.5;
  spec.seed = 21;
  auto [ds, truth] = generate_synthetic(spec);
  auto s = summary_stats(ds);
  const double clt_sigma = 0.5 / std::sqrt(static_cast<double>(ds.size()));
  EXPECT_NEAR(s.mean, 3.6, 3.0 * clt_sigma);
}

TEST(RoundTrip, CsvPreservesDataset) {
  SyntheticSpec spec;
  spec.num_users = 15;
  spec.num_movies = 8;
  spec.rank = 1;
  spec.mu = 3.4;
  spec.density = 0.6;
  spec.noise_std = 0.7;
  spec.clip_to_integers = true;
  spec.seed = 5;
  auto [ds, truth] = generate_synthetic(spec);
  auto dir = temp_dir();
  auto path = (dir / "rt.csv").string();
  write_triplet_csv(ds, path);
  auto back = parse_triplet_csv(path);
  ASSERT_EQ(back.size(), ds.size());
  EXPECT_EQ(back.num_users(), ds.num_users());
  EXPECT_EQ(back.num_movies(), ds.num_movies());
  for (size_t k = 0; k < ds.size(); ++k) {
    EXPECT_EQ(back.ratings()[k].user, ds.ratings()[k].user);
    EXPECT_EQ(back.ratings()[k].movie, ds.ratings()[k].movie);
    EXPECT_FLOAT_EQ(back.ratings()[k].value, ds.ratings()[k].value);
  }
}

TEST(RoundTrip, RealValuedCsvWithPermissiveParse) {
  SyntheticSpec spec;
  spec.num_users = 10;
  spec.num_movies = 6;
  spec.rank = 2;
  spec.density = 0.8;
  spec.noise_std = 0.3;
  spec.seed = 6;
  auto [ds, truth] = generate_synthetic(spec);
  auto dir = temp_dir();
  auto path = (dir / "real.csv").string();
  write_triplet_csv(ds, path);
  ParseOptions opt;
  opt.require_integral = false;
  auto back = parse_triplet_csv(path, opt);
  ASSERT_EQ(back.size(), ds.size());
  for (size_t k = 0; k < ds.size(); ++k)
    EXPECT_FLOAT_EQ(back.ratings()[k].value, ds.ratings()[k].value);
}

TEST(Dataset, WithValuesKeepsStructure) {
  std::vector<Rating> t = {{0, 0, 5.f}, {0, 1, 3.f}, {1, 0, 2.f}};
  auto ds = RatingsDataset::from_triplets(2, 2, t);
  std::vector<double> vals = {0.5, -0.25, 1.5};
  auto res = ds.with_values(vals);
  EXPECT_EQ(res.size(), ds.size());
  EXPECT_FLOAT_EQ(res.ratings()[1].value, -0.25f);
  EXPECT_EQ(res.ratings()[1].user, ds.ratings()[1].user);
}
