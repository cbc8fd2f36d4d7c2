#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

#include "tapauc/data.hpp"
#include "tapauc/error.hpp"
#include "tapauc/random.hpp"

namespace tapauc::data {
namespace {

namespace fs = std::filesystem;

const fs::path kDataDir = TAPAUC_DATA_DIR;

CsvOptions wdbc_options() { return {.label_column = "diagnosis", .positive_label = "M", .ignore_columns = {"id"}}; }

Dataset wdbc() { return load_csv(kDataDir / "wdbc.csv", wdbc_options()); }

class TempCsv {
 public:
  explicit TempCsv(const std::string& text) {
    path_ = fs::temp_directory_path() /
            ("tapauc_test_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
             std::to_string(counter_++) + ".csv");
    std::ofstream(path_) << text;
  }
  ~TempCsv() { fs::remove(path_); }
  const fs::path& path() const { return path_; }

 private:
  static inline int counter_ = 0;
  fs::path path_;
};

Dataset toy(const Matrix& x, std::vector<int> y) {
  Dataset d;
  d.name = "toy";
  d.features = x;
  d.labels = std::move(y);
  for (Index j = 0; j < x.cols(); ++j) d.feature_names.push_back("f" + std::to_string(j));
  return d;
}

TEST(LoadCsv, WdbcShape) {
  const auto d = wdbc();
  EXPECT_EQ(d.rows(), 569);
  EXPECT_EQ(d.cols(), 30);
  EXPECT_EQ(d.positive_count(), 212u);
  EXPECT_EQ(d.negative_count(), 357u);
  EXPECT_EQ(d.feature_names.front(), "radius_mean");
}

TEST(LoadCsv, ThreeRowRoundTrip) {
  const TempCsv f("id,a,label,b,\n7,1.5,yes,-2,\n8,0.25,no,3e2,\n9,\"4\",yes,0.125,\n");
  const auto d = load_csv(f.path(), {.label_column = "label", .positive_label = "yes", .ignore_columns = {"id"}});
  ASSERT_EQ(d.rows(), 3);
  ASSERT_EQ(d.cols(), 2);
  EXPECT_EQ(d.feature_names, (std::vector<std::string>{"a", "b"}));
  Matrix expected(3, 2);
  expected << 1.5, -2, 0.25, 300, 4, 0.125;
  EXPECT_EQ(d.features, expected);
  EXPECT_EQ(d.labels, (std::vector<int>{1, 0, 1}));
}

TEST(LoadCsv, LabelByIndex) {
  const TempCsv f("x,y,c\n1,2,1\n3,4,0\n");
  const auto d = load_csv(f.path(), {.label_column = "2", .positive_label = "1"});
  EXPECT_EQ(d.cols(), 2);
  EXPECT_EQ(d.labels, (std::vector<int>{1, 0}));
}

TEST(LoadCsv, Errors) {
  const TempCsv good("x,c\n1,1\n2,0\n");
  EXPECT_THROW(load_csv(good.path(), {.label_column = "missing", .positive_label = "1"}), DataError);
  EXPECT_THROW(load_csv("/nonexistent/file.csv", {.label_column = "c", .positive_label = "1"}), DataError);

  const TempCsv text("x,c\n1,1\nabc,0\n");
  EXPECT_THROW(load_csv(text.path(), {.label_column = "c", .positive_label = "1"}), DataError);

  const TempCsv single("x,c\n1,1\n2,1\n");
  EXPECT_THROW(load_csv(single.path(), {.label_column = "c", .positive_label = "1"}), DataError);

  const TempCsv three("x,c\n1,1\n2,0\n3,2\n");
  EXPECT_THROW(load_csv(three.path(), {.label_column = "c", .positive_label = "1"}), DataError);

  const TempCsv ragged("x,c\n1,1\n2\n");
  EXPECT_THROW(load_csv(ragged.path(), {.label_column = "c", .positive_label = "1"}), DataError);
}

TEST(Subsample, KeepsPositivesAndOrder) {
  const auto d = wdbc();
  const auto s = subsample_negatives(d, 212, 99);
  EXPECT_EQ(s.positive_count(), 212u);
  EXPECT_EQ(s.negative_count(), 212u);
  EXPECT_EQ(s.rows(), 424);

  // Every row of the sample appears in the source, in increasing source order.
  Index cursor = 0;
  for (Index i = 0; i < s.rows(); ++i) {
    while (cursor < d.rows() && d.features.row(cursor) != s.features.row(i)) ++cursor;
    ASSERT_LT(cursor, d.rows());
    EXPECT_EQ(d.labels[static_cast<std::size_t>(cursor)], s.labels[static_cast<std::size_t>(i)]);
    ++cursor;
  }
}

TEST(Subsample, DeterministicAndFullIdentity) {
  const auto d = wdbc();
  EXPECT_EQ(subsample_negatives(d, 50, 4).features, subsample_negatives(d, 50, 4).features);
  EXPECT_NE(subsample_negatives(d, 50, 4).features, subsample_negatives(d, 50, 5).features);
  const auto all = subsample_negatives(d, d.negative_count(), 1);
  EXPECT_EQ(all.features, d.features);
  EXPECT_EQ(all.labels, d.labels);
  EXPECT_THROW(subsample_negatives(d, d.negative_count() + 1, 1), DataError);
}

TEST(Preprocess, DropsConstantAndLaterDuplicate) {
  Matrix x(5, 4);
  x << 1, 7, 1, 0.3,  //
      2, 7, 2, 0.1,   //
      3, 7, 3, 0.9,   //
      4, 7, 4, 0.4,   //
      5, 7, 5, 0.2;
  const auto r = fit_preprocess(toy(x, {1, 0, 1, 0, 0}));
  EXPECT_EQ(r.dropped_constant, (std::vector<std::string>{"f1"}));
  EXPECT_EQ(r.dropped_correlated, (std::vector<std::string>{"f2"}));
  EXPECT_EQ(r.retained, (std::vector<std::string>{"f0", "f3"}));
  EXPECT_EQ(r.scale_min, (std::vector<double>{1, 0.1}));
  EXPECT_EQ(r.scale_max, (std::vector<double>{5, 0.9}));
}

TEST(Preprocess, AllDroppedIsAnError) {
  Matrix x(3, 2);
  x << 1, 1, 1, 1, 1, 1;
  EXPECT_THROW(fit_preprocess(toy(x, {1, 0, 1})), DataError);
}

double pearson(const Matrix& x, Index a, Index b) {
  const double ma = x.col(a).mean();
  const double mb = x.col(b).mean();
  double sab = 0, saa = 0, sbb = 0;
  for (Index i = 0; i < x.rows(); ++i) {
    sab += (x(i, a) - ma) * (x(i, b) - mb);
    saa += (x(i, a) - ma) * (x(i, a) - ma);
    sbb += (x(i, b) - mb) * (x(i, b) - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

// Drop j when |r(i, j)| >= cutoff for any earlier non-constant i.
std::vector<std::string> brute_force_retained(const Dataset& d, double cutoff) {
  std::vector<bool> constant(static_cast<std::size_t>(d.cols()));
  for (Index j = 0; j < d.cols(); ++j) {
    constant[static_cast<std::size_t>(j)] = d.features.col(j).maxCoeff() == d.features.col(j).minCoeff();
  }
  std::vector<std::string> kept;
  for (Index j = 0; j < d.cols(); ++j) {
    if (constant[static_cast<std::size_t>(j)]) continue;
    bool drop = false;
    for (Index i = 0; i < j && !drop; ++i) {
      drop = !constant[static_cast<std::size_t>(i)] && std::abs(pearson(d.features, i, j)) >= cutoff;
    }
    if (!drop) kept.push_back(d.feature_names[static_cast<std::size_t>(j)]);
  }
  return kept;
}

TEST(Preprocess, WdbcRetainedDimension) {
  const auto d = wdbc();
  const auto r = fit_preprocess(d);
  // Frozen from an independent numpy correlation scan of the full file.
  EXPECT_EQ(r.retained.size(), 23u);
  EXPECT_EQ(r.dropped_correlated,
            (std::vector<std::string>{"perimeter_mean", "area_mean", "perimeter_se", "area_se", "radius_worst",
                                      "perimeter_worst", "area_worst"}));
  EXPECT_EQ(r.retained, brute_force_retained(d, 0.95));
}

TEST(Preprocess, WdbcTrainFoldsMatchBruteForce) {
  const auto d = wdbc();
  const auto plan = stratified_kfold(d, 5, 2, 11);
  for (int rep = 0; rep < 2; ++rep) {
    for (int f = 0; f < 5; ++f) {
      const auto rows = plan.train_rows(rep, f);
      const auto train = take_rows(d, rows);
      EXPECT_EQ(fit_preprocess(train).retained, brute_force_retained(train, 0.95));
    }
  }
}

TEST(Preprocess, ApplyScalesWithoutClamping) {
  Matrix x(3, 2);
  x << 0, 10,  //
      5, 20,   //
      10, 40;
  const auto train = toy(x, {1, 0, 0});
  const auto r = fit_preprocess(train, 1.01);
  const auto scaled = apply_preprocess(train, r);
  EXPECT_EQ(scaled.features(0, 0), 0.0);
  EXPECT_EQ(scaled.features(2, 0), 1.0);
  EXPECT_EQ(scaled.features(0, 1), 0.0);
  EXPECT_EQ(scaled.features(2, 1), 1.0);
  EXPECT_GE(scaled.features.minCoeff(), 0.0);
  EXPECT_LE(scaled.features.maxCoeff(), 1.0);

  Matrix v(2, 2);
  v << 20, 5,  //
      -5, 40;
  const auto out = apply_preprocess(toy(v, {1, 0}), r);
  EXPECT_EQ(out.features(0, 0), 2.0);
  EXPECT_EQ(out.features(0, 1), -1.0 / 6.0);
  EXPECT_EQ(out.features(1, 0), -0.5);
}

TEST(Preprocess, ApplyRejectsForeignColumns) {
  Matrix x(3, 2);
  x << 0, 1, 1, 0, 2, 5;
  const auto r = fit_preprocess(toy(x, {1, 0, 0}));
  auto other = toy(x, {1, 0, 0});
  other.feature_names[1] = "renamed";
  EXPECT_THROW(apply_preprocess(other, r), DataError);
}

TEST(Preprocess, FitNeverReadsValidationRows) {
  const auto d = wdbc();
  const auto plan = stratified_kfold(d, 5, 1, 3);
  const auto train = take_rows(d, plan.train_rows(0, 0));
  const auto reference = fit_preprocess(train);

  // Perturbing the held-out rows in the full dataset changes nothing for the fold.
  auto perturbed = d;
  for (const Index i : plan.validation_rows(0, 0)) perturbed.features.row(i).array() *= 1000.0;
  EXPECT_EQ(fit_preprocess(take_rows(perturbed, plan.train_rows(0, 0))), reference);

  // Nor does the order of the training rows beyond floating-point summation.
  auto rows = plan.train_rows(0, 0);
  std::reverse(rows.begin(), rows.end());
  const auto reordered = fit_preprocess(take_rows(d, rows));
  EXPECT_EQ(reordered.retained, reference.retained);
  EXPECT_EQ(reordered.scale_min, reference.scale_min);
  EXPECT_EQ(reordered.scale_max, reference.scale_max);
}

TEST(DeriveSeed, Formula) {
  EXPECT_EQ(derive_seed(42, 0, 0), 42000u);
  EXPECT_EQ(derive_seed(42, 3, 4), 42034u);
  EXPECT_EQ(derive_seed(1, 4, kShuffleSeedSlot), 1049u);
}

TEST(StratifiedKfold, TenAndTen) {
  Matrix x = Matrix::Zero(20, 1);
  std::vector<int> y(20, 0);
  std::fill(y.begin(), y.begin() + 10, 1);
  const auto d = toy(x, y);
  const auto plan = stratified_kfold(d, 5, 3, 7);
  for (int r = 0; r < 3; ++r) {
    std::set<Index> seen;
    for (int f = 0; f < 5; ++f) {
      const auto v = plan.validation_rows(r, f);
      int pos = 0;
      for (const Index i : v) {
        pos += y[static_cast<std::size_t>(i)];
        EXPECT_TRUE(seen.insert(i).second);
      }
      EXPECT_EQ(pos, 2);
      EXPECT_EQ(v.size(), 4u);
      EXPECT_EQ(plan.train_rows(r, f).size(), 16u);
    }
    EXPECT_EQ(seen.size(), 20u);
  }
}

TEST(StratifiedKfold, WdbcRatioPerFold) {
  const auto d = wdbc();
  const auto plan = stratified_kfold(d, 5, 5, 1);
  for (int r = 0; r < 5; ++r) {
    std::size_t covered = 0;
    for (int f = 0; f < 5; ++f) {
      const auto v = plan.validation_rows(r, f);
      covered += v.size();
      std::size_t pos = 0;
      for (const Index i : v) pos += static_cast<std::size_t>(d.labels[static_cast<std::size_t>(i)]);
      const double expected = 212.0 * static_cast<double>(v.size()) / 569.0;
      EXPECT_LE(std::abs(static_cast<double>(pos) - expected), 1.0);
      EXPECT_TRUE(v.size() == 113 || v.size() == 114);
    }
    EXPECT_EQ(covered, 569u);
  }
}

TEST(StratifiedKfold, SeedsAndErrors) {
  const auto d = wdbc();
  const auto a = stratified_kfold(d, 5, 2, 1);
  EXPECT_EQ(a.fold_of, stratified_kfold(d, 5, 2, 1).fold_of);
  EXPECT_NE(a.fold_of, stratified_kfold(d, 5, 2, 2).fold_of);
  EXPECT_NE(a.fold_of[0], a.fold_of[1]);
  EXPECT_EQ(a.seeds[1], derive_seed(1, 1, kShuffleSeedSlot));

  Matrix x = Matrix::Zero(8, 1);
  EXPECT_THROW(stratified_kfold(toy(x, {1, 1, 1, 0, 0, 0, 0, 0}), 5, 1, 0), DataError);
  EXPECT_THROW(stratified_kfold(d, 10, 1, 0), ConfigError);
  EXPECT_THROW(stratified_kfold(d, 1, 1, 0), ConfigError);
}

}  // namespace
}  // namespace tapauc::data
