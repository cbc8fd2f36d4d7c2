#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace tapauc::data {

using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Feature matrix (rows are instances) with binary labels, 1 = positive/abnormal.
struct Dataset {
  std::string name;
  Matrix features;
  std::vector<int> labels;
  std::vector<std::string> feature_names;

  Index rows() const { return features.rows(); }
  Index cols() const { return features.cols(); }
  std::size_t positive_count() const;
  std::size_t negative_count() const;

  /// Throws DataError unless labels are 0/1, both classes are present and
  /// every feature is finite.
  void validate() const;
};

/// Copy of `rows` in the given order.
Dataset take_rows(const Dataset& dataset, std::span<const Index> rows);

struct CsvOptions {
  /// Header name, or a zero-based column index when no header matches.
  std::string label_column;
  std::string positive_label;
  /// Dropped when present (e.g. an `id` column); missing names are ignored.
  std::vector<std::string> ignore_columns;
  char delimiter = ',';
};

/// Reads delimited text with a header row. Columns with an empty header are
/// skipped (trailing separators in some public copies). Throws DataError.
Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options);

/// Keeps every positive and a uniform sample of `target_count` negatives,
/// preserving the original row order.
Dataset subsample_negatives(const Dataset& dataset, std::size_t target_count, std::uint64_t seed);

inline constexpr double kDefaultCorrelationCutoff = 0.95;

struct PreprocessReport {
  std::vector<std::string> input_features;
  std::vector<std::string> dropped_constant;
  std::vector<std::string> dropped_correlated;
  std::vector<std::string> retained;
  std::vector<double> scale_min;  // per retained feature
  std::vector<double> scale_max;
  double correlation_cutoff = kDefaultCorrelationCutoff;

  friend bool operator==(const PreprocessReport&, const PreprocessReport&) = default;
};

/// Fits on the training split only. Constant columns go first; then any
/// column whose |Pearson r| with an earlier column reaches the cutoff.
PreprocessReport fit_preprocess(const Dataset& train, double correlation_cutoff = kDefaultCorrelationCutoff);

/// Drops the report's columns and min-max scales the rest with the training
/// parameters. Out-of-range values are kept as they are.
Dataset apply_preprocess(const Dataset& dataset, const PreprocessReport& report);

/// seed(r, f) = base * 1000 + r * 10 + f.
std::uint64_t derive_seed(std::uint64_t base_seed, int repetition, int fold);

/// Slot of derive_seed used for the per-repetition shuffle.
inline constexpr int kShuffleSeedSlot = 9;

struct FoldPlan {
  int k = 5;
  int repetitions = 5;
  std::uint64_t base_seed = 0;
  /// fold_of[r][i]: validation fold of instance i in repetition r.
  std::vector<std::vector<int>> fold_of;
  /// Shuffle seed of each repetition.
  std::vector<std::uint64_t> seeds;

  std::vector<Index> validation_rows(int repetition, int fold) const;
  std::vector<Index> train_rows(int repetition, int fold) const;
};

/// Class-wise shuffle then round-robin assignment. Fold sizes differ by at
/// most one within each class and overall. Throws DataError when a class has
/// fewer than k members; k must lie in [2, 9].
FoldPlan stratified_kfold(const Dataset& dataset, int k, int repetitions, std::uint64_t base_seed);

}  // namespace tapauc::data
