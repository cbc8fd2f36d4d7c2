#pragma once

// Score-space losses. Each returns a value and its exact gradient with
// respect to the scores of the batch it was built from.

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace tapauc::loss {

using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Positive and negative scores of one batch, with back-references to the
/// batch rows they came from.
struct ScorePartition {
  Vector positives;
  Vector negatives;
  std::vector<Index> positive_rows;
  std::vector<Index> negative_rows;

  /// Splits `scores` by `labels` (1 = positive). Rows keep their batch order.
  static ScorePartition from_labels(const Vector& scores, std::span<const int> labels);

  /// Treats the batch as the concatenation [positives; negatives].
  static ScorePartition from_sets(const Vector& positives, const Vector& negatives);

  Index batch_size() const { return positives.size() + negatives.size(); }
};

struct LossResult {
  double value = 0.0;
  Vector score_gradients;  // aligned with the batch rows
};

/// Fraction of negatives kept after warmup, or the single hardest one.
class NegativeRatio {
 public:
  static NegativeRatio single() { return NegativeRatio(0.0, true); }
  /// alpha must lie in (0, 1]; throws ConfigError otherwise.
  static NegativeRatio fraction(double alpha);
  /// Accepts "single" or a decimal fraction.
  static NegativeRatio parse(const std::string& text);

  bool is_single() const { return single_; }
  double value() const { return alpha_; }

  /// max(1, floor(alpha * n)), or 1 for `single`.
  std::size_t subset_size(std::size_t negative_count) const;

  std::string to_string() const;

  friend bool operator==(const NegativeRatio&, const NegativeRatio&) = default;

 private:
  NegativeRatio(double alpha, bool single) : alpha_(alpha), single_(single) {}
  double alpha_;
  bool single_;
};

struct SelectionSchedule {
  int total_epochs = 1;
  int warmup_epochs = 0;
  NegativeRatio alpha = NegativeRatio::single();
  double margin = 0.5;

  void validate() const;
};

/// Order of `negatives` by descending score, ties by lower index.
std::vector<Index> sorted_negative_order(const Vector& negatives);

/// Indices (into `negatives`) of the hardest negatives, hardest first.
std::vector<Index> select_hard_negatives(const Vector& negatives, NegativeRatio alpha);

/// Mean binary cross-entropy. Scores are clamped to [1e-12, 1 - 1e-12].
LossResult bce_loss(const Vector& scores, std::span<const int> labels);

/// Mean squared hinge max(0, s_n + margin - s_p)^2 over all positive x negative pairs.
LossResult approx_auc_loss(const ScorePartition& partition, double margin);

/// Squared hinge restricted to the hard negatives. Before `warmup_epochs`
/// every negative takes part. Selection is recomputed from the given scores.
LossResult tapauc_loss(const ScorePartition& partition, const SelectionSchedule& schedule, int epoch);

/// approx_auc_loss over the negatives listed in `negative_subset`.
LossResult pairwise_hinge_loss(const ScorePartition& partition, std::span<const Index> negative_subset,
                               double margin);

}  // namespace tapauc::loss
