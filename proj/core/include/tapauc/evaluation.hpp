#pragma once

// Operating-point metrics. Classification rule everywhere: score >= threshold
// means positive, so the lowest positive training score is itself a hit.

#include <cstddef>
#include <span>

namespace tapauc::eval {

enum class ThresholdSource { train_min_positive };

struct ThresholdResult {
  double threshold = 0.0;
  ThresholdSource source = ThresholdSource::train_min_positive;
};

/// Zero-false-negative threshold: the lowest positive training score.
ThresholdResult zfn_threshold(std::span<const double> train_positive_scores);

struct ConfusionMetrics {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  double accuracy = 0.0;
  double tpr = 0.0;
  double fpr = 0.0;
  double fnr = 0.0;
  /// Set when tp + fn == 0 (tpr/fnr reported as 0).
  bool no_positives = false;
  /// Set when fp + tn == 0 (fpr reported as 0).
  bool no_negatives = false;

  std::size_t total() const { return tp + fp + tn + fn; }
};

ConfusionMetrics confusion_metrics(std::span<const double> scores, std::span<const int> labels, double threshold);

/// Mann-Whitney AUC: P(s_p > s_n) with ties counted as one half.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

/// Instances in [lower_bound, threshold) are routed to a manual check.
/// lower_bound is the lowest positive score under the threshold, or the
/// threshold itself when every positive clears it.
struct UncertaintyReport {
  double threshold = 0.0;
  double lower_bound = 0.0;
  std::size_t instances = 0;
  std::size_t flagged = 0;
  std::size_t flagged_positives = 0;
  std::size_t false_negatives = 0;
  std::size_t captured_false_negatives = 0;
  double manual_checks = 0.0;  // flagged / instances
  double useful_checks = 0.0;  // flagged positives / instances

  double width() const { return threshold - lower_bound; }
  bool captures_all_false_negatives() const { return captured_false_negatives == false_negatives; }
};

UncertaintyReport uncertainty_interval(std::span<const double> scores, std::span<const int> labels,
                                       double threshold);

}  // namespace tapauc::eval
