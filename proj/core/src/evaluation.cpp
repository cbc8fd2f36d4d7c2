#include "tapauc/evaluation.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

#include "tapauc/error.hpp"

namespace tapauc::eval {

ThresholdResult zfn_threshold(std::span<const double> train_positive_scores) {
  TAPAUC_EXPECTS(!train_positive_scores.empty(), "zfn threshold needs at least one positive score");
  return {*std::min_element(train_positive_scores.begin(), train_positive_scores.end()),
          ThresholdSource::train_min_positive};
}

ConfusionMetrics confusion_metrics(std::span<const double> scores, std::span<const int> labels, double threshold) {
  TAPAUC_EXPECTS(scores.size() == labels.size(), "scores and labels differ in length");
  ConfusionMetrics m;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    if (labels[i] == 1) {
      predicted ? ++m.tp : ++m.fn;
    } else {
      predicted ? ++m.fp : ++m.tn;
    }
  }
  const std::size_t pos = m.tp + m.fn;
  const std::size_t neg = m.fp + m.tn;
  m.no_positives = pos == 0;
  m.no_negatives = neg == 0;
  if (pos > 0) {
    m.tpr = static_cast<double>(m.tp) / static_cast<double>(pos);
    m.fnr = static_cast<double>(m.fn) / static_cast<double>(pos);
  }
  if (neg > 0) m.fpr = static_cast<double>(m.fp) / static_cast<double>(neg);
  if (m.total() > 0) m.accuracy = static_cast<double>(m.tp + m.tn) / static_cast<double>(m.total());
  return m;
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  TAPAUC_EXPECTS(scores.size() == labels.size(), "scores and labels differ in length");
  const auto n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Twice the midrank sum of the positives keeps every quantity integral.
  double twice_rank_sum = 0.0;
  double positives = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double twice_midrank = static_cast<double>(i + 1 + j);  // (i+1) + j, ranks are 1-based
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) {
        twice_rank_sum += twice_midrank;
        positives += 1.0;
      }
    }
    i = j;
  }
  const double negatives = static_cast<double>(n) - positives;
  TAPAUC_EXPECTS(positives > 0 && negatives > 0, "roc_auc needs both classes");
  // Doubled Mann-Whitney U; the tie half-counts become whole numbers.
  const double twice_u = twice_rank_sum - positives * (positives + 1.0);
  return (twice_u / 2.0) / (positives * negatives);
}

UncertaintyReport uncertainty_interval(std::span<const double> scores, std::span<const int> labels,
                                       double threshold) {
  TAPAUC_EXPECTS(scores.size() == labels.size(), "scores and labels differ in length");
  UncertaintyReport r;
  r.threshold = threshold;
  r.lower_bound = threshold;
  r.instances = scores.size();
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] == 1 && scores[i] < threshold) {
      r.lower_bound = std::min(r.lower_bound, scores[i]);
      ++r.false_negatives;
    }
  }
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] >= r.lower_bound && scores[i] < threshold) {
      ++r.flagged;
      if (labels[i] == 1) {
        ++r.flagged_positives;
        ++r.captured_false_negatives;
      }
    }
  }
  if (r.instances > 0) {
    r.manual_checks = static_cast<double>(r.flagged) / static_cast<double>(r.instances);
    r.useful_checks = static_cast<double>(r.flagged_positives) / static_cast<double>(r.instances);
  }
  return r;
}

}  // namespace tapauc::eval
