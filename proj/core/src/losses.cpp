#include "tapauc/losses.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include "tapauc/error.hpp"

namespace tapauc::loss {

ScorePartition ScorePartition::from_labels(const Vector& scores, std::span<const int> labels) {
  TAPAUC_EXPECTS(static_cast<Index>(labels.size()) == scores.size(), "scores and labels differ in length");
  ScorePartition part;
  for (Index i = 0; i < scores.size(); ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    TAPAUC_EXPECTS(y == 0 || y == 1, "labels must be 0 or 1");
    (y == 1 ? part.positive_rows : part.negative_rows).push_back(i);
  }
  part.positives.resize(static_cast<Index>(part.positive_rows.size()));
  part.negatives.resize(static_cast<Index>(part.negative_rows.size()));
  for (std::size_t k = 0; k < part.positive_rows.size(); ++k) {
    part.positives[static_cast<Index>(k)] = scores[part.positive_rows[k]];
  }
  for (std::size_t k = 0; k < part.negative_rows.size(); ++k) {
    part.negatives[static_cast<Index>(k)] = scores[part.negative_rows[k]];
  }
  return part;
}

ScorePartition ScorePartition::from_sets(const Vector& positives, const Vector& negatives) {
  ScorePartition part;
  part.positives = positives;
  part.negatives = negatives;
  part.positive_rows.resize(static_cast<std::size_t>(positives.size()));
  part.negative_rows.resize(static_cast<std::size_t>(negatives.size()));
  std::iota(part.positive_rows.begin(), part.positive_rows.end(), Index{0});
  std::iota(part.negative_rows.begin(), part.negative_rows.end(), positives.size());
  return part;
}

NegativeRatio NegativeRatio::fraction(double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw ConfigError("negative ratio must lie in (0, 1], got " + std::to_string(alpha));
  }
  return NegativeRatio(alpha, false);
}

NegativeRatio NegativeRatio::parse(const std::string& text) {
  if (text == "single") return single();
  double alpha = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, alpha);
  if (ec != std::errc() || ptr != end) throw ConfigError("cannot parse negative ratio '" + text + "'");
  return fraction(alpha);
}

std::size_t NegativeRatio::subset_size(std::size_t negative_count) const {
  if (single_ || negative_count == 0) return std::min<std::size_t>(1, negative_count);
  // The small offset absorbs representation error in decimal ratios (0.1 * 30).
  const auto k = static_cast<std::size_t>(std::floor(alpha_ * static_cast<double>(negative_count) + 1e-9));
  return std::clamp<std::size_t>(k, 1, negative_count);
}

std::string NegativeRatio::to_string() const {
  if (single_) return "single";
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, alpha_);
  return std::string(buf, ptr);
}

void SelectionSchedule::validate() const {
  if (total_epochs < 1) throw ConfigError("total epochs must be >= 1");
  if (warmup_epochs < 0 || warmup_epochs > total_epochs) {
    throw ConfigError("warmup epochs must lie in [0, total epochs]");
  }
  if (!(margin > 0.0)) throw ConfigError("margin must be positive");
}

std::vector<Index> sorted_negative_order(const Vector& negatives) {
  std::vector<Index> order(static_cast<std::size_t>(negatives.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return negatives[a] > negatives[b]; });
  return order;
}

std::vector<Index> select_hard_negatives(const Vector& negatives, NegativeRatio alpha) {
  TAPAUC_EXPECTS(negatives.size() >= 1, "hard-negative selection needs at least one negative");
  auto order = sorted_negative_order(negatives);
  order.resize(alpha.subset_size(order.size()));
  return order;
}

LossResult bce_loss(const Vector& scores, std::span<const int> labels) {
  TAPAUC_EXPECTS(static_cast<Index>(labels.size()) == scores.size(), "scores and labels differ in length");
  TAPAUC_EXPECTS(scores.size() >= 1, "bce needs at least one score");
  constexpr double kClamp = 1e-12;
  const double inv_n = 1.0 / static_cast<double>(scores.size());
  LossResult r;
  r.score_gradients.resize(scores.size());
  for (Index i = 0; i < scores.size(); ++i) {
    const double s = std::clamp(scores[i], kClamp, 1.0 - kClamp);
    const double y = labels[static_cast<std::size_t>(i)];
    r.value -= y * std::log(s) + (1.0 - y) * std::log(1.0 - s);
    r.score_gradients[i] = (-y / s + (1.0 - y) / (1.0 - s)) * inv_n;
  }
  r.value *= inv_n;
  return r;
}

LossResult pairwise_hinge_loss(const ScorePartition& partition, std::span<const Index> negative_subset,
                               double margin) {
  const Index np = partition.positives.size();
  const auto nm = static_cast<Index>(negative_subset.size());
  TAPAUC_EXPECTS(np >= 1, "pairwise loss needs at least one positive");
  TAPAUC_EXPECTS(nm >= 1, "pairwise loss needs at least one negative");
  TAPAUC_EXPECTS(margin > 0.0, "margin must be positive");

  // Instead of visiting all |P| x |N| pairs, sort the positives and use
  // prefix sums: for a shifted negative a = s_n + margin, the active
  // positives are those with s_p < a and
  //   sum_p (a - s_p)^2 = c a^2 - 2 a S1 + S2.
  std::vector<double> pos(partition.positives.data(), partition.positives.data() + np);
  std::sort(pos.begin(), pos.end());
  std::vector<double> s1(pos.size() + 1, 0.0), s2(pos.size() + 1, 0.0);
  for (std::size_t i = 0; i < pos.size(); ++i) {
    s1[i + 1] = s1[i] + pos[i];
    s2[i + 1] = s2[i] + pos[i] * pos[i];
  }

  // Shifted negatives in ascending order make the result independent of
  // the order of `negative_subset`.
  std::vector<std::pair<double, Index>> shifted;
  shifted.reserve(negative_subset.size());
  for (const Index k : negative_subset) {
    TAPAUC_EXPECTS(k >= 0 && k < partition.negatives.size(), "negative subset index out of range");
    shifted.emplace_back(partition.negatives[k] + margin, k);
  }
  std::sort(shifted.begin(), shifted.end());

  const double scale = 1.0 / (static_cast<double>(np) * static_cast<double>(nm));
  LossResult r;
  r.score_gradients = Vector::Zero(partition.batch_size());

  double total = 0.0;
  for (const auto& [a, k] : shifted) {
    const auto c = static_cast<std::size_t>(std::lower_bound(pos.begin(), pos.end(), a) - pos.begin());
    if (c == 0) continue;
    const double cd = static_cast<double>(c);
    total += std::max(0.0, cd * a * a - 2.0 * a * s1[c] + s2[c]);
    r.score_gradients[partition.negative_rows[static_cast<std::size_t>(k)]] += 2.0 * scale * (cd * a - s1[c]);
  }
  r.value = total * scale;

  std::vector<double> suffix(shifted.size() + 1, 0.0);
  for (std::size_t i = shifted.size(); i > 0; --i) suffix[i - 1] = suffix[i] + shifted[i - 1].first;
  for (Index i = 0; i < np; ++i) {
    const double sp = partition.positives[i];
    const auto first = static_cast<std::size_t>(
        std::upper_bound(shifted.begin(), shifted.end(), sp,
                         [](double v, const std::pair<double, Index>& e) { return v < e.first; }) -
        shifted.begin());
    const double count = static_cast<double>(shifted.size() - first);
    if (count == 0.0) continue;
    r.score_gradients[partition.positive_rows[static_cast<std::size_t>(i)]] -=
        2.0 * scale * (suffix[first] - count * sp);
  }
  return r;
}

LossResult approx_auc_loss(const ScorePartition& partition, double margin) {
  std::vector<Index> all(static_cast<std::size_t>(partition.negatives.size()));
  std::iota(all.begin(), all.end(), Index{0});
  return pairwise_hinge_loss(partition, all, margin);
}

LossResult tapauc_loss(const ScorePartition& partition, const SelectionSchedule& schedule, int epoch) {
  TAPAUC_EXPECTS(epoch >= 0 && epoch < schedule.total_epochs, "epoch outside [0, total epochs)");
  if (epoch < schedule.warmup_epochs) return approx_auc_loss(partition, schedule.margin);
  TAPAUC_EXPECTS(partition.negatives.size() >= 1, "tapauc loss needs at least one negative");
  const auto hard = select_hard_negatives(partition.negatives, schedule.alpha);
  return pairwise_hinge_loss(partition, hard, schedule.margin);
}

}  // namespace tapauc::loss
