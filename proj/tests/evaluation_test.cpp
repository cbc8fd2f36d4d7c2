#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "tapauc/check/oracles.hpp"
#include "tapauc/error.hpp"
#include "tapauc/evaluation.hpp"
#include "tapauc/random.hpp"

namespace tapauc::eval {
namespace {

TEST(ZfnThreshold, IsMinimumPositiveScore) {
  const std::vector<double> p{0.7, 0.61, 0.95};
  EXPECT_EQ(zfn_threshold(p).threshold, 0.61);
  EXPECT_EQ(zfn_threshold(p).source, ThresholdSource::train_min_positive);
  EXPECT_THROW(zfn_threshold({}), ContractViolation);
}

TEST(ZfnThreshold, NoFalseNegativesOnOwnScores) {
  Rng rng(12);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> s(40);
    std::vector<int> y(40);
    std::vector<double> pos;
    for (std::size_t i = 0; i < s.size(); ++i) {
      s[i] = rng.uniform();
      y[i] = i % 3 == 0 ? 1 : 0;
      if (y[i] == 1) pos.push_back(s[i]);
    }
    const auto m = confusion_metrics(s, y, zfn_threshold(pos).threshold);
    EXPECT_EQ(m.fn, 0u);
    EXPECT_EQ(m.tpr, 1.0);
  }
}

TEST(Confusion, HandExamples) {
  const std::vector<double> s{0.2, 0.4, 0.6, 0.8};
  const std::vector<int> y{0, 0, 1, 1};
  auto m = confusion_metrics(s, y, 0.6);
  EXPECT_EQ(m.tp, 2u);
  EXPECT_EQ(m.fp, 0u);
  EXPECT_EQ(m.tn, 2u);
  EXPECT_EQ(m.fn, 0u);
  EXPECT_EQ(m.tpr, 1.0);
  EXPECT_EQ(m.fpr, 0.0);

  m = confusion_metrics(s, y, 0.3);
  EXPECT_EQ(m.fp, 1u);
  EXPECT_EQ(m.fpr, 0.5);
  EXPECT_EQ(m.tpr, 1.0);
  EXPECT_EQ(m.accuracy, 0.75);
}

TEST(Confusion, ExtremeThresholds) {
  const std::vector<double> s{0.2, 0.4, 0.6, 0.8};
  const std::vector<int> y{0, 1, 0, 1};
  auto m = confusion_metrics(s, y, 0.0);
  EXPECT_EQ(m.tpr, 1.0);
  EXPECT_EQ(m.fpr, 1.0);
  m = confusion_metrics(s, y, 0.9);
  EXPECT_EQ(m.tpr, 0.0);
  EXPECT_EQ(m.fpr, 0.0);
  EXPECT_EQ(m.fnr, 1.0);
}

TEST(Confusion, DegenerateDenominatorsAreFlagged) {
  const std::vector<double> s{0.2, 0.9};
  auto m = confusion_metrics(s, std::vector<int>{0, 0}, 0.5);
  EXPECT_TRUE(m.no_positives);
  EXPECT_FALSE(m.no_negatives);
  EXPECT_EQ(m.tpr, 0.0);
  EXPECT_EQ(m.fpr, 0.5);
  m = confusion_metrics(s, std::vector<int>{1, 1}, 0.5);
  EXPECT_TRUE(m.no_negatives);
  EXPECT_EQ(m.fpr, 0.0);
}

TEST(Confusion, MatchesLoopAndCount) {
  Rng rng(30);
  std::vector<double> s(30);
  std::vector<int> y(30);
  for (std::size_t i = 0; i < s.size(); ++i) {
    s[i] = std::round(rng.uniform() * 20.0) / 20.0;
    y[i] = rng.uniform() < 0.4 ? 1 : 0;
  }
  y[0] = 1;
  y[1] = 0;
  for (const double thr : {0.0, 0.25, 0.5, 0.55, 0.8, 1.0}) {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      const bool hit = s[i] >= thr;
      if (y[i] == 1) (hit ? tp : fn)++;
      else (hit ? fp : tn)++;
    }
    const auto m = confusion_metrics(s, y, thr);
    EXPECT_EQ(m.tp, tp);
    EXPECT_EQ(m.fp, fp);
    EXPECT_EQ(m.tn, tn);
    EXPECT_EQ(m.fn, fn);
    EXPECT_EQ(m.tpr, static_cast<double>(tp) / static_cast<double>(tp + fn));
    EXPECT_EQ(m.fpr, static_cast<double>(fp) / static_cast<double>(fp + tn));
    EXPECT_EQ(m.accuracy, static_cast<double>(tp + tn) / 30.0);
  }
}

TEST(RocAuc, SeparatedAndTied) {
  EXPECT_EQ(roc_auc(std::vector<double>{0.1, 0.2, 0.8, 0.9}, std::vector<int>{0, 0, 1, 1}), 1.0);
  EXPECT_EQ(roc_auc(std::vector<double>{0.1, 0.2, 0.8, 0.9}, std::vector<int>{1, 1, 0, 0}), 0.0);
  EXPECT_EQ(roc_auc(std::vector<double>(6, 0.3), std::vector<int>{1, 0, 1, 0, 0, 0}), 0.5);
  EXPECT_THROW(roc_auc(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}), ContractViolation);
}

TEST(RocAuc, EqualsPairEnumerationExactly) {
  Rng rng(46);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = t == 0 ? 10 : 2 + rng.below(60);
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = t % 2 ? std::round(rng.uniform() * 8.0) / 8.0 : rng.uniform();
      y[i] = t == 0 ? (i < 4 ? 1 : 0) : static_cast<int>(rng.below(2));
    }
    y[0] = 1;
    y[n - 1] = 0;
    EXPECT_EQ(roc_auc(s, y), check::brute_force_auc(s, y));
  }
}

TEST(RocAuc, InvariantUnderMonotoneTransform) {
  Rng rng(2);
  std::vector<double> s(50), t(50);
  std::vector<int> y(50);
  for (std::size_t i = 0; i < s.size(); ++i) {
    s[i] = rng.uniform();
    t[i] = std::exp(3.0 * s[i]) - 7.0;
    y[i] = i % 4 == 0 ? 1 : 0;
  }
  EXPECT_EQ(roc_auc(s, y), roc_auc(t, y));
}

TEST(Uncertainty, HandExample) {
  const std::vector<double> s{0.2, 0.5, 0.9, 0.15, 0.3};
  const std::vector<int> y{1, 1, 1, 0, 0};
  const auto u = uncertainty_interval(s, y, 0.4);
  EXPECT_EQ(u.lower_bound, 0.2);
  EXPECT_EQ(u.flagged, 2u);
  EXPECT_EQ(u.flagged_positives, 1u);
  EXPECT_DOUBLE_EQ(u.manual_checks, 0.4);
  EXPECT_DOUBLE_EQ(u.useful_checks, 0.2);
  EXPECT_EQ(u.false_negatives, 1u);
  EXPECT_TRUE(u.captures_all_false_negatives());
  EXPECT_NEAR(u.width(), 0.2, 1e-15);
}

TEST(Uncertainty, DegenerateWhenNoPositiveBelowThreshold) {
  const std::vector<double> s{0.5, 0.9, 0.1, 0.45};
  const std::vector<int> y{1, 1, 0, 0};
  const auto u = uncertainty_interval(s, y, 0.5);
  EXPECT_EQ(u.lower_bound, 0.5);
  EXPECT_EQ(u.width(), 0.0);
  EXPECT_EQ(u.flagged, 0u);
  EXPECT_EQ(u.manual_checks, 0.0);
  EXPECT_EQ(u.useful_checks, 0.0);
  EXPECT_TRUE(u.captures_all_false_negatives());
}

TEST(Uncertainty, AlwaysCapturesFalseNegatives) {
  Rng rng(77);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> s(25);
    std::vector<int> y(25);
    for (std::size_t i = 0; i < s.size(); ++i) {
      s[i] = rng.uniform();
      y[i] = static_cast<int>(rng.below(2));
    }
    const double thr = rng.uniform();
    const auto u = uncertainty_interval(s, y, thr);
    const auto m = confusion_metrics(s, y, thr);
    EXPECT_EQ(u.false_negatives, m.fn);
    EXPECT_TRUE(u.captures_all_false_negatives());
    EXPECT_LE(u.useful_checks, u.manual_checks);
    EXPECT_LE(u.lower_bound, u.threshold);
  }
}

}  // namespace
}  // namespace tapauc::eval
