#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "tapauc/check/oracles.hpp"
#include "tapauc/error.hpp"
#include "tapauc/losses.hpp"
#include "tapauc/random.hpp"

namespace tapauc::loss {
namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (const double x : v) out[i++] = x;
  return out;
}

std::span<const double> as_span(const Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

Vector random_scores(Rng& rng, std::size_t n) {
  Vector v(static_cast<Index>(n));
  for (auto& x : v) x = rng.uniform(0.001, 0.999);
  return v;
}

TEST(Bce, HalfScoreWithPositiveLabelIsLn2) {
  const std::vector<int> labels{1};
  const auto r = bce_loss(vec({0.5}), labels);
  EXPECT_NEAR(r.value, std::log(2.0), 1e-15);
  EXPECT_NEAR(r.score_gradients[0], -2.0, 1e-15);
}

TEST(Bce, PerfectPredictionIsClampedNearZero) {
  const std::vector<int> labels{1, 0, 1};
  const auto r = bce_loss(vec({1.0, 0.0, 1.0}), labels);
  EXPECT_LE(r.value, 1e-11);
  EXPECT_TRUE(r.score_gradients.allFinite());
}

TEST(Bce, MatchesScalarOracle) {
  Rng rng(5);
  const auto s = random_scores(rng, 8);
  const std::vector<int> labels{1, 0, 0, 1, 1, 0, 0, 0};
  const auto r = bce_loss(s, labels);
  const auto ref = check::naive_bce(as_span(s), labels);
  EXPECT_NEAR(r.value, ref.value, 1e-12);
  for (Index i = 0; i < 8; ++i) EXPECT_NEAR(r.score_gradients[i], ref.grad[static_cast<std::size_t>(i)], 1e-12);
}

TEST(ApproxAuc, SeparatedPairHasNoLoss) {
  const auto r = approx_auc_loss(ScorePartition::from_sets(vec({1.0}), vec({0.0})), 0.5);
  EXPECT_EQ(r.value, 0.0);
  EXPECT_TRUE(r.score_gradients.isZero());
}

TEST(ApproxAuc, SingleViolatingPair) {
  const auto r = approx_auc_loss(ScorePartition::from_sets(vec({0.4}), vec({0.6})), 0.1);
  EXPECT_NEAR(r.value, 0.09, 1e-15);
  EXPECT_NEAR(r.score_gradients[0], -0.6, 1e-15);  // positive
  EXPECT_NEAR(r.score_gradients[1], 0.6, 1e-15);   // negative
}

TEST(ApproxAuc, MatchesDoubleLoopOnThreeByFive) {
  Rng rng(17);
  const auto p = random_scores(rng, 3);
  const auto n = random_scores(rng, 5);
  const auto r = approx_auc_loss(ScorePartition::from_sets(p, n), 0.3);
  const auto ref = check::naive_pairwise_hinge(as_span(p), as_span(n), 0.3);
  EXPECT_NEAR(r.value, ref.value, 1e-12);
  for (Index i = 0; i < 3; ++i) EXPECT_NEAR(r.score_gradients[i], ref.grad_positives[static_cast<std::size_t>(i)], 1e-12);
  for (Index i = 0; i < 5; ++i) {
    EXPECT_NEAR(r.score_gradients[3 + i], ref.grad_negatives[static_cast<std::size_t>(i)], 1e-12);
  }
}

TEST(ApproxAuc, GradientsFollowBatchRowsFromLabels) {
  const Vector scores = vec({0.6, 0.4, 0.2, 0.9});
  const std::vector<int> labels{0, 1, 0, 1};
  const auto r = approx_auc_loss(ScorePartition::from_labels(scores, labels), 0.1);
  const auto ref = check::naive_pairwise_hinge(std::vector<double>{0.4, 0.9}, std::vector<double>{0.6, 0.2}, 0.1);
  EXPECT_NEAR(r.score_gradients[0], ref.grad_negatives[0], 1e-15);
  EXPECT_NEAR(r.score_gradients[1], ref.grad_positives[0], 1e-15);
  EXPECT_NEAR(r.score_gradients[2], ref.grad_negatives[1], 1e-15);
  EXPECT_NEAR(r.score_gradients[3], ref.grad_positives[1], 1e-15);
}

TEST(ApproxAuc, RejectsEmptyClassesAndBadMargin) {
  EXPECT_THROW(approx_auc_loss(ScorePartition::from_sets(Vector(0), vec({0.1})), 0.5), ContractViolation);
  EXPECT_THROW(approx_auc_loss(ScorePartition::from_sets(vec({0.1}), Vector(0)), 0.5), ContractViolation);
  EXPECT_THROW(approx_auc_loss(ScorePartition::from_sets(vec({0.1}), vec({0.2})), 0.0), ContractViolation);
}

TEST(SelectHardNegatives, TopFractionByScore) {
  const auto idx = select_hard_negatives(vec({0.9, 0.1, 0.7, 0.3}), NegativeRatio::fraction(0.5));
  EXPECT_EQ(idx, (std::vector<Index>{0, 2}));
}

TEST(SelectHardNegatives, EmptyFloorFallsBackToSingleTop) {
  const auto idx = select_hard_negatives(vec({0.2, 0.8, 0.5, 0.1}), NegativeRatio::fraction(0.05));
  EXPECT_EQ(idx, (std::vector<Index>{1}));
  EXPECT_EQ(select_hard_negatives(vec({0.2, 0.8, 0.5}), NegativeRatio::single()), (std::vector<Index>{1}));
}

TEST(SelectHardNegatives, TiesKeepLowerIndices) {
  const auto idx = select_hard_negatives(vec({0.5, 0.5, 0.5, 0.5, 0.5}), NegativeRatio::fraction(0.5));
  EXPECT_EQ(idx, (std::vector<Index>{0, 1}));
}

TEST(SelectHardNegatives, RejectsEmptySet) {
  EXPECT_THROW(select_hard_negatives(Vector(0), NegativeRatio::single()), ContractViolation);
}

TEST(NegativeRatio, SubsetSizesAndParsing) {
  EXPECT_EQ(NegativeRatio::fraction(0.1).subset_size(30), 3u);
  EXPECT_EQ(NegativeRatio::fraction(0.05).subset_size(285), 14u);
  EXPECT_EQ(NegativeRatio::fraction(0.25).subset_size(3), 1u);
  EXPECT_EQ(NegativeRatio::fraction(1.0).subset_size(7), 7u);
  EXPECT_EQ(NegativeRatio::single().subset_size(100), 1u);
  EXPECT_EQ(NegativeRatio::parse("single"), NegativeRatio::single());
  EXPECT_EQ(NegativeRatio::parse("0.25"), NegativeRatio::fraction(0.25));
  EXPECT_EQ(NegativeRatio::fraction(0.05).to_string(), "0.05");
  EXPECT_THROW(NegativeRatio::fraction(0.0), ConfigError);
  EXPECT_THROW(NegativeRatio::fraction(1.5), ConfigError);
  EXPECT_THROW(NegativeRatio::parse("half"), ConfigError);
}

TEST(TapAuc, HandExample) {
  const auto part = ScorePartition::from_sets(vec({0.8, 0.6}), vec({0.7, 0.2, 0.1}));
  const SelectionSchedule sched{.total_epochs = 10, .warmup_epochs = 2, .alpha = NegativeRatio::fraction(1.0 / 3.0),
                                .margin = 0.1};
  const auto r = tapauc_loss(part, sched, 5);
  EXPECT_NEAR(r.value, 0.02, 1e-15);
  // Only 0.7 is selected: d/ds_n = 2 * (0 + 0.2) / 2
  EXPECT_NEAR(r.score_gradients[2], 0.2, 1e-15);
  EXPECT_EQ(r.score_gradients[3], 0.0);
  EXPECT_EQ(r.score_gradients[4], 0.0);
  EXPECT_EQ(r.score_gradients[0], 0.0);
  EXPECT_NEAR(r.score_gradients[1], -0.2, 1e-15);
}

TEST(TapAuc, WarmupAndFullRatioEqualApproxAucBitwise) {
  Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    const auto part = ScorePartition::from_sets(random_scores(rng, 1 + rng.below(20)), random_scores(rng, 1 + rng.below(20)));
    const auto ref = approx_auc_loss(part, 0.3);
    const SelectionSchedule all{.total_epochs = 5, .warmup_epochs = 0, .alpha = NegativeRatio::fraction(1.0), .margin = 0.3};
    const SelectionSchedule warm{.total_epochs = 5, .warmup_epochs = 3, .alpha = NegativeRatio::single(), .margin = 0.3};
    for (const auto& r : {tapauc_loss(part, all, 4), tapauc_loss(part, warm, 2)}) {
      EXPECT_EQ(r.value, ref.value);
      EXPECT_TRUE((r.score_gradients.array() == ref.score_gradients.array()).all());
    }
  }
}

TEST(TapAuc, RejectsEpochOutsideSchedule) {
  const auto part = ScorePartition::from_sets(vec({0.8}), vec({0.7}));
  const SelectionSchedule sched{.total_epochs = 3, .warmup_epochs = 1, .alpha = NegativeRatio::single(), .margin = 0.1};
  EXPECT_THROW(tapauc_loss(part, sched, 3), ContractViolation);
  EXPECT_THROW(tapauc_loss(part, sched, -1), ContractViolation);
}

TEST(Properties, OracleEquivalenceNonNegativitySparsity) {
  Rng rng(2024);
  const NegativeRatio alphas[] = {NegativeRatio::single(), NegativeRatio::fraction(0.05), NegativeRatio::fraction(0.1),
                                  NegativeRatio::fraction(0.25), NegativeRatio::fraction(0.5), NegativeRatio::fraction(1.0)};
  for (int t = 0; t < 300; ++t) {
    const auto p = random_scores(rng, 1 + rng.below(50));
    const auto n = random_scores(rng, 1 + rng.below(50));
    const double margin = rng.uniform(0.05, 1.0);
    const auto alpha = alphas[rng.below(6)];
    const auto part = ScorePartition::from_sets(p, n);
    const SelectionSchedule sched{.total_epochs = 2, .warmup_epochs = 0, .alpha = alpha, .margin = margin};
    const auto r = tapauc_loss(part, sched, 1);
    const auto k = alpha.subset_size(static_cast<std::size_t>(n.size()));
    const auto ref = check::naive_tapauc(as_span(p), as_span(n), k, margin);

    ASSERT_GE(r.value, 0.0);
    EXPECT_NEAR(r.value, ref.value, 1e-12);
    for (Index i = 0; i < p.size(); ++i) {
      EXPECT_NEAR(r.score_gradients[i], ref.grad_positives[static_cast<std::size_t>(i)], 1e-12);
    }
    const auto hard = select_hard_negatives(n, alpha);
    const std::set<Index> chosen(hard.begin(), hard.end());
    for (Index i = 0; i < n.size(); ++i) {
      EXPECT_NEAR(r.score_gradients[p.size() + i], ref.grad_negatives[static_cast<std::size_t>(i)], 1e-12);
      if (!chosen.count(i)) EXPECT_EQ(r.score_gradients[p.size() + i], 0.0);
    }

    // zero iff min(P) >= max(N_alpha) + margin
    double max_hard = -1.0;
    for (const Index i : hard) max_hard = std::max(max_hard, n[i]);
    EXPECT_EQ(r.value == 0.0, p.minCoeff() >= max_hard + margin);
  }
}

TEST(Properties, SelectionIsMonotoneInAlpha) {
  Rng rng(8);
  for (int t = 0; t < 100; ++t) {
    const auto n = random_scores(rng, 1 + rng.below(60));
    std::vector<Index> previous;
    for (const double a : {0.05, 0.1, 0.25, 0.5, 0.75, 1.0}) {
      auto current = select_hard_negatives(n, NegativeRatio::fraction(a));
      ASSERT_GE(current.size(), previous.size());
      EXPECT_TRUE(std::equal(previous.begin(), previous.end(), current.begin()));
      previous = std::move(current);
    }
    ASSERT_EQ(previous.size(), static_cast<std::size_t>(n.size()));
    std::vector<double> picked, all(n.data(), n.data() + n.size());
    for (const Index i : previous) picked.push_back(n[i]);
    std::sort(picked.begin(), picked.end());
    std::sort(all.begin(), all.end());
    EXPECT_EQ(picked, all);
  }
}

// Central differences over the scores, with the oracle as the objective.
void expect_score_gradients(const Vector& p, const Vector& n, const SelectionSchedule& sched, int epoch) {
  const auto r = tapauc_loss(ScorePartition::from_sets(p, n), sched, epoch);
  const std::size_t k = epoch < sched.warmup_epochs ? static_cast<std::size_t>(n.size())
                                                    : sched.alpha.subset_size(static_cast<std::size_t>(n.size()));
  const auto np = static_cast<std::size_t>(p.size());
  std::vector<double> x(p.data(), p.data() + p.size());
  x.insert(x.end(), n.data(), n.data() + n.size());
  const auto objective = [&](std::span<const double> s) {
    return check::naive_tapauc(s.first(np), s.subspan(np), k, sched.margin).value;
  };
  const auto fd = check::central_differences(objective, x, 1e-6);
  for (std::size_t i = 0; i < fd.size(); ++i) {
    const double rel = std::abs(r.score_gradients[static_cast<Index>(i)] - fd[i]) / std::max(1e-8, std::abs(fd[i]));
    EXPECT_LE(rel, 1e-6) << "score " << i << " analytic " << r.score_gradients[static_cast<Index>(i)] << " fd " << fd[i];
  }
}

TEST(Properties, ScoreGradientsMatchFiniteDifferences) {
  Rng rng(99);
  for (int t = 0; t < 40; ++t) {
    Vector p = random_scores(rng, 1 + rng.below(12));
    Vector n = random_scores(rng, 1 + rng.below(12));
    const double margin = 0.3;
    // Keep every hinge argument and every selection gap away from the 1e-6 probe.
    bool clean = true;
    for (const double sp : p) {
      for (const double sn : n) clean = clean && std::abs(sn + margin - sp) > 1e-4;
    }
    for (Index i = 0; i < n.size(); ++i) {
      for (Index j = 0; j < i; ++j) clean = clean && std::abs(n[i] - n[j]) > 1e-4;
    }
    if (!clean) continue;
    expect_score_gradients(p, n, {.total_epochs = 4, .warmup_epochs = 2, .alpha = NegativeRatio::fraction(0.25), .margin = margin}, 3);
    expect_score_gradients(p, n, {.total_epochs = 4, .warmup_epochs = 2, .alpha = NegativeRatio::single(), .margin = margin}, 0);
  }
}

TEST(Properties, GradientNearHingeBoundaryFromActiveSide) {
  // s_n + margin - s_p = 1e-4 for the boundary pair.
  const Vector p = vec({0.6, 0.9});
  const Vector n = vec({0.4001, 0.1});
  expect_score_gradients(p, n, {.total_epochs = 2, .warmup_epochs = 0, .alpha = NegativeRatio::fraction(1.0), .margin = 0.2}, 1);
  const auto r = approx_auc_loss(ScorePartition::from_sets(p, n), 0.2);
  EXPECT_NEAR(r.score_gradients[2], 2.0 * 1e-4 / 4.0, 1e-15);
}

}  // namespace
}  // namespace tapauc::loss
