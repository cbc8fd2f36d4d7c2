#include "tapauc/check/selftest.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <sstream>

#include "tapauc/check/oracles.hpp"
#include "tapauc/evaluation.hpp"
#include "tapauc/losses.hpp"
#include "tapauc/nn.hpp"
#include "tapauc/random.hpp"

namespace tapauc::check {

namespace {

using Clock = std::chrono::steady_clock;

template <typename Body>
CheckOutcome timed(std::string name, Body&& body) {
  CheckOutcome out;
  out.name = std::move(name);
  const auto start = Clock::now();
  try {
    body(out);
  } catch (const std::exception& e) {
    out.passed = false;
    out.detail = std::string("exception: ") + e.what();
  }
  out.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return out;
}

nn::Vector random_scores(Rng& rng, std::size_t n) {
  nn::Vector v(static_cast<nn::Index>(n));
  for (auto& x : v) x = rng.uniform(0.001, 0.999);
  return v;
}

std::span<const double> as_span(const nn::Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

bool bit_equal(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

bool bit_equal(const loss::LossResult& a, const loss::LossResult& b) {
  if (!bit_equal(a.value, b.value) || a.score_gradients.size() != b.score_gradients.size()) return false;
  for (nn::Index i = 0; i < a.score_gradients.size(); ++i) {
    if (!bit_equal(a.score_gradients[i], b.score_gradients[i])) return false;
  }
  return true;
}

}  // namespace

CheckOutcome gradient_suite(std::uint64_t seed, double epsilon, double tolerance) {
  return timed("gradient_suite", [&](CheckOutcome& out) {
    nn::NetworkConfig cfg{.input_dim = 6, .hidden_dim = 3, .dropout_rate = 0.0, .use_batchnorm = true};
    const auto model = nn::init_network(cfg, seed);
    Rng rng(seed + 1);
    nn::Matrix batch(10, 6);
    for (nn::Index i = 0; i < batch.size(); ++i) batch.data()[i] = rng.uniform(-1.0, 1.0);
    const std::vector<int> labels{1, 0, 0, 1, 0, 0, 1, 0, 1, 0};

    const double margin = 0.5;
    const auto split = [&](std::span<const double> s) {
      std::vector<double> pos, neg;
      for (std::size_t i = 0; i < s.size(); ++i) (labels[i] == 1 ? pos : neg).push_back(s[i]);
      return std::pair{pos, neg};
    };
    const loss::SelectionSchedule schedule{
        .total_epochs = 10, .warmup_epochs = 0, .alpha = loss::NegativeRatio::fraction(0.5), .margin = margin};
    const std::size_t subset = schedule.alpha.subset_size(6);

    struct Case {
      const char* name;
      ScoreLoss loss;
      OracleLoss oracle;
    };
    const std::vector<Case> cases{
        {"bce", [&](const nn::Vector& s) { return loss::bce_loss(s, labels); },
         [&](std::span<const double> s) { return naive_bce(s, labels).value; }},
        {"auc_hinge",
         [&](const nn::Vector& s) {
           return loss::approx_auc_loss(loss::ScorePartition::from_labels(s, labels), margin);
         },
         [&](std::span<const double> s) {
           const auto [pos, neg] = split(s);
           return naive_pairwise_hinge(pos, neg, margin).value;
         }},
        {"tapauc",
         [&](const nn::Vector& s) {
           return loss::tapauc_loss(loss::ScorePartition::from_labels(s, labels), schedule, 5);
         },
         [&](std::span<const double> s) {
           const auto [pos, neg] = split(s);
           return naive_tapauc(pos, neg, subset, margin).value;
         }},
    };

    std::ostringstream detail;
    out.passed = true;
    for (const auto& c : cases) {
      const auto r = check_parameter_gradients(model, batch, c.loss, c.oracle, epsilon);
      const bool ok = r.max_relative_error <= tolerance;
      out.passed = out.passed && ok;
      detail << c.name << ": max rel err " << r.max_relative_error << " over " << r.parameters << " params";
      if (!ok) detail << " (param " << r.worst_index << " analytic " << r.worst_analytic << " fd " << r.worst_numeric << ")";
      detail << "; ";
    }
    out.detail = detail.str();
  });
}

CheckOutcome loss_oracle_suite(std::uint64_t seed, int instances, double tolerance) {
  return timed("loss_oracle_suite", [&](CheckOutcome& out) {
    Rng rng(seed);
    double worst = 0.0;
    int auc_mismatches = 0;
    const double margins[] = {0.1, 0.3, 0.5, 0.7, 1.0};
    const loss::NegativeRatio alphas[] = {loss::NegativeRatio::single(), loss::NegativeRatio::fraction(0.05),
                                          loss::NegativeRatio::fraction(0.1), loss::NegativeRatio::fraction(0.25),
                                          loss::NegativeRatio::fraction(0.5)};
    for (int t = 0; t < instances; ++t) {
      const auto np = 1 + rng.below(50);
      const auto nn_count = 1 + rng.below(50);
      nn::Vector pos = random_scores(rng, np);
      nn::Vector neg = random_scores(rng, nn_count);
      // Quantized scores produce exact ties and exact hinge boundaries.
      if (t % 4 == 0) {
        for (auto& x : pos) x = std::round(x * 8.0) / 8.0;
        for (auto& x : neg) x = std::round(x * 8.0) / 8.0;
      }
      const double margin = margins[rng.below(5)];
      const auto alpha = alphas[rng.below(5)];
      const auto part = loss::ScorePartition::from_sets(pos, neg);

      const auto full = loss::approx_auc_loss(part, margin);
      const auto full_ref = naive_pairwise_hinge(as_span(pos), as_span(neg), margin);
      const loss::SelectionSchedule sched{.total_epochs = 2, .warmup_epochs = 1, .alpha = alpha, .margin = margin};
      const auto tap = loss::tapauc_loss(part, sched, 1);
      const auto tap_ref =
          naive_tapauc(as_span(pos), as_span(neg), alpha.subset_size(static_cast<std::size_t>(neg.size())), margin);

      const auto compare = [&](const loss::LossResult& got, const PairwiseOracle& ref) {
        worst = std::max(worst, std::abs(got.value - ref.value));
        for (std::size_t i = 0; i < ref.grad_positives.size(); ++i) {
          worst = std::max(worst, std::abs(got.score_gradients[static_cast<nn::Index>(i)] - ref.grad_positives[i]));
        }
        for (std::size_t i = 0; i < ref.grad_negatives.size(); ++i) {
          worst = std::max(worst, std::abs(got.score_gradients[pos.size() + static_cast<nn::Index>(i)] -
                                           ref.grad_negatives[i]));
        }
      };
      compare(full, full_ref);
      compare(tap, tap_ref);

      nn::Vector all(pos.size() + neg.size());
      all << pos, neg;
      std::vector<int> labels(static_cast<std::size_t>(pos.size()), 1);
      labels.resize(static_cast<std::size_t>(all.size()), 0);
      if (eval::roc_auc(as_span(all), labels) != brute_force_auc(as_span(all), labels)) ++auc_mismatches;
    }
    out.passed = worst <= tolerance && auc_mismatches == 0;
    std::ostringstream d;
    d << instances << " instances, max abs deviation " << worst << ", roc_auc mismatches " << auc_mismatches;
    out.detail = d.str();
  });
}

CheckOutcome reduction_identities(std::uint64_t seed) {
  return timed("reduction_identities", [&](CheckOutcome& out) {
    Rng rng(seed);
    int failures = 0;
    for (int t = 0; t < 100; ++t) {
      const auto pos = random_scores(rng, 1 + rng.below(30));
      const auto neg = random_scores(rng, 1 + rng.below(30));
      const auto part = loss::ScorePartition::from_sets(pos, neg);
      const double margin = 0.1 + 0.9 * rng.uniform();
      const auto reference = loss::approx_auc_loss(part, margin);

      const loss::SelectionSchedule all{
          .total_epochs = 4, .warmup_epochs = 0, .alpha = loss::NegativeRatio::fraction(1.0), .margin = margin};
      if (!bit_equal(loss::tapauc_loss(part, all, 2), reference)) ++failures;

      const loss::SelectionSchedule warm{
          .total_epochs = 4, .warmup_epochs = 3, .alpha = loss::NegativeRatio::single(), .margin = margin};
      if (!bit_equal(loss::tapauc_loss(part, warm, 2), reference)) ++failures;

      // floor(0.05 * |N|) = 0 for |N| < 20
      if (neg.size() < 20) {
        const auto picked = loss::select_hard_negatives(neg, loss::NegativeRatio::fraction(0.05));
        nn::Index top = 0;
        for (nn::Index i = 1; i < neg.size(); ++i) {
          if (neg[i] > neg[top]) top = i;
        }
        if (picked.size() != 1 || picked[0] != top) ++failures;
      }
    }
    out.passed = failures == 0;
    out.detail = std::to_string(failures) + " identity violations over 100 instances";
  });
}

CheckOutcome forward_oracle(std::uint64_t seed, double tolerance) {
  return timed("forward_oracle", [&](CheckOutcome& out) {
    auto model = nn::init_network(nn::NetworkConfig{.input_dim = 4, .hidden_dim = 3}, seed);
    Rng rng(seed + 7);
    for (nn::Index i = 0; i < model.bn_running_mean.size(); ++i) {
      model.bn_running_mean[i] = rng.uniform(-0.5, 0.5);
      model.bn_running_var[i] = rng.uniform(0.5, 2.0);
      model.params.bn_scale[i] = rng.uniform(0.5, 1.5);
      model.params.bn_shift[i] = rng.uniform(-0.2, 0.2);
    }
    nn::Matrix batch(5, 4);
    for (nn::Index i = 0; i < batch.size(); ++i) batch.data()[i] = rng.uniform(-2.0, 2.0);

    const auto scores = nn::predict_scores(model, batch);
    const auto ref = naive_forward(model, batch, nn::Mode::eval);
    double worst = 0.0;
    for (nn::Index i = 0; i < scores.size(); ++i) {
      worst = std::max(worst, std::abs(scores[i] - ref[static_cast<std::size_t>(i)]));
      const auto single = nn::predict_scores(model, batch.row(i));
      worst = std::max(worst, std::abs(single[0] - scores[i]));
    }
    out.passed = worst <= tolerance;
    std::ostringstream d;
    d << "max abs deviation " << worst;
    out.detail = d.str();
  });
}

CheckOutcome evaluation_identities(std::uint64_t seed) {
  return timed("evaluation_identities", [&](CheckOutcome& out) {
    Rng rng(seed);
    int failures = 0;
    for (int t = 0; t < 100; ++t) {
      const std::size_t n = 10 + rng.below(60);
      std::vector<double> scores(n);
      std::vector<int> labels(n);
      for (std::size_t i = 0; i < n; ++i) {
        scores[i] = rng.uniform();
        labels[i] = rng.uniform() < 0.4 ? 1 : 0;
      }
      labels[0] = 1;
      labels[1] = 0;
      std::vector<double> pos;
      for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] == 1) pos.push_back(scores[i]);
      }
      const double thr = eval::zfn_threshold(pos).threshold;
      const auto own = eval::confusion_metrics(scores, labels, thr);
      if (own.fn != 0 || own.tpr != 1.0) ++failures;

      // An arbitrary threshold on the same data: every false negative must be flagged.
      const double other = rng.uniform();
      const auto m = eval::confusion_metrics(scores, labels, other);
      const auto u = eval::uncertainty_interval(scores, labels, other);
      if (m.tpr + m.fnr != 1.0) ++failures;
      std::size_t missed = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const bool fn = labels[i] == 1 && scores[i] < other;
        const bool flagged = scores[i] >= u.lower_bound && scores[i] < other;
        if (fn && !flagged) ++missed;
      }
      if (missed != 0 || u.false_negatives != m.fn || u.useful_checks > u.manual_checks) ++failures;
    }
    out.passed = failures == 0;
    out.detail = std::to_string(failures) + " identity violations over 100 instances";
  });
}

std::vector<CheckOutcome> run_selftest(std::uint64_t seed) {
  return {gradient_suite(seed), loss_oracle_suite(seed + 1), reduction_identities(seed + 2),
          forward_oracle(seed + 3), evaluation_identities(seed + 4)};
}

}  // namespace tapauc::check
