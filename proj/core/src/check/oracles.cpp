#include "tapauc/check/oracles.hpp"

#include <algorithm>
#include <cmath>

#include "tapauc/error.hpp"

namespace tapauc::check {

PairwiseOracle naive_pairwise_hinge(std::span<const double> positives, std::span<const double> negatives,
                                    double margin) {
  PairwiseOracle r;
  r.grad_positives.assign(positives.size(), 0.0);
  r.grad_negatives.assign(negatives.size(), 0.0);
  const double norm = static_cast<double>(positives.size()) * static_cast<double>(negatives.size());
  for (std::size_t p = 0; p < positives.size(); ++p) {
    for (std::size_t n = 0; n < negatives.size(); ++n) {
      const double h = std::max(0.0, negatives[n] + margin - positives[p]);
      r.value += h * h;
      r.grad_negatives[n] += 2.0 * h / norm;
      r.grad_positives[p] -= 2.0 * h / norm;
    }
  }
  r.value /= norm;
  return r;
}

PairwiseOracle naive_tapauc(std::span<const double> positives, std::span<const double> negatives,
                            std::size_t subset_size, double margin) {
  std::vector<bool> taken(negatives.size(), false);
  std::vector<std::size_t> chosen;
  for (std::size_t round = 0; round < subset_size; ++round) {
    std::size_t best = negatives.size();
    for (std::size_t n = 0; n < negatives.size(); ++n) {
      if (!taken[n] && (best == negatives.size() || negatives[n] > negatives[best])) best = n;
    }
    taken[best] = true;
    chosen.push_back(best);
  }
  std::vector<double> subset;
  for (const auto n : chosen) subset.push_back(negatives[n]);
  const auto inner = naive_pairwise_hinge(positives, subset, margin);
  PairwiseOracle r;
  r.value = inner.value;
  r.grad_positives = inner.grad_positives;
  r.grad_negatives.assign(negatives.size(), 0.0);
  for (std::size_t k = 0; k < chosen.size(); ++k) r.grad_negatives[chosen[k]] = inner.grad_negatives[k];
  return r;
}

BceOracle naive_bce(std::span<const double> scores, std::span<const int> labels) {
  BceOracle r;
  const double n = static_cast<double>(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double s = std::min(std::max(scores[i], 1e-12), 1.0 - 1e-12);
    if (labels[i] == 1) {
      r.value += -std::log(s) / n;
      r.grad.push_back(-1.0 / s / n);
    } else {
      r.value += -std::log(1.0 - s) / n;
      r.grad.push_back(1.0 / (1.0 - s) / n);
    }
  }
  return r;
}

double brute_force_auc(std::span<const double> scores, std::span<const int> labels) {
  double wins = 0.0;
  double pairs = 0.0;
  for (std::size_t p = 0; p < scores.size(); ++p) {
    if (labels[p] != 1) continue;
    for (std::size_t n = 0; n < scores.size(); ++n) {
      if (labels[n] != 0) continue;
      pairs += 1.0;
      if (scores[p] > scores[n]) {
        wins += 1.0;
      } else if (scores[p] == scores[n]) {
        wins += 0.5;
      }
    }
  }
  TAPAUC_EXPECTS(pairs > 0, "brute-force AUC needs both classes");
  return wins / pairs;
}

std::vector<double> naive_forward(const nn::MlpModel& model, const nn::Matrix& batch, nn::Mode mode) {
  const auto& p = model.params;
  const int d = model.config.input_dim;
  const int h = model.config.hidden_dim;
  const auto rows = static_cast<std::size_t>(batch.rows());

  std::vector<std::vector<double>> z(rows, std::vector<double>(static_cast<std::size_t>(h)));
  for (std::size_t i = 0; i < rows; ++i) {
    for (int j = 0; j < h; ++j) {
      double acc = p.layer1_bias[j];
      for (int k = 0; k < d; ++k) acc += p.layer1_weights(j, k) * batch(static_cast<nn::Index>(i), k);
      z[i][static_cast<std::size_t>(j)] = acc;
    }
  }

  if (model.config.use_batchnorm) {
    for (int j = 0; j < h; ++j) {
      const auto col = static_cast<std::size_t>(j);
      double mean = model.bn_running_mean[j];
      double var = model.bn_running_var[j];
      if (mode == nn::Mode::train) {
        mean = 0.0;
        for (std::size_t i = 0; i < rows; ++i) mean += z[i][col];
        mean /= static_cast<double>(rows);
        var = 0.0;
        for (std::size_t i = 0; i < rows; ++i) var += (z[i][col] - mean) * (z[i][col] - mean);
        var /= static_cast<double>(rows);
      }
      for (std::size_t i = 0; i < rows; ++i) {
        z[i][col] = p.bn_scale[j] * (z[i][col] - mean) / std::sqrt(var + nn::kBatchNormEpsilon) + p.bn_shift[j];
      }
    }
  }

  std::vector<double> scores(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    double logit = p.layer2_bias;
    for (int j = 0; j < h; ++j) logit += p.layer2_weights[j] * std::max(0.0, z[i][static_cast<std::size_t>(j)]);
    scores[i] = 1.0 / (1.0 + std::exp(-logit));
  }
  return scores;
}

std::vector<double> central_differences(const std::function<double(std::span<const double>)>& f,
                                        std::span<const double> x, double epsilon) {
  std::vector<double> point(x.begin(), x.end());
  std::vector<double> grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = point[i];
    point[i] = saved + epsilon;
    const double up = f(point);
    point[i] = saved - epsilon;
    const double down = f(point);
    point[i] = saved;
    grad[i] = (up - down) / (2.0 * epsilon);
  }
  return grad;
}

GradientCheckResult check_parameter_gradients(const nn::MlpModel& model, const nn::Matrix& batch,
                                              const ScoreLoss& loss, const OracleLoss& oracle_loss,
                                              double epsilon) {
  TAPAUC_EXPECTS(model.config.dropout_rate == 0.0, "gradient checks need dropout disabled");
  nn::MlpModel working = model;
  auto pass = nn::forward(working, batch, nn::Mode::train);
  const auto lr = loss(pass.scores);
  const auto analytic = nn::backward(working, pass.cache, lr.score_gradients).flatten();

  const auto objective = [&](std::span<const double> flat) {
    nn::MlpModel probe = model;
    probe.params.assign(flat);
    const auto scores = naive_forward(probe, batch, nn::Mode::train);
    return oracle_loss(scores);
  };
  const auto base = model.params.flatten();
  const auto numeric = central_differences(objective, base, epsilon);

  GradientCheckResult r;
  r.parameters = base.size();
  for (std::size_t i = 0; i < base.size(); ++i) {
    const double rel = std::abs(analytic[i] - numeric[i]) / std::max(1e-8, std::abs(numeric[i]));
    if (rel > r.max_relative_error || i == 0) {
      r.max_relative_error = std::max(r.max_relative_error, rel);
      r.worst_index = i;
      r.worst_analytic = analytic[i];
      r.worst_numeric = numeric[i];
    }
  }
  return r;
}

}  // namespace tapauc::check
