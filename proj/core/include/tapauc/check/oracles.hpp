#pragma once

// Straight-line reference implementations used to check the production
// code. None of these call into the loss, network or metric routines they
// are meant to verify.

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "tapauc/losses.hpp"
#include "tapauc/nn.hpp"

namespace tapauc::check {

struct PairwiseOracle {
  double value = 0.0;
  std::vector<double> grad_positives;
  std::vector<double> grad_negatives;  // zero for unselected negatives
};

/// Double loop over every (positive, negative) pair.
PairwiseOracle naive_pairwise_hinge(std::span<const double> positives, std::span<const double> negatives,
                                    double margin);

/// Hard negatives by repeated arg-max (first index wins ties), then the double loop.
PairwiseOracle naive_tapauc(std::span<const double> positives, std::span<const double> negatives,
                            std::size_t subset_size, double margin);

struct BceOracle {
  double value = 0.0;
  std::vector<double> grad;
};
BceOracle naive_bce(std::span<const double> scores, std::span<const int> labels);

/// Enumerates all positive/negative pairs; ties count one half.
double brute_force_auc(std::span<const double> scores, std::span<const int> labels);

/// Loops over the network one scalar at a time. Train mode uses batch
/// statistics and no dropout.
std::vector<double> naive_forward(const nn::MlpModel& model, const nn::Matrix& batch, nn::Mode mode);

/// Loss of a score vector plus its gradient, as used inside training.
using ScoreLoss = std::function<loss::LossResult(const nn::Vector& scores)>;
/// Same loss evaluated by an oracle (value only).
using OracleLoss = std::function<double(std::span<const double> scores)>;

struct GradientCheckResult {
  std::size_t parameters = 0;
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

/// Compares forward/loss/backward with central differences of
/// oracle_loss(naive_forward(model)) over every parameter.
/// Relative error: |analytic - numeric| / max(1e-8, |numeric|).
GradientCheckResult check_parameter_gradients(const nn::MlpModel& model, const nn::Matrix& batch,
                                              const ScoreLoss& loss, const OracleLoss& oracle_loss,
                                              double epsilon);

/// Central differences of f around x.
std::vector<double> central_differences(const std::function<double(std::span<const double>)>& f,
                                        std::span<const double> x, double epsilon);

}  // namespace tapauc::check
