#pragma once

// Two-layer fully-connected scorer with hand-written backpropagation:
//
//   score = sigmoid(w2 . dropout(relu(batchnorm(W1 x + b1))) + b2)
//
// Everything runs in double precision. Rows of a batch matrix are instances.

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "tapauc/random.hpp"

namespace tapauc::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

struct NetworkConfig {
  int input_dim = 1;
  int hidden_dim = 1;
  double dropout_rate = 0.5;
  bool use_batchnorm = true;

  /// Hidden layer of half the input width, rounded down, at least one unit.
  static NetworkConfig for_inputs(int input_dim);

  /// Throws ConfigError.
  void validate() const;
};

/// Trainable tensors. Also used for gradients and optimizer moments.
struct Parameters {
  Matrix layer1_weights;  // hidden x input
  Vector layer1_bias;     // hidden
  Vector bn_scale;        // hidden
  Vector bn_shift;        // hidden
  Vector layer2_weights;  // hidden (the single output row)
  double layer2_bias = 0.0;

  static Parameters zeros(const NetworkConfig& config);

  Index size() const;
  bool all_finite() const;

  /// Flat views in a fixed order: W1 (column-major), b1, bn scale, bn shift, w2, b2.
  std::array<Eigen::Map<Vector>, 6> views();
  std::array<Eigen::Map<const Vector>, 6> views() const;

  std::vector<double> flatten() const;
  void assign(std::span<const double> flat);
};

using Gradients = Parameters;

struct MlpModel {
  NetworkConfig config;
  Parameters params;
  Vector bn_running_mean;
  Vector bn_running_var;
  /// Incremented by every optimizer update; forward caches record it.
  std::uint64_t revision = 0;
};

inline constexpr double kBatchNormEpsilon = 1e-5;
inline constexpr double kBatchNormMomentum = 0.1;

enum class Mode { train, eval };

struct ForwardCache {
  Mode mode = Mode::eval;
  std::uint64_t model_revision = 0;
  Matrix inputs;          // B x d
  Matrix pre_norm;        // B x H, dense1 output
  Matrix normalized;      // B x H, xhat (equals pre_norm without batchnorm)
  Vector norm_mean;       // batch statistics in train mode, running ones in eval
  Vector norm_var;
  Vector inv_std;
  Matrix post_norm;       // B x H, affine batchnorm output
  Matrix dropout_mask;    // B x H, entries 0 or 1/(1-p); all ones in eval
  Matrix hidden;          // B x H, relu(post_norm) * mask
  Vector scores;          // B
};

struct ForwardResult {
  Vector scores;
  ForwardCache cache;
};

/// Initializes a model with He-uniform first layer and LeCun-uniform output
/// weights, zero biases, identity batchnorm. Deterministic in (config, seed).
MlpModel init_network(const NetworkConfig& config, std::uint64_t seed);

/// Train mode uses batch statistics, samples a dropout mask from `rng` and
/// moves the running statistics toward the batch ones. Eval mode leaves the
/// model untouched and does not need `rng`.
ForwardResult forward(MlpModel& model, const Matrix& batch, Mode mode, Rng* rng = nullptr);

/// Gradients of sum_i score_gradients[i] * score_i with respect to every
/// parameter, through the exact pathway recorded in `cache`.
Gradients backward(const MlpModel& model, const ForwardCache& cache, const Vector& score_gradients);

/// Eval-mode scores.
Vector predict_scores(const MlpModel& model, const Matrix& features);

struct OptimizerState {
  Parameters first_moment;
  Parameters second_moment;
  std::uint64_t step_count = 0;
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static OptimizerState for_model(const MlpModel& model, double learning_rate = 0.01);
};

/// One bias-corrected Adam update in place. Running batchnorm statistics are
/// not touched. Throws NumericalError on non-finite gradients, leaving model
/// and state unchanged.
void adam_step(MlpModel& model, const Gradients& grads, OptimizerState& state);

}  // namespace tapauc::nn
