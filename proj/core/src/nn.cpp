#include "tapauc/nn.hpp"

#include <cmath>
#include <string>

#include "tapauc/error.hpp"

namespace tapauc::nn {

NetworkConfig NetworkConfig::for_inputs(int input_dim) {
  NetworkConfig config;
  config.input_dim = input_dim;
  config.hidden_dim = input_dim / 2 < 1 ? 1 : input_dim / 2;
  return config;
}

void NetworkConfig::validate() const {
  if (input_dim < 1) throw ConfigError("input_dim must be >= 1, got " + std::to_string(input_dim));
  if (hidden_dim < 1) throw ConfigError("hidden_dim must be >= 1, got " + std::to_string(hidden_dim));
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw ConfigError("dropout_rate must lie in [0, 1), got " + std::to_string(dropout_rate));
  }
}

Parameters Parameters::zeros(const NetworkConfig& config) {
  Parameters p;
  p.layer1_weights = Matrix::Zero(config.hidden_dim, config.input_dim);
  p.layer1_bias = Vector::Zero(config.hidden_dim);
  p.bn_scale = Vector::Zero(config.hidden_dim);
  p.bn_shift = Vector::Zero(config.hidden_dim);
  p.layer2_weights = Vector::Zero(config.hidden_dim);
  p.layer2_bias = 0.0;
  return p;
}

std::array<Eigen::Map<Vector>, 6> Parameters::views() {
  return {Eigen::Map<Vector>(layer1_weights.data(), layer1_weights.size()),
          Eigen::Map<Vector>(layer1_bias.data(), layer1_bias.size()),
          Eigen::Map<Vector>(bn_scale.data(), bn_scale.size()),
          Eigen::Map<Vector>(bn_shift.data(), bn_shift.size()),
          Eigen::Map<Vector>(layer2_weights.data(), layer2_weights.size()),
          Eigen::Map<Vector>(&layer2_bias, 1)};
}

std::array<Eigen::Map<const Vector>, 6> Parameters::views() const {
  return {Eigen::Map<const Vector>(layer1_weights.data(), layer1_weights.size()),
          Eigen::Map<const Vector>(layer1_bias.data(), layer1_bias.size()),
          Eigen::Map<const Vector>(bn_scale.data(), bn_scale.size()),
          Eigen::Map<const Vector>(bn_shift.data(), bn_shift.size()),
          Eigen::Map<const Vector>(layer2_weights.data(), layer2_weights.size()),
          Eigen::Map<const Vector>(&layer2_bias, 1)};
}

Index Parameters::size() const {
  Index n = 0;
  for (const auto& v : views()) n += v.size();
  return n;
}

bool Parameters::all_finite() const {
  for (const auto& v : views()) {
    if (!v.allFinite()) return false;
  }
  return true;
}

std::vector<double> Parameters::flatten() const {
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(size()));
  for (const auto& v : views()) flat.insert(flat.end(), v.data(), v.data() + v.size());
  return flat;
}

void Parameters::assign(std::span<const double> flat) {
  TAPAUC_EXPECTS(static_cast<Index>(flat.size()) == size(), "flat parameter vector has the wrong length");
  std::size_t offset = 0;
  for (auto& v : views()) {
    for (Index i = 0; i < v.size(); ++i) v[i] = flat[offset++];
  }
}

MlpModel init_network(const NetworkConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  MlpModel model;
  model.config = config;
  model.params = Parameters::zeros(config);

  const double bound1 = std::sqrt(6.0 / config.input_dim);
  // Column-major fill order is part of the determinism contract.
  for (Index j = 0; j < model.params.layer1_weights.cols(); ++j) {
    for (Index i = 0; i < model.params.layer1_weights.rows(); ++i) {
      model.params.layer1_weights(i, j) = rng.uniform(-bound1, bound1);
    }
  }
  const double bound2 = std::sqrt(3.0 / config.hidden_dim);
  for (Index i = 0; i < model.params.layer2_weights.size(); ++i) {
    model.params.layer2_weights[i] = rng.uniform(-bound2, bound2);
  }
  model.params.bn_scale.setOnes();
  model.bn_running_mean = Vector::Zero(config.hidden_dim);
  model.bn_running_var = Vector::Ones(config.hidden_dim);
  return model;
}

namespace {

double sigmoid(double x) {
  // Branching keeps exp() from overflowing for large |x|.
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

ForwardResult run_forward(const MlpModel& model, const Matrix& batch, Mode mode, Rng* rng) {
  const auto& cfg = model.config;
  const auto& p = model.params;
  if (batch.cols() != cfg.input_dim) {
    throw ContractViolation("batch has " + std::to_string(batch.cols()) + " columns, model expects " +
                            std::to_string(cfg.input_dim));
  }
  const Index n = batch.rows();
  TAPAUC_EXPECTS(n >= 1, "forward needs at least one row");
  const bool train = mode == Mode::train;
  if (train && cfg.use_batchnorm && n < 2) {
    throw ContractViolation("train-mode batchnorm needs a batch of at least 2 rows");
  }
  const bool use_dropout = train && cfg.dropout_rate > 0.0;
  TAPAUC_EXPECTS(!use_dropout || rng != nullptr, "train-mode dropout needs a random generator");

  ForwardCache c;
  c.mode = mode;
  c.model_revision = model.revision;
  c.inputs = batch;
  c.pre_norm = (batch * p.layer1_weights.transpose()).rowwise() + p.layer1_bias.transpose();

  if (cfg.use_batchnorm) {
    if (train) {
      c.norm_mean = c.pre_norm.colwise().mean().transpose();
      const Matrix centered = c.pre_norm.rowwise() - c.norm_mean.transpose();
      c.norm_var = centered.colwise().squaredNorm().transpose() / static_cast<double>(n);
    } else {
      c.norm_mean = model.bn_running_mean;
      c.norm_var = model.bn_running_var;
    }
    c.inv_std = (c.norm_var.array() + kBatchNormEpsilon).rsqrt().matrix();
    c.normalized = ((c.pre_norm.rowwise() - c.norm_mean.transpose()).array().rowwise() *
                    c.inv_std.transpose().array())
                       .matrix();
    c.post_norm = (c.normalized.array().rowwise() * p.bn_scale.transpose().array()).matrix().rowwise() +
                  p.bn_shift.transpose();
  } else {
    c.normalized = c.pre_norm;
    c.post_norm = c.pre_norm;
  }

  c.dropout_mask = Matrix::Ones(n, cfg.hidden_dim);
  if (use_dropout) {
    const double keep_scale = 1.0 / (1.0 - cfg.dropout_rate);
    for (Index j = 0; j < c.dropout_mask.cols(); ++j) {
      for (Index i = 0; i < n; ++i) {
        c.dropout_mask(i, j) = rng->uniform() < cfg.dropout_rate ? 0.0 : keep_scale;
      }
    }
  }
  c.hidden = (c.post_norm.array().max(0.0) * c.dropout_mask.array()).matrix();

  const Vector logits = (c.hidden * p.layer2_weights).array() + p.layer2_bias;
  c.scores = logits.unaryExpr([](double x) { return sigmoid(x); });

  ForwardResult result;
  result.scores = c.scores;
  result.cache = std::move(c);
  return result;
}

}  // namespace

ForwardResult forward(MlpModel& model, const Matrix& batch, Mode mode, Rng* rng) {
  ForwardResult result = run_forward(model, batch, mode, rng);
  if (mode == Mode::train && model.config.use_batchnorm) {
    // Running variance uses the unbiased estimator.
    const auto& c = result.cache;
    const double n = static_cast<double>(batch.rows());
    const double unbiased = n / (n - 1.0);
    model.bn_running_mean = (1.0 - kBatchNormMomentum) * model.bn_running_mean + kBatchNormMomentum * c.norm_mean;
    model.bn_running_var =
        (1.0 - kBatchNormMomentum) * model.bn_running_var + (kBatchNormMomentum * unbiased) * c.norm_var;
  }
  return result;
}

Gradients backward(const MlpModel& model, const ForwardCache& cache, const Vector& score_gradients) {
  const auto& cfg = model.config;
  const auto& p = model.params;
  TAPAUC_EXPECTS(cache.model_revision == model.revision, "forward cache is stale: the model was updated since");
  TAPAUC_EXPECTS(cache.hidden.cols() == cfg.hidden_dim && cache.inputs.cols() == cfg.input_dim,
                 "forward cache does not match the model shape");
  const Index n = cache.scores.size();
  TAPAUC_EXPECTS(score_gradients.size() == n, "score gradient length differs from the cached batch size");

  Gradients g = Parameters::zeros(cfg);

  // sigmoid
  const Vector d_logit = score_gradients.array() * cache.scores.array() * (1.0 - cache.scores.array());
  g.layer2_weights = cache.hidden.transpose() * d_logit;
  g.layer2_bias = d_logit.sum();

  // dense2 -> dropout -> relu
  Matrix d_post = d_logit * p.layer2_weights.transpose();
  d_post.array() *= cache.dropout_mask.array() * (cache.post_norm.array() > 0.0).cast<double>();

  Matrix d_pre;
  if (cfg.use_batchnorm) {
    g.bn_scale = (d_post.array() * cache.normalized.array()).colwise().sum().transpose();
    g.bn_shift = d_post.colwise().sum().transpose();
    const Matrix d_norm = (d_post.array().rowwise() * p.bn_scale.transpose().array()).matrix();
    if (cache.mode == Mode::train) {
      // The batch mean and variance depend on every row of the batch.
      const double inv_n = 1.0 / static_cast<double>(n);
      const Eigen::RowVectorXd sum_d = d_norm.colwise().sum();
      const Eigen::RowVectorXd sum_dx = (d_norm.array() * cache.normalized.array()).colwise().sum();
      Matrix centered = (d_norm * static_cast<double>(n)).rowwise() - sum_d;
      centered -= (cache.normalized.array().rowwise() * sum_dx.array()).matrix();
      d_pre = (centered.array().rowwise() * (cache.inv_std.transpose().array() * inv_n)).matrix();
    } else {
      d_pre = (d_norm.array().rowwise() * cache.inv_std.transpose().array()).matrix();
    }
  } else {
    d_pre = d_post;
  }

  g.layer1_weights = d_pre.transpose() * cache.inputs;
  g.layer1_bias = d_pre.colwise().sum().transpose();
  return g;
}

Vector predict_scores(const MlpModel& model, const Matrix& features) {
  return run_forward(model, features, Mode::eval, nullptr).scores;
}

OptimizerState OptimizerState::for_model(const MlpModel& model, double learning_rate) {
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  OptimizerState s;
  s.first_moment = Parameters::zeros(model.config);
  s.second_moment = Parameters::zeros(model.config);
  s.learning_rate = learning_rate;
  return s;
}

void adam_step(MlpModel& model, const Gradients& grads, OptimizerState& state) {
  TAPAUC_EXPECTS(grads.size() == model.params.size() && state.first_moment.size() == model.params.size(),
                 "gradient / optimizer shapes differ from the model");
  if (!grads.all_finite()) throw NumericalError("non-finite gradient passed to the optimizer");

  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);

  auto params = model.params.views();
  const auto g = grads.views();
  auto m = state.first_moment.views();
  auto v = state.second_moment.views();
  for (std::size_t k = 0; k < params.size(); ++k) {
    m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * g[k];
    v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * g[k].cwiseAbs2();
    params[k].array() -= state.learning_rate * (m[k].array() / correction1) /
                         ((v[k].array() / correction2).sqrt() + state.epsilon);
  }
  ++model.revision;
}

}  // namespace tapauc::nn
