#include "tapauc/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "tapauc/error.hpp"
#include "tapauc/nn.hpp"
#include "tapauc/random.hpp"

namespace tapauc {

using data::Index;

std::string_view to_string(Method method) {
  switch (method) {
    case Method::bce: return "bce";
    case Method::auc_hinge: return "auc_hinge";
    case Method::tapauc: return "tapauc";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  if (name == "bce") return Method::bce;
  if (name == "auc_hinge") return Method::auc_hinge;
  if (name == "tapauc") return Method::tapauc;
  throw ConfigError("unknown method '" + std::string(name) + "' (expected bce, auc_hinge or tapauc)");
}

namespace {

std::string format_number(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

int HyperParams::warmup_epochs() const {
  if (method != Method::tapauc || !warmup_fraction) return 0;
  return static_cast<int>(std::floor(*warmup_fraction * total_epochs + 1e-9));
}

std::string HyperParams::key() const {
  std::string k(to_string(method));
  k += "/e=" + std::to_string(total_epochs);
  if (warmup_fraction) k += "/w=" + format_number(*warmup_fraction);
  if (margin) k += "/g=" + format_number(*margin);
  if (alpha) k += "/a=" + alpha->to_string();
  if (learning_rate != 0.01) k += "/lr=" + format_number(learning_rate);
  if (batch_size != 0) k += "/b=" + std::to_string(batch_size);
  return k;
}

void HyperParams::validate() const {
  const std::string k = key();
  if (total_epochs < 1) throw ConfigError(k + ": total epochs must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError(k + ": learning rate must be positive");
  if (batch_size < 0) throw ConfigError(k + ": batch size must be >= 0 (0 = full batch)");
  const bool hinge = method != Method::bce;
  if (hinge != margin.has_value()) {
    throw ConfigError(k + (hinge ? ": margin required" : ": margin only applies to hinge losses"));
  }
  if (margin && !(*margin > 0.0)) throw ConfigError(k + ": margin must be positive");
  const bool tap = method == Method::tapauc;
  if (tap != warmup_fraction.has_value() || tap != alpha.has_value()) {
    throw ConfigError(k + (tap ? ": warmup and alpha required" : ": warmup/alpha only apply to tapauc"));
  }
  if (warmup_fraction && !(*warmup_fraction >= 0.0 && *warmup_fraction <= 1.0)) {
    throw ConfigError(k + ": warmup fraction must lie in [0, 1]");
  }
}

std::vector<HyperParams> default_grid(Method method, GridPreset preset) {
  const bool full = preset == GridPreset::full;
  const std::vector<double> margins{0.1, 0.3, 0.5, 0.7, 1.0};
  std::vector<HyperParams> grid;
  switch (method) {
    case Method::bce:
      for (const int e : full ? std::vector<int>{200, 500} : std::vector<int>{200}) {
        grid.push_back(HyperParams{.method = Method::bce, .total_epochs = e});
      }
      break;
    case Method::auc_hinge:
      for (const int e : full ? std::vector<int>{200, 500} : std::vector<int>{200}) {
        for (const double g : margins) {
          grid.push_back(HyperParams{.method = Method::auc_hinge, .total_epochs = e, .margin = g});
        }
      }
      break;
    case Method::tapauc: {
      const std::vector<loss::NegativeRatio> alphas{
          loss::NegativeRatio::single(), loss::NegativeRatio::fraction(0.05), loss::NegativeRatio::fraction(0.10),
          loss::NegativeRatio::fraction(0.25), loss::NegativeRatio::fraction(0.50)};
      for (const int e : full ? std::vector<int>{60, 200, 500} : std::vector<int>{60, 200}) {
        for (const double w : {0.25, 0.5, 0.75}) {
          for (const double g : margins) {
            for (const auto& a : alphas) {
              grid.push_back(HyperParams{.method = Method::tapauc,
                                         .total_epochs = e,
                                         .warmup_fraction = w,
                                         .margin = g,
                                         .alpha = a});
            }
          }
        }
      }
      break;
    }
  }
  return grid;
}

namespace {

using nlohmann::json;

std::vector<json> as_list(const json& entry, const char* field) {
  if (!entry.contains(field)) return {json()};
  const json& v = entry.at(field);
  if (v.is_array()) {
    if (v.empty()) throw ConfigError(std::string("grid field '") + field + "' is an empty list");
    return std::vector<json>(v.begin(), v.end());
  }
  return {v};
}

}  // namespace

std::vector<HyperParams> parse_grid_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("grid file is not valid JSON: ") + e.what());
  }
  const json* entries = &doc;
  if (doc.is_object()) {
    if (!doc.contains("configs")) throw ConfigError("grid file needs a \"configs\" list");
    entries = &doc.at("configs");
  }
  if (!entries->is_array() || entries->empty()) throw ConfigError("grid file has no configurations");

  std::vector<HyperParams> grid;
  try {
    for (const json& entry : *entries) {
      if (!entry.is_object() || !entry.contains("method")) throw ConfigError("grid entry without a method");
      const Method method = parse_method(entry.at("method").get<std::string>());
      for (const json& e : as_list(entry, "epochs")) {
        for (const json& w : as_list(entry, "warmup")) {
          for (const json& g : as_list(entry, "margin")) {
            for (const json& a : as_list(entry, "alpha")) {
              for (const json& lr : as_list(entry, "learning_rate")) {
                for (const json& b : as_list(entry, "batch_size")) {
                  HyperParams hp{.method = method};
                  if (e.is_null()) throw ConfigError("grid entry without epochs");
                  hp.total_epochs = e.get<int>();
                  if (!w.is_null()) hp.warmup_fraction = w.get<double>();
                  if (!g.is_null()) hp.margin = g.get<double>();
                  if (!a.is_null()) {
                    hp.alpha = a.is_string() ? loss::NegativeRatio::parse(a.get<std::string>())
                                             : loss::NegativeRatio::fraction(a.get<double>());
                  }
                  if (!lr.is_null()) hp.learning_rate = lr.get<double>();
                  if (!b.is_null()) hp.batch_size = b.get<int>();
                  hp.validate();
                  grid.push_back(hp);
                }
              }
            }
          }
        }
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed grid entry: ") + e.what());
  }
  return grid;
}

namespace {

// Training randomness (dropout, batch shuffles) runs on its own stream so
// that initialization does not depend on the batching mode.
constexpr std::uint64_t kTrainingStream = 0x9E3779B97F4A7C15ULL;

std::vector<std::vector<Index>> stratified_batches(const std::vector<int>& labels, int batch_size, bool batchnorm,
                                                   Rng& rng) {
  const auto n = static_cast<Index>(labels.size());
  std::vector<Index> pos, neg;
  for (Index i = 0; i < n; ++i) (labels[static_cast<std::size_t>(i)] == 1 ? pos : neg).push_back(i);
  std::size_t count = static_cast<std::size_t>((n + batch_size - 1) / batch_size);
  count = std::min({count, pos.size(), neg.size()});
  if (batchnorm) count = std::min(count, static_cast<std::size_t>(n / 2));
  count = std::max<std::size_t>(count, 1);
  rng.shuffle(pos);
  rng.shuffle(neg);
  std::vector<std::vector<Index>> batches(count);
  for (std::size_t i = 0; i < pos.size(); ++i) batches[i % count].push_back(pos[i]);
  for (std::size_t i = 0; i < neg.size(); ++i) batches[i % count].push_back(neg[i]);
  return batches;
}

loss::LossResult method_loss(const HyperParams& hp, const nn::Vector& scores, std::span<const int> labels,
                             int epoch) {
  switch (hp.method) {
    case Method::bce:
      return loss::bce_loss(scores, labels);
    case Method::auc_hinge:
      return loss::approx_auc_loss(loss::ScorePartition::from_labels(scores, labels), *hp.margin);
    case Method::tapauc: {
      const loss::SelectionSchedule schedule{.total_epochs = hp.total_epochs,
                                             .warmup_epochs = hp.warmup_epochs(),
                                             .alpha = *hp.alpha,
                                             .margin = *hp.margin};
      return loss::tapauc_loss(loss::ScorePartition::from_labels(scores, labels), schedule, epoch);
    }
  }
  throw ContractViolation("unhandled method");
}

}  // namespace

FoldReport train_one(const data::Dataset& train, const data::Dataset& validation, const HyperParams& hp,
                     std::uint64_t seed) {
  hp.validate();
  const auto started = std::chrono::steady_clock::now();
  FoldReport report;
  report.config_key = hp.key();
  report.method = hp.method;
  report.seed = seed;
  report.retained_features = static_cast<int>(train.cols());

  TAPAUC_EXPECTS(train.positive_count() > 0 && train.negative_count() > 0,
                 "training split must contain both classes");
  TAPAUC_EXPECTS(validation.cols() == train.cols(), "train and validation feature counts differ");

  auto model = nn::init_network(nn::NetworkConfig::for_inputs(static_cast<int>(train.cols())), seed);
  auto optimizer = nn::OptimizerState::for_model(model, hp.learning_rate);
  Rng rng(seed ^ kTrainingStream);
  const bool full_batch = hp.batch_size == 0 || hp.batch_size >= train.rows();

  try {
    for (int epoch = 0; epoch < hp.total_epochs; ++epoch) {
      std::vector<std::vector<Index>> batches;
      if (!full_batch) batches = stratified_batches(train.labels, hp.batch_size, model.config.use_batchnorm, rng);
      const std::size_t batch_count = full_batch ? 1 : batches.size();
      for (std::size_t b = 0; b < batch_count; ++b) {
        data::Dataset minibatch;
        if (!full_batch) minibatch = data::take_rows(train, batches[b]);
        const data::Dataset& batch = full_batch ? train : minibatch;

        auto pass = nn::forward(model, batch.features, nn::Mode::train, &rng);
        const auto loss = method_loss(hp, pass.scores, batch.labels, epoch);
        if (!std::isfinite(loss.value)) {
          throw NumericalError("non-finite loss at epoch " + std::to_string(epoch));
        }
        report.final_loss = loss.value;
        const auto grads = nn::backward(model, pass.cache, loss.score_gradients);
        nn::adam_step(model, grads, optimizer);
      }
    }
    if (!model.params.all_finite()) throw NumericalError("non-finite parameters after training");
  } catch (const NumericalError& e) {
    report.failed = true;
    report.diagnostic = e.what();
    report.duration_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return report;
  }

  const nn::Vector train_scores = nn::predict_scores(model, train.features);
  std::vector<double> positive_scores;
  for (Index i = 0; i < train_scores.size(); ++i) {
    if (train.labels[static_cast<std::size_t>(i)] == 1) positive_scores.push_back(train_scores[i]);
  }
  report.threshold = eval::zfn_threshold(positive_scores).threshold;
  const std::span<const double> ts(train_scores.data(), static_cast<std::size_t>(train_scores.size()));
  report.train = eval::confusion_metrics(ts, train.labels, report.threshold);

  const nn::Vector val_scores = nn::predict_scores(model, validation.features);
  const std::span<const double> vs(val_scores.data(), static_cast<std::size_t>(val_scores.size()));
  report.validation = eval::confusion_metrics(vs, validation.labels, report.threshold);
  report.uncertainty = eval::uncertainty_interval(vs, validation.labels, report.threshold);
  if (!report.validation.no_positives && !report.validation.no_negatives) {
    report.validation_auc = eval::roc_auc(vs, validation.labels);
  }
  report.duration_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

ConfigAggregate aggregate_folds(const HyperParams& hp, std::span<const FoldReport> folds) {
  ConfigAggregate agg;
  agg.params = hp;
  agg.key = hp.key();
  for (const auto& f : folds) {
    if (f.failed) {
      ++agg.failed;
      continue;
    }
    ++agg.completed;
    agg.mean_accuracy += f.validation.accuracy;
    agg.mean_tpr += f.validation.tpr;
    agg.mean_fpr += f.validation.fpr;
    agg.mean_auc += f.validation_auc;
    agg.mean_threshold += f.threshold;
    agg.mean_lower_bound += f.uncertainty.lower_bound;
    agg.mean_interval_width += f.uncertainty.width();
    agg.mean_manual_checks += f.uncertainty.manual_checks;
    agg.mean_useful_checks += f.uncertainty.useful_checks;
  }
  if (agg.completed > 0) {
    const double n = static_cast<double>(agg.completed);
    for (double* v : {&agg.mean_accuracy, &agg.mean_tpr, &agg.mean_fpr, &agg.mean_auc, &agg.mean_threshold,
                      &agg.mean_lower_bound, &agg.mean_interval_width, &agg.mean_manual_checks,
                      &agg.mean_useful_checks}) {
      *v /= n;
    }
  }
  return agg;
}

GridSearchResult select_configuration(std::vector<ConfigAggregate> configs, double fpr_cap) {
  GridSearchResult result;
  result.configs = std::move(configs);
  result.fpr_cap = fpr_cap;

  const auto better = [](const ConfigAggregate& a, const ConfigAggregate& b) {
    if (a.mean_tpr != b.mean_tpr) return a.mean_tpr > b.mean_tpr;
    if (a.mean_fpr != b.mean_fpr) return a.mean_fpr < b.mean_fpr;
    if (a.mean_accuracy != b.mean_accuracy) return a.mean_accuracy > b.mean_accuracy;
    return a.key < b.key;
  };
  const auto pick = [&](bool require_cap) -> std::optional<std::size_t> {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < result.configs.size(); ++i) {
      const auto& c = result.configs[i];
      if (c.completed == 0 || (require_cap && c.mean_fpr > fpr_cap)) continue;
      if (!best || better(c, result.configs[*best])) best = i;
    }
    return best;
  };

  if (const auto feasible = pick(true)) {
    result.selected = *feasible;
  } else if (const auto any = pick(false)) {
    result.selected = *any;
    result.infeasible = true;
  } else {
    throw ContractViolation("grid search has no configuration with completed folds");
  }
  return result;
}

std::vector<FoldSplit> prepare_folds(const data::Dataset& dataset, const data::FoldPlan& plan,
                                     double correlation_cutoff) {
  std::vector<FoldSplit> splits;
  for (int r = 0; r < plan.repetitions; ++r) {
    for (int f = 0; f < plan.k; ++f) {
      FoldSplit s;
      s.repetition = r;
      s.fold = f;
      s.seed = data::derive_seed(plan.base_seed, r, f);
      const auto train_raw = data::take_rows(dataset, plan.train_rows(r, f));
      const auto val_raw = data::take_rows(dataset, plan.validation_rows(r, f));
      s.preprocess = data::fit_preprocess(train_raw, correlation_cutoff);
      s.train = data::apply_preprocess(train_raw, s.preprocess);
      s.validation = data::apply_preprocess(val_raw, s.preprocess);
      splits.push_back(std::move(s));
    }
  }
  return splits;
}

GridRun run_grid(std::span<const FoldSplit> splits, std::span<const HyperParams> grid,
                 const GridRunOptions& options) {
  TAPAUC_EXPECTS(!grid.empty(), "grid search needs at least one configuration");
  TAPAUC_EXPECTS(!splits.empty(), "grid search needs at least one split");
  for (const auto& hp : grid) hp.validate();

  const std::size_t per_config = splits.size();
  const std::size_t total = grid.size() * per_config;
  GridRun run;
  run.folds.resize(total);

  std::atomic<std::size_t> next{0};
  std::size_t done = 0;
  std::mutex progress_mutex;
  const auto worker = [&] {
    for (std::size_t job = next++; job < total; job = next++) {
      const auto& hp = grid[job / per_config];
      const auto& split = splits[job % per_config];
      FoldReport rep;
      try {
        rep = train_one(split.train, split.validation, hp, split.seed);
      } catch (const std::exception& e) {
        rep.config_key = hp.key();
        rep.method = hp.method;
        rep.seed = split.seed;
        rep.failed = true;
        rep.diagnostic = e.what();
      }
      rep.repetition = split.repetition;
      rep.fold = split.fold;
      run.folds[job] = std::move(rep);
      if (options.progress) {
        std::lock_guard lock(progress_mutex);
        options.progress(++done, total);
      }
    }
  };

  const auto workers = static_cast<std::size_t>(std::max(1, options.workers));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < std::min(workers, total); ++i) pool.emplace_back(worker);
  }

  std::vector<ConfigAggregate> aggregates;
  for (std::size_t c = 0; c < grid.size(); ++c) {
    aggregates.push_back(
        aggregate_folds(grid[c], std::span<const FoldReport>(run.folds).subspan(c * per_config, per_config)));
  }
  run.result = select_configuration(std::move(aggregates), options.fpr_cap);
  return run;
}

GridRun run_grid(const data::Dataset& dataset, std::span<const HyperParams> grid, const data::FoldPlan& plan,
                 const GridRunOptions& options) {
  const auto splits = prepare_folds(dataset, plan);
  return run_grid(splits, grid, options);
}

}  // namespace tapauc
