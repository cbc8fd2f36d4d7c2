#pragma once

// Cross-validated training runs and the hyperparameter grid search.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tapauc/data.hpp"
#include "tapauc/evaluation.hpp"
#include "tapauc/losses.hpp"

namespace tapauc {

enum class Method { bce, auc_hinge, tapauc };

std::string_view to_string(Method method);
/// Throws ConfigError on unknown names.
Method parse_method(std::string_view name);

struct HyperParams {
  Method method = Method::tapauc;
  int total_epochs = 200;
  std::optional<double> warmup_fraction;        // tapauc only
  std::optional<double> margin;                 // auc_hinge and tapauc
  std::optional<loss::NegativeRatio> alpha;     // tapauc only
  double learning_rate = 0.01;
  int batch_size = 0;                           // 0: full batch

  /// floor(warmup_fraction * total_epochs), 0 when not tapauc.
  int warmup_epochs() const;

  /// Stable identifier, e.g. "tapauc/e=200/w=0.5/g=0.3/a=single".
  std::string key() const;

  /// Required fields present, irrelevant ones absent, values in range.
  void validate() const;

  friend bool operator==(const HyperParams&, const HyperParams&) = default;
};

enum class GridPreset {
  reduced,  // e_total in {60, 200} (tapauc), {200} otherwise
  full,     // e_total in {60, 200, 500} (tapauc), {200, 500} otherwise
};

std::vector<HyperParams> default_grid(Method method, GridPreset preset = GridPreset::reduced);

/// Grid file: {"configs": [ {...}, ... ]}. Each entry names a method and
/// gives "epochs", "warmup", "margin", "alpha", "learning_rate" and
/// "batch_size" as scalars or arrays; arrays expand to their cartesian product.
std::vector<HyperParams> parse_grid_json(std::string_view text);

struct FoldReport {
  std::string config_key;
  Method method = Method::tapauc;
  int repetition = 0;
  int fold = 0;
  std::uint64_t seed = 0;

  bool failed = false;
  std::string diagnostic;

  double threshold = 0.0;
  eval::ConfusionMetrics train;
  eval::ConfusionMetrics validation;
  eval::UncertaintyReport uncertainty;
  double validation_auc = 0.0;
  double final_loss = 0.0;
  int retained_features = 0;

  /// Wall-clock time; kept out of fold_reports.jsonl so reruns are byte-identical.
  double duration_seconds = 0.0;
};

/// Trains on `train` for hp.total_epochs epochs and evaluates `validation`
/// at the zero-false-negative threshold of the training scores. Both splits
/// must already be preprocessed. A diverging run comes back with failed = true.
FoldReport train_one(const data::Dataset& train, const data::Dataset& validation, const HyperParams& hp,
                     std::uint64_t seed);

struct ConfigAggregate {
  HyperParams params;
  std::string key;
  std::size_t completed = 0;
  std::size_t failed = 0;
  double mean_accuracy = 0.0;
  double mean_tpr = 0.0;
  double mean_fpr = 0.0;
  double mean_auc = 0.0;
  double mean_threshold = 0.0;
  double mean_lower_bound = 0.0;
  double mean_interval_width = 0.0;
  double mean_manual_checks = 0.0;
  double mean_useful_checks = 0.0;
};

/// Means over the completed folds; failed folds are only counted.
ConfigAggregate aggregate_folds(const HyperParams& hp, std::span<const FoldReport> folds);

struct GridSearchResult {
  std::vector<ConfigAggregate> configs;
  std::size_t selected = 0;
  /// No configuration met the FPR cap; `selected` is then the best-TPR one, for information.
  bool infeasible = false;
  double fpr_cap = 0.5;

  const ConfigAggregate& best() const { return configs.at(selected); }
};

/// Highest mean TPR among configs with mean FPR <= cap, ties broken by lower
/// FPR, higher accuracy, then the smaller key. Configs without completed folds
/// are never selected. Throws ContractViolation if none has completed folds.
GridSearchResult select_configuration(std::vector<ConfigAggregate> configs, double fpr_cap);

/// One preprocessed (repetition, fold) split.
struct FoldSplit {
  int repetition = 0;
  int fold = 0;
  std::uint64_t seed = 0;
  data::PreprocessReport preprocess;
  data::Dataset train;
  data::Dataset validation;
};

/// Fits preprocessing on each training split and applies it to both halves.
std::vector<FoldSplit> prepare_folds(const data::Dataset& dataset, const data::FoldPlan& plan,
                                     double correlation_cutoff = data::kDefaultCorrelationCutoff);

struct GridRunOptions {
  double fpr_cap = 0.5;
  int workers = 1;
  /// Called after each finished job with (done, total); serialized.
  std::function<void(std::size_t, std::size_t)> progress;
};

struct GridRun {
  GridSearchResult result;
  /// Config-major, then in split order. Independent of the worker count.
  std::vector<FoldReport> folds;
};

GridRun run_grid(std::span<const FoldSplit> splits, std::span<const HyperParams> grid,
                 const GridRunOptions& options = {});

GridRun run_grid(const data::Dataset& dataset, std::span<const HyperParams> grid, const data::FoldPlan& plan,
                 const GridRunOptions& options = {});

}  // namespace tapauc
