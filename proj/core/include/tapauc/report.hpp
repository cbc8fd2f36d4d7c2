#pragma once

// Machine-readable (JSON / JSON lines) and plain-text experiment reports.

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tapauc/data.hpp"
#include "tapauc/harness.hpp"

namespace tapauc::report {

/// One line per fold report. Durations are omitted.
std::string to_jsonl(std::span<const FoldReport> folds);
std::vector<FoldReport> parse_fold_reports(std::string_view jsonl);

struct MethodResult {
  Method method = Method::tapauc;
  GridSearchResult grid;
};

/// Grid results of every method run on one dataset.
struct DatasetResult {
  std::string dataset;
  std::vector<MethodResult> methods;
};

std::string to_json(const DatasetResult& result);
DatasetResult parse_dataset_result(std::string_view json);

struct SplitPreprocess {
  int repetition = 0;
  int fold = 0;
  data::PreprocessReport report;
};

std::string to_json(std::span<const SplitPreprocess> reports);
std::vector<SplitPreprocess> parse_preprocess_reports(std::string_view json);

/// Selected configuration of one (dataset, method) pair, metrics as fractions.
struct SummaryCell {
  std::string dataset;
  Method method = Method::tapauc;
  std::string config_key;
  bool infeasible = false;
  double accuracy = 0.0;
  double tpr = 0.0;
  double fpr = 0.0;
  double lower_bound = 0.0;
  double interval_width = 0.0;
  double manual_checks = 0.0;
  double useful_checks = 0.0;
};

struct ExperimentSummary {
  std::vector<std::string> datasets;
  std::vector<Method> methods;
  std::vector<SummaryCell> cells;
  /// Unweighted mean over datasets, one entry per method (dataset = "MEAN").
  std::vector<SummaryCell> means;

  const SummaryCell* find(std::string_view dataset, Method method) const;
};

/// Throws ContractViolation when no dataset has any method result.
ExperimentSummary aggregate_report(std::span<const DatasetResult> results);

std::string to_json(const ExperimentSummary& summary);
ExperimentSummary parse_summary(std::string_view json);

/// ACC / TPR / FPR in percent per dataset and method, plus the MEAN row.
/// Cells over the FPR cap are marked with '*'.
std::string render_summary_table(const ExperimentSummary& summary);

/// Lower bound (absolute and as width below the threshold), manual and
/// useful checks in percent.
std::string render_uncertainty_table(const ExperimentSummary& summary);

}  // namespace tapauc::report
