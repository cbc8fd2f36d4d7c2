// tapauc: cross-validated training and reporting from the command line.
//
//   tapauc run --dataset wdbc --method tapauc --grid default --out results/wdbc
//   tapauc report --in results/wdbc --in results/ccf
//   tapauc selftest

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tapauc/check/selftest.hpp"
#include "tapauc/data.hpp"
#include "tapauc/error.hpp"
#include "tapauc/harness.hpp"
#include "tapauc/report.hpp"

#ifndef TAPAUC_DEFAULT_DATA_DIR
#define TAPAUC_DEFAULT_DATA_DIR "data"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunArgs {
  std::string dataset = "wdbc";
  std::string label_column;
  std::string positive_label;
  std::string method = "tapauc";
  std::string grid = "default";
  int folds = 5;
  int repetitions = 5;
  std::uint64_t seed = 0;
  double fpr_cap = 0.5;
  std::string out = "tapauc_out";
  int workers = 1;
  std::string data_dir = TAPAUC_DEFAULT_DATA_DIR;
  std::string subsample = "auto";
  double correlation_cutoff = tapauc::data::kDefaultCorrelationCutoff;
  int batch_size = 0;
  bool quiet = false;
};

// Seed slot for negative subsampling; outside the (repetition, fold) range.
constexpr std::uint64_t kSubsampleSeedOffset = 999;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw tapauc::DataError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw tapauc::DataError("cannot write " + path.string());
  out << content;
}

struct ResolvedDataset {
  std::string name;
  fs::path path;
  tapauc::data::CsvOptions csv;
  bool subsample_by_default = false;
};

ResolvedDataset resolve_dataset(const RunArgs& args) {
  ResolvedDataset r;
  if (args.dataset == "wdbc") {
    r = {"wdbc", fs::path(args.data_dir) / "wdbc.csv", {"diagnosis", "M", {"id"}}, false};
  } else if (args.dataset == "ccf") {
    r = {"ccf", fs::path(args.data_dir) / "creditcard.csv", {"Class", "1", {}}, true};
  } else if (args.dataset.rfind("csv:", 0) == 0) {
    r.path = args.dataset.substr(4);
    r.name = r.path.stem().string();
    if (args.label_column.empty() || args.positive_label.empty()) {
      throw tapauc::ConfigError("csv datasets need --label-column and --positive-label");
    }
  } else {
    throw tapauc::ConfigError("unknown dataset '" + args.dataset + "' (expected wdbc, ccf or csv:PATH)");
  }
  if (!args.label_column.empty()) r.csv.label_column = args.label_column;
  if (!args.positive_label.empty()) r.csv.positive_label = args.positive_label;
  if (!fs::exists(r.path)) throw tapauc::DataError("dataset file not found: " + r.path.string());
  return r;
}

std::vector<tapauc::Method> resolve_methods(const std::string& name) {
  if (name == "all") return {tapauc::Method::bce, tapauc::Method::auc_hinge, tapauc::Method::tapauc};
  return {tapauc::parse_method(name)};
}

std::vector<tapauc::HyperParams> resolve_grid(const RunArgs& args, tapauc::Method method) {
  std::vector<tapauc::HyperParams> grid;
  if (args.grid == "default" || args.grid == "full") {
    grid = tapauc::default_grid(method, args.grid == "full" ? tapauc::GridPreset::full : tapauc::GridPreset::reduced);
    for (auto& hp : grid) hp.batch_size = args.batch_size;
  } else if (args.grid.rfind("file:", 0) == 0) {
    for (const auto& hp : tapauc::parse_grid_json(read_file(args.grid.substr(5)))) {
      if (hp.method == method) grid.push_back(hp);
    }
  } else {
    throw tapauc::ConfigError("unknown grid '" + args.grid + "' (expected default, full or file:PATH)");
  }
  if (grid.empty()) {
    throw tapauc::ConfigError("grid has no configuration for method " + std::string(tapauc::to_string(method)));
  }
  return grid;
}

int cmd_run(const RunArgs& args) {
  using namespace tapauc;
  if (args.workers < 1) throw ConfigError("--workers must be >= 1");
  if (!(args.fpr_cap >= 0.0 && args.fpr_cap <= 1.0)) throw ConfigError("--fpr-cap must lie in [0, 1]");
  const auto resolved = resolve_dataset(args);
  const auto methods = resolve_methods(args.method);
  std::vector<std::vector<HyperParams>> grids;
  for (const auto m : methods) grids.push_back(resolve_grid(args, m));

  auto dataset = data::load_csv(resolved.path, resolved.csv);
  dataset.name = resolved.name;
  const std::size_t raw_negatives = dataset.negative_count();

  std::optional<std::size_t> subsample_target;
  if (args.subsample == "auto" ? resolved.subsample_by_default : args.subsample == "match") {
    subsample_target = dataset.positive_count();
  } else if (args.subsample != "auto" && args.subsample != "none") {
    try {
      subsample_target = std::stoul(args.subsample);
    } catch (const std::exception&) {
      throw ConfigError("--subsample-negatives expects auto, none, match or a count");
    }
  }
  const std::uint64_t subsample_seed = args.seed * 1000 + kSubsampleSeedOffset;
  if (subsample_target) dataset = data::subsample_negatives(dataset, *subsample_target, subsample_seed);
  dataset.validate();

  if (!args.quiet) {
    std::cerr << "dataset " << dataset.name << ": " << dataset.rows() << " rows, " << dataset.cols()
              << " features, " << dataset.positive_count() << " positive / " << dataset.negative_count()
              << " negative\n";
  }

  const auto plan = data::stratified_kfold(dataset, args.folds, args.repetitions, args.seed);
  const auto splits = prepare_folds(dataset, plan, args.correlation_cutoff);

  fs::create_directories(args.out);
  report::DatasetResult result{.dataset = dataset.name, .methods = {}};
  std::vector<FoldReport> all_folds;
  json timings = json::array();

  for (std::size_t m = 0; m < methods.size(); ++m) {
    GridRunOptions opts;
    opts.fpr_cap = args.fpr_cap;
    opts.workers = args.workers;
    const auto started = std::chrono::steady_clock::now();
    if (!args.quiet) {
      opts.progress = [&, name = std::string(to_string(methods[m]))](std::size_t done, std::size_t total) {
        if (done == total || done % 25 == 0) {
          const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
          std::fprintf(stderr, "\r%s: %zu/%zu runs (%.0fs)", name.c_str(), done, total, secs);
          if (done == total) std::fputc('\n', stderr);
        }
      };
    }
    auto run = run_grid(splits, grids[m], opts);
    for (const auto& f : run.folds) {
      timings.push_back(json{{"config", f.config_key},
                             {"repetition", f.repetition},
                             {"fold", f.fold},
                             {"seconds", f.duration_seconds}});
    }
    all_folds.insert(all_folds.end(), run.folds.begin(), run.folds.end());
    result.methods.push_back({methods[m], std::move(run.result)});
  }

  std::vector<report::SplitPreprocess> prep;
  for (const auto& s : splits) prep.push_back({s.repetition, s.fold, s.preprocess});

  const std::vector<report::DatasetResult> results{result};
  const auto summary = report::aggregate_report(results);

  json splits_json = json::array();
  for (const auto& s : splits) {
    splits_json.push_back(json{{"repetition", s.repetition},
                               {"fold", s.fold},
                               {"seed", s.seed},
                               {"train_rows", s.train.rows()},
                               {"validation_rows", s.validation.rows()}});
  }
  json methods_json = json::object();
  for (std::size_t m = 0; m < methods.size(); ++m) {
    json grid = json::array();
    for (const auto& hp : grids[m]) grid.push_back(hp.key());
    methods_json[std::string(to_string(methods[m]))] = grid;
  }
  const json echo{
      {"dataset",
       {{"name", dataset.name},
        {"source", args.dataset},
        {"path", resolved.path.string()},
        {"label_column", resolved.csv.label_column},
        {"positive_label", resolved.csv.positive_label},
        {"rows", dataset.rows()},
        {"features", dataset.cols()},
        {"positives", dataset.positive_count()},
        {"negatives", dataset.negative_count()},
        {"negatives_before_subsampling", raw_negatives},
        {"subsample_seed", subsample_target ? json(subsample_seed) : json(nullptr)}}},
      {"protocol",
       {{"folds", args.folds},
        {"repetitions", args.repetitions},
        {"base_seed", args.seed},
        {"seed_formula", "base_seed * 1000 + repetition * 10 + fold"},
        {"shuffle_seeds", plan.seeds},
        {"fpr_cap", args.fpr_cap},
        {"correlation_cutoff", args.correlation_cutoff},
        {"grid", args.grid},
        {"batch_size", args.batch_size}}},
      {"splits", splits_json},
      {"grids", methods_json}};

  const fs::path out(args.out);
  write_file(out / "fold_reports.jsonl", report::to_jsonl(all_folds));
  write_file(out / "grid_result.json", report::to_json(result));
  write_file(out / "summary.json", report::to_json(summary));
  write_file(out / "summary_table.txt", report::render_summary_table(summary));
  write_file(out / "uncertainty_table.txt", report::render_uncertainty_table(summary));
  write_file(out / "preprocess_report.json", report::to_json(std::span<const report::SplitPreprocess>(prep)));
  write_file(out / "config_echo.json", echo.dump(2) + "\n");
  std::string timing_lines;
  for (const auto& t : timings) timing_lines += t.dump() + "\n";
  write_file(out / "timings.jsonl", timing_lines);

  if (!args.quiet) {
    std::cout << report::render_summary_table(summary) << '\n' << report::render_uncertainty_table(summary);
    for (const auto& mr : result.methods) {
      const auto& b = mr.grid.best();
      std::cout << to_string(mr.method) << ": selected " << b.key << " (" << b.completed << " folds, " << b.failed
                << " failed" << (mr.grid.infeasible ? ", infeasible" : "") << ")\n";
    }
  }
  return 0;
}

int cmd_report(const std::vector<std::string>& inputs, const std::string& out_dir) {
  using namespace tapauc;
  std::vector<report::DatasetResult> results;
  for (const auto& dir : inputs) results.push_back(report::parse_dataset_result(read_file(fs::path(dir) / "grid_result.json")));
  const auto summary = report::aggregate_report(results);
  std::cout << report::render_summary_table(summary) << '\n' << report::render_uncertainty_table(summary);
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_file(fs::path(out_dir) / "summary.json", report::to_json(summary));
    write_file(fs::path(out_dir) / "summary_table.txt", report::render_summary_table(summary));
    write_file(fs::path(out_dir) / "uncertainty_table.txt", report::render_uncertainty_table(summary));
  }
  return 0;
}

int cmd_selftest(std::uint64_t seed) {
  bool ok = true;
  for (const auto& c : tapauc::check::run_selftest(seed)) {
    std::printf("[%s] %-22s %6.2fs  %s\n", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.seconds, c.detail.c_str());
    ok = ok && c.passed;
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tapauc: partial-AUC training with zero-false-negative thresholds"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Cross-validated grid search and reports");
  run_cmd->add_option("--dataset", run.dataset, "wdbc, ccf or csv:PATH")->capture_default_str();
  run_cmd->add_option("--label-column", run.label_column, "Label column name or index (csv datasets)");
  run_cmd->add_option("--positive-label", run.positive_label, "Label value of the positive class");
  run_cmd->add_option("--method", run.method, "bce, auc_hinge, tapauc or all")->capture_default_str();
  run_cmd->add_option("--grid", run.grid, "default, full or file:PATH")->capture_default_str();
  run_cmd->add_option("--folds", run.folds, "Folds per repetition")->capture_default_str()->check(CLI::Range(2, 9));
  run_cmd->add_option("--repetitions", run.repetitions)->capture_default_str()->check(CLI::PositiveNumber);
  run_cmd->add_option("--seed", run.seed, "Base seed")->capture_default_str();
  run_cmd->add_option("--fpr-cap", run.fpr_cap, "Selection constraint on mean FPR")->capture_default_str();
  run_cmd->add_option("--out", run.out, "Output directory")->capture_default_str();
  run_cmd->add_option("--workers", run.workers, "Worker threads")->capture_default_str();
  run_cmd->add_option("--data-dir", run.data_dir, "Directory holding wdbc.csv / creditcard.csv")->capture_default_str();
  run_cmd->add_option("--subsample-negatives", run.subsample, "auto, none, match or a count")->capture_default_str();
  run_cmd->add_option("--correlation-cutoff", run.correlation_cutoff)->capture_default_str();
  run_cmd->add_option("--batch-size", run.batch_size, "0 = full batch (default grids only)")->capture_default_str();
  run_cmd->add_flag("--quiet", run.quiet, "No progress or tables on the console");

  std::vector<std::string> report_inputs;
  std::string report_out;
  auto* report_cmd = app.add_subcommand("report", "Rebuild summary tables from run directories");
  report_cmd->add_option("--in", report_inputs, "Run output directory (repeatable)")->required();
  report_cmd->add_option("--out", report_out, "Write summary files here too");

  std::uint64_t selftest_seed = 20240601;
  auto* selftest_cmd = app.add_subcommand("selftest", "Gradient and oracle checks");
  selftest_cmd->add_option("--seed", selftest_seed)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) return cmd_run(run);
    if (*report_cmd) return cmd_report(report_inputs, report_out);
    if (*selftest_cmd) return cmd_selftest(selftest_seed);
  } catch (const tapauc::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
