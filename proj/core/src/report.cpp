#include "tapauc/report.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "tapauc/error.hpp"

namespace tapauc {

using nlohmann::json;

// ADL hooks for nlohmann::json live next to the types' namespaces.

void to_json(json& j, const HyperParams& hp) {
  j = json{{"method", to_string(hp.method)}, {"epochs", hp.total_epochs}, {"learning_rate", hp.learning_rate},
           {"batch_size", hp.batch_size}};
  if (hp.warmup_fraction) {
    j["warmup"] = *hp.warmup_fraction;
    j["warmup_epochs"] = hp.warmup_epochs();
  }
  if (hp.margin) j["margin"] = *hp.margin;
  if (hp.alpha) {
    if (hp.alpha->is_single()) {
      j["alpha"] = "single";
    } else {
      j["alpha"] = hp.alpha->value();
    }
  }
}

void from_json(const json& j, HyperParams& hp) {
  hp = HyperParams{};
  hp.method = parse_method(j.at("method").get<std::string>());
  hp.total_epochs = j.at("epochs").get<int>();
  hp.learning_rate = j.value("learning_rate", 0.01);
  hp.batch_size = j.value("batch_size", 0);
  if (j.contains("warmup")) hp.warmup_fraction = j.at("warmup").get<double>();
  if (j.contains("margin")) hp.margin = j.at("margin").get<double>();
  if (j.contains("alpha")) {
    const auto& a = j.at("alpha");
    hp.alpha = a.is_string() ? loss::NegativeRatio::parse(a.get<std::string>())
                             : loss::NegativeRatio::fraction(a.get<double>());
  }
}

void to_json(json& j, const ConfigAggregate& a) {
  j = json{{"key", a.key},
           {"params", a.params},
           {"completed", a.completed},
           {"failed", a.failed},
           {"mean_accuracy", a.mean_accuracy},
           {"mean_tpr", a.mean_tpr},
           {"mean_fpr", a.mean_fpr},
           {"mean_auc", a.mean_auc},
           {"mean_threshold", a.mean_threshold},
           {"mean_lower_bound", a.mean_lower_bound},
           {"mean_interval_width", a.mean_interval_width},
           {"mean_manual_checks", a.mean_manual_checks},
           {"mean_useful_checks", a.mean_useful_checks}};
}

void from_json(const json& j, ConfigAggregate& a) {
  a.params = j.at("params").get<HyperParams>();
  a.key = j.at("key").get<std::string>();
  a.completed = j.at("completed").get<std::size_t>();
  a.failed = j.at("failed").get<std::size_t>();
  a.mean_accuracy = j.at("mean_accuracy").get<double>();
  a.mean_tpr = j.at("mean_tpr").get<double>();
  a.mean_fpr = j.at("mean_fpr").get<double>();
  a.mean_auc = j.at("mean_auc").get<double>();
  a.mean_threshold = j.at("mean_threshold").get<double>();
  a.mean_lower_bound = j.at("mean_lower_bound").get<double>();
  a.mean_interval_width = j.at("mean_interval_width").get<double>();
  a.mean_manual_checks = j.at("mean_manual_checks").get<double>();
  a.mean_useful_checks = j.at("mean_useful_checks").get<double>();
}

namespace eval {

void to_json(json& j, const ConfusionMetrics& m) {
  j = json{{"tp", m.tp},   {"fp", m.fp},   {"tn", m.tn},   {"fn", m.fn},   {"accuracy", m.accuracy},
           {"tpr", m.tpr}, {"fpr", m.fpr}, {"fnr", m.fnr}, {"no_positives", m.no_positives},
           {"no_negatives", m.no_negatives}};
}

void from_json(const json& j, ConfusionMetrics& m) {
  m.tp = j.at("tp").get<std::size_t>();
  m.fp = j.at("fp").get<std::size_t>();
  m.tn = j.at("tn").get<std::size_t>();
  m.fn = j.at("fn").get<std::size_t>();
  m.accuracy = j.at("accuracy").get<double>();
  m.tpr = j.at("tpr").get<double>();
  m.fpr = j.at("fpr").get<double>();
  m.fnr = j.at("fnr").get<double>();
  m.no_positives = j.at("no_positives").get<bool>();
  m.no_negatives = j.at("no_negatives").get<bool>();
}

void to_json(json& j, const UncertaintyReport& u) {
  j = json{{"threshold", u.threshold},
           {"lower_bound", u.lower_bound},
           {"width", u.width()},
           {"instances", u.instances},
           {"flagged", u.flagged},
           {"flagged_positives", u.flagged_positives},
           {"false_negatives", u.false_negatives},
           {"captured_false_negatives", u.captured_false_negatives},
           {"manual_checks", u.manual_checks},
           {"useful_checks", u.useful_checks}};
}

void from_json(const json& j, UncertaintyReport& u) {
  u.threshold = j.at("threshold").get<double>();
  u.lower_bound = j.at("lower_bound").get<double>();
  u.instances = j.at("instances").get<std::size_t>();
  u.flagged = j.at("flagged").get<std::size_t>();
  u.flagged_positives = j.at("flagged_positives").get<std::size_t>();
  u.false_negatives = j.at("false_negatives").get<std::size_t>();
  u.captured_false_negatives = j.at("captured_false_negatives").get<std::size_t>();
  u.manual_checks = j.at("manual_checks").get<double>();
  u.useful_checks = j.at("useful_checks").get<double>();
}

}  // namespace eval

void to_json(json& j, const FoldReport& f) {
  j = json{{"config", f.config_key}, {"method", to_string(f.method)}, {"repetition", f.repetition},
           {"fold", f.fold},         {"seed", f.seed},                  {"failed", f.failed}};
  if (f.failed) {
    j["diagnostic"] = f.diagnostic;
    return;
  }
  j["threshold_zfn"] = f.threshold;
  j["train"] = f.train;
  j["validation"] = f.validation;
  j["uncertainty"] = f.uncertainty;
  j["validation_auc"] = f.validation_auc;
  j["final_loss"] = f.final_loss;
  j["retained_features"] = f.retained_features;
}

void from_json(const json& j, FoldReport& f) {
  f = FoldReport{};
  f.config_key = j.at("config").get<std::string>();
  f.method = parse_method(j.at("method").get<std::string>());
  f.repetition = j.at("repetition").get<int>();
  f.fold = j.at("fold").get<int>();
  f.seed = j.at("seed").get<std::uint64_t>();
  f.failed = j.at("failed").get<bool>();
  if (f.failed) {
    f.diagnostic = j.value("diagnostic", std::string());
    return;
  }
  f.threshold = j.at("threshold_zfn").get<double>();
  f.train = j.at("train").get<eval::ConfusionMetrics>();
  f.validation = j.at("validation").get<eval::ConfusionMetrics>();
  f.uncertainty = j.at("uncertainty").get<eval::UncertaintyReport>();
  f.validation_auc = j.at("validation_auc").get<double>();
  f.final_loss = j.at("final_loss").get<double>();
  f.retained_features = j.at("retained_features").get<int>();
}

namespace data {

void to_json(json& j, const PreprocessReport& r) {
  j = json{{"input_features", r.input_features}, {"dropped_constant", r.dropped_constant},
           {"dropped_correlated", r.dropped_correlated}, {"retained", r.retained},
           {"scale_min", r.scale_min}, {"scale_max", r.scale_max},
           {"correlation_cutoff", r.correlation_cutoff}};
}

void from_json(const json& j, PreprocessReport& r) {
  j.at("input_features").get_to(r.input_features);
  j.at("dropped_constant").get_to(r.dropped_constant);
  j.at("dropped_correlated").get_to(r.dropped_correlated);
  j.at("retained").get_to(r.retained);
  j.at("scale_min").get_to(r.scale_min);
  j.at("scale_max").get_to(r.scale_max);
  j.at("correlation_cutoff").get_to(r.correlation_cutoff);
}

}  // namespace data

namespace report {

namespace {

json parse_or_throw(std::string_view text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string(what) + ": " + e.what());
  }
}

}  // namespace

std::string to_jsonl(std::span<const FoldReport> folds) {
  std::string out;
  for (const auto& f : folds) {
    out += json(f).dump();
    out += '\n';
  }
  return out;
}

std::vector<FoldReport> parse_fold_reports(std::string_view jsonl) {
  std::vector<FoldReport> folds;
  std::size_t start = 0;
  while (start < jsonl.size()) {
    auto end = jsonl.find('\n', start);
    if (end == std::string_view::npos) end = jsonl.size();
    const auto line = jsonl.substr(start, end - start);
    if (line.find_first_not_of(" \t\r") != std::string_view::npos) {
      folds.push_back(parse_or_throw(line, "fold report").get<FoldReport>());
    }
    start = end + 1;
  }
  return folds;
}

std::string to_json(const DatasetResult& result) {
  json methods = json::array();
  for (const auto& m : result.methods) {
    methods.push_back(json{{"method", to_string(m.method)},
                           {"fpr_cap", m.grid.fpr_cap},
                           {"selected", m.grid.selected},
                           {"selected_key", m.grid.best().key},
                           {"infeasible", m.grid.infeasible},
                           {"configs", m.grid.configs}});
  }
  return json{{"dataset", result.dataset}, {"methods", methods}}.dump(2) + "\n";
}

DatasetResult parse_dataset_result(std::string_view text) {
  const json j = parse_or_throw(text, "grid result");
  DatasetResult r;
  try {
    r.dataset = j.at("dataset").get<std::string>();
    for (const auto& m : j.at("methods")) {
      MethodResult mr;
      mr.method = parse_method(m.at("method").get<std::string>());
      mr.grid.fpr_cap = m.at("fpr_cap").get<double>();
      mr.grid.selected = m.at("selected").get<std::size_t>();
      mr.grid.infeasible = m.at("infeasible").get<bool>();
      mr.grid.configs = m.at("configs").get<std::vector<ConfigAggregate>>();
      if (mr.grid.selected >= mr.grid.configs.size()) throw DataError("grid result: selected index out of range");
      r.methods.push_back(std::move(mr));
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("grid result: ") + e.what());
  }
  return r;
}

std::string to_json(std::span<const SplitPreprocess> reports) {
  json arr = json::array();
  for (const auto& s : reports) {
    arr.push_back(json{{"repetition", s.repetition}, {"fold", s.fold}, {"report", s.report}});
  }
  return arr.dump(2) + "\n";
}

std::vector<SplitPreprocess> parse_preprocess_reports(std::string_view text) {
  const json j = parse_or_throw(text, "preprocess report");
  std::vector<SplitPreprocess> out;
  for (const auto& e : j) {
    out.push_back({e.at("repetition").get<int>(), e.at("fold").get<int>(), e.at("report").get<data::PreprocessReport>()});
  }
  return out;
}

const SummaryCell* ExperimentSummary::find(std::string_view dataset, Method method) const {
  const auto& pool = dataset == "MEAN" ? means : cells;
  for (const auto& c : pool) {
    if (c.dataset == dataset && c.method == method) return &c;
  }
  return nullptr;
}

ExperimentSummary aggregate_report(std::span<const DatasetResult> results) {
  ExperimentSummary s;
  for (const auto& r : results) {
    if (std::find(s.datasets.begin(), s.datasets.end(), r.dataset) == s.datasets.end()) {
      s.datasets.push_back(r.dataset);
    }
    for (const auto& m : r.methods) {
      if (std::find(s.methods.begin(), s.methods.end(), m.method) == s.methods.end()) s.methods.push_back(m.method);
      const auto& best = m.grid.best();
      s.cells.push_back(SummaryCell{.dataset = r.dataset,
                                    .method = m.method,
                                    .config_key = best.key,
                                    .infeasible = m.grid.infeasible,
                                    .accuracy = best.mean_accuracy,
                                    .tpr = best.mean_tpr,
                                    .fpr = best.mean_fpr,
                                    .lower_bound = best.mean_lower_bound,
                                    .interval_width = best.mean_interval_width,
                                    .manual_checks = best.mean_manual_checks,
                                    .useful_checks = best.mean_useful_checks});
    }
  }
  TAPAUC_EXPECTS(!s.cells.empty(), "report needs at least one dataset x method result");
  std::sort(s.methods.begin(), s.methods.end());

  for (const Method method : s.methods) {
    SummaryCell mean{.dataset = "MEAN", .method = method, .config_key = "-"};
    double n = 0.0;
    for (const auto& c : s.cells) {
      if (c.method != method) continue;
      n += 1.0;
      mean.accuracy += c.accuracy;
      mean.tpr += c.tpr;
      mean.fpr += c.fpr;
      mean.lower_bound += c.lower_bound;
      mean.interval_width += c.interval_width;
      mean.manual_checks += c.manual_checks;
      mean.useful_checks += c.useful_checks;
    }
    for (double* v : {&mean.accuracy, &mean.tpr, &mean.fpr, &mean.lower_bound, &mean.interval_width,
                      &mean.manual_checks, &mean.useful_checks}) {
      *v /= n;
    }
    s.means.push_back(mean);
  }
  return s;
}

namespace {

json cell_json(const SummaryCell& c) {
  return json{{"dataset", c.dataset},
              {"method", to_string(c.method)},
              {"config", c.config_key},
              {"infeasible", c.infeasible},
              {"accuracy", c.accuracy},
              {"tpr", c.tpr},
              {"fpr", c.fpr},
              {"lower_bound", c.lower_bound},
              {"interval_width", c.interval_width},
              {"manual_checks", c.manual_checks},
              {"useful_checks", c.useful_checks}};
}

SummaryCell cell_from(const json& j) {
  return SummaryCell{.dataset = j.at("dataset").get<std::string>(),
                     .method = parse_method(j.at("method").get<std::string>()),
                     .config_key = j.at("config").get<std::string>(),
                     .infeasible = j.at("infeasible").get<bool>(),
                     .accuracy = j.at("accuracy").get<double>(),
                     .tpr = j.at("tpr").get<double>(),
                     .fpr = j.at("fpr").get<double>(),
                     .lower_bound = j.at("lower_bound").get<double>(),
                     .interval_width = j.at("interval_width").get<double>(),
                     .manual_checks = j.at("manual_checks").get<double>(),
                     .useful_checks = j.at("useful_checks").get<double>()};
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string pad(std::string s, std::size_t width, bool left = false) {
  if (s.size() >= width) return s;
  return left ? s + std::string(width - s.size(), ' ') : std::string(width - s.size(), ' ') + s;
}

}  // namespace

std::string to_json(const ExperimentSummary& summary) {
  json methods = json::array();
  for (const auto m : summary.methods) methods.push_back(to_string(m));
  json cells = json::array();
  for (const auto& c : summary.cells) cells.push_back(cell_json(c));
  json means = json::array();
  for (const auto& c : summary.means) means.push_back(cell_json(c));
  return json{{"datasets", summary.datasets},
              {"methods", methods},
              {"cells", cells},
              {"mean", means},
              {"mean_convention", "unweighted mean over datasets"}}
             .dump(2) +
         "\n";
}

ExperimentSummary parse_summary(std::string_view text) {
  const json j = parse_or_throw(text, "summary");
  ExperimentSummary s;
  try {
    j.at("datasets").get_to(s.datasets);
    for (const auto& m : j.at("methods")) s.methods.push_back(parse_method(m.get<std::string>()));
    for (const auto& c : j.at("cells")) s.cells.push_back(cell_from(c));
    for (const auto& c : j.at("mean")) s.means.push_back(cell_from(c));
  } catch (const json::exception& e) {
    throw DataError(std::string("summary: ") + e.what());
  }
  return s;
}

std::string render_summary_table(const ExperimentSummary& summary) {
  constexpr std::size_t kName = 10, kCol = 9;
  std::ostringstream out;
  out << pad("Method", kName, true);
  for (const auto m : summary.methods) out << " | " << pad(std::string(to_string(m)), kCol * 3 + 2, true);
  out << '\n' << pad("Metric", kName, true);
  for (std::size_t i = 0; i < summary.methods.size(); ++i) {
    out << " | " << pad("ACC", kCol) << ' ' << pad("TPR", kCol) << ' ' << pad("FPR", kCol);
  }
  out << '\n' << std::string(kName + summary.methods.size() * (kCol * 3 + 5), '-') << '\n';

  const auto row = [&](const std::string& dataset) {
    out << pad(dataset, kName, true);
    for (const auto m : summary.methods) {
      const auto* c = summary.find(dataset, m);
      if (!c) {
        out << " | " << pad("-", kCol) << ' ' << pad("-", kCol) << ' ' << pad("-", kCol);
        continue;
      }
      const std::string mark = c->infeasible ? "*" : "";
      out << " | " << pad(fixed(100 * c->accuracy, 2) + mark, kCol) << ' ' << pad(fixed(100 * c->tpr, 2) + mark, kCol)
          << ' ' << pad(fixed(100 * c->fpr, 2) + mark, kCol);
    }
    out << '\n';
  };
  for (const auto& d : summary.datasets) row(d);
  out << std::string(kName + summary.methods.size() * (kCol * 3 + 5), '-') << '\n';
  row("MEAN");
  out << "\nValues in %, averaged over every validation fold of every repetition for the\n"
         "selected configuration (best TPR with FPR <= cap). MEAN is the unweighted mean over\n"
         "datasets. '*' marks a selection that exceeds the FPR cap (information only).\n";
  return out.str();
}

std::string render_uncertainty_table(const ExperimentSummary& summary) {
  constexpr std::size_t kName = 10, kCol = 12;
  std::ostringstream out;
  out << pad("Dataset", kName, true) << " | " << pad("Method", kCol, true) << ' ' << pad("Lower bound", kCol) << ' '
      << pad("Width", kCol) << ' ' << pad("Manual (%)", kCol) << ' ' << pad("Useful (%)", kCol) << '\n';
  out << std::string(kName + 3 + 5 * (kCol + 1), '-') << '\n';
  const auto row = [&](const SummaryCell& c) {
    out << pad(c.dataset, kName, true) << " | " << pad(std::string(to_string(c.method)), kCol, true) << ' '
        << pad(fixed(c.lower_bound, 4), kCol) << ' ' << pad(fixed(c.interval_width, 4), kCol) << ' '
        << pad(fixed(100 * c.manual_checks, 2), kCol) << ' ' << pad(fixed(100 * c.useful_checks, 2), kCol) << '\n';
  };
  for (const auto& d : summary.datasets) {
    for (const auto m : summary.methods) {
      if (const auto* c = summary.find(d, m)) row(*c);
    }
  }
  out << std::string(kName + 3 + 5 * (kCol + 1), '-') << '\n';
  for (const auto& c : summary.means) row(c);
  out << "\nUncertainty interval [lower bound, threshold): lower bound is the lowest validation\n"
         "positive under the training ZFN threshold (absolute score); width = threshold - lower\n"
         "bound. Manual = flagged instances, useful = flagged positives, both in % of the\n"
         "validation set, averaged over folds.\n";
  return out.str();
}

}  // namespace report
}  // namespace tapauc
