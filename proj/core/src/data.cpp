#include "tapauc/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <optional>
#include <unordered_map>

#include "tapauc/error.hpp"
#include "tapauc/random.hpp"

namespace tapauc::data {

std::size_t Dataset::positive_count() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
}

std::size_t Dataset::negative_count() const { return labels.size() - positive_count(); }

void Dataset::validate() const {
  if (static_cast<Index>(labels.size()) != features.rows()) {
    throw DataError(name + ": label count differs from row count");
  }
  if (static_cast<Index>(feature_names.size()) != features.cols()) {
    throw DataError(name + ": feature name count differs from column count");
  }
  for (const int y : labels) {
    if (y != 0 && y != 1) throw DataError(name + ": labels must be 0 or 1");
  }
  if (positive_count() == 0 || negative_count() == 0) {
    throw DataError(name + ": both classes must be present");
  }
  if (!features.allFinite()) throw DataError(name + ": features contain non-finite values");
}

Dataset take_rows(const Dataset& dataset, std::span<const Index> rows) {
  Dataset out;
  out.name = dataset.name;
  out.feature_names = dataset.feature_names;
  out.features.resize(static_cast<Index>(rows.size()), dataset.cols());
  out.labels.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.features.row(static_cast<Index>(i)) = dataset.features.row(rows[i]);
    out.labels.push_back(dataset.labels[static_cast<std::size_t>(rows[i])]);
  }
  return out;
}

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

// RFC-4180 style: quoted fields may contain the delimiter and "" escapes.
std::vector<std::string> split_record(const std::string& line, char delimiter) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
      was_quoted = true;
    } else if (ch == delimiter) {
      fields.push_back(was_quoted ? current : trim(current));
      current.clear();
      was_quoted = false;
    } else {
      current.push_back(ch);
    }
  }
  fields.push_back(was_quoted ? current : trim(current));
  return fields;
}

std::optional<double> parse_number(const std::string& text) {
  if (text.empty()) return std::nullopt;
  const char* begin = text.data();
  const char* end = begin + text.size();
  if (*begin == '+') ++begin;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) return std::nullopt;
  return value;
}

bool label_matches(const std::string& value, const std::string& positive) {
  if (value == positive) return true;
  const auto a = parse_number(value);
  const auto b = parse_number(positive);
  return a && b && *a == *b;
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());

  const std::string where = path.filename().string();
  std::string line;
  if (!std::getline(in, line)) throw DataError(where + ": empty file");
  const auto header = split_record(line, options.delimiter);

  std::optional<std::size_t> label_index;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == options.label_column) label_index = c;
  }
  if (!label_index) {
    std::size_t idx = 0;
    const auto& lc = options.label_column;
    const auto [ptr, ec] = std::from_chars(lc.data(), lc.data() + lc.size(), idx);
    if (lc.empty() || ec != std::errc() || ptr != lc.data() + lc.size() || idx >= header.size()) {
      throw DataError(where + ": label column '" + options.label_column + "' not found");
    }
    label_index = idx;
  }

  std::vector<std::size_t> feature_columns;
  Dataset ds;
  ds.name = path.stem().string();
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c == *label_index || header[c].empty()) continue;
    if (std::find(options.ignore_columns.begin(), options.ignore_columns.end(), header[c]) !=
        options.ignore_columns.end()) {
      continue;
    }
    feature_columns.push_back(c);
    ds.feature_names.push_back(header[c]);
  }
  if (feature_columns.empty()) throw DataError(where + ": no feature columns");

  std::vector<double> values;
  std::vector<std::string> negative_values;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_record(line, options.delimiter);
    if (fields.size() < header.size()) {
      throw DataError(where + ":" + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                      " fields, found " + std::to_string(fields.size()));
    }
    for (const std::size_t c : feature_columns) {
      const auto v = parse_number(fields[c]);
      if (!v) {
        throw DataError(where + ":" + std::to_string(line_no) + ": column '" + header[c] +
                        "' has non-numeric value '" + fields[c] + "'");
      }
      values.push_back(*v);
    }
    const auto& label = fields[*label_index];
    if (label_matches(label, options.positive_label)) {
      ds.labels.push_back(1);
    } else {
      if (std::find(negative_values.begin(), negative_values.end(), label) == negative_values.end()) {
        negative_values.push_back(label);
      }
      if (negative_values.size() > 1) {
        throw DataError(where + ": label column has more than two classes ('" + negative_values[0] + "', '" +
                        negative_values[1] + "', positive '" + options.positive_label + "')");
      }
      ds.labels.push_back(0);
    }
  }

  const auto n = static_cast<Index>(ds.labels.size());
  const auto d = static_cast<Index>(feature_columns.size());
  ds.features = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      values.data(), n, d);
  if (n < 2) throw DataError(where + ": need at least two rows");
  if (ds.positive_count() == 0 || ds.negative_count() == 0) {
    throw DataError(where + ": single-class file (positive label '" + options.positive_label + "')");
  }
  return ds;
}

Dataset subsample_negatives(const Dataset& dataset, std::size_t target_count, std::uint64_t seed) {
  std::vector<Index> negatives;
  for (std::size_t i = 0; i < dataset.labels.size(); ++i) {
    if (dataset.labels[i] == 0) negatives.push_back(static_cast<Index>(i));
  }
  if (target_count > negatives.size()) {
    throw DataError("cannot keep " + std::to_string(target_count) + " negatives, only " +
                    std::to_string(negatives.size()) + " available");
  }
  Rng rng(seed);
  // Partial Fisher-Yates: the first target_count slots are the sample.
  for (std::size_t i = 0; i < target_count; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(negatives.size() - i));
    std::swap(negatives[i], negatives[j]);
  }
  std::vector<char> keep(dataset.labels.size(), 0);
  for (std::size_t i = 0; i < dataset.labels.size(); ++i) keep[i] = dataset.labels[i] == 1;
  for (std::size_t i = 0; i < target_count; ++i) keep[static_cast<std::size_t>(negatives[i])] = 1;

  std::vector<Index> rows;
  for (std::size_t i = 0; i < keep.size(); ++i) {
    if (keep[i]) rows.push_back(static_cast<Index>(i));
  }
  return take_rows(dataset, rows);
}

PreprocessReport fit_preprocess(const Dataset& train, double correlation_cutoff) {
  if (train.rows() == 0) throw DataError("cannot fit preprocessing on an empty split");
  const Index d = train.cols();
  PreprocessReport rep;
  rep.input_features = train.feature_names;
  rep.correlation_cutoff = correlation_cutoff;

  std::vector<Index> candidates;
  for (Index j = 0; j < d; ++j) {
    const auto col = train.features.col(j);
    if (col.maxCoeff() == col.minCoeff()) {
      rep.dropped_constant.push_back(train.feature_names[static_cast<std::size_t>(j)]);
    } else {
      candidates.push_back(j);
    }
  }

  const Index n = train.rows();
  Matrix centered(n, static_cast<Index>(candidates.size()));
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const auto col = train.features.col(candidates[c]);
    centered.col(static_cast<Index>(c)) = col.array() - col.mean();
  }
  const Eigen::VectorXd norms = centered.colwise().norm().transpose();

  std::vector<Index> retained;
  for (std::size_t b = 0; b < candidates.size(); ++b) {
    bool correlated = false;
    for (std::size_t a = 0; a < b && !correlated; ++a) {
      const double r = centered.col(static_cast<Index>(a)).dot(centered.col(static_cast<Index>(b))) /
                       (norms[static_cast<Index>(a)] * norms[static_cast<Index>(b)]);
      correlated = std::abs(r) >= correlation_cutoff;
    }
    if (correlated) {
      rep.dropped_correlated.push_back(train.feature_names[static_cast<std::size_t>(candidates[b])]);
    } else {
      retained.push_back(candidates[b]);
    }
  }
  if (retained.empty()) throw DataError("preprocessing dropped every feature");

  for (const Index j : retained) {
    rep.retained.push_back(train.feature_names[static_cast<std::size_t>(j)]);
    rep.scale_min.push_back(train.features.col(j).minCoeff());
    rep.scale_max.push_back(train.features.col(j).maxCoeff());
  }
  return rep;
}

Dataset apply_preprocess(const Dataset& dataset, const PreprocessReport& report) {
  if (dataset.feature_names != report.input_features) {
    throw DataError("dataset features do not match the preprocessing report");
  }
  std::unordered_map<std::string, Index> column;
  for (std::size_t j = 0; j < dataset.feature_names.size(); ++j) {
    column.emplace(dataset.feature_names[j], static_cast<Index>(j));
  }
  Dataset out;
  out.name = dataset.name;
  out.labels = dataset.labels;
  out.feature_names = report.retained;
  out.features.resize(dataset.rows(), static_cast<Index>(report.retained.size()));
  for (std::size_t k = 0; k < report.retained.size(); ++k) {
    const auto it = column.find(report.retained[k]);
    if (it == column.end()) throw DataError("unknown feature '" + report.retained[k] + "'");
    const double lo = report.scale_min[k];
    const double span = report.scale_max[k] - lo;
    auto dst = out.features.col(static_cast<Index>(k));
    if (span > 0.0) {
      dst = (dataset.features.col(it->second).array() - lo) / span;
    } else {
      dst.setZero();
    }
  }
  return out;
}

std::uint64_t derive_seed(std::uint64_t base_seed, int repetition, int fold) {
  return base_seed * 1000 + static_cast<std::uint64_t>(repetition) * 10 + static_cast<std::uint64_t>(fold);
}

std::vector<Index> FoldPlan::validation_rows(int repetition, int fold) const {
  std::vector<Index> rows;
  const auto& assign = fold_of.at(static_cast<std::size_t>(repetition));
  for (std::size_t i = 0; i < assign.size(); ++i) {
    if (assign[i] == fold) rows.push_back(static_cast<Index>(i));
  }
  return rows;
}

std::vector<Index> FoldPlan::train_rows(int repetition, int fold) const {
  std::vector<Index> rows;
  const auto& assign = fold_of.at(static_cast<std::size_t>(repetition));
  for (std::size_t i = 0; i < assign.size(); ++i) {
    if (assign[i] != fold) rows.push_back(static_cast<Index>(i));
  }
  return rows;
}

FoldPlan stratified_kfold(const Dataset& dataset, int k, int repetitions, std::uint64_t base_seed) {
  if (k < 2 || k > kShuffleSeedSlot) throw ConfigError("fold count must lie in [2, 9]");
  if (repetitions < 1) throw ConfigError("repetitions must be >= 1");
  std::vector<Index> positives, negatives;
  for (std::size_t i = 0; i < dataset.labels.size(); ++i) {
    (dataset.labels[i] == 1 ? positives : negatives).push_back(static_cast<Index>(i));
  }
  if (positives.size() < static_cast<std::size_t>(k) || negatives.size() < static_cast<std::size_t>(k)) {
    throw DataError("each class needs at least " + std::to_string(k) + " instances for stratified folds");
  }

  FoldPlan plan;
  plan.k = k;
  plan.repetitions = repetitions;
  plan.base_seed = base_seed;
  for (int r = 0; r < repetitions; ++r) {
    const auto seed = derive_seed(base_seed, r, kShuffleSeedSlot);
    plan.seeds.push_back(seed);
    Rng rng(seed);
    auto pos = positives;
    auto neg = negatives;
    rng.shuffle(pos);
    rng.shuffle(neg);
    std::vector<int> assign(dataset.labels.size(), -1);
    for (std::size_t i = 0; i < pos.size(); ++i) {
      assign[static_cast<std::size_t>(pos[i])] = static_cast<int>(i % static_cast<std::size_t>(k));
    }
    // Negatives continue the rotation so overall fold sizes stay balanced.
    const std::size_t offset = pos.size();
    for (std::size_t i = 0; i < neg.size(); ++i) {
      assign[static_cast<std::size_t>(neg[i])] = static_cast<int>((offset + i) % static_cast<std::size_t>(k));
    }
    plan.fold_of.push_back(std::move(assign));
  }
  return plan;
}

}  // namespace tapauc::data
