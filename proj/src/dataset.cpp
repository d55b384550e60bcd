#include "cfbench/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "cfbench/model.hpp"
#include "cfbench/rng.hpp"

namespace cfbench {

const EncodedGroup* EncodingMap::group_for(const std::string& raw_name) const {
  for (const auto& g : groups) {
    if (g.name == raw_name) return &g;
  }
  return nullptr;
}

const EncodedGroup& EncodingMap::owner(int encoded_index) const {
  for (const auto& g : groups) {
    for (int idx : g.indices) {
      if (idx == encoded_index) return g;
    }
  }
  throw std::out_of_range("encoded index out of range: " + std::to_string(encoded_index));
}

std::vector<int> EncodingMap::dummy_indices() const {
  std::vector<int> out;
  for (const auto& g : groups) {
    if (g.is_dummy()) out.insert(out.end(), g.indices.begin(), g.indices.end());
  }
  return out;
}

std::vector<int> EncodingMap::numeric_indices() const {
  std::vector<int> out;
  for (const auto& g : groups) {
    if (!g.is_dummy()) out.insert(out.end(), g.indices.begin(), g.indices.end());
  }
  return out;
}

std::string PreparedDataset::dataset_type() const {
  int numeric = 0, other = 0;
  for (const auto& c : schema.columns) {
    if (c.name == schema.target) continue;
    (c.kind == ColumnKind::Numeric ? numeric : other)++;
  }
  if (numeric > 0 && other == 0) return "numerical";
  if (numeric == 0 && other > 0) return "categorical";
  return "mixed";
}

double PreparedDataset::class_share(int cls) const {
  if (y.size() == 0) return 0.0;
  double n = 0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y(i) == cls) ++n;
  }
  return n / static_cast<double>(y.size());
}

namespace {

double parse_numeric_cell(const std::string& cell, const std::string& column, std::size_t row) {
  if (cell.empty()) {
    throw std::runtime_error("missing value in column " + column + ", row " + std::to_string(row));
  }
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(cell, &pos);
  } catch (const std::exception&) {
    throw std::runtime_error("non-numeric token '" + cell + "' in numeric column " + column +
                             ", row " + std::to_string(row));
  }
  if (pos != cell.size()) {
    throw std::runtime_error("non-numeric token '" + cell + "' in numeric column " + column +
                             ", row " + std::to_string(row));
  }
  return v;
}

std::vector<std::string> sorted_unique(const CsvTable& table, int col) {
  std::set<std::string> values;
  for (const auto& row : table.rows) values.insert(row[col]);
  return {values.begin(), values.end()};
}

}  // namespace

PreparedDataset load_and_encode(const CsvTable& table, const FeatureSchema& schema,
                                std::vector<std::string>* raw_labels_out) {
  schema.validate();
  PreparedDataset ds;
  ds.schema = schema;

  std::vector<int> csv_cols(schema.columns.size(), -1);
  for (std::size_t i = 0; i < schema.columns.size(); ++i) {
    csv_cols[i] = table.column(schema.columns[i].name);
    if (csv_cols[i] < 0) {
      throw std::runtime_error("missing column in CSV: " + schema.columns[i].name);
    }
  }

  // Resolve category lists up front so widths are known.
  int width = 0;
  for (std::size_t i = 0; i < schema.columns.size(); ++i) {
    const auto& spec = schema.columns[i];
    if (spec.name == schema.target) continue;
    EncodedGroup g;
    g.raw_column = static_cast<int>(i);
    g.name = spec.name;
    g.kind = spec.kind;
    if (spec.kind != ColumnKind::Numeric) {
      g.categories = spec.categories.empty() ? sorted_unique(table, csv_cols[i]) : spec.categories;
      if (spec.kind == ColumnKind::Binary && g.categories.size() != 2) {
        throw std::runtime_error("binary column " + spec.name + " has " +
                                 std::to_string(g.categories.size()) + " distinct values");
      }
      if (spec.kind == ColumnKind::Categorical && g.categories.size() < 2) {
        throw std::runtime_error("categorical column " + spec.name + " has < 2 distinct values");
      }
    }
    const int span = spec.kind == ColumnKind::Categorical ? static_cast<int>(g.categories.size()) : 1;
    for (int k = 0; k < span; ++k) g.indices.push_back(width + k);
    width += span;
    ds.encoding.groups.push_back(std::move(g));
  }
  ds.encoding.width = width;

  const int n = static_cast<int>(table.rows.size());
  if (n == 0) throw std::runtime_error("CSV has no data rows");
  ds.X = Matrix::Zero(n, width);

  std::vector<std::string> labels;
  labels.reserve(n);
  const int target_col = csv_cols[schema.column_index(schema.target)];

  for (int r = 0; r < n; ++r) {
    const auto& row = table.rows[r];
    for (const auto& g : ds.encoding.groups) {
      const std::string& cell = row[csv_cols[g.raw_column]];
      if (g.kind == ColumnKind::Numeric) {
        ds.X(r, g.indices[0]) = parse_numeric_cell(cell, g.name, r + 2);
      } else {
        if (cell.empty()) {
          throw std::runtime_error("missing value in column " + g.name + ", row " +
                                   std::to_string(r + 2));
        }
        const auto it = std::find(g.categories.begin(), g.categories.end(), cell);
        if (it == g.categories.end()) {
          throw std::runtime_error("unknown category '" + cell + "' in column " + g.name +
                                   ", row " + std::to_string(r + 2));
        }
        const int level = static_cast<int>(it - g.categories.begin());
        if (g.kind == ColumnKind::Categorical) {
          ds.X(r, g.indices[level]) = 1.0;
        } else {
          ds.X(r, g.indices[0]) = static_cast<double>(level);
        }
      }
    }
    if (row[target_col].empty()) {
      throw std::runtime_error("missing target value at row " + std::to_string(r + 2));
    }
    labels.push_back(row[target_col]);
  }

  ds.y = binarize_target(labels, &ds.majority_label);
  if (raw_labels_out) *raw_labels_out = std::move(labels);
  return ds;
}

PreparedDataset load_and_encode(const std::filesystem::path& csv_path, const FeatureSchema& schema,
                                std::vector<std::string>* raw_labels_out) {
  PreparedDataset ds = load_and_encode(read_csv(csv_path), schema, raw_labels_out);
  ds.id = csv_path.stem().string();
  return ds;
}

IntVector binarize_target(const std::vector<std::string>& labels, std::string* majority_out) {
  if (labels.empty()) throw std::runtime_error("empty label list");
  std::map<std::string, int> counts;
  for (const auto& l : labels) counts[l]++;
  if (counts.size() < 2) {
    throw std::runtime_error("target has a single class; need >= 2");
  }
  // std::map iterates in sorted order, so on a count tie the first (smallest)
  // label wins.
  std::string majority = counts.begin()->first;
  int best = counts.begin()->second;
  for (const auto& [label, count] : counts) {
    if (count > best) {
      best = count;
      majority = label;
    }
  }
  IntVector y(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) y(i) = labels[i] == majority ? 1 : 0;
  if (majority_out) *majority_out = majority;
  return y;
}

SplitIndices split_dataset(const IntVector& y, std::uint64_t seed) {
  const int n = static_cast<int>(y.size());
  if (n < 5) throw std::runtime_error("dataset too small to split (< 5 rows)");

  SplitIndices split;
  Rng rng(seed);
  for (int cls = 0; cls <= 1; ++cls) {
    std::vector<int> members;
    for (int i = 0; i < n; ++i) {
      if (y(i) == cls) members.push_back(i);
    }
    if (static_cast<int>(members.size()) < 3) {
      throw std::runtime_error("class " + std::to_string(cls) + " has " +
                               std::to_string(members.size()) +
                               " members; cannot cover all three splits");
    }
    rng.shuffle(members);

    const double mc = static_cast<double>(members.size());
    const double ideals[3] = {0.6 * mc, 0.2 * mc, 0.2 * mc};
    int sizes[3];
    double fracs[3];
    int assigned = 0;
    for (int k = 0; k < 3; ++k) {
      sizes[k] = static_cast<int>(std::floor(ideals[k]));
      fracs[k] = ideals[k] - sizes[k];
      assigned += sizes[k];
    }
    int leftover = static_cast<int>(members.size()) - assigned;
    // largest remainder; ties resolved in train > valid > test order
    std::vector<int> order = {0, 1, 2};
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return fracs[a] > fracs[b]; });
    for (int k = 0; k < leftover; ++k) sizes[order[k]]++;
    // every split keeps at least one row of the class
    for (int k = 0; k < 3; ++k) {
      while (sizes[k] == 0) {
        int donor = sizes[0] >= sizes[1] && sizes[0] >= sizes[2] ? 0 : (sizes[1] >= sizes[2] ? 1 : 2);
        sizes[donor]--;
        sizes[k]++;
      }
    }

    auto it = members.begin();
    split.train.insert(split.train.end(), it, it + sizes[0]);
    it += sizes[0];
    split.valid.insert(split.valid.end(), it, it + sizes[1]);
    it += sizes[1];
    split.test.insert(split.test.end(), it, it + sizes[2]);
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.valid.begin(), split.valid.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

double median_absolute_deviation(std::vector<double> values) {
  if (values.empty()) return 0.0;
  auto median_of = [](std::vector<double>& v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
  };
  const double med = median_of(values);
  for (auto& v : values) v = std::abs(v - med);
  return median_of(values);
}

namespace {

void compute_model_space_stats(PreparedDataset& ds) {
  const auto& train = ds.split.train;
  const int nt = static_cast<int>(train.size());
  const int m = ds.width();
  Matrix T(nt, m);
  for (int i = 0; i < nt; ++i) T.row(i) = ds.X.row(train[i]);

  ds.stats.u = T.colwise().mean();
  ds.stats.min = T.colwise().minCoeff();
  ds.stats.max = T.colwise().maxCoeff();

  ds.stats.mad = Vector::Zero(m);
  std::vector<double> col(nt);
  for (int c = 0; c < m; ++c) {
    for (int i = 0; i < nt; ++i) col[i] = T(i, c);
    ds.stats.mad(c) = median_absolute_deviation(col);
  }

  Matrix centered = T.rowwise() - ds.stats.u.transpose();
  Matrix cov = (centered.transpose() * centered) / static_cast<double>(nt);
  const double ridge = 1e-6 * cov.trace() / static_cast<double>(m);
  cov.diagonal().array() += ridge;
  ds.stats.cov_inv = cov.ldlt().solve(Matrix::Identity(m, m));
}

}  // namespace

void normalize(PreparedDataset& ds, NormalizeMode mode) {
  if (ds.split.train.empty()) {
    throw std::runtime_error("normalize requires a train split");
  }
  const auto& train = ds.split.train;
  const int nt = static_cast<int>(train.size());
  const int m = ds.width();

  ds.stats.mu = Vector::Zero(m);
  ds.stats.sigma2 = Vector::Zero(m);
  ds.stats.normalized.assign(m, 0);
  ds.normalize_mode = mode;

  for (const auto& g : ds.encoding.groups) {
    if (g.is_dummy()) continue;  // dummies stay untouched
    const int c = g.indices[0];
    double mean = 0.0;
    for (int i = 0; i < nt; ++i) mean += ds.X(train[i], c);
    mean /= nt;
    double var = 0.0;
    for (int i = 0; i < nt; ++i) {
      const double d = ds.X(train[i], c) - mean;
      var += d * d;
    }
    var /= nt;
    ds.stats.mu(c) = mean;
    ds.stats.sigma2(c) = var;
    if (mode == NormalizeMode::None) continue;
    if (var <= 0.0) {
      ds.warnings.push_back("zero-variance numeric column left unnormalized: " + g.name);
      continue;
    }
    const double denom = mode == NormalizeMode::ByVariance ? var : std::sqrt(var);
    for (int r = 0; r < ds.rows(); ++r) {
      ds.X(r, c) = (ds.X(r, c) - mean) / denom;
    }
    ds.stats.normalized[c] = 1;
  }
  compute_model_space_stats(ds);
}

double denormalize_value(const PreparedDataset& ds, int encoded_index, double value) {
  if (ds.stats.normalized.empty() || !ds.stats.normalized[encoded_index]) return value;
  const double denom = ds.normalize_mode == NormalizeMode::ByVariance
                           ? ds.stats.sigma2(encoded_index)
                           : std::sqrt(ds.stats.sigma2(encoded_index));
  return value * denom + ds.stats.mu(encoded_index);
}

double normalize_value(const PreparedDataset& ds, int encoded_index, double raw_value) {
  if (ds.stats.normalized.empty() || !ds.stats.normalized[encoded_index]) return raw_value;
  const double denom = ds.normalize_mode == NormalizeMode::ByVariance
                           ? ds.stats.sigma2(encoded_index)
                           : std::sqrt(ds.stats.sigma2(encoded_index));
  return (raw_value - ds.stats.mu(encoded_index)) / denom;
}

Vector decode_row(const PreparedDataset& ds, const Vector& encoded) {
  Vector raw = encoded;
  for (int c = 0; c < ds.width(); ++c) raw(c) = denormalize_value(ds, c, encoded(c));
  return raw;
}

std::string decode_group_value(const PreparedDataset& ds, const EncodedGroup& g,
                               const Vector& encoded) {
  if (g.kind == ColumnKind::Numeric) {
    std::ostringstream out;
    out.precision(17);
    out << denormalize_value(ds, g.indices[0], encoded(g.indices[0]));
    return out.str();
  }
  if (g.kind == ColumnKind::Binary) {
    const double v = encoded(g.indices[0]);
    if (v == 0.0) return g.categories[0];
    if (v == 1.0) return g.categories[1];
    throw std::runtime_error("binary column " + g.name + " is not 0/1");
  }
  int active = -1;
  for (std::size_t k = 0; k < g.indices.size(); ++k) {
    if (encoded(g.indices[k]) == 1.0) {
      if (active >= 0) throw std::runtime_error("OHE group " + g.name + " has two active entries");
      active = static_cast<int>(k);
    } else if (encoded(g.indices[k]) != 0.0) {
      throw std::runtime_error("OHE group " + g.name + " has a fractional entry");
    }
  }
  if (active < 0) throw std::runtime_error("OHE group " + g.name + " has no active entry");
  return g.categories[active];
}

std::vector<FactualCase> select_factuals(const PreparedDataset& ds, const NeuralModel& model,
                                         int per_class_count, std::uint64_t seed) {
  std::vector<FactualCase> out;
  Rng rng(seed);
  for (int cls = 0; cls <= 1; ++cls) {
    std::vector<int> candidates;
    for (int idx : ds.split.test) {
      if (ds.y(idx) == cls) candidates.push_back(idx);
    }
    if (candidates.empty()) {
      throw std::runtime_error("test split has no rows of class " + std::to_string(cls));
    }
    auto chosen = rng.sample(candidates, static_cast<std::size_t>(per_class_count));
    std::sort(chosen.begin(), chosen.end());
    for (int row : chosen) {
      FactualCase f;
      f.dataset_id = ds.id;
      f.row = row;
      f.x = ds.X.row(row);
      f.y_original = cls;
      const Eigen::Vector2d scores = model.predict(f.x);
      f.predicted_class = model.predict_class(f.x);
      f.score_original = scores(cls);
      f.score_predicted = scores(f.predicted_class);
      f.misclassified = f.predicted_class != cls;
      out.push_back(std::move(f));
    }
  }
  return out;
}

PreparedDataset prepare_dataset(const std::filesystem::path& csv_path, const FeatureSchema& schema,
                                std::uint64_t split_seed, NormalizeMode mode) {
  PreparedDataset ds = load_and_encode(csv_path, schema);
  ds.split = split_dataset(ds.y, split_seed);
  normalize(ds, mode);
  return ds;
}

}  // namespace cfbench
