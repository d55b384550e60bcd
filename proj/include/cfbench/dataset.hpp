#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cfbench/csv.hpp"
#include "cfbench/schema.hpp"
#include "cfbench/types.hpp"

namespace cfbench {

class NeuralModel;

/// One raw column's slice of the encoded matrix. Numeric and binary columns
/// occupy a single encoded index; categorical columns one index per category.
struct EncodedGroup {
  int raw_column = -1;  // index into FeatureSchema::columns
  std::string name;
  ColumnKind kind = ColumnKind::Numeric;
  std::vector<int> indices;
  std::vector<std::string> categories;  // levels (categorical/binary)

  bool is_dummy() const { return kind != ColumnKind::Numeric; }
};

struct EncodingMap {
  std::vector<EncodedGroup> groups;  // non-target raw columns, schema order
  int width = 0;

  const EncodedGroup* group_for(const std::string& raw_name) const;
  /// Group owning an encoded column index.
  const EncodedGroup& owner(int encoded_index) const;
  /// Encoded indices that are one-hot dummies or binary flags.
  std::vector<int> dummy_indices() const;
  std::vector<int> numeric_indices() const;
};

struct SplitIndices {
  std::vector<int> train, valid, test;
};

enum class NormalizeMode { ByVariance, ByStd, None };

struct FeatureStats {
  // Transform parameters, raw encoded units, train split only.
  Vector mu, sigma2;
  std::vector<std::uint8_t> normalized;  // 1 where the transform was applied

  // Statistics of the features as the model sees them (post-normalization),
  // train split only.
  Vector mad;
  Vector min, max;
  Vector u;        // mean vector
  Matrix cov_inv;  // ridge-regularized inverse covariance
};

struct PreparedDataset {
  std::string id;
  FeatureSchema schema;
  EncodingMap encoding;
  Matrix X;  // encoded features; normalized once normalize() has run
  IntVector y;
  std::string majority_label;
  SplitIndices split;
  FeatureStats stats;
  NormalizeMode normalize_mode = NormalizeMode::None;
  std::vector<std::string> warnings;

  int rows() const { return static_cast<int>(X.rows()); }
  int width() const { return encoding.width; }
  /// "numerical" | "categorical" | "mixed" from the schema's feature kinds.
  std::string dataset_type() const;
  double class_share(int cls) const;
};

struct FactualCase {
  std::string dataset_id;
  int row = -1;  // row index (member of the test split)
  Vector x;
  int y_original = -1;
  int predicted_class = -1;
  double score_original = 0.0;   // model score for the original class
  double score_predicted = 0.0;  // model score for the predicted class
  bool misclassified = false;
};

/// Expands the CSV into the encoded matrix: numeric copied, categorical
/// one-hot, binary mapped to {0,1}. Raw target labels are returned untouched.
/// Every cell must conform to its ColumnSpec; missing values are an error.
PreparedDataset load_and_encode(const CsvTable& table, const FeatureSchema& schema,
                                std::vector<std::string>* raw_labels_out = nullptr);
PreparedDataset load_and_encode(const std::filesystem::path& csv_path, const FeatureSchema& schema,
                                std::vector<std::string>* raw_labels_out = nullptr);

/// Majority class -> 1, all others -> 0. Count ties go to the
/// lexicographically smallest label. Returns the majority label too.
IntVector binarize_target(const std::vector<std::string>& labels, std::string* majority_out = nullptr);

/// Stratified 60/20/20 with largest-remainder rounding; every class needs at
/// least 3 members so that each split keeps one of each.
SplitIndices split_dataset(const IntVector& y, std::uint64_t seed);

/// Fills stats.mu/sigma2 from the train split, then rescales numeric columns
/// in place: (a - mu) / sigma^2 (paper convention) or / sigma (ByStd).
/// Zero-variance columns are left as-is with a warning. Afterwards the
/// model-space stats (mad/min/max/u/cov_inv) are computed on the train split.
void normalize(PreparedDataset& ds, NormalizeMode mode = NormalizeMode::ByVariance);

/// Inverse of the normalization for one encoded column.
double denormalize_value(const PreparedDataset& ds, int encoded_index, double value);
double normalize_value(const PreparedDataset& ds, int encoded_index, double raw_value);

/// Raw-unit view of an encoded row: numeric entries denormalized, dummy
/// entries passed through.
Vector decode_row(const PreparedDataset& ds, const Vector& encoded);

/// Raw value of one group within an encoded row, rendered as CSV text
/// (used by the round-trip check).
std::string decode_group_value(const PreparedDataset& ds, const EncodedGroup& g, const Vector& encoded);

/// Up to per_class_count test rows per binary class, uniform without
/// replacement, sorted by row index. Requires a trained model for the
/// prediction fields.
std::vector<FactualCase> select_factuals(const PreparedDataset& ds, const NeuralModel& model,
                                         int per_class_count, std::uint64_t seed);

/// Convenience: encode + binarize + split + normalize in one call.
PreparedDataset prepare_dataset(const std::filesystem::path& csv_path, const FeatureSchema& schema,
                                std::uint64_t split_seed,
                                NormalizeMode mode = NormalizeMode::ByVariance);

/// Median absolute deviation around the median (even counts average the two
/// middle elements).
double median_absolute_deviation(std::vector<double> values);

}  // namespace cfbench
