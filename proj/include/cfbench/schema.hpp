#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace cfbench {

enum class ColumnKind { Numeric, Categorical, Binary };

std::string to_string(ColumnKind kind);
ColumnKind column_kind_from_string(const std::string& s);

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::Numeric;
  /// Realistic range in raw units (numeric columns). When absent the
  /// constraint engine falls back to the train-split min/max.
  std::optional<std::pair<double, double>> allowed_range;
  /// Ordered category values (categorical/binary). May be left empty and
  /// inferred from data at encoding time.
  std::vector<std::string> categories;
};

/// One entry of the schema's constraint section. Exactly one of the rule
/// fields is set; `feature` names a raw column for range/binary/ohe rules.
struct ConstraintEntry {
  enum class Kind { Range, Binary, Ohe, Relation };
  Kind kind = Kind::Relation;
  std::string feature;
  double lo = 0.0, hi = 0.0;
  std::string relation;    // "<expr> = <expr>" over raw feature names
  double tolerance = 1e-3; // relative, for relation rules
};

struct FeatureSchema {
  std::vector<ColumnSpec> columns;
  std::string target;
  std::vector<ConstraintEntry> constraints;

  const ColumnSpec* find(const std::string& name) const;
  int column_index(const std::string& name) const;  // -1 if absent

  /// Throws std::runtime_error on a malformed schema: duplicate column
  /// names, target not listed, wrong category counts, inverted ranges.
  void validate() const;

  int count_kind(ColumnKind kind) const;  // non-target columns only
};

FeatureSchema load_schema(const std::filesystem::path& path);
FeatureSchema parse_schema(const std::string& json_text, const std::string& origin = "<string>");

}  // namespace cfbench
