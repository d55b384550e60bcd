#include "cfbench/schema.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace cfbench {

using nlohmann::json;

std::string to_string(ColumnKind kind) {
  switch (kind) {
    case ColumnKind::Numeric: return "numeric";
    case ColumnKind::Categorical: return "categorical";
    case ColumnKind::Binary: return "binary";
  }
  return "numeric";
}

ColumnKind column_kind_from_string(const std::string& s) {
  if (s == "numeric") return ColumnKind::Numeric;
  if (s == "categorical") return ColumnKind::Categorical;
  if (s == "binary") return ColumnKind::Binary;
  throw std::runtime_error("unknown column kind: " + s);
}

const ColumnSpec* FeatureSchema::find(const std::string& name) const {
  for (const auto& c : columns) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

int FeatureSchema::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

void FeatureSchema::validate() const {
  if (columns.empty()) throw std::runtime_error("schema has no columns");
  std::set<std::string> seen;
  for (const auto& c : columns) {
    if (c.name.empty()) throw std::runtime_error("schema column with empty name");
    if (!seen.insert(c.name).second) {
      throw std::runtime_error("duplicate column name: " + c.name);
    }
    if (!c.categories.empty()) {
      if (c.kind == ColumnKind::Binary && c.categories.size() != 2) {
        throw std::runtime_error("binary column " + c.name + " must have exactly 2 categories");
      }
      if (c.kind == ColumnKind::Categorical && c.categories.size() < 2) {
        throw std::runtime_error("categorical column " + c.name + " needs >= 2 categories");
      }
      std::set<std::string> cats(c.categories.begin(), c.categories.end());
      if (cats.size() != c.categories.size()) {
        throw std::runtime_error("duplicate category value in column " + c.name);
      }
    }
    if (c.allowed_range && c.allowed_range->first > c.allowed_range->second) {
      throw std::runtime_error("inverted range on column " + c.name);
    }
  }
  if (target.empty()) throw std::runtime_error("schema has no target column");
  if (!find(target)) throw std::runtime_error("target column not listed: " + target);
  for (const auto& e : constraints) {
    if (e.kind != ConstraintEntry::Kind::Relation && !find(e.feature)) {
      throw std::runtime_error("constraint references unknown feature: " + e.feature);
    }
    if (e.kind == ConstraintEntry::Kind::Range && e.lo > e.hi) {
      throw std::runtime_error("inverted constraint range on feature: " + e.feature);
    }
  }
}

int FeatureSchema::count_kind(ColumnKind kind) const {
  int n = 0;
  for (const auto& c : columns) {
    if (c.name != target && c.kind == kind) ++n;
  }
  return n;
}

namespace {

ConstraintEntry parse_constraint_entry(const json& j, const std::string& origin) {
  ConstraintEntry e;
  if (j.contains("relation")) {
    e.kind = ConstraintEntry::Kind::Relation;
    e.relation = j.at("relation").get<std::string>();
    e.tolerance = j.value("tol", 1e-3);
    if (e.tolerance <= 0.0) throw std::runtime_error(origin + ": relation tol must be > 0");
  } else if (j.contains("range")) {
    e.kind = ConstraintEntry::Kind::Range;
    e.feature = j.at("feature").get<std::string>();
    const auto& r = j.at("range");
    if (!r.is_array() || r.size() != 2) {
      throw std::runtime_error(origin + ": range must be [lo, hi]");
    }
    e.lo = r[0].get<double>();
    e.hi = r[1].get<double>();
  } else if (j.contains("binary")) {
    e.kind = ConstraintEntry::Kind::Binary;
    e.feature = j.at("feature").get<std::string>();
  } else if (j.contains("ohe")) {
    e.kind = ConstraintEntry::Kind::Ohe;
    e.feature = j.at("feature").get<std::string>();
  } else {
    throw std::runtime_error(origin + ": constraint entry needs relation/range/binary/ohe");
  }
  return e;
}

}  // namespace

FeatureSchema parse_schema(const std::string& json_text, const std::string& origin) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw std::runtime_error(origin + ": schema parse error: " + e.what());
  }
  FeatureSchema schema;
  try {
    schema.target = j.at("target").get<std::string>();
    for (const auto& jc : j.at("columns")) {
      ColumnSpec c;
      c.name = jc.at("name").get<std::string>();
      c.kind = column_kind_from_string(jc.value("kind", std::string("numeric")));
      if (jc.contains("range")) {
        const auto& r = jc.at("range");
        if (!r.is_array() || r.size() != 2) {
          throw std::runtime_error("column " + c.name + ": range must be [lo, hi]");
        }
        c.allowed_range = std::make_pair(r[0].get<double>(), r[1].get<double>());
      }
      if (jc.contains("categories")) {
        for (const auto& cat : jc.at("categories")) {
          c.categories.push_back(cat.is_string() ? cat.get<std::string>() : cat.dump());
        }
      }
      schema.columns.push_back(std::move(c));
    }
    if (j.contains("constraints")) {
      for (const auto& je : j.at("constraints")) {
        schema.constraints.push_back(parse_constraint_entry(je, origin));
      }
    }
  } catch (const json::exception& e) {
    throw std::runtime_error(origin + ": schema field error: " + e.what());
  }
  schema.validate();
  return schema;
}

FeatureSchema load_schema(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open schema file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_schema(buf.str(), path.string());
}

}  // namespace cfbench
