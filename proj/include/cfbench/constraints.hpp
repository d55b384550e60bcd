#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "cfbench/dataset.hpp"
#include "cfbench/types.hpp"

namespace cfbench {

// Arithmetic expression over named features with +, -, *, /, ^ (right
// associative), unary minus, parentheses, numeric literals, and the constant
// pi. Variables are bound to encoded column indices at parse time, so
// evaluation is a single walk over a raw-unit vector.
class RelationExpression {
 public:
  struct Node;
  using NodePtr = std::unique_ptr<Node>;
  struct Node {
    enum class Op { Constant, Variable, Add, Sub, Mul, Div, Pow, Neg } op;
    double value = 0.0;  // Constant
    int index = -1;      // Variable: encoded column
    NodePtr left, right;
  };

  // Parses "<expr> = <expr>". resolve maps a feature name to its encoded
  // column index and throws for unknown or non-scalar features.
  static RelationExpression parse(const std::string& text,
                                  const std::function<int(const std::string&)>& resolve);

  // |lhs - rhs| <= tol * max(1, |rhs|); non-finite values (division by zero
  // and friends) fail the relation rather than erroring.
  bool holds(const Vector& raw, double tolerance) const;

  double lhs(const Vector& raw) const { return eval(*lhs_, raw); }
  double rhs(const Vector& raw) const { return eval(*rhs_, raw); }
  const std::string& text() const { return text_; }

 private:
  static double eval(const Node& n, const Vector& raw);
  NodePtr lhs_, rhs_;
  std::string text_;
};

struct UnivariateRule {
  enum class Kind { Binary, Range } kind;
  std::string feature;
  int encoded_index = -1;
  double lo = 0.0, hi = 0.0;  // Range only, raw units
};

struct OheRule {
  std::string feature;
  std::vector<int> indices;
};

struct RelationRule {
  RelationExpression expression;
  double tolerance = 1e-3;
};

// Realistic-space definition bound to one dataset's encoding: univariate
// rules (exact {0,1} for binaries, [lo,hi] ranges for numerics) and
// multivariate rules (single-activation OHE groups, algebraic relations).
struct ConstraintSet {
  std::vector<UnivariateRule> univariate;
  std::vector<OheRule> ohe_groups;
  std::vector<RelationRule> relations;
};

// Builds the ConstraintSet for a prepared dataset: every numeric feature
// gets a range rule (schema-provided bounds, else train-split min/max in raw
// units), every binary feature the exact {0,1} rule, every categorical group
// the single-activation rule, plus any relation rules from the schema.
ConstraintSet parse_constraints(const PreparedDataset& ds);

// Univariate verdict over a raw-unit vector (same indexing as the encoded
// row, numeric entries denormalized). Undecodable values score 0.
int check_ruc(const Vector& raw, const ConstraintSet& cs);

// Multivariate verdict: OHE activation is checked on the encoded vector,
// relations on the raw one.
int check_rmc(const Vector& raw, const Vector& encoded, const ConstraintSet& cs);

inline int realistic(int ruc, int rmc) { return ruc && rmc ? 1 : 0; }

// D ⊆ R premise check: returns one warning per dataset row that violates its
// own constraint set (data-quality signal, not an error).
std::vector<std::string> audit_dataset(const PreparedDataset& ds, const ConstraintSet& cs);

}  // namespace cfbench
