#pragma once

#include <cmath>
#include <optional>

#include "cfbench/constraints.hpp"
#include "cfbench/dataset.hpp"
#include "cfbench/generators.hpp"
#include "cfbench/model.hpp"
#include "cfbench/types.hpp"

namespace cfbench {

// Euclidean distance between factual and counterfactual; accepts any dense
// expressions of matching size.
template <typename DA, typename DB>
auto l2(const Eigen::MatrixBase<DA>& x, const Eigen::MatrixBase<DB>& c) {
  return (x - c).norm();
}

// sqrt((c - u)^T C^-1 (c - u)); evaluated at the counterfactual alone, with
// u and C^-1 taken from the train split.
template <typename DC, typename DU, typename DM>
auto mahalanobis(const Eigen::MatrixBase<DC>& c, const Eigen::MatrixBase<DU>& u,
                 const Eigen::MatrixBase<DM>& cov_inv) {
  const auto d = (c - u).eval();
  return std::sqrt(static_cast<double>(d.dot(cov_inv * d)));
}

enum class MadVariant {
  IndicatorChanged,  // categorical part counts changed coordinates (default)
  PaperLiteral,      // counts unchanged ones, mirroring the published formula
};

enum class SparsityVariant {
  Encoded,  // share of unchanged encoded coordinates (default)
  Grouped,  // share of unchanged feature groups
};

struct MetricOptions {
  MadVariant mad = MadVariant::IndicatorChanged;
  SparsityVariant sparsity = SparsityVariant::Encoded;
  double equality_tolerance = 1e-9;
};

// All nine scores for one generator/factual pair. Distance and constraint
// fields stay empty when no counterfactual exists (coverage 0).
struct MetricVector {
  int coverage = 0;
  std::optional<double> sparsity;
  int stability = 0;
  std::optional<double> l2;
  std::optional<int> ruc;
  std::optional<int> rmc;
  std::optional<double> mad;
  std::optional<double> md;
  double ct = 0.0;
  std::optional<int> realistic;
};

// 1 iff c exists and the model classifies it differently from x. Never
// trusts a generator's valid flag.
int coverage(const NeuralModel& model, const Vector& x, const std::optional<Vector>& c);

// Share of coordinates (or groups) left unchanged, equality within tol.
double sparsity(const Vector& x, const Vector& c, const EncodingMap& encoding,
                SparsityVariant variant = SparsityVariant::Encoded, double tol = 1e-9);

// 1 iff both paired runs produced counterfactuals and they agree elementwise
// within tol; any failed run scores 0.
int stability(const std::optional<Vector>& c_run1, const std::optional<Vector>& c_run2,
              double tol = 1e-9);

// Numeric part: mean of |x_p - c_p| / MAD_p over numeric coordinates.
// Categorical part: mean indicator over dummy/binary coordinates. Parts with
// no coordinates are dropped; the rest sum.
double mad_distance(const Vector& x, const Vector& c, const Vector& mads,
                    const EncodingMap& encoding, MadVariant variant = MadVariant::IndicatorChanged,
                    double tol = 1e-9);

// Assembles the full MetricVector for a paired run: run1 is scored, run2
// only feeds stability; ct is run1's measured wall clock.
MetricVector score_record(const CFRecord& run1, const CFRecord& run2, const NeuralModel& model,
                          const PreparedDataset& ds, const ConstraintSet& cs,
                          const MetricOptions& options = {});

}  // namespace cfbench
