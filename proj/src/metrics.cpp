#include "cfbench/metrics.hpp"

#include <cmath>

namespace cfbench {

int coverage(const NeuralModel& model, const Vector& x, const std::optional<Vector>& c) {
  if (!c) return 0;
  return model.predict_class(*c) != model.predict_class(x) ? 1 : 0;
}

double sparsity(const Vector& x, const Vector& c, const EncodingMap& encoding,
                SparsityVariant variant, double tol) {
  if (variant == SparsityVariant::Encoded) {
    int unchanged = 0;
    for (Eigen::Index p = 0; p < x.size(); ++p) unchanged += std::abs(x(p) - c(p)) <= tol;
    return static_cast<double>(unchanged) / static_cast<double>(x.size());
  }
  int unchanged = 0;
  for (const auto& g : encoding.groups) {
    bool same = true;
    for (int idx : g.indices) same = same && std::abs(x(idx) - c(idx)) <= tol;
    unchanged += same;
  }
  return static_cast<double>(unchanged) / static_cast<double>(encoding.groups.size());
}

int stability(const std::optional<Vector>& c_run1, const std::optional<Vector>& c_run2,
              double tol) {
  if (!c_run1 || !c_run2) return 0;
  if (c_run1->size() != c_run2->size()) return 0;
  return ((*c_run1 - *c_run2).array().abs() <= tol).all() ? 1 : 0;
}

double mad_distance(const Vector& x, const Vector& c, const Vector& mads,
                    const EncodingMap& encoding, MadVariant variant, double tol) {
  const auto numeric = encoding.numeric_indices();
  const auto dummy = encoding.dummy_indices();

  double total = 0.0;
  if (!numeric.empty()) {
    double sum = 0.0;
    for (int p : numeric) sum += std::abs(x(p) - c(p)) / mads(p);
    total += sum / static_cast<double>(numeric.size());
  }
  if (!dummy.empty()) {
    double sum = 0.0;
    for (int p : dummy) {
      const bool changed = std::abs(x(p) - c(p)) > tol;
      sum += variant == MadVariant::IndicatorChanged ? changed : !changed;
    }
    total += sum / static_cast<double>(dummy.size());
  }
  return total;
}

MetricVector score_record(const CFRecord& run1, const CFRecord& run2, const NeuralModel& model,
                          const PreparedDataset& ds, const ConstraintSet& cs,
                          const MetricOptions& options) {
  MetricVector mv;
  const Vector x = ds.X.row(run1.row);
  mv.coverage = coverage(model, x, run1.counterfactual);
  mv.stability = stability(run1.counterfactual, run2.counterfactual, options.equality_tolerance);
  mv.ct = run1.ct_seconds;
  if (!mv.coverage) return mv;

  const Vector& c = *run1.counterfactual;
  mv.sparsity = sparsity(x, c, ds.encoding, options.sparsity, options.equality_tolerance);
  mv.l2 = l2(x, c);
  mv.mad = mad_distance(x, c, ds.stats.mad, ds.encoding, options.mad, options.equality_tolerance);
  mv.md = mahalanobis(c, ds.stats.u, ds.stats.cov_inv);
  const Vector raw = decode_row(ds, c);
  mv.ruc = check_ruc(raw, cs);
  mv.rmc = check_rmc(raw, c, cs);
  mv.realistic = realistic(*mv.ruc, *mv.rmc);
  return mv;
}

}  // namespace cfbench
