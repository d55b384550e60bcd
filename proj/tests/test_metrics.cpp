#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "cfbench/metrics.hpp"
#include "cfbench/rng.hpp"

using namespace cfbench;

namespace {

// Scalar-loop oracles, no Eigen reductions.
double l2_oracle(const Vector& x, const Vector& c) {
  double s = 0.0;
  for (int i = 0; i < x.size(); ++i) s += (x(i) - c(i)) * (x(i) - c(i));
  return std::sqrt(s);
}

double md_oracle(const Vector& c, const Vector& u, const Matrix& cov_inv) {
  const int m = static_cast<int>(c.size());
  double q = 0.0;
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) q += (c(i) - u(i)) * cov_inv(i, j) * (c(j) - u(j));
  }
  return std::sqrt(q);
}

// Mixed encoding: v(0) numeric, c(1..3) categorical dummies, f(4) binary,
// w(5) numeric.
EncodingMap mixed_encoding() {
  EncodingMap enc;
  enc.groups.push_back({0, "v", ColumnKind::Numeric, {0}, {}});
  enc.groups.push_back({1, "c", ColumnKind::Categorical, {1, 2, 3}, {"p", "q", "r"}});
  enc.groups.push_back({2, "f", ColumnKind::Binary, {4}, {"n", "y"}});
  enc.groups.push_back({3, "w", ColumnKind::Numeric, {5}, {}});
  enc.width = 6;
  return enc;
}

double sparsity_oracle(const Vector& x, const Vector& c, const EncodingMap& enc,
                       SparsityVariant variant, double tol) {
  if (variant == SparsityVariant::Encoded) {
    int same = 0;
    for (int i = 0; i < x.size(); ++i) same += std::abs(x(i) - c(i)) <= tol;
    return double(same) / double(x.size());
  }
  int same = 0;
  for (const auto& g : enc.groups) {
    bool all = true;
    for (int idx : g.indices) all = all && std::abs(x(idx) - c(idx)) <= tol;
    same += all;
  }
  return double(same) / double(enc.groups.size());
}

double mad_oracle(const Vector& x, const Vector& c, const Vector& mads, const EncodingMap& enc,
                  MadVariant variant, double tol) {
  std::vector<int> numeric, dummy;
  for (const auto& g : enc.groups) {
    for (int idx : g.indices) (g.is_dummy() ? dummy : numeric).push_back(idx);
  }
  double total = 0.0;
  if (!numeric.empty()) {
    double s = 0.0;
    for (int p : numeric) s += std::abs(x(p) - c(p)) / mads(p);
    total += s / double(numeric.size());
  }
  if (!dummy.empty()) {
    double s = 0.0;
    for (int p : dummy) {
      const bool changed = std::abs(x(p) - c(p)) > tol;
      s += variant == MadVariant::IndicatorChanged ? changed : !changed;
    }
    total += s / double(dummy.size());
  }
  return total;
}

}  // namespace

TEST_CASE("l2 against the scalar oracle on random pairs") {
  Rng rng(101);
  for (int trial = 0; trial < 300; ++trial) {
    const int m = 1 + static_cast<int>(rng.below(12));
    Vector x(m), c(m);
    for (int i = 0; i < m; ++i) {
      x(i) = rng.uniform(-10.0, 10.0);
      c(i) = rng.uniform(-10.0, 10.0);
    }
    CHECK(l2(x, c) == doctest::Approx(l2_oracle(x, c)).epsilon(1e-12));
  }
  Vector z = Vector::Zero(4);
  CHECK(l2(z, z) == 0.0);
  // expression arguments work without materializing
  Vector a(3), b(3);
  a << 1, 2, 3;
  b << 1, 1, 1;
  CHECK(l2(a + b, b) == doctest::Approx(l2_oracle(a + b, b)));
}

TEST_CASE("mahalanobis against the double-loop oracle") {
  Rng rng(202);
  for (int trial = 0; trial < 100; ++trial) {
    const int m = 2 + static_cast<int>(rng.below(6));
    // S = A^T A + ridge is positive definite, so its inverse is a valid
    // precision matrix
    Matrix A(m, m);
    for (int i = 0; i < A.size(); ++i) A.data()[i] = rng.uniform(-1.0, 1.0);
    Matrix S = A.transpose() * A;
    S.diagonal().array() += 0.5;
    Matrix P = S.inverse();

    Vector c(m), u(m);
    for (int i = 0; i < m; ++i) {
      c(i) = rng.uniform(-5.0, 5.0);
      u(i) = rng.uniform(-5.0, 5.0);
    }
    CHECK(mahalanobis(c, u, P) == doctest::Approx(md_oracle(c, u, P)).epsilon(1e-10));
  }
}

TEST_CASE("mahalanobis with identity precision reduces to l2") {
  Rng rng(303);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int m = 1 + static_cast<int>(rng.below(16));
    Matrix eye = Matrix::Identity(m, m);
    Vector c(m), u(m);
    for (int i = 0; i < m; ++i) {
      c(i) = rng.uniform(-100.0, 100.0);
      u(i) = rng.uniform(-100.0, 100.0);
    }
    worst = std::max(worst, std::abs(mahalanobis(c, u, eye) - l2(c, u)));
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("sparsity: encoded and grouped variants") {
  EncodingMap enc = mixed_encoding();
  Vector x(6), c(6);
  x << 0.5, 1, 0, 0, 1, -2.0;
  c = x;

  CHECK(sparsity(x, c, enc, SparsityVariant::Encoded) == 1.0);
  CHECK(sparsity(x, c, enc, SparsityVariant::Grouped) == 1.0);

  // flip the categorical group p -> q: two encoded coordinates change but
  // only one group does
  c(1) = 0;
  c(2) = 1;
  CHECK(sparsity(x, c, enc, SparsityVariant::Encoded) == doctest::Approx(4.0 / 6.0));
  CHECK(sparsity(x, c, enc, SparsityVariant::Grouped) == doctest::Approx(3.0 / 4.0));

  // numeric nudge below tolerance still counts as unchanged
  c = x;
  c(0) += 1e-12;
  CHECK(sparsity(x, c, enc, SparsityVariant::Encoded, 1e-9) == 1.0);
  c(0) += 1e-6;
  CHECK(sparsity(x, c, enc, SparsityVariant::Encoded, 1e-9) == doctest::Approx(5.0 / 6.0));

  // everything changed
  Vector far = x.array() + 1.0;
  CHECK(sparsity(x, far, enc, SparsityVariant::Encoded) == 0.0);
  CHECK(sparsity(x, far, enc, SparsityVariant::Grouped) == 0.0);

  // randomized agreement with the oracle
  Rng rng(404);
  for (int trial = 0; trial < 200; ++trial) {
    Vector a(6), b(6);
    for (int i = 0; i < 6; ++i) {
      a(i) = std::round(rng.uniform(0.0, 3.0));
      b(i) = std::round(rng.uniform(0.0, 3.0));
    }
    for (auto variant : {SparsityVariant::Encoded, SparsityVariant::Grouped}) {
      CHECK(sparsity(a, b, enc, variant) ==
            doctest::Approx(sparsity_oracle(a, b, enc, variant, 1e-9)).epsilon(1e-12));
    }
  }
}

TEST_CASE("mad distance: numeric scaling plus categorical indicator") {
  EncodingMap enc = mixed_encoding();
  Vector mads(6);
  mads << 0.5, 1, 1, 1, 1, 2.0;

  Vector x(6), c(6);
  x << 1.0, 1, 0, 0, 1, 4.0;
  c << 2.0, 0, 1, 0, 1, 3.0;
  // numeric: (|1-2|/0.5 + |4-3|/2) / 2 = 1.25
  // changed dummies: indices 1 and 2 of four dummy coordinates
  CHECK(mad_distance(x, c, mads, enc, MadVariant::IndicatorChanged) ==
        doctest::Approx(1.25 + 2.0 / 4.0));
  CHECK(mad_distance(x, c, mads, enc, MadVariant::PaperLiteral) ==
        doctest::Approx(1.25 + 2.0 / 4.0));  // two unchanged of four

  CHECK(mad_distance(x, x, mads, enc, MadVariant::IndicatorChanged) == 0.0);
  // the literal variant scores identical categorical halves as 1, not 0
  CHECK(mad_distance(x, x, mads, enc, MadVariant::PaperLiteral) == doctest::Approx(1.0));

  Rng rng(505);
  for (int trial = 0; trial < 200; ++trial) {
    Vector a(6), b(6);
    for (int i = 0; i < 6; ++i) {
      a(i) = rng.uniform(-3.0, 3.0);
      b(i) = rng.uniform(-3.0, 3.0);
    }
    for (auto variant : {MadVariant::IndicatorChanged, MadVariant::PaperLiteral}) {
      CHECK(mad_distance(a, b, mads, enc, variant) ==
            doctest::Approx(mad_oracle(a, b, mads, enc, variant, 1e-9)).epsilon(1e-12));
    }
  }
}

TEST_CASE("mad distance: single-kind encodings drop the missing part") {
  EncodingMap numeric_only;
  numeric_only.groups.push_back({0, "a", ColumnKind::Numeric, {0}, {}});
  numeric_only.groups.push_back({1, "b", ColumnKind::Numeric, {1}, {}});
  numeric_only.width = 2;
  Vector mads(2);
  mads << 1.0, 4.0;
  Vector x(2), c(2);
  x << 0.0, 0.0;
  c << 3.0, 2.0;
  CHECK(mad_distance(x, c, mads, numeric_only) == doctest::Approx((3.0 + 0.5) / 2.0));

  EncodingMap cat_only;
  cat_only.groups.push_back({0, "g", ColumnKind::Categorical, {0, 1}, {"a", "b"}});
  cat_only.width = 2;
  Vector ones = Vector::Ones(2);
  Vector cx(2), cc(2);
  cx << 1, 0;
  cc << 0, 1;
  CHECK(mad_distance(cx, cc, ones, cat_only, MadVariant::IndicatorChanged) == doctest::Approx(1.0));
  CHECK(mad_distance(cx, cx, ones, cat_only, MadVariant::IndicatorChanged) == 0.0);
}

TEST_CASE("score_record: field wiring for covered, uncovered, and unstable pairs") {
  FeatureSchema schema = parse_schema(R"({
    "target": "y",
    "columns": [
      {"name": "a", "kind": "numeric", "range": [-10, 10]},
      {"name": "b", "kind": "numeric", "range": [-10, 10]},
      {"name": "y", "kind": "binary", "categories": ["lo", "hi"]}
    ]
  })");
  CsvTable t;
  t.header = {"a", "b", "y"};
  Rng rng(66);
  for (int i = 0; i < 40; ++i) {
    const double a = rng.uniform(-2.0, 2.0);
    const double b = rng.uniform(-2.0, 2.0);
    t.rows.push_back({std::to_string(a), std::to_string(b), a + b > 0 ? "hi" : "lo"});
  }
  PreparedDataset ds = load_and_encode(t, schema);
  ds.id = "plane";
  std::vector<std::string> labels;
  for (const auto& row : t.rows) labels.push_back(row[2]);
  ds.y = binarize_target(labels, &ds.majority_label);
  ds.split = split_dataset(ds.y, 3);
  normalize(ds, NormalizeMode::None);
  NeuralModel model = train(ds, {4, 0.01, 200}, 1);
  ConstraintSet cs = parse_constraints(ds);

  // pick a row and construct a counterfactual on the other side
  const int row = ds.split.test[0];
  Vector x = ds.X.row(row);
  Vector c = -x.array() + (ds.y(row) ? -1.0 : 1.0);
  REQUIRE(model.predict_class(c) != model.predict_class(x));

  CFRecord run1;
  run1.row = row;
  run1.counterfactual = c;
  run1.ct_seconds = 0.125;
  CFRecord run2 = run1;

  SUBCASE("covered and stable") {
    MetricVector mv = score_record(run1, run2, model, ds, cs);
    CHECK(mv.coverage == 1);
    CHECK(mv.stability == 1);
    CHECK(mv.ct == 0.125);
    REQUIRE(mv.l2.has_value());
    CHECK(*mv.l2 == doctest::Approx(l2_oracle(x, c)));
    REQUIRE(mv.sparsity.has_value());
    CHECK(*mv.sparsity == sparsity(x, c, ds.encoding));
    REQUIRE(mv.mad.has_value());
    CHECK(*mv.mad == mad_distance(x, c, ds.stats.mad, ds.encoding));
    REQUIRE(mv.md.has_value());
    CHECK(*mv.md == doctest::Approx(md_oracle(c, ds.stats.u, ds.stats.cov_inv)));
    REQUIRE(mv.ruc.has_value());
    CHECK(*mv.ruc == 1);  // c stays inside the schema box
    REQUIRE(mv.rmc.has_value());
    CHECK(*mv.rmc == 1);
    CHECK(*mv.realistic == 1);
  }

  SUBCASE("second run missing: stability drops, scores stay") {
    CFRecord failed = run2;
    failed.counterfactual.reset();
    MetricVector mv = score_record(run1, failed, model, ds, cs);
    CHECK(mv.coverage == 1);
    CHECK(mv.stability == 0);
    CHECK(mv.l2.has_value());
  }

  SUBCASE("uncovered pair: only coverage, stability, ct") {
    CFRecord none;
    none.row = row;
    none.ct_seconds = 0.5;
    MetricVector mv = score_record(none, none, model, ds, cs);
    CHECK(mv.coverage == 0);
    CHECK(mv.stability == 0);
    CHECK(mv.ct == 0.5);
    CHECK_FALSE(mv.l2.has_value());
    CHECK_FALSE(mv.sparsity.has_value());
    CHECK_FALSE(mv.mad.has_value());
    CHECK_FALSE(mv.md.has_value());
    CHECK_FALSE(mv.ruc.has_value());
    CHECK_FALSE(mv.rmc.has_value());
    CHECK_FALSE(mv.realistic.has_value());
  }

  SUBCASE("unrealistic counterfactual flags ruc") {
    CFRecord wild = run1;
    Vector far = c;
    far(0) = 50.0;  // outside the schema range but maybe still a flip
    if (model.predict_class(far) != model.predict_class(x)) {
      wild.counterfactual = far;
      MetricVector mv = score_record(wild, wild, model, ds, cs);
      CHECK(mv.coverage == 1);
      CHECK(*mv.ruc == 0);
      CHECK(*mv.realistic == 0);
    }
  }
}

TEST_CASE("stability: agreement within tolerance, failures score zero") {
  Vector a(3), b(3);
  a << 1.0, 2.0, 3.0;
  b = a;
  CHECK(stability(a, b) == 1);
  b(2) += 5e-10;  // inside the default tolerance
  CHECK(stability(a, b) == 1);
  b(2) += 1e-6;
  CHECK(stability(a, b) == 0);

  CHECK(stability(std::nullopt, b) == 0);
  CHECK(stability(a, std::nullopt) == 0);
  CHECK(stability(std::nullopt, std::nullopt) == 0);

  Vector shorter(2);
  shorter << 1.0, 2.0;
  CHECK(stability(a, shorter) == 0);

  // custom tolerance widens the band
  Vector c = a;
  c(0) += 0.05;
  CHECK(stability(a, c, 0.1) == 1);
}
