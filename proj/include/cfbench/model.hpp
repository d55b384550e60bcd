#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cfbench/types.hpp"

namespace cfbench {

struct PreparedDataset;

// Rectifier on any dense expression; usable on scalars, vectors, or whole
// activation matrices without materializing temporaries.
template <typename Derived>
auto relu(const Eigen::MatrixBase<Derived>& z) {
  using S = typename Derived::Scalar;
  return z.cwiseMax(S(0));
}

// Numerically shifted softmax over a length-k score vector.
template <typename Derived>
VectorT<typename Derived::Scalar> softmax(const Eigen::MatrixBase<Derived>& z) {
  using S = typename Derived::Scalar;
  VectorT<S> e = (z.array() - z.maxCoeff()).exp().matrix();
  return e / e.sum();
}

struct TrainConfig {
  int n_hidden = 1;
  double learning_rate = 0.01;
  int epochs = 50;
};

struct EvalScores {
  double auc_train = 0.0, auc_valid = 0.0, auc_test = 0.0;
  double acc_train = 0.0, acc_valid = 0.0, acc_test = 0.0;
};

// One-hidden-layer feed-forward classifier: rectifier hidden activation,
// softmax over two outputs. Immutable once trained; safe to share across
// threads read-only.
class NeuralModel {
 public:
  Matrix W1;  // input_width x n_hidden
  Vector b1;  // n_hidden
  Matrix W2;  // n_hidden x 2
  Vector b2;  // 2
  TrainConfig config;
  EvalScores eval;

  int input_width() const { return static_cast<int>(W1.rows()); }
  int n_hidden() const { return static_cast<int>(W1.cols()); }

  // Softmax class scores for a single encoded row.
  Eigen::Vector2d predict(const Vector& x) const;
  // Scores for every row of X, one row of (p0, p1) per input row.
  Matrix predict_batch(const Matrix& X) const;
  // argmax class; exact ties resolve to class 0.
  int predict_class(const Vector& x) const;

  // Gradient of the cross-entropy loss toward target_class with respect to
  // the input coordinates. Rectifier kinks contribute subgradient 0.
  Vector input_gradient(const Vector& x, int target_class) const;
};

struct GridSearchCandidate {
  TrainConfig config;
  double valid_auc = 0.0;
  bool failed = false;
  std::string error;
};

struct GridSearchResult {
  std::vector<GridSearchCandidate> candidates;
  int selected = -1;  // index into candidates
  NeuralModel model;  // retrained/kept winner with eval scores filled in
};

// Hidden-size grid derived from the input width m: with max = 2m + 1, the
// grid is round(f * max) for f in {1/5 .. 5/5}, half-up, clamped to >= 1,
// deduplicated ascending.
std::vector<int> neuron_grid(int input_width);

inline const std::vector<double>& learning_rate_grid() {
  static const std::vector<double> g = {0.01, 0.001, 0.0001};
  return g;
}

inline const std::vector<int>& epoch_grid() {
  static const std::vector<int> g = {50, 100, 500};
  return g;
}

// Mini-batch RMSprop (decay 0.9, epsilon 1e-7) on categorical cross-entropy.
// Batch size min(32, train rows); Glorot-uniform init from the seed; row
// order reshuffled per epoch. Deterministic given (dataset, config, seed).
// Throws on non-finite loss.
NeuralModel train(const PreparedDataset& ds, const TrainConfig& config, std::uint64_t seed);

// Trains the full n_hidden x learning-rate x epochs grid (candidate i gets
// seed + i), selects max validation AUC with ties broken toward fewer
// neurons, then smaller learning rate, then fewer epochs. Candidates that
// throw are recorded as failed; at least one must succeed. jobs > 1 trains
// candidates concurrently without changing the outcome.
GridSearchResult grid_search(const PreparedDataset& ds, std::uint64_t seed, int jobs = 1);

// Fills eval AUC/accuracy for all three splits.
void evaluate(NeuralModel& model, const PreparedDataset& ds);

// Area under the ROC curve via the rank statistic; tied scores receive
// midranks. Throws when labels contain a single class.
double auc(const std::vector<double>& scores, const std::vector<int>& labels);

void save_model(const NeuralModel& model, const std::filesystem::path& path);
NeuralModel load_model(const std::filesystem::path& path);

}  // namespace cfbench
