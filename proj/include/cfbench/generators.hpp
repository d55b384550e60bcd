#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cfbench/dataset.hpp"
#include "cfbench/model.hpp"
#include "cfbench/types.hpp"

namespace cfbench {

// Everything a generator may consult: the model under explanation, the
// factual point in encoded (model-space) coordinates, the class the model
// assigns to it, train statistics, and the constraint hooks. Generators
// always target the class opposite to y.
struct GeneratorRequest {
  const NeuralModel* model = nullptr;
  const PreparedDataset* dataset = nullptr;
  Vector x;
  int y = 0;  // model's predicted class at x

  bool clamp_ranges = true;    // clamp each coordinate to train [min, max]
  bool project_onehot = true;  // keep dummy groups single-active, binaries exact
  std::vector<std::uint8_t> frozen;  // per-coordinate; empty = nothing frozen
  Vector weights;                    // per-coordinate penalty weights; empty = ones

  int budget = 0;  // 0 = generator default (steps / samples / expansions)
  std::uint64_t seed = 0;
};

struct CFRecord {
  std::string generator;
  std::string dataset_id;
  int row = -1;
  std::optional<Vector> counterfactual;
  bool valid = false;
  double ct_seconds = 0.0;
  long iterations = 0;  // steps, samples drawn, or subsets expanded
  std::uint64_t seed = 0;
  std::string note;  // diagnostics (non-finite iterate, budget exhausted, ...)
};

class Generator {
 public:
  virtual ~Generator() = default;
  virtual std::string name() const = 0;
  virtual CFRecord run(const GeneratorRequest& request) const = 0;
};

// Times run() with a monotonic clock (the measurement covers exactly the
// search, not request construction) and re-derives the valid flag from the
// model rather than trusting the generator.
CFRecord generate(const Generator& generator, const GeneratorRequest& request);

// Within each dummy group the argmax entry becomes 1 and the rest 0 (ties
// to the lowest index); binary columns round to the nearer of {0, 1} with
// 0.5 going to 0. Numeric coordinates pass through. Idempotent.
Vector project_ohe(const Vector& v, const EncodingMap& encoding);

// Iterative descent on cross-entropy toward the target class with an
// elastic-net pull back to x: the smooth part (cross-entropy + L2) moves by
// its gradient, the L1 part acts as a proximal shrink of c - x. Hooks run
// after every step; the walk stops at the first class flip.
class GradientDescentGenerator : public Generator {
 public:
  GradientDescentGenerator(double step = 0.05, double lambda1 = 0.0, double lambda2 = 0.0)
      : step_(step), lambda1_(lambda1), lambda2_(lambda2) {}
  std::string name() const override { return "grad_descent"; }
  CFRecord run(const GeneratorRequest& request) const override;

  static constexpr int kDefaultBudget = 1000;  // gradient steps

 private:
  double step_, lambda1_, lambda2_;
};

// Samples uniformly inside a small ball around x, then in annuli of growing
// radius, until a sample flips the class; the flip is then sparsified by
// reverting coordinates to x in ascending order of deviation while the
// class stays flipped.
class GrowingSpheresGenerator : public Generator {
 public:
  GrowingSpheresGenerator(double initial_radius = 0.1, double growth = 0.1,
                          int samples_per_layer = 200)
      : initial_radius_(initial_radius), growth_(growth), samples_per_layer_(samples_per_layer) {}
  std::string name() const override { return "growing_spheres"; }
  CFRecord run(const GeneratorRequest& request) const override;

  static constexpr int kDefaultBudget = 8000;  // total samples (= 40 layers x 200)

 private:
  double initial_radius_, growth_;
  int samples_per_layer_;
};

// Best-first search over feature subsets replaced by train means (numeric)
// or the modal pattern (dummy groups as atomic units, binaries by modal
// value); expands the subset scoring highest toward the target class and
// returns the first flipped one.
class GreedyMeanGenerator : public Generator {
 public:
  std::string name() const override { return "greedy_mean"; }
  CFRecord run(const GeneratorRequest& request) const override;

  // default budget = 2 * encoded width expansions, resolved per request
};

// Name -> factory table so run configs can select generators (including
// third-party plug-ins) by name.
class GeneratorRegistry {
 public:
  using Factory = std::function<std::unique_ptr<Generator>(const nlohmann::json& params)>;

  // starts with the three built-in families registered
  GeneratorRegistry();

  void register_generator(const std::string& name, Factory factory);
  bool contains(const std::string& name) const { return factories_.count(name) > 0; }
  std::unique_ptr<Generator> make(const std::string& name, const nlohmann::json& params) const;
  std::vector<std::string> names() const;

 private:
  std::map<std::string, Factory> factories_;
};

}  // namespace cfbench
