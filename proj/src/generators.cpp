#include "cfbench/generators.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <queue>
#include <set>
#include <stdexcept>

#include "cfbench/rng.hpp"

namespace cfbench {

namespace {

void check_request(const GeneratorRequest& req) {
  if (!req.model || !req.dataset) throw std::invalid_argument("request lacks model or dataset");
  if (req.x.size() != req.dataset->width()) {
    throw std::invalid_argument("factual width does not match dataset encoding");
  }
  if (!req.frozen.empty() && req.frozen.size() != static_cast<std::size_t>(req.x.size())) {
    throw std::invalid_argument("frozen mask length does not match encoded width");
  }
  if (req.weights.size() != 0 && req.weights.size() != req.x.size()) {
    throw std::invalid_argument("weight vector length does not match encoded width");
  }
  if (req.budget < 0) throw std::invalid_argument("budget must be positive");
}

// frozen reset, range clamp, dummy projection — in that order, so projected
// groups stay exact even when clamping touched them
Vector apply_hooks(Vector c, const GeneratorRequest& req) {
  if (!req.frozen.empty()) {
    for (Eigen::Index i = 0; i < c.size(); ++i) {
      if (req.frozen[i]) c(i) = req.x(i);
    }
  }
  if (req.clamp_ranges) {
    const auto& stats = req.dataset->stats;
    c = c.cwiseMax(stats.min).cwiseMin(stats.max);
  }
  if (req.project_onehot) c = project_ohe(c, req.dataset->encoding);
  return c;
}

// Sparsification / search units: whole encoding groups when dummy projection
// is on (keeps single-activation intact), raw coordinates otherwise.
std::vector<std::vector<int>> deviation_units(const GeneratorRequest& req) {
  std::vector<std::vector<int>> units;
  if (req.project_onehot) {
    for (const auto& g : req.dataset->encoding.groups) units.push_back(g.indices);
  } else {
    for (int i = 0; i < req.dataset->width(); ++i) units.push_back({i});
  }
  return units;
}

}  // namespace

CFRecord generate(const Generator& generator, const GeneratorRequest& request) {
  check_request(request);
  const auto start = std::chrono::steady_clock::now();
  CFRecord rec = generator.run(request);
  const auto stop = std::chrono::steady_clock::now();
  rec.ct_seconds = std::chrono::duration<double>(stop - start).count();
  rec.generator = generator.name();
  rec.seed = request.seed;
  rec.valid = rec.counterfactual.has_value() &&
              request.model->predict_class(*rec.counterfactual) != request.y;
  return rec;
}

Vector project_ohe(const Vector& v, const EncodingMap& encoding) {
  Vector out = v;
  for (const auto& g : encoding.groups) {
    if (g.kind == ColumnKind::Categorical) {
      int best = g.indices[0];
      for (int idx : g.indices) {
        if (out(idx) > out(best)) best = idx;  // tie keeps the lowest index
      }
      for (int idx : g.indices) out(idx) = idx == best ? 1.0 : 0.0;
    } else if (g.kind == ColumnKind::Binary) {
      out(g.indices[0]) = out(g.indices[0]) > 0.5 ? 1.0 : 0.0;
    }
  }
  return out;
}

CFRecord GradientDescentGenerator::run(const GeneratorRequest& req) const {
  CFRecord rec;
  rec.generator = name();
  const int target = 1 - req.y;
  const int budget = req.budget > 0 ? req.budget : kDefaultBudget;
  const Vector weights =
      req.weights.size() ? req.weights : Vector::Ones(req.x.size());

  Vector c = req.x;
  for (int iter = 1; iter <= budget; ++iter) {
    const Vector prev = c;
    Vector g = req.model->input_gradient(c, target);
    if (lambda2_ > 0.0) g += 2.0 * lambda2_ * weights.cwiseProduct(c - req.x);
    c -= step_ * g;
    if (lambda1_ > 0.0) {
      // proximal shrink of the deviation: the L1 pull acts as a per-step
      // soft threshold rather than a raw subgradient, so a huge lambda1
      // pins c at x instead of oscillating
      for (Eigen::Index p = 0; p < c.size(); ++p) {
        const double t = step_ * lambda1_ * weights(p);
        const double d = c(p) - req.x(p);
        c(p) = req.x(p) + (d > t ? d - t : (d < -t ? d + t : 0.0));
      }
    }
    c = apply_hooks(std::move(c), req);
    rec.iterations = iter;
    if (!c.allFinite()) {
      rec.note = "non-finite iterate at step " + std::to_string(iter);
      return rec;
    }
    if (req.model->predict_class(c) != req.y) {
      // the raw step length can overshoot the boundary by far more movement
      // than the flip needs; bisect the crossing segment so the result sits
      // just past the boundary instead of one full step beyond it
      Vector lo = prev;  // still the factual class
      for (int i = 0; i < 40; ++i) {
        Vector mid = apply_hooks(0.5 * (lo + c), req);
        if (req.model->predict_class(mid) != req.y) {
          c = std::move(mid);
        } else {
          lo = std::move(mid);
        }
      }
      rec.counterfactual = c;
      rec.valid = true;
      return rec;
    }
  }
  rec.note = "budget exhausted without class flip";
  return rec;
}

namespace {

// Revert units to the factual (smallest deviation first) while the class
// stays flipped; never returns an unflipped point.
Vector sparsify(Vector c, const GeneratorRequest& req) {
  struct UnitDev {
    double dev;
    std::vector<int> indices;
  };
  std::vector<UnitDev> devs;
  for (const auto& unit : deviation_units(req)) {
    double dev = 0.0;
    for (int idx : unit) dev = std::max(dev, std::abs(c(idx) - req.x(idx)));
    if (dev > 0.0) devs.push_back({dev, unit});
  }
  std::stable_sort(devs.begin(), devs.end(), [](const UnitDev& a, const UnitDev& b) {
    return a.dev != b.dev ? a.dev < b.dev : a.indices[0] < b.indices[0];
  });
  for (const auto& d : devs) {
    Vector trial = c;
    for (int idx : d.indices) trial(idx) = req.x(idx);
    if (req.model->predict_class(trial) != req.y) c = std::move(trial);
  }
  return c;
}

}  // namespace

CFRecord GrowingSpheresGenerator::run(const GeneratorRequest& req) const {
  CFRecord rec;
  rec.generator = name();
  const int budget = req.budget > 0 ? req.budget : kDefaultBudget;
  const int m = static_cast<int>(req.x.size());
  Rng rng(req.seed);

  double r_lo = 0.0;
  double r_hi = initial_radius_;
  long used = 0;
  while (used < budget) {
    for (int s = 0; s < samples_per_layer_ && used < budget; ++s) {
      Vector dir(m);
      for (int p = 0; p < m; ++p) dir(p) = rng.gaussian();
      const double norm = dir.norm();
      if (norm == 0.0) dir(0) = 1.0;
      else dir /= norm;

      // uniform radius inside the annulus (r_lo, r_hi]: inverse transform of
      // the volume CDF; the (r_lo/r_hi)^m term underflows harmlessly to plain
      // ball sampling in high dimension
      const double ratio_m = std::pow(r_lo / r_hi, m);
      const double frac = std::pow(rng.uniform() * (1.0 - ratio_m) + ratio_m, 1.0 / m);
      Vector cand = req.x + (r_hi * frac) * dir;

      cand = apply_hooks(std::move(cand), req);
      ++used;
      rec.iterations = used;
      if (req.model->predict_class(cand) != req.y) {
        rec.counterfactual = sparsify(std::move(cand), req);
        rec.valid = true;
        return rec;
      }
    }
    r_lo = r_hi;
    r_hi += growth_;
  }
  rec.note = "budget exhausted without class flip";
  return rec;
}

CFRecord GreedyMeanGenerator::run(const GeneratorRequest& req) const {
  CFRecord rec;
  rec.generator = name();
  const auto& ds = *req.dataset;
  const int target = 1 - req.y;
  const int budget = req.budget > 0 ? req.budget : 2 * ds.width();

  // replacement pattern per group: train mean for numerics, modal value or
  // modal dummy pattern otherwise
  Vector replacement = req.x;
  const auto& train = ds.split.train;
  for (const auto& g : ds.encoding.groups) {
    if (g.kind == ColumnKind::Numeric) {
      replacement(g.indices[0]) = ds.stats.u(g.indices[0]);
    } else if (g.kind == ColumnKind::Binary) {
      int ones = 0;
      for (int r : train) ones += ds.X(r, g.indices[0]) == 1.0;
      replacement(g.indices[0]) = 2 * ones > static_cast<int>(train.size()) ? 1.0 : 0.0;
    } else {
      int best = 0, best_count = -1;
      for (std::size_t k = 0; k < g.indices.size(); ++k) {
        int count = 0;
        for (int r : train) count += ds.X(r, g.indices[k]) == 1.0;
        if (count > best_count) {  // tie keeps the lowest category index
          best_count = count;
          best = static_cast<int>(k);
        }
      }
      for (std::size_t k = 0; k < g.indices.size(); ++k) {
        replacement(g.indices[k]) = k == static_cast<std::size_t>(best) ? 1.0 : 0.0;
      }
    }
  }

  // candidate units: groups that are not frozen and whose replacement
  // actually moves the point
  std::vector<std::vector<int>> units;
  for (const auto& g : ds.encoding.groups) {
    bool frozen = false, moves = false;
    for (int idx : g.indices) {
      if (!req.frozen.empty() && req.frozen[idx]) frozen = true;
      if (replacement(idx) != req.x(idx)) moves = true;
    }
    if (!frozen && moves) units.push_back(g.indices);
  }
  if (units.empty()) {
    rec.note = "no replaceable features";
    return rec;
  }

  auto materialize = [&](const std::vector<int>& subset) {
    Vector c = req.x;
    for (int u : subset) {
      for (int idx : units[u]) c(idx) = replacement(idx);
    }
    return c;
  };

  struct State {
    double score;
    std::vector<int> subset;  // sorted unit ids
    bool operator<(const State& o) const {
      // priority_queue pops the largest: higher score first, then the
      // lexicographically smaller subset for determinism
      if (score != o.score) return score < o.score;
      return subset > o.subset;
    }
  };
  std::priority_queue<State> open;
  std::set<std::vector<int>> seen;
  open.push({req.model->predict(req.x)(target), {}});
  seen.insert({});

  long expansions = 0;
  while (!open.empty() && expansions < budget) {
    const State state = open.top();
    open.pop();
    ++expansions;
    rec.iterations = expansions;
    for (int u = 0; u < static_cast<int>(units.size()); ++u) {
      if (std::binary_search(state.subset.begin(), state.subset.end(), u)) continue;
      std::vector<int> child = state.subset;
      child.insert(std::lower_bound(child.begin(), child.end(), u), u);
      if (!seen.insert(child).second) continue;
      const Vector cand = materialize(child);
      const Eigen::Vector2d p = req.model->predict(cand);
      if ((p(1) > p(0) ? 1 : 0) != req.y) {
        rec.counterfactual = cand;
        rec.valid = true;
        return rec;
      }
      open.push({p(target), std::move(child)});
    }
  }
  rec.note = open.empty() ? "replacement lattice exhausted without class flip"
                          : "budget exhausted without class flip";
  return rec;
}

GeneratorRegistry::GeneratorRegistry() {
  register_generator("grad_descent", [](const nlohmann::json& params) {
    return std::make_unique<GradientDescentGenerator>(params.value("step", 0.05),
                                                      params.value("lambda1", 0.0),
                                                      params.value("lambda2", 0.0));
  });
  register_generator("growing_spheres", [](const nlohmann::json& params) {
    return std::make_unique<GrowingSpheresGenerator>(params.value("initial_radius", 0.1),
                                                     params.value("growth", 0.1),
                                                     params.value("samples_per_layer", 200));
  });
  register_generator("greedy_mean", [](const nlohmann::json&) {
    return std::make_unique<GreedyMeanGenerator>();
  });
}

void GeneratorRegistry::register_generator(const std::string& name, Factory factory) {
  if (!factories_.emplace(name, std::move(factory)).second) {
    throw std::runtime_error("generator name already registered: " + name);
  }
}

std::unique_ptr<Generator> GeneratorRegistry::make(const std::string& name,
                                                   const nlohmann::json& params) const {
  const auto it = factories_.find(name);
  if (it == factories_.end()) {
    throw std::runtime_error("unknown generator: " + name);
  }
  return it->second(params.is_null() ? nlohmann::json::object() : params);
}

std::vector<std::string> GeneratorRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : factories_) out.push_back(name);
  return out;
}

}  // namespace cfbench
