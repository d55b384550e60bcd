#include "cfbench/model.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "cfbench/dataset.hpp"
#include "cfbench/rng.hpp"

namespace cfbench {

namespace {

constexpr double kRmsDecay = 0.9;
constexpr double kRmsEpsilon = 1e-7;
constexpr const char* kModelFormat = "cfbench-model-v1";

void check_width(const NeuralModel& m, const Vector& x) {
  if (x.size() != m.input_width()) {
    throw std::invalid_argument("input width " + std::to_string(x.size()) +
                                " does not match model width " + std::to_string(m.input_width()));
  }
}

}  // namespace

Eigen::Vector2d NeuralModel::predict(const Vector& x) const {
  check_width(*this, x);
  Vector h = relu(W1.transpose() * x + b1);
  return softmax(W2.transpose() * h + b2);
}

Matrix NeuralModel::predict_batch(const Matrix& X) const {
  Matrix out(X.rows(), 2);
  for (Eigen::Index r = 0; r < X.rows(); ++r) {
    out.row(r) = predict(X.row(r));
  }
  return out;
}

int NeuralModel::predict_class(const Vector& x) const {
  const Eigen::Vector2d p = predict(x);
  return p(1) > p(0) ? 1 : 0;
}

Vector NeuralModel::input_gradient(const Vector& x, int target_class) const {
  check_width(*this, x);
  if (target_class != 0 && target_class != 1) {
    throw std::invalid_argument("target class must be 0 or 1");
  }
  const Vector z1 = W1.transpose() * x + b1;
  const Vector a1 = relu(z1);
  const Eigen::Vector2d p = softmax(W2.transpose() * a1 + b2);

  Eigen::Vector2d dz2 = p;
  dz2(target_class) -= 1.0;
  Vector dz1 = (W2 * dz2).cwiseProduct((z1.array() > 0.0).cast<Scalar>().matrix());
  return W1 * dz1;
}

std::vector<int> neuron_grid(int input_width) {
  if (input_width < 1) throw std::invalid_argument("input width must be >= 1");
  const double max_neurons = 2.0 * input_width + 1.0;
  std::vector<int> grid;
  for (int f = 1; f <= 5; ++f) {
    int n = static_cast<int>(std::floor(f / 5.0 * max_neurons + 0.5));
    grid.push_back(std::max(1, n));
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

NeuralModel train(const PreparedDataset& ds, const TrainConfig& config, std::uint64_t seed) {
  const auto& train_rows = ds.split.train;
  if (train_rows.empty()) throw std::runtime_error("train split is empty");
  if (config.n_hidden < 1) throw std::invalid_argument("n_hidden must be >= 1");
  if (config.epochs < 0) throw std::invalid_argument("epochs must be >= 0");

  const int m = ds.width();
  const int h = config.n_hidden;
  const int n = static_cast<int>(train_rows.size());
  const int batch = std::min(32, n);

  Rng rng(seed);
  NeuralModel model;
  model.config = config;
  const double limit1 = std::sqrt(6.0 / (m + h));
  const double limit2 = std::sqrt(6.0 / (h + 2));
  model.W1 = Matrix::Zero(m, h);
  model.W2 = Matrix::Zero(h, 2);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < h; ++j) model.W1(i, j) = rng.uniform(-limit1, limit1);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < 2; ++j) model.W2(i, j) = rng.uniform(-limit2, limit2);
  model.b1 = Vector::Zero(h);
  model.b2 = Vector::Zero(2);

  Matrix cW1 = Matrix::Zero(m, h), cW2 = Matrix::Zero(h, 2);
  Vector cb1 = Vector::Zero(h), cb2 = Vector::Zero(2);

  std::vector<int> order(train_rows.begin(), train_rows.end());
  auto rms_step = [&](auto& weights, auto& cache, const auto& grad, double lr) {
    cache = kRmsDecay * cache.array() + (1.0 - kRmsDecay) * grad.array().square();
    weights.array() -= lr * grad.array() / (cache.array().sqrt() + kRmsEpsilon);
  };

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (int start = 0; start < n; start += batch) {
      const int count = std::min(batch, n - start);
      Matrix gW1 = Matrix::Zero(m, h), gW2 = Matrix::Zero(h, 2);
      Vector gb1 = Vector::Zero(h), gb2 = Vector::Zero(2);
      for (int b = 0; b < count; ++b) {
        const int row = order[start + b];
        const Vector x = ds.X.row(row);
        const int label = ds.y(row);
        const Vector z1 = model.W1.transpose() * x + model.b1;
        const Vector a1 = relu(z1);
        const Eigen::Vector2d p = softmax(model.W2.transpose() * a1 + model.b2);
        epoch_loss -= std::log(std::max(p(label), 1e-300));

        Eigen::Vector2d dz2 = p;
        dz2(label) -= 1.0;
        Vector dz1 = (model.W2 * dz2).cwiseProduct((z1.array() > 0.0).cast<Scalar>().matrix());
        gW2 += a1 * dz2.transpose();
        gb2 += dz2;
        gW1 += x * dz1.transpose();
        gb1 += dz1;
      }
      const double inv = 1.0 / count;
      rms_step(model.W1, cW1, (gW1 * inv).eval(), config.learning_rate);
      rms_step(model.b1, cb1, (gb1 * inv).eval(), config.learning_rate);
      rms_step(model.W2, cW2, (gW2 * inv).eval(), config.learning_rate);
      rms_step(model.b2, cb2, (gb2 * inv).eval(), config.learning_rate);
    }
    if (!std::isfinite(epoch_loss)) {
      throw std::runtime_error("non-finite training loss at epoch " + std::to_string(epoch) +
                               " (learning rate " + std::to_string(config.learning_rate) +
                               " diverged)");
    }
  }
  return model;
}

double auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) {
    throw std::invalid_argument("scores and labels differ in length");
  }
  const std::size_t n = scores.size();
  std::size_t n_pos = 0;
  for (int l : labels) n_pos += l == 1;
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw std::runtime_error("AUC undefined: labels contain a single class");
  }

  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });

  // midranks over tied score runs
  std::vector<double> rank(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[idx[j + 1]] == scores[idx[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[idx[k]] = mid;
    i = j + 1;
  }

  double rank_sum_pos = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (labels[k] == 1) rank_sum_pos += rank[k];
  }
  const double np = static_cast<double>(n_pos);
  return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

namespace {

std::pair<double, double> split_auc_acc(const NeuralModel& model, const PreparedDataset& ds,
                                        const std::vector<int>& rows) {
  std::vector<double> scores;
  std::vector<int> labels;
  scores.reserve(rows.size());
  labels.reserve(rows.size());
  int correct = 0;
  for (int r : rows) {
    const Vector x = ds.X.row(r);
    const Eigen::Vector2d p = model.predict(x);
    scores.push_back(p(1));
    labels.push_back(ds.y(r));
    correct += (p(1) > p(0) ? 1 : 0) == ds.y(r);
  }
  const double accuracy = rows.empty() ? 0.0 : static_cast<double>(correct) / rows.size();
  return {auc(scores, labels), accuracy};
}

}  // namespace

void evaluate(NeuralModel& model, const PreparedDataset& ds) {
  std::tie(model.eval.auc_train, model.eval.acc_train) = split_auc_acc(model, ds, ds.split.train);
  std::tie(model.eval.auc_valid, model.eval.acc_valid) = split_auc_acc(model, ds, ds.split.valid);
  std::tie(model.eval.auc_test, model.eval.acc_test) = split_auc_acc(model, ds, ds.split.test);
}

GridSearchResult grid_search(const PreparedDataset& ds, std::uint64_t seed, int jobs) {
  GridSearchResult result;
  for (int n : neuron_grid(ds.width())) {
    for (double lr : learning_rate_grid()) {
      for (int ep : epoch_grid()) {
        GridSearchCandidate c;
        c.config = {n, lr, ep};
        result.candidates.push_back(c);
      }
    }
  }

  std::vector<NeuralModel> models(result.candidates.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= result.candidates.size()) return;
      auto& cand = result.candidates[i];
      try {
        models[i] = train(ds, cand.config, seed + i);
        std::vector<double> scores;
        std::vector<int> labels;
        for (int r : ds.split.valid) {
          scores.push_back(models[i].predict(ds.X.row(r))(1));
          labels.push_back(ds.y(r));
        }
        cand.valid_auc = auc(scores, labels);
      } catch (const std::exception& e) {
        cand.failed = true;
        cand.error = e.what();
      }
    }
  };

  const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(result.candidates.size())));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (std::size_t i = 0; i < result.candidates.size(); ++i) {
    const auto& cand = result.candidates[i];
    if (cand.failed) continue;
    if (result.selected < 0) {
      result.selected = static_cast<int>(i);
      continue;
    }
    const auto& best = result.candidates[result.selected];
    const auto key = [](const GridSearchCandidate& c) {
      return std::make_tuple(-c.valid_auc, c.config.n_hidden, c.config.learning_rate,
                             c.config.epochs);
    };
    if (key(cand) < key(best)) result.selected = static_cast<int>(i);
  }
  if (result.selected < 0) {
    throw std::runtime_error("every grid-search candidate failed to train");
  }
  result.model = std::move(models[result.selected]);
  evaluate(result.model, ds);
  return result;
}

namespace {

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.empty()) throw std::runtime_error("corrupt model file: bad matrix");
  const auto rows = j.size();
  const auto cols = j.at(0).size();
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (j.at(r).size() != cols) throw std::runtime_error("corrupt model file: ragged matrix");
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = j.at(r).at(c).get<double>();
  }
  return m;
}

nlohmann::json vector_to_json(const Vector& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

Vector vector_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw std::runtime_error("corrupt model file: bad vector");
  Vector v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v(i) = j.at(i).get<double>();
  return v;
}

}  // namespace

void save_model(const NeuralModel& model, const std::filesystem::path& path) {
  nlohmann::json j;
  j["format"] = kModelFormat;
  j["config"] = {{"n_hidden", model.config.n_hidden},
                 {"learning_rate", model.config.learning_rate},
                 {"epochs", model.config.epochs}};
  j["eval"] = {{"auc_train", model.eval.auc_train}, {"auc_valid", model.eval.auc_valid},
               {"auc_test", model.eval.auc_test},   {"acc_train", model.eval.acc_train},
               {"acc_valid", model.eval.acc_valid}, {"acc_test", model.eval.acc_test}};
  j["W1"] = matrix_to_json(model.W1);
  j["b1"] = vector_to_json(model.b1);
  j["W2"] = matrix_to_json(model.W2);
  j["b2"] = vector_to_json(model.b2);

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open model file for writing: " + path.string());
  out << j.dump(2) << "\n";
}

NeuralModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("corrupt model file " + path.string() + ": " + e.what());
  }
  if (!j.contains("format") || !j["format"].is_string()) {
    throw std::runtime_error("corrupt model file " + path.string() + ": missing format tag");
  }
  if (j["format"] != kModelFormat) {
    throw std::runtime_error("unsupported model format version '" +
                             j["format"].get<std::string>() + "' (expected " + kModelFormat + ")");
  }
  try {
    NeuralModel m;
    m.config.n_hidden = j.at("config").at("n_hidden").get<int>();
    m.config.learning_rate = j.at("config").at("learning_rate").get<double>();
    m.config.epochs = j.at("config").at("epochs").get<int>();
    const auto& e = j.at("eval");
    m.eval = {e.at("auc_train").get<double>(), e.at("auc_valid").get<double>(),
              e.at("auc_test").get<double>(),  e.at("acc_train").get<double>(),
              e.at("acc_valid").get<double>(), e.at("acc_test").get<double>()};
    m.W1 = matrix_from_json(j.at("W1"));
    m.b1 = vector_from_json(j.at("b1"));
    m.W2 = matrix_from_json(j.at("W2"));
    m.b2 = vector_from_json(j.at("b2"));
    if (m.W1.cols() != m.W2.rows() || m.b1.size() != m.W1.cols() || m.b2.size() != 2 ||
        m.W2.cols() != 2) {
      throw std::runtime_error("inconsistent weight shapes");
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("corrupt model file " + path.string() + ": " + e.what());
  }
}

}  // namespace cfbench
