#include "cfbench/runner.hpp"

#include <atomic>
#include <chrono>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "cfbench/constraints.hpp"
#include "cfbench/fetch.hpp"
#include "cfbench/schema.hpp"

namespace cfbench {

namespace {

constexpr const char* kRunFormat = "cfbench-run-v1";

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::filesystem::path& p) {
  return p.is_absolute() ? p : base / p;
}

RunConfig parse_config(const std::filesystem::path& path, std::vector<std::string>& errors) {
  RunConfig config;
  config.base_dir = std::filesystem::absolute(path).parent_path();

  std::string bytes;
  try {
    bytes = read_file(path);
  } catch (const std::exception& e) {
    errors.push_back(e.what());
    return config;
  }
  config.config_hash = sha256_hex(bytes.data(), bytes.size());

  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes);
  } catch (const nlohmann::json::exception& e) {
    errors.push_back("config is not valid JSON: " + std::string(e.what()));
    return config;
  }

  try {
    for (const auto& d : j.value("datasets", nlohmann::json::array())) {
      DatasetConfig dc;
      dc.id = d.value("id", "");
      dc.csv = resolve(config.base_dir, d.value("csv", ""));
      dc.schema = resolve(config.base_dir, d.value("schema", ""));
      dc.url = d.value("url", "");
      dc.sha256 = d.value("sha256", "");
      config.datasets.push_back(std::move(dc));
    }
    for (const auto& g : j.value("generators", nlohmann::json::array())) {
      GeneratorConfig gc;
      gc.name = g.value("name", "");
      gc.id = g.value("id", gc.name);
      gc.params = g.value("params", nlohmann::json::object());
      gc.clamp_ranges = g.value("clamp_ranges", true);
      gc.project_onehot = g.value("project_onehot", true);
      gc.budget = g.value("budget", 0);
      config.generators.push_back(std::move(gc));
    }

    if (!j.contains("seeds") || !j["seeds"].is_object()) {
      errors.push_back("config lacks the mandatory \"seeds\" object");
    } else {
      const auto& s = j["seeds"];
      for (const char* key : {"split", "model", "factuals", "generation"}) {
        if (!s.contains(key)) {
          errors.push_back(std::string("seeds.") + key +
                           " missing: every stage seed must be explicit");
        }
      }
      config.split_seed = s.value("split", 0u);
      config.model_seed = s.value("model", 0u);
      config.factual_seed = s.value("factuals", 0u);
      config.generation_seed = s.value("generation", 0u);
    }

    config.factual_count = j.value("factual_count", 100);
    config.jobs = j.value("jobs", 1);
    config.alpha = j.value("alpha", 0.05);
    config.out_dir = j.value("out", "");

    const std::string norm = j.value("normalize", "variance");
    if (norm == "variance") {
      config.normalize = NormalizeMode::ByVariance;
    } else if (norm == "std") {
      config.normalize = NormalizeMode::ByStd;
    } else if (norm == "none") {
      config.normalize = NormalizeMode::None;
    } else {
      errors.push_back("unknown normalize mode: " + norm);
    }

    const auto metrics = j.value("metrics", nlohmann::json::object());
    const std::string mad = metrics.value("mad", "indicator");
    if (mad == "indicator") {
      config.metrics.mad = MadVariant::IndicatorChanged;
    } else if (mad == "paper-literal") {
      config.metrics.mad = MadVariant::PaperLiteral;
    } else {
      errors.push_back("unknown mad variant: " + mad);
    }
    const std::string sparsity = metrics.value("sparsity", "encoded");
    if (sparsity == "encoded") {
      config.metrics.sparsity = SparsityVariant::Encoded;
    } else if (sparsity == "grouped") {
      config.metrics.sparsity = SparsityVariant::Grouped;
    } else {
      errors.push_back("unknown sparsity variant: " + sparsity);
    }
  } catch (const nlohmann::json::exception& e) {
    errors.push_back("malformed config field: " + std::string(e.what()));
  }
  return config;
}

}  // namespace

RunConfig load_config(const std::filesystem::path& path) {
  std::vector<std::string> errors;
  RunConfig config = parse_config(path, errors);
  if (!errors.empty()) {
    std::string joined = "invalid config " + path.string() + ":";
    for (const auto& e : errors) joined += "\n  - " + e;
    throw std::runtime_error(joined);
  }
  return config;
}

std::vector<std::string> validate_config(const std::filesystem::path& path) {
  std::vector<std::string> errors;
  RunConfig config = parse_config(path, errors);
  if (!errors.empty()) return errors;

  if (config.datasets.empty()) errors.push_back("config lists no datasets");
  std::set<std::string> dataset_ids;
  for (const auto& d : config.datasets) {
    if (d.id.empty()) errors.push_back("dataset entry without id");
    if (!dataset_ids.insert(d.id).second) errors.push_back("duplicate dataset id: " + d.id);
    if (!std::filesystem::exists(d.schema)) {
      errors.push_back("schema file missing: " + d.schema.string());
    } else {
      try {
        load_schema(d.schema);
      } catch (const std::exception& e) {
        errors.push_back("schema " + d.schema.string() + " invalid: " + e.what());
      }
    }
    if (!std::filesystem::exists(d.csv)) {
      if (d.url.empty()) {
        errors.push_back("data file missing (and no url to fetch): " + d.csv.string());
      } else if (d.sha256.empty()) {
        errors.push_back("dataset " + d.id + " has a url but no sha256 digest");
      }
    }
  }

  if (config.generators.empty()) errors.push_back("config lists no generators");
  GeneratorRegistry registry;
  std::set<std::string> generator_ids;
  for (const auto& g : config.generators) {
    if (!generator_ids.insert(g.id).second) errors.push_back("duplicate generator id: " + g.id);
    if (!registry.contains(g.name)) errors.push_back("unknown generator: " + g.name);
    if (g.budget < 0) errors.push_back("generator " + g.id + " has negative budget");
  }

  if (config.factual_count < 1) errors.push_back("factual_count must be >= 1");
  if (config.jobs < 1) errors.push_back("jobs must be >= 1");
  if (!(config.alpha > 0.0 && config.alpha < 1.0)) errors.push_back("alpha must lie in (0, 1)");
  return errors;
}

std::vector<ScoredRecord> RunRecord::scored() const {
  std::vector<ScoredRecord> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    out.push_back({p.dataset_id, p.dataset_type, p.row, p.generator, p.metrics});
  }
  return out;
}

std::map<std::pair<std::string, int>, FactualContext> RunRecord::contexts() const {
  std::map<std::pair<std::string, int>, FactualContext> out;
  for (const auto& p : pairs) out[{p.dataset_id, p.row}] = p.context;
  return out;
}

namespace {

std::string hash_model(const NeuralModel& model) {
  std::string bytes;
  auto append = [&bytes](const double* data, std::size_t n) {
    bytes.append(reinterpret_cast<const char*>(data), n * sizeof(double));
  };
  append(model.W1.data(), model.W1.size());
  append(model.b1.data(), model.b1.size());
  append(model.W2.data(), model.W2.size());
  append(model.b2.data(), model.b2.size());
  return to_hex(fnv1a(bytes));
}

std::string hash_factuals(const std::vector<FactualCase>& factuals) {
  std::string bytes;
  for (const auto& f : factuals) {
    bytes += std::to_string(f.row) + ":" + std::to_string(f.predicted_class) + ";";
  }
  return to_hex(fnv1a(bytes));
}

template <typename F>
auto stage(const std::string& name, const std::string& dataset, F&& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    throw std::runtime_error("stage " + name + " failed for dataset " + dataset + ": " + e.what());
  }
}

}  // namespace

void run_benchmark(const RunConfig& config, RunRecord& record, int jobs_override) {
  const auto t0 = std::chrono::steady_clock::now();
  record.config_hash = config.config_hash;
  record.version = kVersion;
  const int jobs = jobs_override > 0 ? jobs_override : std::max(1, config.jobs);

  GeneratorRegistry registry;
  std::vector<std::unique_ptr<Generator>> generators;
  for (const auto& gc : config.generators) {
    generators.push_back(registry.make(gc.name, gc.params));
  }

  std::uint64_t pair_counter = 0;
  for (const auto& dc : config.datasets) {
    const std::string& id = dc.id;

    FeatureSchema schema = stage("schema", id, [&] { return load_schema(dc.schema); });
    PreparedDataset ds = stage("prepare", id, [&] {
      PreparedDataset d = prepare_dataset(dc.csv, schema, config.split_seed, config.normalize);
      d.id = id;
      return d;
    });
    for (const auto& w : ds.warnings) record.warnings.push_back(id + ": " + w);

    ConstraintSet cs = stage("constraints", id, [&] { return parse_constraints(ds); });
    for (const auto& w : audit_dataset(ds, cs)) record.warnings.push_back(w);

    GridSearchResult search = stage("model", id, [&] {
      return grid_search(ds, config.model_seed, jobs);
    });
    for (const auto& c : search.candidates) {
      if (c.failed) {
        record.warnings.push_back(id + ": grid candidate (" + std::to_string(c.config.n_hidden) +
                                  " neurons, lr " + std::to_string(c.config.learning_rate) +
                                  ", " + std::to_string(c.config.epochs) + " epochs) failed: " +
                                  c.error);
      }
    }
    const NeuralModel& model = search.model;

    const std::vector<FactualCase> factuals = stage("factuals", id, [&] {
      return select_factuals(ds, model, config.factual_count, config.factual_seed);
    });

    ModelSummary summary;
    summary.dataset_id = id;
    summary.dataset_type = ds.dataset_type();
    summary.selected = model.config;
    summary.eval = model.eval;
    summary.model_hash = hash_model(model);
    summary.factual_hash = hash_factuals(factuals);
    summary.factuals = static_cast<int>(factuals.size());
    summary.encoded_width = ds.width();
    record.models.push_back(summary);

    FactualContext base_context;
    base_context.neurons = model.config.n_hidden;
    base_context.auc_test = model.eval.auc_test;
    base_context.rows_train = static_cast<double>(ds.split.train.size());
    for (const auto& col : schema.columns) {
      if (col.name == schema.target) continue;
      if (col.kind == ColumnKind::Numeric) {
        base_context.columns_numerical += 1;
      } else {
        base_context.columns_categorical += 1;
      }
    }

    struct Task {
      int factual;
      int generator;
      std::uint64_t seed;
    };
    std::vector<Task> tasks;
    for (std::size_t f = 0; f < factuals.size(); ++f) {
      for (std::size_t g = 0; g < generators.size(); ++g) {
        tasks.push_back({static_cast<int>(f), static_cast<int>(g),
                         config.generation_seed + 2 * pair_counter});
        ++pair_counter;
      }
    }

    std::vector<PairRecord> results(tasks.size());
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::string failure;
    std::mutex failure_mutex;

    auto worker = [&]() {
      for (;;) {
        const std::size_t t = next.fetch_add(1);
        if (t >= tasks.size() || failed.load()) return;
        const Task& task = tasks[t];
        const FactualCase& f = factuals[task.factual];
        const GeneratorConfig& gc = config.generators[task.generator];
        try {
          GeneratorRequest req;
          req.model = &model;
          req.dataset = &ds;
          req.x = f.x;
          req.y = f.predicted_class;
          req.clamp_ranges = gc.clamp_ranges;
          req.project_onehot = gc.project_onehot;
          req.budget = gc.budget;

          PairRecord pr;
          pr.dataset_id = id;
          pr.dataset_type = ds.dataset_type();
          pr.row = f.row;
          pr.generator = gc.id;
          req.seed = task.seed;
          pr.run1 = generate(*generators[task.generator], req);
          req.seed = task.seed + 1;
          pr.run2 = generate(*generators[task.generator], req);
          pr.run1.dataset_id = pr.run2.dataset_id = id;
          pr.run1.row = pr.run2.row = f.row;
          pr.metrics = score_record(pr.run1, pr.run2, model, ds, cs, config.metrics);

          pr.context = base_context;
          pr.context.misclassified = f.misclassified ? 1.0 : 0.0;
          pr.context.factual_prediction = f.score_predicted;
          pr.context.factual_share = ds.class_share(f.y_original);
          results[t] = std::move(pr);
        } catch (const std::exception& e) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          failure = "stage generate failed for dataset " + id + ", factual row " +
                    std::to_string(f.row) + ", generator " + gc.id + ": " + e.what();
          failed.store(true);
          return;
        }
      }
    };

    const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(tasks.size())));
    if (workers == 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
      for (auto& th : pool) th.join();
    }
    if (failed.load()) {
      // flush the completed prefix so partial progress survives
      for (auto& pr : results) {
        if (pr.row >= 0) record.pairs.push_back(std::move(pr));
      }
      throw std::runtime_error(failure);
    }
    for (auto& pr : results) record.pairs.push_back(std::move(pr));
  }

  record.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

namespace {

nlohmann::json vector_json(const Vector& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

Vector vector_from(const nlohmann::json& j) {
  Vector v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v(i) = j.at(i).get<double>();
  return v;
}

nlohmann::json metrics_json(const MetricVector& m) {
  nlohmann::json j;
  j["coverage"] = m.coverage;
  j["sparsity"] = m.sparsity ? nlohmann::json(*m.sparsity) : nlohmann::json();
  j["stability"] = m.stability;
  j["l2"] = m.l2 ? nlohmann::json(*m.l2) : nlohmann::json();
  j["ruc"] = m.ruc ? nlohmann::json(*m.ruc) : nlohmann::json();
  j["rmc"] = m.rmc ? nlohmann::json(*m.rmc) : nlohmann::json();
  j["mad"] = m.mad ? nlohmann::json(*m.mad) : nlohmann::json();
  j["md"] = m.md ? nlohmann::json(*m.md) : nlohmann::json();
  j["ct"] = m.ct;
  j["realistic"] = m.realistic ? nlohmann::json(*m.realistic) : nlohmann::json();
  return j;
}

MetricVector metrics_from(const nlohmann::json& j) {
  MetricVector m;
  m.coverage = j.at("coverage").get<int>();
  if (!j.at("sparsity").is_null()) m.sparsity = j.at("sparsity").get<double>();
  m.stability = j.at("stability").get<int>();
  if (!j.at("l2").is_null()) m.l2 = j.at("l2").get<double>();
  if (!j.at("ruc").is_null()) m.ruc = j.at("ruc").get<int>();
  if (!j.at("rmc").is_null()) m.rmc = j.at("rmc").get<int>();
  if (!j.at("mad").is_null()) m.mad = j.at("mad").get<double>();
  if (!j.at("md").is_null()) m.md = j.at("md").get<double>();
  m.ct = j.at("ct").get<double>();
  if (!j.at("realistic").is_null()) m.realistic = j.at("realistic").get<int>();
  return m;
}

nlohmann::json context_json(const FactualContext& c) {
  return {{"neurons", c.neurons},
          {"auc_test", c.auc_test},
          {"rows_train", c.rows_train},
          {"columns_numerical", c.columns_numerical},
          {"columns_categorical", c.columns_categorical},
          {"misclassified", c.misclassified},
          {"factual_prediction", c.factual_prediction},
          {"factual_share", c.factual_share}};
}

FactualContext context_from(const nlohmann::json& j) {
  FactualContext c;
  c.neurons = j.at("neurons").get<double>();
  c.auc_test = j.at("auc_test").get<double>();
  c.rows_train = j.at("rows_train").get<double>();
  c.columns_numerical = j.at("columns_numerical").get<double>();
  c.columns_categorical = j.at("columns_categorical").get<double>();
  c.misclassified = j.at("misclassified").get<double>();
  c.factual_prediction = j.at("factual_prediction").get<double>();
  c.factual_share = j.at("factual_share").get<double>();
  return c;
}

}  // namespace

void write_records(const RunRecord& record, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open record file for writing: " + path.string());

  nlohmann::json header;
  header["record"] = "header";
  header["format"] = kRunFormat;
  header["version"] = record.version;
  header["config_hash"] = record.config_hash;
  header["elapsed"] = record.elapsed_seconds;
  header["warnings"] = record.warnings;
  out << header.dump() << "\n";

  for (const auto& m : record.models) {
    nlohmann::json j;
    j["record"] = "model";
    j["dataset"] = m.dataset_id;
    j["dataset_type"] = m.dataset_type;
    j["selected"] = {{"n_hidden", m.selected.n_hidden},
                     {"learning_rate", m.selected.learning_rate},
                     {"epochs", m.selected.epochs}};
    j["eval"] = {{"auc_train", m.eval.auc_train}, {"auc_valid", m.eval.auc_valid},
                 {"auc_test", m.eval.auc_test},   {"acc_train", m.eval.acc_train},
                 {"acc_valid", m.eval.acc_valid}, {"acc_test", m.eval.acc_test}};
    j["model_hash"] = m.model_hash;
    j["factual_hash"] = m.factual_hash;
    j["factuals"] = m.factuals;
    j["encoded_width"] = m.encoded_width;
    j["warnings"] = m.warnings;
    out << j.dump() << "\n";
  }

  for (const auto& p : record.pairs) {
    nlohmann::json j;
    j["record"] = "cf";
    j["dataset"] = p.dataset_id;
    j["dataset_type"] = p.dataset_type;
    j["row"] = p.row;
    j["generator"] = p.generator;
    j["seed"] = p.run1.seed;
    j["seed2"] = p.run2.seed;
    j["valid"] = p.run1.valid;
    j["valid2"] = p.run2.valid;
    j["iterations"] = p.run1.iterations;
    j["iterations2"] = p.run2.iterations;
    j["ct"] = p.run1.ct_seconds;
    j["ct2"] = p.run2.ct_seconds;
    j["note"] = p.run1.note;
    j["note2"] = p.run2.note;
    j["counterfactual"] =
        p.run1.counterfactual ? vector_json(*p.run1.counterfactual) : nlohmann::json();
    j["counterfactual2"] =
        p.run2.counterfactual ? vector_json(*p.run2.counterfactual) : nlohmann::json();
    j["metrics"] = metrics_json(p.metrics);
    j["context"] = context_json(p.context);
    out << j.dump() << "\n";
  }
}

RunRecord read_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open record file: " + path.string());
  RunRecord record;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error("corrupt record line in " + path.string() + ": " + e.what());
    }
    const std::string kind = j.value("record", "");
    if (kind == "header") {
      if (j.value("format", "") != kRunFormat) {
        throw std::runtime_error("unsupported record format in " + path.string());
      }
      record.version = j.value("version", "");
      record.config_hash = j.value("config_hash", "");
      record.elapsed_seconds = j.value("elapsed", 0.0);
      record.warnings = j.value("warnings", std::vector<std::string>{});
      have_header = true;
    } else if (kind == "model") {
      ModelSummary m;
      m.dataset_id = j.at("dataset").get<std::string>();
      m.dataset_type = j.at("dataset_type").get<std::string>();
      m.selected.n_hidden = j.at("selected").at("n_hidden").get<int>();
      m.selected.learning_rate = j.at("selected").at("learning_rate").get<double>();
      m.selected.epochs = j.at("selected").at("epochs").get<int>();
      const auto& e = j.at("eval");
      m.eval = {e.at("auc_train").get<double>(), e.at("auc_valid").get<double>(),
                e.at("auc_test").get<double>(),  e.at("acc_train").get<double>(),
                e.at("acc_valid").get<double>(), e.at("acc_test").get<double>()};
      m.model_hash = j.at("model_hash").get<std::string>();
      m.factual_hash = j.at("factual_hash").get<std::string>();
      m.factuals = j.at("factuals").get<int>();
      m.encoded_width = j.at("encoded_width").get<int>();
      m.warnings = j.value("warnings", std::vector<std::string>{});
      record.models.push_back(std::move(m));
    } else if (kind == "cf") {
      PairRecord p;
      p.dataset_id = j.at("dataset").get<std::string>();
      p.dataset_type = j.at("dataset_type").get<std::string>();
      p.row = j.at("row").get<int>();
      p.generator = j.at("generator").get<std::string>();
      p.run1.generator = p.run2.generator = p.generator;
      p.run1.dataset_id = p.run2.dataset_id = p.dataset_id;
      p.run1.row = p.run2.row = p.row;
      p.run1.seed = j.at("seed").get<std::uint64_t>();
      p.run2.seed = j.at("seed2").get<std::uint64_t>();
      p.run1.valid = j.at("valid").get<bool>();
      p.run2.valid = j.at("valid2").get<bool>();
      p.run1.iterations = j.at("iterations").get<long>();
      p.run2.iterations = j.at("iterations2").get<long>();
      p.run1.ct_seconds = j.at("ct").get<double>();
      p.run2.ct_seconds = j.at("ct2").get<double>();
      p.run1.note = j.value("note", "");
      p.run2.note = j.value("note2", "");
      if (!j.at("counterfactual").is_null()) {
        p.run1.counterfactual = vector_from(j.at("counterfactual"));
      }
      if (!j.at("counterfactual2").is_null()) {
        p.run2.counterfactual = vector_from(j.at("counterfactual2"));
      }
      p.metrics = metrics_from(j.at("metrics"));
      p.context = context_from(j.at("context"));
      record.pairs.push_back(std::move(p));
    } else {
      throw std::runtime_error("unknown record kind '" + kind + "' in " + path.string());
    }
  }
  if (!have_header) throw std::runtime_error("record file lacks a header line: " + path.string());
  return record;
}

}  // namespace cfbench
