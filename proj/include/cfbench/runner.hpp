#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cfbench/dataset.hpp"
#include "cfbench/generators.hpp"
#include "cfbench/metrics.hpp"
#include "cfbench/ranking.hpp"
#include "cfbench/recommender.hpp"

namespace cfbench {

struct DatasetConfig {
  std::string id;
  std::filesystem::path csv;
  std::filesystem::path schema;
  std::string url;     // optional; enables the fetch subcommand
  std::string sha256;  // required when url is set
};

struct GeneratorConfig {
  std::string id;    // unique instance label used in records/tables
  std::string name;  // registry name
  nlohmann::json params;
  bool clamp_ranges = true;
  bool project_onehot = true;
  int budget = 0;  // 0 = generator default
};

struct RunConfig {
  std::vector<DatasetConfig> datasets;
  std::vector<GeneratorConfig> generators;
  // all four stage seeds are mandatory in the file: reproducibility over
  // convenience, no entropy defaults
  std::uint64_t split_seed = 0;
  std::uint64_t model_seed = 0;
  std::uint64_t factual_seed = 0;
  std::uint64_t generation_seed = 0;
  int factual_count = 100;
  NormalizeMode normalize = NormalizeMode::ByVariance;
  MetricOptions metrics;
  std::filesystem::path out_dir;
  int jobs = 1;
  double alpha = 0.05;

  std::string config_hash;  // SHA-256 of the config file bytes
  std::filesystem::path base_dir;  // config file directory, anchors relative paths
};

RunConfig load_config(const std::filesystem::path& path);

// Full validation without running: file existence, known generator names,
// unique ids, mandatory seeds, sane counts. Empty result = valid.
std::vector<std::string> validate_config(const std::filesystem::path& path);

struct ModelSummary {
  std::string dataset_id;
  std::string dataset_type;
  TrainConfig selected;
  EvalScores eval;
  std::string model_hash;    // over the trained weights
  std::string factual_hash;  // over the selected factual rows
  int factuals = 0;
  int encoded_width = 0;
  std::vector<std::string> warnings;
};

// One benchmarked (generator, factual) pair: the stability protocol's two
// runs plus the scored metrics.
struct PairRecord {
  std::string dataset_id;
  std::string dataset_type;
  int row = -1;
  std::string generator;
  CFRecord run1, run2;  // seeds s and s+1
  MetricVector metrics;
  FactualContext context;
};

struct RunRecord {
  std::string config_hash;
  std::string version = kVersion;
  std::vector<ModelSummary> models;
  std::vector<PairRecord> pairs;
  std::vector<std::string> warnings;
  double elapsed_seconds = 0.0;

  std::vector<ScoredRecord> scored() const;
  std::map<std::pair<std::string, int>, FactualContext> contexts() const;
};

// Executes the whole pipeline: encode, binarize, split, normalize, grid
// search, factual selection, paired generation, scoring. Every generator
// sees the identical model, splits, and factual set; enumeration order and
// all seeds are deterministic, so reruns agree except for wall clocks.
// Fills `record` incrementally — on failure the caller still holds the
// completed part. jobs_override > 0 replaces config.jobs.
void run_benchmark(const RunConfig& config, RunRecord& record, int jobs_override = 0);

// JSON-lines persistence: a header line, one model line per dataset, one
// line per PairRecord. Reruns differ only in ct/ct2/elapsed fields.
void write_records(const RunRecord& record, const std::filesystem::path& path);
RunRecord read_records(const std::filesystem::path& path);

}  // namespace cfbench
