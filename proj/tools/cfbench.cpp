#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cfbench/fetch.hpp"
#include "cfbench/report.hpp"
#include "cfbench/runner.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kValidationError = 1;
constexpr int kRuntimeFailure = 2;
constexpr int kPartialCompletion = 3;

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v && *v ? v : fallback;
}

// precedence: explicit flag > environment > config value
int resolve_jobs(int flag_jobs, int config_jobs) {
  if (flag_jobs > 0) return flag_jobs;
  const std::string env = env_or("CFBENCH_JOBS", "");
  if (!env.empty()) return std::max(1, std::atoi(env.c_str()));
  return std::max(1, config_jobs);
}

std::filesystem::path resolve_data_dir(const std::string& flag_dir) {
  if (!flag_dir.empty()) return flag_dir;
  return env_or("CFBENCH_DATA_DIR", "data");
}

// point missing csv paths at the cache when a fetched copy exists there
void apply_data_dir(cfbench::RunConfig& config, const std::filesystem::path& data_dir) {
  for (auto& d : config.datasets) {
    if (!std::filesystem::exists(d.csv)) {
      const auto cached = data_dir / d.csv.filename();
      if (std::filesystem::exists(cached)) d.csv = cached;
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"benchmark harness for counterfactual-explanation generators on tabular data"};
  app.require_subcommand(1);

  std::string config_path, records_path, out_dir, data_dir, mode_name = "valid";
  int jobs = 0;
  long long seed_offset = 0;
  double alpha = 0.05;

  auto add_common = [&](CLI::App* cmd, bool needs_config) {
    if (needs_config) {
      cmd->add_option("--config", config_path, "run configuration file")->required();
    }
    cmd->add_option("--data-dir", data_dir, "dataset cache directory (env CFBENCH_DATA_DIR)");
  };

  CLI::App* fetch = app.add_subcommand("fetch", "download datasets listed in the config");
  add_common(fetch, true);

  CLI::App* validate = app.add_subcommand("validate", "check a config without running");
  add_common(validate, true);

  CLI::App* run = app.add_subcommand("run", "execute the full benchmark pipeline");
  add_common(run, true);
  run->add_option("--out", out_dir, "output directory (overrides config)");
  run->add_option("--jobs", jobs, "worker threads (env CFBENCH_JOBS)");
  run->add_option("--seed-offset", seed_offset, "offset added to every stage seed");

  CLI::App* rank = app.add_subcommand("rank", "rank tables from a record file");
  rank->add_option("--records", records_path, "records.jsonl from a run")->required();
  rank->add_option("--out", out_dir, "output directory")->required();
  rank->add_option("--alpha", alpha, "significance level for the best set");

  CLI::App* report = app.add_subcommand("report", "full report bundle from a record file");
  report->add_option("--records", records_path, "records.jsonl from a run")->required();
  report->add_option("--out", out_dir, "output directory")->required();
  report->add_option("--alpha", alpha, "significance level for the best set");

  CLI::App* recommend = app.add_subcommand("recommend", "algorithm recommendation per metric");
  recommend->add_option("--records", records_path, "records.jsonl from a run")->required();
  recommend->add_option("--mode", mode_name, "valid | realistic")
      ->check(CLI::IsMember({"valid", "realistic"}));
  recommend->add_option("--trees-out", out_dir, "persist fitted trees into this directory");
  cfbench::FactualContext query;
  recommend->add_option("--neurons", query.neurons, "hidden neurons of the model");
  recommend->add_option("--auc-test", query.auc_test, "test AUC of the model");
  recommend->add_option("--rows-train", query.rows_train, "training rows");
  recommend->add_option("--columns-numerical", query.columns_numerical, "numeric columns");
  recommend->add_option("--columns-categorical", query.columns_categorical,
                        "categorical columns");
  recommend->add_option("--misclassified", query.misclassified, "factual misclassified (0/1)");
  recommend->add_option("--factual-prediction", query.factual_prediction,
                        "model score of the factual's predicted class");
  recommend->add_option("--factual-share", query.factual_share,
                        "share of the factual's class in the data");

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate->parsed()) {
      const auto errors = cfbench::validate_config(config_path);
      if (errors.empty()) {
        std::cout << "config ok: " << config_path << "\n";
        return kOk;
      }
      for (const auto& e : errors) std::cerr << "error: " << e << "\n";
      return kValidationError;
    }

    if (fetch->parsed()) {
      const auto config = cfbench::load_config(config_path);
      const auto cache = resolve_data_dir(data_dir);
      for (const auto& d : config.datasets) {
        if (d.url.empty()) continue;
        const auto path = cfbench::fetch_dataset(d.url, d.sha256, cache,
                                                 d.csv.filename().string());
        std::cout << d.id << " -> " << path.string() << "\n";
      }
      return kOk;
    }

    if (run->parsed()) {
      const auto errors = cfbench::validate_config(config_path);
      if (!errors.empty()) {
        for (const auto& e : errors) std::cerr << "error: " << e << "\n";
        return kValidationError;
      }
      auto config = cfbench::load_config(config_path);
      apply_data_dir(config, resolve_data_dir(data_dir));
      if (seed_offset != 0) {
        config.split_seed += seed_offset;
        config.model_seed += seed_offset;
        config.factual_seed += seed_offset;
        config.generation_seed += seed_offset;
      }
      const std::filesystem::path out =
          !out_dir.empty() ? std::filesystem::path(out_dir)
                           : (config.out_dir.empty() ? std::filesystem::path("runs") / "latest"
                                                     : config.out_dir);

      cfbench::RunRecord record;
      try {
        cfbench::run_benchmark(config, record, resolve_jobs(jobs, config.jobs));
      } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        if (!record.pairs.empty() || !record.models.empty()) {
          cfbench::write_records(record, out / "records.jsonl");
          std::cerr << "partial records flushed to " << (out / "records.jsonl").string() << "\n";
          return kPartialCompletion;
        }
        return kRuntimeFailure;
      }
      cfbench::write_records(record, out / "records.jsonl");
      for (const auto& w : record.warnings) std::cerr << "warning: " << w << "\n";
      std::cout << "records: " << (out / "records.jsonl").string() << " (" << record.pairs.size()
                << " pairs)\n";
      return kOk;
    }

    if (rank->parsed() || report->parsed()) {
      const auto record = cfbench::read_records(records_path);
      const auto warnings = cfbench::write_report(record, out_dir, alpha);
      for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
      std::cout << "report written to " << out_dir << "\n";
      return kOk;
    }

    if (recommend->parsed()) {
      const auto record = cfbench::read_records(records_path);
      const auto mode = mode_name == "valid" ? cfbench::ValidityMode::ValidOnly
                                             : cfbench::ValidityMode::ValidAndRealistic;
      if (!out_dir.empty()) {
        const auto warnings = cfbench::write_trees(record, mode, out_dir);
        for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
        std::cout << "trees written to " << out_dir << "\n";
        return kOk;
      }
      const auto scored = record.scored();
      const auto contexts = record.contexts();
      for (const auto& metric : cfbench::metric_names()) {
        try {
          const auto rows = cfbench::build_rows(scored, contexts, metric, mode);
          if (rows.empty()) continue;
          const auto tree = cfbench::fit_tree(rows);
          std::cout << metric << ":";
          for (const auto& [algo, score] : cfbench::recommend(tree, query.as_features())) {
            std::cout << "  " << algo << "=" << score;
          }
          std::cout << "\n";
        } catch (const std::exception& e) {
          std::cerr << "warning: metric " << metric << " skipped: " << e.what() << "\n";
        }
      }
      return kOk;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeFailure;
  }
  return kOk;
}
