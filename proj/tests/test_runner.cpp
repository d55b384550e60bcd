#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "cfbench/fetch.hpp"
#include "cfbench/report.hpp"
#include "cfbench/runner.hpp"

// after the Eigen-including headers: the resolver macros dragged in through
// the socket headers clash with Eigen parameter names
#include <httplib.h>

using namespace cfbench;

namespace {

const std::filesystem::path kDataDir = CFBENCH_DATA_DIR;

std::filesystem::path write_config(const std::string& name, const nlohmann::json& j) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream out(path);
  out << j.dump(2);
  return path;
}

nlohmann::json base_config() {
  return {
      {"datasets",
       {{{"id", "synth_mixed"},
         {"csv", (kDataDir / "synth_mixed.csv").string()},
         {"schema", (kDataDir / "synth_mixed.schema.json").string()}}}},
      {"generators",
       {{{"name", "greedy_mean"}}, {{"name", "growing_spheres"}, {"budget", 4000}}}},
      {"seeds", {{"split", 11}, {"model", 22}, {"factuals", 33}, {"generation", 44}}},
      {"factual_count", 3},
      {"jobs", 2},
      {"normalize", "variance"},
  };
}

// one full pipeline execution shared by the record/report tests below
const RunRecord& shared_record() {
  static const RunRecord record = [] {
    const auto path = write_config("cfbench_cfg_shared.json", base_config());
    RunConfig config = load_config(path);
    std::filesystem::remove(path);
    RunRecord rec;
    run_benchmark(config, rec);
    return rec;
  }();
  return record;
}

bool same_vector(const std::optional<Vector>& a, const std::optional<Vector>& b) {
  if (a.has_value() != b.has_value()) return false;
  if (!a) return true;
  if (a->size() != b->size()) return false;
  for (Eigen::Index i = 0; i < a->size(); ++i) {
    if ((*a)(i) != (*b)(i)) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("load_config: bundled demo config parses with every knob") {
  const auto path = kDataDir.parent_path() / "configs" / "demo.json";
  RunConfig config = load_config(path);

  REQUIRE(config.datasets.size() == 1);
  CHECK(config.datasets[0].id == "synth_linear");
  // relative paths anchor at the config file's directory
  CHECK(config.datasets[0].csv.lexically_normal() == kDataDir / "synth_linear.csv");
  CHECK(config.datasets[0].schema.lexically_normal() == kDataDir / "synth_linear.schema.json");

  REQUIRE(config.generators.size() == 3);
  CHECK(config.generators[0].name == "grad_descent");
  CHECK(config.generators[1].name == "growing_spheres");
  CHECK(config.generators[2].name == "greedy_mean");
  CHECK(config.generators[0].id == "grad_descent");
  CHECK(config.generators[0].clamp_ranges);
  CHECK(config.generators[0].project_onehot);

  CHECK(config.split_seed == 101);
  CHECK(config.model_seed == 202);
  CHECK(config.factual_seed == 303);
  CHECK(config.generation_seed == 404);
  CHECK(config.factual_count == 25);
  CHECK(config.jobs == 2);
  CHECK(config.normalize == NormalizeMode::ByVariance);
  CHECK(config.metrics.mad == MadVariant::IndicatorChanged);
  CHECK(config.metrics.sparsity == SparsityVariant::Encoded);
  CHECK(config.alpha == 0.05);
  CHECK(config.config_hash.size() == 64);
  CHECK(config.base_dir == path.parent_path());

  CHECK(validate_config(path).empty());
}

TEST_CASE("load_config: missing seeds abort with a pointed message") {
  nlohmann::json j = base_config();
  j.erase("seeds");
  const auto path = write_config("cfbench_cfg_noseeds.json", j);
  CHECK_THROWS_WITH_AS(load_config(path), doctest::Contains("seeds"), std::runtime_error);
  std::filesystem::remove(path);

  nlohmann::json partial = base_config();
  partial["seeds"].erase("generation");
  const auto p2 = write_config("cfbench_cfg_partialseeds.json", partial);
  auto errors = validate_config(p2);
  REQUIRE(errors.size() == 1);
  CHECK(errors[0].find("seeds.generation") != std::string::npos);
  std::filesystem::remove(p2);
}

TEST_CASE("validate_config: each malformation is reported") {
  auto errors_for = [](const nlohmann::json& j, const std::string& name) {
    const auto path = write_config(name, j);
    auto errors = validate_config(path);
    std::filesystem::remove(path);
    return errors;
  };

  SUBCASE("valid baseline") {
    CHECK(errors_for(base_config(), "cfg_ok.json").empty());
  }
  SUBCASE("generator id defaults to the registry name") {
    const auto path = write_config("cfg_defaultid.json", base_config());
    RunConfig config = load_config(path);
    std::filesystem::remove(path);
    CHECK(config.generators[0].id == "greedy_mean");
    CHECK(config.generators[1].id == "growing_spheres");
    CHECK(config.generators[1].budget == 4000);
  }
  SUBCASE("no datasets") {
    nlohmann::json j = base_config();
    j["datasets"] = nlohmann::json::array();
    auto e = errors_for(j, "cfg_nodata.json");
    REQUIRE(e.size() == 1);
    CHECK(e[0] == "config lists no datasets");
  }
  SUBCASE("duplicate dataset ids") {
    nlohmann::json j = base_config();
    j["datasets"].push_back(j["datasets"][0]);
    auto e = errors_for(j, "cfg_dupdata.json");
    REQUIRE(e.size() == 1);
    CHECK(e[0] == "duplicate dataset id: synth_mixed");
  }
  SUBCASE("missing csv without url") {
    nlohmann::json j = base_config();
    j["datasets"][0]["csv"] = "/nonexistent/things.csv";
    auto e = errors_for(j, "cfg_nocsv.json");
    REQUIRE(e.size() == 1);
    CHECK(e[0].find("no url to fetch") != std::string::npos);
  }
  SUBCASE("missing csv with url but no digest") {
    nlohmann::json j = base_config();
    j["datasets"][0]["csv"] = "/nonexistent/things.csv";
    j["datasets"][0]["url"] = "https://example.org/things.csv";
    auto e = errors_for(j, "cfg_nodigest.json");
    REQUIRE(e.size() == 1);
    CHECK(e[0].find("no sha256 digest") != std::string::npos);
  }
  SUBCASE("missing csv with url and digest is deferred to fetch") {
    nlohmann::json j = base_config();
    j["datasets"][0]["csv"] = "/nonexistent/things.csv";
    j["datasets"][0]["url"] = "https://example.org/things.csv";
    j["datasets"][0]["sha256"] = std::string(64, 'a');
    CHECK(errors_for(j, "cfg_fetchable.json").empty());
  }
  SUBCASE("broken schema file") {
    nlohmann::json j = base_config();
    const auto bad_schema = std::filesystem::temp_directory_path() / "cfg_bad_schema.json";
    std::ofstream(bad_schema) << R"({"target": "y", "columns": []})";
    j["datasets"][0]["schema"] = bad_schema.string();
    auto e = errors_for(j, "cfg_badschema.json");
    REQUIRE(e.size() == 1);
    CHECK(e[0].find("invalid") != std::string::npos);
    std::filesystem::remove(bad_schema);
  }
  SUBCASE("unknown generator") {
    nlohmann::json j = base_config();
    j["generators"][0]["name"] = "oracle_machine";
    auto e = errors_for(j, "cfg_badgen.json");
    REQUIRE(e.size() == 1);
    CHECK(e[0] == "unknown generator: oracle_machine");
  }
  SUBCASE("duplicate generator ids") {
    nlohmann::json j = base_config();
    j["generators"][1]["id"] = "greedy_mean";
    auto e = errors_for(j, "cfg_dupgen.json");
    REQUIRE(e.size() == 1);
    CHECK(e[0] == "duplicate generator id: greedy_mean");
  }
  SUBCASE("negative budget") {
    nlohmann::json j = base_config();
    j["generators"][0]["budget"] = -5;
    auto e = errors_for(j, "cfg_negbudget.json");
    REQUIRE(e.size() == 1);
    CHECK(e[0].find("negative budget") != std::string::npos);
  }
  SUBCASE("counts and alpha") {
    nlohmann::json j = base_config();
    j["factual_count"] = 0;
    j["jobs"] = 0;
    j["alpha"] = 1.5;
    auto e = errors_for(j, "cfg_counts.json");
    CHECK(e.size() == 3);
  }
  SUBCASE("unknown normalize and metric variants") {
    nlohmann::json j = base_config();
    j["normalize"] = "minmax";
    j["metrics"] = {{"mad", "what"}, {"sparsity", "ever"}};
    auto e = errors_for(j, "cfg_variants.json");
    CHECK(e.size() == 3);
  }
  SUBCASE("no generators") {
    nlohmann::json j = base_config();
    j["generators"] = nlohmann::json::array();
    auto e = errors_for(j, "cfg_nogen.json");
    REQUIRE(e.size() == 1);
    CHECK(e[0] == "config lists no generators");
  }
}

TEST_CASE("run_benchmark: deterministic pipeline, seeded pairs, job invariance") {
  const RunRecord& rec1 = shared_record();

  REQUIRE(rec1.models.size() == 1);
  const ModelSummary& m = rec1.models[0];
  CHECK(m.dataset_id == "synth_mixed");
  CHECK(m.dataset_type == "mixed");
  CHECK(m.encoded_width == 6);
  CHECK(m.factuals == 6);  // 3 requested per class
  CHECK(m.eval.auc_valid > 0.5);
  CHECK(m.model_hash.size() == 16);
  CHECK(m.factual_hash.size() == 16);

  // 6 factuals x 2 generators, factual-major enumeration
  REQUIRE(rec1.pairs.size() == 12);
  for (std::size_t i = 0; i < rec1.pairs.size(); ++i) {
    const PairRecord& p = rec1.pairs[i];
    // the stability protocol draws its two seeds pairwise off the generation seed
    CHECK(p.run1.seed == 44 + 2 * i);
    CHECK(p.run2.seed == 44 + 2 * i + 1);
    CHECK(p.metrics.ct == p.run1.ct_seconds);
    CHECK(p.context.neurons == double(m.selected.n_hidden));
    CHECK(p.context.auc_test == m.eval.auc_test);
    CHECK(p.context.columns_numerical == 2.0);    // u1, u2
    CHECK(p.context.columns_categorical == 2.0);  // color, flag
    if (p.metrics.coverage) {
      CHECK(p.run1.valid);
      CHECK(p.metrics.l2.has_value());
      CHECK(p.metrics.sparsity.has_value());
    } else {
      CHECK_FALSE(p.metrics.l2.has_value());
    }
  }
  CHECK(rec1.pairs[0].generator != rec1.pairs[1].generator);
  CHECK(rec1.pairs[0].row == rec1.pairs[1].row);
  CHECK(rec1.pairs[0].row != rec1.pairs[2].row);

  // a rerun with a different job count reproduces everything but wall clocks
  const auto path = write_config("cfbench_cfg_rerun.json", base_config());
  RunConfig config = load_config(path);
  std::filesystem::remove(path);
  RunRecord rec2;
  run_benchmark(config, rec2, 1);

  REQUIRE(rec2.pairs.size() == rec1.pairs.size());
  CHECK(rec2.config_hash == rec1.config_hash);
  CHECK(rec2.models[0].model_hash == m.model_hash);
  CHECK(rec2.models[0].factual_hash == m.factual_hash);
  CHECK(rec2.models[0].selected.n_hidden == m.selected.n_hidden);
  CHECK(rec2.models[0].eval.auc_test == m.eval.auc_test);
  for (std::size_t i = 0; i < rec1.pairs.size(); ++i) {
    const PairRecord& a = rec1.pairs[i];
    const PairRecord& b = rec2.pairs[i];
    CHECK(a.row == b.row);
    CHECK(a.generator == b.generator);
    CHECK(a.run1.valid == b.run1.valid);
    CHECK(a.run1.iterations == b.run1.iterations);
    CHECK(same_vector(a.run1.counterfactual, b.run1.counterfactual));
    CHECK(same_vector(a.run2.counterfactual, b.run2.counterfactual));
    CHECK(a.metrics.coverage == b.metrics.coverage);
    CHECK(a.metrics.stability == b.metrics.stability);
    CHECK(a.metrics.sparsity == b.metrics.sparsity);
    CHECK(a.metrics.l2 == b.metrics.l2);
    CHECK(a.metrics.mad == b.metrics.mad);
    CHECK(a.metrics.md == b.metrics.md);
    CHECK(a.metrics.ruc == b.metrics.ruc);
    CHECK(a.metrics.rmc == b.metrics.rmc);
    CHECK(a.metrics.realistic == b.metrics.realistic);
  }
}

TEST_CASE("records: JSON-lines round-trip preserves every scored field") {
  const RunRecord& rec = shared_record();

  const auto records_path = std::filesystem::temp_directory_path() / "cfbench_records.jsonl";
  write_records(rec, records_path);
  RunRecord back = read_records(records_path);

  CHECK(back.config_hash == rec.config_hash);
  CHECK(back.version == rec.version);
  CHECK(back.elapsed_seconds == rec.elapsed_seconds);
  CHECK(back.warnings == rec.warnings);
  REQUIRE(back.models.size() == rec.models.size());
  CHECK(back.models[0].dataset_id == rec.models[0].dataset_id);
  CHECK(back.models[0].dataset_type == rec.models[0].dataset_type);
  CHECK(back.models[0].selected.n_hidden == rec.models[0].selected.n_hidden);
  CHECK(back.models[0].selected.learning_rate == rec.models[0].selected.learning_rate);
  CHECK(back.models[0].selected.epochs == rec.models[0].selected.epochs);
  CHECK(back.models[0].eval.auc_test == rec.models[0].eval.auc_test);
  CHECK(back.models[0].eval.acc_valid == rec.models[0].eval.acc_valid);
  CHECK(back.models[0].model_hash == rec.models[0].model_hash);
  CHECK(back.models[0].factual_hash == rec.models[0].factual_hash);
  CHECK(back.models[0].factuals == rec.models[0].factuals);
  CHECK(back.models[0].encoded_width == rec.models[0].encoded_width);

  REQUIRE(back.pairs.size() == rec.pairs.size());
  for (std::size_t i = 0; i < rec.pairs.size(); ++i) {
    const PairRecord& a = rec.pairs[i];
    const PairRecord& b = back.pairs[i];
    CHECK(b.dataset_id == a.dataset_id);
    CHECK(b.dataset_type == a.dataset_type);
    CHECK(b.row == a.row);
    CHECK(b.generator == a.generator);
    CHECK(b.run1.seed == a.run1.seed);
    CHECK(b.run2.seed == a.run2.seed);
    CHECK(b.run1.valid == a.run1.valid);
    CHECK(b.run2.valid == a.run2.valid);
    CHECK(b.run1.iterations == a.run1.iterations);
    CHECK(b.run1.ct_seconds == a.run1.ct_seconds);
    CHECK(b.run2.ct_seconds == a.run2.ct_seconds);
    CHECK(b.run1.note == a.run1.note);
    CHECK(b.run2.note == a.run2.note);
    CHECK(same_vector(b.run1.counterfactual, a.run1.counterfactual));
    CHECK(same_vector(b.run2.counterfactual, a.run2.counterfactual));
    CHECK(b.metrics.coverage == a.metrics.coverage);
    CHECK(b.metrics.stability == a.metrics.stability);
    CHECK(b.metrics.ct == a.metrics.ct);
    CHECK(b.metrics.sparsity == a.metrics.sparsity);
    CHECK(b.metrics.l2 == a.metrics.l2);
    CHECK(b.metrics.ruc == a.metrics.ruc);
    CHECK(b.metrics.rmc == a.metrics.rmc);
    CHECK(b.metrics.mad == a.metrics.mad);
    CHECK(b.metrics.md == a.metrics.md);
    CHECK(b.metrics.realistic == a.metrics.realistic);
    CHECK(b.context.factual_share == a.context.factual_share);
    CHECK(b.context.factual_prediction == a.context.factual_prediction);
    CHECK(b.context.misclassified == a.context.misclassified);
    CHECK(b.context.rows_train == a.context.rows_train);
  }

  // derived views survive the round-trip too
  auto scored_a = rec.scored();
  auto scored_b = back.scored();
  REQUIRE(scored_a.size() == scored_b.size());
  CHECK(scored_a[0].generator == scored_b[0].generator);
  CHECK(rec.contexts().size() == back.contexts().size());

  std::filesystem::remove(records_path);
}

TEST_CASE("records: structural corruption is rejected") {
  const auto dir = std::filesystem::temp_directory_path();
  const std::string header_line =
      R"({"record":"header","format":"cfbench-run-v1","version":"0","config_hash":"","elapsed":0,"warnings":[]})";
  const std::string model_line =
      R"({"record":"model","dataset":"d","dataset_type":"numerical",)"
      R"("selected":{"n_hidden":1,"learning_rate":0.1,"epochs":5},)"
      R"("eval":{"auc_train":1,"auc_valid":1,"auc_test":1,"acc_train":1,"acc_valid":1,"acc_test":1},)"
      R"("model_hash":"x","factual_hash":"y","factuals":0,"encoded_width":2})";

  const auto headerless = dir / "cfbench_rec_headerless.jsonl";
  std::ofstream(headerless) << model_line << "\n";
  CHECK_THROWS_WITH_AS(read_records(headerless), doctest::Contains("lacks a header"),
                       std::runtime_error);

  const auto badkind = dir / "cfbench_rec_badkind.jsonl";
  std::ofstream(badkind) << header_line << "\n" << R"({"record": "mystery"})" << "\n";
  CHECK_THROWS_WITH_AS(read_records(badkind), doctest::Contains("unknown record kind"),
                       std::runtime_error);

  const auto badformat = dir / "cfbench_rec_badformat.jsonl";
  std::ofstream(badformat) << R"({"record": "header", "format": "cfbench-run-v9"})" << "\n";
  CHECK_THROWS_WITH_AS(read_records(badformat), doctest::Contains("unsupported record format"),
                       std::runtime_error);

  const auto notjson = dir / "cfbench_rec_notjson.jsonl";
  std::ofstream(notjson) << "certainly not json\n";
  CHECK_THROWS_WITH_AS(read_records(notjson), doctest::Contains("corrupt record line"),
                       std::runtime_error);

  const auto wellformed = dir / "cfbench_rec_ok.jsonl";
  std::ofstream(wellformed) << header_line << "\n" << model_line << "\n";
  RunRecord rec = read_records(wellformed);
  CHECK(rec.models.size() == 1);
  CHECK(rec.models[0].dataset_id == "d");

  CHECK_THROWS_AS(read_records(dir / "cfbench_rec_missing.jsonl"), std::runtime_error);
  for (const auto& p : {headerless, badkind, badformat, notjson, wellformed}) {
    std::filesystem::remove(p);
  }
}

TEST_CASE("report bundle: rank tables, proportions, and trees land on disk") {
  const RunRecord& rec = shared_record();

  const auto out_dir = std::filesystem::temp_directory_path() / "cfbench_report_out";
  std::filesystem::remove_all(out_dir);
  write_report(rec, out_dir);

  for (const char* name : {"rank_valid.csv", "rank_valid_realistic.csv", "validity_analysis.csv",
                           "realistic_analysis.csv", "stability_analysis.csv",
                           "time_analysis.csv", "report.md"}) {
    CAPTURE(name);
    CHECK(std::filesystem::exists(out_dir / name));
  }

  CsvTable ranks = read_csv(out_dir / "rank_valid.csv");
  CHECK(ranks.column("grouping") >= 0);
  CHECK(ranks.column("metric") >= 0);
  CHECK(ranks.column("mean_rank") >= 0);
  CHECK(ranks.column("algorithm") >= 0);
  CHECK_FALSE(ranks.rows.empty());

  CsvTable validity = read_csv(out_dir / "validity_analysis.csv");
  const int prop_col = validity.column("proportion");
  REQUIRE(prop_col >= 0);
  for (const auto& row : validity.rows) {
    const double p = std::stod(row[prop_col]);
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
  }

  std::ifstream md(out_dir / "report.md");
  std::string text((std::istreambuf_iterator<char>(md)), std::istreambuf_iterator<char>());
  CHECK(text.find("greedy_mean") != std::string::npos);
  CHECK(text.find("growing_spheres") != std::string::npos);
  CHECK(text.find("synth_mixed") != std::string::npos);

  write_trees(rec, ValidityMode::ValidOnly, out_dir);
  bool any_tree = false;
  for (const auto& metric : metric_names()) {
    const auto tree_path = out_dir / ("tree_valid_" + metric + ".txt");
    if (!std::filesystem::exists(tree_path)) continue;
    any_tree = true;
    std::ifstream in(tree_path);
    std::string tree_text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    DecisionTree tree = parse_tree(tree_text);
    CHECK(tree.depth() <= 3);
  }
  CHECK(any_tree);

  std::filesystem::remove_all(out_dir);
}

TEST_CASE("sha256: known vectors, files, and manifests") {
  CHECK(sha256_hex("abc", 3) ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex("", 0) ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");

  const auto file = std::filesystem::temp_directory_path() / "cfbench_sha_probe.txt";
  std::ofstream(file) << "abc";
  CHECK(sha256_file(file) == sha256_hex("abc", 3));
  std::filesystem::remove(file);
  CHECK_THROWS_AS(sha256_file("/nonexistent/probe"), std::runtime_error);

  const auto manifest = std::filesystem::temp_directory_path() / "cfbench_manifest.json";
  std::ofstream(manifest) << R"([{"name": "thing.csv", "url": "http://x/thing.csv",
                                  "sha256": "00"}])";
  auto entries = load_manifest(manifest);
  REQUIRE(entries.size() == 1);
  CHECK(entries[0].name == "thing.csv");
  CHECK(entries[0].url == "http://x/thing.csv");
  CHECK(entries[0].sha256 == "00");

  std::ofstream(manifest) << R"({"not": "an array"})";
  CHECK_THROWS_WITH_AS(load_manifest(manifest), doctest::Contains("array"), std::runtime_error);
  std::ofstream(manifest) << "also { not json";
  CHECK_THROWS_WITH_AS(load_manifest(manifest), doctest::Contains("malformed"),
                       std::runtime_error);
  std::filesystem::remove(manifest);
  CHECK_THROWS_AS(load_manifest(manifest), std::runtime_error);
}

TEST_CASE("fetch_dataset: local server, digest verification, cache reuse") {
  const std::string payload = "a,b\n1,2\n3,4\n";
  const std::string digest = sha256_hex(payload.data(), payload.size());

  httplib::Server server;
  server.Get("/data.csv", [&](const httplib::Request&, httplib::Response& res) {
    res.set_content(payload, "text/csv");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread serve([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  const auto cache = std::filesystem::temp_directory_path() / "cfbench_fetch_cache";
  std::filesystem::remove_all(cache);
  const std::string url = "http://127.0.0.1:" + std::to_string(port) + "/data.csv";

  SUBCASE("fresh download lands verified in the cache") {
    const auto path = fetch_dataset(url, digest, cache);
    CHECK(std::filesystem::exists(path));
    CHECK(sha256_file(path) == digest);
    CHECK(path.filename() == "data.csv");
    CHECK(path.parent_path() == cache);
  }
  SUBCASE("digest mismatch refuses the download") {
    CHECK_THROWS_WITH_AS(fetch_dataset(url, std::string(64, 'f'), cache),
                         doctest::Contains("checksum mismatch"), std::runtime_error);
    CHECK_FALSE(std::filesystem::exists(cache / "data.csv"));
  }
  SUBCASE("digest comparison is case-insensitive") {
    std::string upper = digest;
    for (char& c : upper) c = std::toupper(static_cast<unsigned char>(c));
    const auto path = fetch_dataset(url, upper, cache);
    CHECK(sha256_file(path) == digest);
  }
  SUBCASE("matching cached copy skips the network") {
    fetch_dataset(url, digest, cache);
    server.stop();
    serve.join();
    // server is gone; the cached file must satisfy the request
    const auto path = fetch_dataset(url, digest, cache);
    CHECK(sha256_file(path) == digest);
  }
  SUBCASE("named override and malformed inputs") {
    const auto path = fetch_dataset(url, digest, cache, "renamed.csv");
    CHECK(path.filename() == "renamed.csv");
    CHECK_THROWS_WITH_AS(fetch_dataset("127.0.0.1/data.csv", digest, cache),
                         doctest::Contains("scheme"), std::runtime_error);
    CHECK_THROWS_WITH_AS(fetch_dataset(url, "nothex", cache),
                         doctest::Contains("hex digest"), std::runtime_error);
  }

  if (server.is_running()) {
    server.stop();
    serve.join();
  }
  std::filesystem::remove_all(cache);
}

TEST_CASE("fetch_dataset: http error statuses surface") {
  httplib::Server server;
  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread serve([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  const auto cache = std::filesystem::temp_directory_path() / "cfbench_fetch_404";
  std::filesystem::remove_all(cache);
  const std::string url = "http://127.0.0.1:" + std::to_string(port) + "/missing.csv";
  CHECK_THROWS_WITH_AS(fetch_dataset(url, std::string(64, 'a'), cache),
                       doctest::Contains("HTTP 404"), std::runtime_error);

  server.stop();
  serve.join();
  std::filesystem::remove_all(cache);
}
