#include "cfbench/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

namespace cfbench {

namespace {

const char* mode_label(ValidityMode mode) {
  return mode == ValidityMode::ValidOnly ? "valid" : "valid-and-realistic";
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write report file: " + path.string());
  return out;
}

std::string fixed2(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(2) << v;
  return s.str();
}

std::string sci(double v) {
  if (std::isnan(v)) return "n/a";
  std::ostringstream s;
  s << std::setprecision(4) << v;
  return s.str();
}

}  // namespace

void write_rank_csv(const std::vector<RankTable>& tables, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "mode,grouping,metric,algorithm,mean_rank,best,q_rows,friedman_stat,friedman_p,"
         "nemenyi_cd\n";
  for (const auto& t : tables) {
    for (std::size_t j = 0; j < t.algorithms.size(); ++j) {
      out << mode_label(t.mode) << ',' << t.grouping << ',' << t.metric << ','
          << t.algorithms[j] << ',' << t.mean_ranks(j) << ',' << int(t.best[j]) << ','
          << t.q_rows << ',' << (std::isnan(t.friedman_stat) ? "" : std::to_string(t.friedman_stat))
          << ',' << (std::isnan(t.friedman_p) ? "" : std::to_string(t.friedman_p)) << ','
          << t.nemenyi_cd << "\n";
    }
  }
}

std::string render_rank_markdown(const std::vector<RankTable>& tables,
                                 const std::string& grouping) {
  std::vector<const RankTable*> selected;
  for (const auto& t : tables) {
    if (t.grouping == grouping) selected.push_back(&t);
  }
  if (selected.empty()) return "";

  // union of algorithms, kept sorted for a stable layout
  std::set<std::string> algos;
  for (const auto* t : selected) algos.insert(t->algorithms.begin(), t->algorithms.end());

  std::ostringstream out;
  out << "### Grouping: " << grouping << " (" << mode_label(selected.front()->mode)
      << ", Q=" << selected.front()->q_rows << ")\n\n";
  out << "| algorithm |";
  for (const auto* t : selected) out << " " << t->metric << " |";
  out << "\n|---|";
  for (std::size_t i = 0; i < selected.size(); ++i) out << "---|";
  out << "\n";
  for (const auto& algo : algos) {
    out << "| " << algo << " |";
    for (const auto* t : selected) {
      const auto it = std::find(t->algorithms.begin(), t->algorithms.end(), algo);
      if (it == t->algorithms.end()) {
        out << " - |";
        continue;
      }
      const auto j = static_cast<std::size_t>(it - t->algorithms.begin());
      const std::string cell = fixed2(t->mean_ranks(j));
      out << (t->best[j] ? " **" + cell + "** |" : " " + cell + " |");
    }
    out << "\n";
  }
  out << "\n";
  for (const auto* t : selected) {
    out << "- " << t->metric << ": Friedman stat " << sci(t->friedman_stat) << ", p "
        << sci(t->friedman_p) << ", CD " << sci(t->nemenyi_cd) << "\n";
  }
  out << "\n";
  return out.str();
}

namespace {

struct Proportions {
  long total = 0;
  long valid = 0;
  long realistic = 0;
  double stability_sum = 0.0;
};

}  // namespace

std::vector<std::string> write_report(const RunRecord& record,
                                      const std::filesystem::path& out_dir, double alpha) {
  std::filesystem::create_directories(out_dir);
  std::vector<std::string> warnings;
  const auto scored = record.scored();

  GroupingResult valid_tables = grouping_tables(scored, ValidityMode::ValidOnly, alpha);
  GroupingResult realistic_tables =
      grouping_tables(scored, ValidityMode::ValidAndRealistic, alpha);
  warnings.insert(warnings.end(), valid_tables.warnings.begin(), valid_tables.warnings.end());
  warnings.insert(warnings.end(), realistic_tables.warnings.begin(),
                  realistic_tables.warnings.end());

  write_rank_csv(valid_tables.tables, out_dir / "rank_valid.csv");
  write_rank_csv(realistic_tables.tables, out_dir / "rank_valid_realistic.csv");

  // coverage / realistic-coverage / stability aggregation
  std::map<std::pair<std::string, std::string>, Proportions> by_group;  // (grouping, generator)
  std::set<std::string> generators;
  for (const auto& p : record.pairs) {
    generators.insert(p.generator);
    for (const std::string& g : {std::string("all"), p.dataset_type, p.dataset_id}) {
      auto& acc = by_group[{g, p.generator}];
      acc.total += 1;
      acc.valid += p.metrics.coverage;
      acc.realistic +=
          p.metrics.coverage == 1 && p.metrics.realistic && *p.metrics.realistic == 1;
      acc.stability_sum += p.metrics.stability;
    }
  }

  {
    auto out = open_out(out_dir / "validity_analysis.csv");
    out << "grouping,generator,factuals,valid,proportion\n";
    for (const auto& [key, acc] : by_group) {
      out << key.first << ',' << key.second << ',' << acc.total << ',' << acc.valid << ','
          << (acc.total ? double(acc.valid) / acc.total : 0.0) << "\n";
    }
  }
  {
    auto out = open_out(out_dir / "realistic_analysis.csv");
    out << "grouping,generator,factuals,realistic,proportion\n";
    for (const auto& [key, acc] : by_group) {
      out << key.first << ',' << key.second << ',' << acc.total << ',' << acc.realistic << ','
          << (acc.total ? double(acc.realistic) / acc.total : 0.0) << "\n";
    }
  }
  {
    // per-generator mean stability plus the min/max across dataset types
    auto out = open_out(out_dir / "stability_analysis.csv");
    out << "generator,mean_stability,min_type,min_type_mean,max_type,max_type_mean\n";
    std::set<std::string> types;
    for (const auto& p : record.pairs) types.insert(p.dataset_type);
    for (const auto& gen : generators) {
      const auto& overall = by_group[{"all", gen}];
      const double mean =
          overall.total ? overall.stability_sum / overall.total : 0.0;
      std::string min_type = "-", max_type = "-";
      double min_mean = 0.0, max_mean = 0.0;
      bool first = true;
      for (const auto& type : types) {
        const auto it = by_group.find({type, gen});
        if (it == by_group.end() || it->second.total == 0) continue;
        const double m = it->second.stability_sum / it->second.total;
        if (first || m < min_mean) {
          min_mean = m;
          min_type = type;
        }
        if (first || m > max_mean) {
          max_mean = m;
          max_type = type;
        }
        first = false;
      }
      out << gen << ',' << mean << ',' << min_type << ',' << min_mean << ',' << max_type << ','
          << max_mean << "\n";
    }
  }
  {
    auto out = open_out(out_dir / "time_analysis.csv");
    out << "dataset,encoded_width,generator,mean_ct\n";
    std::map<std::string, int> widths;
    for (const auto& m : record.models) widths[m.dataset_id] = m.encoded_width;
    std::map<std::pair<std::string, std::string>, std::pair<double, long>> ct;
    for (const auto& p : record.pairs) {
      auto& acc = ct[{p.dataset_id, p.generator}];
      acc.first += p.metrics.ct;
      acc.second += 1;
    }
    for (const auto& [key, acc] : ct) {
      out << key.first << ',' << widths[key.first] << ',' << key.second << ','
          << acc.first / acc.second << "\n";
    }
  }

  {
    auto out = open_out(out_dir / "report.md");
    out << "# Benchmark report\n\n";
    out << "Config hash: `" << record.config_hash << "`; version " << record.version << ".\n\n";
    out << "## Models\n\n";
    out << "| dataset | type | neurons | lr | epochs | AUC valid | AUC test |\n";
    out << "|---|---|---|---|---|---|---|\n";
    for (const auto& m : record.models) {
      out << "| " << m.dataset_id << " | " << m.dataset_type << " | " << m.selected.n_hidden
          << " | " << m.selected.learning_rate << " | " << m.selected.epochs << " | "
          << fixed2(m.eval.auc_valid) << " | " << fixed2(m.eval.auc_test) << " |\n";
    }
    out << "\n## Mean ranks (valid counterfactuals)\n\n";
    std::vector<std::string> groupings;
    for (const auto& t : valid_tables.tables) {
      if (std::find(groupings.begin(), groupings.end(), t.grouping) == groupings.end()) {
        groupings.push_back(t.grouping);
      }
    }
    for (const auto& g : groupings) out << render_rank_markdown(valid_tables.tables, g);
    out << "## Mean ranks (valid and realistic counterfactuals)\n\n";
    groupings.clear();
    for (const auto& t : realistic_tables.tables) {
      if (std::find(groupings.begin(), groupings.end(), t.grouping) == groupings.end()) {
        groupings.push_back(t.grouping);
      }
    }
    for (const auto& g : groupings) out << render_rank_markdown(realistic_tables.tables, g);
    out << "---\n\nWall-clock (ct) values are hardware-dependent; only ordinal comparisons "
           "between algorithms run on the same machine are meaningful.\n";
  }
  return warnings;
}

std::vector<std::string> write_trees(const RunRecord& record, ValidityMode mode,
                                     const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::vector<std::string> warnings;
  const auto scored = record.scored();
  const auto contexts = record.contexts();
  const std::string suffix = mode == ValidityMode::ValidOnly ? "valid" : "realistic";
  for (const auto& metric : metric_names()) {
    try {
      const auto rows = build_rows(scored, contexts, metric, mode);
      if (rows.empty()) {
        warnings.push_back("no eligible rows for metric " + metric + " (" + suffix + ")");
        continue;
      }
      const DecisionTree tree = fit_tree(rows);
      auto out = open_out(out_dir / ("tree_" + suffix + "_" + metric + ".txt"));
      out << export_tree(tree);
    } catch (const std::exception& e) {
      warnings.push_back("tree for metric " + metric + " (" + suffix + ") skipped: " + e.what());
    }
  }
  return warnings;
}

}  // namespace cfbench
