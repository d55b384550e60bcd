#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cfbench/ranking.hpp"
#include "cfbench/runner.hpp"

namespace cfbench {

// Long-format CSV: mode, grouping, metric, algorithm, mean_rank, best,
// q_rows, friedman_stat, friedman_p, nemenyi_cd.
void write_rank_csv(const std::vector<RankTable>& tables, const std::filesystem::path& path);

// Markdown rank table for one grouping: algorithms as rows, metrics as
// columns, best-set cells bolded, test stats as footnotes.
std::string render_rank_markdown(const std::vector<RankTable>& tables,
                                 const std::string& grouping);

// Writes the full report bundle into out_dir: rank tables in both validity
// modes (CSV + markdown), coverage and realistic-coverage proportions,
// stability summary, and time-vs-column data. Returns generated warnings.
std::vector<std::string> write_report(const RunRecord& record,
                                      const std::filesystem::path& out_dir, double alpha = 0.05);

// Fits one recommendation tree per metric from the run record and persists
// them as parseable text next to the records. Returns warnings for metrics
// that could not be fitted.
std::vector<std::string> write_trees(const RunRecord& record, ValidityMode mode,
                                     const std::filesystem::path& out_dir);

}  // namespace cfbench
