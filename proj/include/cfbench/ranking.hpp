#pragma once

#include <string>
#include <vector>

#include "cfbench/metrics.hpp"
#include "cfbench/types.hpp"

namespace cfbench {

enum class Direction { LowerBetter, HigherBetter };
enum class ValidityMode { ValidOnly, ValidAndRealistic };

inline const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names = {"coverage", "sparsity", "stability",
                                                 "l2",       "ruc",      "rmc",
                                                 "mad",      "md",       "ct"};
  return names;
}

Direction metric_direction(const std::string& metric);

// One scored generator run joined with enough dataset context to group by.
struct ScoredRecord {
  std::string dataset_id;
  std::string dataset_type;  // numerical | categorical | mixed
  int row = -1;              // factual id within the dataset
  std::string generator;
  MetricVector metrics;
};

// Q x k tie-averaged rank rows for one grouping and metric.
struct RankMatrix {
  std::string grouping;
  std::string metric;
  ValidityMode mode = ValidityMode::ValidOnly;
  std::vector<std::string> algorithms;
  Matrix rows;  // Q x k
};

struct RankTable {
  std::string grouping;
  std::string metric;
  ValidityMode mode = ValidityMode::ValidOnly;
  std::vector<std::string> algorithms;
  Vector mean_ranks;
  long q_rows = 0;
  double friedman_stat = 0.0;
  double friedman_p = 1.0;  // NaN when k < 3 (test undefined)
  double nemenyi_cd = 0.0;
  std::vector<std::uint8_t> best;
};

struct GroupingResult {
  std::vector<RankTable> tables;
  std::vector<std::string> warnings;
};

// Ranks one factual's values across k algorithms: eligible entries get
// tie-averaged ranks by value in the given direction; ineligible ones share
// the tie-averaged worst ranks. values[i] is ignored when !eligible[i].
std::vector<double> rank_row(const std::vector<double>& values, Direction direction,
                             const std::vector<std::uint8_t>& eligible);

Vector mean_ranks(const RankMatrix& matrix);

// Classic Friedman chi-square on tie-averaged ranks with k - 1 degrees of
// freedom; p-value through the regularized incomplete gamma. Requires k >= 3
// and Q >= 2.
std::pair<double, double> friedman_test(const RankMatrix& matrix);

// CD = q_{alpha,k} * sqrt(k (k+1) / (6 Q)); the embedded q table covers
// alpha = 0.05, k = 2..20.
double nemenyi_cd(int k, long q_rows, double alpha = 0.05);

// All algorithms when the Friedman test does not reject; otherwise those
// within CD of the best (smallest) mean rank.
std::vector<std::uint8_t> best_set(const Vector& mean_ranks, double cd, double friedman_p,
                                   double alpha);

// Rank matrix for one grouping ("all", a dataset type, or a dataset id) and
// metric. Eligibility: the record exists and covers (valid mode), plus is
// realistic in valid-and-realistic mode. Q spans every factual any record
// mentions in the grouping.
RankMatrix build_rank_matrix(const std::vector<ScoredRecord>& records, const std::string& grouping,
                             const std::string& metric, ValidityMode mode);

RankTable summarize(const RankMatrix& matrix, double alpha = 0.05);

// Tables for "all", each dataset type present, and each dataset, crossed
// with all nine metrics. Empty groupings are skipped with a warning.
GroupingResult grouping_tables(const std::vector<ScoredRecord>& records, ValidityMode mode,
                               double alpha = 0.05);

}  // namespace cfbench
