#include "cfbench/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

#include <unsupported/Eigen/SpecialFunctions>

namespace cfbench {

Direction metric_direction(const std::string& metric) {
  if (metric == "l2" || metric == "mad" || metric == "md" || metric == "ct") {
    return Direction::LowerBetter;
  }
  if (metric == "coverage" || metric == "sparsity" || metric == "stability" || metric == "ruc" ||
      metric == "rmc") {
    return Direction::HigherBetter;
  }
  throw std::invalid_argument("unknown metric: " + metric);
}

std::vector<double> rank_row(const std::vector<double>& values, Direction direction,
                             const std::vector<std::uint8_t>& eligible) {
  const std::size_t k = values.size();
  if (k < 2) throw std::invalid_argument("rank_row needs at least two algorithms");
  if (eligible.size() != k) throw std::invalid_argument("eligibility flag count mismatch");

  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < k; ++i) {
    if (eligible[i]) idx.push_back(i);
  }
  const double sign = direction == Direction::LowerBetter ? 1.0 : -1.0;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return sign * values[a] < sign * values[b];
  });

  std::vector<double> ranks(k, 0.0);
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j + 1 < idx.size() && values[idx[j + 1]] == values[idx[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[idx[t]] = mid;
    i = j + 1;
  }
  // ineligible entries share the tie-averaged worst ranks e+1 .. k
  const double worst = 0.5 * static_cast<double>(idx.size() + 1 + k);
  for (std::size_t t = 0; t < k; ++t) {
    if (!eligible[t]) ranks[t] = worst;
  }
  return ranks;
}

Vector mean_ranks(const RankMatrix& matrix) {
  if (matrix.rows.rows() == 0) throw std::invalid_argument("empty rank matrix");
  return matrix.rows.colwise().mean();
}

std::pair<double, double> friedman_test(const RankMatrix& matrix) {
  const long q = matrix.rows.rows();
  const long k = matrix.rows.cols();
  if (k < 3) throw std::runtime_error("Friedman chi-square approximation needs k >= 3 algorithms");
  if (q < 2) throw std::runtime_error("Friedman test needs Q >= 2 rows");

  const Vector rbar = matrix.rows.colwise().mean();
  const double kk = static_cast<double>(k);
  const double qq = static_cast<double>(q);
  const double stat = 12.0 * qq / (kk * (kk + 1.0)) * rbar.squaredNorm() - 3.0 * qq * (kk + 1.0);

  Eigen::ArrayXd a(1), x(1);
  a(0) = (kk - 1.0) / 2.0;
  x(0) = std::max(stat, 0.0) / 2.0;
  const double p = Eigen::igammac(a, x)(0);
  return {stat, p};
}

double nemenyi_cd(int k, long q_rows, double alpha) {
  if (alpha != 0.05) {
    throw std::invalid_argument("only the alpha = 0.05 critical-value table is embedded");
  }
  // studentized range quantiles divided by sqrt(2), k = 2..20
  static const double q_table[] = {
      1.9599639845, 2.3437005864, 2.5690317725, 2.7277743709, 2.8497054196, 2.9483200175,
      3.0308784496, 3.1017303413, 3.1636835771, 3.2186536073, 3.2680039245, 3.3127385934,
      3.3536177519, 3.3912302838, 3.4260413794, 3.4584247073, 3.4886847994, 3.5170730087,
      3.5437991315};
  if (k < 2 || k > 20) throw std::invalid_argument("Nemenyi table covers k = 2..20");
  if (q_rows < 1) throw std::invalid_argument("Nemenyi needs Q >= 1");
  const double kk = static_cast<double>(k);
  return q_table[k - 2] * std::sqrt(kk * (kk + 1.0) / (6.0 * static_cast<double>(q_rows)));
}

std::vector<std::uint8_t> best_set(const Vector& mean_ranks, double cd, double friedman_p,
                                   double alpha) {
  std::vector<std::uint8_t> flags(mean_ranks.size(), 0);
  if (!(friedman_p < alpha)) {  // includes NaN p: test undecided, flag all
    std::fill(flags.begin(), flags.end(), 1);
    return flags;
  }
  const double best = mean_ranks.minCoeff();
  for (Eigen::Index j = 0; j < mean_ranks.size(); ++j) {
    flags[j] = mean_ranks(j) - best <= cd ? 1 : 0;
  }
  return flags;
}

namespace {

bool in_grouping(const ScoredRecord& r, const std::string& grouping) {
  return grouping == "all" || r.dataset_type == grouping || r.dataset_id == grouping;
}

bool eligible_record(const MetricVector& m, ValidityMode mode) {
  if (m.coverage != 1) return false;
  if (mode == ValidityMode::ValidAndRealistic) {
    return m.realistic.has_value() && *m.realistic == 1;
  }
  return true;
}

double metric_value(const MetricVector& m, const std::string& metric) {
  if (metric == "coverage") return m.coverage;
  if (metric == "sparsity") return m.sparsity.value();
  if (metric == "stability") return m.stability;
  if (metric == "l2") return m.l2.value();
  if (metric == "ruc") return m.ruc.value();
  if (metric == "rmc") return m.rmc.value();
  if (metric == "mad") return m.mad.value();
  if (metric == "md") return m.md.value();
  if (metric == "ct") return m.ct;
  throw std::invalid_argument("unknown metric: " + metric);
}

}  // namespace

RankMatrix build_rank_matrix(const std::vector<ScoredRecord>& records, const std::string& grouping,
                             const std::string& metric, ValidityMode mode) {
  RankMatrix matrix;
  matrix.grouping = grouping;
  matrix.metric = metric;
  matrix.mode = mode;

  std::set<std::string> algorithms;
  std::set<std::pair<std::string, int>> factuals;
  for (const auto& r : records) {
    if (!in_grouping(r, grouping)) continue;
    algorithms.insert(r.generator);
    factuals.insert({r.dataset_id, r.row});
  }
  matrix.algorithms.assign(algorithms.begin(), algorithms.end());
  const std::size_t k = matrix.algorithms.size();
  if (k < 2) {
    throw std::runtime_error("grouping " + grouping + " covers fewer than two algorithms");
  }

  std::map<std::string, std::size_t> column;
  for (std::size_t j = 0; j < k; ++j) column[matrix.algorithms[j]] = j;
  std::map<std::pair<std::string, int>, std::size_t> row_of;
  std::size_t q = 0;
  for (const auto& f : factuals) row_of[f] = q++;

  std::vector<std::vector<double>> values(q, std::vector<double>(k, 0.0));
  std::vector<std::vector<std::uint8_t>> eligible(q, std::vector<std::uint8_t>(k, 0));
  for (const auto& r : records) {
    if (!in_grouping(r, grouping)) continue;
    const std::size_t i = row_of[{r.dataset_id, r.row}];
    const std::size_t j = column[r.generator];
    if (eligible_record(r.metrics, mode)) {
      eligible[i][j] = 1;
      values[i][j] = metric_value(r.metrics, metric);
    }
  }

  const Direction dir = metric_direction(metric);
  matrix.rows = Matrix(q, k);
  for (std::size_t i = 0; i < q; ++i) {
    const auto ranks = rank_row(values[i], dir, eligible[i]);
    for (std::size_t j = 0; j < k; ++j) matrix.rows(i, j) = ranks[j];
  }
  return matrix;
}

RankTable summarize(const RankMatrix& matrix, double alpha) {
  RankTable table;
  table.grouping = matrix.grouping;
  table.metric = matrix.metric;
  table.mode = matrix.mode;
  table.algorithms = matrix.algorithms;
  table.q_rows = matrix.rows.rows();
  table.mean_ranks = mean_ranks(matrix);
  try {
    std::tie(table.friedman_stat, table.friedman_p) = friedman_test(matrix);
  } catch (const std::exception&) {
    table.friedman_stat = std::nan("");
    table.friedman_p = std::nan("");
  }
  table.nemenyi_cd = nemenyi_cd(static_cast<int>(matrix.algorithms.size()), table.q_rows, alpha);
  table.best = best_set(table.mean_ranks, table.nemenyi_cd, table.friedman_p, alpha);
  return table;
}

GroupingResult grouping_tables(const std::vector<ScoredRecord>& records, ValidityMode mode,
                               double alpha) {
  GroupingResult result;
  std::vector<std::string> groupings = {"all"};
  std::set<std::string> types, datasets;
  for (const auto& r : records) {
    types.insert(r.dataset_type);
    datasets.insert(r.dataset_id);
  }
  for (const std::string& t : {"numerical", "categorical", "mixed"}) {
    if (types.count(t)) groupings.push_back(t);
  }
  groupings.insert(groupings.end(), datasets.begin(), datasets.end());

  for (const auto& g : groupings) {
    for (const auto& metric : metric_names()) {
      try {
        result.tables.push_back(summarize(build_rank_matrix(records, g, metric, mode), alpha));
      } catch (const std::exception& e) {
        result.warnings.push_back("grouping " + g + ", metric " + metric + " skipped: " +
                                  e.what());
      }
    }
  }
  return result;
}

}  // namespace cfbench
