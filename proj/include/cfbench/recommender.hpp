#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "cfbench/ranking.hpp"

namespace cfbench {

inline constexpr int kRecommenderFeatures = 8;

inline const std::array<std::string, kRecommenderFeatures>& recommender_feature_names() {
  static const std::array<std::string, kRecommenderFeatures> names = {
      "neurons",          "auc_test",     "rows_train",          "columns_numerical",
      "columns_categorical", "misclassified", "factual_prediction", "factual_share"};
  return names;
}

// The model/dataset/factual characteristics a query is answered from.
struct FactualContext {
  double neurons = 0;
  double auc_test = 0;
  double rows_train = 0;
  double columns_numerical = 0;
  double columns_categorical = 0;
  double misclassified = 0;       // {0,1}
  double factual_prediction = 0;  // model score of its predicted class, [0.5,1]
  double factual_share = 0;       // share of the factual's class in the data, (0,1]

  std::array<double, kRecommenderFeatures> as_features() const {
    return {neurons,          auc_test,     rows_train,          columns_numerical,
            columns_categorical, misclassified, factual_prediction, factual_share};
  }
};

struct RecommenderRow {
  std::array<double, kRecommenderFeatures> features{};
  std::string target;  // winning algorithm (or family label)
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  double gini = 0.0;
  int samples = 0;
  std::vector<int> class_counts;
  int left = -1, right = -1;
};

struct DecisionTree {
  std::vector<std::string> classes;  // sorted target labels
  std::vector<TreeNode> nodes;       // nodes[0] is the root
  int max_depth = 3;

  bool empty() const { return nodes.empty(); }
  int depth() const;
};

// One training row per (factual, best algorithm): the algorithm(s) with the
// best metric value among eligible records win; ties duplicate the row once
// per winner; factuals with no eligible record are skipped. family_map, when
// given, replaces algorithm targets by family labels.
std::vector<RecommenderRow> build_rows(
    const std::vector<ScoredRecord>& records,
    const std::map<std::pair<std::string, int>, FactualContext>& contexts,
    const std::string& metric, ValidityMode mode,
    const std::map<std::string, std::string>* family_map = nullptr);

// Greedy CART on Gini impurity: thresholds are midpoints of adjacent sorted
// unique values, ties break toward the lowest feature index then lowest
// threshold, and a split must strictly decrease weighted impurity. Purely
// deterministic; single-class input yields a lone leaf.
DecisionTree fit_tree(const std::vector<RecommenderRow>& rows, int max_depth = 3);

// Leaf class proportions for the query, sorted by descending score then
// label. "value <= threshold" goes left, so out-of-range values still route.
std::vector<std::pair<std::string, double>> recommend(
    const DecisionTree& tree, const std::array<double, kRecommenderFeatures>& query);

// Text rendering with split condition, Gini, samples, class counts, and
// majority label per node; thresholds print round-trip exact so parse_tree
// reconstructs the tree bit-for-bit.
std::string export_tree(const DecisionTree& tree);
DecisionTree parse_tree(const std::string& text);

}  // namespace cfbench
