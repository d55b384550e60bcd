#include "cfbench/recommender.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <stdexcept>

namespace cfbench {

int DecisionTree::depth() const {
  std::function<int(int)> walk = [&](int node) -> int {
    if (node < 0 || nodes[node].feature < 0) return 0;
    return 1 + std::max(walk(nodes[node].left), walk(nodes[node].right));
  };
  return empty() ? 0 : walk(0);
}

namespace {

bool record_eligible(const MetricVector& m, ValidityMode mode) {
  if (m.coverage != 1) return false;
  if (mode == ValidityMode::ValidAndRealistic) {
    return m.realistic.has_value() && *m.realistic == 1;
  }
  return true;
}

double record_value(const MetricVector& m, const std::string& metric) {
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

std::vector<RecommenderRow> build_rows(
    const std::vector<ScoredRecord>& records,
    const std::map<std::pair<std::string, int>, FactualContext>& contexts,
    const std::string& metric, ValidityMode mode,
    const std::map<std::string, std::string>* family_map) {
  const Direction dir = metric_direction(metric);

  // factual -> (generator, value) among eligible records, in input order
  std::map<std::pair<std::string, int>, std::vector<std::pair<std::string, double>>> by_factual;
  for (const auto& r : records) {
    if (!record_eligible(r.metrics, mode)) continue;
    by_factual[{r.dataset_id, r.row}].push_back(
        {r.generator, record_value(r.metrics, metric)});
  }

  std::vector<RecommenderRow> rows;
  for (const auto& [factual, entries] : by_factual) {
    const auto ctx = contexts.find(factual);
    if (ctx == contexts.end()) {
      throw std::runtime_error("missing factual context for dataset " + factual.first + ", row " +
                               std::to_string(factual.second));
    }
    const double sign = dir == Direction::LowerBetter ? 1.0 : -1.0;
    double best = sign * entries.front().second;
    for (const auto& [_, value] : entries) best = std::min(best, sign * value);

    std::set<std::string> winners;  // dedup + stable label order
    for (const auto& [generator, value] : entries) {
      if (sign * value == best) {
        winners.insert(family_map ? family_map->at(generator) : generator);
      }
    }
    for (const auto& label : winners) {
      RecommenderRow row;
      row.features = ctx->second.as_features();
      row.target = label;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

namespace {

double gini_impurity(const std::vector<int>& counts, int total) {
  if (total == 0) return 0.0;
  double sum_sq = 0.0;
  for (int c : counts) {
    const double p = static_cast<double>(c) / total;
    sum_sq += p * p;
  }
  return 1.0 - sum_sq;
}

struct SplitChoice {
  bool found = false;
  int feature = -1;
  double threshold = 0.0;
  double weighted_gini = 0.0;
};

}  // namespace

DecisionTree fit_tree(const std::vector<RecommenderRow>& rows, int max_depth) {
  if (rows.empty()) throw std::invalid_argument("cannot fit a tree on zero rows");
  DecisionTree tree;
  tree.max_depth = max_depth;

  std::set<std::string> labels;
  for (const auto& r : rows) labels.insert(r.target);
  tree.classes.assign(labels.begin(), labels.end());
  std::map<std::string, int> class_id;
  for (std::size_t i = 0; i < tree.classes.size(); ++i) class_id[tree.classes[i]] = i;

  const int n_classes = static_cast<int>(tree.classes.size());
  std::function<int(std::vector<int>, int)> grow = [&](std::vector<int> members,
                                                       int depth) -> int {
    TreeNode node;
    node.samples = static_cast<int>(members.size());
    node.class_counts.assign(n_classes, 0);
    for (int r : members) node.class_counts[class_id[rows[r].target]]++;
    node.gini = gini_impurity(node.class_counts, node.samples);

    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back(node);
    if (depth >= max_depth || node.gini == 0.0) return id;

    SplitChoice best;
    for (int f = 0; f < kRecommenderFeatures; ++f) {
      std::vector<double> vals;
      vals.reserve(members.size());
      for (int r : members) vals.push_back(rows[r].features[f]);
      std::sort(vals.begin(), vals.end());
      vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
      for (std::size_t t = 0; t + 1 < vals.size(); ++t) {
        const double threshold = vals[t] + (vals[t + 1] - vals[t]) / 2.0;
        std::vector<int> left_counts(n_classes, 0), right_counts(n_classes, 0);
        int n_left = 0;
        for (int r : members) {
          if (rows[r].features[f] <= threshold) {
            left_counts[class_id[rows[r].target]]++;
            ++n_left;
          } else {
            right_counts[class_id[rows[r].target]]++;
          }
        }
        const int n_right = node.samples - n_left;
        if (n_left == 0 || n_right == 0) continue;
        const double weighted = (n_left * gini_impurity(left_counts, n_left) +
                                 n_right * gini_impurity(right_counts, n_right)) /
                                node.samples;
        // strict improvement; ties keep the earlier (lower feature, lower
        // threshold) candidate because the scan is ordered
        if (!best.found || weighted < best.weighted_gini) {
          best = {true, f, threshold, weighted};
        }
      }
    }
    if (!best.found || best.weighted_gini >= node.gini) return id;

    std::vector<int> left, right;
    for (int r : members) {
      (rows[r].features[best.feature] <= best.threshold ? left : right).push_back(r);
    }
    tree.nodes[id].feature = best.feature;
    tree.nodes[id].threshold = best.threshold;
    tree.nodes[id].left = grow(std::move(left), depth + 1);
    tree.nodes[id].right = grow(std::move(right), depth + 1);
    return id;
  };

  std::vector<int> all(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) all[i] = static_cast<int>(i);
  grow(std::move(all), 0);
  return tree;
}

std::vector<std::pair<std::string, double>> recommend(
    const DecisionTree& tree, const std::array<double, kRecommenderFeatures>& query) {
  if (tree.empty()) throw std::runtime_error("empty decision tree");
  int node = 0;
  while (tree.nodes[node].feature >= 0) {
    node = query[tree.nodes[node].feature] <= tree.nodes[node].threshold ? tree.nodes[node].left
                                                                         : tree.nodes[node].right;
  }
  const TreeNode& leaf = tree.nodes[node];
  std::vector<std::pair<std::string, double>> scores;
  for (std::size_t c = 0; c < tree.classes.size(); ++c) {
    scores.push_back({tree.classes[c], static_cast<double>(leaf.class_counts[c]) / leaf.samples});
  }
  std::sort(scores.begin(), scores.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  return scores;
}

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string join_counts(const std::vector<int>& counts) {
  std::string out = "[";
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(counts[i]);
  }
  return out + "]";
}

int majority_class(const TreeNode& node) {
  int best = 0;
  for (std::size_t c = 1; c < node.class_counts.size(); ++c) {
    if (node.class_counts[c] > node.class_counts[best]) best = static_cast<int>(c);
  }
  return best;
}

}  // namespace

std::string export_tree(const DecisionTree& tree) {
  std::ostringstream out;
  out << "classes";
  for (const auto& c : tree.classes) out << " " << c;
  out << "\nmax_depth " << tree.max_depth << "\n";
  for (std::size_t id = 0; id < tree.nodes.size(); ++id) {
    const TreeNode& n = tree.nodes[id];
    out << "node " << id;
    if (n.feature >= 0) {
      out << " split " << recommender_feature_names()[n.feature] << " <= "
          << fmt_double(n.threshold) << " left " << n.left << " right " << n.right;
    } else {
      out << " leaf";
    }
    out << " gini " << fmt_double(n.gini) << " samples " << n.samples << " counts "
        << join_counts(n.class_counts) << " majority " << tree.classes[majority_class(n)] << "\n";
  }
  return out.str();
}

DecisionTree parse_tree(const std::string& text) {
  DecisionTree tree;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "classes") {
      std::string c;
      while (ls >> c) tree.classes.push_back(c);
    } else if (tag == "max_depth") {
      ls >> tree.max_depth;
    } else if (tag == "node") {
      int id = -1;
      std::string kind;
      ls >> id >> kind;
      TreeNode node;
      if (kind == "split") {
        std::string feature, arrow;
        ls >> feature >> arrow >> node.threshold;
        const auto& names = recommender_feature_names();
        const auto it = std::find(names.begin(), names.end(), feature);
        if (it == names.end() || arrow != "<=") {
          throw std::runtime_error("corrupt tree file: bad split line: " + line);
        }
        node.feature = static_cast<int>(it - names.begin());
        std::string lword, rword;
        ls >> lword >> node.left >> rword >> node.right;
        if (lword != "left" || rword != "right") {
          throw std::runtime_error("corrupt tree file: bad child refs: " + line);
        }
      } else if (kind != "leaf") {
        throw std::runtime_error("corrupt tree file: unknown node kind: " + kind);
      }
      std::string word;
      while (ls >> word) {
        if (word == "gini") {
          ls >> node.gini;
        } else if (word == "samples") {
          ls >> node.samples;
        } else if (word == "counts") {
          std::string counts;
          ls >> counts;
          if (counts.size() < 2 || counts.front() != '[' || counts.back() != ']') {
            throw std::runtime_error("corrupt tree file: bad counts: " + line);
          }
          std::istringstream cs(counts.substr(1, counts.size() - 2));
          std::string item;
          while (std::getline(cs, item, ',')) node.class_counts.push_back(std::stoi(item));
        } else if (word == "majority") {
          std::string ignored;
          ls >> ignored;  // derivable from counts
        }
      }
      if (static_cast<int>(tree.nodes.size()) != id) {
        throw std::runtime_error("corrupt tree file: nodes out of order");
      }
      tree.nodes.push_back(std::move(node));
    } else {
      throw std::runtime_error("corrupt tree file: unknown line tag: " + tag);
    }
  }
  if (tree.nodes.empty()) throw std::runtime_error("corrupt tree file: no nodes");
  for (const auto& n : tree.nodes) {
    if (n.class_counts.size() != tree.classes.size()) {
      throw std::runtime_error("corrupt tree file: count width mismatch");
    }
    if (n.feature >= 0 && (n.left < 0 || n.right < 0 ||
                           n.left >= static_cast<int>(tree.nodes.size()) ||
                           n.right >= static_cast<int>(tree.nodes.size()))) {
      throw std::runtime_error("corrupt tree file: dangling child reference");
    }
  }
  return tree;
}

}  // namespace cfbench
