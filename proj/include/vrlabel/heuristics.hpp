#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "vrlabel/dataset.hpp"
#include "vrlabel/features.hpp"

namespace vrlabel {

// CART-style multi-class decision tree: greedy splits minimizing weighted
// Gini impurity, thresholds at midpoints between consecutive distinct sorted
// feature values. Ties break toward the lowest feature index, then the
// lowest threshold, so fitting is fully deterministic.
class DecisionTree {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    std::vector<double> counts;  // class histogram of the training samples here
  };

  std::size_t num_classes() const { return num_classes_; }
  std::size_t num_features() const { return num_features_; }
  std::size_t depth() const;
  const std::vector<Node>& nodes() const { return nodes_; }

  // Class distribution of the leaf reached by x (histogram normalized over
  // all classes).
  std::vector<double> predict_distribution(std::span<const double> x) const;

  // Share of the total Gini impurity decrease attributed to each feature,
  // normalized to sum 1. All zeros for a single-leaf tree.
  std::vector<double> feature_importances() const;

  nlohmann::json to_json() const;

  friend DecisionTree fit_tree(const std::vector<std::vector<double>>& X,
                               const std::vector<std::size_t>& y,
                               std::size_t num_classes, std::size_t max_depth,
                               std::size_t min_leaf);

 private:
  std::vector<Node> nodes_;
  std::size_t num_classes_ = 0;
  std::size_t num_features_ = 0;
};

DecisionTree fit_tree(const std::vector<std::vector<double>>& X,
                      const std::vector<std::size_t>& y,
                      std::size_t num_classes, std::size_t max_depth,
                      std::size_t min_leaf = 1);

struct HeuristicConfig {
  std::vector<std::size_t> depth_grid{1, 2, 3};
  std::vector<FeatureMode> modes{FeatureMode::kSpatial,
                                 FeatureMode::kCategorical};
  // Leaf confidence below which a heuristic abstains. Defaults to twice the
  // random-guess rate 1/|P|, clipped to [0.05, 0.95].
  std::optional<double> abstain_threshold;
  std::size_t min_leaf = 1;
};

double default_abstain_threshold(std::size_t num_predicates);

struct Heuristic {
  DecisionTree tree;
  FeatureMode mode = FeatureMode::kSpatial;
  std::size_t max_depth = 0;
};

struct HeuristicSet {
  std::vector<Heuristic> trees;  // J = |depth_grid| * |modes|
  double abstain_threshold = 0.0;
  std::size_t num_classes = 0;
  std::vector<std::string> warnings;

  std::size_t size() const { return trees.size(); }
  nlohmann::json to_json() const;
};

// Fits one tree per (mode, depth) combination on the pooled labeled data
// (all D_p merged, labels = predicate ids), each restricted to its mode's
// feature block. Tree order: modes outer, depths inner.
HeuristicSet generate_heuristics(const SplitDataset& split,
                                 std::size_t num_categories,
                                 std::size_t num_predicates,
                                 const HeuristicConfig& config = {});

// Spatial and categorical feature rows for a batch of pairs, computed once
// and shared by every tree.
struct PairFeatureSet {
  std::vector<std::string> pair_ids;
  std::vector<std::vector<double>> spatial;
  std::vector<std::vector<double>> categorical;

  std::size_t size() const { return pair_ids.size(); }
  const std::vector<std::vector<double>>& mode(FeatureMode m) const;
};

PairFeatureSet compute_pair_features(std::span<const ObjectPair> pairs,
                                     std::size_t num_categories);

// Top class and its probability for every (tree, pair) combination.
struct TreeVote {
  std::size_t top_class = 0;
  double top_prob = 0.0;
};

std::vector<std::vector<TreeVote>> heuristic_votes(
    const HeuristicSet& hs, const PairFeatureSet& features);

// One predicate's J x N vote matrix over {-1, 0, +1}: +1 when a tree's top
// class is the predicate at or above the abstain threshold, -1 when its top
// class is some other predicate at or above the threshold, 0 otherwise.
struct LabelMatrix {
  std::size_t predicate = 0;
  std::size_t num_heuristics = 0;  // J
  std::size_t num_pairs = 0;       // N
  std::vector<std::int8_t> entries;  // row-major J x N
  std::vector<std::string> pair_ids;

  std::int8_t at(std::size_t j, std::size_t i) const {
    return entries[j * num_pairs + i];
  }
  std::int8_t& at(std::size_t j, std::size_t i) {
    return entries[j * num_pairs + i];
  }
  std::vector<std::int8_t> column(std::size_t i) const;
};

LabelMatrix label_matrix_from_votes(
    const std::vector<std::vector<TreeVote>>& votes,
    std::vector<std::string> pair_ids, std::size_t predicate,
    double abstain_threshold);

LabelMatrix build_label_matrix(const HeuristicSet& hs,
                               const PairFeatureSet& features,
                               std::size_t predicate);

// Sparse triplet export: entries as [j, i, value] for every non-abstain vote.
nlohmann::json label_matrix_to_json(const LabelMatrix& lm);

}  // namespace vrlabel
