#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "vrlabel/dataset.hpp"

namespace vrlabel {

struct PropagationConfig {
  std::size_t k_neighbors = 10;
  // Gaussian kernel width; unset means the median distance over the selected
  // k-NN edges.
  std::optional<double> kernel_bandwidth;
  std::size_t max_iterations = 1000;
  double tolerance = 1e-6;
  bool clamp = true;
};

struct PropagationResult {
  std::vector<std::vector<double>> distributions;  // one row per unlabeled point
  std::vector<std::string> warnings;
};

// Graph-based semi-supervised labeling: symmetric k-NN graph over the labeled
// and unlabeled points with Gaussian edge weights exp(-d^2 / 2 sigma^2),
// iterating F <- D^-1 W F with labeled rows re-clamped until convergence.
PropagationResult label_propagation(
    const std::vector<std::vector<double>>& labeled_features,
    const std::vector<std::size_t>& labels, std::size_t num_classes,
    const std::vector<std::vector<double>>& unlabeled_features,
    const PropagationConfig& config = {});

// Single CART tree fit on the pooled labeled set over combined features;
// class distributions for every unlabeled pair, never abstaining.
// max_depth 0 grows the tree until leaves are pure.
std::vector<std::vector<double>> single_tree_labeler(
    const SplitDataset& split, std::size_t num_categories,
    std::size_t num_predicates, std::span<const ObjectPair> pairs,
    std::size_t max_depth = 0);

struct FrequencyTable {
  std::map<std::pair<std::size_t, std::size_t>, std::vector<double>> counts;
  bool overlap_required = false;
  std::size_t num_predicates = 0;
};

FrequencyTable build_frequency_table(const SplitDataset& split,
                                     std::size_t num_predicates,
                                     bool overlap_required);

// Normalized per-predicate counts for the pair's category key; uniform when
// the key was never seen.
std::vector<double> frequency_predict(const FrequencyTable& table,
                                      std::size_t subject_category,
                                      std::size_t object_category);

// Category-prior baseline over D_p: when overlap_required, a labeled instance
// counts only if its boxes intersect with positive area.
std::vector<std::vector<double>> frequency_baseline(
    const SplitDataset& split, std::span<const ObjectPair> pairs,
    std::size_t num_predicates, bool overlap_required);

// Positive-area box intersection test.
bool boxes_overlap(const BoundingBox& a, const BoundingBox& b);

}  // namespace vrlabel
