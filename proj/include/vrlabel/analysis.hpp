#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "vrlabel/dataset.hpp"
#include "vrlabel/features.hpp"

namespace vrlabel {

struct MeanShiftConfig {
  std::size_t max_iter = 300;
  double tol = 1e-5;
  double merge_radius = -1.0;  // < 0: bandwidth / 2
};

struct MeanShiftResult {
  std::vector<std::vector<double>> modes;
  std::vector<std::size_t> assignment;  // per point, index into modes

  std::size_t num_modes() const { return modes.size(); }
};

// Flat-kernel mean shift: each point iterates to the mean of all points
// within the bandwidth until the shift drops below tol; converged positions
// within merge_radius collapse into one mode.
MeanShiftResult mean_shift(const std::vector<std::vector<double>>& points,
                           double bandwidth,
                           const MeanShiftConfig& config = {});

// Cluster count of a standardized 8-dimensional spatial feature cloud, with
// the bandwidth taken as the `quantile` of pairwise distances (points
// subsampled to at most 2000 for the distance scan).
struct SpatialSubtypeResult {
  std::size_t count = 0;
  double bandwidth = 0.0;
};

SpatialSubtypeResult spatial_subtype_count(
    const std::vector<std::array<double, kSpatialDim>>& features,
    double quantile = 0.3, const MeanShiftConfig& config = {});

struct SubtypeReport {
  std::size_t predicate = 0;
  std::size_t spatial_subtypes = 0;
  std::size_t categorical_subtypes = 0;   // distinct (subject, object) pairs
  std::size_t category_union_count = 0;   // distinct categories in either role
  std::size_t instances_used = 0;
  double bandwidth = 0.0;
};

// Complexity of one predicate: spatial subtypes via mean shift over the
// standardized spatial features of all its instances, categorical subtypes
// as distinct category pairs.
SubtypeReport count_subtypes(const SceneGraphDataset& ds, std::size_t predicate,
                             double bandwidth_quantile = 0.3,
                             const MeanShiftConfig& config = {});

struct ImportanceReport {
  std::vector<std::pair<std::size_t, double>> ranked;  // (feature, importance)
  bool has_splits = false;
};

// One-vs-rest tree on combined features (positives = D_p, negatives = the
// other predicates' labeled examples); importances are normalized Gini
// decreases, descending.
ImportanceReport feature_importances(const SplitDataset& split,
                                     std::size_t predicate,
                                     std::size_t num_categories,
                                     std::size_t max_depth = 3);

struct FitReport {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

// Ordinary least squares with R^2 = 1 - SS_res / SS_tot; R^2 is defined as 0
// when the ys are constant.
FitReport linear_fit_r2(std::span<const double> xs, std::span<const double> ys);

// Per-predicate complexity series used as x-axes when correlating subtype
// structure with labeling performance: subtype count (spatial + categorical)
// of the labeled set, of the unlabeled set, and the labeled share of the
// full set's subtypes.
struct ComplexitySeries {
  std::vector<double> train_subtypes;
  std::vector<double> unlabeled_subtypes;
  std::vector<double> labeled_proportion;
};

ComplexitySeries complexity_series(const SceneGraphDataset& ds,
                                   const SplitDataset& split,
                                   double bandwidth_quantile = 0.3);

}  // namespace vrlabel
