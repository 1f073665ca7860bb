#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "vrlabel/dataset.hpp"

namespace vrlabel {

inline constexpr std::size_t kSpatialDim = 8;

enum class FeatureMode { kSpatial, kCategorical, kCombined };

std::string to_string(FeatureMode mode);
FeatureMode feature_mode_from_string(const std::string& name);

// The eight relative-geometry statistics of a subject/object box pair, in
// fixed order:
//   0: (x - x') / w          4: h' / h
//   1: (y - y') / h          5: w' / w
//   2: ((y+h) - (y'+h')) / h 6: (w'h') / (wh)
//   3: ((x+w) - (x'+w')) / w 7: (w'+h') / (w+h)
// Translation- and scale-invariant; ratios invert under subject/object swap.
std::array<double, kSpatialDim> spatial_features(const BoundingBox& subject,
                                                 const BoundingBox& object);

// Sparse encoding of the concatenated subject/object one-hot pair: subject in
// [0, |C|), object in [|C|, 2|C|).
struct CategoricalFeatures {
  std::size_t subject_index = 0;
  std::size_t object_index = 0;
  std::size_t dimension = 0;

  std::vector<double> dense() const;
};

CategoricalFeatures categorical_features(std::size_t subject_category,
                                         std::size_t object_category,
                                         std::size_t num_categories);

std::size_t feature_dim(FeatureMode mode, std::size_t num_categories);

// Dense feature vector for one pair. Combined mode is spatial block followed
// by the categorical block.
std::vector<double> featurize(const ObjectPair& pair,
                              std::size_t num_categories, FeatureMode mode);

// CSV export: header f1..f8 then cat_0..cat_{2|C|-1}, one row per pair in the
// given order.
void write_features_csv(std::ostream& out, std::span<const ObjectPair> pairs,
                        std::size_t num_categories);

}  // namespace vrlabel
