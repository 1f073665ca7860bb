#include "vrlabel/features.hpp"

#include <cmath>
#include <ostream>

#include "vrlabel/error.hpp"

namespace vrlabel {

std::string to_string(FeatureMode mode) {
  switch (mode) {
    case FeatureMode::kSpatial:
      return "spatial";
    case FeatureMode::kCategorical:
      return "categorical";
    case FeatureMode::kCombined:
      return "combined";
  }
  return "?";
}

FeatureMode feature_mode_from_string(const std::string& name) {
  if (name == "spatial") return FeatureMode::kSpatial;
  if (name == "categorical") return FeatureMode::kCategorical;
  if (name == "combined") return FeatureMode::kCombined;
  throw ValidationError("unknown feature mode '" + name + "'");
}

std::array<double, kSpatialDim> spatial_features(const BoundingBox& b,
                                                 const BoundingBox& bp) {
  if (b.h <= 0.0 || b.w <= 0.0 || bp.h <= 0.0 || bp.w <= 0.0) {
    throw ValidationError("degenerate box: height and width must be positive");
  }
  std::array<double, kSpatialDim> f;
  f[0] = (b.x - bp.x) / b.w;
  f[1] = (b.y - bp.y) / b.h;
  f[2] = ((b.y + b.h) - (bp.y + bp.h)) / b.h;
  f[3] = ((b.x + b.w) - (bp.x + bp.w)) / b.w;
  f[4] = bp.h / b.h;
  f[5] = bp.w / b.w;
  f[6] = (bp.w * bp.h) / (b.w * b.h);
  f[7] = (bp.w + bp.h) / (b.w + b.h);
  for (const double v : f) {
    if (!std::isfinite(v)) {
      throw NumericError("non-finite spatial feature");
    }
  }
  return f;
}

CategoricalFeatures categorical_features(std::size_t subject_category,
                                         std::size_t object_category,
                                         std::size_t num_categories) {
  if (subject_category >= num_categories || object_category >= num_categories) {
    throw ValidationError("category index out of range (|C|=" +
                          std::to_string(num_categories) + ")");
  }
  return CategoricalFeatures{subject_category,
                             num_categories + object_category,
                             2 * num_categories};
}

std::vector<double> CategoricalFeatures::dense() const {
  std::vector<double> v(dimension, 0.0);
  v[subject_index] = 1.0;
  v[object_index] = 1.0;
  return v;
}

std::size_t feature_dim(FeatureMode mode, std::size_t num_categories) {
  switch (mode) {
    case FeatureMode::kSpatial:
      return kSpatialDim;
    case FeatureMode::kCategorical:
      return 2 * num_categories;
    case FeatureMode::kCombined:
      return kSpatialDim + 2 * num_categories;
  }
  return 0;
}

std::vector<double> featurize(const ObjectPair& pair,
                              std::size_t num_categories, FeatureMode mode) {
  std::vector<double> out;
  out.reserve(feature_dim(mode, num_categories));
  if (mode != FeatureMode::kCategorical) {
    const auto spatial = spatial_features(pair.subject.box, pair.object.box);
    out.insert(out.end(), spatial.begin(), spatial.end());
  }
  if (mode != FeatureMode::kSpatial) {
    const auto cat = categorical_features(pair.subject.category,
                                          pair.object.category, num_categories);
    const std::size_t offset = out.size();
    out.resize(offset + cat.dimension, 0.0);
    out[offset + cat.subject_index] = 1.0;
    out[offset + cat.object_index] = 1.0;
  }
  return out;
}

void write_features_csv(std::ostream& out, std::span<const ObjectPair> pairs,
                        std::size_t num_categories) {
  out << "pair_id";
  for (std::size_t i = 1; i <= kSpatialDim; ++i) out << ",f" << i;
  for (std::size_t c = 0; c < 2 * num_categories; ++c) out << ",cat_" << c;
  out << '\n';
  out.precision(17);
  for (const ObjectPair& pair : pairs) {
    out << pair.pair_id();
    for (const double v :
         featurize(pair, num_categories, FeatureMode::kCombined)) {
      out << ',' << v;
    }
    out << '\n';
  }
}

}  // namespace vrlabel
