#include "vrlabel/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "vrlabel/error.hpp"
#include "vrlabel/heuristics.hpp"

namespace vrlabel {
namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

// Per-dimension standardization with population moments; constant dimensions
// collapse to zero.
std::vector<std::vector<double>> standardize(
    const std::vector<std::array<double, kSpatialDim>>& features) {
  const auto n = static_cast<double>(features.size());
  std::array<double, kSpatialDim> mean{}, var{};
  for (const auto& f : features) {
    for (std::size_t d = 0; d < kSpatialDim; ++d) mean[d] += f[d];
  }
  for (std::size_t d = 0; d < kSpatialDim; ++d) mean[d] /= n;
  for (const auto& f : features) {
    for (std::size_t d = 0; d < kSpatialDim; ++d) {
      const double c = f[d] - mean[d];
      var[d] += c * c;
    }
  }
  std::vector<std::vector<double>> out(features.size(),
                                       std::vector<double>(kSpatialDim, 0.0));
  for (std::size_t d = 0; d < kSpatialDim; ++d) {
    const double sd = std::sqrt(var[d] / n);
    if (sd <= 0.0) continue;
    for (std::size_t i = 0; i < features.size(); ++i) {
      out[i][d] = (features[i][d] - mean[d]) / sd;
    }
  }
  return out;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= values.size()) return values.back();
  const double frac = pos - static_cast<double>(lo);
  return values[lo] * (1.0 - frac) + values[lo + 1] * frac;
}

std::vector<std::array<double, kSpatialDim>> predicate_spatial_features(
    const SceneGraphDataset& ds, std::size_t predicate) {
  std::vector<std::array<double, kSpatialDim>> features;
  for (const auto& image : ds.images) {
    for (const auto& rel : image.relationships) {
      if (rel.predicate != predicate) continue;
      features.push_back(spatial_features(image.objects[rel.subject].box,
                                          image.objects[rel.object].box));
    }
  }
  return features;
}

}  // namespace

MeanShiftResult mean_shift(const std::vector<std::vector<double>>& points,
                           double bandwidth, const MeanShiftConfig& config) {
  if (points.empty()) {
    throw ValidationError("mean_shift: need at least one point");
  }
  if (bandwidth < 0.0 || !std::isfinite(bandwidth)) {
    throw ValidationError("mean_shift: bandwidth must be non-negative");
  }
  const std::size_t dim = points[0].size();
  const double radius_sq = bandwidth * bandwidth;
  const double merge_radius =
      config.merge_radius < 0.0 ? bandwidth / 2.0 : config.merge_radius;

  std::vector<std::vector<double>> converged(points.size());
  std::vector<double> mean(dim);
  for (std::size_t i = 0; i < points.size(); ++i) {
    std::vector<double> x = points[i];
    for (std::size_t iter = 0; iter < config.max_iter; ++iter) {
      std::fill(mean.begin(), mean.end(), 0.0);
      double weight = 0.0;
      for (const auto& point : points) {
        if (squared_distance(x, point) > radius_sq) continue;
        for (std::size_t d = 0; d < dim; ++d) mean[d] += point[d];
        weight += 1.0;
      }
      for (std::size_t d = 0; d < dim; ++d) mean[d] /= weight;
      const double shift = std::sqrt(squared_distance(x, mean));
      x = mean;
      if (shift < config.tol) break;
    }
    converged[i] = std::move(x);
  }

  MeanShiftResult result;
  result.assignment.resize(points.size());
  const double merge_sq = merge_radius * merge_radius;
  for (std::size_t i = 0; i < converged.size(); ++i) {
    std::size_t assigned = result.modes.size();
    for (std::size_t m = 0; m < result.modes.size(); ++m) {
      if (squared_distance(converged[i], result.modes[m]) <= merge_sq) {
        assigned = m;
        break;
      }
    }
    if (assigned == result.modes.size()) {
      result.modes.push_back(converged[i]);
    }
    result.assignment[i] = assigned;
  }
  return result;
}

SpatialSubtypeResult spatial_subtype_count(
    const std::vector<std::array<double, kSpatialDim>>& features,
    double quantile_q, const MeanShiftConfig& config) {
  if (features.empty()) {
    throw ValidationError("spatial_subtype_count: no instances");
  }
  const auto points = standardize(features);

  // Pairwise distances on an index-strided subsample of at most 2000 points.
  std::vector<std::size_t> sample;
  const std::size_t stride = (points.size() + 1999) / 2000;
  for (std::size_t i = 0; i < points.size(); i += stride) sample.push_back(i);
  std::vector<double> distances;
  distances.reserve(sample.size() * (sample.size() - 1) / 2);
  for (std::size_t a = 0; a < sample.size(); ++a) {
    for (std::size_t b = a + 1; b < sample.size(); ++b) {
      distances.push_back(
          std::sqrt(squared_distance(points[sample[a]], points[sample[b]])));
    }
  }
  double bandwidth = quantile(std::move(distances), quantile_q);
  if (bandwidth <= 0.0) {
    // Degenerate spread (many coincident points): fall back to half the
    // smallest positive distance so distinct groups stay distinct.
    double smallest = 0.0;
    for (std::size_t a = 0; a < points.size() && smallest == 0.0; ++a) {
      for (std::size_t b = a + 1; b < points.size(); ++b) {
        const double d = std::sqrt(squared_distance(points[a], points[b]));
        if (d > 0.0 && (smallest == 0.0 || d < smallest)) smallest = d;
      }
    }
    bandwidth = smallest / 2.0;
  }
  const MeanShiftResult clusters = mean_shift(points, bandwidth, config);
  return SpatialSubtypeResult{clusters.num_modes(), bandwidth};
}

SubtypeReport count_subtypes(const SceneGraphDataset& ds, std::size_t predicate,
                             double bandwidth_quantile,
                             const MeanShiftConfig& config) {
  const auto features = predicate_spatial_features(ds, predicate);
  if (features.empty()) {
    throw ValidationError("count_subtypes: predicate '" +
                          ds.predicates.name(predicate) + "' has no instances");
  }
  SubtypeReport report;
  report.predicate = predicate;
  report.instances_used = features.size();

  const auto spatial = spatial_subtype_count(features, bandwidth_quantile, config);
  report.spatial_subtypes = spatial.count;
  report.bandwidth = spatial.bandwidth;

  std::set<std::pair<std::size_t, std::size_t>> pairs;
  std::set<std::size_t> categories;
  for (const auto& image : ds.images) {
    for (const auto& rel : image.relationships) {
      if (rel.predicate != predicate) continue;
      const std::size_t cs = image.objects[rel.subject].category;
      const std::size_t co = image.objects[rel.object].category;
      pairs.insert({cs, co});
      categories.insert(cs);
      categories.insert(co);
    }
  }
  report.categorical_subtypes = pairs.size();
  report.category_union_count = categories.size();
  return report;
}

ImportanceReport feature_importances(const SplitDataset& split,
                                     std::size_t predicate,
                                     std::size_t num_categories,
                                     std::size_t max_depth) {
  if (predicate >= split.labeled.size() || split.labeled[predicate].empty()) {
    throw ValidationError("feature_importances: predicate has no labeled data");
  }
  std::vector<std::vector<double>> X;
  std::vector<std::size_t> y;
  for (std::size_t p = 0; p < split.labeled.size(); ++p) {
    for (const LabeledRelationship& rel : split.labeled[p]) {
      X.push_back(featurize(rel.pair, num_categories, FeatureMode::kCombined));
      y.push_back(p == predicate ? 1 : 0);
    }
  }
  const DecisionTree tree = fit_tree(X, y, 2, max_depth);

  ImportanceReport report;
  report.has_splits = tree.depth() > 0;
  const auto importances = tree.feature_importances();
  report.ranked.reserve(importances.size());
  for (std::size_t f = 0; f < importances.size(); ++f) {
    report.ranked.emplace_back(f, importances[f]);
  }
  std::stable_sort(report.ranked.begin(), report.ranked.end(),
                   [](const auto& a, const auto& b) {
                     return a.second > b.second;
                   });
  return report;
}

FitReport linear_fit_r2(std::span<const double> xs,
                        std::span<const double> ys) {
  if (xs.size() != ys.size()) {
    throw ValidationError("linear_fit_r2: xs and ys lengths differ");
  }
  if (xs.size() < 2) {
    throw ValidationError("linear_fit_r2: need at least two points");
  }
  const auto n = static_cast<double>(xs.size());
  double mean_x = 0.0, mean_y = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mean_x += xs[i];
    mean_y += ys[i];
  }
  mean_x /= n;
  mean_y /= n;
  double sxx = 0.0, sxy = 0.0, stot = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mean_x;
    const double dy = ys[i] - mean_y;
    sxx += dx * dx;
    sxy += dx * dy;
    stot += dy * dy;
  }
  FitReport fit;
  fit.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  fit.intercept = mean_y - fit.slope * mean_x;
  if (stot > 0.0) {
    double sres = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double r = ys[i] - (fit.slope * xs[i] + fit.intercept);
      sres += r * r;
    }
    fit.r_squared = std::clamp(1.0 - sres / stot, 0.0, 1.0);
  }
  return fit;
}

ComplexitySeries complexity_series(const SceneGraphDataset& ds,
                                   const SplitDataset& split,
                                   double bandwidth_quantile) {
  const std::size_t num_predicates = ds.predicates.size();
  ComplexitySeries series;
  series.train_subtypes.assign(num_predicates, 0.0);
  series.unlabeled_subtypes.assign(num_predicates, 0.0);
  series.labeled_proportion.assign(num_predicates, 0.0);

  const auto gold = gold_pair_labels(ds);
  auto subtype_total = [&](const std::vector<std::array<double, kSpatialDim>>&
                               features,
                           const std::set<std::pair<std::size_t, std::size_t>>&
                               category_pairs) -> double {
    if (features.empty()) return 0.0;
    return static_cast<double>(
        spatial_subtype_count(features, bandwidth_quantile).count +
        category_pairs.size());
  };

  for (std::size_t p = 0; p < num_predicates; ++p) {
    std::vector<std::array<double, kSpatialDim>> labeled_feats, unlabeled_feats,
        all_feats;
    std::set<std::pair<std::size_t, std::size_t>> labeled_cats, unlabeled_cats,
        all_cats;
    for (const LabeledRelationship& rel : split.labeled[p]) {
      labeled_feats.push_back(
          spatial_features(rel.pair.subject.box, rel.pair.object.box));
      labeled_cats.insert(
          {rel.pair.subject.category, rel.pair.object.category});
    }
    for (const ObjectPair& pair : split.unlabeled) {
      const auto it = gold.find(pair.pair_id());
      if (it == gold.end()) continue;
      if (std::find(it->second.begin(), it->second.end(), p) ==
          it->second.end()) {
        continue;
      }
      unlabeled_feats.push_back(
          spatial_features(pair.subject.box, pair.object.box));
      unlabeled_cats.insert({pair.subject.category, pair.object.category});
    }
    all_feats = predicate_spatial_features(ds, p);
    for (const auto& image : ds.images) {
      for (const auto& rel : image.relationships) {
        if (rel.predicate != p) continue;
        all_cats.insert({image.objects[rel.subject].category,
                         image.objects[rel.object].category});
      }
    }
    series.train_subtypes[p] = subtype_total(labeled_feats, labeled_cats);
    series.unlabeled_subtypes[p] = subtype_total(unlabeled_feats, unlabeled_cats);
    const double total = subtype_total(all_feats, all_cats);
    if (total > 0.0) {
      series.labeled_proportion[p] = series.train_subtypes[p] / total;
    }
  }
  return series;
}

}  // namespace vrlabel
