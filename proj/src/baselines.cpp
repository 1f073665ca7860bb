#include "vrlabel/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "vrlabel/error.hpp"
#include "vrlabel/features.hpp"
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

}  // namespace

PropagationResult label_propagation(
    const std::vector<std::vector<double>>& labeled_features,
    const std::vector<std::size_t>& labels, std::size_t num_classes,
    const std::vector<std::vector<double>>& unlabeled_features,
    const PropagationConfig& config) {
  if (labeled_features.empty()) {
    throw ValidationError("label_propagation: need at least one labeled point");
  }
  if (labeled_features.size() != labels.size()) {
    throw ValidationError("label_propagation: features/labels length mismatch");
  }
  if (config.k_neighbors < 1 || config.tolerance <= 0.0) {
    throw ValidationError("label_propagation: k >= 1 and tolerance > 0 required");
  }
  const std::size_t n_labeled = labeled_features.size();
  const std::size_t n = n_labeled + unlabeled_features.size();
  const std::size_t dim = labeled_features[0].size();

  std::vector<const std::vector<double>*> points;
  points.reserve(n);
  for (const auto& f : labeled_features) points.push_back(&f);
  for (const auto& f : unlabeled_features) {
    if (f.size() != dim) {
      throw ValidationError("label_propagation: feature dimensions disagree");
    }
    points.push_back(&f);
  }

  // Symmetric k-NN edges; ties resolve toward the lower index.
  const std::size_t k = std::min<std::size_t>(config.k_neighbors, n - 1);
  std::vector<std::vector<std::pair<std::size_t, double>>> edges(n);
  std::vector<double> edge_distances;
  std::vector<std::pair<double, std::size_t>> order(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t at = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      order[at++] = {std::sqrt(squared_distance(*points[i], *points[j])), j};
    }
    std::partial_sort(order.begin(),
                      order.begin() + static_cast<std::ptrdiff_t>(k),
                      order.end());
    for (std::size_t e = 0; e < k; ++e) {
      const auto [d, j] = order[e];
      const auto a = std::min(i, j), b = std::max(i, j);
      edges[a].push_back({b, d});
      edge_distances.push_back(d);
    }
  }
  for (auto& list : edges) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }

  double sigma;
  if (config.kernel_bandwidth) {
    sigma = *config.kernel_bandwidth;
    if (sigma <= 0.0) {
      throw ValidationError("label_propagation: kernel bandwidth must be > 0");
    }
  } else {
    std::nth_element(edge_distances.begin(),
                     edge_distances.begin() +
                         static_cast<std::ptrdiff_t>(edge_distances.size() / 2),
                     edge_distances.end());
    sigma = edge_distances[edge_distances.size() / 2];
    if (sigma <= 0.0) sigma = 1e-12;  // coincident points get weight 1 anyway
  }

  // Sparse symmetric weights and degrees.
  std::vector<std::vector<std::pair<std::size_t, double>>> weights(n);
  std::vector<double> degree(n, 0.0);
  const double denom = 2.0 * sigma * sigma;
  for (std::size_t a = 0; a < n; ++a) {
    for (const auto& [b, d] : edges[a]) {
      const double w = std::exp(-(d * d) / denom);
      if (w <= 0.0) continue;
      weights[a].push_back({b, w});
      weights[b].push_back({a, w});
      degree[a] += w;
      degree[b] += w;
    }
  }

  PropagationResult result;
  std::vector<std::vector<double>> F(n, std::vector<double>(num_classes, 0.0));
  for (std::size_t i = 0; i < n_labeled; ++i) {
    if (labels[i] >= num_classes) {
      throw ValidationError("label_propagation: label out of range");
    }
    F[i][labels[i]] = 1.0;
  }
  const double uniform = 1.0 / static_cast<double>(num_classes);
  for (std::size_t i = n_labeled; i < n; ++i) {
    std::fill(F[i].begin(), F[i].end(), uniform);
    if (degree[i] <= 0.0) {
      result.warnings.push_back("unlabeled point " +
                                std::to_string(i - n_labeled) +
                                " is disconnected; defaulting to uniform");
    }
  }

  std::vector<std::vector<double>> next = F;
  for (std::size_t iter = 0; iter < config.max_iterations; ++iter) {
    double max_change = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      auto& row = next[i];
      if (degree[i] <= 0.0) continue;
      std::fill(row.begin(), row.end(), 0.0);
      for (const auto& [j, w] : weights[i]) {
        for (std::size_t c = 0; c < num_classes; ++c) row[c] += w * F[j][c];
      }
      for (std::size_t c = 0; c < num_classes; ++c) row[c] /= degree[i];
    }
    if (config.clamp) {
      for (std::size_t i = 0; i < n_labeled; ++i) {
        std::fill(next[i].begin(), next[i].end(), 0.0);
        next[i][labels[i]] = 1.0;
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < num_classes; ++c) {
        max_change = std::max(max_change, std::abs(next[i][c] - F[i][c]));
      }
    }
    std::swap(F, next);
    if (max_change < config.tolerance) break;
  }

  result.distributions.reserve(n - n_labeled);
  for (std::size_t i = n_labeled; i < n; ++i) {
    auto row = F[i];
    const double total = std::accumulate(row.begin(), row.end(), 0.0);
    if (total > 0.0) {
      for (double& v : row) v /= total;
    } else {
      std::fill(row.begin(), row.end(), uniform);
    }
    result.distributions.push_back(std::move(row));
  }
  return result;
}

std::vector<std::vector<double>> single_tree_labeler(
    const SplitDataset& split, std::size_t num_categories,
    std::size_t num_predicates, std::span<const ObjectPair> pairs,
    std::size_t max_depth) {
  std::vector<std::vector<double>> X;
  std::vector<std::size_t> y;
  for (std::size_t p = 0; p < split.labeled.size(); ++p) {
    for (const LabeledRelationship& rel : split.labeled[p]) {
      X.push_back(featurize(rel.pair, num_categories, FeatureMode::kCombined));
      y.push_back(p);
    }
  }
  if (X.empty()) {
    throw ValidationError("single_tree_labeler: pooled labeled set is empty");
  }
  if (max_depth == 0) max_depth = 64;  // effectively unbounded
  const DecisionTree tree = fit_tree(X, y, num_predicates, max_depth);

  std::vector<std::vector<double>> out;
  out.reserve(pairs.size());
  for (const ObjectPair& pair : pairs) {
    out.push_back(tree.predict_distribution(
        featurize(pair, num_categories, FeatureMode::kCombined)));
  }
  return out;
}

bool boxes_overlap(const BoundingBox& a, const BoundingBox& b) {
  const double y_overlap =
      std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y);
  const double x_overlap =
      std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x);
  return y_overlap > 0.0 && x_overlap > 0.0;
}

FrequencyTable build_frequency_table(const SplitDataset& split,
                                     std::size_t num_predicates,
                                     bool overlap_required) {
  FrequencyTable table;
  table.overlap_required = overlap_required;
  table.num_predicates = num_predicates;
  for (std::size_t p = 0; p < split.labeled.size(); ++p) {
    for (const LabeledRelationship& rel : split.labeled[p]) {
      if (overlap_required &&
          !boxes_overlap(rel.pair.subject.box, rel.pair.object.box)) {
        continue;
      }
      const std::pair<std::size_t, std::size_t> key{
          rel.pair.subject.category, rel.pair.object.category};
      auto [it, inserted] =
          table.counts.try_emplace(key, std::vector<double>(num_predicates, 0.0));
      it->second[p] += 1.0;
    }
  }
  return table;
}

std::vector<double> frequency_predict(const FrequencyTable& table,
                                      std::size_t subject_category,
                                      std::size_t object_category) {
  const auto it = table.counts.find({subject_category, object_category});
  if (it == table.counts.end()) {
    return std::vector<double>(table.num_predicates,
                               1.0 / static_cast<double>(table.num_predicates));
  }
  std::vector<double> dist = it->second;
  const double total = std::accumulate(dist.begin(), dist.end(), 0.0);
  for (double& v : dist) v /= total;
  return dist;
}

std::vector<std::vector<double>> frequency_baseline(
    const SplitDataset& split, std::span<const ObjectPair> pairs,
    std::size_t num_predicates, bool overlap_required) {
  const FrequencyTable table =
      build_frequency_table(split, num_predicates, overlap_required);
  std::vector<std::vector<double>> out;
  out.reserve(pairs.size());
  for (const ObjectPair& pair : pairs) {
    out.push_back(frequency_predict(table, pair.subject.category,
                                    pair.object.category));
  }
  return out;
}

}  // namespace vrlabel
