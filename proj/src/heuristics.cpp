#include "vrlabel/heuristics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "vrlabel/error.hpp"

namespace vrlabel {
namespace {

using nlohmann::json;

std::vector<double> class_histogram(const std::vector<std::size_t>& y,
                                    std::span<const std::size_t> indices,
                                    std::size_t num_classes) {
  std::vector<double> counts(num_classes, 0.0);
  for (const std::size_t i : indices) counts[y[i]] += 1.0;
  return counts;
}

// Sum of squared class counts; Gini impurity of a node with n samples is
// 1 - sum_sq / n^2.
double sum_sq(const std::vector<double>& counts) {
  double s = 0.0;
  for (const double c : counts) s += c * c;
  return s;
}

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
};

struct FitState {
  const std::vector<std::vector<double>>& X;
  const std::vector<std::size_t>& y;
  std::size_t num_classes;
  std::size_t min_leaf;
  std::vector<DecisionTree::Node>* nodes;
};

// Best split of the given samples, or nullopt when no split strictly lowers
// the weighted Gini impurity while respecting min_leaf.
std::optional<SplitChoice> find_split(const FitState& st,
                                      std::span<const std::size_t> indices,
                                      const std::vector<double>& counts) {
  const auto n = static_cast<double>(indices.size());
  const std::size_t num_features = st.X[indices[0]].size();
  // Maximize sum_sq(left)/n_left + sum_sq(right)/n_right; this equals
  // n - weighted Gini, so larger is purer.
  double best_score = sum_sq(counts) / n + 1e-12;
  std::optional<SplitChoice> best;

  std::vector<std::pair<double, std::size_t>> order(indices.size());
  std::vector<double> left(st.num_classes);
  for (std::size_t f = 0; f < num_features; ++f) {
    for (std::size_t k = 0; k < indices.size(); ++k) {
      order[k] = {st.X[indices[k]][f], st.y[indices[k]]};
    }
    std::sort(order.begin(), order.end());
    if (order.front().first == order.back().first) continue;  // constant

    std::fill(left.begin(), left.end(), 0.0);
    double left_sq = 0.0;
    std::size_t n_left = 0;
    for (std::size_t k = 0; k + 1 < order.size(); ++k) {
      const auto cls = order[k].second;
      left_sq += 2.0 * left[cls] + 1.0;
      left[cls] += 1.0;
      ++n_left;
      if (order[k].first == order[k + 1].first) continue;
      if (n_left < st.min_leaf || order.size() - n_left < st.min_leaf) continue;
      const double right_sq = [&] {
        double s = 0.0;
        for (std::size_t c = 0; c < st.num_classes; ++c) {
          const double r = counts[c] - left[c];
          s += r * r;
        }
        return s;
      }();
      const double score = left_sq / static_cast<double>(n_left) +
                           right_sq / static_cast<double>(order.size() - n_left);
      if (score > best_score) {
        best_score = score;
        best = SplitChoice{static_cast<int>(f),
                           0.5 * (order[k].first + order[k + 1].first)};
      }
    }
  }
  return best;
}

int build_node(const FitState& st, std::vector<std::size_t> indices,
               std::size_t depth_left) {
  auto counts = class_histogram(st.y, indices, st.num_classes);
  const auto node_index = static_cast<int>(st.nodes->size());
  st.nodes->push_back({});
  (*st.nodes)[node_index].counts = counts;

  const bool pure =
      *std::max_element(counts.begin(), counts.end()) ==
      static_cast<double>(indices.size());
  if (depth_left == 0 || pure || indices.size() < 2 * st.min_leaf) {
    return node_index;
  }
  const auto split = find_split(st, indices, counts);
  if (!split) return node_index;

  std::vector<std::size_t> left_idx, right_idx;
  for (const std::size_t i : indices) {
    (st.X[i][static_cast<std::size_t>(split->feature)] <= split->threshold
         ? left_idx
         : right_idx)
        .push_back(i);
  }
  indices.clear();
  indices.shrink_to_fit();

  const int left = build_node(st, std::move(left_idx), depth_left - 1);
  const int right = build_node(st, std::move(right_idx), depth_left - 1);
  auto& node = (*st.nodes)[node_index];
  node.feature = split->feature;
  node.threshold = split->threshold;
  node.left = left;
  node.right = right;
  return node_index;
}

}  // namespace

DecisionTree fit_tree(const std::vector<std::vector<double>>& X,
                      const std::vector<std::size_t>& y,
                      std::size_t num_classes, std::size_t max_depth,
                      std::size_t min_leaf) {
  if (X.empty() || X.size() != y.size()) {
    throw ValidationError("fit_tree: need a non-empty X matching y");
  }
  if (X[0].empty()) {
    throw ValidationError("fit_tree: need at least one feature column");
  }
  if (min_leaf < 1) min_leaf = 1;
  for (const std::size_t label : y) {
    if (label >= num_classes) {
      throw ValidationError("fit_tree: label out of range");
    }
  }

  DecisionTree tree;
  tree.num_classes_ = num_classes;
  tree.num_features_ = X[0].size();
  FitState st{X, y, num_classes, min_leaf, &tree.nodes_};
  std::vector<std::size_t> indices(X.size());
  std::iota(indices.begin(), indices.end(), 0);
  build_node(st, std::move(indices), max_depth);
  return tree;
}

std::size_t DecisionTree::depth() const {
  // Iterative depth: nodes are stored parent-before-children.
  std::vector<std::size_t> depth_of(nodes_.size(), 0);
  std::size_t max_depth = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& node = nodes_[i];
    if (node.feature < 0) continue;
    depth_of[static_cast<std::size_t>(node.left)] = depth_of[i] + 1;
    depth_of[static_cast<std::size_t>(node.right)] = depth_of[i] + 1;
    max_depth = std::max(max_depth, depth_of[i] + 1);
  }
  return max_depth;
}

std::vector<double> DecisionTree::predict_distribution(
    std::span<const double> x) const {
  if (x.size() != num_features_) {
    throw ValidationError("tree_predict: expected " +
                          std::to_string(num_features_) + " features, got " +
                          std::to_string(x.size()));
  }
  std::size_t at = 0;
  while (nodes_[at].feature >= 0) {
    const Node& node = nodes_[at];
    at = static_cast<std::size_t>(
        x[static_cast<std::size_t>(node.feature)] <= node.threshold
            ? node.left
            : node.right);
  }
  const auto& counts = nodes_[at].counts;
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  std::vector<double> dist(counts.size(), 0.0);
  for (std::size_t c = 0; c < counts.size(); ++c) dist[c] = counts[c] / total;
  return dist;
}

std::vector<double> DecisionTree::feature_importances() const {
  std::vector<double> importance(num_features_, 0.0);
  if (nodes_.empty()) return importance;
  const double n_root =
      std::accumulate(nodes_[0].counts.begin(), nodes_[0].counts.end(), 0.0);
  for (const Node& node : nodes_) {
    if (node.feature < 0) continue;
    const auto gini_weight = [](const std::vector<double>& counts) {
      const double n = std::accumulate(counts.begin(), counts.end(), 0.0);
      return n - sum_sq(counts) / n;  // n * Gini(counts)
    };
    const double decrease =
        gini_weight(node.counts) -
        gini_weight(nodes_[static_cast<std::size_t>(node.left)].counts) -
        gini_weight(nodes_[static_cast<std::size_t>(node.right)].counts);
    importance[static_cast<std::size_t>(node.feature)] += decrease / n_root;
  }
  const double total =
      std::accumulate(importance.begin(), importance.end(), 0.0);
  if (total > 0.0) {
    for (double& v : importance) v /= total;
  }
  return importance;
}

json DecisionTree::to_json() const {
  // Nested node objects, resolved from the flat layout.
  auto emit = [&](auto&& self, std::size_t at) -> json {
    const Node& node = nodes_[at];
    if (node.feature < 0) {
      return json{{"counts", node.counts}};
    }
    return json{{"feature", node.feature},
                {"threshold", node.threshold},
                {"left", self(self, static_cast<std::size_t>(node.left))},
                {"right", self(self, static_cast<std::size_t>(node.right))}};
  };
  return emit(emit, 0);
}

double default_abstain_threshold(std::size_t num_predicates) {
  const double raw = 2.0 / static_cast<double>(num_predicates);
  return std::clamp(raw, 0.05, 0.95);
}

json HeuristicSet::to_json() const {
  json out;
  out["abstain_threshold"] = abstain_threshold;
  out["num_classes"] = num_classes;
  json jtrees = json::array();
  for (const Heuristic& h : trees) {
    jtrees.push_back({{"mode", to_string(h.mode)},
                      {"max_depth", h.max_depth},
                      {"tree", h.tree.to_json()}});
  }
  out["trees"] = std::move(jtrees);
  return out;
}

HeuristicSet generate_heuristics(const SplitDataset& split,
                                 std::size_t num_categories,
                                 std::size_t num_predicates,
                                 const HeuristicConfig& config) {
  if (config.depth_grid.empty() || config.modes.empty()) {
    throw ValidationError("generate_heuristics: empty depth grid or mode list");
  }
  HeuristicSet hs;
  hs.num_classes = num_predicates;
  if (config.abstain_threshold) {
    if (*config.abstain_threshold <= 0.0 || *config.abstain_threshold > 0.95) {
      throw ValidationError(
          "generate_heuristics: abstain_threshold must be in (0, 0.95]");
    }
    hs.abstain_threshold = *config.abstain_threshold;
  } else {
    hs.abstain_threshold = default_abstain_threshold(num_predicates);
  }

  std::vector<std::size_t> labels;
  std::vector<const ObjectPair*> pairs;
  for (std::size_t p = 0; p < split.labeled.size(); ++p) {
    if (split.labeled[p].empty()) {
      hs.warnings.push_back("predicate " + std::to_string(p) +
                            " has no labeled examples; absent from heuristics");
    }
    for (const LabeledRelationship& rel : split.labeled[p]) {
      pairs.push_back(&rel.pair);
      labels.push_back(p);
    }
  }
  if (pairs.empty()) {
    throw ValidationError("generate_heuristics: pooled labeled set is empty");
  }

  for (const FeatureMode mode : config.modes) {
    std::vector<std::vector<double>> X;
    X.reserve(pairs.size());
    for (const ObjectPair* pair : pairs) {
      X.push_back(featurize(*pair, num_categories, mode));
    }
    for (const std::size_t depth : config.depth_grid) {
      hs.trees.push_back(Heuristic{
          fit_tree(X, labels, num_predicates, depth, config.min_leaf), mode,
          depth});
    }
  }
  return hs;
}

const std::vector<std::vector<double>>& PairFeatureSet::mode(
    FeatureMode m) const {
  switch (m) {
    case FeatureMode::kSpatial:
      return spatial;
    case FeatureMode::kCategorical:
      return categorical;
    default:
      throw ValidationError("PairFeatureSet holds spatial/categorical only");
  }
}

PairFeatureSet compute_pair_features(std::span<const ObjectPair> pairs,
                                     std::size_t num_categories) {
  PairFeatureSet out;
  out.pair_ids.reserve(pairs.size());
  out.spatial.reserve(pairs.size());
  out.categorical.reserve(pairs.size());
  for (const ObjectPair& pair : pairs) {
    out.pair_ids.push_back(pair.pair_id());
    out.spatial.push_back(featurize(pair, num_categories, FeatureMode::kSpatial));
    out.categorical.push_back(
        featurize(pair, num_categories, FeatureMode::kCategorical));
  }
  return out;
}

std::vector<std::vector<TreeVote>> heuristic_votes(
    const HeuristicSet& hs, const PairFeatureSet& features) {
  std::vector<std::vector<TreeVote>> votes(hs.size());
  for (std::size_t j = 0; j < hs.size(); ++j) {
    const Heuristic& h = hs.trees[j];
    const auto& rows = features.mode(h.mode);
    votes[j].resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto dist = h.tree.predict_distribution(rows[i]);
      // Ties resolve to the lowest class index.
      const auto top =
          std::max_element(dist.begin(), dist.end());
      votes[j][i] = {static_cast<std::size_t>(top - dist.begin()), *top};
    }
  }
  return votes;
}

std::vector<std::int8_t> LabelMatrix::column(std::size_t i) const {
  std::vector<std::int8_t> col(num_heuristics);
  for (std::size_t j = 0; j < num_heuristics; ++j) col[j] = at(j, i);
  return col;
}

LabelMatrix label_matrix_from_votes(
    const std::vector<std::vector<TreeVote>>& votes,
    std::vector<std::string> pair_ids, std::size_t predicate,
    double abstain_threshold) {
  LabelMatrix lm;
  lm.predicate = predicate;
  lm.num_heuristics = votes.size();
  lm.num_pairs = pair_ids.size();
  lm.pair_ids = std::move(pair_ids);
  lm.entries.assign(lm.num_heuristics * lm.num_pairs, 0);
  for (std::size_t j = 0; j < votes.size(); ++j) {
    for (std::size_t i = 0; i < votes[j].size(); ++i) {
      const TreeVote& vote = votes[j][i];
      if (vote.top_prob < abstain_threshold) continue;
      lm.at(j, i) = vote.top_class == predicate ? 1 : -1;
    }
  }
  return lm;
}

LabelMatrix build_label_matrix(const HeuristicSet& hs,
                               const PairFeatureSet& features,
                               std::size_t predicate) {
  return label_matrix_from_votes(heuristic_votes(hs, features),
                                 features.pair_ids, predicate,
                                 hs.abstain_threshold);
}

json label_matrix_to_json(const LabelMatrix& lm) {
  json out;
  out["predicate"] = lm.predicate;
  out["num_heuristics"] = lm.num_heuristics;
  out["num_pairs"] = lm.num_pairs;
  out["pair_ids"] = lm.pair_ids;
  json triplets = json::array();
  for (std::size_t j = 0; j < lm.num_heuristics; ++j) {
    for (std::size_t i = 0; i < lm.num_pairs; ++i) {
      const int v = lm.at(j, i);
      if (v != 0) triplets.push_back({j, i, v});
    }
  }
  out["entries"] = std::move(triplets);
  return out;
}

}  // namespace vrlabel
