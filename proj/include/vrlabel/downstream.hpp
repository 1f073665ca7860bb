#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "vrlabel/dataset.hpp"
#include "vrlabel/label_model.hpp"

namespace vrlabel {

// Desk-scale stand-in for a scene graph model: independent per-predicate
// logistic heads over the combined image-agnostic features, trained with the
// noise-aware loss on probabilistic labels.

// Expected logistic loss under a soft label:
//   p * log(1 + exp(-z)) + (1 - p) * log(1 + exp(z)),  z = theta . [v; 1].
// Numerically stable for |z| up to a few hundred.
double noise_aware_loss(std::span<const double> theta,
                        std::span<const double> v, double p_pos);

// d/d theta of noise_aware_loss: (sigmoid(z) - p) * [v; 1].
std::vector<double> noise_aware_loss_gradient(std::span<const double> theta,
                                              std::span<const double> v,
                                              double p_pos);

struct TrainConfig {
  double step = 0.5;
  std::size_t epochs = 300;
  double l2 = 1e-4;
  std::uint64_t seed = 0;
  std::size_t batch = 0;  // 0 = full batch
};

struct ClassifierParams {
  // One weight vector per predicate, length feature_dim + 1 (bias last).
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> traces;  // objective per epoch per head

  std::size_t num_predicates() const { return weights.size(); }
};

// Trains one head per predicate on the pairs whose label is not a full
// abstain, minimizing the mean noise-aware loss plus (l2/2)|theta|^2 with
// monotone (halving-on-increase) gradient descent from theta = 0.
ClassifierParams train_classifier(
    const std::vector<std::vector<double>>& features,
    const std::vector<ProbabilisticLabel>& labels, std::size_t num_predicates,
    const TrainConfig& config = {}, std::size_t threads = 1);

// Per-predicate sigmoid scores for one feature vector; intentionally not
// normalized across predicates (used for ranking).
std::vector<double> predict_scores(const ClassifierParams& params,
                                   std::span<const double> v);

nlohmann::json classifier_to_json(const ClassifierParams& params,
                                  const Vocab& predicates);
ClassifierParams classifier_from_json(const nlohmann::json& j,
                                      const Vocab& predicates);

}  // namespace vrlabel
