#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "vrlabel/dataset.hpp"
#include "vrlabel/heuristics.hpp"

namespace vrlabel {

// Generative model over one predicate's vote matrix: the joint factorizes per
// pair as pi_phi(lambda, y) = exp(phi . lambda * y) / Z_phi with latent
// y in {-1,+1} and votes lambda in {-1,0,+1}^J. phi_j encodes the average
// accuracy of heuristic j and is learned from votes alone.

// log Z where Z sums exp(phi . lambda * y) over all (lambda, y); closed form
// log 2 + sum_j log(1 + 2 cosh(phi_j)).
double log_partition(std::span<const double> phi);

// Log probability of the observed columns with y marginalized out:
// sum_i log(2 cosh(phi . col_i)) - N log Z.
double marginal_log_likelihood(std::span<const double> phi,
                               const LabelMatrix& lm);

// Gradient of the marginal log likelihood:
// g_j = sum_i col_i[j] * tanh(phi . col_i) - N * 2 sinh(phi_j) / (1 + 2 cosh(phi_j)).
std::vector<double> mll_gradient(std::span<const double> phi,
                                 const LabelMatrix& lm);

// P(y = +1 | column) = sigmoid(2 * phi . column).
double posterior(std::span<const double> phi,
                 std::span<const std::int8_t> column);

struct LabelModelConfig {
  double init = 0.5;  // positive init; phi = 0 is an exact saddle
  double step = 0.1;
  std::size_t epochs = 500;
  double l2 = 1e-3;
  std::uint64_t seed = 0;  // training itself is deterministic
};

struct LabelModelParams {
  std::size_t predicate = 0;
  std::vector<double> phi;
  std::vector<double> trace;  // regularized objective per epoch
};

// Gradient ascent on the marginal log likelihood minus (l2/2)|phi|^2.
// Columns where every heuristic abstained carry no evidence and are dropped;
// with nothing left phi stays at its init.
LabelModelParams train_label_model(const LabelMatrix& lm,
                                   const LabelModelConfig& config = {});

// A pair's distribution over predicates plus the mass withheld when no
// predicate's posterior clears the threshold.
struct ProbabilisticLabel {
  std::string pair_id;
  std::vector<double> distribution;  // per predicate; all zero when abstained
  double abstain_mass = 0.0;

  bool abstained() const { return abstain_mass >= 1.0; }
  // Index of the largest entry, ties to the lowest index.
  std::size_t argmax() const;
};

// Shared combination rule: when max_p score_p >= tau the scores normalize to
// a distribution, otherwise the pair abstains entirely.
std::vector<ProbabilisticLabel> labels_from_scores(
    const std::vector<std::vector<double>>& scores_per_predicate,
    const std::vector<std::string>& pair_ids, double tau);

// Posterior per predicate from the per-predicate models, combined with the
// rule above. Matrices must agree on pair ids and column order.
std::vector<ProbabilisticLabel> aggregate_labels(
    const std::vector<LabelModelParams>& models,
    const std::vector<LabelMatrix>& matrices, double tau = 0.5);

// Baseline aggregation: per column, (+1 votes) / (non-abstain votes), 0.5
// when every heuristic abstained.
std::vector<double> majority_vote(const LabelMatrix& lm);

void write_labels_jsonl(std::ostream& out,
                        std::span<const ProbabilisticLabel> labels,
                        const Vocab& predicates);
std::vector<ProbabilisticLabel> read_labels_jsonl(std::istream& in,
                                                  const Vocab& predicates);

}  // namespace vrlabel
