#include "vrlabel/downstream.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "vrlabel/error.hpp"
#include "vrlabel/optim.hpp"
#include "vrlabel/parallel.hpp"
#include "vrlabel/rng.hpp"

namespace vrlabel {
namespace {

using nlohmann::json;

// log(1 + exp(t)) without overflow.
double softplus(double t) {
  if (t > 0.0) return t + std::log1p(std::exp(-t));
  return std::log1p(std::exp(t));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double margin(std::span<const double> theta, std::span<const double> v) {
  if (theta.size() != v.size() + 1) {
    throw ValidationError("classifier: feature dimension mismatch (theta " +
                          std::to_string(theta.size()) + ", features " +
                          std::to_string(v.size()) + "+1)");
  }
  double z = theta[v.size()];  // bias
  for (std::size_t i = 0; i < v.size(); ++i) z += theta[i] * v[i];
  return z;
}

}  // namespace

double noise_aware_loss(std::span<const double> theta,
                        std::span<const double> v, double p_pos) {
  if (p_pos < 0.0 || p_pos > 1.0) {
    throw ValidationError("noise_aware_loss: p_pos must be in [0, 1]");
  }
  const double z = margin(theta, v);
  return p_pos * softplus(-z) + (1.0 - p_pos) * softplus(z);
}

std::vector<double> noise_aware_loss_gradient(std::span<const double> theta,
                                              std::span<const double> v,
                                              double p_pos) {
  const double scale = sigmoid(margin(theta, v)) - p_pos;
  std::vector<double> g(theta.size(), 0.0);
  for (std::size_t i = 0; i < v.size(); ++i) g[i] = scale * v[i];
  g[v.size()] = scale;
  return g;
}

namespace {

struct HeadProblem {
  const std::vector<std::vector<double>>& X;
  const std::vector<double>& p_pos;
  double l2;

  double objective(const std::vector<double>& theta) const {
    double total = 0.0;
    for (std::size_t i = 0; i < X.size(); ++i) {
      total += noise_aware_loss(theta, X[i], p_pos[i]);
    }
    total /= static_cast<double>(X.size());
    double reg = 0.0;
    for (const double t : theta) reg += t * t;
    return total + 0.5 * l2 * reg;
  }

  std::vector<double> gradient(const std::vector<double>& theta) const {
    std::vector<double> g(theta.size(), 0.0);
    for (std::size_t i = 0; i < X.size(); ++i) {
      const double scale = sigmoid(margin(theta, X[i])) - p_pos[i];
      const auto& v = X[i];
      for (std::size_t d = 0; d < v.size(); ++d) g[d] += scale * v[d];
      g[v.size()] += scale;
    }
    const auto n = static_cast<double>(X.size());
    for (std::size_t d = 0; d < g.size(); ++d) {
      g[d] = g[d] / n + l2 * theta[d];
    }
    return g;
  }
};

// Mini-batch epochs with a monotone acceptance rule on the full objective:
// an epoch that raises it is rolled back and retried with a halved step.
OptResult minibatch_descent(const HeadProblem& problem, std::size_t dim,
                            const TrainConfig& config, std::size_t head) {
  OptResult out;
  out.params.assign(dim, 0.0);
  double current = problem.objective(out.params);
  out.trace.push_back(current);
  double step = config.step;
  const std::size_t n = problem.X.size();

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    bool moved = false;
    for (std::size_t attempt = 0; attempt <= 20; ++attempt) {
      Rng rng(config.seed, "classifier/epoch", head * 1000003ull + epoch);
      std::vector<std::size_t> order(n);
      for (std::size_t i = 0; i < n; ++i) order[i] = i;
      rng.shuffle(order);

      std::vector<double> theta = out.params;
      std::vector<double> g(dim);
      for (std::size_t start = 0; start < n; start += config.batch) {
        const std::size_t stop = std::min(n, start + config.batch);
        std::fill(g.begin(), g.end(), 0.0);
        for (std::size_t k = start; k < stop; ++k) {
          const auto& v = problem.X[order[k]];
          const double scale =
              sigmoid(margin(theta, v)) - problem.p_pos[order[k]];
          for (std::size_t d = 0; d < v.size(); ++d) g[d] += scale * v[d];
          g[v.size()] += scale;
        }
        const auto m = static_cast<double>(stop - start);
        for (std::size_t d = 0; d < dim; ++d) {
          theta[d] -= step * (g[d] / m + problem.l2 * theta[d]);
        }
      }
      const double candidate = problem.objective(theta);
      if (std::isfinite(candidate) && candidate <= current) {
        out.params = std::move(theta);
        current = candidate;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
    out.trace.push_back(current);
  }
  return out;
}

}  // namespace

ClassifierParams train_classifier(
    const std::vector<std::vector<double>>& features,
    const std::vector<ProbabilisticLabel>& labels, std::size_t num_predicates,
    const TrainConfig& config, std::size_t threads) {
  if (features.size() != labels.size()) {
    throw ValidationError("train_classifier: features/labels length mismatch");
  }
  if (config.step <= 0.0 || config.epochs < 1) {
    throw ValidationError("train_classifier: step must be > 0, epochs >= 1");
  }
  std::vector<std::size_t> used;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!labels[i].abstained()) used.push_back(i);
  }
  if (used.empty()) {
    throw ValidationError(
        "train_classifier: every pair abstained; no training data");
  }
  std::vector<std::vector<double>> X;
  X.reserve(used.size());
  for (const std::size_t i : used) X.push_back(features[i]);
  const std::size_t dim = X[0].size() + 1;

  ClassifierParams params;
  params.weights.resize(num_predicates);
  params.traces.resize(num_predicates);
  parallel_for(num_predicates, threads, [&](std::size_t p) {
    std::vector<double> p_pos(used.size());
    for (std::size_t k = 0; k < used.size(); ++k) {
      p_pos[k] = labels[used[k]].distribution[p];
    }
    const HeadProblem problem{X, p_pos, config.l2};
    OptResult result;
    if (config.batch > 0 && config.batch < X.size()) {
      result = minibatch_descent(problem, dim, config, p);
    } else {
      // Monotone descent = ascent on the negated objective.
      result = ascend(
          std::vector<double>(dim, 0.0),
          [&](const std::vector<double>& t) { return -problem.objective(t); },
          [&](const std::vector<double>& t) {
            std::vector<double> g = problem.gradient(t);
            for (double& v : g) v = -v;
            return g;
          },
          config.step, config.epochs);
      for (double& v : result.trace) v = -v;
    }
    params.weights[p] = std::move(result.params);
    params.traces[p] = std::move(result.trace);
  });
  return params;
}

std::vector<double> predict_scores(const ClassifierParams& params,
                                   std::span<const double> v) {
  std::vector<double> scores(params.weights.size(), 0.0);
  for (std::size_t p = 0; p < params.weights.size(); ++p) {
    scores[p] = sigmoid(margin(params.weights[p], v));
  }
  return scores;
}

json classifier_to_json(const ClassifierParams& params,
                        const Vocab& predicates) {
  json weights = json::object();
  for (std::size_t p = 0; p < params.weights.size(); ++p) {
    weights[predicates.name(p)] = params.weights[p];
  }
  return json{{"weights", std::move(weights)}};
}

ClassifierParams classifier_from_json(const json& j, const Vocab& predicates) {
  ClassifierParams params;
  params.weights.resize(predicates.size());
  const json& weights = j.at("weights");
  for (std::size_t p = 0; p < predicates.size(); ++p) {
    const std::string& name = predicates.name(p);
    if (!weights.contains(name)) {
      throw ParseError("classifier file missing predicate '" + name + "'");
    }
    params.weights[p] = weights[name].get<std::vector<double>>();
  }
  return params;
}

}  // namespace vrlabel
