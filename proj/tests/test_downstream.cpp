#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "test_util.hpp"
#include "vrlabel/downstream.hpp"
#include "vrlabel/error.hpp"

using vrlabel::ClassifierParams;
using vrlabel::noise_aware_loss;
using vrlabel::ProbabilisticLabel;
using vrlabel::TrainConfig;

namespace {

// Linearly separable two-class point cloud with confident soft labels.
struct SyntheticProblem {
  std::vector<std::vector<double>> features;
  std::vector<ProbabilisticLabel> labels;
  std::vector<std::size_t> truth;
};

SyntheticProblem separable_problem(std::uint64_t seed, std::size_t n,
                                   double confidence) {
  vrlabel::Rng rng(seed, "downstream/separable");
  SyntheticProblem problem;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t cls = rng.next_below(2);
    const double center = cls == 0 ? -2.0 : 2.0;
    problem.features.push_back(
        {center + 0.5 * rng.next_normal(), rng.next_normal()});
    ProbabilisticLabel label;
    label.pair_id = "p" + std::to_string(i);
    label.distribution = {cls == 0 ? confidence : 1.0 - confidence,
                          cls == 1 ? confidence : 1.0 - confidence};
    label.abstain_mass = 0.0;
    problem.labels.push_back(std::move(label));
    problem.truth.push_back(cls);
  }
  return problem;
}

}  // namespace

TEST_CASE("loss worked examples") {
  const std::vector<double> zero{0.0, 0.0, 0.0};
  const std::vector<double> v{1.5, -0.5};
  CHECK(noise_aware_loss(zero, v, 0.3) == doctest::Approx(std::log(2.0)));
  CHECK(noise_aware_loss(zero, v, 1.0) == doctest::Approx(std::log(2.0)));

  // p = 1 reduces to the plain logistic loss.
  const std::vector<double> theta{0.8, -0.2, 0.1};
  const double z = 0.8 * 1.5 - 0.2 * -0.5 + 0.1;
  CHECK(noise_aware_loss(theta, v, 1.0) ==
        doctest::Approx(std::log1p(std::exp(-z))).epsilon(1e-12));

  // p = 0.5, z = 1: hand-evaluated expectation.
  const std::vector<double> unit{1.0, 0.0};
  const std::vector<double> x{1.0};
  CHECK(noise_aware_loss(unit, x, 0.5) ==
        doctest::Approx(0.8132616).epsilon(1e-7));
}

TEST_CASE("loss is numerically stable for large margins") {
  const std::vector<double> theta{500.0, 0.0};
  const std::vector<double> v{1.0};
  CHECK(noise_aware_loss(theta, v, 1.0) == doctest::Approx(0.0).epsilon(1e-12));
  const double flipped = noise_aware_loss(theta, v, 0.0);
  CHECK(std::isfinite(flipped));
  CHECK(flipped == doctest::Approx(500.0));
}

TEST_CASE("loss is linear in the soft label") {
  vrlabel::Rng rng(11, "downstream/linear");
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> theta(4), v(3);
    for (auto& t : theta) t = rng.next_normal();
    for (auto& x : v) x = rng.next_normal();
    const double p = rng.next_double();
    const double blended = noise_aware_loss(theta, v, p);
    const double ends = p * noise_aware_loss(theta, v, 1.0) +
                        (1.0 - p) * noise_aware_loss(theta, v, 0.0);
    CHECK(blended == doctest::Approx(ends).epsilon(1e-12));
  }
}

TEST_CASE("loss gradient matches finite differences") {
  vrlabel::Rng rng(12, "downstream/gradient");
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<double> theta(5), v(4);
    for (auto& t : theta) t = 2.0 * rng.next_normal();
    for (auto& x : v) x = rng.next_normal();
    const double p = rng.next_double();
    const auto grad = vrlabel::noise_aware_loss_gradient(theta, v, p);
    const auto fd = testutil::finite_difference(
        [&](const std::vector<double>& t) {
          return noise_aware_loss(t, v, p);
        },
        theta);
    for (std::size_t i = 0; i < theta.size(); ++i) {
      CHECK(std::abs(grad[i] - fd[i]) <=
            1e-5 * std::max(1.0, std::abs(grad[i])));
    }
  }
}

TEST_CASE("training on separable data reaches high accuracy") {
  const auto problem = separable_problem(1, 300, 0.95);
  const auto params =
      vrlabel::train_classifier(problem.features, problem.labels, 2);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < problem.features.size(); ++i) {
    const auto scores = vrlabel::predict_scores(params, problem.features[i]);
    for (const double s : scores) {
      CHECK(s > 0.0);
      CHECK(s < 1.0);
    }
    const auto top = std::max_element(scores.begin(), scores.end()) -
                     scores.begin();
    if (static_cast<std::size_t>(top) == problem.truth[i]) ++hits;
  }
  CHECK(static_cast<double>(hits) / 300.0 >= 0.95);
}

TEST_CASE("zero weights score one half everywhere") {
  ClassifierParams params;
  params.weights = {{0.0, 0.0, 0.0}, {0.0, 0.0, 0.0}};
  const auto scores = vrlabel::predict_scores(params, std::vector<double>{3.0, -1.0});
  CHECK(scores[0] == 0.5);
  CHECK(scores[1] == 0.5);
  CHECK_THROWS_AS(vrlabel::predict_scores(params, std::vector<double>{1.0}),
                  vrlabel::ValidationError);
}

TEST_CASE("one-hot labels reduce to plain logistic regression") {
  // Independent reference: gradient descent on the textbook logistic loss
  // -log sigmoid(z) / -log sigmoid(-z), same step rule.
  const auto problem = separable_problem(2, 120, 1.0);
  TrainConfig config;
  config.epochs = 40;
  const auto params = vrlabel::train_classifier(problem.features,
                                                problem.labels, 2, config);

  const auto sigmoid = [](double x) {
    return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                    : std::exp(x) / (1.0 + std::exp(x));
  };
  const auto logistic_objective = [&](const std::vector<double>& theta,
                                      std::size_t head) {
    double total = 0.0;
    for (std::size_t i = 0; i < problem.features.size(); ++i) {
      double z = theta.back();
      for (std::size_t d = 0; d < 2; ++d) z += theta[d] * problem.features[i][d];
      const double target = problem.truth[i] == head ? 1.0 : 0.0;
      const double sp = z > 0.0 ? z + std::log1p(std::exp(-z))
                                : std::log1p(std::exp(z));
      total += target * (sp - z) + (1.0 - target) * sp;
    }
    total /= static_cast<double>(problem.features.size());
    double reg = 0.0;
    for (const double t : theta) reg += t * t;
    return total + 0.5 * config.l2 * reg;
  };

  for (std::size_t head = 0; head < 2; ++head) {
    std::vector<double> theta(3, 0.0);
    double step = config.step;
    double current = logistic_objective(theta, head);
    std::vector<double> trace{current};
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
      std::vector<double> g(3, 0.0);
      for (std::size_t i = 0; i < problem.features.size(); ++i) {
        double z = theta.back();
        for (std::size_t d = 0; d < 2; ++d) {
          z += theta[d] * problem.features[i][d];
        }
        const double target = problem.truth[i] == head ? 1.0 : 0.0;
        const double scale = sigmoid(z) - target;
        for (std::size_t d = 0; d < 2; ++d) g[d] += scale * problem.features[i][d];
        g[2] += scale;
      }
      for (std::size_t d = 0; d < 3; ++d) {
        g[d] = g[d] / static_cast<double>(problem.features.size()) +
               config.l2 * theta[d];
      }
      bool moved = false;
      for (int attempt = 0; attempt <= 20; ++attempt) {
        std::vector<double> proposal(3);
        for (std::size_t d = 0; d < 3; ++d) proposal[d] = theta[d] - step * g[d];
        const double candidate = logistic_objective(proposal, head);
        if (std::isfinite(candidate) && candidate <= current) {
          theta = proposal;
          current = candidate;
          moved = true;
          break;
        }
        step *= 0.5;
      }
      if (!moved) break;
      trace.push_back(current);
    }
    REQUIRE(params.traces[head].size() == trace.size());
    for (std::size_t e = 0; e < trace.size(); ++e) {
      CHECK(params.traces[head][e] == doctest::Approx(trace[e]).epsilon(1e-12));
    }
    for (std::size_t d = 0; d < 3; ++d) {
      CHECK(params.weights[head][d] == doctest::Approx(theta[d]).epsilon(1e-12));
    }
  }
}

TEST_CASE("loss trace never increases and training is deterministic") {
  const auto problem = separable_problem(3, 150, 0.9);
  TrainConfig a;
  a.seed = 1;
  TrainConfig b;
  b.seed = 99;
  const auto first = vrlabel::train_classifier(problem.features,
                                               problem.labels, 2, a);
  const auto second = vrlabel::train_classifier(problem.features,
                                                problem.labels, 2, b);
  for (std::size_t head = 0; head < 2; ++head) {
    const auto& trace = first.traces[head];
    for (std::size_t e = 1; e < trace.size(); ++e) {
      CHECK(trace[e] <= trace[e - 1]);
    }
    // Strictly convex objective: the optimum does not depend on the seed.
    for (std::size_t d = 0; d < 3; ++d) {
      CHECK(std::abs(first.weights[head][d] - second.weights[head][d]) <= 1e-4);
    }
  }
}

TEST_CASE("mini-batch training approaches the full-batch optimum") {
  const auto problem = separable_problem(4, 200, 0.9);
  TrainConfig full;
  full.epochs = 400;
  TrainConfig mini = full;
  mini.batch = 32;
  mini.seed = 5;
  const auto a = vrlabel::train_classifier(problem.features, problem.labels, 2,
                                           full);
  const auto b = vrlabel::train_classifier(problem.features, problem.labels, 2,
                                           mini);
  for (std::size_t head = 0; head < 2; ++head) {
    const auto& trace = b.traces[head];
    for (std::size_t e = 1; e < trace.size(); ++e) {
      CHECK(trace[e] <= trace[e - 1]);
    }
    for (std::size_t d = 0; d < 3; ++d) {
      CHECK(std::abs(a.weights[head][d] - b.weights[head][d]) <= 2e-2);
    }
  }
}

TEST_CASE("abstained pairs are excluded; an all-abstain set is an error") {
  const auto problem = separable_problem(5, 40, 1.0);
  auto labels = problem.labels;
  // Mark half the pairs abstained; they must not affect the fit.
  std::vector<std::vector<double>> kept_features;
  std::vector<ProbabilisticLabel> kept_labels;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (i % 2 == 0) {
      labels[i].abstain_mass = 1.0;
      labels[i].distribution.assign(2, 0.0);
    } else {
      kept_features.push_back(problem.features[i]);
      kept_labels.push_back(labels[i]);
    }
  }
  const auto with_abstains =
      vrlabel::train_classifier(problem.features, labels, 2);
  const auto without =
      vrlabel::train_classifier(kept_features, kept_labels, 2);
  for (std::size_t head = 0; head < 2; ++head) {
    for (std::size_t d = 0; d < 3; ++d) {
      CHECK(with_abstains.weights[head][d] ==
            doctest::Approx(without.weights[head][d]).epsilon(1e-12));
    }
  }

  for (auto& label : labels) {
    label.abstain_mass = 1.0;
    label.distribution.assign(2, 0.0);
  }
  CHECK_THROWS_AS(vrlabel::train_classifier(problem.features, labels, 2),
                  vrlabel::ValidationError);
}
