#include "vrlabel/label_model.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "vrlabel/error.hpp"
#include "vrlabel/optim.hpp"

namespace vrlabel {
namespace {

using nlohmann::json;

// log(1 + 2 cosh(a)), overflow-safe.
double log1p_2cosh(double a) {
  const double m = std::abs(a);
  return m + std::log1p(std::exp(-m) + std::exp(-2.0 * m));
}

// log(2 cosh(t)), overflow-safe.
double log_2cosh(double t) {
  const double m = std::abs(t);
  return m + std::log1p(std::exp(-2.0 * m));
}

// 2 sinh(a) / (1 + 2 cosh(a)), overflow-safe.
double partition_rate(double a) {
  const double m = std::abs(a);
  const double e1 = std::exp(-m);
  const double e2 = std::exp(-2.0 * m);
  const double r = (1.0 - e2) / (e1 + 1.0 + e2);
  return a < 0.0 ? -r : r;
}

// sigmoid(2t) computed so that the results for t and -t sum to exactly 1:
// the upper half is evaluated once and reflected (1 - p is exact for
// p in [0.5, 1]).
double posterior_from_dot(double t) {
  const double upper = 1.0 / (1.0 + std::exp(-2.0 * std::abs(t)));
  return t >= 0.0 ? upper : 1.0 - upper;
}

double column_dot(std::span<const double> phi, const LabelMatrix& lm,
                  std::size_t i) {
  double t = 0.0;
  for (std::size_t j = 0; j < lm.num_heuristics; ++j) {
    t += phi[j] * static_cast<double>(lm.at(j, i));
  }
  return t;
}

}  // namespace

double log_partition(std::span<const double> phi) {
  double out = std::log(2.0);
  for (const double p : phi) out += log1p_2cosh(p);
  return out;
}

double marginal_log_likelihood(std::span<const double> phi,
                               const LabelMatrix& lm) {
  if (phi.size() != lm.num_heuristics) {
    throw ValidationError("marginal_log_likelihood: phi length != J");
  }
  double out = 0.0;
  for (std::size_t i = 0; i < lm.num_pairs; ++i) {
    out += log_2cosh(column_dot(phi, lm, i));
  }
  return out - static_cast<double>(lm.num_pairs) * log_partition(phi);
}

std::vector<double> mll_gradient(std::span<const double> phi,
                                 const LabelMatrix& lm) {
  if (phi.size() != lm.num_heuristics) {
    throw ValidationError("mll_gradient: phi length != J");
  }
  std::vector<double> g(phi.size(), 0.0);
  for (std::size_t i = 0; i < lm.num_pairs; ++i) {
    const double t = std::tanh(column_dot(phi, lm, i));
    for (std::size_t j = 0; j < phi.size(); ++j) {
      g[j] += static_cast<double>(lm.at(j, i)) * t;
    }
  }
  const auto n = static_cast<double>(lm.num_pairs);
  for (std::size_t j = 0; j < phi.size(); ++j) {
    g[j] -= n * partition_rate(phi[j]);
  }
  return g;
}

double posterior(std::span<const double> phi,
                 std::span<const std::int8_t> column) {
  if (phi.size() != column.size()) {
    throw ValidationError("posterior: phi length != column length");
  }
  double t = 0.0;
  for (std::size_t j = 0; j < phi.size(); ++j) {
    t += phi[j] * static_cast<double>(column[j]);
  }
  return posterior_from_dot(t);
}

LabelModelParams train_label_model(const LabelMatrix& lm,
                                   const LabelModelConfig& config) {
  if (lm.num_pairs < 1) {
    throw ValidationError("train_label_model: empty label matrix");
  }
  const std::size_t J = lm.num_heuristics;

  // Keep only columns with at least one vote.
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < lm.num_pairs; ++i) {
    for (std::size_t j = 0; j < J; ++j) {
      if (lm.at(j, i) != 0) {
        kept.push_back(i);
        break;
      }
    }
  }
  LabelMatrix evidence;
  evidence.predicate = lm.predicate;
  evidence.num_heuristics = J;
  evidence.num_pairs = kept.size();
  evidence.entries.assign(J * kept.size(), 0);
  for (std::size_t col = 0; col < kept.size(); ++col) {
    for (std::size_t j = 0; j < J; ++j) {
      evidence.at(j, col) = lm.at(j, kept[col]);
    }
  }

  LabelModelParams params;
  params.predicate = lm.predicate;
  params.phi.assign(J, config.init);
  if (evidence.num_pairs == 0) return params;  // no evidence, stay at init

  auto value = [&](const std::vector<double>& phi) {
    double reg = 0.0;
    for (const double p : phi) reg += p * p;
    return marginal_log_likelihood(phi, evidence) - 0.5 * config.l2 * reg;
  };
  auto gradient = [&](const std::vector<double>& phi) {
    std::vector<double> g = mll_gradient(phi, evidence);
    for (std::size_t j = 0; j < g.size(); ++j) g[j] -= config.l2 * phi[j];
    return g;
  };
  OptResult result = ascend(std::move(params.phi), value, gradient,
                            config.step, config.epochs);
  params.phi = std::move(result.params);
  params.trace = std::move(result.trace);
  for (const double p : params.phi) {
    if (!std::isfinite(p)) {
      throw NumericError("train_label_model: non-finite phi after training");
    }
  }
  return params;
}

std::size_t ProbabilisticLabel::argmax() const {
  return static_cast<std::size_t>(
      std::max_element(distribution.begin(), distribution.end()) -
      distribution.begin());
}

std::vector<ProbabilisticLabel> labels_from_scores(
    const std::vector<std::vector<double>>& scores_per_predicate,
    const std::vector<std::string>& pair_ids, double tau) {
  const std::size_t num_predicates = scores_per_predicate.size();
  if (num_predicates == 0) {
    throw ValidationError("labels_from_scores: no predicates");
  }
  for (const auto& scores : scores_per_predicate) {
    if (scores.size() != pair_ids.size()) {
      throw ValidationError("labels_from_scores: score rows disagree on N");
    }
  }
  std::vector<ProbabilisticLabel> out(pair_ids.size());
  for (std::size_t i = 0; i < pair_ids.size(); ++i) {
    ProbabilisticLabel& label = out[i];
    label.pair_id = pair_ids[i];
    label.distribution.assign(num_predicates, 0.0);
    double best = 0.0;
    double total = 0.0;
    for (std::size_t p = 0; p < num_predicates; ++p) {
      const double s = scores_per_predicate[p][i];
      best = std::max(best, s);
      total += s;
    }
    if (best < tau || total <= 0.0) {
      label.abstain_mass = 1.0;
      continue;
    }
    for (std::size_t p = 0; p < num_predicates; ++p) {
      label.distribution[p] = scores_per_predicate[p][i] / total;
    }
  }
  return out;
}

std::vector<ProbabilisticLabel> aggregate_labels(
    const std::vector<LabelModelParams>& models,
    const std::vector<LabelMatrix>& matrices, double tau) {
  if (models.size() != matrices.size() || models.empty()) {
    throw ValidationError("aggregate_labels: models/matrices mismatch");
  }
  const std::vector<std::string>& ids = matrices[0].pair_ids;
  for (const LabelMatrix& lm : matrices) {
    if (lm.pair_ids != ids) {
      throw ValidationError("aggregate_labels: matrices disagree on pair ids");
    }
  }
  std::vector<std::vector<double>> scores(
      models.size(), std::vector<double>(ids.size(), 0.0));
  for (std::size_t p = 0; p < models.size(); ++p) {
    if (models[p].predicate != matrices[p].predicate) {
      throw ValidationError("aggregate_labels: model/matrix predicate mismatch");
    }
    const LabelMatrix& lm = matrices[p];
    const auto& phi = models[p].phi;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      double t = 0.0;
      for (std::size_t j = 0; j < lm.num_heuristics; ++j) {
        t += phi[j] * static_cast<double>(lm.at(j, i));
      }
      scores[p][i] = posterior_from_dot(t);
    }
  }
  return labels_from_scores(scores, ids, tau);
}

std::vector<double> majority_vote(const LabelMatrix& lm) {
  std::vector<double> out(lm.num_pairs, 0.5);
  for (std::size_t i = 0; i < lm.num_pairs; ++i) {
    double pos = 0.0;
    double voting = 0.0;
    for (std::size_t j = 0; j < lm.num_heuristics; ++j) {
      const int v = lm.at(j, i);
      if (v == 0) continue;
      voting += 1.0;
      if (v > 0) pos += 1.0;
    }
    if (voting > 0.0) out[i] = pos / voting;
  }
  return out;
}

void write_labels_jsonl(std::ostream& out,
                        std::span<const ProbabilisticLabel> labels,
                        const Vocab& predicates) {
  for (const ProbabilisticLabel& label : labels) {
    json line;
    line["pair_id"] = label.pair_id;
    json dist = json::object();
    if (!label.abstained()) {
      for (std::size_t p = 0; p < label.distribution.size(); ++p) {
        dist[predicates.name(p)] = label.distribution[p];
      }
    }
    line["dist"] = std::move(dist);
    line["abstain"] = label.abstain_mass;
    out << line.dump() << '\n';
  }
}

std::vector<ProbabilisticLabel> read_labels_jsonl(std::istream& in,
                                                  const Vocab& predicates) {
  std::vector<ProbabilisticLabel> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError("labels line " + std::to_string(line_no) + ": " +
                       e.what());
    }
    ProbabilisticLabel label;
    label.pair_id = j.at("pair_id").get<std::string>();
    label.abstain_mass = j.at("abstain").get<double>();
    label.distribution.assign(predicates.size(), 0.0);
    for (const auto& [name, value] : j.at("dist").items()) {
      const auto p = predicates.index(name);
      if (!p) {
        throw ParseError("labels line " + std::to_string(line_no) +
                         ": unknown predicate '" + name + "'");
      }
      label.distribution[*p] = value.get<double>();
    }
    out.push_back(std::move(label));
  }
  return out;
}

}  // namespace vrlabel
