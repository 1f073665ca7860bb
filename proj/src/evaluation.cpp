#include "vrlabel/evaluation.hpp"

#include <algorithm>
#include <iomanip>
#include <map>
#include <ostream>

#include <nlohmann/json.hpp>

#include "vrlabel/error.hpp"

namespace vrlabel {

using nlohmann::json;

EvalReport macro_prf1(std::span<const LabeledPair> pairs,
                      std::size_t num_predicates) {
  if (pairs.empty()) {
    throw ValidationError("macro_prf1: no pairs to evaluate");
  }
  std::vector<std::size_t> tp(num_predicates, 0), fp(num_predicates, 0),
      support(num_predicates, 0);
  std::size_t gold_pairs = 0;
  std::size_t correct = 0;
  for (const LabeledPair& pair : pairs) {
    for (const std::size_t g : pair.gold) ++support[g];
    const bool has_gold = !pair.gold.empty();
    if (has_gold) ++gold_pairs;
    if (!pair.predicted) continue;  // abstain: misses gold, no precision hit
    const std::size_t p = *pair.predicted;
    const bool hit =
        std::find(pair.gold.begin(), pair.gold.end(), p) != pair.gold.end();
    if (hit) {
      ++tp[p];
      ++correct;
    } else {
      ++fp[p];
    }
  }

  EvalReport report;
  report.per_predicate.resize(num_predicates);
  double sum_p = 0.0, sum_r = 0.0, sum_f1 = 0.0;
  std::size_t scored = 0;
  for (std::size_t p = 0; p < num_predicates; ++p) {
    PredicateMetrics& m = report.per_predicate[p];
    m.support = support[p];
    const std::size_t predicted_p = tp[p] + fp[p];
    m.precision = predicted_p > 0
                      ? static_cast<double>(tp[p]) / static_cast<double>(predicted_p)
                      : 0.0;
    m.recall = support[p] > 0
                   ? static_cast<double>(tp[p]) / static_cast<double>(support[p])
                   : 0.0;
    m.f1 = (m.precision + m.recall) > 0.0
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    if (support[p] > 0) {
      sum_p += m.precision;
      sum_r += m.recall;
      sum_f1 += m.f1;
      ++scored;
    }
  }
  if (scored > 0) {
    report.macro_precision = sum_p / static_cast<double>(scored);
    report.macro_recall = sum_r / static_cast<double>(scored);
    report.macro_f1 = sum_f1 / static_cast<double>(scored);
  }
  report.accuracy = gold_pairs > 0 ? static_cast<double>(correct) /
                                         static_cast<double>(gold_pairs)
                                   : 0.0;
  return report;
}

EvalReport macro_prf1(
    const std::vector<std::pair<std::string, std::optional<std::size_t>>>&
        predicted,
    const std::vector<std::pair<std::string, std::optional<std::size_t>>>& gold,
    std::size_t num_predicates) {
  std::map<std::string, std::optional<std::size_t>> gold_by_id(gold.begin(),
                                                               gold.end());
  std::vector<LabeledPair> joined;
  for (const auto& [id, label] : predicted) {
    const auto it = gold_by_id.find(id);
    if (it == gold_by_id.end()) continue;
    LabeledPair pair;
    pair.pair_id = id;
    pair.predicted = label;
    if (it->second) pair.gold.push_back(*it->second);
    joined.push_back(std::move(pair));
  }
  if (joined.empty()) {
    throw ValidationError("macro_prf1: predicted and gold ids do not overlap");
  }
  return macro_prf1(joined, num_predicates);
}

RecallReport predcls_recall_at_k(std::span<const ScoredPair> scores,
                                 std::span<const GoldRelationship> gold,
                                 std::vector<std::size_t> k_values) {
  std::sort(k_values.begin(), k_values.end());

  // Candidates grouped per image, in pair appearance order.
  struct Candidate {
    std::size_t pair_order;
    std::size_t predicate;
    double score;
  };
  std::map<std::string, std::vector<Candidate>> by_image;
  std::map<std::string, std::size_t> pair_rows;  // pair_id -> row index
  for (std::size_t row = 0; row < scores.size(); ++row) {
    const ScoredPair& sp = scores[row];
    pair_rows.emplace(sp.pair_id, row);
    auto& image = by_image[sp.image_id];
    for (std::size_t p = 0; p < sp.scores.size(); ++p) {
      image.push_back({row, p, sp.scores[p]});
    }
  }
  for (const GoldRelationship& rel : gold) {
    if (!pair_rows.contains(rel.pair_id)) {
      throw ValidationError("predcls_recall_at_k: no score row for gold pair " +
                            rel.pair_id);
    }
  }

  // Rank of each (pair, predicate) candidate inside its image.
  std::map<std::string, std::map<std::pair<std::size_t, std::size_t>,
                                 std::size_t>> rank_index;
  for (auto& [image_id, candidates] : by_image) {
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Candidate& a, const Candidate& b) {
                       return a.score > b.score;
                     });
    auto& ranks = rank_index[image_id];
    for (std::size_t r = 0; r < candidates.size(); ++r) {
      ranks[{candidates[r].pair_order, candidates[r].predicate}] = r;
    }
  }

  RecallReport report;
  report.k_values = k_values;
  report.recall_at_k.resize(k_values.size(), 0.0);
  if (gold.empty()) return report;
  for (std::size_t ki = 0; ki < k_values.size(); ++ki) {
    std::size_t hits = 0;
    for (const GoldRelationship& rel : gold) {
      const auto& ranks = rank_index[rel.image_id];
      const auto it = ranks.find({pair_rows[rel.pair_id], rel.predicate});
      if (it != ranks.end() && it->second < k_values[ki]) ++hits;
    }
    report.recall_at_k[ki] =
        static_cast<double>(hits) / static_cast<double>(gold.size());
  }
  return report;
}

json eval_report_to_json(const EvalReport& report, const Vocab& predicates) {
  json per = json::object();
  for (std::size_t p = 0; p < report.per_predicate.size(); ++p) {
    const PredicateMetrics& m = report.per_predicate[p];
    per[predicates.name(p)] = {{"precision", m.precision},
                               {"recall", m.recall},
                               {"f1", m.f1},
                               {"support", m.support}};
  }
  return json{{"per_predicate", std::move(per)},
              {"macro", {{"precision", report.macro_precision},
                         {"recall", report.macro_recall},
                         {"f1", report.macro_f1}}},
              {"accuracy_micro", report.accuracy}};
}

json recall_report_to_json(const RecallReport& report) {
  json out = json::object();
  for (std::size_t i = 0; i < report.k_values.size(); ++i) {
    out["recall@" + std::to_string(report.k_values[i])] =
        report.recall_at_k[i];
  }
  return out;
}

void write_eval_table(
    std::ostream& out,
    std::span<const std::pair<std::string, EvalReport>> rows) {
  out << std::left << std::setw(28) << "Model" << std::right << std::setw(8)
      << "Prec." << std::setw(8) << "Recall" << std::setw(8) << "F1"
      << std::setw(8) << "Acc." << '\n';
  out << std::string(60, '-') << '\n';
  out << std::fixed << std::setprecision(2);
  for (const auto& [name, report] : rows) {
    out << std::left << std::setw(28) << name << std::right << std::setw(8)
        << 100.0 * report.macro_precision << std::setw(8)
        << 100.0 * report.macro_recall << std::setw(8)
        << 100.0 * report.macro_f1 << std::setw(8) << 100.0 * report.accuracy
        << '\n';
  }
}

}  // namespace vrlabel
