#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "vrlabel/dataset.hpp"

namespace vrlabel {

struct PredicateMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct EvalReport {
  std::vector<PredicateMetrics> per_predicate;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  // Micro fraction of gold-bearing pairs whose prediction matches the gold;
  // an abstained gold pair counts as a miss.
  double accuracy = 0.0;
};

// One row per pair: the hard predicted label (nullopt = abstain) and the gold
// predicates (empty = pair has no relationship). Rows join on pair_id.
struct LabeledPair {
  std::string pair_id;
  std::optional<std::size_t> predicted;
  std::vector<std::size_t> gold;
};

// One-vs-rest precision/recall/F1 per predicate over the joined pairs:
// abstains are excluded from precision counts but still miss their gold
// predicate. Macro metrics average predicates with support > 0.
EvalReport macro_prf1(std::span<const LabeledPair> pairs,
                      std::size_t num_predicates);

// Convenience overload joining separate predicted/gold lists on pair_id.
// Throws when the id sets do not intersect.
EvalReport macro_prf1(
    const std::vector<std::pair<std::string, std::optional<std::size_t>>>&
        predicted,
    const std::vector<std::pair<std::string, std::optional<std::size_t>>>& gold,
    std::size_t num_predicates);

struct ScoredPair {
  std::string pair_id;
  std::string image_id;
  std::vector<double> scores;  // per predicate
};

struct GoldRelationship {
  std::string pair_id;
  std::string image_id;
  std::size_t predicate = 0;
};

struct RecallReport {
  std::vector<std::size_t> k_values;
  std::vector<double> recall_at_k;
};

// Predicate-classification recall: per image, every (pair, predicate)
// candidate is ranked by score (ties by pair appearance order, then predicate
// index); recall@K counts the gold relationships inside the per-image top K.
RecallReport predcls_recall_at_k(std::span<const ScoredPair> scores,
                                 std::span<const GoldRelationship> gold,
                                 std::vector<std::size_t> k_values);

nlohmann::json eval_report_to_json(const EvalReport& report,
                                   const Vocab& predicates);
nlohmann::json recall_report_to_json(const RecallReport& report);

// Plain-text table, one row per method: Prec. / Recall / F1 / Acc. columns
// (values in percent).
void write_eval_table(std::ostream& out,
                      std::span<const std::pair<std::string, EvalReport>> rows);

}  // namespace vrlabel
