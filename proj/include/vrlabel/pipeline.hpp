#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vrlabel/baselines.hpp"
#include "vrlabel/dataset.hpp"
#include "vrlabel/downstream.hpp"
#include "vrlabel/evaluation.hpp"
#include "vrlabel/heuristics.hpp"
#include "vrlabel/label_model.hpp"

namespace vrlabel {

enum class Method {
  kOurs,
  kMajorityVote,
  kSingleTree,
  kLabelPropagation,
  kFreq,
  kFreqOverlap,
};

Method method_from_string(const std::string& name);
std::string to_string(Method method);

struct AnalysisConfig {
  double bandwidth_quantile = 0.3;
  std::size_t importance_depth = 3;
};

struct PipelineConfig {
  std::filesystem::path dataset_path;
  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 7;
  Method method = Method::kOurs;
  std::size_t threads = 1;

  SplitOptions split;          // split.seed is overwritten by `seed`
  HeuristicConfig heuristics;
  LabelModelConfig label_model;
  double tau = 0.5;            // aggregation threshold
  TrainConfig classifier;
  PropagationConfig propagation;
  std::size_t single_tree_depth = 0;  // 0 = unbounded
  AnalysisConfig analysis;
  std::vector<std::size_t> k_values{20, 50, 100};
  std::optional<std::filesystem::path> export_features;
};

// Reads a config file; missing keys keep their defaults. `overrides` applies
// on top (same schema, used for command-line flags).
PipelineConfig config_from_json(const nlohmann::json& j);
PipelineConfig load_config(const std::filesystem::path& path,
                           const nlohmann::json& overrides);
// Echo of the semantic configuration. Excludes the thread cap, which must
// not affect any output byte.
nlohmann::json config_to_json(const PipelineConfig& config);

// Which pipeline stages to run; later stages read earlier stages' outputs
// from output_dir when those did not run in-process.
struct StageSet {
  bool label = true;
  bool train = true;
  bool eval = true;
  bool analyze = true;
};

struct PipelineReport {
  nlohmann::json config_echo;
  EvalReport label_quality;
  RecallReport predcls;
  std::vector<std::pair<std::string, double>> timings_ms;
  std::vector<std::string> outputs;  // file names under output_dir
  std::vector<std::string> warnings;
};

// Runs the requested stages end to end, writing labels.jsonl, phi.json,
// classifier.json, eval.json/eval.txt, subtypes.csv, fits.csv and report.json
// under output_dir. On a stage failure a FAILED marker file names the stage
// and cause; partial outputs are kept.
PipelineReport run_pipeline(const PipelineConfig& config,
                            const StageSet& stages = {});

}  // namespace vrlabel
