// Command-line front end: dataset generation plus the labeling pipeline and
// its individual stages, driven by a JSON config with flag overrides.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "vrlabel/dataset.hpp"
#include "vrlabel/error.hpp"
#include "vrlabel/pipeline.hpp"
#include "vrlabel/synthgen.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

struct CommonArgs {
  std::string config_path;
  std::string dataset;
  std::string output_dir;
  std::string method;
  std::int64_t seed = -1;
  std::int64_t n_labeled = -1;
  std::int64_t threads = -1;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file");
    cmd->add_option("--dataset", dataset, "dataset JSON path (overrides config)");
    cmd->add_option("--output-dir", output_dir, "output directory");
    cmd->add_option("--method", method,
                    "ours|majority_vote|single_tree|label_propagation|freq|"
                    "freq_overlap");
    cmd->add_option("--seed", seed, "root random seed");
    cmd->add_option("--n-labeled", n_labeled, "labeled examples per predicate");
    cmd->add_option("--threads", threads, "worker thread cap");
  }

  vrlabel::PipelineConfig resolve() const {
    json overrides = json::object();
    if (!dataset.empty()) overrides["dataset"] = dataset;
    if (!output_dir.empty()) overrides["output_dir"] = output_dir;
    if (!method.empty()) overrides["method"] = method;
    if (seed >= 0) overrides["seed"] = seed;
    if (n_labeled >= 0) overrides["split"]["n_labeled"] = n_labeled;
    if (threads >= 0) overrides["threads"] = threads;
    if (config_path.empty()) {
      return vrlabel::config_from_json(overrides);
    }
    return vrlabel::load_config(config_path, overrides);
  }
};

int run_stages(const CommonArgs& args, const vrlabel::StageSet& stages) {
  vrlabel::PipelineConfig config;
  try {
    config = args.resolve();
    if (config.dataset_path.empty()) {
      std::cerr << "error: no dataset given (use --dataset or a config file)\n";
      return kExitUsage;
    }
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  }
  try {
    const vrlabel::PipelineReport report = vrlabel::run_pipeline(config, stages);
    std::cout << "wrote " << report.outputs.size() << " files to "
              << config.output_dir.string() << '\n';
    return 0;
  } catch (const vrlabel::NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
}

int run_generate(const std::string& spec_path, const std::string& builtin,
                 std::size_t planted_k, std::int64_t seed,
                 const std::string& out_path, const std::string& manifest_path) {
  vrlabel::SynthSpec spec;
  try {
    if (!spec_path.empty()) {
      std::ifstream in(spec_path);
      if (!in) {
        std::cerr << "error: cannot open spec file " << spec_path << '\n';
        return kExitUsage;
      }
      spec = vrlabel::synth_spec_from_json(json::parse(in));
    } else if (builtin == "acceptance") {
      spec = vrlabel::acceptance_spec();
    } else if (builtin == "planted") {
      spec = vrlabel::planted_cluster_spec(planted_k, 0);
    } else {
      std::cerr << "error: give --spec FILE or --builtin acceptance|planted\n";
      return kExitUsage;
    }
    if (seed >= 0) spec.seed = static_cast<std::uint64_t>(seed);
  } catch (const std::exception& e) {
    std::cerr << "spec error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    const vrlabel::SynthResult result = vrlabel::generate(spec);
    vrlabel::save_dataset(result.dataset, out_path);
    if (!manifest_path.empty()) {
      std::ofstream out(manifest_path);
      out << result.manifest.dump(2) << '\n';
    }
    std::cout << "generated " << result.dataset.images.size() << " images, "
              << result.dataset.relationship_count() << " relationships ("
              << result.dataset.predicates.size() << " predicates)\n";
    return 0;
  } catch (const vrlabel::NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weakly supervised labeling of visual relationships"};
  app.require_subcommand(1);

  // generate
  auto* generate = app.add_subcommand("generate", "write a synthetic dataset");
  std::string spec_path, builtin, gen_out = "dataset.json", gen_manifest;
  std::int64_t gen_seed = -1;
  std::size_t planted_k = 3;
  generate->add_option("--spec", spec_path, "synth spec JSON");
  generate->add_option("--builtin", builtin, "acceptance | planted");
  generate->add_option("--k", planted_k, "subtype count for --builtin planted");
  generate->add_option("--seed", gen_seed, "generator seed");
  generate->add_option("--out", gen_out, "dataset output path");
  generate->add_option("--manifest", gen_manifest, "manifest output path");

  auto* pipeline = app.add_subcommand("pipeline", "run every stage");
  auto* label = app.add_subcommand("label", "generate probabilistic labels");
  auto* train = app.add_subcommand("train", "train the downstream classifier");
  auto* eval = app.add_subcommand("eval", "evaluate labels and classifier");
  auto* analyze = app.add_subcommand("analyze", "subtype and correlation reports");
  CommonArgs pipeline_args, label_args, train_args, eval_args, analyze_args;
  pipeline_args.attach(pipeline);
  label_args.attach(label);
  train_args.attach(train);
  eval_args.attach(eval);
  analyze_args.attach(analyze);

  CLI11_PARSE(app, argc, argv);

  if (generate->parsed()) {
    return run_generate(spec_path, builtin, planted_k, gen_seed, gen_out,
                        gen_manifest);
  }
  if (pipeline->parsed()) {
    return run_stages(pipeline_args, {true, true, true, true});
  }
  if (label->parsed()) {
    return run_stages(label_args, {true, false, false, false});
  }
  if (train->parsed()) {
    return run_stages(train_args, {false, true, false, false});
  }
  if (eval->parsed()) {
    return run_stages(eval_args, {false, false, true, false});
  }
  if (analyze->parsed()) {
    return run_stages(analyze_args, {false, false, false, true});
  }
  return kExitUsage;
}
