#include "vrlabel/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "vrlabel/analysis.hpp"
#include "vrlabel/error.hpp"
#include "vrlabel/parallel.hpp"

namespace vrlabel {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

Method parse_method(const std::string& name) { return method_from_string(name); }

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw ValidationError("cannot write output file: " + path.string());
  }
  return out;
}

std::vector<ProbabilisticLabel> wrap_distributions(
    std::vector<std::vector<double>> distributions,
    const std::vector<std::string>& ids) {
  std::vector<ProbabilisticLabel> out(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out[i] = {ids[i], std::move(distributions[i]), 0.0};
  }
  return out;
}

std::string feature_name(std::size_t index, const Vocab& categories) {
  if (index < kSpatialDim) return "f" + std::to_string(index + 1);
  index -= kSpatialDim;
  if (index < categories.size()) return "subj:" + categories.name(index);
  return "obj:" + categories.name(index - categories.size());
}

struct StageTimer {
  std::vector<std::pair<std::string, double>>* sink;
  std::string* current;

  template <typename Fn>
  auto run(const std::string& name, Fn&& fn) {
    *current = name;
    const auto start = std::chrono::steady_clock::now();
    if constexpr (std::is_void_v<decltype(fn())>) {
      fn();
      finish(name, start);
    } else {
      auto result = fn();
      finish(name, start);
      return result;
    }
  }

  void finish(const std::string& name,
              std::chrono::steady_clock::time_point start) {
    const double ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - start)
                          .count();
    sink->push_back({name, ms});
    std::cerr << "[" << name << "] " << ms << " ms\n";
  }
};

}  // namespace

Method method_from_string(const std::string& name) {
  if (name == "ours") return Method::kOurs;
  if (name == "majority_vote") return Method::kMajorityVote;
  if (name == "single_tree") return Method::kSingleTree;
  if (name == "label_propagation") return Method::kLabelPropagation;
  if (name == "freq") return Method::kFreq;
  if (name == "freq_overlap") return Method::kFreqOverlap;
  throw ValidationError("unknown method '" + name + "'");
}

std::string to_string(Method method) {
  switch (method) {
    case Method::kOurs:
      return "ours";
    case Method::kMajorityVote:
      return "majority_vote";
    case Method::kSingleTree:
      return "single_tree";
    case Method::kLabelPropagation:
      return "label_propagation";
    case Method::kFreq:
      return "freq";
    case Method::kFreqOverlap:
      return "freq_overlap";
  }
  return "?";
}

PipelineConfig config_from_json(const json& j) {
  PipelineConfig config;
  if (j.contains("dataset")) config.dataset_path = j["dataset"].get<std::string>();
  if (j.contains("output_dir")) {
    config.output_dir = j["output_dir"].get<std::string>();
  }
  config.seed = j.value("seed", config.seed);
  if (j.contains("method")) {
    config.method = parse_method(j["method"].get<std::string>());
  }
  config.threads = j.value("threads", config.threads);
  if (config.threads < 1) config.threads = 1;

  if (j.contains("split")) {
    const json& js = j["split"];
    config.split.n_labeled = js.value("n_labeled", config.split.n_labeled);
    config.split.holdout_fraction =
        js.value("holdout_fraction", config.split.holdout_fraction);
    config.split.negative_ratio =
        js.value("negative_ratio", config.split.negative_ratio);
  }
  if (j.contains("heuristics")) {
    const json& jh = j["heuristics"];
    if (jh.contains("depth_grid")) {
      config.heuristics.depth_grid =
          jh["depth_grid"].get<std::vector<std::size_t>>();
    }
    if (jh.contains("modes")) {
      config.heuristics.modes.clear();
      for (const auto& m : jh["modes"]) {
        config.heuristics.modes.push_back(
            feature_mode_from_string(m.get<std::string>()));
      }
    }
    if (jh.contains("abstain_threshold") && !jh["abstain_threshold"].is_null()) {
      config.heuristics.abstain_threshold = jh["abstain_threshold"].get<double>();
    }
    config.heuristics.min_leaf = jh.value("min_leaf", config.heuristics.min_leaf);
  }
  if (j.contains("label_model")) {
    const json& jm = j["label_model"];
    config.label_model.init = jm.value("init", config.label_model.init);
    config.label_model.step = jm.value("step", config.label_model.step);
    config.label_model.epochs = jm.value("epochs", config.label_model.epochs);
    config.label_model.l2 = jm.value("l2", config.label_model.l2);
    config.tau = jm.value("tau", config.tau);
  }
  if (j.contains("classifier")) {
    const json& jc = j["classifier"];
    config.classifier.step = jc.value("step", config.classifier.step);
    config.classifier.epochs = jc.value("epochs", config.classifier.epochs);
    config.classifier.l2 = jc.value("l2", config.classifier.l2);
    config.classifier.batch = jc.value("batch", config.classifier.batch);
  }
  if (j.contains("propagation")) {
    const json& jp = j["propagation"];
    config.propagation.k_neighbors =
        jp.value("k_neighbors", config.propagation.k_neighbors);
    if (jp.contains("kernel_bandwidth") && jp["kernel_bandwidth"].is_number()) {
      config.propagation.kernel_bandwidth = jp["kernel_bandwidth"].get<double>();
    }
    config.propagation.max_iterations =
        jp.value("max_iterations", config.propagation.max_iterations);
    config.propagation.tolerance =
        jp.value("tolerance", config.propagation.tolerance);
    config.propagation.clamp = jp.value("clamp", config.propagation.clamp);
  }
  if (j.contains("single_tree")) {
    config.single_tree_depth =
        j["single_tree"].value("max_depth", config.single_tree_depth);
  }
  if (j.contains("analysis")) {
    const json& ja = j["analysis"];
    config.analysis.bandwidth_quantile =
        ja.value("bandwidth_quantile", config.analysis.bandwidth_quantile);
    config.analysis.importance_depth =
        ja.value("importance_depth", config.analysis.importance_depth);
  }
  if (j.contains("eval") && j["eval"].contains("k_values")) {
    config.k_values = j["eval"]["k_values"].get<std::vector<std::size_t>>();
  }
  if (j.contains("export_features") && !j["export_features"].is_null()) {
    config.export_features = j["export_features"].get<std::string>();
  }
  return config;
}

PipelineConfig load_config(const fs::path& path, const json& overrides) {
  std::ifstream in(path);
  if (!in) {
    throw ParseError("cannot open config file: " + path.string());
  }
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError("invalid JSON in config " + path.string() + ": " + e.what());
  }
  j.merge_patch(overrides);
  return config_from_json(j);
}

json config_to_json(const PipelineConfig& config) {
  json j;
  j["dataset"] = config.dataset_path.string();
  j["seed"] = config.seed;
  j["method"] = to_string(config.method);
  j["split"] = {{"n_labeled", config.split.n_labeled},
                {"holdout_fraction", config.split.holdout_fraction},
                {"negative_ratio", config.split.negative_ratio}};
  json modes = json::array();
  for (const FeatureMode m : config.heuristics.modes) {
    modes.push_back(to_string(m));
  }
  j["heuristics"] = {{"depth_grid", config.heuristics.depth_grid},
                     {"modes", std::move(modes)},
                     {"min_leaf", config.heuristics.min_leaf}};
  if (config.heuristics.abstain_threshold) {
    j["heuristics"]["abstain_threshold"] = *config.heuristics.abstain_threshold;
  }
  j["label_model"] = {{"init", config.label_model.init},
                      {"step", config.label_model.step},
                      {"epochs", config.label_model.epochs},
                      {"l2", config.label_model.l2},
                      {"tau", config.tau}};
  j["classifier"] = {{"step", config.classifier.step},
                     {"epochs", config.classifier.epochs},
                     {"l2", config.classifier.l2},
                     {"batch", config.classifier.batch}};
  j["propagation"] = {{"k_neighbors", config.propagation.k_neighbors},
                      {"max_iterations", config.propagation.max_iterations},
                      {"tolerance", config.propagation.tolerance},
                      {"clamp", config.propagation.clamp}};
  if (config.propagation.kernel_bandwidth) {
    j["propagation"]["kernel_bandwidth"] = *config.propagation.kernel_bandwidth;
  }
  j["single_tree"] = {{"max_depth", config.single_tree_depth}};
  j["analysis"] = {{"bandwidth_quantile", config.analysis.bandwidth_quantile},
                   {"importance_depth", config.analysis.importance_depth}};
  j["eval"] = {{"k_values", config.k_values}};
  return j;
}

namespace {

// Combined features with the spatial block standardized over all rows and the
// one-hot block left unscaled; used by label propagation.
void standardize_spatial_block(std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return;
  const auto n = static_cast<double>(rows.size());
  for (std::size_t d = 0; d < kSpatialDim; ++d) {
    double mean = 0.0;
    for (const auto& row : rows) mean += row[d];
    mean /= n;
    double var = 0.0;
    for (const auto& row : rows) {
      const double c = row[d] - mean;
      var += c * c;
    }
    const double sd = std::sqrt(var / n);
    for (auto& row : rows) {
      row[d] = sd > 0.0 ? (row[d] - mean) / sd : 0.0;
    }
  }
}

struct LabelArtifacts {
  std::vector<ProbabilisticLabel> labels;
  std::optional<HeuristicSet> heuristics;
  std::vector<LabelMatrix> matrices;
  std::vector<LabelModelParams> models;
};

LabelArtifacts make_labels(const PipelineConfig& config,
                           const SceneGraphDataset& ds,
                           const SplitDataset& split,
                           const PairFeatureSet& unlabeled_features,
                           std::vector<std::string>* warnings) {
  const std::size_t num_categories = ds.categories.size();
  const std::size_t num_predicates = ds.predicates.size();
  LabelArtifacts artifacts;

  switch (config.method) {
    case Method::kOurs:
    case Method::kMajorityVote: {
      artifacts.heuristics = generate_heuristics(split, num_categories,
                                                 num_predicates,
                                                 config.heuristics);
      for (const std::string& w : artifacts.heuristics->warnings) {
        warnings->push_back(w);
      }
      const auto votes = heuristic_votes(*artifacts.heuristics,
                                         unlabeled_features);
      artifacts.matrices.resize(num_predicates);
      parallel_for(num_predicates, config.threads, [&](std::size_t p) {
        artifacts.matrices[p] = label_matrix_from_votes(
            votes, unlabeled_features.pair_ids, p,
            artifacts.heuristics->abstain_threshold);
      });
      if (config.method == Method::kOurs) {
        artifacts.models.resize(num_predicates);
        parallel_for(num_predicates, config.threads, [&](std::size_t p) {
          artifacts.models[p] =
              train_label_model(artifacts.matrices[p], config.label_model);
        });
        artifacts.labels =
            aggregate_labels(artifacts.models, artifacts.matrices, config.tau);
      } else {
        std::vector<std::vector<double>> scores(num_predicates);
        for (std::size_t p = 0; p < num_predicates; ++p) {
          scores[p] = majority_vote(artifacts.matrices[p]);
        }
        artifacts.labels = labels_from_scores(
            scores, unlabeled_features.pair_ids, config.tau);
      }
      break;
    }
    case Method::kSingleTree: {
      artifacts.labels = wrap_distributions(
          single_tree_labeler(split, num_categories, num_predicates,
                              split.unlabeled, config.single_tree_depth),
          unlabeled_features.pair_ids);
      break;
    }
    case Method::kLabelPropagation: {
      std::vector<std::vector<double>> all_rows;
      std::vector<std::size_t> labels;
      for (std::size_t p = 0; p < split.labeled.size(); ++p) {
        for (const LabeledRelationship& rel : split.labeled[p]) {
          all_rows.push_back(
              featurize(rel.pair, num_categories, FeatureMode::kCombined));
          labels.push_back(p);
        }
      }
      const std::size_t n_labeled = all_rows.size();
      for (const ObjectPair& pair : split.unlabeled) {
        all_rows.push_back(
            featurize(pair, num_categories, FeatureMode::kCombined));
      }
      standardize_spatial_block(all_rows);
      std::vector<std::vector<double>> labeled_rows(
          all_rows.begin(), all_rows.begin() + static_cast<std::ptrdiff_t>(n_labeled));
      std::vector<std::vector<double>> unlabeled_rows(
          all_rows.begin() + static_cast<std::ptrdiff_t>(n_labeled), all_rows.end());
      PropagationResult result =
          label_propagation(labeled_rows, labels, num_predicates,
                            unlabeled_rows, config.propagation);
      for (const std::string& w : result.warnings) warnings->push_back(w);
      artifacts.labels = wrap_distributions(std::move(result.distributions),
                                            unlabeled_features.pair_ids);
      break;
    }
    case Method::kFreq:
    case Method::kFreqOverlap: {
      artifacts.labels = wrap_distributions(
          frequency_baseline(split, split.unlabeled, num_predicates,
                             config.method == Method::kFreqOverlap),
          unlabeled_features.pair_ids);
      break;
    }
  }
  return artifacts;
}

}  // namespace

PipelineReport run_pipeline(const PipelineConfig& config,
                            const StageSet& stages) {
  fs::create_directories(config.output_dir);
  const fs::path failed_marker = config.output_dir / "FAILED";
  std::error_code ec;
  fs::remove(failed_marker, ec);

  PipelineReport report;
  report.config_echo = config_to_json(config);
  std::string current_stage = "load";
  StageTimer timer{&report.timings_ms, &current_stage};

  auto add_output = [&](const std::string& name) {
    report.outputs.push_back(name);
  };

  try {
    // Data and deterministic split; every later stage derives from these.
    SceneGraphDataset ds = timer.run(
        "load", [&] { return load_dataset(config.dataset_path); });
    SplitOptions split_options = config.split;
    split_options.seed = config.seed;
    SplitDataset split = timer.run(
        "split", [&] { return split_limited(ds, split_options); });
    for (const std::string& w : split.warnings) {
      report.warnings.push_back(w);
      std::cerr << "warning: " << w << '\n';
    }

    const std::size_t num_categories = ds.categories.size();
    const std::size_t num_predicates = ds.predicates.size();
    PairFeatureSet unlabeled_features = timer.run("features", [&] {
      return compute_pair_features(split.unlabeled, num_categories);
    });

    std::vector<ProbabilisticLabel> labels;
    if (stages.label) {
      LabelArtifacts artifacts = timer.run("label", [&] {
        return make_labels(config, ds, split, unlabeled_features,
                           &report.warnings);
      });
      labels = std::move(artifacts.labels);
      {
        auto out = open_output(config.output_dir / "labels.jsonl");
        write_labels_jsonl(out, labels, ds.predicates);
        add_output("labels.jsonl");
      }
      if (artifacts.heuristics) {
        auto out = open_output(config.output_dir / "heuristics.json");
        out << artifacts.heuristics->to_json().dump(2) << '\n';
        add_output("heuristics.json");
        json matrices = json::array();
        for (const LabelMatrix& lm : artifacts.matrices) {
          json jm = label_matrix_to_json(lm);
          jm["predicate_name"] = ds.predicates.name(lm.predicate);
          matrices.push_back(std::move(jm));
        }
        auto mout = open_output(config.output_dir / "matrices.json");
        mout << matrices.dump() << '\n';
        add_output("matrices.json");
      }
      if (!artifacts.models.empty()) {
        json phi = json::object();
        for (const LabelModelParams& model : artifacts.models) {
          phi[ds.predicates.name(model.predicate)] = model.phi;
        }
        auto out = open_output(config.output_dir / "phi.json");
        out << phi.dump(2) << '\n';
        add_output("phi.json");
      }
      if (config.export_features) {
        auto out = open_output(*config.export_features);
        write_features_csv(out, split.unlabeled, num_categories);
      }
    } else {
      std::ifstream in(config.output_dir / "labels.jsonl");
      if (!in) {
        throw ValidationError("labels.jsonl not found in " +
                              config.output_dir.string() +
                              "; run the label stage first");
      }
      labels = read_labels_jsonl(in, ds.predicates);
      if (labels.size() != split.unlabeled.size()) {
        throw ValidationError("labels.jsonl does not match the split (" +
                              std::to_string(labels.size()) + " rows, " +
                              std::to_string(split.unlabeled.size()) +
                              " unlabeled pairs)");
      }
    }

    ClassifierParams classifier;
    const bool need_classifier = stages.train || stages.eval;
    if (stages.train) {
      classifier = timer.run("train", [&] {
        std::vector<std::vector<double>> features;
        std::vector<ProbabilisticLabel> train_labels;
        for (std::size_t p = 0; p < split.labeled.size(); ++p) {
          for (const LabeledRelationship& rel : split.labeled[p]) {
            features.push_back(
                featurize(rel.pair, num_categories, FeatureMode::kCombined));
            ProbabilisticLabel one_hot;
            one_hot.pair_id = rel.pair.pair_id();
            one_hot.distribution.assign(num_predicates, 0.0);
            one_hot.distribution[p] = 1.0;
            train_labels.push_back(std::move(one_hot));
          }
        }
        for (std::size_t i = 0; i < split.unlabeled.size(); ++i) {
          features.push_back(featurize(split.unlabeled[i], num_categories,
                                       FeatureMode::kCombined));
          train_labels.push_back(labels[i]);
        }
        return train_classifier(features, train_labels, num_predicates,
                                config.classifier, config.threads);
      });
      auto out = open_output(config.output_dir / "classifier.json");
      out << classifier_to_json(classifier, ds.predicates).dump(2) << '\n';
      add_output("classifier.json");
    } else if (need_classifier || stages.eval) {
      std::ifstream in(config.output_dir / "classifier.json");
      if (stages.eval) {
        if (!in) {
          throw ValidationError("classifier.json not found in " +
                                config.output_dir.string() +
                                "; run the train stage first");
        }
        classifier = classifier_from_json(json::parse(in), ds.predicates);
      }
    }

    const auto gold = gold_pair_labels(ds);
    auto label_quality_eval = [&] {
      std::vector<LabeledPair> rows;
      rows.reserve(split.unlabeled.size());
      for (std::size_t i = 0; i < split.unlabeled.size(); ++i) {
        LabeledPair row;
        row.pair_id = split.unlabeled[i].pair_id();
        if (!labels[i].abstained()) row.predicted = labels[i].argmax();
        const auto it = gold.find(row.pair_id);
        if (it != gold.end()) row.gold = it->second;
        rows.push_back(std::move(row));
      }
      return macro_prf1(rows, num_predicates);
    };

    bool have_eval = false;
    if (stages.eval) {
      timer.run("eval", [&] {
        report.label_quality = label_quality_eval();

        // PREDCLS scoring covers every pair the pipeline sees (unlabeled pool
        // plus holdout); gold relationships come from the holdout only.
        std::vector<ScoredPair> scored;
        std::set<std::string> seen;
        auto add_scored = [&](const ObjectPair& pair) {
          if (!seen.insert(pair.pair_id()).second) return;
          scored.push_back(
              {pair.pair_id(), pair.image_id,
               predict_scores(classifier,
                              featurize(pair, num_categories,
                                        FeatureMode::kCombined))});
        };
        for (const ObjectPair& pair : split.unlabeled) add_scored(pair);
        for (const LabeledRelationship& rel : split.eval_holdout) {
          add_scored(rel.pair);
        }
        std::vector<GoldRelationship> gold_rels;
        gold_rels.reserve(split.eval_holdout.size());
        for (const LabeledRelationship& rel : split.eval_holdout) {
          gold_rels.push_back(
              {rel.pair.pair_id(), rel.pair.image_id, rel.predicate});
        }
        report.predcls.k_values = config.k_values;
        report.predcls.recall_at_k.assign(config.k_values.size(), 0.0);
        if (!gold_rels.empty()) {
          report.predcls =
              predcls_recall_at_k(scored, gold_rels, config.k_values);
        }

        json eval_out;
        eval_out["label_quality"] =
            eval_report_to_json(report.label_quality, ds.predicates);
        eval_out["predcls"] = recall_report_to_json(report.predcls);
        auto out = open_output(config.output_dir / "eval.json");
        out << eval_out.dump(2) << '\n';
        add_output("eval.json");

        const std::pair<std::string, EvalReport> row{to_string(config.method),
                                                     report.label_quality};
        auto table = open_output(config.output_dir / "eval.txt");
        write_eval_table(table, std::span(&row, 1));
        add_output("eval.txt");

        auto sout = open_output(config.output_dir / "scores.jsonl");
        for (const ScoredPair& sp : scored) {
          json line;
          line["pair_id"] = sp.pair_id;
          json jscores = json::object();
          for (std::size_t p = 0; p < sp.scores.size(); ++p) {
            jscores[ds.predicates.name(p)] = sp.scores[p];
          }
          line["scores"] = std::move(jscores);
          sout << line.dump() << '\n';
        }
        add_output("scores.jsonl");
      });
      have_eval = true;
    }

    if (stages.analyze) {
      timer.run("analyze", [&] {
        if (!have_eval) report.label_quality = label_quality_eval();

        const auto counts = ds.per_predicate_counts();
        std::vector<std::optional<SubtypeReport>> subtype_reports(
            num_predicates);
        parallel_for(num_predicates, config.threads, [&](std::size_t p) {
          if (counts[p] == 0) return;
          subtype_reports[p] = count_subtypes(
              ds, p, config.analysis.bandwidth_quantile);
        });
        {
          auto out = open_output(config.output_dir / "subtypes.csv");
          out << "predicate,spatial_subtypes,categorical_subtypes,"
                 "category_union,instances,bandwidth\n";
          for (std::size_t p = 0; p < num_predicates; ++p) {
            if (!subtype_reports[p]) continue;
            const SubtypeReport& r = *subtype_reports[p];
            out << ds.predicates.name(p) << ',' << r.spatial_subtypes << ','
                << r.categorical_subtypes << ',' << r.category_union_count
                << ',' << r.instances_used << ',' << r.bandwidth << '\n';
          }
          add_output("subtypes.csv");
        }

        const ComplexitySeries series = complexity_series(
            ds, split, config.analysis.bandwidth_quantile);
        const std::vector<std::pair<std::string, const std::vector<double>*>>
            x_series = {{"train_subtypes", &series.train_subtypes},
                        {"unlabeled_subtypes", &series.unlabeled_subtypes},
                        {"labeled_proportion", &series.labeled_proportion}};
        std::vector<std::pair<std::string, std::vector<double>>> metrics{
            {"f1", {}}, {"recall", {}}};
        for (std::size_t p = 0; p < num_predicates; ++p) {
          metrics[0].second.push_back(report.label_quality.per_predicate[p].f1);
          metrics[1].second.push_back(
              report.label_quality.per_predicate[p].recall);
        }

        auto fits = open_output(config.output_dir / "fits.csv");
        auto points = open_output(config.output_dir / "fits_points.csv");
        fits << "series,metric,slope,intercept,r_squared,n\n";
        points << "series,metric,predicate,x,y\n";
        for (const auto& [sname, xs] : x_series) {
          for (const auto& [mname, ys] : metrics) {
            std::vector<double> fit_x, fit_y;
            for (std::size_t p = 0; p < num_predicates; ++p) {
              if (report.label_quality.per_predicate[p].support == 0) continue;
              fit_x.push_back((*xs)[p]);
              fit_y.push_back(ys[p]);
              points << sname << ',' << mname << ','
                     << ds.predicates.name(p) << ',' << (*xs)[p] << ','
                     << ys[p] << '\n';
            }
            if (fit_x.size() < 2) continue;
            const FitReport fit = linear_fit_r2(fit_x, fit_y);
            fits << sname << ',' << mname << ',' << fit.slope << ','
                 << fit.intercept << ',' << fit.r_squared << ','
                 << fit_x.size() << '\n';
          }
        }
        add_output("fits.csv");
        add_output("fits_points.csv");

        auto importances = open_output(config.output_dir / "importances.csv");
        importances << "predicate,rank,feature,importance\n";
        for (std::size_t p = 0; p < num_predicates; ++p) {
          if (split.labeled[p].empty()) continue;
          const ImportanceReport imp = feature_importances(
              split, p, num_categories, config.analysis.importance_depth);
          const std::size_t top = std::min<std::size_t>(8, imp.ranked.size());
          for (std::size_t r = 0; r < top; ++r) {
            importances << ds.predicates.name(p) << ',' << r + 1 << ','
                        << feature_name(imp.ranked[r].first, ds.categories)
                        << ',' << imp.ranked[r].second << '\n';
          }
        }
        add_output("importances.csv");
      });
    }

    // Deterministic run summary; wall-clock timings go to timings.json so the
    // report stays byte-stable across reruns.
    json jreport;
    jreport["config"] = report.config_echo;
    std::size_t n_objects = 0;
    for (const auto& image : ds.images) n_objects += image.objects.size();
    jreport["dataset"] = {{"images", ds.images.size()},
                          {"objects", n_objects},
                          {"relationships", ds.relationship_count()},
                          {"categories", num_categories},
                          {"predicates", num_predicates}};
    jreport["split"] = {{"labeled", split.labeled_total()},
                        {"unlabeled", split.unlabeled.size()},
                        {"holdout", split.eval_holdout.size()}};
    if (stages.eval || stages.analyze) {
      jreport["label_quality"] =
          eval_report_to_json(report.label_quality, ds.predicates);
    }
    if (stages.eval) {
      jreport["predcls"] = recall_report_to_json(report.predcls);
    }
    jreport["warnings"] = report.warnings;
    jreport["outputs"] = report.outputs;
    {
      auto out = open_output(config.output_dir / "report.json");
      out << jreport.dump(2) << '\n';
      report.outputs.push_back("report.json");
    }
    {
      json jtimings = json::object();
      for (const auto& [name, ms] : report.timings_ms) jtimings[name] = ms;
      auto out = open_output(config.output_dir / "timings.json");
      out << jtimings.dump(2) << '\n';
    }
  } catch (const std::exception& e) {
    std::ofstream marker(failed_marker);
    marker << "stage: " << current_stage << '\n' << "error: " << e.what() << '\n';
    std::cerr << "pipeline failed at stage '" << current_stage
              << "': " << e.what() << '\n';
    throw;
  }
  return report;
}

}  // namespace vrlabel
