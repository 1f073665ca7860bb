#include "vrlabel/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "vrlabel/error.hpp"
#include "vrlabel/rng.hpp"

namespace vrlabel {
namespace {

using nlohmann::json;

std::string where(std::size_t image_index, const std::string& field,
                  std::size_t entry) {
  std::ostringstream os;
  os << "images[" << image_index << "]." << field << "[" << entry << "]";
  return os.str();
}

double finite_number(const json& value, const std::string& context) {
  if (!value.is_number()) {
    throw ParseError(context + ": expected a number");
  }
  const double v = value.get<double>();
  if (!std::isfinite(v)) {
    throw ParseError(context + ": non-finite number");
  }
  return v;
}

std::size_t index_number(const json& value, const std::string& context) {
  if (!value.is_number_integer() || value.get<std::int64_t>() < 0) {
    throw ParseError(context + ": expected a non-negative integer");
  }
  return value.get<std::size_t>();
}

}  // namespace

Vocab::Vocab(std::vector<std::string> names) : names_(std::move(names)) {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i].empty()) {
      throw ValidationError("vocabulary entry " + std::to_string(i) +
                            " is empty");
    }
    if (!index_.emplace(names_[i], i).second) {
      throw ValidationError("duplicate vocabulary entry '" + names_[i] + "'");
    }
  }
}

const std::string& Vocab::name(std::size_t index) const {
  if (index >= names_.size()) {
    throw ValidationError("vocabulary index " + std::to_string(index) +
                          " out of range (size " +
                          std::to_string(names_.size()) + ")");
  }
  return names_[index];
}

std::optional<std::size_t> Vocab::index(std::string_view name) const {
  const auto it = index_.find(name);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::string ObjectPair::pair_id() const {
  std::ostringstream os;
  os << image_id << '#' << subject_index << '-' << object_index;
  return os.str();
}

std::size_t SceneGraphDataset::relationship_count() const {
  std::size_t n = 0;
  for (const auto& image : images) n += image.relationships.size();
  return n;
}

std::vector<std::size_t> SceneGraphDataset::per_predicate_counts() const {
  std::vector<std::size_t> counts(predicates.size(), 0);
  for (const auto& image : images) {
    for (const auto& rel : image.relationships) ++counts[rel.predicate];
  }
  return counts;
}

ObjectPair SceneGraphDataset::make_pair(std::size_t image, std::size_t subject,
                                        std::size_t object) const {
  const ImageRecord& record = images.at(image);
  return ObjectPair{record.id, subject, object, record.objects.at(subject),
                    record.objects.at(object)};
}

std::vector<LabeledRelationship> SceneGraphDataset::all_relationships() const {
  std::vector<LabeledRelationship> out;
  out.reserve(relationship_count());
  for (std::size_t i = 0; i < images.size(); ++i) {
    for (const auto& rel : images[i].relationships) {
      out.push_back({make_pair(i, rel.subject, rel.object), rel.predicate});
    }
  }
  return out;
}

SceneGraphDataset dataset_from_json(const json& root) {
  if (!root.is_object()) throw ParseError("top-level value must be an object");
  for (const char* key : {"categories", "predicates", "images"}) {
    if (!root.contains(key) || !root[key].is_array()) {
      throw ParseError(std::string("missing or non-array field '") + key + "'");
    }
  }

  SceneGraphDataset ds;
  ds.categories = Vocab(root["categories"].get<std::vector<std::string>>());
  ds.predicates = Vocab(root["predicates"].get<std::vector<std::string>>());

  ds.images.reserve(root["images"].size());
  for (std::size_t i = 0; i < root["images"].size(); ++i) {
    const json& jimg = root["images"][i];
    if (!jimg.is_object() || !jimg.contains("id") || !jimg["id"].is_string()) {
      throw ParseError("images[" + std::to_string(i) +
                       "]: missing string field 'id'");
    }
    ImageRecord image;
    image.id = jimg["id"].get<std::string>();

    const json& jobjects = jimg.value("objects", json::array());
    image.objects.reserve(jobjects.size());
    for (std::size_t o = 0; o < jobjects.size(); ++o) {
      const std::string ctx = where(i, "objects", o);
      const json& jobj = jobjects[o];
      if (!jobj.is_object() || !jobj.contains("box") ||
          !jobj["box"].is_array() || jobj["box"].size() != 4) {
        throw ParseError(ctx + ": expected 'box' as [y, x, h, w]");
      }
      ObjectInstance obj;
      obj.box.y = finite_number(jobj["box"][0], ctx + ".box[0]");
      obj.box.x = finite_number(jobj["box"][1], ctx + ".box[1]");
      obj.box.h = finite_number(jobj["box"][2], ctx + ".box[2]");
      obj.box.w = finite_number(jobj["box"][3], ctx + ".box[3]");
      if (obj.box.y < 0.0 || obj.box.x < 0.0) {
        throw ValidationError(ctx + ": negative box position");
      }
      if (obj.box.h <= 0.0 || obj.box.w <= 0.0) {
        throw ValidationError(ctx + ": box height and width must be positive");
      }
      if (!jobj.contains("category")) {
        throw ParseError(ctx + ": missing field 'category'");
      }
      obj.category = index_number(jobj["category"], ctx + ".category");
      if (obj.category >= ds.categories.size()) {
        throw ValidationError(ctx + ": category " +
                              std::to_string(obj.category) +
                              " out of range (|C|=" +
                              std::to_string(ds.categories.size()) + ")");
      }
      image.objects.push_back(obj);
    }

    const json& jrels = jimg.value("relationships", json::array());
    image.relationships.reserve(jrels.size());
    for (std::size_t r = 0; r < jrels.size(); ++r) {
      const std::string ctx = where(i, "relationships", r);
      const json& jrel = jrels[r];
      if (!jrel.is_object()) throw ParseError(ctx + ": expected an object");
      ImageRecord::Relationship rel;
      for (const char* key : {"subject", "object", "predicate"}) {
        if (!jrel.contains(key)) {
          throw ParseError(ctx + ": missing field '" + std::string(key) + "'");
        }
      }
      rel.subject = index_number(jrel["subject"], ctx + ".subject");
      rel.object = index_number(jrel["object"], ctx + ".object");
      rel.predicate = index_number(jrel["predicate"], ctx + ".predicate");
      if (rel.subject >= image.objects.size() ||
          rel.object >= image.objects.size()) {
        throw ValidationError(ctx + ": object index out of range (image has " +
                              std::to_string(image.objects.size()) +
                              " objects)");
      }
      if (rel.predicate >= ds.predicates.size()) {
        throw ValidationError(ctx + ": predicate " +
                              std::to_string(rel.predicate) +
                              " out of range (|P|=" +
                              std::to_string(ds.predicates.size()) + ")");
      }
      image.relationships.push_back(rel);
    }
    ds.images.push_back(std::move(image));
  }
  return ds;
}

json dataset_to_json(const SceneGraphDataset& ds) {
  json root;
  root["categories"] = ds.categories.names();
  root["predicates"] = ds.predicates.names();
  json jimages = json::array();
  for (const auto& image : ds.images) {
    json jimg;
    jimg["id"] = image.id;
    json jobjects = json::array();
    for (const auto& obj : image.objects) {
      jobjects.push_back({{"box", {obj.box.y, obj.box.x, obj.box.h, obj.box.w}},
                          {"category", obj.category}});
    }
    jimg["objects"] = std::move(jobjects);
    json jrels = json::array();
    for (const auto& rel : image.relationships) {
      jrels.push_back({{"subject", rel.subject},
                       {"object", rel.object},
                       {"predicate", rel.predicate}});
    }
    jimg["relationships"] = std::move(jrels);
    jimages.push_back(std::move(jimg));
  }
  root["images"] = std::move(jimages);
  return root;
}

SceneGraphDataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ParseError("cannot open dataset file: " + path.string());
  }
  json root;
  try {
    root = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError("invalid JSON in " + path.string() + ": " + e.what());
  }
  return dataset_from_json(root);
}

void save_dataset(const SceneGraphDataset& ds,
                  const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw ParseError("cannot write dataset file: " + path.string());
  }
  out << dataset_to_json(ds).dump(2) << '\n';
}

std::map<std::string, std::vector<std::size_t>> gold_pair_labels(
    const SceneGraphDataset& ds) {
  std::map<std::string, std::vector<std::size_t>> gold;
  for (std::size_t i = 0; i < ds.images.size(); ++i) {
    for (const auto& rel : ds.images[i].relationships) {
      auto& preds =
          gold[ds.make_pair(i, rel.subject, rel.object).pair_id()];
      if (std::find(preds.begin(), preds.end(), rel.predicate) == preds.end()) {
        preds.push_back(rel.predicate);
      }
    }
  }
  for (auto& [id, preds] : gold) std::sort(preds.begin(), preds.end());
  return gold;
}

std::size_t SplitDataset::labeled_total() const {
  std::size_t n = 0;
  for (const auto& list : labeled) n += list.size();
  return n;
}

namespace {

struct PairKey {
  std::size_t image = 0;
  std::size_t subject = 0;
  std::size_t object = 0;

  auto operator<=>(const PairKey&) const = default;
};

}  // namespace

SplitDataset split_limited(const SceneGraphDataset& ds,
                           const SplitOptions& opt) {
  if (opt.n_labeled < 1) {
    throw ValidationError("split: n_labeled must be >= 1");
  }
  if (opt.holdout_fraction < 0.0 || opt.holdout_fraction >= 1.0) {
    throw ValidationError("split: holdout_fraction must be in [0, 1)");
  }
  if (opt.negative_ratio < 0.0) {
    throw ValidationError("split: negative_ratio must be >= 0");
  }

  const std::size_t num_predicates = ds.predicates.size();
  SplitDataset split;
  split.labeled.resize(num_predicates);

  // Gold predicates per pair, pairs in dataset order. A pair is assigned to
  // exactly one bucket (labeled / holdout / unlabeled) so the buckets stay
  // disjoint even when a pair carries several predicates.
  std::vector<PairKey> pair_order;
  std::map<PairKey, std::vector<std::size_t>> pair_gold;
  std::vector<std::size_t> available(num_predicates, 0);
  for (std::size_t i = 0; i < ds.images.size(); ++i) {
    for (const auto& rel : ds.images[i].relationships) {
      const PairKey key{i, rel.subject, rel.object};
      auto [it, inserted] = pair_gold.try_emplace(key);
      if (inserted) pair_order.push_back(key);
      auto& preds = it->second;
      if (std::find(preds.begin(), preds.end(), rel.predicate) == preds.end()) {
        preds.push_back(rel.predicate);
        ++available[rel.predicate];
      }
    }
  }
  for (auto& [key, preds] : pair_gold) std::sort(preds.begin(), preds.end());

  // Claim labeled pairs per predicate. A claimed pair contributes every one
  // of its gold relationships, so claiming skips pairs that would push any
  // predicate's list past n.
  std::set<PairKey> claimed;
  for (std::size_t p = 0; p < num_predicates; ++p) {
    std::vector<PairKey> candidates;
    for (const PairKey& key : pair_order) {
      const auto& preds = pair_gold[key];
      if (std::find(preds.begin(), preds.end(), p) != preds.end()) {
        candidates.push_back(key);
      }
    }
    if (available[p] == 0) {
      split.warnings.push_back("predicate '" + ds.predicates.name(p) +
                               "' has no ground-truth instances");
      continue;
    }
    if (available[p] < opt.n_labeled) {
      split.warnings.push_back(
          "predicate '" + ds.predicates.name(p) + "' has only " +
          std::to_string(available[p]) + " instances (requested " +
          std::to_string(opt.n_labeled) + ")");
    }
    Rng rng(opt.seed, "split/labeled", p);
    rng.shuffle(candidates);
    for (const PairKey& key : candidates) {
      if (split.labeled[p].size() >= opt.n_labeled) break;
      if (claimed.contains(key)) continue;
      const auto& preds = pair_gold[key];
      const bool fits = std::all_of(
          preds.begin(), preds.end(), [&](std::size_t q) {
            return split.labeled[q].size() < opt.n_labeled;
          });
      if (!fits) continue;
      claimed.insert(key);
      for (const std::size_t q : preds) {
        split.labeled[q].push_back(
            {ds.make_pair(key.image, key.subject, key.object), q});
      }
    }
  }

  // Remaining gold pairs split into holdout (labels kept for evaluation) and
  // the unlabeled pool (labels stripped).
  std::vector<PairKey> remaining;
  for (const PairKey& key : pair_order) {
    if (!claimed.contains(key)) remaining.push_back(key);
  }
  Rng holdout_rng(opt.seed, "split/holdout");
  holdout_rng.shuffle(remaining);
  const auto holdout_count = static_cast<std::size_t>(
      opt.holdout_fraction * static_cast<double>(remaining.size()));
  for (std::size_t i = 0; i < remaining.size(); ++i) {
    const PairKey& key = remaining[i];
    if (i < holdout_count) {
      for (const std::size_t q : pair_gold[key]) {
        split.eval_holdout.push_back(
            {ds.make_pair(key.image, key.subject, key.object), q});
      }
    } else {
      split.unlabeled.push_back(ds.make_pair(key.image, key.subject, key.object));
    }
  }
  const std::size_t positive_unlabeled = split.unlabeled.size();

  // Sample negative pairs: ordered object pairs with no gold predicate.
  if (opt.negative_ratio > 0.0) {
    std::vector<PairKey> negatives;
    for (std::size_t i = 0; i < ds.images.size(); ++i) {
      const std::size_t n_objects = ds.images[i].objects.size();
      for (std::size_t s = 0; s < n_objects; ++s) {
        for (std::size_t o = 0; o < n_objects; ++o) {
          if (s == o) continue;
          const PairKey key{i, s, o};
          if (!pair_gold.contains(key)) negatives.push_back(key);
        }
      }
    }
    auto want = static_cast<std::size_t>(
        std::llround(opt.negative_ratio * static_cast<double>(positive_unlabeled)));
    Rng neg_rng(opt.seed, "split/negatives");
    for (const std::size_t idx :
         neg_rng.sample_indices(negatives.size(), want)) {
      const PairKey& key = negatives[idx];
      split.unlabeled.push_back(ds.make_pair(key.image, key.subject, key.object));
    }
  }

  return split;
}

SplitDataset split_limited(const SceneGraphDataset& ds, std::size_t n_labeled,
                           double holdout_fraction, std::uint64_t seed) {
  SplitOptions opt;
  opt.n_labeled = n_labeled;
  opt.holdout_fraction = holdout_fraction;
  opt.seed = seed;
  return split_limited(ds, opt);
}

}  // namespace vrlabel
