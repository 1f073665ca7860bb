#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace vrlabel {

// Axis-aligned box in image coordinates: top-left corner (y, x) with y
// increasing downward, plus height and width. All feature formulas in
// features.hpp assume this convention.
struct BoundingBox {
  double y = 0.0;
  double x = 0.0;
  double h = 0.0;
  double w = 0.0;

  bool operator==(const BoundingBox&) const = default;
};

struct ObjectInstance {
  BoundingBox box;
  std::size_t category = 0;

  bool operator==(const ObjectInstance&) const = default;
};

// Ordered list of unique, non-empty names with index lookup. Used for both
// object categories and predicates.
class Vocab {
 public:
  Vocab() = default;
  explicit Vocab(std::vector<std::string> names);

  std::size_t size() const { return names_.size(); }
  const std::string& name(std::size_t index) const;
  std::optional<std::size_t> index(std::string_view name) const;
  const std::vector<std::string>& names() const { return names_; }

  bool operator==(const Vocab& other) const { return names_ == other.names_; }

 private:
  std::vector<std::string> names_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

// A subject/object duo within one image. Carries the image-local object
// indices so the pair has a stable identity across pipeline stages.
struct ObjectPair {
  std::string image_id;
  std::size_t subject_index = 0;
  std::size_t object_index = 0;
  ObjectInstance subject;
  ObjectInstance object;

  std::string pair_id() const;

  bool operator==(const ObjectPair&) const = default;
};

struct LabeledRelationship {
  ObjectPair pair;
  std::size_t predicate = 0;

  bool operator==(const LabeledRelationship&) const = default;
};

struct ImageRecord {
  struct Relationship {
    std::size_t subject = 0;
    std::size_t object = 0;
    std::size_t predicate = 0;

    bool operator==(const Relationship&) const = default;
  };

  std::string id;
  std::vector<ObjectInstance> objects;
  std::vector<Relationship> relationships;

  bool operator==(const ImageRecord&) const = default;
};

// The full annotated scene-graph corpus. A pair may carry more than one
// predicate (the relationship set is a multigraph). Immutable once loaded.
struct SceneGraphDataset {
  Vocab categories;
  Vocab predicates;
  std::vector<ImageRecord> images;

  std::size_t relationship_count() const;
  std::vector<std::size_t> per_predicate_counts() const;
  std::vector<LabeledRelationship> all_relationships() const;
  ObjectPair make_pair(std::size_t image, std::size_t subject,
                       std::size_t object) const;

  bool operator==(const SceneGraphDataset&) const = default;
};

SceneGraphDataset dataset_from_json(const nlohmann::json& root);
nlohmann::json dataset_to_json(const SceneGraphDataset& ds);
SceneGraphDataset load_dataset(const std::filesystem::path& path);
void save_dataset(const SceneGraphDataset& ds,
                  const std::filesystem::path& path);

// Ground-truth predicates keyed by pair id; used to restore the labels that
// split_limited strips from the unlabeled pool.
std::map<std::string, std::vector<std::size_t>> gold_pair_labels(
    const SceneGraphDataset& ds);

struct SplitOptions {
  std::size_t n_labeled = 10;
  double holdout_fraction = 0.2;
  std::uint64_t seed = 0;
  // Pairs with no gold predicate sampled into the unlabeled pool, as a ratio
  // of the positive unlabeled pairs.
  double negative_ratio = 1.0;
};

struct SplitDataset {
  std::vector<std::vector<LabeledRelationship>> labeled;  // one list per predicate
  std::vector<ObjectPair> unlabeled;
  std::vector<LabeledRelationship> eval_holdout;
  std::vector<std::string> warnings;

  std::size_t labeled_total() const;
};

SplitDataset split_limited(const SceneGraphDataset& ds, const SplitOptions& opt);
SplitDataset split_limited(const SceneGraphDataset& ds, std::size_t n_labeled,
                           double holdout_fraction, std::uint64_t seed);

}  // namespace vrlabel
