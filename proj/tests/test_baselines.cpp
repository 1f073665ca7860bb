#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "test_util.hpp"
#include "vrlabel/baselines.hpp"
#include "vrlabel/error.hpp"
#include "vrlabel/synthgen.hpp"

using vrlabel::BoundingBox;
using vrlabel::label_propagation;
using vrlabel::PropagationConfig;

TEST_CASE("a point midway between two classes splits evenly") {
  const std::vector<std::vector<double>> labeled{{0.0}, {2.0}};
  const std::vector<std::size_t> labels{0, 1};
  const std::vector<std::vector<double>> unlabeled{{1.0}};
  const auto result = label_propagation(labeled, labels, 2, unlabeled, {});
  REQUIRE(result.distributions.size() == 1);
  CHECK(result.distributions[0][0] == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(result.distributions[0][1] == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("a coincident unlabeled point adopts the labeled class") {
  PropagationConfig config;
  config.k_neighbors = 1;
  const std::vector<std::vector<double>> labeled{{0.0, 0.0}, {50.0, 0.0}};
  const std::vector<std::size_t> labels{0, 1};
  const std::vector<std::vector<double>> unlabeled{{0.0, 0.0}};
  const auto result =
      label_propagation(labeled, labels, 2, unlabeled, config);
  CHECK(result.distributions[0][0] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("distributions are normalized and order-invariant") {
  vrlabel::Rng rng(51, "baselines/prop");
  std::vector<std::vector<double>> labeled;
  std::vector<std::size_t> labels;
  for (std::size_t i = 0; i < 20; ++i) {
    const std::size_t cls = rng.next_below(3);
    labeled.push_back({static_cast<double>(cls) * 4.0 + rng.next_normal() * 0.3,
                       rng.next_normal() * 0.3});
    labels.push_back(cls);
  }
  std::vector<std::vector<double>> unlabeled;
  for (std::size_t i = 0; i < 15; ++i) {
    unlabeled.push_back({rng.next_double() * 8.0, rng.next_normal() * 0.3});
  }
  const auto base = label_propagation(labeled, labels, 3, unlabeled, {});
  for (const auto& dist : base.distributions) {
    double total = 0.0;
    for (const double v : dist) {
      CHECK(v >= 0.0);
      total += v;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  }

  // Reverse the unlabeled order: same answers, reordered.
  std::vector<std::vector<double>> reversed(unlabeled.rbegin(),
                                            unlabeled.rend());
  const auto flipped = label_propagation(labeled, labels, 3, reversed, {});
  for (std::size_t i = 0; i < unlabeled.size(); ++i) {
    const auto& a = base.distributions[i];
    const auto& b = flipped.distributions[unlabeled.size() - 1 - i];
    for (std::size_t c = 0; c < 3; ++c) {
      CHECK(a[c] == doctest::Approx(b[c]).epsilon(1e-6));
    }
  }
}

TEST_CASE("propagation rejects empty labeled sets") {
  CHECK_THROWS_AS(label_propagation({}, {}, 2, {{1.0}}, {}),
                  vrlabel::ValidationError);
}

TEST_CASE("clamped propagation pulls neighborhoods to their anchors") {
  // Two clusters; with clamping the unlabeled points near each anchor keep
  // that anchor's class even after many iterations.
  vrlabel::Rng rng(52, "baselines/clamp");
  std::vector<std::vector<double>> labeled{{0.0, 0.0}, {10.0, 0.0}};
  std::vector<std::size_t> labels{0, 1};
  std::vector<std::vector<double>> unlabeled;
  for (std::size_t i = 0; i < 10; ++i) {
    unlabeled.push_back({0.3 * rng.next_normal(), 0.3 * rng.next_normal()});
    unlabeled.push_back(
        {10.0 + 0.3 * rng.next_normal(), 0.3 * rng.next_normal()});
  }
  PropagationConfig config;
  config.k_neighbors = 3;
  const auto result = label_propagation(labeled, labels, 2, unlabeled, config);
  for (std::size_t i = 0; i < unlabeled.size(); ++i) {
    const std::size_t expected = i % 2;
    CHECK(result.distributions[i][expected] > 0.9);
  }
}

namespace {

vrlabel::SceneGraphDataset separable_dataset(std::uint64_t seed) {
  vrlabel::SynthSpec spec;
  spec.seed = seed;
  spec.instances_per_predicate = 50;
  spec.pairs_per_image = 10;
  vrlabel::PredicateSpec up;
  up.name = "up";
  up.spatial_modes = {{0.0, 7.0, 1.0, 1.0, 0.05, 1.0}};
  up.category_pairs = {{"person", "kite", 1.0}};
  vrlabel::PredicateSpec down;
  down.name = "down";
  down.spatial_modes = {{0.0, -7.0, 1.0, 1.0, 0.05, 1.0}};
  down.category_pairs = {{"person", "bag", 1.0}};
  spec.predicates = {up, down};
  return vrlabel::generate(spec).dataset;
}

}  // namespace

TEST_CASE("single tree labeler recovers a separable predicate") {
  const auto ds = separable_dataset(61);
  const auto split = vrlabel::split_limited(ds, 10, 0.0, 3);
  const auto gold = vrlabel::gold_pair_labels(ds);

  const auto dists = vrlabel::single_tree_labeler(
      split, ds.categories.size(), ds.predicates.size(), split.unlabeled, 1);
  REQUIRE(dists.size() == split.unlabeled.size());
  for (std::size_t i = 0; i < dists.size(); ++i) {
    const auto it = gold.find(split.unlabeled[i].pair_id());
    if (it == gold.end()) continue;
    const auto top = static_cast<std::size_t>(
        std::max_element(dists[i].begin(), dists[i].end()) -
        dists[i].begin());
    CHECK(top == it->second[0]);
    CHECK(dists[i][top] == doctest::Approx(1.0));
  }

  // Deterministic across runs.
  const auto again = vrlabel::single_tree_labeler(
      split, ds.categories.size(), ds.predicates.size(), split.unlabeled, 1);
  CHECK(dists == again);
}

TEST_CASE("unbounded tree memorizes distinct training points") {
  const auto ds = separable_dataset(62);
  const auto split = vrlabel::split_limited(ds, 20, 0.0, 4);
  std::vector<vrlabel::ObjectPair> train_pairs;
  std::vector<std::size_t> train_labels;
  for (std::size_t p = 0; p < split.labeled.size(); ++p) {
    for (const auto& rel : split.labeled[p]) {
      train_pairs.push_back(rel.pair);
      train_labels.push_back(p);
    }
  }
  const auto dists = vrlabel::single_tree_labeler(
      split, ds.categories.size(), ds.predicates.size(), train_pairs, 0);
  for (std::size_t i = 0; i < train_pairs.size(); ++i) {
    const auto top = static_cast<std::size_t>(
        std::max_element(dists[i].begin(), dists[i].end()) -
        dists[i].begin());
    CHECK(top == train_labels[i]);
  }
}

TEST_CASE("frequency baseline counting arithmetic") {
  // counts {(person, horse): ride x3, feed x1} -> P(ride) = 0.75.
  nlohmann::json j;
  j["categories"] = {"person", "horse"};
  j["predicates"] = {"ride", "feed"};
  j["images"] = nlohmann::json::array();
  nlohmann::json image;
  image["id"] = "im";
  image["objects"] = nlohmann::json::array();
  image["relationships"] = nlohmann::json::array();
  for (int i = 0; i < 4; ++i) {
    image["objects"].push_back({{"box", {40.0 * i, 0, 5, 5}}, {"category", 0}});
    image["objects"].push_back(
        {{"box", {40.0 * i + 5, 0, 5, 5}}, {"category", 1}});
    image["relationships"].push_back(
        {{"subject", 2 * i}, {"object", 2 * i + 1}, {"predicate", i < 3 ? 0 : 1}});
  }
  j["images"].push_back(image);
  const auto ds = vrlabel::dataset_from_json(j);
  const auto split = vrlabel::split_limited(ds, 10, 0.0, 1);

  const auto table =
      vrlabel::build_frequency_table(split, ds.predicates.size(), false);
  const auto dist = vrlabel::frequency_predict(table, 0, 1);
  CHECK(dist[0] == doctest::Approx(0.75));
  CHECK(dist[1] == doctest::Approx(0.25));

  // Unseen key: uniform.
  const auto unseen = vrlabel::frequency_predict(table, 1, 0);
  CHECK(unseen[0] == doctest::Approx(0.5));
  CHECK(unseen[1] == doctest::Approx(0.5));
}

TEST_CASE("overlap-required counting skips disjoint boxes") {
  CHECK(vrlabel::boxes_overlap(BoundingBox{0, 0, 2, 2}, BoundingBox{1, 1, 2, 2}));
  CHECK_FALSE(vrlabel::boxes_overlap(BoundingBox{0, 0, 1, 1},
                                     BoundingBox{10, 10, 1, 1}));
  // Touching edges have zero intersection area.
  CHECK_FALSE(
      vrlabel::boxes_overlap(BoundingBox{0, 0, 1, 1}, BoundingBox{0, 1, 1, 1}));

  const auto ds = separable_dataset(63);  // boxes far apart vertically
  const auto split = vrlabel::split_limited(ds, 10, 0.0, 5);
  const auto strict =
      vrlabel::build_frequency_table(split, ds.predicates.size(), true);
  const auto loose =
      vrlabel::build_frequency_table(split, ds.predicates.size(), false);
  auto total = [](const vrlabel::FrequencyTable& table) {
    double t = 0.0;
    for (const auto& [key, counts] : table.counts) {
      for (const double c : counts) t += c;
    }
    return t;
  };
  CHECK(total(loose) >= total(strict));
  CHECK(total(loose) == 20.0);
}

TEST_CASE("all baseline distributions are proper") {
  const auto ds = separable_dataset(64);
  const auto split = vrlabel::split_limited(ds, 10, 0.2, 6);
  const auto freq = vrlabel::frequency_baseline(split, split.unlabeled,
                                                ds.predicates.size(), false);
  const auto tree = vrlabel::single_tree_labeler(
      split, ds.categories.size(), ds.predicates.size(), split.unlabeled, 0);
  for (const auto& rows : {freq, tree}) {
    REQUIRE(rows.size() == split.unlabeled.size());
    for (const auto& dist : rows) {
      double total = 0.0;
      for (const double v : dist) {
        CHECK(v >= 0.0);
        total += v;
      }
      CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}
