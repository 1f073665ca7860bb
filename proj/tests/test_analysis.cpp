#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "test_util.hpp"
#include "vrlabel/analysis.hpp"
#include "vrlabel/error.hpp"
#include "vrlabel/synthgen.hpp"

using vrlabel::FitReport;
using vrlabel::mean_shift;
using vrlabel::MeanShiftResult;

namespace {

std::vector<std::vector<double>> gaussian_blob(vrlabel::Rng& rng,
                                               std::vector<double> center,
                                               double spread, std::size_t n) {
  std::vector<std::vector<double>> points;
  for (std::size_t i = 0; i < n; ++i) {
    auto p = center;
    for (double& v : p) v += spread * rng.next_normal();
    points.push_back(std::move(p));
  }
  return points;
}

}  // namespace

TEST_CASE("identical points form one cluster") {
  std::vector<std::vector<double>> points(7, {1.5, -2.0});
  const auto result = mean_shift(points, 1.0);
  CHECK(result.num_modes() == 1);
  for (const std::size_t a : result.assignment) CHECK(a == 0);
}

TEST_CASE("two tight groups at distance 100 stay separate") {
  vrlabel::Rng rng(21, "analysis/groups");
  auto points = gaussian_blob(rng, {0.0, 0.0}, 0.1, 30);
  const auto far = gaussian_blob(rng, {100.0, 0.0}, 0.1, 30);
  points.insert(points.end(), far.begin(), far.end());
  const auto result = mean_shift(points, 1.0);
  CHECK(result.num_modes() == 2);
  CHECK(result.assignment[0] != result.assignment[59]);
}

TEST_CASE("bandwidth at least the diameter gives one cluster") {
  vrlabel::Rng rng(22, "analysis/diameter");
  const auto points = gaussian_blob(rng, {3.0, 1.0}, 1.0, 40);
  double diameter = 0.0;
  for (const auto& a : points) {
    for (const auto& b : points) {
      double d = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) {
        d += (a[i] - b[i]) * (a[i] - b[i]);
      }
      diameter = std::max(diameter, std::sqrt(d));
    }
  }
  const auto result = mean_shift(points, diameter * 1.01);
  CHECK(result.num_modes() == 1);
}

TEST_CASE("mean shift modes are permutation invariant") {
  vrlabel::Rng rng(23, "analysis/permute");
  auto points = gaussian_blob(rng, {0.0, 0.0}, 0.2, 25);
  const auto other = gaussian_blob(rng, {10.0, 5.0}, 0.2, 25);
  points.insert(points.end(), other.begin(), other.end());

  const auto base = mean_shift(points, 1.5);
  auto shuffled = points;
  rng.shuffle(shuffled);
  const auto permuted = mean_shift(shuffled, 1.5);
  REQUIRE(base.num_modes() == permuted.num_modes());

  auto sorted_modes = [](MeanShiftResult result) {
    std::sort(result.modes.begin(), result.modes.end());
    return result.modes;
  };
  const auto a = sorted_modes(base);
  const auto b = sorted_modes(permuted);
  for (std::size_t m = 0; m < a.size(); ++m) {
    for (std::size_t d = 0; d < a[m].size(); ++d) {
      CHECK(a[m][d] == doctest::Approx(b[m][d]).epsilon(1e-6));
    }
  }
}

TEST_CASE("mean shift input validation") {
  CHECK_THROWS_AS(mean_shift({}, 1.0), vrlabel::ValidationError);
  CHECK_THROWS_AS(mean_shift({{1.0}}, -1.0), vrlabel::ValidationError);
}

TEST_CASE("single-instance predicate counts one subtype of each kind") {
  vrlabel::SynthSpec spec = vrlabel::planted_cluster_spec(1, 9);
  spec.instances_per_predicate = 1;
  const auto ds = vrlabel::generate(spec).dataset;
  const auto report = vrlabel::count_subtypes(ds, 0);
  CHECK(report.spatial_subtypes == 1);
  CHECK(report.categorical_subtypes == 1);
  CHECK(report.instances_used == 1);
}

TEST_CASE("planted spatial modes are recovered") {
  for (const std::uint64_t seed : {1ull, 2ull, 3ull}) {
    const auto ds = vrlabel::generate(vrlabel::planted_cluster_spec(3, seed)).dataset;
    const auto report = vrlabel::count_subtypes(ds, 0);
    CHECK(report.spatial_subtypes == 3);
  }
}

TEST_CASE("duplicated instances do not change the cluster count") {
  auto spec = vrlabel::planted_cluster_spec(2, 17);
  spec.instances_per_predicate = 60;
  auto ds = vrlabel::generate(spec).dataset;
  const auto base = vrlabel::count_subtypes(ds, 0);

  // Append a copy of every image: every instance appears twice.
  const auto images = ds.images;
  for (auto image : images) {
    image.id += "_copy";
    ds.images.push_back(std::move(image));
  }
  const auto doubled = vrlabel::count_subtypes(ds, 0);
  CHECK(doubled.spatial_subtypes == base.spatial_subtypes);
  CHECK(doubled.categorical_subtypes == base.categorical_subtypes);
}

TEST_CASE("categorical subtypes count distinct category pairs") {
  // person-bike, person-bike, dog-surfboard: two categorical subtypes.
  nlohmann::json j;
  j["categories"] = {"person", "bike", "dog", "surfboard"};
  j["predicates"] = {"ride"};
  j["images"] = nlohmann::json::array();
  nlohmann::json image;
  image["id"] = "im";
  image["objects"] = nlohmann::json::array();
  for (int i = 0; i < 3; ++i) {
    image["objects"].push_back(
        {{"box", {10.0 * i, 0, 5, 5}}, {"category", i == 2 ? 2 : 0}});
    image["objects"].push_back(
        {{"box", {10.0 * i + 5, 0, 5, 5}}, {"category", i == 2 ? 3 : 1}});
  }
  image["relationships"] = nlohmann::json::array();
  for (int i = 0; i < 3; ++i) {
    image["relationships"].push_back(
        {{"subject", 2 * i}, {"object", 2 * i + 1}, {"predicate", 0}});
  }
  j["images"].push_back(image);
  const auto ds = vrlabel::dataset_from_json(j);

  const auto report = vrlabel::count_subtypes(ds, 0);
  CHECK(report.categorical_subtypes == 2);
  CHECK(report.category_union_count == 4);
}

TEST_CASE("zero-instance predicate is an error") {
  auto spec = vrlabel::planted_cluster_spec(1, 3);
  spec.instances_per_predicate = 5;
  auto ds = vrlabel::generate(spec).dataset;
  for (auto& image : ds.images) image.relationships.clear();
  CHECK_THROWS_AS(vrlabel::count_subtypes(ds, 0), vrlabel::ValidationError);
}

TEST_CASE("importances rank the separating feature first") {
  // Predicate separable only by dy (spatial feature index 1).
  vrlabel::SynthSpec spec;
  spec.seed = 12;
  spec.instances_per_predicate = 50;
  spec.pairs_per_image = 10;
  vrlabel::PredicateSpec fly;
  fly.name = "fly";
  fly.spatial_modes = {{0.0, 9.0, 1.0, 1.0, 0.05, 1.0}};
  fly.category_pairs = {{"person", "kite", 1.0}};
  vrlabel::PredicateSpec near;
  near.name = "near";
  near.spatial_modes = {{0.0, 0.0, 1.0, 1.0, 0.05, 1.0}};
  near.category_pairs = {{"person", "kite", 1.0}};
  spec.predicates = {fly, near};
  const auto ds = vrlabel::generate(spec).dataset;
  const auto split = vrlabel::split_limited(ds, 10, 0.0, 2);

  const auto report =
      vrlabel::feature_importances(split, 0, ds.categories.size());
  CHECK(report.has_splits);
  CHECK(report.ranked[0].first == 1);

  double total = 0.0;
  for (const auto& [feature, importance] : report.ranked) total += importance;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("a tree with no splits yields zero importances and a flag") {
  // Both predicates identical: nothing separates them.
  vrlabel::SynthSpec spec;
  spec.seed = 13;
  spec.instances_per_predicate = 10;
  spec.pairs_per_image = 5;
  vrlabel::PredicateSpec a;
  a.name = "a";
  a.spatial_modes = {{0.0, 0.0, 1.0, 1.0, 0.0, 1.0}};
  a.category_pairs = {{"person", "kite", 1.0}};
  vrlabel::PredicateSpec b = a;
  b.name = "b";
  spec.predicates = {a, b};
  const auto ds = vrlabel::generate(spec).dataset;
  const auto split = vrlabel::split_limited(ds, 10, 0.0, 2);

  const auto report =
      vrlabel::feature_importances(split, 0, ds.categories.size());
  CHECK_FALSE(report.has_splits);
  for (const auto& [feature, importance] : report.ranked) {
    CHECK(importance == 0.0);
  }
}

TEST_CASE("least squares worked examples") {
  const std::vector<double> xs{1, 2, 3};
  const std::vector<double> ys{1, 2, 2};
  const FitReport fit = vrlabel::linear_fit_r2(xs, ys);
  CHECK(std::abs(fit.slope - 0.5) <= 1e-12);
  CHECK(std::abs(fit.intercept - 2.0 / 3.0) <= 1e-12);
  CHECK(std::abs(fit.r_squared - 0.75) <= 1e-12);

  const std::vector<double> doubled{2, 4, 6};
  const FitReport exact = vrlabel::linear_fit_r2(xs, doubled);
  CHECK(exact.r_squared == doctest::Approx(1.0));
  CHECK(exact.slope == doctest::Approx(2.0));

  const std::vector<double> constant{5, 5, 5};
  CHECK(vrlabel::linear_fit_r2(xs, constant).r_squared == 0.0);

  CHECK_THROWS_AS(vrlabel::linear_fit_r2(xs, std::vector<double>{1.0}),
                  vrlabel::ValidationError);
  CHECK_THROWS_AS(vrlabel::linear_fit_r2(std::vector<double>{1.0},
                                         std::vector<double>{1.0}),
                  vrlabel::ValidationError);
}

TEST_CASE("r squared is invariant to affine rescaling of xs") {
  vrlabel::Rng rng(24, "analysis/affine");
  std::vector<double> xs(20), ys(20);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    xs[i] = rng.next_double() * 10.0;
    ys[i] = 2.0 * xs[i] + rng.next_normal();
  }
  const auto base = vrlabel::linear_fit_r2(xs, ys);
  auto scaled = xs;
  for (double& x : scaled) x = 3.5 * x - 11.0;
  const auto rescaled = vrlabel::linear_fit_r2(scaled, ys);
  CHECK(base.r_squared == doctest::Approx(rescaled.r_squared).epsilon(1e-9));
}

TEST_CASE("complexity series track planted structure") {
  // hold has three spatial modes; fly has one.
  auto spec = vrlabel::acceptance_spec(31);
  spec.instances_per_predicate = 120;
  const auto ds = vrlabel::generate(spec).dataset;
  vrlabel::SplitOptions opt;
  opt.n_labeled = 10;
  opt.holdout_fraction = 0.1;
  opt.seed = 4;
  opt.negative_ratio = 0.0;
  const auto split = vrlabel::split_limited(ds, opt);

  const auto series = vrlabel::complexity_series(ds, split);
  REQUIRE(series.train_subtypes.size() == ds.predicates.size());
  for (std::size_t p = 0; p < ds.predicates.size(); ++p) {
    // Proportions above 1 can happen: tiny labeled subsets may fragment.
    CHECK(series.labeled_proportion[p] > 0.0);
    CHECK(series.unlabeled_subtypes[p] >= 1.0);
  }
  // The mixed predicate has more unlabeled subtypes than the single-mode one.
  const auto fly = *ds.predicates.index("fly");
  const auto hold = *ds.predicates.index("hold");
  CHECK(series.unlabeled_subtypes[hold] > series.unlabeled_subtypes[fly]);
}
