#include "vrlabel/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "vrlabel/error.hpp"
#include "vrlabel/rng.hpp"

namespace vrlabel {
namespace {

using nlohmann::json;

constexpr double kGrid = 65536.0;  // feature targets snap to this grid
constexpr double kCanvasStep = 64.0;
const double kSubjectSizes[] = {16.0, 32.0, 64.0};

double quantize(double v) { return std::round(v * kGrid) / kGrid; }

std::size_t weighted_choice(Rng& rng, const std::vector<double>& weights) {
  double total = 0.0;
  for (const double w : weights) total += w;
  double u = rng.next_double() * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    u -= weights[i];
    if (u < 0.0) return i;
  }
  return weights.size() - 1;
}

struct InstanceDraw {
  std::size_t predicate = 0;
  std::size_t mode = 0;
  double dx = 0.0, dy = 0.0, hr = 0.0, wr = 0.0;
  std::size_t subject_category = 0;
  std::size_t object_category = 0;
  double subject_size = 0.0;
};

void validate(const SynthSpec& spec) {
  if (spec.predicates.empty()) {
    throw ValidationError("synthgen: spec has no predicates");
  }
  if (spec.instances_per_predicate < 1 || spec.pairs_per_image < 1) {
    throw ValidationError(
        "synthgen: instances_per_predicate and pairs_per_image must be >= 1");
  }
  for (const PredicateSpec& pred : spec.predicates) {
    if (pred.name.empty()) {
      throw ValidationError("synthgen: predicate with empty name");
    }
    for (const SpatialMode& mode : pred.spatial_modes) {
      for (const double s : mode.spreads()) {
        if (s < 0.0 || !std::isfinite(s)) {
          throw ValidationError("synthgen: mode spread must be >= 0 for '" +
                                pred.name + "'");
        }
      }
      if (mode.weight <= 0.0) {
        throw ValidationError("synthgen: mode weight must be > 0 for '" +
                              pred.name + "'");
      }
    }
    for (const CategoryPairSpec& cp : pred.category_pairs) {
      if (cp.weight <= 0.0 || cp.subject.empty() || cp.object.empty()) {
        throw ValidationError("synthgen: bad category pair for '" + pred.name +
                              "'");
      }
    }
  }
}

}  // namespace

SynthResult generate(const SynthSpec& spec) {
  validate(spec);

  // Category vocabulary: order of first mention, then the extras.
  std::vector<std::string> category_names;
  auto add_category = [&](const std::string& name) {
    if (std::find(category_names.begin(), category_names.end(), name) ==
        category_names.end()) {
      category_names.push_back(name);
    }
  };
  for (const PredicateSpec& pred : spec.predicates) {
    for (const CategoryPairSpec& cp : pred.category_pairs) {
      add_category(cp.subject);
      add_category(cp.object);
    }
  }
  for (const std::string& name : spec.extra_categories) add_category(name);
  if (category_names.empty()) {
    throw ValidationError("synthgen: no categories defined");
  }

  SceneGraphDataset ds;
  std::vector<std::string> predicate_names;
  for (const PredicateSpec& pred : spec.predicates) {
    predicate_names.push_back(pred.name);
  }
  ds.categories = Vocab(category_names);
  ds.predicates = Vocab(std::move(predicate_names));

  const SpatialMode diffuse_default{0.0, 0.0, 1.0, 1.0, 1.0, 1.0};

  // Sample every instance's feature target and categories first.
  std::vector<std::vector<InstanceDraw>> draws(spec.predicates.size());
  for (std::size_t p = 0; p < spec.predicates.size(); ++p) {
    const PredicateSpec& pred = spec.predicates[p];
    Rng rng(spec.seed, "synthgen/predicate", p);
    std::vector<const SpatialMode*> modes;
    std::vector<double> mode_weights;
    if (pred.spatial_modes.empty()) {
      modes.push_back(&diffuse_default);
      mode_weights.push_back(1.0);
    } else {
      for (const SpatialMode& m : pred.spatial_modes) {
        modes.push_back(&m);
        mode_weights.push_back(m.weight);
      }
    }
    std::vector<double> pair_weights;
    for (const CategoryPairSpec& cp : pred.category_pairs) {
      pair_weights.push_back(cp.weight);
    }

    for (std::size_t i = 0; i < spec.instances_per_predicate; ++i) {
      InstanceDraw draw;
      draw.predicate = p;
      bool feasible = false;
      for (std::size_t attempt = 0; attempt < 100; ++attempt) {
        draw.mode = weighted_choice(rng, mode_weights);
        const SpatialMode& m = *modes[draw.mode];
        const auto spreads = m.spreads();
        draw.dx = quantize(m.dx + spreads[0] * rng.next_normal());
        draw.dy = quantize(m.dy + spreads[1] * rng.next_normal());
        draw.hr = quantize(m.height_ratio + spreads[2] * rng.next_normal());
        draw.wr = quantize(m.width_ratio + spreads[3] * rng.next_normal());
        if (draw.hr > 0.0 && draw.wr > 0.0 && std::abs(draw.dx) < 1024.0 &&
            std::abs(draw.dy) < 1024.0) {
          feasible = true;
          break;
        }
      }
      if (!feasible) {
        throw ValidationError(
            "synthgen: no feasible box pair for predicate '" + pred.name +
            "' after 100 tries (mode requires a non-positive size?)");
      }
      if (pred.category_pairs.empty()) {
        draw.subject_category = rng.next_below(ds.categories.size());
        draw.object_category = rng.next_below(ds.categories.size());
      } else {
        const CategoryPairSpec& cp =
            pred.category_pairs[weighted_choice(rng, pair_weights)];
        draw.subject_category = *ds.categories.index(cp.subject);
        draw.object_category = *ds.categories.index(cp.object);
      }
      draw.subject_size = kSubjectSizes[rng.next_below(3)];
      draws[p].push_back(draw);
    }
  }

  // Interleave predicates round-robin and pack into images.
  std::vector<const InstanceDraw*> sequence;
  for (std::size_t i = 0; i < spec.instances_per_predicate; ++i) {
    for (std::size_t p = 0; p < spec.predicates.size(); ++p) {
      sequence.push_back(&draws[p][i]);
    }
  }

  json manifest_instances = json::array();
  const std::size_t num_images =
      (sequence.size() + spec.pairs_per_image - 1) / spec.pairs_per_image;
  for (std::size_t img = 0; img < num_images; ++img) {
    ImageRecord image;
    {
      std::ostringstream os;
      os << "img_" << img;
      image.id = os.str();
    }
    Rng layout(spec.seed, "synthgen/layout", img);
    const std::size_t begin = img * spec.pairs_per_image;
    const std::size_t end =
        std::min(sequence.size(), begin + spec.pairs_per_image);
    for (std::size_t at = begin; at < end; ++at) {
      const InstanceDraw& draw = *sequence[at];
      const double s = draw.subject_size;
      const std::size_t duo = at - begin;
      // 64-aligned placement keeps every coordinate an exact multiple of the
      // subject size, which keeps the extracted features exact.
      double y = 2048.0 + kCanvasStep * static_cast<double>(layout.next_below(4));
      double x = kCanvasStep * (1.0 + 8.0 * static_cast<double>(duo));
      double yo = y - draw.dy * s;
      double xo = x - draw.dx * s;
      const double min_y = std::min(y, yo);
      const double min_x = std::min(x, xo);
      if (min_y < 0.0) {
        const double t = kCanvasStep * std::ceil(-min_y / kCanvasStep);
        y += t;
        yo += t;
      }
      if (min_x < 0.0) {
        const double t = kCanvasStep * std::ceil(-min_x / kCanvasStep);
        x += t;
        xo += t;
      }
      const std::size_t subject_index = image.objects.size();
      image.objects.push_back(
          {BoundingBox{y, x, s, s}, draw.subject_category});
      image.objects.push_back(
          {BoundingBox{yo, xo, draw.hr * s, draw.wr * s},
           draw.object_category});
      image.relationships.push_back(
          {subject_index, subject_index + 1, draw.predicate});
      manifest_instances.push_back(
          {{"image", image.id},
           {"subject", subject_index},
           {"object", subject_index + 1},
           {"predicate", ds.predicates.name(draw.predicate)},
           {"mode", draw.mode},
           {"subject_category", ds.categories.name(draw.subject_category)},
           {"object_category", ds.categories.name(draw.object_category)},
           {"target", {draw.dx, draw.dy, draw.hr, draw.wr}}});
    }
    ds.images.push_back(std::move(image));
  }

  json manifest;
  manifest["spec"] = synth_spec_to_json(spec);
  json counts = json::object();
  for (std::size_t p = 0; p < spec.predicates.size(); ++p) {
    counts[ds.predicates.name(p)] = spec.instances_per_predicate;
  }
  manifest["per_predicate_counts"] = std::move(counts);
  manifest["num_images"] = num_images;
  manifest["instances"] = std::move(manifest_instances);

  return SynthResult{std::move(ds), std::move(manifest)};
}

SynthSpec synth_spec_from_json(const json& j) {
  SynthSpec spec;
  spec.seed = j.value("seed", 0ull);
  spec.instances_per_predicate =
      j.value("instances_per_predicate", std::size_t{410});
  spec.negative_pair_fraction = j.value("negative_pair_fraction", 0.2);
  spec.pairs_per_image = j.value("pairs_per_image", std::size_t{20});
  spec.extra_categories =
      j.value("extra_categories", std::vector<std::string>{});
  if (!j.contains("predicates") || !j["predicates"].is_array()) {
    throw ParseError("synth spec: missing 'predicates' array");
  }
  for (const json& jp : j["predicates"]) {
    PredicateSpec pred;
    pred.name = jp.at("name").get<std::string>();
    for (const json& jm : jp.value("spatial_modes", json::array())) {
      SpatialMode mode;
      mode.dx = jm.value("dx", 0.0);
      mode.dy = jm.value("dy", 0.0);
      mode.height_ratio = jm.value("height_ratio", 1.0);
      mode.width_ratio = jm.value("width_ratio", 1.0);
      mode.spread = jm.value("spread", 0.0);
      mode.weight = jm.value("weight", 1.0);
      if (jm.contains("spreads")) {
        const auto values = jm["spreads"].get<std::vector<double>>();
        if (values.size() != 4) {
          throw ParseError("synth spec: 'spreads' must list 4 values");
        }
        mode.per_coord_spread = {values[0], values[1], values[2], values[3]};
      }
      pred.spatial_modes.push_back(mode);
    }
    for (const json& jc : jp.value("category_pairs", json::array())) {
      CategoryPairSpec cp;
      cp.subject = jc.at("subject").get<std::string>();
      cp.object = jc.at("object").get<std::string>();
      cp.weight = jc.value("weight", 1.0);
      pred.category_pairs.push_back(cp);
    }
    spec.predicates.push_back(std::move(pred));
  }
  return spec;
}

json synth_spec_to_json(const SynthSpec& spec) {
  json out;
  out["seed"] = spec.seed;
  out["instances_per_predicate"] = spec.instances_per_predicate;
  out["negative_pair_fraction"] = spec.negative_pair_fraction;
  out["pairs_per_image"] = spec.pairs_per_image;
  out["extra_categories"] = spec.extra_categories;
  json jpredicates = json::array();
  for (const PredicateSpec& pred : spec.predicates) {
    json jp;
    jp["name"] = pred.name;
    json jmodes = json::array();
    for (const SpatialMode& m : pred.spatial_modes) {
      json jm{{"dx", m.dx},
              {"dy", m.dy},
              {"height_ratio", m.height_ratio},
              {"width_ratio", m.width_ratio},
              {"spread", m.spread},
              {"weight", m.weight}};
      if (m.per_coord_spread) {
        jm["spreads"] = std::vector<double>(m.per_coord_spread->begin(),
                                            m.per_coord_spread->end());
      }
      jmodes.push_back(std::move(jm));
    }
    jp["spatial_modes"] = std::move(jmodes);
    json jcats = json::array();
    for (const CategoryPairSpec& cp : pred.category_pairs) {
      jcats.push_back({{"subject", cp.subject},
                       {"object", cp.object},
                       {"weight", cp.weight}});
    }
    jp["category_pairs"] = std::move(jcats);
    jpredicates.push_back(std::move(jp));
  }
  out["predicates"] = std::move(jpredicates);
  return out;
}

SynthSpec acceptance_spec(std::uint64_t seed) {
  SynthSpec spec;
  spec.seed = seed;
  spec.instances_per_predicate = 410;
  spec.negative_pair_fraction = 0.2;
  spec.pairs_per_image = 20;

  PredicateSpec fly;
  fly.name = "fly";
  fly.spatial_modes = {{0.0, 5.0, 0.5, 0.5, 0.08, 1.0}};
  fly.category_pairs = {{"person", "kite", 2.0}, {"dog", "kite", 1.0}};

  PredicateSpec carry;
  carry.name = "carry";
  carry.spatial_modes = {{0.0, -3.0, 0.4, 0.4, 0.08, 1.0}};
  carry.category_pairs = {{"person", "bag", 2.0}, {"dog", "bag", 1.0}};

  PredicateSpec ride;
  ride.name = "ride";
  ride.spatial_modes = {{0.0, 1.0, 1.2, 1.2, 0.8, 1.0}};
  ride.category_pairs = {{"person", "bike", 1.0}, {"person", "horse", 1.0}};

  PredicateSpec look;
  look.name = "look";
  look.spatial_modes = {{0.0, 0.5, 0.8, 0.8, 0.8, 1.0}};
  look.category_pairs = {{"person", "phone", 1.0}, {"person", "laptop", 1.0}};

  PredicateSpec hold;
  hold.name = "hold";
  hold.spatial_modes = {{0.0, -1.5, 0.6, 0.6, 0.08, 0.5},
                        {1.5, 1.8, 1.4, 1.4, 0.08, 0.3},
                        {-1.0, 3.6, 0.9, 0.9, 0.08, 0.2}};
  hold.category_pairs = {{"person", "cup", 1.0},
                         {"person", "box", 1.0},
                         {"dog", "stick", 1.0}};

  spec.predicates = {std::move(fly), std::move(carry), std::move(ride),
                     std::move(look), std::move(hold)};
  return spec;
}

SynthSpec planted_cluster_spec(std::size_t k, std::uint64_t seed) {
  if (k < 1 || k > 5) {
    throw ValidationError("planted_cluster_spec: k must be in [1, 5]");
  }
  // Skewed subtype weights keep well over 30% of pairwise distances inside
  // clusters, so the 0.3-quantile bandwidth stays a within-cluster scale.
  static const std::vector<std::vector<double>> kWeights = {
      {1.0},
      {0.7, 0.3},
      {0.62, 0.22, 0.16},
      {0.60, 0.16, 0.13, 0.11},
      {0.60, 0.13, 0.10, 0.09, 0.08}};
  SynthSpec spec;
  spec.seed = seed;
  spec.instances_per_predicate = 400;
  spec.negative_pair_fraction = 0.0;
  spec.pairs_per_image = 20;

  // Modes are separated in dx/dy with fixed size ratios and noise on dy only,
  // so each cluster is a short one-dimensional segment after standardization.
  // Adjacent modes sit ~5 apart in feature space against a 0.15 spread.
  PredicateSpec pred;
  pred.name = "planted";
  pred.category_pairs = {{"person", "thing", 1.0}};
  for (std::size_t m = 0; m < k; ++m) {
    const auto fm = static_cast<double>(m);
    SpatialMode mode{2.0 * fm, 3.0 * fm, 0.8125, 0.8125, 0.15,
                     kWeights[k - 1][m], {}};
    mode.per_coord_spread = {0.0, 0.15, 0.0, 0.0};
    pred.spatial_modes.push_back(mode);
  }
  spec.predicates.push_back(std::move(pred));
  return spec;
}

}  // namespace vrlabel
