#include <doctest.h>

#include <algorithm>
#include <filesystem>

#include "cosal/coft.hpp"
#include "cosal/image_io.hpp"
#include "cosal/pipeline.hpp"
#include "json.hpp"
#include "oracles.hpp"

using namespace cosal;
using namespace cosal::pipeline;
namespace fs = std::filesystem;

namespace {

const fs::path kData = COSAL_TEST_DATA;

struct Inputs {
  coattention::GroupFeatureSet features;
  std::map<std::string, ScalarMap> priors;
};

Inputs planted_inputs(const gen::PlantedGroup& planted, double prior_fill = 1.0) {
  std::vector<coattention::GroupMember> members;
  std::map<std::string, ScalarMap> priors;
  for (std::size_t n = 0; n < planted.stacks.size(); ++n) {
    const std::string id = "p" + std::to_string(n);
    members.push_back({id, planted.stacks[n]});
    priors.emplace(id, ScalarMap(planted.stacks[n].height() * 2, planted.stacks[n].width() * 2, prior_fill));
  }
  return {coattention::GroupFeatureSet(std::move(members)), std::move(priors)};
}

double contrast(const ScalarMap& map, const LabelMask& mask) {
  double in = 0.0, out = 0.0;
  std::size_t n_in = 0, n_out = 0;
  for (std::size_t i = 0; i < map.size(); ++i) {
    if (mask[i]) {
      in += map[i];
      ++n_in;
    } else {
      out += map[i];
      ++n_out;
    }
  }
  return in / static_cast<double>(n_in) - out / static_cast<double>(n_out);
}

Inputs fixture_inputs() {
  std::vector<coattention::GroupMember> members;
  std::map<std::string, ScalarMap> priors;
  for (const char* id : {"a", "b", "c"}) {
    members.push_back({id, read_coft(kData / "pipeline" / "features" / "planted" / (std::string(id) + ".coft"))});
    priors.emplace(id, read_scalar_map(kData / "pipeline" / "priors" / "planted" / (std::string(id) + ".png")));
  }
  return {coattention::GroupFeatureSet(std::move(members)), std::move(priors)};
}

}  // namespace

TEST_CASE("fuse examples") {
  gen::Rng rng(41);
  const ScalarMap prior = gen::random_map(rng, 4, 6);
  CHECK(fuse(ScalarMap(4, 6, 1.0), prior) == prior);
  CHECK(fuse(ScalarMap(4, 6, 0.0), prior).max() == 0.0);
  const ScalarMap f = fuse(ScalarMap(1, 2, std::vector<double>{0.5, 1.0}),
                           ScalarMap(1, 2, std::vector<double>{0.8, 0.5}));
  CHECK(f[0] == 0.4);
  CHECK(f[1] == 0.5);
  CHECK_THROWS_AS(fuse(ScalarMap(2, 2), ScalarMap(2, 3)), DimensionMismatch);
}

TEST_CASE("fusion never exceeds either input and stays in the unit interval") {
  gen::Rng rng(42);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t h = 1 + rng() % 8, w = 1 + rng() % 8;
    const ScalarMap a = gen::random_map(rng, h, w);
    const ScalarMap b = gen::random_map(rng, h, w);
    const ScalarMap f = fuse(a, b);
    for (std::size_t i = 0; i < f.size(); ++i) {
      CHECK(f[i] <= std::min(a[i], b[i]));
      CHECK(f[i] >= 0.0);
    }
  }
}

TEST_CASE("refinement falls back on constant maps") {
  for (double v : {0.0, 0.3, 1.0}) {
    const ScalarMap m(5, 5, v);
    const RefineOutcome r = refine_attention(m);
    CHECK(r.fallback);
    CHECK(r.map == m);
  }
}

TEST_CASE("refined maps are normalised and keep the attention shape") {
  gen::Rng rng(43);
  for (int trial = 0; trial < 20; ++trial) {
    const ScalarMap m = gen::random_map(rng, 3 + rng() % 80, 3 + rng() % 80);
    const RefineOutcome r = refine_attention(m);
    CHECK_FALSE(r.fallback);
    CHECK(r.map.same_shape(m));
    CHECK(r.map.min() == 0.0);
    CHECK(r.map.max() == 1.0);
  }
}

TEST_CASE("refinement does not reduce the contrast of a planted quadrant") {
  gen::Rng rng(44);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t side = 8 + rng() % 24;
    cosal::Grid<LabelMask::Label> g(side, side);
    std::vector<double> v(side * side);
    for (std::size_t r = 0; r < side; ++r) {
      for (std::size_t c = 0; c < side; ++c) {
        const bool inside = r < side / 2 && c < side / 2;
        g(r, c) = inside ? 1 : 0;
        v[r * side + c] = std::clamp((inside ? 0.7 : 0.2) + gen::uniform(rng, -0.15, 0.15), 0.0, 1.0);
      }
    }
    const LabelMask mask(g);
    const ScalarMap before = minmax_normalize(RealGrid(side, side, v));
    const ScalarMap after = refine_attention(before).map;
    CHECK(contrast(after, mask) >= contrast(before, mask) - 1e-12);
  }
}

TEST_CASE("the identity refiner makes the final map the resized attention times the prior") {
  gen::Rng rng(45);
  const auto planted = gen::planted_group(rng, {});
  const Inputs in = planted_inputs(planted);
  PipelineOptions opts;
  opts.refiner = std::make_shared<IdentityRefiner>();
  const GroupPrediction p = run_group(in.features, in.priors, nullptr, opts);
  for (const auto& img : p.images) {
    CHECK(img.refined == img.attention);
    CHECK(img.final_map == img.refined_resized);
    CHECK(img.refined_resized == resize_bilinear(img.attention, 32, 32));
  }
}

TEST_CASE("a degenerate group gives all-zero final maps") {
  const FeatureStack s(4, 4, 3, std::vector<double>(48, 2.0));
  std::map<std::string, ScalarMap> priors{{"x", ScalarMap(8, 8, 0.9)}, {"y", ScalarMap(8, 8, 0.4)}};
  const GroupPrediction p = run_group(coattention::GroupFeatureSet({{"x", s}, {"y", s}}), priors);
  CHECK(p.degenerate);
  for (const auto& img : p.images) {
    CHECK(img.final_map.max() == 0.0);
    CHECK(img.refine_fallback);
  }
}

TEST_CASE("a missing prior is an error") {
  const FeatureStack s(2, 2, 2, {0, 1, 1, 0, 0, 0, 1, 1});
  CHECK_THROWS_AS(run_group(coattention::GroupFeatureSet({{"x", s}}), {}), Error);
}

TEST_CASE("pipeline outputs do not depend on input order or worker count") {
  gen::Rng rng(46);
  const auto planted = gen::planted_group(rng, {});
  const Inputs in = planted_inputs(planted, 0.8);
  const GroupPrediction ref = run_group(in.features, in.priors);

  auto members = in.features.members();
  std::reverse(members.begin(), members.end());
  PipelineOptions opts;
  opts.workers = 4;
  const GroupPrediction other = run_group(coattention::GroupFeatureSet(members), in.priors, nullptr, opts);
  for (const auto& img : ref.images) CHECK(other.find(img.id)->final_map == img.final_map);
}

TEST_CASE("stronger common activation does not weaken the final contrast") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    double last = -1.0;
    for (double amplitude : {0.5, 1.0, 2.0}) {
      gen::Rng rng(100 + seed);
      gen::PlantedOptions opts;
      opts.amplitude = amplitude;
      const auto planted = gen::planted_group(rng, opts);
      const Inputs in = planted_inputs(planted);
      PipelineOptions po;
      po.refiner = std::make_shared<IdentityRefiner>();
      const GroupPrediction p = run_group(in.features, in.priors, nullptr, po);
      double c = 0.0;
      for (std::size_t n = 0; n < p.images.size(); ++n) c += contrast(p.images[n].attention, planted.common[n]);
      c /= static_cast<double>(p.images.size());
      CHECK(c >= last - 1e-12);
      last = c;
    }
  }
}

TEST_CASE("run_groups keeps failures with their group") {
  gen::Rng rng(47);
  const auto planted = gen::planted_group(rng, {});
  const Inputs in = planted_inputs(planted);
  std::vector<GroupJob> jobs(3);
  jobs[0].name = "good";
  jobs[0].features = in.features;
  jobs[0].priors = in.priors;
  jobs[1].name = "unloadable";
  jobs[1].load_error = "features unreadable";
  jobs[2].name = "no_priors";
  jobs[2].features = in.features;
  PipelineOptions opts;
  opts.workers = 3;
  const auto outcomes = run_groups(jobs, opts);
  REQUIRE(outcomes.size() == 3);
  CHECK(outcomes[0].prediction.has_value());
  CHECK(outcomes[0].error.empty());
  CHECK(outcomes[1].error == "features unreadable");
  CHECK_FALSE(outcomes[2].prediction.has_value());
  CHECK(outcomes[2].error.find("missing saliency prior") != std::string::npos);

  const auto report = nlohmann::json::parse(run_report_json(outcomes));
  CHECK(report["stage_order"] == kStageOrder);
  CHECK(report["covariance"] == kCovarianceDefinition);
  REQUIRE(report["groups"].size() == 3);
  CHECK(report["groups"][0]["group"] == "good");
  CHECK(report["groups"][0]["images"].size() == planted.stacks.size());
  CHECK(report["groups"][0]["top_eigenvalue"].get<double>() > 0.0);
  CHECK(report["groups"][1]["error"] == "features unreadable");
}

TEST_CASE("run report lists fallbacks and degenerate groups") {
  const FeatureStack s(2, 2, 2, std::vector<double>(8, 1.0));
  GroupOutcome o;
  o.name = "flat";
  o.prediction = run_group(coattention::GroupFeatureSet({{"q", s}}), {{"q", ScalarMap(2, 2, 1.0)}});
  const auto report = nlohmann::json::parse(run_report_json({o}));
  const auto& warnings = report["groups"][0]["warnings"];
  CHECK(std::find(warnings.begin(), warnings.end(), "degenerate covariance") != warnings.end());
  CHECK(std::find(warnings.begin(), warnings.end(), "no-seed fallback: q") != warnings.end());
}

TEST_CASE("fixture group reproduces the frozen final maps") {
  const Inputs in = fixture_inputs();
  const GroupPrediction p = run_group(in.features, in.priors);
  REQUIRE(p.images.size() == 3);
  for (const auto& img : p.images) {
    const ScalarMap golden = read_scalar_map(kData / "golden" / "pipeline" / "planted" / (img.id + ".png"));
    CHECK(decode_scalar_map(encode_scalar_map(img.final_map)) == golden);
  }
}
