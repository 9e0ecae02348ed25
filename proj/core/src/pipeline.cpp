#include "cosal/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "cosal/parallel.hpp"
#include "json.hpp"

namespace cosal::pipeline {

RefineOutcome refine_attention(const ScalarMap& attention, const ColorImage* color,
                               const ranking::RankOptions& options) {
  if (attention.max() == attention.min()) return {attention, true};
  std::optional<ranking::RankingGraph> graph;
  try {
    graph.emplace(ranking::build_ranking_graph(attention, color));
  } catch (const NoSeeds&) {
    return {attention, true};
  }
  const ranking::RankResult ranked = ranking::manifold_rank(*graph, options);
  const RealGrid lattice(graph->lattice_height(), graph->lattice_width(), ranked.scores);
  const RealGrid upsampled = resize_bilinear(lattice, attention.height(), attention.width());
  return {minmax_normalize(upsampled), false, ranked.iterations, ranked.residual};
}

RefineOutcome ManifoldRankingRefiner::refine(const ScalarMap& attention,
                                             const ColorImage* color) const {
  return refine_attention(attention, color, options_);
}

ScalarMap fuse(const ScalarMap& attention, const ScalarMap& prior) {
  if (!attention.same_shape(prior)) {
    throw DimensionMismatch(attention.height(), attention.width(), prior.height(), prior.width());
  }
  std::vector<double> out(prior.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = attention[i] * prior[i];
  return ScalarMap(prior.height(), prior.width(), std::move(out));
}

ScalarMap naive_prior(const ColorImage& image) {
  const std::size_t h = image.height;
  const std::size_t w = image.width;
  const std::size_t n = h * w;
  double mean[3] = {0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < 3; ++c) mean[c] += image.values[3 * i + c];
  }
  for (double& m : mean) m /= static_cast<double>(n);
  const double cy = (static_cast<double>(h) - 1.0) / 2.0;
  const double cx = (static_cast<double>(w) - 1.0) / 2.0;
  const double sy = std::max(1.0, 0.25 * static_cast<double>(h));
  const double sx = std::max(1.0, 0.25 * static_cast<double>(w));
  RealGrid raw(h, w);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      const std::size_t i = r * w + c;
      double contrast = 0.0;
      for (std::size_t ch = 0; ch < 3; ++ch) {
        const double d = image.values[3 * i + ch] - mean[ch];
        contrast += d * d;
      }
      const double dy = (static_cast<double>(r) - cy) / sy;
      const double dx = (static_cast<double>(c) - cx) / sx;
      raw(r, c) = std::sqrt(contrast) * std::exp(-0.5 * (dx * dx + dy * dy));
    }
  }
  return minmax_normalize(raw);
}

const ImagePrediction* GroupPrediction::find(std::string_view id) const noexcept {
  for (const auto& img : images) {
    if (img.id == id) return &img;
  }
  return nullptr;
}

GroupPrediction run_group(const coattention::GroupFeatureSet& features,
                          const std::map<std::string, ScalarMap>& priors,
                          const std::map<std::string, ColorImage>* colors,
                          const PipelineOptions& options) {
  for (const auto& member : features.members()) {
    if (!priors.contains(member.id)) throw Error("missing saliency prior for image " + member.id);
  }
  coattention::CoattentionOptions co;
  co.eigvecs = 1;
  co.eigen = options.eigen;
  co.workers = options.workers;
  const coattention::CoattentionResult attention = coattention::coattention_maps(features, co);

  const std::shared_ptr<const AttentionRefiner> refiner =
      options.refiner ? options.refiner : std::make_shared<ManifoldRankingRefiner>();

  GroupPrediction out;
  out.degenerate = attention.degenerate;
  out.eigen_tie = attention.eigen_tie;
  out.eigen_iterations = attention.iterations;
  if (!attention.stats.eigenvalues.empty()) out.top_eigenvalue = attention.stats.eigenvalues.front();
  out.images.resize(features.size());

  parallel_for(features.size(), options.workers, [&](std::size_t n) {
    const auto& member = features.members()[n];
    ImagePrediction img;
    img.id = member.id;
    img.attention = attention.maps[n].front();
    img.prior = priors.at(member.id);

    std::optional<ColorImage> color;
    if (colors) {
      if (const auto it = colors->find(member.id); it != colors->end()) {
        color = resize_area(it->second, member.features.height(), member.features.width());
      }
    }
    const RefineOutcome refined = refiner->refine(img.attention, color ? &*color : nullptr);
    img.refined = refined.map;
    img.refine_fallback = refined.fallback;
    img.rank_iterations = refined.iterations;
    img.refined_resized = resize_bilinear(img.refined, img.prior.height(), img.prior.width());
    img.final_map = fuse(img.refined_resized, img.prior);
    out.images[n] = std::move(img);
  });
  return out;
}

std::vector<GroupOutcome> run_groups(const std::vector<GroupJob>& jobs,
                                     const PipelineOptions& options) {
  std::vector<GroupOutcome> outcomes(jobs.size());
  PipelineOptions inner = options;
  inner.workers = 1;
  parallel_for(jobs.size(), options.workers, [&](std::size_t g) {
    const GroupJob& job = jobs[g];
    GroupOutcome& outcome = outcomes[g];
    outcome.name = job.name;
    if (!job.load_error.empty() || !job.features) {
      outcome.error = job.load_error.empty() ? "no features" : job.load_error;
      return;
    }
    try {
      outcome.prediction =
          run_group(*job.features, job.priors, job.colors.empty() ? nullptr : &job.colors, inner);
    } catch (const std::exception& e) {
      outcome.error = e.what();
    }
  });
  return outcomes;
}

std::string run_report_json(const std::vector<GroupOutcome>& outcomes) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["stage_order"] = kStageOrder;
  j["covariance"] = kCovarianceDefinition;
  ordered_json groups = ordered_json::array();
  for (const auto& o : outcomes) {
    ordered_json g;
    g["group"] = o.name;
    if (!o.prediction) {
      g["error"] = o.error;
      groups.push_back(std::move(g));
      continue;
    }
    const GroupPrediction& p = *o.prediction;
    ordered_json warnings = ordered_json::array();
    if (p.degenerate) warnings.push_back("degenerate covariance");
    if (p.eigen_tie) warnings.push_back("eigen tie");
    ordered_json images = ordered_json::array();
    for (const auto& img : p.images) {
      if (img.refine_fallback) warnings.push_back("no-seed fallback: " + img.id);
      images.push_back({{"id", img.id}, {"rank_iterations", img.rank_iterations},
                        {"refine_fallback", img.refine_fallback}});
    }
    g["top_eigenvalue"] = p.top_eigenvalue;
    g["eigen_iterations"] = p.eigen_iterations;
    g["images"] = std::move(images);
    g["warnings"] = std::move(warnings);
    groups.push_back(std::move(g));
  }
  j["groups"] = std::move(groups);
  return j.dump(2) + "\n";
}

}  // namespace cosal::pipeline
