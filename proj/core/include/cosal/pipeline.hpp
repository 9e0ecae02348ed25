#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cosal/coattention.hpp"
#include "cosal/grid.hpp"
#include "cosal/ranking.hpp"

namespace cosal::pipeline {

struct RefineOutcome {
  ScalarMap map;
  bool fallback = false;  ///< ranking skipped (no seeds or constant input)
  int iterations = 0;
  double residual = 0.0;
};

/// Post-processing applied to a co-attention map before fusion.
class AttentionRefiner {
 public:
  virtual ~AttentionRefiner() = default;
  virtual std::string name() const = 0;
  virtual RefineOutcome refine(const ScalarMap& attention, const ColorImage* color) const = 0;
};

class ManifoldRankingRefiner final : public AttentionRefiner {
 public:
  explicit ManifoldRankingRefiner(ranking::RankOptions options = {}) : options_(options) {}
  std::string name() const override { return "manifold-ranking"; }
  RefineOutcome refine(const ScalarMap& attention, const ColorImage* color) const override;

 private:
  ranking::RankOptions options_;
};

class IdentityRefiner final : public AttentionRefiner {
 public:
  std::string name() const override { return "identity"; }
  RefineOutcome refine(const ScalarMap& attention, const ColorImage*) const override {
    return {attention};
  }
};

/// Ranks the attention lattice from its own seeds, upsamples the scores back
/// to the attention resolution and min-max normalises them. Constant maps and
/// maps without seeds are returned unchanged.
RefineOutcome refine_attention(const ScalarMap& attention, const ColorImage* color = nullptr,
                               const ranking::RankOptions& options = {});

/// Element-wise product; shapes must match.
ScalarMap fuse(const ScalarMap& attention, const ScalarMap& prior);

/// Smoke-test prior only (centred Gaussian times colour contrast); not a
/// trained saliency model.
ScalarMap naive_prior(const ColorImage& image);

struct ImagePrediction {
  std::string id;
  ScalarMap attention;        ///< co-attention, feature resolution
  ScalarMap refined;          ///< refined co-attention, feature resolution
  ScalarMap refined_resized;  ///< refined co-attention at prior resolution
  ScalarMap prior;
  ScalarMap final_map;        ///< refined_resized * prior
  bool refine_fallback = false;
  int rank_iterations = 0;
};

struct GroupPrediction {
  std::vector<ImagePrediction> images;  ///< sorted by id
  bool degenerate = false;
  bool eigen_tie = false;
  std::vector<int> eigen_iterations;
  double top_eigenvalue = 0.0;

  const ImagePrediction* find(std::string_view id) const noexcept;
};

struct PipelineOptions {
  coattention::EigenOptions eigen;
  /// Defaults to manifold ranking when null.
  std::shared_ptr<const AttentionRefiner> refiner;
  unsigned workers = 1;
};

/// Co-attention (top principal direction) -> refinement -> resize to the prior
/// -> fusion, for one group. `priors` and `colors` are keyed by image id.
GroupPrediction run_group(const coattention::GroupFeatureSet& features,
                          const std::map<std::string, ScalarMap>& priors,
                          const std::map<std::string, ColorImage>* colors = nullptr,
                          const PipelineOptions& options = {});

struct GroupJob {
  std::string name;
  std::optional<coattention::GroupFeatureSet> features;
  std::map<std::string, ScalarMap> priors;
  std::map<std::string, ColorImage> colors;
  std::string load_error;  ///< set when inputs could not be assembled
};

struct GroupOutcome {
  std::string name;
  std::optional<GroupPrediction> prediction;
  std::string error;  ///< non-empty when the group failed
};

/// Runs independent groups concurrently; a failure stays with its group.
std::vector<GroupOutcome> run_groups(const std::vector<GroupJob>& jobs,
                                     const PipelineOptions& options = {});

/// Stage order recorded in run reports.
inline constexpr const char* kStageOrder =
    "coattention(top-1 principal direction) -> refine(lattice <= 64x64) -> "
    "bilinear resize to prior -> element-wise product";
inline constexpr const char* kCovarianceDefinition =
    "(1/Z) sum (x - mean)(x - mean)^T over all descriptors of the group";

/// Per-run JSON: stage order, covariance definition, and per group the images
/// processed, errors and warnings (degenerate covariance, eigen tie, no-seed
/// fallback) with iteration counts.
std::string run_report_json(const std::vector<GroupOutcome>& outcomes);

}  // namespace cosal::pipeline
