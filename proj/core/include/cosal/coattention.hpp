#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cosal/grid.hpp"
#include "cosal/linalg.hpp"

namespace cosal::coattention {

struct GroupMember {
  std::string id;
  FeatureStack features;
};

/// Activation stacks of one image group. Members are kept sorted by id so
/// every reduction runs in an order tied to image identity, not input position.
class GroupFeatureSet {
 public:
  /// Throws Error when empty, when ids repeat, or when channel counts differ.
  explicit GroupFeatureSet(std::vector<GroupMember> members);

  std::size_t size() const noexcept { return members_.size(); }
  std::size_t channels() const noexcept { return members_.front().features.channels(); }
  /// Z: total number of descriptors across the group.
  std::size_t descriptor_count() const noexcept { return descriptor_count_; }
  const std::vector<GroupMember>& members() const noexcept { return members_; }
  const GroupMember* find(std::string_view id) const noexcept;

 private:
  std::vector<GroupMember> members_;
  std::size_t descriptor_count_ = 0;
};

/// Group average descriptor. Per-image partial sums combine in id order.
std::vector<double> group_mean(const GroupFeatureSet& group, unsigned workers = 1);

/// (1/Z) sum of centred outer products. Exactly symmetric.
Matrix group_covariance(const GroupFeatureSet& group, std::span<const double> mean,
                        unsigned workers = 1);
Matrix group_covariance(const GroupFeatureSet& group, unsigned workers = 1);

struct EigenOptions {
  /// Stop once successive unit iterates differ by at most this angle (radians).
  double tolerance = 1e-8;
  int max_iterations = 1000;
  /// Rayleigh-quotient refinement of each converged iterate.
  bool polish = true;
  std::uint64_t seed = 0x5eed5eedULL;
};

struct EigenPairs {
  std::vector<double> eigenvalues;                ///< descending
  std::vector<std::vector<double>> eigenvectors;  ///< unit norm, mutually orthogonal
  std::vector<int> iterations;                    ///< power iterations per pair
};

/// Top-m eigenpairs of a symmetric positive semi-definite matrix by power
/// iteration with Hotelling deflation. Each vector is returned with its
/// largest-magnitude component positive.
/// Throws DegenerateCovariance for the zero matrix and ConvergenceError (with
/// the last iterate and its residual) when the iteration cap is reached.
EigenPairs top_eigenvectors(const Matrix& cov, std::size_t m, const EigenOptions& options = {});

struct ProjectionWeights {
  enum class Source { kSupervised, kPrincipal, kCustom };

  std::vector<double> weights;
  Source source = Source::kCustom;
};

/// grid(i, j) = w . (x(i, j) - mean). A zero mean gives the plain
/// class-activation projection.
RealGrid project(const ProjectionWeights& weights, const FeatureStack& stack,
                 std::span<const double> mean);

/// Sign convention for a principal direction: positive skewness of the group's
/// projection distribution; an exact tie falls back to the sign of the sum of
/// the top 1% projections by magnitude. Returns true when flipped.
bool orient_by_skewness(std::vector<double>& direction, const GroupFeatureSet& group,
                        std::span<const double> mean);

struct GroupStats {
  std::vector<double> mean;
  Matrix covariance;
  std::vector<double> eigenvalues;
  std::vector<std::vector<double>> eigenvectors;
};

struct CoattentionOptions {
  std::size_t eigvecs = 1;
  EigenOptions eigen;
  unsigned workers = 1;
};

struct CoattentionResult {
  std::vector<std::string> ids;              ///< canonical (sorted) order
  std::vector<std::vector<ScalarMap>> maps;  ///< [image][eigenvector], feature resolution
  GroupStats stats;
  bool degenerate = false;  ///< no variance: every map is all-zero
  bool eigen_tie = false;   ///< lambda1 - lambda2 < 1e-6 lambda1
  std::vector<int> iterations;

  const std::vector<ScalarMap>* maps_for(std::string_view id) const noexcept;
};

/// Per-image co-attention maps from the top `eigvecs` principal directions,
/// each min-max normalised per image.
CoattentionResult coattention_maps(const GroupFeatureSet& group,
                                   const CoattentionOptions& options = {});

}  // namespace cosal::coattention
