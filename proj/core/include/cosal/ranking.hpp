#pragma once

#include <cstddef>
#include <vector>

#include "cosal/grid.hpp"
#include "cosal/linalg.hpp"

namespace cosal::ranking {

struct Edge {
  std::size_t to = 0;
  double weight = 0.0;
};

/// Undirected weighted graph with a seed indicator per node.
/// Invariants: symmetric weights, no self loops, non-negative weights.
class RankingGraph {
 public:
  RankingGraph(std::vector<std::vector<Edge>> adjacency, std::vector<double> seeds);
  /// Throws Error when `affinity` is not symmetric, has a non-zero diagonal or
  /// negative entries.
  static RankingGraph from_dense(const Matrix& affinity, std::vector<double> seeds);

  std::size_t nodes() const noexcept { return adjacency_.size(); }
  const std::vector<Edge>& neighbors(std::size_t node) const noexcept { return adjacency_[node]; }
  double degree(std::size_t node) const noexcept { return degree_[node]; }
  const std::vector<double>& seeds() const noexcept { return seeds_; }
  Matrix dense_affinity() const;

  /// Lattice shape when the graph came from a map, else 0 x 0.
  std::size_t lattice_height() const noexcept { return lattice_h_; }
  std::size_t lattice_width() const noexcept { return lattice_w_; }
  void set_lattice(std::size_t h, std::size_t w);

 private:
  std::vector<std::vector<Edge>> adjacency_;
  std::vector<double> degree_;
  std::vector<double> seeds_;
  std::size_t lattice_h_ = 0;
  std::size_t lattice_w_ = 0;
};

inline constexpr std::size_t kMaxLatticeSide = 64;

/// 8-connected lattice over the (area-downsampled, at most 64 x 64) attention
/// map. Edge affinity exp(-d^2 / (2 sigma^2)) over the feature distance of
/// (attention, optional colour); sigma is the mean neighbour distance. Seeds
/// are cells at or above min(adaptive_threshold, max attention).
/// Throws NoSeeds for an all-zero attention map.
RankingGraph build_ranking_graph(const ScalarMap& attention, const ColorImage* color = nullptr,
                                 std::size_t max_side = kMaxLatticeSide);

struct RankOptions {
  double alpha = 0.99;
  /// Bound on the distance of the result to the exact solution, enforced via
  /// the fixed-point residual |f - (alpha S f + y)|_2 <= tolerance (1 - alpha).
  double tolerance = 1e-8;
  int max_iterations = 10000;
};

struct RankResult {
  std::vector<double> raw;     ///< f = (I - alpha S)^-1 y
  std::vector<double> scores;  ///< min-max normalised raw scores
  int iterations = 0;
  double residual = 0.0;  ///< |f - (alpha S f + y)|_inf at the returned f
};

/// Manifold ranking by fixed-point iteration f <- alpha S f + y with
/// S = D^-1/2 W D^-1/2. Throws ConvergenceError at the iteration cap.
RankResult manifold_rank(const RankingGraph& graph, const RankOptions& options = {});

/// Normalised affinity S as a dense matrix.
Matrix normalized_affinity(const RankingGraph& graph);

}  // namespace cosal::ranking
