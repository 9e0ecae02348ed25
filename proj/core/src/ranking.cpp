#include "cosal/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

namespace cosal::ranking {
namespace {

std::vector<double> normalize_scores(const std::vector<double>& raw) {
  const auto [lo_it, hi_it] = std::minmax_element(raw.begin(), raw.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  std::vector<double> out(raw.size(), 0.0);
  if (hi > lo) {
    for (std::size_t i = 0; i < raw.size(); ++i) out[i] = (raw[i] - lo) / (hi - lo);
  } else if (hi > 0.0) {
    std::fill(out.begin(), out.end(), 1.0);
  }
  return out;
}

}  // namespace

RankingGraph::RankingGraph(std::vector<std::vector<Edge>> adjacency, std::vector<double> seeds)
    : adjacency_(std::move(adjacency)), seeds_(std::move(seeds)) {
  if (adjacency_.empty()) throw Error("ranking graph needs at least one node");
  if (seeds_.size() != adjacency_.size()) throw Error("seed vector length differs from node count");
  degree_.assign(adjacency_.size(), 0.0);
  for (std::size_t i = 0; i < adjacency_.size(); ++i) {
    for (const Edge& e : adjacency_[i]) {
      if (e.to >= adjacency_.size()) throw Error("edge endpoint out of range");
      if (e.to == i) throw Error("ranking graph must not contain self loops");
      if (!(e.weight >= 0.0) || !std::isfinite(e.weight)) {
        throw Error("edge weights must be finite and non-negative");
      }
      degree_[i] += e.weight;
    }
  }
  for (double y : seeds_) {
    if (!(y >= 0.0) || !std::isfinite(y)) throw Error("seed values must be finite and non-negative");
  }
}

RankingGraph RankingGraph::from_dense(const Matrix& affinity, std::vector<double> seeds) {
  const std::size_t n = affinity.rows();
  if (affinity.cols() != n) throw Error("affinity must be square");
  if (!affinity.is_symmetric()) throw Error("affinity must be symmetric");
  std::vector<std::vector<Edge>> adjacency(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (affinity(i, i) != 0.0) throw Error("affinity diagonal must be zero");
    for (std::size_t j = 0; j < n; ++j) {
      if (affinity(i, j) < 0.0) throw Error("affinity must be non-negative");
      if (i != j && affinity(i, j) != 0.0) adjacency[i].push_back({j, affinity(i, j)});
    }
  }
  return RankingGraph(std::move(adjacency), std::move(seeds));
}

Matrix RankingGraph::dense_affinity() const {
  Matrix w(nodes(), nodes());
  for (std::size_t i = 0; i < nodes(); ++i) {
    for (const Edge& e : adjacency_[i]) w(i, e.to) = e.weight;
  }
  return w;
}

void RankingGraph::set_lattice(std::size_t h, std::size_t w) {
  if (h * w != nodes()) throw Error("lattice shape does not match node count");
  lattice_h_ = h;
  lattice_w_ = w;
}

RankingGraph build_ranking_graph(const ScalarMap& attention, const ColorImage* color,
                                 std::size_t max_side) {
  if (color && (color->height != attention.height() || color->width != attention.width())) {
    throw DimensionMismatch(attention.height(), attention.width(), color->height, color->width);
  }
  const std::size_t h = std::min(attention.height(), max_side);
  const std::size_t w = std::min(attention.width(), max_side);
  RealGrid lattice = resize_area(attention.grid(), h, w);
  for (std::size_t i = 0; i < lattice.size(); ++i) lattice[i] = std::clamp(lattice[i], 0.0, 1.0);
  const ScalarMap cells(std::move(lattice));

  const std::size_t dims = color ? 4 : 1;
  std::vector<double> features(cells.size() * dims);
  std::optional<ColorImage> small;
  if (color) small = resize_area(*color, h, w);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    features[i * dims] = cells[i];
    if (small) {
      for (std::size_t c = 0; c < 3; ++c) features[i * dims + 1 + c] = small->values[3 * i + c];
    }
  }
  auto distance_sq = [&](std::size_t a, std::size_t b) {
    double acc = 0.0;
    for (std::size_t d = 0; d < dims; ++d) {
      const double diff = features[a * dims + d] - features[b * dims + d];
      acc += diff * diff;
    }
    return acc;
  };

  struct RawEdge {
    std::size_t a, b;
    double d2;
  };
  std::vector<RawEdge> edges;
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      const std::size_t a = r * w + c;
      // Forward half of the 8-neighbourhood; the rest arrive by symmetry.
      const std::ptrdiff_t offsets[4][2] = {{0, 1}, {1, -1}, {1, 0}, {1, 1}};
      for (const auto& off : offsets) {
        const auto rr = static_cast<std::ptrdiff_t>(r) + off[0];
        const auto cc = static_cast<std::ptrdiff_t>(c) + off[1];
        if (rr < 0 || cc < 0 || rr >= static_cast<std::ptrdiff_t>(h) ||
            cc >= static_cast<std::ptrdiff_t>(w)) {
          continue;
        }
        const std::size_t b = static_cast<std::size_t>(rr) * w + static_cast<std::size_t>(cc);
        edges.push_back({a, b, distance_sq(a, b)});
      }
    }
  }
  double sigma = 0.0;
  for (const RawEdge& e : edges) sigma += std::sqrt(e.d2);
  if (!edges.empty()) sigma /= static_cast<double>(edges.size());

  std::vector<std::vector<Edge>> adjacency(cells.size());
  for (const RawEdge& e : edges) {
    const double weight = sigma > 0.0 ? std::exp(-e.d2 / (2.0 * sigma * sigma)) : 1.0;
    adjacency[e.a].push_back({e.b, weight});
    adjacency[e.b].push_back({e.a, weight});
  }
  for (auto& list : adjacency) {
    std::sort(list.begin(), list.end(), [](const Edge& x, const Edge& y) { return x.to < y.to; });
  }

  const double peak = cells.max();
  if (peak <= 0.0) throw NoSeeds();
  const double threshold = std::min(adaptive_threshold(cells), peak);
  std::vector<double> seeds(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) seeds[i] = cells[i] >= threshold ? 1.0 : 0.0;

  RankingGraph graph(std::move(adjacency), std::move(seeds));
  graph.set_lattice(h, w);
  return graph;
}

Matrix normalized_affinity(const RankingGraph& graph) {
  Matrix s(graph.nodes(), graph.nodes());
  for (std::size_t i = 0; i < graph.nodes(); ++i) {
    for (const Edge& e : graph.neighbors(i)) {
      const double denom = std::sqrt(graph.degree(i) * graph.degree(e.to));
      s(i, e.to) = denom > 0.0 ? e.weight / denom : 0.0;
    }
  }
  return s;
}

RankResult manifold_rank(const RankingGraph& graph, const RankOptions& options) {
  if (!(options.alpha > 0.0 && options.alpha < 1.0)) throw Error("alpha must lie in (0, 1)");
  const std::size_t n = graph.nodes();
  std::vector<double> inv_sqrt_degree(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (graph.degree(i) > 0.0) inv_sqrt_degree[i] = 1.0 / std::sqrt(graph.degree(i));
  }
  // S is symmetric with spectral norm <= 1, so |f - f*|_2 <= |r|_2 / (1 - alpha).
  // Stopping at |r|_2 <= tolerance * (1 - alpha) bounds every entry's error.
  const double stop = options.tolerance * (1.0 - options.alpha);
  const std::vector<double>& y = graph.seeds();
  std::vector<double> f = y;
  std::vector<double> next(n);
  double residual = 0.0;
  for (int it = 0; it <= options.max_iterations; ++it) {
    residual = 0.0;
    double residual_sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (const Edge& e : graph.neighbors(i)) acc += e.weight * inv_sqrt_degree[e.to] * f[e.to];
      next[i] = options.alpha * inv_sqrt_degree[i] * acc + y[i];
      const double d = next[i] - f[i];
      residual = std::max(residual, std::abs(d));
      residual_sq += d * d;
    }
    if (std::sqrt(residual_sq) <= stop) {
      RankResult out;
      out.scores = normalize_scores(f);
      out.raw = std::move(f);
      out.iterations = it;
      out.residual = residual;
      return out;
    }
    f.swap(next);
  }
  throw ConvergenceError("manifold ranking did not converge", f, residual, options.max_iterations);
}

}  // namespace cosal::ranking
