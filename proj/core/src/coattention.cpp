#include "cosal/coattention.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "cosal/parallel.hpp"

namespace cosal::coattention {
namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<double> start_vector(std::size_t n, std::uint64_t seed) {
  std::vector<double> v(n);
  std::uint64_t state = seed;
  for (double& x : v) {
    x = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-52 - 1.0;
  }
  return v;
}

void remove_components(std::vector<double>& v, const std::vector<std::vector<double>>& basis) {
  for (const auto& b : basis) {
    const double c = dot(v, b);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= c * b[i];
  }
}

bool normalize(std::vector<double>& v) {
  const double n = norm2(v);
  if (n == 0.0 || !std::isfinite(n)) return false;
  for (double& x : v) x /= n;
  return true;
}

// Angle between unit vectors up to sign, accurate for small angles.
double angle_between(std::span<const double> a, std::span<const double> b) {
  const double s = dot(a, b) < 0.0 ? -1.0 : 1.0;
  double sq = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - s * b[i];
    sq += d * d;
  }
  return 2.0 * std::asin(std::min(1.0, std::sqrt(sq) / 2.0));
}

double rayleigh(const Matrix& m, std::span<const double> v) { return dot(v, multiply(m, v)); }

double residual(const Matrix& m, std::span<const double> v, double lambda) {
  const auto mv = multiply(m, v);
  double worst = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) worst = std::max(worst, std::abs(mv[i] - lambda * v[i]));
  return worst;
}

void align_sign(std::vector<double>& v, std::span<const double> reference) {
  if (dot(v, reference) < 0.0) {
    for (double& x : v) x = -x;
  }
}

void canonical_sign(std::vector<double>& v) {
  std::size_t arg = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (std::abs(v[i]) > std::abs(v[arg])) arg = i;
  }
  if (v[arg] < 0.0) {
    for (double& x : v) x = -x;
  }
}

// Rayleigh-quotient iteration from a converged power iterate. Steps that move
// the vector by more than a small angle are rejected so refinement can never
// hop to a neighbouring eigenvector.
void polish(const Matrix& work, std::vector<double>& v,
            const std::vector<std::vector<double>>& previous) {
  constexpr double kMaxStep = 1e-4;
  const std::size_t n = v.size();
  for (int step = 0; step < 3; ++step) {
    const double mu = rayleigh(work, v);
    std::vector<double> y;
    // A shift equal to the eigenvalue to working precision can leave an exact
    // zero pivot; a relative nudge keeps the system solvable.
    bool solved = false;
    for (double nudge : {0.0, 1e-12}) {
      Matrix shifted = work;
      const double shift = mu + nudge * std::max(std::abs(mu), 1e-300);
      for (std::size_t i = 0; i < n; ++i) shifted(i, i) -= shift;
      if (!solve(std::move(shifted), v, y)) continue;
      remove_components(y, previous);
      if (normalize(y)) {
        solved = true;
        break;
      }
    }
    if (!solved) return;
    align_sign(y, v);
    const double moved = angle_between(y, v);
    if (moved > kMaxStep) return;
    v = std::move(y);
    if (moved < 1e-15) return;
  }
}

}  // namespace

GroupFeatureSet::GroupFeatureSet(std::vector<GroupMember> members) : members_(std::move(members)) {
  if (members_.empty()) throw Error("image group must contain at least one image");
  std::sort(members_.begin(), members_.end(),
            [](const GroupMember& a, const GroupMember& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < members_.size(); ++i) {
    if (i > 0 && members_[i].id == members_[i - 1].id) {
      throw Error("duplicate image id in group: " + members_[i].id);
    }
    if (members_[i].features.channels() == 0) throw Error("empty feature stack: " + members_[i].id);
    if (members_[i].features.channels() != members_.front().features.channels()) {
      throw Error("channel count differs within group: " + members_[i].id);
    }
    descriptor_count_ += members_[i].features.cells();
  }
}

const GroupMember* GroupFeatureSet::find(std::string_view id) const noexcept {
  const auto it = std::lower_bound(members_.begin(), members_.end(), id,
                                   [](const GroupMember& m, std::string_view key) { return m.id < key; });
  return it != members_.end() && it->id == id ? &*it : nullptr;
}

std::vector<double> group_mean(const GroupFeatureSet& group, unsigned workers) {
  const std::size_t k = group.channels();
  std::vector<std::vector<double>> partial(group.size(), std::vector<double>(k, 0.0));
  parallel_for(group.size(), workers, [&](std::size_t n) {
    const FeatureStack& stack = group.members()[n].features;
    auto& acc = partial[n];
    for (std::size_t cell = 0; cell < stack.cells(); ++cell) {
      const auto x = stack.descriptor(cell);
      for (std::size_t c = 0; c < k; ++c) acc[c] += x[c];
    }
  });
  std::vector<double> mean(k, 0.0);
  for (const auto& acc : partial) {
    for (std::size_t c = 0; c < k; ++c) mean[c] += acc[c];
  }
  const auto z = static_cast<double>(group.descriptor_count());
  for (double& v : mean) v /= z;
  return mean;
}

Matrix group_covariance(const GroupFeatureSet& group, std::span<const double> mean,
                        unsigned workers) {
  const std::size_t k = group.channels();
  if (mean.size() != k) throw Error("mean length does not match channel count");
  std::vector<Matrix> partial(group.size());
  parallel_for(group.size(), workers, [&](std::size_t n) {
    const FeatureStack& stack = group.members()[n].features;
    Matrix acc(k, k);
    std::vector<double> centred(k);
    for (std::size_t cell = 0; cell < stack.cells(); ++cell) {
      const auto x = stack.descriptor(cell);
      for (std::size_t c = 0; c < k; ++c) centred[c] = x[c] - mean[c];
      for (std::size_t r = 0; r < k; ++r) {
        const double xr = centred[r];
        auto row = acc.row(r);
        for (std::size_t c = r; c < k; ++c) row[c] += xr * centred[c];
      }
    }
    partial[n] = std::move(acc);
  });
  Matrix cov(k, k);
  for (const Matrix& acc : partial) {
    for (std::size_t r = 0; r < k; ++r) {
      for (std::size_t c = r; c < k; ++c) cov(r, c) += acc(r, c);
    }
  }
  const auto z = static_cast<double>(group.descriptor_count());
  for (std::size_t r = 0; r < k; ++r) {
    for (std::size_t c = r; c < k; ++c) {
      cov(r, c) /= z;
      cov(c, r) = cov(r, c);
    }
  }
  return cov;
}

Matrix group_covariance(const GroupFeatureSet& group, unsigned workers) {
  const auto mean = group_mean(group, workers);
  return group_covariance(group, mean, workers);
}

EigenPairs top_eigenvectors(const Matrix& cov, std::size_t m, const EigenOptions& options) {
  const std::size_t k = cov.rows();
  if (cov.cols() != k) throw Error("eigensolver needs a square matrix");
  if (!cov.is_symmetric()) throw Error("eigensolver needs a symmetric matrix");
  if (m < 1 || m > k) throw Error("requested eigenpair count outside [1, K]");
  if (cov.is_zero()) throw DegenerateCovariance();

  EigenPairs out;
  Matrix work = cov;
  for (std::size_t p = 0; p < m; ++p) {
    std::vector<double> v = start_vector(k, options.seed + p);
    remove_components(v, out.eigenvectors);
    if (!normalize(v)) {
      v.assign(k, 0.0);
      v[p] = 1.0;
      remove_components(v, out.eigenvectors);
      normalize(v);
    }
    bool converged = false;
    bool exhausted = false;
    int it = 0;
    while (it < options.max_iterations) {
      ++it;
      auto w = multiply(work, v);
      remove_components(w, out.eigenvectors);
      if (!normalize(w)) {
        exhausted = true;  // no variance left in this subspace
        break;
      }
      const double step = angle_between(w, v);
      v = std::move(w);
      if (step <= options.tolerance) {
        converged = true;
        break;
      }
    }
    if (!converged && !exhausted) {
      const double lambda = rayleigh(work, v);
      throw ConvergenceError("power iteration did not converge for eigenpair " +
                                 std::to_string(p + 1),
                             v, residual(work, v, lambda), it);
    }
    if (converged && options.polish) polish(work, v, out.eigenvectors);
    double lambda = exhausted ? 0.0 : rayleigh(work, v);
    canonical_sign(v);

    for (std::size_t r = 0; r < k; ++r) {
      for (std::size_t c = r; c < k; ++c) {
        work(r, c) -= lambda * v[r] * v[c];
        work(c, r) = work(r, c);
      }
    }
    out.eigenvalues.push_back(lambda);
    out.eigenvectors.push_back(std::move(v));
    out.iterations.push_back(it);
  }
  return out;
}

RealGrid project(const ProjectionWeights& weights, const FeatureStack& stack,
                 std::span<const double> mean) {
  const std::size_t k = stack.channels();
  if (weights.weights.size() != k) throw Error("projection weight length does not match channels");
  if (mean.size() != k) throw Error("mean length does not match channels");
  RealGrid out(stack.height(), stack.width());
  for (std::size_t cell = 0; cell < stack.cells(); ++cell) {
    const auto x = stack.descriptor(cell);
    double acc = 0.0;
    for (std::size_t c = 0; c < k; ++c) acc += weights.weights[c] * (x[c] - mean[c]);
    out[cell] = acc;
  }
  return out;
}

bool orient_by_skewness(std::vector<double>& direction, const GroupFeatureSet& group,
                        std::span<const double> mean) {
  const ProjectionWeights w{direction, ProjectionWeights::Source::kPrincipal};
  std::vector<double> projections;
  projections.reserve(group.descriptor_count());
  for (const GroupMember& member : group.members()) {
    const RealGrid grid = project(w, member.features, mean);
    projections.insert(projections.end(), grid.values().begin(), grid.values().end());
  }
  double third = 0.0;
  for (double p : projections) third += p * p * p;

  bool flip = third < 0.0;
  if (third == 0.0) {
    std::vector<std::size_t> order(projections.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return std::abs(projections[a]) > std::abs(projections[b]);
    });
    const std::size_t top = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(0.01 * static_cast<double>(projections.size()))));
    double tail = 0.0;
    for (std::size_t i = 0; i < top; ++i) tail += projections[order[i]];
    flip = tail < 0.0;
  }
  if (flip) {
    for (double& x : direction) x = -x;
  }
  return flip;
}

const std::vector<ScalarMap>* CoattentionResult::maps_for(std::string_view id) const noexcept {
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] == id) return &maps[i];
  }
  return nullptr;
}

CoattentionResult coattention_maps(const GroupFeatureSet& group,
                                   const CoattentionOptions& options) {
  const std::size_t k = group.channels();
  if (options.eigvecs < 1 || options.eigvecs > k) {
    throw Error("eigenvector count outside [1, K]");
  }
  CoattentionResult out;
  for (const GroupMember& member : group.members()) out.ids.push_back(member.id);
  out.stats.mean = group_mean(group, options.workers);
  out.stats.covariance = group_covariance(group, out.stats.mean, options.workers);

  double mean_square_norm = 0.0;
  for (const GroupMember& member : group.members()) {
    for (double v : member.features.values()) mean_square_norm += v * v;
  }
  mean_square_norm /= static_cast<double>(group.descriptor_count());
  const double total_variance = out.stats.covariance.trace();
  out.degenerate = total_variance == 0.0 || total_variance <= 1e-20 * mean_square_norm;

  auto zero_maps = [&] {
    out.maps.clear();
    for (const GroupMember& member : group.members()) {
      out.maps.emplace_back(options.eigvecs,
                            ScalarMap(member.features.height(), member.features.width(), 0.0));
    }
  };
  if (out.degenerate) {
    zero_maps();
    return out;
  }

  // One extra pair (when available) to check the top eigengap.
  const std::size_t wanted = std::min(k, std::max<std::size_t>(options.eigvecs, 2));
  EigenPairs pairs;
  try {
    pairs = top_eigenvectors(out.stats.covariance, wanted, options.eigen);
  } catch (const ConvergenceError&) {
    if (wanted == options.eigvecs) throw;
    pairs = top_eigenvectors(out.stats.covariance, options.eigvecs, options.eigen);
  }
  if (pairs.eigenvalues.size() >= 2) {
    const double l1 = pairs.eigenvalues[0];
    out.eigen_tie = l1 - pairs.eigenvalues[1] < 1e-6 * l1;
  }
  pairs.eigenvalues.resize(options.eigvecs);
  pairs.eigenvectors.resize(options.eigvecs);
  pairs.iterations.resize(options.eigvecs);

  for (auto& v : pairs.eigenvectors) orient_by_skewness(v, group, out.stats.mean);
  out.stats.eigenvalues = pairs.eigenvalues;
  out.stats.eigenvectors = pairs.eigenvectors;
  out.iterations = pairs.iterations;

  const double lambda1 = pairs.eigenvalues.front();
  out.maps.assign(group.size(), {});
  parallel_for(group.size(), options.workers, [&](std::size_t n) {
    const FeatureStack& stack = group.members()[n].features;
    std::vector<ScalarMap> maps;
    for (std::size_t p = 0; p < options.eigvecs; ++p) {
      if (pairs.eigenvalues[p] <= 1e-12 * lambda1) {
        maps.emplace_back(stack.height(), stack.width(), 0.0);
        continue;
      }
      const ProjectionWeights w{pairs.eigenvectors[p], ProjectionWeights::Source::kPrincipal};
      maps.push_back(minmax_normalize(project(w, stack, out.stats.mean)));
    }
    out.maps[n] = std::move(maps);
  });
  return out;
}

}  // namespace cosal::coattention
