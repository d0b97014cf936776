#include "signtopic/codebook.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "signtopic/error.hpp"
#include "signtopic/parallel.hpp"
#include "signtopic/random.hpp"

namespace signtopic::codebook {

namespace {

constexpr std::size_t kAssignChunk = 256;
constexpr double kMaxLogPenalty = 600.0;

double squared_distance(const double* a, const double* b, std::size_t dim) {
  double s = 0.0;
  for (std::size_t i = 0; i < dim; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

struct Nearest {
  std::size_t index;
  double dist2;
};

Nearest nearest_center(const double* p, const std::vector<double>& centers, std::size_t k,
                       std::size_t dim) {
  Nearest best{0, std::numeric_limits<double>::infinity()};
  for (std::size_t c = 0; c < k; ++c) {
    const double d = squared_distance(p, centers.data() + c * dim, dim);
    if (d < best.dist2) best = {c, d};
  }
  return best;
}

std::vector<double> seed_plus_plus(std::span<const double> points, std::size_t n, std::size_t dim,
                                   std::size_t k, Rng& rng) {
  std::vector<double> centers;
  centers.reserve(k * dim);
  std::vector<bool> chosen(n, false);
  auto take = [&](std::size_t i) {
    chosen[i] = true;
    centers.insert(centers.end(), points.begin() + i * dim, points.begin() + (i + 1) * dim);
  };
  take(rng.below(n));
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i)
    d2[i] = squared_distance(points.data() + i * dim, centers.data(), dim);
  for (std::size_t c = 1; c < k; ++c) {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    std::size_t pick = n;
    if (total > 0.0) {
      double target = rng.uniform() * total;
      for (std::size_t i = 0; i < n; ++i) {
        if (d2[i] <= 0.0) continue;
        pick = i;
        target -= d2[i];
        if (target < 0.0) break;
      }
    }
    if (pick == n) {
      // Every remaining point duplicates a center: take the first unchosen one.
      pick = static_cast<std::size_t>(std::find(chosen.begin(), chosen.end(), false) - chosen.begin());
    }
    take(pick);
    const double* cp = centers.data() + c * dim;
    for (std::size_t i = 0; i < n; ++i)
      d2[i] = std::min(d2[i], squared_distance(points.data() + i * dim, cp, dim));
  }
  return centers;
}

}  // namespace

Codebook::Codebook(std::size_t size, std::size_t dim, std::vector<double> bases)
    : size_(size), dim_(dim), bases_(std::move(bases)) {
  if (size < 2) throw ArgumentError("codebook needs at least two bases");
  if (dim < 1) throw ArgumentError("codebook dimension must be positive");
  if (bases_.size() != size * dim) throw ArgumentError("codebook data length mismatch");
  for (double v : bases_)
    if (!std::isfinite(v)) throw ArgumentError("codebook basis is not finite");
}

KmeansResult train_kmeans(std::span<const double> points, std::size_t dim, std::size_t clusters,
                          int max_iters, std::uint64_t seed) {
  if (dim == 0 || points.size() % dim != 0) throw ArgumentError("point data is not a multiple of dim");
  const std::size_t n = points.size() / dim;
  if (n < clusters)
    throw ArgumentError("k-means needs at least " + std::to_string(clusters) + " points, got " +
                        std::to_string(n));
  if (clusters < 2) throw ArgumentError("k-means needs at least two clusters");
  if (max_iters < 1) throw ArgumentError("k-means needs at least one iteration");

  Rng rng(seed);
  std::vector<double> centers = seed_plus_plus(points, n, dim, clusters, rng);

  KmeansResult result;
  std::vector<std::size_t> assign(n, clusters);
  std::vector<double> dist2(n);
  const std::size_t chunks = (n + kAssignChunk - 1) / kAssignChunk;
  std::vector<char> chunk_changed(chunks);
  for (int iter = 0; iter < max_iters; ++iter) {
    parallel_for(chunks, [&](std::size_t c) {
      bool changed = false;
      const std::size_t end = std::min(n, (c + 1) * kAssignChunk);
      for (std::size_t i = c * kAssignChunk; i < end; ++i) {
        const Nearest best = nearest_center(points.data() + i * dim, centers, clusters, dim);
        changed |= best.index != assign[i];
        assign[i] = best.index;
        dist2[i] = best.dist2;
      }
      chunk_changed[c] = changed;
    });
    result.objectives.push_back(std::accumulate(dist2.begin(), dist2.end(), 0.0));
    result.iterations = iter + 1;
    const bool changed = std::any_of(chunk_changed.begin(), chunk_changed.end(), [](char c) { return c; });
    if (!changed) break;

    std::vector<double> sums(clusters * dim, 0.0);
    std::vector<std::size_t> counts(clusters, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const double* p = points.data() + i * dim;
      double* s = sums.data() + assign[i] * dim;
      for (std::size_t d = 0; d < dim; ++d) s[d] += p[d];
      ++counts[assign[i]];
    }
    for (std::size_t c = 0; c < clusters; ++c) {
      if (counts[c] == 0) continue;
      for (std::size_t d = 0; d < dim; ++d)
        centers[c * dim + d] = sums[c * dim + d] / static_cast<double>(counts[c]);
    }
    // Empty clusters move onto the points farthest from their centroids.
    for (std::size_t c = 0; c < clusters; ++c) {
      if (counts[c] != 0) continue;
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = squared_distance(points.data() + i * dim, centers.data() + assign[i] * dim, dim);
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      std::copy_n(points.begin() + far * dim, dim, centers.begin() + c * dim);
      assign[far] = c;
    }
  }
  result.codebook = Codebook(clusters, dim, std::move(centers));
  result.assignments = std::move(assign);
  return result;
}

LlcCode llc_encode(std::span<const double> x, const Codebook& cb, const LlcParams& params) {
  if (x.size() != cb.dim()) throw ArgumentError("descriptor dimension does not match codebook");
  if (!(params.sigma > 0.0)) throw ArgumentError("LLC sigma must be positive");
  if (params.lambda < 0.0) throw ArgumentError("LLC lambda must be non-negative");
  if (params.neighbors < 1) throw ArgumentError("LLC needs at least one neighbor");
  const std::size_t m = cb.size(), dim = cb.dim();
  const std::size_t k = std::min(params.neighbors, m);

  std::vector<double> d2(m);
  for (std::size_t j = 0; j < m; ++j) d2[j] = squared_distance(x.data(), cb.basis(j).data(), dim);
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](std::size_t a, std::size_t b) {
    return d2[a] != d2[b] ? d2[a] < d2[b] : a < b;
  });
  LlcCode code;
  code.indices.assign(order.begin(), order.begin() + k);
  if (k == 1) {
    code.coefficients = {1.0};
    return code;
  }

  // Shifted local bases z_j = b_j - x and their covariance.
  Eigen::MatrixXd z(k, dim);
  for (std::size_t r = 0; r < k; ++r) {
    const auto b = cb.basis(code.indices[r]);
    for (std::size_t d = 0; d < dim; ++d) z(r, d) = b[d] - x[d];
  }
  Eigen::MatrixXd cov = z * z.transpose();
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(k);
  Eigen::VectorXd c;

  if (params.lambda > 0.0) {
    // Locality adaptor exp(dist/sigma). The whole system is rescaled by
    // exp(-2 * nearest log-penalty), which leaves the normalized solution
    // unchanged and keeps tiny sigmas from overflowing.
    std::vector<double> logd(k);
    for (std::size_t r = 0; r < k; ++r) logd[r] = std::sqrt(d2[code.indices[r]]) / params.sigma;
    const double base = *std::min_element(logd.begin(), logd.end());
    const double cov_scale = std::exp(-2.0 * std::min(base, kMaxLogPenalty / 2));
    Eigen::MatrixXd a = cov * cov_scale;
    for (std::size_t r = 0; r < k; ++r)
      a(r, r) += params.lambda * std::exp(std::min(2.0 * (logd[r] - base), kMaxLogPenalty));
    c = a.ldlt().solve(ones);
  } else {
    // Plain constrained least squares; the covariance may be singular (e.g.
    // collinear bases), in which case any sum-one null vector reconstructs x
    // exactly.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    const Eigen::VectorXd& evals = eig.eigenvalues();
    const Eigen::MatrixXd& evecs = eig.eigenvectors();
    const double tol = std::max(evals.cwiseAbs().maxCoeff(), 1e-300) * 1e-12 * static_cast<double>(k);
    Eigen::VectorXd null_part = Eigen::VectorXd::Zero(k);
    Eigen::VectorXd range_part = Eigen::VectorXd::Zero(k);
    for (std::size_t i = 0; i < k; ++i) {
      const double proj = evecs.col(i).dot(ones);
      if (evals(i) <= tol) {
        null_part += proj * evecs.col(i);
      } else {
        range_part += (proj / evals(i)) * evecs.col(i);
      }
    }
    c = null_part.sum() > 1e-8 ? null_part : range_part;
  }

  const double total = c.sum();
  code.coefficients.resize(k);
  if (!std::isfinite(total) || std::abs(total) < 1e-300) {
    std::fill(code.coefficients.begin(), code.coefficients.end(), 0.0);
    code.coefficients[0] = 1.0;
    return code;
  }
  for (std::size_t r = 0; r < k; ++r) code.coefficients[r] = c(r) / total;
  return code;
}

double reconstruction_error(std::span<const double> x, const Codebook& cb, const LlcCode& code) {
  std::vector<double> r(x.begin(), x.end());
  for (std::size_t i = 0; i < code.indices.size(); ++i) {
    const auto b = cb.basis(code.indices[i]);
    for (std::size_t d = 0; d < r.size(); ++d) r[d] -= code.coefficients[i] * b[d];
  }
  double s = 0.0;
  for (double v : r) s += v * v;
  return s;
}

double mean_pairwise_distance(const Codebook& cb) {
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < cb.size(); ++i)
    for (std::size_t j = i + 1; j < cb.size(); ++j) {
      sum += std::sqrt(squared_distance(cb.basis(i).data(), cb.basis(j).data(), cb.dim()));
      ++pairs;
    }
  return pairs ? sum / static_cast<double>(pairs) : 0.0;
}

BowHistogram pool_histogram(const std::vector<LlcCode>& codes, std::size_t size, Pooling pooling) {
  if (codes.empty()) throw ArgumentError("cannot pool an empty code list");
  BowHistogram h;
  h.counts.assign(size, 0.0);
  for (const LlcCode& code : codes) {
    for (std::size_t i = 0; i < code.indices.size(); ++i) {
      if (code.indices[i] >= size) throw ArgumentError("code index exceeds histogram size");
      const double v = std::abs(code.coefficients[i]);
      double& slot = h.counts[code.indices[i]];
      slot = pooling == Pooling::Sum ? slot + v : std::max(slot, v);
    }
  }
  h.total = std::accumulate(h.counts.begin(), h.counts.end(), 0.0);
  return h;
}

}  // namespace signtopic::codebook
