#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "signtopic/codebook.hpp"
#include "signtopic/error.hpp"
#include "signtopic/random.hpp"

using namespace signtopic;
using namespace signtopic::codebook;

namespace {

std::vector<double> random_points(std::size_t n, std::size_t dim, Rng& rng) {
  std::vector<double> p(n * dim);
  for (double& v : p) v = rng.uniform();
  return p;
}

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

double code_sum(const LlcCode& c) { return std::accumulate(c.coefficients.begin(), c.coefficients.end(), 0.0); }

}  // namespace

TEST_CASE("k-means with as many points as clusters returns the points") {
  const std::vector<double> pts = {0, 0, 5, 1, -3, 2, 7, 7};
  const auto r = train_kmeans(pts, 2, 4, 20, 1);
  CHECK(r.objectives.back() == 0.0);
  for (std::size_t i = 0; i < 4; ++i) {
    bool found = false;
    for (std::size_t j = 0; j < 4; ++j)
      found |= sq_dist(r.codebook.basis(j), std::span<const double>(pts).subspan(i * 2, 2)) == 0.0;
    CHECK(found);
  }
}

TEST_CASE("k-means recovers two blobs") {
  Rng rng(3);
  std::vector<double> pts;
  for (int b = 0; b < 2; ++b)
    for (int i = 0; i < 100; ++i) {
      pts.push_back(10.0 * b + 0.1 * rng.normal());
      pts.push_back(10.0 * b + 0.1 * rng.normal());
    }
  const auto r = train_kmeans(pts, 2, 2, 50, 9);
  // brute-force blob centroids
  double c[2][2] = {};
  for (int b = 0; b < 2; ++b) {
    for (int i = 0; i < 100; ++i)
      for (int d = 0; d < 2; ++d) c[b][d] += pts[(b * 100 + i) * 2 + d] / 100.0;
  }
  for (int b = 0; b < 2; ++b) {
    double best = 1e9;
    for (std::size_t j = 0; j < 2; ++j) best = std::min(best, std::sqrt(sq_dist(r.codebook.basis(j), c[b])));
    CHECK(best <= 0.1);
    CHECK(std::hypot(c[b][0] - 10.0 * b, c[b][1] - 10.0 * b) <= 0.1);
  }
}

TEST_CASE("property: k-means objective never increases and seeds are reproducible") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const auto pts = random_points(120, 4, rng);
    const auto a = train_kmeans(pts, 4, 7, 30, seed);
    for (std::size_t i = 1; i < a.objectives.size(); ++i)
      CHECK(a.objectives[i] <= a.objectives[i - 1] * (1 + 1e-9));
    const auto b = train_kmeans(pts, 4, 7, 30, seed);
    CHECK(a.codebook == b.codebook);
    CHECK(a.assignments == b.assignments);
  }
}

TEST_CASE("k-means argument checks") {
  const std::vector<double> pts = {0, 1, 2};
  CHECK_THROWS_AS(train_kmeans(pts, 1, 4, 10, 0), ArgumentError);
  CHECK_THROWS_AS(Codebook(1, 2, {0, 0}), ArgumentError);
  CHECK_THROWS_AS(Codebook(2, 1, {0, NAN}), ArgumentError);
}

TEST_CASE("llc on an exact basis hit") {
  const Codebook cb(3, 2, {0, 0, 1, 0, 0, 1});
  const std::vector<double> x = {1, 0};
  const auto c = llc_encode(x, cb, {1, 0.0, 1.0});
  REQUIRE(c.indices.size() == 1);
  CHECK(c.indices[0] == 1);
  CHECK(c.coefficients[0] == 1.0);
  CHECK(reconstruction_error(x, cb, c) == 0.0);
}

TEST_CASE("llc two-basis analytic example") {
  const Codebook cb(3, 2, {0, 0, 1, 0, 0, 1});
  const std::vector<double> x = {0.5, 0};
  const auto c = llc_encode(x, cb, {2, 0.0, 1.0});
  REQUIRE(c.indices.size() == 2);
  std::vector<double> by_index(3, 0.0);
  for (std::size_t i = 0; i < 2; ++i) by_index[c.indices[i]] = c.coefficients[i];
  CHECK(std::abs(by_index[0] - 0.5) <= 1e-9);
  CHECK(std::abs(by_index[1] - 0.5) <= 1e-9);
  CHECK(by_index[2] == 0.0);
  CHECK(reconstruction_error(x, cb, c) <= 1e-18);
}

TEST_CASE("llc clamps the neighborhood and validates parameters") {
  const Codebook cb(3, 2, {0, 0, 1, 0, 0, 1});
  const std::vector<double> x = {0.2, 0.3};
  CHECK(llc_encode(x, cb, {10, 1e-4, 1.0}).indices.size() == 3);
  CHECK_THROWS_AS(llc_encode(x, cb, {2, 1e-4, 0.0}), ArgumentError);
  CHECK_THROWS_AS(llc_encode(std::vector<double>{1, 2, 3}, cb, {}), ArgumentError);
}

TEST_CASE("property: llc codes sum to one and beat the one-hot code") {
  Rng rng(77);
  for (int t = 0; t < 300; ++t) {
    const std::size_t dim = 2 + rng.below(10);
    const std::size_t m = 2 + rng.below(15);
    const Codebook cb(m, dim, random_points(m, dim, rng));
    const auto x = random_points(1, dim, rng);
    const std::size_t k = 1 + rng.below(m + 2);
    const double lambda = t % 3 == 0 ? 0.0 : std::pow(10.0, -6.0 + 6.0 * rng.uniform());
    const double sigma = 0.05 + 2.0 * rng.uniform();
    const auto c = llc_encode(x, cb, {k, lambda, sigma});
    CHECK(std::abs(code_sum(c) - 1.0) <= 1e-8);
    CHECK(c.indices.size() == std::min(k, m));
    if (lambda == 0.0) {
      double onehot = 1e300;
      for (std::size_t j = 0; j < m; ++j) onehot = std::min(onehot, sq_dist(x, cb.basis(j)));
      CHECK(reconstruction_error(x, cb, c) <= onehot + 1e-9);
    }
  }
}

TEST_CASE("property: tiny sigma concentrates the code on the nearest basis") {
  Rng rng(5);
  for (int t = 0; t < 50; ++t) {
    const std::size_t m = 8, dim = 5;
    const Codebook cb(m, dim, random_points(m, dim, rng));
    const auto x = random_points(1, dim, rng);
    const double sigma = 1e-3 * mean_pairwise_distance(cb);
    const auto c = llc_encode(x, cb, {5, 1e-4, sigma});
    std::size_t nearest = 0;
    for (std::size_t j = 1; j < m; ++j)
      if (sq_dist(x, cb.basis(j)) < sq_dist(x, cb.basis(nearest))) nearest = j;
    // With the covariance term negligible, c_j is proportional to
    // exp(-2 (dist_j - dist_min) / sigma); near-ties legitimately share mass.
    const double dmin = std::sqrt(sq_dist(x, cb.basis(nearest)));
    double denom = 0.0, mass = 0.0;
    for (std::size_t i = 0; i < c.indices.size(); ++i) {
      denom += std::exp(-2.0 * (std::sqrt(sq_dist(x, cb.basis(c.indices[i]))) - dmin) / sigma);
      if (c.indices[i] == nearest) mass = c.coefficients[i];
    }
    const double expected = 1.0 / denom;
    CHECK(std::abs(mass - expected) <= 1e-3);
    if (expected >= 0.99) CHECK(mass >= 0.99);
  }
}

TEST_CASE("mean pairwise distance") {
  const Codebook cb(3, 2, {0, 0, 3, 0, 0, 4});
  CHECK(mean_pairwise_distance(cb) == doctest::Approx((3.0 + 4.0 + 5.0) / 3.0).epsilon(1e-14));
}

TEST_CASE("pooling") {
  const LlcCode one{{3}, {1.0}};
  auto h = pool_histogram({one}, 5, Pooling::Sum);
  CHECK(h.counts == std::vector<double>{0, 0, 0, 1, 0});
  CHECK(h.total == 1.0);

  const LlcCode half{{3, 4}, {0.5, 0.5}};
  CHECK(pool_histogram({half, half}, 5, Pooling::Sum).counts == std::vector<double>{0, 0, 0, 1.0, 1.0});
  CHECK(pool_histogram({half, half}, 5, Pooling::Max).counts == std::vector<double>{0, 0, 0, 0.5, 0.5});

  const LlcCode neg{{0, 1}, {1.5, -0.5}};
  CHECK(pool_histogram({neg}, 2, Pooling::Sum).counts == std::vector<double>{1.5, 0.5});

  CHECK_THROWS_AS(pool_histogram({}, 5, Pooling::Sum), ArgumentError);
}
