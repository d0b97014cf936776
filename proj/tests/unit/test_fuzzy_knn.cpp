#include <doctest.h>

#include <cmath>
#include <numeric>

#include "signtopic/error.hpp"
#include "signtopic/fuzzy_knn.hpp"
#include "signtopic/random.hpp"

using namespace signtopic;
using namespace signtopic::fuzzy_knn;

namespace {

std::vector<double> simplex_point(Rng& rng, std::size_t dim) {
  std::vector<double> v(dim);
  for (double& x : v) x = -std::log(rng.uniform_positive());
  const double s = std::accumulate(v.begin(), v.end(), 0.0);
  for (double& x : v) x /= s;
  return v;
}

std::vector<TrainingPoint> random_training(Rng& rng, std::size_t n, std::size_t dim, std::size_t classes) {
  std::vector<TrainingPoint> pts;
  for (std::size_t i = 0; i < n; ++i) pts.push_back({simplex_point(rng, dim), rng.below(classes)});
  return pts;
}

// Points on the simplex at distances 0.1 (class 0) and 0.2 (class 1) from the
// barycenter; the simplex is too small for distances 1 and 2, and only the
// ratio matters.
struct TwoPoint {
  std::vector<double> x = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  FuzzyKnnModel model;
  TwoPoint() {
    const double u = 1.0 / std::sqrt(2.0);
    std::vector<double> a = x, b = x;
    a[0] += 0.1 * u, a[1] -= 0.1 * u;
    b[0] -= 0.2 * u, b[1] += 0.2 * u;
    model = build({{a, 0}, {b, 1}}, 2, 2, 2.0);
  }
};

}  // namespace

TEST_CASE("crisp initialization") {
  Rng rng(1);
  const auto m = build({{simplex_point(rng, 4), 2}}, 5, 1, 2.0);
  CHECK(m.points[0].memberships == std::vector<double>{0, 0, 1, 0, 0});
}

TEST_CASE("soft initialization") {
  std::vector<TrainingPoint> pts = {{{0.9, 0.1}, 0}, {{0.85, 0.15}, 0}, {{0.8, 0.2}, 0}, {{0.1, 0.9}, 1}};
  const auto m = build(pts, 2, 2, 2.0, MembershipInit::Soft);
  CHECK(m.points[0].memberships[0] == 1.0);
  CHECK(m.points[0].memberships[1] == 0.0);
  // point 3's two neighbors are both class 0
  CHECK(m.points[3].memberships[1] == doctest::Approx(0.51).epsilon(1e-14));
  CHECK(m.points[3].memberships[0] == doctest::Approx(0.49).epsilon(1e-14));

  Rng rng(5);
  const auto soft = build(random_training(rng, 40, 5, 4), 4, 5, 2.0, MembershipInit::Soft);
  for (const auto& p : soft.points)
    CHECK(std::abs(std::accumulate(p.memberships.begin(), p.memberships.end(), 0.0) - 1.0) <= 1e-8);
}

TEST_CASE("two-point worked example") {
  TwoPoint t;
  const auto u = membership(t.model, t.x);
  // independent evaluation of the weighted vote
  const double wa = 1.0 / std::pow(0.1, 2.0), wb = 1.0 / std::pow(0.2, 2.0);
  CHECK(std::abs(u[0] - wa / (wa + wb)) <= 1e-12);
  CHECK(std::abs(u[0] - 0.8) <= 1e-12);
  CHECK(std::abs(u[1] - 0.2) <= 1e-12);
  CHECK(classify(t.model, t.x).label == 0);
}

TEST_CASE("coincident query returns the stored memberships exactly") {
  Rng rng(3);
  const auto m = build(random_training(rng, 30, 4, 3), 3, 5, 2.0, MembershipInit::Soft);
  for (const auto& p : m.points) CHECK(membership(m, p.x) == p.memberships);
}

TEST_CASE("K=1 is nearest neighbor") {
  Rng rng(8);
  const auto pts = random_training(rng, 25, 3, 4);
  const auto m = build(pts, 4, 1, 2.0);
  for (int t = 0; t < 50; ++t) {
    const auto x = simplex_point(rng, 3);
    const auto nn = nearest_points(m, x, 1);
    CHECK(membership(m, x) == m.points[nn[0]].memberships);
    CHECK(classify(m, x).label == pts[nn[0]].label);
  }
  const auto soft = build(pts, 4, 1, 2.0, MembershipInit::Soft);
  for (int t = 0; t < 50; ++t) {
    const auto x = simplex_point(rng, 3);
    CHECK(membership(soft, x) == soft.points[nearest_points(soft, x, 1)[0]].memberships);
  }
}

TEST_CASE("ties break toward the lowest class") {
  const std::vector<double> x = {0.5, 0.5};
  const auto m = build({{{0.6, 0.4}, 1}, {{0.4, 0.6}, 0}}, 2, 2, 2.0);
  const auto d = classify(m, x);
  CHECK(d.memberships[0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(d.label == 0);
}

TEST_CASE("property: memberships are distributions") {
  Rng rng(13);
  for (int t = 0; t < 20; ++t) {
    const std::size_t dim = 2 + rng.below(6), classes = 2 + rng.below(4);
    const auto m = build(random_training(rng, 30, dim, classes), classes, 1 + rng.below(8), 1.5 + 2 * rng.uniform(),
                         t % 2 ? MembershipInit::Soft : MembershipInit::Crisp);
    for (int q = 0; q < 20; ++q) {
      const auto u = membership(m, simplex_point(rng, dim));
      for (double v : u) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
      }
      CHECK(std::abs(std::accumulate(u.begin(), u.end(), 0.0) - 1.0) <= 1e-8);
    }
  }
}

TEST_CASE("property: shrinking all distances by a common factor keeps the label") {
  Rng rng(21);
  for (int t = 0; t < 20; ++t) {
    const std::size_t dim = 4;
    auto pts = random_training(rng, 20, dim, 3);
    const auto m = build(pts, 3, 5, 2.0);
    const std::vector<double> c(dim, 1.0 / dim);
    auto shrink = [&](std::vector<double> x, double a) {
      for (std::size_t i = 0; i < dim; ++i) x[i] = c[i] + a * (x[i] - c[i]);
      return x;
    };
    for (double a : {0.5, 0.1}) {
      auto scaled_pts = pts;
      for (auto& p : scaled_pts) p.x = shrink(p.x, a);
      const auto sm = build(scaled_pts, 3, 5, 2.0);
      for (int q = 0; q < 10; ++q) {
        const auto x = simplex_point(rng, dim);
        CHECK(classify(m, x).label == classify(sm, shrink(x, a)).label);
      }
    }
  }
}

TEST_CASE("property: a large fuzzifier approaches neighbor class frequencies") {
  // Each weight ratio is at most rho = (d_max / d_min)^(2 / (m - 1)) over the
  // K neighbors, so |u_c - freq_c| <= rho - 1.
  Rng rng(34);
  const auto pts = random_training(rng, 40, 3, 3);
  for (double fuzz : {100.0, 1e4}) {
    const auto m = build(pts, 3, 6, fuzz);
    for (int q = 0; q < 20; ++q) {
      const auto x = simplex_point(rng, 3);
      std::vector<double> freq(3, 0.0);
      double dmin = 1e300, dmax = 0.0;
      for (std::size_t j : nearest_points(m, x, 6)) {
        freq[pts[j].label] += 1.0 / 6;
        double d = 0.0;
        for (std::size_t i = 0; i < 3; ++i) d += (x[i] - pts[j].x[i]) * (x[i] - pts[j].x[i]);
        dmin = std::min(dmin, std::sqrt(d));
        dmax = std::max(dmax, std::sqrt(d));
      }
      const double rho = std::pow(dmax / dmin, 2.0 / (fuzz - 1.0));
      const auto u = membership(m, x);
      for (std::size_t c = 0; c < 3; ++c) {
        CHECK(std::abs(u[c] - freq[c]) <= rho - 1.0 + 1e-12);
        if (fuzz >= 1e4 || rho - 1.0 <= 1e-3) CHECK(std::abs(u[c] - freq[c]) <= 1e-3);
      }
    }
  }
}

TEST_CASE("argument checks") {
  Rng rng(2);
  const auto pts = random_training(rng, 5, 3, 2);
  CHECK_THROWS_AS(build(pts, 2, 6, 2.0), ArgumentError);
  CHECK_THROWS_AS(build(pts, 2, 2, 1.0), ArgumentError);
  CHECK_THROWS_AS(build({}, 2, 1, 2.0), ArgumentError);
  CHECK_THROWS_AS(build({{{0.5, 0.6}, 0}}, 2, 1, 2.0), ArgumentError);
  const auto m = build(pts, 2, 2, 2.0);
  CHECK_THROWS_AS(membership(m, std::vector<double>{0.5, 0.5}), ArgumentError);
  CHECK_THROWS_AS(membership(m, std::vector<double>{0.5, 0.5, 0.5}), ArgumentError);
}
