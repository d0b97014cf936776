#include "signtopic/fuzzy_knn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "signtopic/error.hpp"

namespace signtopic::fuzzy_knn {

namespace {

constexpr double kCoincident = 1e-12;

double distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

void check_simplex(std::span<const double> x, double tol, const char* what) {
  double s = 0.0;
  for (double v : x) {
    if (!std::isfinite(v)) throw ArgumentError(std::string(what) + " is not finite");
    s += v;
  }
  if (std::abs(s - 1.0) > tol)
    throw ArgumentError(std::string(what) + " does not sum to one");
}

std::vector<std::size_t> nearest_among(const std::vector<TrainingPoint>& pts, std::size_t self,
                                       std::size_t k) {
  std::vector<std::size_t> idx;
  std::vector<double> dist(pts.size());
  for (std::size_t j = 0; j < pts.size(); ++j) {
    if (j == self) continue;
    idx.push_back(j);
    dist[j] = distance(pts[self].x, pts[j].x);
  }
  k = std::min(k, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), [&](std::size_t a, std::size_t b) {
    return dist[a] != dist[b] ? dist[a] < dist[b] : a < b;
  });
  idx.resize(k);
  return idx;
}

}  // namespace

FuzzyKnnModel build(const std::vector<TrainingPoint>& points, std::size_t n_classes, std::size_t k,
                    double m, MembershipInit init) {
  if (points.empty()) throw ArgumentError("fuzzy KNN needs at least one training point");
  if (k < 1 || k > points.size())
    throw ArgumentError("K=" + std::to_string(k) + " must be in [1, " +
                        std::to_string(points.size()) + "]");
  if (!(m > 1.0)) throw ArgumentError("fuzzifier m must exceed 1");
  if (n_classes < 1) throw ArgumentError("fuzzy KNN needs at least one class");
  const std::size_t dim = points.front().x.size();
  for (const auto& p : points) {
    if (p.x.size() != dim) throw ArgumentError("training points differ in dimension");
    if (p.label >= n_classes) throw ArgumentError("training label exceeds class count");
    check_simplex(p.x, 1e-8, "training point");
  }

  FuzzyKnnModel model;
  model.n_classes = n_classes;
  model.k = k;
  model.m = m;
  model.points.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    LabeledPoint lp{points[i].x, points[i].label, std::vector<double>(n_classes, 0.0)};
    if (init == MembershipInit::Crisp) {
      lp.memberships[lp.label] = 1.0;
    } else {
      const auto nbrs = nearest_among(points, i, k);
      if (nbrs.empty()) {
        lp.memberships[lp.label] = 1.0;
      } else {
        const double kk = static_cast<double>(nbrs.size());
        std::vector<double> freq(n_classes, 0.0);
        for (std::size_t j : nbrs) freq[points[j].label] += 1.0;
        for (std::size_t c = 0; c < n_classes; ++c)
          lp.memberships[c] = c == lp.label ? 0.51 + 0.49 * freq[c] / kk : 0.49 * freq[c] / kk;
      }
    }
    model.points.push_back(std::move(lp));
  }
  return model;
}

std::vector<std::size_t> nearest_points(const FuzzyKnnModel& model, std::span<const double> x,
                                        std::size_t k) {
  std::vector<double> dist(model.points.size());
  for (std::size_t j = 0; j < model.points.size(); ++j) dist[j] = distance(x, model.points[j].x);
  std::vector<std::size_t> idx(model.points.size());
  std::iota(idx.begin(), idx.end(), 0);
  k = std::min(k, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), [&](std::size_t a, std::size_t b) {
    return dist[a] != dist[b] ? dist[a] < dist[b] : a < b;
  });
  idx.resize(k);
  return idx;
}

std::vector<double> membership(const FuzzyKnnModel& model, std::span<const double> x) {
  if (model.points.empty()) throw ArgumentError("fuzzy KNN model has no points");
  if (x.size() != model.points.front().x.size())
    throw ArgumentError("query has dimension " + std::to_string(x.size()) + ", model expects " +
                        std::to_string(model.points.front().x.size()));
  check_simplex(x, 1e-6, "query");

  const auto nbrs = nearest_points(model, x, model.k);
  if (nbrs.size() == 1) return model.points[nbrs[0]].memberships;
  const double exponent = 2.0 / (model.m - 1.0);
  std::vector<double> u(model.n_classes, 0.0);
  double weight_sum = 0.0;
  for (std::size_t j : nbrs) {
    const LabeledPoint& p = model.points[j];
    const double d = distance(x, p.x);
    if (d < kCoincident) return p.memberships;
    const double w = 1.0 / std::pow(d, exponent);
    for (std::size_t c = 0; c < model.n_classes; ++c) u[c] += p.memberships[c] * w;
    weight_sum += w;
  }
  for (double& v : u) v /= weight_sum;
  return u;
}

Decision classify(const FuzzyKnnModel& model, std::span<const double> x) {
  Decision d{0, membership(model, x)};
  for (std::size_t c = 1; c < d.memberships.size(); ++c)
    if (d.memberships[c] > d.memberships[d.label]) d.label = c;
  return d;
}

}  // namespace signtopic::fuzzy_knn
