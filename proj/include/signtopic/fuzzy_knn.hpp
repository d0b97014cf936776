#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace signtopic::fuzzy_knn {

struct LabeledPoint {
  std::vector<double> x;  // topic posterior P(z|d)
  std::size_t label = 0;
  std::vector<double> memberships;  // u_ij per class
  bool operator==(const LabeledPoint&) const = default;
};

enum class MembershipInit { Crisp, Soft };

struct FuzzyKnnModel {
  std::vector<LabeledPoint> points;
  std::size_t n_classes = 0;
  std::size_t k = 5;
  double m = 2.0;  // fuzzifier
  bool operator==(const FuzzyKnnModel&) const = default;
};

struct TrainingPoint {
  std::vector<double> x;
  std::size_t label;
};

FuzzyKnnModel build(const std::vector<TrainingPoint>& points, std::size_t n_classes, std::size_t k,
                    double m, MembershipInit init = MembershipInit::Crisp);

// Distance-weighted class memberships over the K nearest training points.
std::vector<double> membership(const FuzzyKnnModel& model, std::span<const double> x);

struct Decision {
  std::size_t label;
  std::vector<double> memberships;
};

// Argmax of membership, lowest class index on ties.
Decision classify(const FuzzyKnnModel& model, std::span<const double> x);

// Indices of the k nearest points to x (ties by index), nearest first.
std::vector<std::size_t> nearest_points(const FuzzyKnnModel& model, std::span<const double> x,
                                        std::size_t k);

}  // namespace signtopic::fuzzy_knn
