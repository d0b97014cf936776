#pragma once

#include <array>
#include <string_view>
#include <vector>

#include "signtopic/shape.hpp"

namespace signtopic {

enum class Subcategory { SpeedLimits, Prohibitions, Derestrictions, Mandatory, Danger, Unique };

inline constexpr std::array<Subcategory, 6> kAllSubcategories = {
    Subcategory::SpeedLimits, Subcategory::Prohibitions, Subcategory::Derestrictions,
    Subcategory::Mandatory,   Subcategory::Danger,       Subcategory::Unique};

inline constexpr int kNumSignClasses = 43;

struct SignClass {
  int id;
  Subcategory subcategory;
  shape::ShapeClass canonical_shape;
  std::string_view name;
};

// The 43 GTSRB classes. Index equals id.
const std::array<SignClass, kNumSignClasses>& sign_classes();
// Throws ArgumentError outside [0, 42].
const SignClass& sign_class(int id);

std::string_view subcategory_name(Subcategory s);
// Column-friendly form, e.g. "speed_limits".
std::string_view subcategory_key(Subcategory s);

// Class ids whose canonical shape is s, ascending.
std::vector<int> classes_with_shape(shape::ShapeClass s);

}  // namespace signtopic
