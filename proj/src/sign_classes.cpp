#include "signtopic/sign_classes.hpp"

#include <string>

#include "signtopic/error.hpp"

namespace signtopic {

namespace {

using S = shape::ShapeClass;
using C = Subcategory;

// Shapes follow the sign outlines: red-ringed and derestriction discs are
// Circle, solid blue mandatory discs and "no entry" are SingleCircle, the
// priority diamond is Square and the stop octagon maps to Hexagon, the
// closest of the six shape classes.
constexpr std::array<SignClass, kNumSignClasses> kTable = {{
    {0, C::SpeedLimits, S::Circle, "speed limit 20"},
    {1, C::SpeedLimits, S::Circle, "speed limit 30"},
    {2, C::SpeedLimits, S::Circle, "speed limit 50"},
    {3, C::SpeedLimits, S::Circle, "speed limit 60"},
    {4, C::SpeedLimits, S::Circle, "speed limit 70"},
    {5, C::SpeedLimits, S::Circle, "speed limit 80"},
    {6, C::Derestrictions, S::Circle, "end of speed limit 80"},
    {7, C::SpeedLimits, S::Circle, "speed limit 100"},
    {8, C::SpeedLimits, S::Circle, "speed limit 120"},
    {9, C::Prohibitions, S::Circle, "no passing"},
    {10, C::Prohibitions, S::Circle, "no passing for trucks"},
    {11, C::Danger, S::Triangle, "right of way at next intersection"},
    {12, C::Unique, S::Square, "priority road"},
    {13, C::Unique, S::Triangle, "yield"},
    {14, C::Unique, S::Hexagon, "stop"},
    {15, C::Prohibitions, S::Circle, "no vehicles"},
    {16, C::Prohibitions, S::Circle, "trucks prohibited"},
    {17, C::Unique, S::SingleCircle, "no entry"},
    {18, C::Danger, S::Triangle, "general caution"},
    {19, C::Danger, S::Triangle, "dangerous curve left"},
    {20, C::Danger, S::Triangle, "dangerous curve right"},
    {21, C::Danger, S::Triangle, "double curve"},
    {22, C::Danger, S::Triangle, "bumpy road"},
    {23, C::Danger, S::Triangle, "slippery road"},
    {24, C::Danger, S::Triangle, "road narrows on the right"},
    {25, C::Danger, S::Triangle, "road work"},
    {26, C::Danger, S::Triangle, "traffic signals"},
    {27, C::Danger, S::Triangle, "pedestrians"},
    {28, C::Danger, S::Triangle, "children crossing"},
    {29, C::Danger, S::Triangle, "bicycles crossing"},
    {30, C::Danger, S::Triangle, "beware of ice or snow"},
    {31, C::Danger, S::Triangle, "wild animals crossing"},
    {32, C::Derestrictions, S::Circle, "end of all speed and passing limits"},
    {33, C::Mandatory, S::SingleCircle, "turn right ahead"},
    {34, C::Mandatory, S::SingleCircle, "turn left ahead"},
    {35, C::Mandatory, S::SingleCircle, "ahead only"},
    {36, C::Mandatory, S::SingleCircle, "go straight or right"},
    {37, C::Mandatory, S::SingleCircle, "go straight or left"},
    {38, C::Mandatory, S::SingleCircle, "keep right"},
    {39, C::Mandatory, S::SingleCircle, "keep left"},
    {40, C::Mandatory, S::SingleCircle, "roundabout mandatory"},
    {41, C::Derestrictions, S::Circle, "end of no passing"},
    {42, C::Derestrictions, S::Circle, "end of no passing for trucks"},
}};

}  // namespace

const std::array<SignClass, kNumSignClasses>& sign_classes() { return kTable; }

const SignClass& sign_class(int id) {
  if (id < 0 || id >= kNumSignClasses)
    throw ArgumentError("sign class id " + std::to_string(id) + " outside [0, 42]");
  return kTable[static_cast<std::size_t>(id)];
}

std::string_view subcategory_name(Subcategory s) {
  switch (s) {
    case C::SpeedLimits: return "Speed Limits";
    case C::Prohibitions: return "Prohibitions";
    case C::Derestrictions: return "Derestrictions";
    case C::Mandatory: return "Mandatory";
    case C::Danger: return "Danger";
    case C::Unique: return "Unique";
  }
  return "?";
}

std::string_view subcategory_key(Subcategory s) {
  switch (s) {
    case C::SpeedLimits: return "speed_limits";
    case C::Prohibitions: return "prohibitions";
    case C::Derestrictions: return "derestrictions";
    case C::Mandatory: return "mandatory";
    case C::Danger: return "danger";
    case C::Unique: return "unique";
  }
  return "?";
}

std::vector<int> classes_with_shape(shape::ShapeClass s) {
  std::vector<int> ids;
  for (const auto& c : kTable)
    if (c.canonical_shape == s) ids.push_back(c.id);
  return ids;
}

}  // namespace signtopic
