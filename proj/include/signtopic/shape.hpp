#pragma once

#include <array>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "signtopic/imaging.hpp"

namespace signtopic::shape {

// Declaration order is the tie-break order in classify_shape.
enum class ShapeClass { Triangle, Square, Circle, SingleCircle, Rectangle, Hexagon };

inline constexpr std::array<ShapeClass, 6> kAllShapes = {
    ShapeClass::Triangle,  ShapeClass::Square,    ShapeClass::Circle,
    ShapeClass::SingleCircle, ShapeClass::Rectangle, ShapeClass::Hexagon};

std::string_view shape_name(ShapeClass s);
// Throws ArgumentError for unknown names.
ShapeClass parse_shape(std::string_view name);

struct HogConfig {
  int cell_size = 8;
  int bins = 9;
  int block = 2;  // cells per block side
};

// Block-major HOG: for each block (row-major), block*block cells (row-major),
// each with `bins` orientation bins. Every block segment is L2-normalized.
struct HogDescriptor {
  int cells_x = 0;
  int cells_y = 0;
  int bins = 0;
  int block = 0;
  std::vector<double> values;

  int blocks_x() const { return cells_x - block + 1; }
  int blocks_y() const { return cells_y - block + 1; }
  std::size_t block_length() const { return static_cast<std::size_t>(block) * block * bins; }
  std::size_t expected_length() const {
    return static_cast<std::size_t>(blocks_x()) * blocks_y() * block_length();
  }
  bool same_layout(const HogDescriptor& o) const {
    return cells_x == o.cells_x && cells_y == o.cells_y && bins == o.bins && block == o.block;
  }
  bool operator==(const HogDescriptor&) const = default;
};

struct PyramidLevel {
  double scale = 1.0;
  HogDescriptor hog;
};

struct HogPyramid {
  std::vector<PyramidLevel> levels;
};

struct PyramidConfig {
  int levels = 3;
  double scale_step = 0.5;
  HogConfig hog;
};

// Mean HOG of one shape at one pyramid level.
struct ShapeTemplate {
  ShapeClass shape = ShapeClass::Triangle;
  int level = 0;
  HogDescriptor hog;
  int source_count = 0;
  bool operator==(const ShapeTemplate&) const = default;
};

struct ShapeMatch {
  ShapeClass shape = ShapeClass::Triangle;
  double distance = 0.0;
  int level = 0;
};

struct DistanceRow {
  ShapeClass shape;
  int level;
  double distance;
};

HogDescriptor compute_hog(const imaging::RasterImage& img, const HogConfig& config = {});
HogPyramid build_hog_pyramid(const imaging::RasterImage& img, const PyramidConfig& config = {});

// Sum of squared elementwise differences.
double template_distance(const HogDescriptor& t, const HogDescriptor& d);

std::vector<ShapeTemplate> train_templates(
    const std::map<ShapeClass, std::vector<imaging::RasterImage>>& groups,
    const PyramidConfig& config = {});

// Argmin of template_distance over every (template, level) pair whose layouts
// agree. Throws ConfigurationError when no pair agrees.
ShapeMatch classify_shape(const imaging::RasterImage& img,
                          const std::vector<ShapeTemplate>& templates,
                          const PyramidConfig& config = {});

// Every comparable (template, level) distance, for debugging dumps.
std::vector<DistanceRow> shape_distances(const imaging::RasterImage& img,
                                         const std::vector<ShapeTemplate>& templates,
                                         const PyramidConfig& config = {});

}  // namespace signtopic::shape
