#include "signtopic/shape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "signtopic/error.hpp"
#include "signtopic/parallel.hpp"

namespace signtopic::shape {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kEpsilon = 1e-5;
constexpr double kClip = 0.2;

void normalize_block(std::span<double> v) {
  auto l2 = [&] {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s + kEpsilon * kEpsilon);
  };
  double n = l2();
  for (double& x : v) x = std::min(x / n, kClip);
  n = l2();
  for (double& x : v) x /= n;
}

}  // namespace

std::string_view shape_name(ShapeClass s) {
  switch (s) {
    case ShapeClass::Triangle: return "triangle";
    case ShapeClass::Square: return "square";
    case ShapeClass::Circle: return "circle";
    case ShapeClass::SingleCircle: return "single_circle";
    case ShapeClass::Rectangle: return "rectangle";
    case ShapeClass::Hexagon: return "hexagon";
  }
  return "unknown";
}

ShapeClass parse_shape(std::string_view name) {
  for (ShapeClass s : kAllShapes)
    if (shape_name(s) == name) return s;
  throw ArgumentError("unknown shape class '" + std::string(name) + "'");
}

HogDescriptor compute_hog(const imaging::RasterImage& img, const HogConfig& config) {
  if (img.channels() != 1) throw ArgumentError("HOG expects a grayscale image");
  if (config.cell_size < 1 || config.bins < 1 || config.block < 1)
    throw ArgumentError("HOG cell size, bins and block must be positive");
  const int cell = config.cell_size;
  HogDescriptor out;
  out.cells_x = img.width() / cell;
  out.cells_y = img.height() / cell;
  out.bins = config.bins;
  out.block = config.block;
  if (out.cells_x < config.block || out.cells_y < config.block)
    throw ArgumentError("image " + std::to_string(img.width()) + "x" +
                        std::to_string(img.height()) + " is smaller than one HOG block");

  // Per-cell orientation histograms, magnitude-weighted with linear
  // interpolation between the two nearest bins. Bin b is centred at b*180/bins.
  const double bin_width = 180.0 / config.bins;
  std::vector<double> cells(static_cast<std::size_t>(out.cells_x) * out.cells_y * config.bins, 0.0);
  for (int y = 0; y < out.cells_y * cell; ++y) {
    for (int x = 0; x < out.cells_x * cell; ++x) {
      const double gx = img.clamped(x + 1, y) - img.clamped(x - 1, y);
      const double gy = img.clamped(x, y + 1) - img.clamped(x, y - 1);
      const double mag = std::hypot(gx, gy);
      if (mag == 0.0) continue;
      double angle = std::atan2(gy, gx) * 180.0 / kPi;
      if (angle < 0.0) angle += 180.0;
      if (angle >= 180.0) angle -= 180.0;
      const double pos = angle / bin_width;
      const int b0 = static_cast<int>(std::floor(pos));
      const double frac = pos - b0;
      const std::size_t base =
          (static_cast<std::size_t>(y / cell) * out.cells_x + x / cell) * config.bins;
      cells[base + b0 % config.bins] += mag * (1.0 - frac);
      cells[base + (b0 + 1) % config.bins] += mag * frac;
    }
  }

  const std::size_t block_len = out.block_length();
  out.values.resize(out.expected_length());
  std::size_t offset = 0;
  for (int by = 0; by < out.blocks_y(); ++by) {
    for (int bx = 0; bx < out.blocks_x(); ++bx) {
      std::span<double> seg(out.values.data() + offset, block_len);
      std::size_t k = 0;
      for (int cy = by; cy < by + config.block; ++cy)
        for (int cx = bx; cx < bx + config.block; ++cx)
          for (int b = 0; b < config.bins; ++b)
            seg[k++] = cells[(static_cast<std::size_t>(cy) * out.cells_x + cx) * config.bins + b];
      normalize_block(seg);
      offset += block_len;
    }
  }
  return out;
}

HogPyramid build_hog_pyramid(const imaging::RasterImage& img, const PyramidConfig& config) {
  if (config.levels < 1) throw ArgumentError("pyramid needs at least one level");
  if (!(config.scale_step > 0.0 && config.scale_step < 1.0))
    throw ArgumentError("pyramid scale_step must be in (0, 1)");
  const int min_side = config.hog.cell_size * config.hog.block;
  HogPyramid pyramid;
  double scale = 1.0;
  for (int level = 0; level < config.levels; ++level) {
    if (level == 0) {
      pyramid.levels.push_back({1.0, compute_hog(img, config.hog)});
    } else {
      const int w = static_cast<int>(std::lround(img.width() * scale));
      const int h = static_cast<int>(std::lround(img.height() * scale));
      if (w < min_side || h < min_side) break;
      pyramid.levels.push_back({scale, compute_hog(imaging::resize_bilinear(img, w, h), config.hog)});
    }
    scale *= config.scale_step;
  }
  return pyramid;
}

double template_distance(const HogDescriptor& t, const HogDescriptor& d) {
  if (!t.same_layout(d) || t.values.size() != d.values.size())
    throw ArgumentError("template and descriptor layouts differ");
  double sum = 0.0;
  for (std::size_t i = 0; i < t.values.size(); ++i) {
    const double diff = t.values[i] - d.values[i];
    sum += diff * diff;
  }
  return sum;
}

std::vector<ShapeTemplate> train_templates(
    const std::map<ShapeClass, std::vector<imaging::RasterImage>>& groups,
    const PyramidConfig& config) {
  std::vector<ShapeTemplate> templates;
  for (const auto& [shape, images] : groups) {
    if (images.empty())
      throw ArgumentError("no training images for shape '" + std::string(shape_name(shape)) + "'");
    std::vector<HogPyramid> pyramids(images.size());
    parallel_for(images.size(), [&](std::size_t i) {
      pyramids[i] = build_hog_pyramid(images[i], config);
    });
    const std::size_t n_levels = pyramids.front().levels.size();
    for (std::size_t level = 0; level < n_levels; ++level) {
      ShapeTemplate t;
      t.shape = shape;
      t.level = static_cast<int>(level);
      t.hog = pyramids.front().levels[level].hog;
      std::fill(t.hog.values.begin(), t.hog.values.end(), 0.0);
      for (const auto& p : pyramids) {
        if (p.levels.size() <= level || !p.levels[level].hog.same_layout(t.hog))
          throw ArgumentError("training images for shape '" + std::string(shape_name(shape)) +
                              "' differ in size; resize them to the canonical size first");
        const auto& v = p.levels[level].hog.values;
        for (std::size_t i = 0; i < v.size(); ++i) t.hog.values[i] += v[i];
      }
      for (double& v : t.hog.values) v /= static_cast<double>(pyramids.size());
      t.source_count = static_cast<int>(pyramids.size());
      templates.push_back(std::move(t));
    }
  }
  return templates;
}

std::vector<DistanceRow> shape_distances(const imaging::RasterImage& img,
                                         const std::vector<ShapeTemplate>& templates,
                                         const PyramidConfig& config) {
  if (templates.empty()) throw ArgumentError("no shape templates");
  const HogPyramid pyramid = build_hog_pyramid(img, config);
  std::vector<const ShapeTemplate*> order;
  for (const auto& t : templates) order.push_back(&t);
  std::stable_sort(order.begin(), order.end(), [](const ShapeTemplate* a, const ShapeTemplate* b) {
    return a->shape != b->shape ? a->shape < b->shape : a->level < b->level;
  });
  std::vector<DistanceRow> rows;
  for (const ShapeTemplate* t : order) {
    if (t->level < 0 || static_cast<std::size_t>(t->level) >= pyramid.levels.size()) continue;
    const HogDescriptor& d = pyramid.levels[t->level].hog;
    if (!t->hog.same_layout(d)) continue;
    rows.push_back({t->shape, t->level, template_distance(t->hog, d)});
  }
  return rows;
}

ShapeMatch classify_shape(const imaging::RasterImage& img,
                          const std::vector<ShapeTemplate>& templates,
                          const PyramidConfig& config) {
  const auto rows = shape_distances(img, templates, config);
  if (rows.empty())
    throw ConfigurationError("no shape template matches the pyramid layout of a " +
                             std::to_string(img.width()) + "x" + std::to_string(img.height()) +
                             " image");
  ShapeMatch best{rows.front().shape, rows.front().distance, rows.front().level};
  for (const auto& r : rows)
    if (r.distance < best.distance) best = {r.shape, r.distance, r.level};
  return best;
}

}  // namespace signtopic::shape
