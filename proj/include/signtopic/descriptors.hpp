#pragma once

#include <array>
#include <vector>

#include "signtopic/imaging.hpp"

namespace signtopic::descriptors {

inline constexpr int kDescriptorLength = 128;

// Real-valued image plane; DoG layers go negative so RasterImage won't do.
struct Plane {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  Plane() = default;
  Plane(int w, int h, double fill = 0.0)
      : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill) {}
  double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
  double& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
};

struct Octave {
  int step = 1;                // pixel spacing relative to the input image
  std::vector<double> sigmas;  // per Gaussian level, in octave pixels
  std::vector<Plane> gaussians;
  std::vector<Plane> dogs;     // dogs[k] = gaussians[k + 1] - gaussians[k]
};

struct ScaleSpace {
  std::vector<Octave> octaves;
  double base_sigma = 1.6;
  int scales_per_octave = 3;
};

struct Keypoint {
  double x = 0.0;
  double y = 0.0;
  double scale = 1.6;        // blur sigma in input pixels
  double orientation = 0.0;  // degrees in [0, 360), atan2 convention with y down
};

struct SiftDescriptor {
  std::array<double, kDescriptorLength> values{};
  bool is_zero() const;
};

// Intermediate buffers of one descriptor, exposed for checking the
// normalize / clamp / renormalize sequence.
struct DescriptorStages {
  std::array<double, kDescriptorLength> raw{};
  std::array<double, kDescriptorLength> clamped{};
  SiftDescriptor final;
};

enum class ExtractMode { Dog, Dense, DogWithDenseFallback };

struct SiftConfig {
  int octaves = 3;
  int scales_per_octave = 3;
  double base_sigma = 1.6;
  double contrast_threshold = 0.03;
  double edge_ratio = 10.0;
  ExtractMode mode = ExtractMode::DogWithDenseFallback;
  int min_keypoints = 20;
  int dense_stride = 8;
  double dense_scale = 1.6;
};

Plane gaussian_blur(const Plane& src, double sigma);
Plane to_plane(const imaging::RasterImage& img);

// Builds fewer octaves when the image becomes too small; throws when the
// image is smaller than 16x16 or not grayscale.
ScaleSpace build_scale_space(const imaging::RasterImage& img, int octaves,
                             int scales_per_octave, double base_sigma);

std::vector<Keypoint> detect_keypoints(const ScaleSpace& ss, double contrast_threshold,
                                       double edge_ratio);

SiftDescriptor compute_descriptor(const imaging::RasterImage& img, const Keypoint& kp);
DescriptorStages compute_descriptor_stages(const imaging::RasterImage& img, const Keypoint& kp);
// Shares the gradient fields across keypoints.
std::vector<SiftDescriptor> compute_descriptors(const imaging::RasterImage& img,
                                                const std::vector<Keypoint>& kps);

std::vector<Keypoint> dense_keypoints(const imaging::RasterImage& img, int stride, double scale);

struct Extraction {
  std::vector<Keypoint> keypoints;
  std::vector<SiftDescriptor> descriptors;
  bool used_dense = false;
};

Extraction extract_with_keypoints(const imaging::RasterImage& img, const SiftConfig& config);
std::vector<SiftDescriptor> extract(const imaging::RasterImage& img, const SiftConfig& config);

}  // namespace signtopic::descriptors
