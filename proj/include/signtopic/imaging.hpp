#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace signtopic::imaging {

// Row-major pixel grid with intensities in [0, 1]. Channels are interleaved.
class RasterImage {
 public:
  RasterImage() = default;
  RasterImage(int width, int height, int channels, double fill = 0.0);
  RasterImage(int width, int height, int channels, std::vector<double> data);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  bool empty() const { return data_.empty(); }

  double at(int x, int y, int c = 0) const {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }
  double& at(int x, int y, int c = 0) {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }
  // Edge-clamped read.
  double clamped(int x, int y, int c = 0) const;

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  // Throws ArgumentError if any sample left [0, 1] or is not finite.
  void validate() const;

  bool operator==(const RasterImage&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

// Maps output (x, y) to source coordinates:
//   src_x = a*x + b*y + c,  src_y = d*x + e*y + f
struct AffineMap {
  double a = 1, b = 0, c = 0;
  double d = 0, e = 1, f = 0;

  static AffineMap identity() { return {}; }
  static AffineMap translation(double dx, double dy);
  // Output is the source rotated by angle_deg about (cx, cy). Angles follow
  // atan2 in image coordinates (y down): a gradient at angle t in the source
  // appears at t + angle_deg in the output.
  static AffineMap rotation(double angle_deg, double cx, double cy);

  double determinant() const { return a * e - b * d; }
};

enum class ImageFormat { Ppm, Png };

RasterImage decode_image(std::span<const std::uint8_t> bytes, ImageFormat format);
// Picks the decoder from the extension (.ppm/.pgm or .png).
RasterImage read_image(const std::string& path);
// Binary PGM (P5) of a grayscale image, for debugging.
std::vector<std::uint8_t> encode_pgm(const RasterImage& img);
// Binary PPM (P6) of a 3-channel image.
std::vector<std::uint8_t> encode_ppm(const RasterImage& img);

RasterImage to_grayscale(const RasterImage& img);
RasterImage resize_bilinear(const RasterImage& img, int out_w, int out_h);
RasterImage warp_affine(const RasterImage& img, const AffineMap& map, double fill = 0.0);
RasterImage adjust_contrast(const RasterImage& img);
RasterImage rotate_degrees(const RasterImage& img, double angle_deg, double fill = 0.0);
// Shifts content by (dx, dy) pixels; uncovered pixels get fill.
RasterImage translate(const RasterImage& img, double dx, double dy, double fill = 0.0);
// Inclusive pixel box, clamped to the image.
RasterImage crop(const RasterImage& img, int x1, int y1, int x2, int y2);

// Bilinear sample with clamp-to-edge; coordinates outside the half-pixel
// border return fill.
double sample_bilinear(const RasterImage& img, double x, double y, int channel, double fill);

}  // namespace signtopic::imaging
