#include "signtopic/imaging.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "signtopic/error.hpp"

namespace signtopic::imaging {

namespace {

constexpr double kPi = 3.14159265358979323846;

void check_dims(int w, int h, int c) {
  if (w < 1 || h < 1) throw ArgumentError("image dimensions must be positive");
  if (c != 1 && c != 3) throw ArgumentError("image must have 1 or 3 channels");
}

// PNM header tokenizer that tracks the byte offset for error messages.
class PnmReader {
 public:
  PnmReader(std::span<const std::uint8_t> bytes, std::size_t start) : bytes_(bytes), pos_(start) {}

  std::size_t offset() const { return pos_; }

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const char ch = static_cast<char>(bytes_[pos_]);
      if (ch == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(ch))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  int read_uint(const char* field) {
    skip_space_and_comments();
    const std::size_t start = pos_;
    long value = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > 1'000'000) throw DecodeError(std::string("PNM ") + field + " too large", start);
      ++pos_;
    }
    if (pos_ == start) throw DecodeError(std::string("PNM header: expected ") + field, start);
    return static_cast<int>(value);
  }

  // Exactly one whitespace byte separates the header from the raster.
  void end_header() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_]))
      throw DecodeError("PNM header not terminated by whitespace", pos_);
    ++pos_;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_;
};

RasterImage decode_pnm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '6' && bytes[1] != '5'))
    throw DecodeError("not a binary PPM/PGM (expected P6 or P5 magic)", 0);
  const int channels = bytes[1] == '6' ? 3 : 1;
  PnmReader reader(bytes, 2);
  const int w = reader.read_uint("width");
  const int h = reader.read_uint("height");
  const std::size_t maxval_at = reader.offset();
  const int maxval = reader.read_uint("maxval");
  if (w < 1 || h < 1) throw DecodeError("PNM has zero dimension", 2);
  if (maxval != 255) throw DecodeError("only maxval 255 is supported", maxval_at);
  reader.end_header();
  const std::size_t start = reader.offset();
  const std::size_t need = static_cast<std::size_t>(w) * h * channels;
  if (bytes.size() - start < need)
    throw DecodeError("PNM payload truncated: need " + std::to_string(need) + " bytes",
                      bytes.size());
  std::vector<double> data(need);
  for (std::size_t i = 0; i < need; ++i) data[i] = bytes[start + i] / 255.0;
  return RasterImage(w, h, channels, std::move(data));
}

std::uint32_t read_be32(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) |
         std::uint32_t{p[3]};
}

// libpng's simplified API reports failures without a position, so the chunk
// layout is walked first to locate truncation.
void check_png_chunks(std::span<const std::uint8_t> bytes) {
  static constexpr std::uint8_t kSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kSig, 8) != 0)
    throw DecodeError("bad PNG signature", 0);
  std::size_t pos = 8;
  bool seen_end = false;
  while (!seen_end) {
    if (bytes.size() - pos < 12) throw DecodeError("PNG chunk header truncated", pos);
    const std::uint32_t len = read_be32(bytes.data() + pos);
    if (bytes.size() - pos - 12 < len) throw DecodeError("PNG chunk payload truncated", pos);
    seen_end = std::memcmp(bytes.data() + pos + 4, "IEND", 4) == 0;
    pos += 12 + static_cast<std::size_t>(len);
  }
}

RasterImage decode_png(std::span<const std::uint8_t> bytes) {
  check_png_chunks(bytes);
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
    throw DecodeError(std::string("PNG header: ") + image.message, 8);
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const int channels = color ? 3 : 1;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw DecodeError("PNG payload: " + msg, 8);
  }
  const int w = static_cast<int>(image.width);
  const int h = static_cast<int>(image.height);
  std::vector<double> data(buffer.size());
  for (std::size_t i = 0; i < buffer.size(); ++i) data[i] = buffer[i] / 255.0;
  return RasterImage(w, h, channels, std::move(data));
}

std::vector<std::uint8_t> encode_pnm(const RasterImage& img, char magic) {
  const std::string header = std::string("P") + magic + "\n" + std::to_string(img.width()) + " " +
                             std::to_string(img.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + img.data().size());
  for (double v : img.data())
    out.push_back(static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
  return out;
}

}  // namespace

RasterImage::RasterImage(int width, int height, int channels, double fill)
    : width_(width), height_(height), channels_(channels) {
  check_dims(width, height, channels);
  data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

RasterImage::RasterImage(int width, int height, int channels, std::vector<double> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
  check_dims(width, height, channels);
  if (data_.size() != static_cast<std::size_t>(width) * height * channels)
    throw ArgumentError("image data length does not match width*height*channels");
}

double RasterImage::clamped(int x, int y, int c) const {
  return at(std::clamp(x, 0, width_ - 1), std::clamp(y, 0, height_ - 1), c);
}

void RasterImage::validate() const {
  for (double v : data_)
    if (!(v >= 0.0 && v <= 1.0)) throw ArgumentError("intensity outside [0,1]");
}

AffineMap AffineMap::translation(double dx, double dy) { return {1, 0, -dx, 0, 1, -dy}; }

AffineMap AffineMap::rotation(double angle_deg, double cx, double cy) {
  // Inverse rotation: output point p reads source at center + R(-angle)(p - center).
  const double t = angle_deg * kPi / 180.0;
  const double cs = std::cos(t), sn = std::sin(t);
  AffineMap m;
  m.a = cs;
  m.b = sn;
  m.d = -sn;
  m.e = cs;
  m.c = cx - cs * cx - sn * cy;
  m.f = cy + sn * cx - cs * cy;
  return m;
}

RasterImage decode_image(std::span<const std::uint8_t> bytes, ImageFormat format) {
  return format == ImageFormat::Ppm ? decode_pnm(bytes) : decode_png(bytes);
}

RasterImage read_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open image " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  std::string ext = path.substr(path.find_last_of('.') + 1);
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  const ImageFormat fmt = ext == "png" ? ImageFormat::Png : ImageFormat::Ppm;
  try {
    return decode_image(bytes, fmt);
  } catch (const DecodeError& e) {
    throw DecodeError(path + ": " + e.what(), e.offset());
  }
}

std::vector<std::uint8_t> encode_pgm(const RasterImage& img) {
  if (img.channels() != 1) throw ArgumentError("PGM export needs a grayscale image");
  return encode_pnm(img, '5');
}

std::vector<std::uint8_t> encode_ppm(const RasterImage& img) {
  if (img.channels() != 3) throw ArgumentError("PPM export needs a 3-channel image");
  return encode_pnm(img, '6');
}

RasterImage to_grayscale(const RasterImage& img) {
  if (img.channels() == 1) return img;
  RasterImage out(img.width(), img.height(), 1);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      out.at(x, y) = std::clamp(
          0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) + 0.114 * img.at(x, y, 2), 0.0, 1.0);
  return out;
}

double sample_bilinear(const RasterImage& img, double x, double y, int channel, double fill) {
  if (!(x >= -0.5 && x < img.width() - 0.5 && y >= -0.5 && y < img.height() - 0.5)) return fill;
  const double fx0 = std::floor(x), fy0 = std::floor(y);
  const double fx = x - fx0, fy = y - fy0;
  const int x0 = static_cast<int>(fx0), y0 = static_cast<int>(fy0);
  const double v00 = img.clamped(x0, y0, channel), v10 = img.clamped(x0 + 1, y0, channel);
  const double v01 = img.clamped(x0, y0 + 1, channel), v11 = img.clamped(x0 + 1, y0 + 1, channel);
  if (fx == 0.0 && fy == 0.0) return v00;
  const double top = v00 + fx * (v10 - v00);
  const double bottom = v01 + fx * (v11 - v01);
  return top + fy * (bottom - top);
}

RasterImage resize_bilinear(const RasterImage& img, int out_w, int out_h) {
  if (out_w < 1 || out_h < 1) throw ArgumentError("resize target must be at least 1x1");
  RasterImage out(out_w, out_h, img.channels());
  const double sx = static_cast<double>(img.width()) / out_w;
  const double sy = static_cast<double>(img.height()) / out_h;
  for (int y = 0; y < out_h; ++y) {
    // Pixel-center alignment, clamped so every sample stays inside.
    const double src_y = std::clamp((y + 0.5) * sy - 0.5, 0.0, img.height() - 1.0);
    for (int x = 0; x < out_w; ++x) {
      const double src_x = std::clamp((x + 0.5) * sx - 0.5, 0.0, img.width() - 1.0);
      for (int c = 0; c < img.channels(); ++c)
        out.at(x, y, c) = sample_bilinear(img, src_x, src_y, c, 0.0);
    }
  }
  return out;
}

RasterImage warp_affine(const RasterImage& img, const AffineMap& map, double fill) {
  if (std::abs(map.determinant()) < 1e-12) throw ArgumentError("affine map is singular");
  RasterImage out(img.width(), img.height(), img.channels());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const double src_x = map.a * x + map.b * y + map.c;
      const double src_y = map.d * x + map.e * y + map.f;
      for (int c = 0; c < img.channels(); ++c)
        out.at(x, y, c) = sample_bilinear(img, src_x, src_y, c, fill);
    }
  }
  return out;
}

RasterImage adjust_contrast(const RasterImage& img) {
  if (img.channels() != 1) throw ArgumentError("contrast adjustment expects a grayscale image");
  const auto [lo, hi] = std::minmax_element(img.data().begin(), img.data().end());
  const double min = *lo, range = *hi - *lo;
  if (range <= 0.0) return img;
  RasterImage out = img;
  for (double& v : out.data()) v = std::clamp((v - min) / range, 0.0, 1.0);
  return out;
}

RasterImage rotate_degrees(const RasterImage& img, double angle_deg, double fill) {
  const double cx = (img.width() - 1) / 2.0, cy = (img.height() - 1) / 2.0;
  return warp_affine(img, AffineMap::rotation(angle_deg, cx, cy), fill);
}

RasterImage translate(const RasterImage& img, double dx, double dy, double fill) {
  return warp_affine(img, AffineMap::translation(dx, dy), fill);
}

RasterImage crop(const RasterImage& img, int x1, int y1, int x2, int y2) {
  x1 = std::clamp(x1, 0, img.width() - 1);
  x2 = std::clamp(x2, 0, img.width() - 1);
  y1 = std::clamp(y1, 0, img.height() - 1);
  y2 = std::clamp(y2, 0, img.height() - 1);
  if (x2 < x1 || y2 < y1) throw ArgumentError("crop box is empty");
  RasterImage out(x2 - x1 + 1, y2 - y1 + 1, img.channels());
  for (int y = y1; y <= y2; ++y)
    for (int x = x1; x <= x2; ++x)
      for (int c = 0; c < img.channels(); ++c) out.at(x - x1, y - y1, c) = img.at(x, y, c);
  return out;
}

}  // namespace signtopic::imaging
