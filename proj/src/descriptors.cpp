#include "signtopic/descriptors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "signtopic/error.hpp"

namespace signtopic::descriptors {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kAssumedInputBlur = 0.5;
constexpr int kMinOctaveSide = 8;
constexpr int kOrientationBins = 36;
constexpr double kDescriptorClamp = 0.2;
// A keypoint at this scale samples one pixel per grid step (a 16x16 patch).
constexpr double kReferenceScale = 1.6;
constexpr int kDenseMargin = 8;

Plane downsample(const Plane& src) {
  Plane out((src.width + 1) / 2, (src.height + 1) / 2);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x) out.at(x, y) = src.at(2 * x, 2 * y);
  return out;
}

double clamped(const Plane& p, int x, int y) {
  return p.at(std::clamp(x, 0, p.width - 1), std::clamp(y, 0, p.height - 1));
}

double bilinear(const Plane& p, double x, double y) {
  x = std::clamp(x, 0.0, p.width - 1.0);
  y = std::clamp(y, 0.0, p.height - 1.0);
  const int x0 = static_cast<int>(x), y0 = static_cast<int>(y);
  const double fx = x - x0, fy = y - y0;
  const double top = clamped(p, x0, y0) * (1 - fx) + clamped(p, x0 + 1, y0) * fx;
  const double bottom = clamped(p, x0, y0 + 1) * (1 - fx) + clamped(p, x0 + 1, y0 + 1) * fx;
  return top * (1 - fy) + bottom * fy;
}

bool is_extremum(const Octave& oct, int level, int x, int y) {
  const double v = oct.dogs[level].at(x, y);
  const bool want_max = v > 0;
  for (int dl = -1; dl <= 1; ++dl) {
    const Plane& p = oct.dogs[level + dl];
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        if (dl == 0 && dx == 0 && dy == 0) continue;
        const double n = p.at(x + dx, y + dy);
        if (want_max ? n >= v : n <= v) return false;
      }
    }
  }
  return true;
}

bool is_edge_like(const Plane& d, int x, int y, double edge_ratio) {
  const double c = d.at(x, y);
  const double dxx = d.at(x + 1, y) + d.at(x - 1, y) - 2 * c;
  const double dyy = d.at(x, y + 1) + d.at(x, y - 1) - 2 * c;
  const double dxy =
      (d.at(x + 1, y + 1) - d.at(x + 1, y - 1) - d.at(x - 1, y + 1) + d.at(x - 1, y - 1)) / 4.0;
  const double tr = dxx + dyy;
  const double det = dxx * dyy - dxy * dxy;
  if (det <= 0) return true;
  return tr * tr / det > (edge_ratio + 1) * (edge_ratio + 1) / edge_ratio;
}

double dominant_orientation(const Plane& g, int x, int y, double sigma) {
  const double weight_sigma = 1.5 * sigma;
  const int radius = std::max(1, static_cast<int>(std::lround(3.0 * weight_sigma)));
  std::array<double, kOrientationBins> hist{};
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      const int px = x + dx, py = y + dy;
      if (px < 1 || py < 1 || px >= g.width - 1 || py >= g.height - 1) continue;
      const double gx = g.at(px + 1, py) - g.at(px - 1, py);
      const double gy = g.at(px, py + 1) - g.at(px, py - 1);
      const double mag = std::hypot(gx, gy);
      if (mag == 0.0) continue;
      double angle = std::atan2(gy, gx);
      if (angle < 0) angle += 2 * kPi;
      const double w = std::exp(-(dx * dx + dy * dy) / (2 * weight_sigma * weight_sigma));
      const int bin = static_cast<int>(angle / (2 * kPi) * kOrientationBins) % kOrientationBins;
      hist[bin] += w * mag;
    }
  }
  const int best = static_cast<int>(std::max_element(hist.begin(), hist.end()) - hist.begin());
  // Parabolic refinement over the neighbouring bins.
  const double l = hist[(best + kOrientationBins - 1) % kOrientationBins];
  const double r = hist[(best + 1) % kOrientationBins];
  const double c = hist[best];
  const double denom = l - 2 * c + r;
  const double offset = denom != 0.0 ? 0.5 * (l - r) / denom : 0.0;
  double deg = (best + 0.5 + offset) * (360.0 / kOrientationBins);
  deg = std::fmod(deg, 360.0);
  if (deg < 0) deg += 360.0;
  return deg;
}

// Gradients no larger than this fraction of the local intensity are rounding
// noise; counting them would let normalization blow noise up into a descriptor.
constexpr double kFlatGradient = 1e-11;

struct GradientField {
  Plane gx, gy;
  Plane level;  // largest |intensity| entering each central difference
};

GradientField gradients(const imaging::RasterImage& img) {
  GradientField f{Plane(img.width(), img.height()), Plane(img.width(), img.height()),
                  Plane(img.width(), img.height())};
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      f.gx.at(x, y) = img.clamped(x + 1, y) - img.clamped(x - 1, y);
      f.gy.at(x, y) = img.clamped(x, y + 1) - img.clamped(x, y - 1);
      f.level.at(x, y) = std::max({std::abs(img.clamped(x + 1, y)), std::abs(img.clamped(x - 1, y)),
                                   std::abs(img.clamped(x, y + 1)), std::abs(img.clamped(x, y - 1))});
    }
  }
  return f;
}

void normalize_l2(std::array<double, kDescriptorLength>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  if (s == 0.0) return;
  const double n = std::sqrt(s);
  for (double& x : v) x /= n;
}

DescriptorStages describe(const GradientField& field, const Keypoint& kp) {
  if (!(kp.x >= 0 && kp.y >= 0 && kp.x <= field.gx.width - 1 && kp.y <= field.gx.height - 1))
    throw ArgumentError("keypoint lies outside the image");
  if (!(kp.scale > 0)) throw ArgumentError("keypoint scale must be positive");
  DescriptorStages st;
  const double theta = kp.orientation * kPi / 180.0;
  const double cs = std::cos(theta), sn = std::sin(theta);
  const double spacing = kp.scale / kReferenceScale;
  const double window_sigma = 8.0;  // half the 16-sample window
  for (int j = 0; j < 16; ++j) {
    const double v = j - 7.5;
    for (int i = 0; i < 16; ++i) {
      const double u = i - 7.5;
      const double px = kp.x + (cs * u - sn * v) * spacing;
      const double py = kp.y + (sn * u + cs * v) * spacing;
      const double gx = bilinear(field.gx, px, py);
      const double gy = bilinear(field.gy, px, py);
      const double mag = std::hypot(gx, gy);
      if (mag <= kFlatGradient * bilinear(field.level, px, py)) continue;
      double rel = std::atan2(gy, gx) - theta;
      rel = std::fmod(rel, 2 * kPi);
      if (rel < 0) rel += 2 * kPi;
      const double weight = mag * std::exp(-(u * u + v * v) / (2 * window_sigma * window_sigma));

      // Trilinear vote over (cell row, cell column, orientation).
      const double cx = (u + 8.0) / 4.0 - 0.5;
      const double cy = (v + 8.0) / 4.0 - 0.5;
      const double co = rel / (2 * kPi) * 8.0;
      const int x0 = static_cast<int>(std::floor(cx));
      const int y0 = static_cast<int>(std::floor(cy));
      const int o0 = static_cast<int>(std::floor(co));
      const double fx = cx - x0, fy = cy - y0, fo = co - o0;
      for (int dy = 0; dy <= 1; ++dy) {
        const int yy = y0 + dy;
        if (yy < 0 || yy > 3) continue;
        const double wy = dy ? fy : 1 - fy;
        for (int dx = 0; dx <= 1; ++dx) {
          const int xx = x0 + dx;
          if (xx < 0 || xx > 3) continue;
          const double wx = dx ? fx : 1 - fx;
          for (int dorient = 0; dorient <= 1; ++dorient) {
            const int oo = (o0 + dorient) % 8;
            const double wo = dorient ? fo : 1 - fo;
            st.raw[(yy * 4 + xx) * 8 + oo] += weight * wy * wx * wo;
          }
        }
      }
    }
  }
  st.clamped = st.raw;
  normalize_l2(st.clamped);
  for (double& x : st.clamped) x = std::min(x, kDescriptorClamp);
  st.final.values = st.clamped;
  normalize_l2(st.final.values);
  return st;
}

}  // namespace

bool SiftDescriptor::is_zero() const {
  return std::all_of(values.begin(), values.end(), [](double v) { return v == 0.0; });
}

Plane to_plane(const imaging::RasterImage& img) {
  if (img.channels() != 1) throw ArgumentError("expected a grayscale image");
  Plane p(img.width(), img.height());
  std::copy(img.data().begin(), img.data().end(), p.values.begin());
  return p;
}

Plane gaussian_blur(const Plane& src, double sigma) {
  if (sigma <= 0.0) return src;
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> kernel(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-(i * i) / (2 * sigma * sigma));
    sum += kernel[i + radius];
  }
  for (double& k : kernel) k /= sum;
  Plane tmp(src.width, src.height), out(src.width, src.height);
  for (int y = 0; y < src.height; ++y)
    for (int x = 0; x < src.width; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) acc += kernel[i + radius] * clamped(src, x + i, y);
      tmp.at(x, y) = acc;
    }
  for (int y = 0; y < src.height; ++y)
    for (int x = 0; x < src.width; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) acc += kernel[i + radius] * clamped(tmp, x, y + i);
      out.at(x, y) = acc;
    }
  return out;
}

ScaleSpace build_scale_space(const imaging::RasterImage& img, int octaves,
                             int scales_per_octave, double base_sigma) {
  if (img.channels() != 1) throw ArgumentError("scale space expects a grayscale image");
  if (octaves < 1 || scales_per_octave < 1) throw ArgumentError("need at least one octave and scale");
  if (!(base_sigma > kAssumedInputBlur)) throw ArgumentError("base_sigma must exceed 0.5");
  if (img.width() < 16 || img.height() < 16) throw ArgumentError("scale space needs at least 16x16");

  ScaleSpace ss;
  ss.base_sigma = base_sigma;
  ss.scales_per_octave = scales_per_octave;
  const int n_gauss = scales_per_octave + 3;
  const double k = std::pow(2.0, 1.0 / scales_per_octave);

  Plane base = gaussian_blur(
      to_plane(img), std::sqrt(base_sigma * base_sigma - kAssumedInputBlur * kAssumedInputBlur));
  for (int o = 0; o < octaves; ++o) {
    if (o > 0) {
      base = downsample(ss.octaves.back().gaussians[scales_per_octave]);
      if (std::min(base.width, base.height) < kMinOctaveSide) break;
    }
    Octave oct;
    oct.step = 1 << o;
    oct.gaussians.push_back(base);
    oct.sigmas.push_back(base_sigma);
    for (int i = 1; i < n_gauss; ++i) {
      const double prev = base_sigma * std::pow(k, i - 1);
      const double next = prev * k;
      oct.gaussians.push_back(gaussian_blur(oct.gaussians.back(), std::sqrt(next * next - prev * prev)));
      oct.sigmas.push_back(next);
    }
    for (int i = 0; i + 1 < n_gauss; ++i) {
      const Plane& lo = oct.gaussians[i];
      const Plane& hi = oct.gaussians[i + 1];
      Plane d(lo.width, lo.height);
      for (std::size_t j = 0; j < d.values.size(); ++j) d.values[j] = hi.values[j] - lo.values[j];
      for (std::size_t j = 0; j < d.values.size(); ++j)
        if (std::abs(d.values[j] - (hi.values[j] - lo.values[j])) > 1e-9)
          throw std::logic_error("DoG layer does not match its Gaussian pair");
      oct.dogs.push_back(std::move(d));
    }
    ss.octaves.push_back(std::move(oct));
  }
  return ss;
}

std::vector<Keypoint> detect_keypoints(const ScaleSpace& ss, double contrast_threshold,
                                       double edge_ratio) {
  std::vector<Keypoint> out;
  for (const Octave& oct : ss.octaves) {
    for (int level = 1; level + 1 < static_cast<int>(oct.dogs.size()); ++level) {
      const Plane& d = oct.dogs[level];
      for (int y = 1; y + 1 < d.height; ++y) {
        for (int x = 1; x + 1 < d.width; ++x) {
          const double v = d.at(x, y);
          if (!(std::abs(v) >= contrast_threshold)) continue;
          if (!is_extremum(oct, level, x, y)) continue;
          if (is_edge_like(d, x, y, edge_ratio)) continue;
          Keypoint kp;
          kp.x = static_cast<double>(x) * oct.step;
          kp.y = static_cast<double>(y) * oct.step;
          kp.scale = oct.sigmas[level] * oct.step;
          kp.orientation = dominant_orientation(oct.gaussians[level], x, y, oct.sigmas[level]);
          out.push_back(kp);
        }
      }
    }
  }
  return out;
}

DescriptorStages compute_descriptor_stages(const imaging::RasterImage& img, const Keypoint& kp) {
  if (img.channels() != 1) throw ArgumentError("descriptor expects a grayscale image");
  return describe(gradients(img), kp);
}

SiftDescriptor compute_descriptor(const imaging::RasterImage& img, const Keypoint& kp) {
  return compute_descriptor_stages(img, kp).final;
}

std::vector<SiftDescriptor> compute_descriptors(const imaging::RasterImage& img,
                                                const std::vector<Keypoint>& kps) {
  if (img.channels() != 1) throw ArgumentError("descriptor expects a grayscale image");
  const GradientField field = gradients(img);
  std::vector<SiftDescriptor> out;
  out.reserve(kps.size());
  for (const Keypoint& kp : kps) out.push_back(describe(field, kp).final);
  return out;
}

std::vector<Keypoint> dense_keypoints(const imaging::RasterImage& img, int stride, double scale) {
  if (stride < 1) throw ArgumentError("dense stride must be at least 1");
  auto axis = [&](int extent) {
    std::vector<double> coords;
    const int usable = extent - 2 * kDenseMargin;
    if (usable < 0) return coords;
    if (stride >= usable) {
      coords.push_back(extent / 2.0);
      return coords;
    }
    for (int c = kDenseMargin; c <= extent - kDenseMargin; c += stride) coords.push_back(c);
    return coords;
  };
  const auto xs = axis(img.width());
  const auto ys = axis(img.height());
  std::vector<Keypoint> out;
  out.reserve(xs.size() * ys.size());
  for (double y : ys)
    for (double x : xs) out.push_back({x, y, scale, 0.0});
  return out;
}

Extraction extract_with_keypoints(const imaging::RasterImage& img, const SiftConfig& config) {
  if (img.channels() != 1) throw ArgumentError("extraction expects a grayscale image");
  Extraction ex;
  if (config.mode != ExtractMode::Dense) {
    const ScaleSpace ss =
        build_scale_space(img, config.octaves, config.scales_per_octave, config.base_sigma);
    ex.keypoints = detect_keypoints(ss, config.contrast_threshold, config.edge_ratio);
  }
  if (config.mode == ExtractMode::Dense ||
      (config.mode == ExtractMode::DogWithDenseFallback &&
       static_cast<int>(ex.keypoints.size()) < config.min_keypoints)) {
    ex.keypoints = dense_keypoints(img, config.dense_stride, config.dense_scale);
    ex.used_dense = true;
  }
  ex.descriptors = compute_descriptors(img, ex.keypoints);
  return ex;
}

std::vector<SiftDescriptor> extract(const imaging::RasterImage& img, const SiftConfig& config) {
  return extract_with_keypoints(img, config).descriptors;
}

}  // namespace signtopic::descriptors
