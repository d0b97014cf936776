#include "signtopic/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "signtopic/error.hpp"

namespace signtopic {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// Shortest text that reads back to the same double.
std::string fmt_double(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw ArgumentError("config key '" + key + "': expected a number, got '" + v + "'");
}

template <typename Int>
Int parse_int(const std::string& key, const std::string& v) {
  Int out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ArgumentError("config key '" + key + "': expected an integer, got '" + v + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw ArgumentError("config key '" + key + "': expected true/false, got '" + v + "'");
}

struct Field {
  const char* key;
  std::function<std::string(const PipelineConfig&)> get;
  std::function<void(PipelineConfig&, const std::string&, const std::string&)> set;
};

#define ST_INT(KEY, EXPR, TYPE)                                                              \
  Field {                                                                                    \
    KEY, [](const PipelineConfig& c) { return std::to_string(c.EXPR); },                     \
        [](PipelineConfig& c, const std::string& k, const std::string& v) {                 \
          c.EXPR = parse_int<TYPE>(k, v);                                                    \
        }                                                                                    \
  }
#define ST_DBL(KEY, EXPR)                                                                    \
  Field {                                                                                    \
    KEY, [](const PipelineConfig& c) { return fmt_double(c.EXPR); },                         \
        [](PipelineConfig& c, const std::string& k, const std::string& v) {                 \
          c.EXPR = parse_double(k, v);                                                       \
        }                                                                                    \
  }
#define ST_BOOL(KEY, EXPR)                                                                   \
  Field {                                                                                    \
    KEY, [](const PipelineConfig& c) { return std::string(c.EXPR ? "true" : "false"); },     \
        [](PipelineConfig& c, const std::string& k, const std::string& v) {                 \
          c.EXPR = parse_bool(k, v);                                                         \
        }                                                                                    \
  }
#define ST_STR(KEY, EXPR)                                                                    \
  Field {                                                                                    \
    KEY, [](const PipelineConfig& c) { return c.EXPR; },                                     \
        [](PipelineConfig& c, const std::string&, const std::string& v) { c.EXPR = v; }     \
  }

const std::vector<Field>& fields() {
  using descriptors::ExtractMode;
  static const std::vector<Field> table = {
      ST_INT("resize_width", preprocess.width, int),
      ST_INT("resize_height", preprocess.height, int),
      ST_BOOL("crop_roi", preprocess.crop_roi),
      ST_BOOL("contrast", preprocess.contrast),

      ST_INT("hog_cell", pyramid.hog.cell_size, int),
      ST_INT("hog_bins", pyramid.hog.bins, int),
      ST_INT("hog_block", pyramid.hog.block, int),
      ST_INT("pyramid_levels", pyramid.levels, int),
      ST_DBL("pyramid_step", pyramid.scale_step),

      Field{"sift_mode",
            [](const PipelineConfig& c) -> std::string {
              switch (c.sift.mode) {
                case ExtractMode::Dog: return "dog";
                case ExtractMode::Dense: return "dense";
                case ExtractMode::DogWithDenseFallback: return "dog_with_dense_fallback";
              }
              return "";
            },
            [](PipelineConfig& c, const std::string& k, const std::string& v) {
              if (v == "dog") c.sift.mode = ExtractMode::Dog;
              else if (v == "dense") c.sift.mode = ExtractMode::Dense;
              else if (v == "dog_with_dense_fallback") c.sift.mode = ExtractMode::DogWithDenseFallback;
              else throw ArgumentError("config key '" + k + "': unknown mode '" + v + "'");
            }},
      ST_INT("sift_octaves", sift.octaves, int),
      ST_INT("sift_scales", sift.scales_per_octave, int),
      ST_DBL("sift_sigma", sift.base_sigma),
      ST_DBL("contrast_threshold", sift.contrast_threshold),
      ST_DBL("edge_ratio", sift.edge_ratio),
      ST_INT("min_keypoints", sift.min_keypoints, int),
      ST_INT("dense_stride", sift.dense_stride, int),
      ST_DBL("dense_scale", sift.dense_scale),

      ST_INT("vocabulary", sign.vocabulary, std::size_t),
      ST_INT("kmeans_iters", sign.kmeans_iters, int),
      ST_INT("kmeans_samples", sign.kmeans_samples, std::size_t),
      ST_INT("llc_neighbors", sign.llc_neighbors, std::size_t),
      ST_DBL("llc_lambda", sign.llc_lambda),
      ST_DBL("llc_sigma", sign.llc_sigma),
      Field{"pooling",
            [](const PipelineConfig& c) -> std::string {
              return c.sign.pooling == codebook::Pooling::Sum ? "sum" : "max";
            },
            [](PipelineConfig& c, const std::string& k, const std::string& v) {
              if (v == "sum") c.sign.pooling = codebook::Pooling::Sum;
              else if (v == "max") c.sign.pooling = codebook::Pooling::Max;
              else throw ArgumentError("config key '" + k + "': expected sum or max");
            }},
      Field{"count_mode",
            [](const PipelineConfig& c) -> std::string {
              return c.sign.count_mode == CountMode::Llc ? "llc" : "raw";
            },
            [](PipelineConfig& c, const std::string& k, const std::string& v) {
              if (v == "llc") c.sign.count_mode = CountMode::Llc;
              else if (v == "raw") c.sign.count_mode = CountMode::Raw;
              else throw ArgumentError("config key '" + k + "': expected llc or raw");
            }},
      ST_DBL("histogram_scale", sign.histogram_scale),
      ST_INT("topics", sign.topics, std::size_t),
      ST_INT("em_iters", sign.em_iters, int),
      ST_DBL("em_tolerance", sign.em_tolerance),
      ST_INT("fold_in_iters", sign.fold_in_iters, int),
      ST_INT("knn_k", sign.knn_k, std::size_t),
      ST_DBL("knn_m", sign.knn_m),
      Field{"knn_init",
            [](const PipelineConfig& c) -> std::string {
              return c.sign.knn_init == fuzzy_knn::MembershipInit::Crisp ? "crisp" : "soft";
            },
            [](PipelineConfig& c, const std::string& k, const std::string& v) {
              if (v == "crisp") c.sign.knn_init = fuzzy_knn::MembershipInit::Crisp;
              else if (v == "soft") c.sign.knn_init = fuzzy_knn::MembershipInit::Soft;
              else throw ArgumentError("config key '" + k + "': expected crisp or soft");
            }},

      ST_BOOL("augment", augment.enabled),
      ST_BOOL("augment_rotations", augment.rotations),
      ST_DBL("augment_rotation_deg", augment.rotation_deg),
      ST_BOOL("augment_translations", augment.translations),
      ST_DBL("augment_shift_px", augment.shift_px),
      ST_BOOL("augment_contrast", augment.contrast_variants),

      ST_INT("split_train", split.train, int),
      ST_INT("split_validation", split.validation, int),
      ST_INT("split_test", split.test, int),
      Field{"split_scope",
            [](const PipelineConfig& c) -> std::string {
              return c.split.scope == SplitScope::Class ? "class" : "subcategory";
            },
            [](PipelineConfig& c, const std::string& k, const std::string& v) {
              if (v == "class") c.split.scope = SplitScope::Class;
              else if (v == "subcategory") c.split.scope = SplitScope::Subcategory;
              else throw ArgumentError("config key '" + k + "': expected class or subcategory");
            }},
      ST_INT("split_seed", split.seed, std::uint64_t),

      ST_INT("seed", seed, std::uint64_t),
      ST_STR("manifest", manifest),
      ST_STR("gtsrb_root", gtsrb_root),
  };
  return table;
}

#undef ST_INT
#undef ST_DBL
#undef ST_BOOL
#undef ST_STR

}  // namespace

void PipelineConfig::set(const std::string& key, const std::string& value) {
  for (const Field& f : fields()) {
    if (key == f.key) {
      f.set(*this, key, value);
      return;
    }
  }
  throw ArgumentError("unknown config key '" + key + "'");
}

std::vector<std::pair<std::string, std::string>> PipelineConfig::to_key_values() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const Field& f : fields()) out.emplace_back(f.key, f.get(*this));
  return out;
}

std::string PipelineConfig::to_text() const {
  std::string out;
  for (const auto& [k, v] : to_key_values()) out += k + "=" + v + "\n";
  return out;
}

PipelineConfig parse_config(const std::string& text) {
  PipelineConfig cfg;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ArgumentError("config line " + std::to_string(line_no) + ": expected key=value");
    cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace signtopic
