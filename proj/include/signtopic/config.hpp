#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "signtopic/codebook.hpp"
#include "signtopic/descriptors.hpp"
#include "signtopic/fuzzy_knn.hpp"
#include "signtopic/shape.hpp"

namespace signtopic {

enum class CountMode { Llc, Raw };
enum class SplitScope { Class, Subcategory };

struct PreprocessConfig {
  int width = 90;
  int height = 97;
  bool crop_roi = true;
  bool contrast = false;  // stretch every image, train and test alike
};

struct AugmentConfig {
  bool enabled = true;
  bool rotations = true;
  double rotation_deg = 4.0;
  bool translations = true;
  double shift_px = 2.0;
  bool contrast_variants = true;
};

struct SplitConfig {
  int train = 300;
  int validation = 150;
  int test = 100;
  SplitScope scope = SplitScope::Class;
  std::uint64_t seed = 7;
};

struct SignStageConfig {
  std::size_t vocabulary = 300;
  int kmeans_iters = 50;
  std::size_t kmeans_samples = 20000;
  std::size_t llc_neighbors = 5;
  double llc_lambda = 1e-4;
  double llc_sigma = 0.0;  // 0 selects the mean pairwise basis distance
  codebook::Pooling pooling = codebook::Pooling::Sum;
  CountMode count_mode = CountMode::Llc;
  double histogram_scale = 100.0;
  std::size_t topics = 35;
  int em_iters = 182;
  double em_tolerance = 1e-7;
  int fold_in_iters = 100;
  std::size_t knn_k = 5;
  double knn_m = 2.0;
  fuzzy_knn::MembershipInit knn_init = fuzzy_knn::MembershipInit::Crisp;
};

// Every tunable of the pipeline. Loaded from a flat key=value file.
struct PipelineConfig {
  PreprocessConfig preprocess;
  shape::PyramidConfig pyramid;
  descriptors::SiftConfig sift;
  SignStageConfig sign;
  AugmentConfig augment;
  SplitConfig split;
  std::uint64_t seed = 42;
  std::string manifest;    // dataset manifest CSV
  std::string gtsrb_root;  // used when no manifest is given

  // Throws ArgumentError on unknown keys or unparsable values.
  void set(const std::string& key, const std::string& value);
  std::vector<std::pair<std::string, std::string>> to_key_values() const;
  std::string to_text() const;
};

PipelineConfig parse_config(const std::string& text);
PipelineConfig load_config(const std::string& path);

}  // namespace signtopic
