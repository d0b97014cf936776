#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "signtopic/codebook.hpp"
#include "signtopic/config.hpp"
#include "signtopic/dataset.hpp"
#include "signtopic/descriptors.hpp"
#include "signtopic/fuzzy_knn.hpp"
#include "signtopic/plsa.hpp"
#include "signtopic/shape.hpp"
#include "signtopic/sign_classes.hpp"

namespace signtopic {

inline constexpr std::uint32_t kPipelineVersion = 1;

// Sign-stage components for one shape group (or the global fallback). A group
// with a single class is decided by the shape stage alone and has no models.
struct SignGroup {
  bool global = false;
  shape::ShapeClass shape = shape::ShapeClass::Triangle;
  std::vector<int> class_ids;  // local label i is class_ids[i]
  bool shape_decides = false;
  codebook::Codebook codebook;
  codebook::LlcParams llc;
  plsa::PlsaModel plsa;
  plsa::FitReport fit_report;
  fuzzy_knn::FuzzyKnnModel knn;
  bool operator==(const SignGroup&) const = default;
};

struct TrainedPipeline {
  std::uint32_t version = kPipelineVersion;
  PipelineConfig config;
  std::vector<shape::ShapeTemplate> templates;
  std::vector<SignGroup> groups;  // at most one per shape
  std::optional<SignGroup> global;

  const SignGroup* group_for(shape::ShapeClass s) const;
};

struct Prediction {
  int class_id = -1;
  shape::ShapeClass shape = shape::ShapeClass::Triangle;
  std::vector<int> candidate_classes;
  std::vector<double> memberships;  // aligned with candidate_classes
  bool used_global = false;
};

// Expands the train split per config.augment, then trains both stages on it.
TrainedPipeline train(const DatasetManifest& manifest, const PipelineConfig& config);

// img must already be preprocessed (grayscale, canonical size). When
// forced_shape is set the shape stage is bypassed.
Prediction classify_preprocessed(const TrainedPipeline& pipeline, const imaging::RasterImage& img,
                                 std::optional<shape::ShapeClass> forced_shape = std::nullopt);
// Runs the pipeline's preprocessing on a decoded image first.
Prediction classify_image(const TrainedPipeline& pipeline, const imaging::RasterImage& img,
                          std::optional<shape::ShapeClass> forced_shape = std::nullopt);

// Descriptors with all-zero vectors removed; throws ClassificationError when
// nothing is left.
std::vector<descriptors::SiftDescriptor> informative_descriptors(
    const imaging::RasterImage& img, const descriptors::SiftConfig& config);

// Word counts n(d, w) for one image under a group's codebook.
std::vector<double> encode_document(const std::vector<descriptors::SiftDescriptor>& descs,
                                    const codebook::Codebook& cb, const codebook::LlcParams& llc,
                                    const SignStageConfig& config);

struct SubcategoryScore {
  std::size_t total = 0;
  std::size_t correct = 0;
  double accuracy() const { return total ? static_cast<double>(correct) / total : 0.0; }
};

struct EvaluationReport {
  std::size_t evaluated = 0;
  std::size_t correct = 0;
  std::size_t shape_correct = 0;
  std::size_t errors = 0;  // classification failures, counted as wrong
  std::map<Subcategory, SubcategoryScore> per_subcategory;
  // confusion[true][predicted]; predicted == kNumSignClasses marks a failure.
  std::vector<std::vector<std::size_t>> confusion;
  double seconds = 0.0;

  double accuracy() const { return evaluated ? static_cast<double>(correct) / evaluated : 0.0; }
  double shape_accuracy() const {
    return evaluated ? static_cast<double>(shape_correct) / evaluated : 0.0;
  }
  std::string to_text() const;
  std::string confusion_csv() const;
};

struct EvaluateOptions {
  bool oracle_shape = false;  // use each entry's canonical shape
};

EvaluationReport evaluate(const TrainedPipeline& pipeline, const DatasetManifest& manifest,
                          Split split, const EvaluateOptions& options = {});

struct SweepRow {
  std::size_t topics = 0;
  std::map<Subcategory, SubcategoryScore> per_subcategory;
  double overall = 0.0;
};

// Re-fits only the topic model and classifier per topic count; templates and
// codebooks are trained once and shared.
std::vector<SweepRow> topic_sweep(const DatasetManifest& manifest,
                                  const std::vector<std::size_t>& topic_counts,
                                  const PipelineConfig& config, Split eval_split = Split::Validation);

std::string sweep_csv(const std::vector<SweepRow>& rows);

// "iteration,log_likelihood" rows of a group's EM run.
std::string loglik_csv(const plsa::FitReport& report);

}  // namespace signtopic
