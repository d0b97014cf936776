#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "signtopic/config.hpp"
#include "signtopic/imaging.hpp"

namespace signtopic {

// Inclusive pixel box from the GTSRB annotation (Roi.X1..Roi.Y2).
struct Roi {
  int x1 = 0, y1 = 0, x2 = 0, y2 = 0;
  bool operator==(const Roi&) const = default;
};

// Unused marks rows beyond the per-class quotas.
enum class Split { Train, Validation, Test, Unused };

std::string_view split_name(Split s);
Split parse_split(std::string_view name);

// A geometric/photometric variant applied after resizing.
struct Variant {
  double rotation_deg = 0.0;
  double dx = 0.0;
  double dy = 0.0;
  bool contrast = false;
  bool operator==(const Variant&) const = default;
};

struct ManifestEntry {
  std::string path;
  int class_id = 0;
  std::optional<Roi> roi;
  Split split = Split::Train;
  Variant variant;
  bool operator==(const ManifestEntry&) const = default;
};

struct DatasetManifest {
  std::string root;
  std::vector<ManifestEntry> entries;

  std::vector<const ManifestEntry*> with_split(Split s) const;
};

// One entry per annotation row of every class directory under root. Splits
// follow the configured quotas; classes too small for them are split
// proportionally.
DatasetManifest ingest_gtsrb(const std::string& root, const SplitConfig& split = {});

// Assigns split tags in place (deterministic for a given seed).
void assign_splits(DatasetManifest& manifest, const SplitConfig& split);

// Expands each training entry into its variants; other splits are untouched.
DatasetManifest augment(const DatasetManifest& manifest, const AugmentConfig& config);

// Semicolon CSV: path;class_id;x1;y1;x2;y2;split;rotation;dx;dy;contrast
void write_manifest(const DatasetManifest& manifest, const std::string& path);
DatasetManifest read_manifest(const std::string& path);

// Decode, crop, grayscale, resize, apply the variant and optional stretch.
imaging::RasterImage preprocess(const imaging::RasterImage& decoded, const std::optional<Roi>& roi,
                                const Variant& variant, const PreprocessConfig& config);
imaging::RasterImage load_preprocessed(const ManifestEntry& entry, const PreprocessConfig& config);

}  // namespace signtopic
