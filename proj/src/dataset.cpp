#include "signtopic/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "signtopic/error.hpp"
#include "signtopic/random.hpp"
#include "signtopic/sign_classes.hpp"

namespace fs = std::filesystem;

namespace signtopic {

namespace {

std::vector<std::string> split_fields(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) {
    if (!field.empty() && field.back() == '\r') field.pop_back();
    out.push_back(field);
  }
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

int to_int(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw DataError(where + ": expected an integer, got '" + s + "'");
}

double to_double(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw DataError(where + ": expected a number, got '" + s + "'");
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<ManifestEntry> read_annotation(const fs::path& dir) {
  fs::path csv;
  std::vector<fs::path> candidates;
  for (const auto& f : fs::directory_iterator(dir)) {
    const std::string name = f.path().filename().string();
    if (f.is_regular_file() && name.rfind("GT-", 0) == 0 && f.path().extension() == ".csv")
      candidates.push_back(f.path());
  }
  if (candidates.empty())
    throw DataError("class directory " + dir.string() + " has no GT-*.csv annotation file");
  std::sort(candidates.begin(), candidates.end());
  csv = candidates.front();

  std::ifstream in(csv);
  if (!in) throw DataError("cannot read " + csv.string());
  std::vector<ManifestEntry> out;
  std::string line;
  int row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (row == 1 && line.rfind("Filename", 0) == 0) continue;
    const std::string where = csv.string() + " row " + std::to_string(row);
    const auto f = split_fields(line, ';');
    if (f.size() != 8) throw DataError(where + ": expected 8 fields, got " + std::to_string(f.size()));
    ManifestEntry e;
    e.path = (dir / f[0]).string();
    if (!fs::exists(e.path)) throw DataError(where + ": image " + f[0] + " does not exist");
    e.roi = Roi{to_int(f[3], where), to_int(f[4], where), to_int(f[5], where), to_int(f[6], where)};
    e.class_id = to_int(f[7], where);
    if (e.class_id < 0 || e.class_id >= kNumSignClasses)
      throw DataError(where + ": class id " + f[7] + " outside [0, 42]");
    out.push_back(std::move(e));
  }
  return out;
}

void assign_group(std::vector<ManifestEntry*>& group, const SplitConfig& cfg, Rng& rng) {
  for (std::size_t i = group.size(); i > 1; --i) std::swap(group[i - 1], group[rng.below(i)]);
  const std::size_t n = group.size();
  const std::size_t quota = static_cast<std::size_t>(cfg.train + cfg.validation + cfg.test);
  std::size_t n_train, n_val, n_test;
  if (n >= quota) {
    n_train = cfg.train;
    n_val = cfg.validation;
    n_test = cfg.test;
  } else {
    n_train = n * cfg.train / std::max<std::size_t>(quota, 1);
    n_val = n * cfg.validation / std::max<std::size_t>(quota, 1);
    n_test = n - n_train - n_val;
  }
  for (std::size_t i = 0; i < n; ++i) {
    Split s = Split::Unused;
    if (i < n_train) s = Split::Train;
    else if (i < n_train + n_val) s = Split::Validation;
    else if (i < n_train + n_val + n_test) s = Split::Test;
    group[i]->split = s;
  }
}

}  // namespace

std::string_view split_name(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Validation: return "validation";
    case Split::Test: return "test";
    case Split::Unused: return "unused";
  }
  return "?";
}

Split parse_split(std::string_view name) {
  for (Split s : {Split::Train, Split::Validation, Split::Test, Split::Unused})
    if (split_name(s) == name) return s;
  throw ArgumentError("unknown split '" + std::string(name) + "'");
}

std::vector<const ManifestEntry*> DatasetManifest::with_split(Split s) const {
  std::vector<const ManifestEntry*> out;
  for (const auto& e : entries)
    if (e.split == s) out.push_back(&e);
  return out;
}

DatasetManifest ingest_gtsrb(const std::string& root, const SplitConfig& split) {
  if (!fs::is_directory(root)) throw DataError("dataset root " + root + " is not a directory");
  std::vector<fs::path> dirs;
  for (const auto& d : fs::directory_iterator(root))
    if (d.is_directory()) dirs.push_back(d.path());
  std::sort(dirs.begin(), dirs.end());
  DatasetManifest m;
  m.root = root;
  for (const auto& dir : dirs) {
    auto rows = read_annotation(dir);
    m.entries.insert(m.entries.end(), std::make_move_iterator(rows.begin()),
                     std::make_move_iterator(rows.end()));
  }
  if (m.entries.empty()) throw DataError("no annotated images found under " + root);
  assign_splits(m, split);
  return m;
}

void assign_splits(DatasetManifest& manifest, const SplitConfig& split) {
  if (split.train < 0 || split.validation < 0 || split.test < 0)
    throw ArgumentError("split quotas must be non-negative");
  std::map<int, std::vector<ManifestEntry*>> groups;
  for (auto& e : manifest.entries) {
    const int key = split.scope == SplitScope::Class
                        ? e.class_id
                        : static_cast<int>(sign_class(e.class_id).subcategory);
    groups[key].push_back(&e);
  }
  Rng rng(split.seed);
  for (auto& [key, group] : groups) assign_group(group, split, rng);
}

DatasetManifest augment(const DatasetManifest& manifest, const AugmentConfig& config) {
  if (!config.enabled) return manifest;
  std::vector<Variant> geometric = {Variant{}};
  if (config.rotations) {
    geometric.push_back({config.rotation_deg, 0, 0, false});
    geometric.push_back({-config.rotation_deg, 0, 0, false});
  }
  if (config.translations) {
    geometric.push_back({0, config.shift_px, config.shift_px, false});
    geometric.push_back({0, -config.shift_px, -config.shift_px, false});
  }
  DatasetManifest out;
  out.root = manifest.root;
  for (const auto& e : manifest.entries) {
    if (e.split != Split::Train) {
      out.entries.push_back(e);
      continue;
    }
    for (const Variant& g : geometric) {
      for (bool contrast : {false, true}) {
        if (contrast && !config.contrast_variants) continue;
        ManifestEntry v = e;
        v.variant = g;
        v.variant.contrast = contrast;
        out.entries.push_back(std::move(v));
      }
    }
  }
  return out;
}

void write_manifest(const DatasetManifest& manifest, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write manifest " + path);
  out << "# root=" << manifest.root << "\n";
  out << "path;class_id;x1;y1;x2;y2;split;rotation;dx;dy;contrast\n";
  for (const auto& e : manifest.entries) {
    out << e.path << ';' << e.class_id << ';';
    if (e.roi) {
      out << e.roi->x1 << ';' << e.roi->y1 << ';' << e.roi->x2 << ';' << e.roi->y2 << ';';
    } else {
      out << ";;;;";
    }
    out << split_name(e.split) << ';' << fmt(e.variant.rotation_deg) << ';' << fmt(e.variant.dx)
        << ';' << fmt(e.variant.dy) << ';' << (e.variant.contrast ? 1 : 0) << '\n';
  }
}

DatasetManifest read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read manifest " + path);
  DatasetManifest m;
  std::string line;
  int row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.rfind("# root=", 0) == 0) {
      m.root = line.substr(7);
      continue;
    }
    if (line[0] == '#' || line.rfind("path;", 0) == 0) continue;
    const std::string where = path + " row " + std::to_string(row);
    const auto f = split_fields(line, ';');
    if (f.size() != 11) throw DataError(where + ": expected 11 fields");
    ManifestEntry e;
    e.path = f[0];
    e.class_id = to_int(f[1], where);
    if (e.class_id < 0 || e.class_id >= kNumSignClasses)
      throw DataError(where + ": class id outside [0, 42]");
    if (!f[2].empty())
      e.roi = Roi{to_int(f[2], where), to_int(f[3], where), to_int(f[4], where), to_int(f[5], where)};
    try {
      e.split = parse_split(f[6]);
    } catch (const ArgumentError& err) {
      throw DataError(where + ": " + err.what());
    }
    e.variant = {to_double(f[7], where), to_double(f[8], where), to_double(f[9], where), f[10] == "1"};
    m.entries.push_back(std::move(e));
  }
  if (m.entries.empty()) throw DataError("manifest " + path + " is empty");
  return m;
}

imaging::RasterImage preprocess(const imaging::RasterImage& decoded, const std::optional<Roi>& roi,
                                const Variant& variant, const PreprocessConfig& config) {
  imaging::RasterImage img = decoded;
  if (config.crop_roi && roi) img = imaging::crop(img, roi->x1, roi->y1, roi->x2, roi->y2);
  img = imaging::to_grayscale(img);
  img = imaging::resize_bilinear(img, config.width, config.height);
  if (variant.rotation_deg != 0.0) img = imaging::rotate_degrees(img, variant.rotation_deg);
  if (variant.dx != 0.0 || variant.dy != 0.0) img = imaging::translate(img, variant.dx, variant.dy);
  if (variant.contrast || config.contrast) img = imaging::adjust_contrast(img);
  return img;
}

imaging::RasterImage load_preprocessed(const ManifestEntry& entry, const PreprocessConfig& config) {
  return preprocess(imaging::read_image(entry.path), entry.roi, entry.variant, config);
}

}  // namespace signtopic
