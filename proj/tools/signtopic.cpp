// signtopic: command-line front end for the two-stage sign classifier.
#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "signtopic/error.hpp"
#include "signtopic/model_io.hpp"
#include "signtopic/pipeline.hpp"

using namespace signtopic;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kModel = 3 };

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "key=value configuration file");
  cmd->add_option("--set", c.overrides, "override one key, e.g. --set topics=29");
}

PipelineConfig make_config(const Common& c) {
  PipelineConfig cfg = c.config_path.empty() ? PipelineConfig{} : load_config(c.config_path);
  for (const auto& kv : c.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ArgumentError("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return cfg;
}

// Explicit --manifest, else the config's manifest key, else ingest gtsrb_root.
DatasetManifest obtain_manifest(const std::string& manifest_path, const PipelineConfig& cfg) {
  if (!manifest_path.empty()) return read_manifest(manifest_path);
  if (!cfg.manifest.empty()) return read_manifest(cfg.manifest);
  if (!cfg.gtsrb_root.empty()) return ingest_gtsrb(cfg.gtsrb_root, cfg.split);
  throw ArgumentError("no dataset given: pass --manifest or set manifest/gtsrb_root in the config");
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << text;
}

// "5..60", "5..60:5" or "5,10,35".
std::vector<std::size_t> parse_topic_range(const std::string& text) {
  auto to_count = [&](const std::string& s) -> std::size_t {
    try {
      std::size_t used = 0;
      const long v = std::stol(s, &used);
      if (used == s.size() && v > 0) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
    throw ArgumentError("bad topic count '" + s + "' in '" + text + "'");
  };
  std::vector<std::size_t> out;
  const auto dots = text.find("..");
  if (dots == std::string::npos) {
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) out.push_back(to_count(item));
  } else {
    std::string rest = text.substr(dots + 2);
    std::size_t step = 1;
    if (const auto colon = rest.find(':'); colon != std::string::npos) {
      step = to_count(rest.substr(colon + 1));
      rest.resize(colon);
    }
    const std::size_t lo = to_count(text.substr(0, dots));
    const std::size_t hi = to_count(rest);
    if (hi < lo) throw ArgumentError("empty topic range '" + text + "'");
    for (std::size_t t = lo; t <= hi; t += step) out.push_back(t);
  }
  if (out.empty()) throw ArgumentError("empty topic range '" + text + "'");
  return out;
}

const SignGroup& pick_group(const TrainedPipeline& p, const std::string& name) {
  if (name == "global") {
    if (!p.global) throw ArgumentError("model has no global group");
    return *p.global;
  }
  const SignGroup* g = p.group_for(shape::parse_shape(name));
  if (!g) throw ArgumentError("model has no '" + name + "' group");
  return *g;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-stage traffic sign classifier: HOG shape templates, then pLSA topics over LLC-coded SIFT"};
  app.require_subcommand(1);

  Common ingest_common;
  std::string ingest_root, ingest_out = "manifest.csv";
  bool ingest_augmented = false;
  auto* ingest = app.add_subcommand("ingest", "scan a GTSRB tree and write a split manifest");
  ingest->add_option("root", ingest_root, "GTSRB training directory")->required();
  ingest->add_option("--out", ingest_out, "manifest path");
  ingest->add_flag("--augmented", ingest_augmented, "write the augmented training entries too");
  add_common(ingest, ingest_common);

  Common train_common;
  std::string train_manifest, train_out;
  auto* train_cmd = app.add_subcommand("train", "train both stages and save a model file");
  train_cmd->add_option("--manifest", train_manifest, "manifest from ingest");
  train_cmd->add_option("--out", train_out, "model path")->required();
  add_common(train_cmd, train_common);

  std::string classify_model;
  std::vector<std::string> classify_images;
  auto* classify = app.add_subcommand("classify", "classify image files");
  classify->add_option("--model", classify_model)->required();
  classify->add_option("images", classify_images)->required();

  std::string eval_model, eval_manifest, eval_split = "test", eval_confusion;
  bool eval_oracle = false;
  auto* eval_cmd = app.add_subcommand("evaluate", "accuracy report on one split");
  eval_cmd->add_option("--model", eval_model)->required();
  eval_cmd->add_option("--manifest", eval_manifest, "defaults to the manifest the model was trained with");
  eval_cmd->add_option("--split", eval_split, "train, validation or test");
  eval_cmd->add_option("--confusion", eval_confusion, "write confusion counts as CSV");
  eval_cmd->add_flag("--oracle-shape", eval_oracle, "use each entry's true shape");

  Common sweep_common;
  std::string sweep_topics, sweep_manifest, sweep_split = "validation", sweep_out;
  auto* sweep = app.add_subcommand("sweep", "accuracy per topic count");
  sweep->add_option("--topics", sweep_topics, "e.g. 5..60, 5..60:5 or 5,35")->required();
  sweep->add_option("--manifest", sweep_manifest);
  sweep->add_option("--split", sweep_split);
  sweep->add_option("--out", sweep_out, "CSV path (stdout if omitted)");
  add_common(sweep, sweep_common);

  std::string ll_model, ll_group = "global", ll_out;
  auto* loglik = app.add_subcommand("export-loglik", "EM log-likelihood trace of one group");
  loglik->add_option("--model", ll_model)->required();
  loglik->add_option("--group", ll_group, "shape name or 'global'");
  loglik->add_option("--out", ll_out, "CSV path (stdout if omitted)");

  std::string ds_model, ds_image;
  auto* dump_shapes = app.add_subcommand("dump-shapes", "template distances for one image");
  dump_shapes->add_option("--model", ds_model)->required();
  dump_shapes->add_option("image", ds_image)->required();

  Common dd_common;
  std::string dd_image;
  auto* dump_desc = app.add_subcommand("dump-descriptors", "keypoints and SIFT vectors of one image");
  dump_desc->add_option("image", dd_image)->required();
  add_common(dump_desc, dd_common);

  std::string dc_model, dc_group = "global";
  auto* dump_cb = app.add_subcommand("dump-codebook", "codebook bases of one group");
  dump_cb->add_option("--model", dc_model)->required();
  dump_cb->add_option("--group", dc_group, "shape name or 'global'");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    if (*ingest) {
      const PipelineConfig cfg = make_config(ingest_common);
      DatasetManifest m = ingest_gtsrb(ingest_root, cfg.split);
      if (ingest_augmented) m = augment(m, cfg.augment);
      write_manifest(m, ingest_out);
      std::cout << "wrote " << m.entries.size() << " entries to " << ingest_out << " ("
                << m.with_split(Split::Train).size() << " train, "
                << m.with_split(Split::Validation).size() << " validation, "
                << m.with_split(Split::Test).size() << " test)\n";
    } else if (*train_cmd) {
      PipelineConfig cfg = make_config(train_common);
      if (!train_manifest.empty()) cfg.manifest = train_manifest;
      const DatasetManifest m = obtain_manifest(train_manifest, cfg);
      const TrainedPipeline p = train(m, cfg);
      save_pipeline(p, train_out);
      std::cout << "saved " << train_out << ": " << p.templates.size() << " shape templates, "
                << p.groups.size() << " shape groups\n";
      for (const auto& g : p.groups)
        std::cout << "  " << shape::shape_name(g.shape) << ": " << g.class_ids.size() << " classes"
                  << (g.shape_decides ? " (shape decides)" : "") << "\n";
    } else if (*classify) {
      const TrainedPipeline p = load_pipeline(classify_model);
      int status = kOk;
      std::cout << "image,class_id,class_name,shape,membership\n";
      for (const auto& path : classify_images) {
        try {
          const Prediction pred = classify_image(p, imaging::read_image(path));
          double best = 0.0;
          for (double u : pred.memberships) best = std::max(best, u);
          std::cout << path << ',' << pred.class_id << ",\"" << sign_class(pred.class_id).name << "\","
                    << shape::shape_name(pred.shape) << ',' << fmt(best) << '\n';
        } catch (const std::exception& e) {
          std::cerr << path << ": " << e.what() << '\n';
          status = kData;
        }
      }
      return status;
    } else if (*eval_cmd) {
      const TrainedPipeline p = load_pipeline(eval_model);
      const DatasetManifest m = obtain_manifest(eval_manifest, p.config);
      const EvaluationReport r = evaluate(p, m, parse_split(eval_split), {eval_oracle});
      std::cout << r.to_text();
      if (!eval_confusion.empty()) write_text(eval_confusion, r.confusion_csv());
    } else if (*sweep) {
      const PipelineConfig cfg = make_config(sweep_common);
      const DatasetManifest m = obtain_manifest(sweep_manifest, cfg);
      const auto rows = topic_sweep(m, parse_topic_range(sweep_topics), cfg, parse_split(sweep_split));
      write_text(sweep_out, sweep_csv(rows));
    } else if (*loglik) {
      const TrainedPipeline p = load_pipeline(ll_model);
      const SignGroup& g = pick_group(p, ll_group);
      if (g.shape_decides) throw ArgumentError("group '" + ll_group + "' has no topic model");
      write_text(ll_out, loglik_csv(g.fit_report));
    } else if (*dump_shapes) {
      const TrainedPipeline p = load_pipeline(ds_model);
      const auto img = preprocess(imaging::read_image(ds_image), std::nullopt, Variant{}, p.config.preprocess);
      std::cout << "shape,level,distance\n";
      for (const auto& row : shape::shape_distances(img, p.templates, p.config.pyramid))
        std::cout << shape::shape_name(row.shape) << ',' << row.level << ',' << fmt(row.distance) << '\n';
    } else if (*dump_desc) {
      const PipelineConfig cfg = make_config(dd_common);
      const auto img = preprocess(imaging::read_image(dd_image), std::nullopt, Variant{}, cfg.preprocess);
      const auto ex = descriptors::extract_with_keypoints(img, cfg.sift);
      std::cout << "x,y,scale,orientation";
      for (int i = 0; i < descriptors::kDescriptorLength; ++i) std::cout << ",v" << i;
      std::cout << '\n';
      for (std::size_t i = 0; i < ex.keypoints.size(); ++i) {
        const auto& k = ex.keypoints[i];
        std::cout << fmt(k.x) << ',' << fmt(k.y) << ',' << fmt(k.scale) << ',' << fmt(k.orientation);
        for (double v : ex.descriptors[i].values) std::cout << ',' << fmt(v);
        std::cout << '\n';
      }
    } else if (*dump_cb) {
      const TrainedPipeline p = load_pipeline(dc_model);
      const SignGroup& g = pick_group(p, dc_group);
      if (g.shape_decides) throw ArgumentError("group '" + dc_group + "' has no codebook");
      for (std::size_t j = 0; j < g.codebook.size(); ++j) {
        const auto b = g.codebook.basis(j);
        for (std::size_t i = 0; i < b.size(); ++i) std::cout << (i ? "," : "") << fmt(b[i]);
        std::cout << '\n';
      }
    }
  } catch (const ModelError& e) {
    std::cerr << "model error: " << e.what() << '\n';
    return kModel;
  } catch (const ArgumentError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const ConfigurationError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  }
  return kOk;
}
