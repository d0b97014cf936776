#include "signtopic/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "signtopic/error.hpp"
#include "signtopic/parallel.hpp"
#include "signtopic/random.hpp"

namespace signtopic {

namespace {

using descriptors::SiftDescriptor;
using imaging::RasterImage;

struct TrainingImage {
  int class_id = 0;
  RasterImage image;
  std::vector<SiftDescriptor> descriptors;  // informative only; may be empty
};

// A group after codebook training and encoding, before the topic model.
struct GroupFeatures {
  SignGroup group;
  std::vector<std::vector<double>> docs;
  std::vector<std::size_t> labels;
  std::uint64_t seed = 0;
};

std::uint64_t group_seed(std::uint64_t base, const SignGroup& g) {
  const std::uint64_t tag = g.global ? 0x9e37 : static_cast<std::uint64_t>(g.shape) + 1;
  return base * 0x100000001b3ULL + tag;
}

std::vector<TrainingImage> load_training_images(const DatasetManifest& manifest,
                                                const PipelineConfig& config) {
  const auto entries = manifest.with_split(Split::Train);
  if (entries.empty()) throw DataError("manifest has no training entries");
  std::vector<TrainingImage> out(entries.size());
  parallel_for(entries.size(), [&](std::size_t i) {
    out[i].class_id = entries[i]->class_id;
    out[i].image = load_preprocessed(*entries[i], config.preprocess);
    for (auto& d : descriptors::extract(out[i].image, config.sift))
      if (!d.is_zero()) out[i].descriptors.push_back(d);
  });
  return out;
}

std::vector<shape::ShapeTemplate> train_shape_stage(const std::vector<TrainingImage>& images,
                                                    const PipelineConfig& config) {
  std::map<shape::ShapeClass, std::vector<RasterImage>> groups;
  for (const auto& t : images) groups[sign_class(t.class_id).canonical_shape].push_back(t.image);
  return shape::train_templates(groups, config.pyramid);
}

GroupFeatures prepare_group(SignGroup group, const std::vector<const TrainingImage*>& members,
                            const PipelineConfig& config) {
  GroupFeatures gf;
  gf.seed = group_seed(config.seed, group);
  gf.group = std::move(group);
  SignGroup& g = gf.group;
  std::sort(g.class_ids.begin(), g.class_ids.end());
  g.class_ids.erase(std::unique(g.class_ids.begin(), g.class_ids.end()), g.class_ids.end());
  if (g.class_ids.size() < 2) {
    g.shape_decides = true;
    return gf;
  }

  std::vector<const TrainingImage*> usable;
  for (const TrainingImage* t : members)
    if (!t->descriptors.empty()) usable.push_back(t);
  if (usable.empty())
    throw DataError("shape group '" + std::string(shape::shape_name(g.shape)) +
                    "' has no training image with descriptors");

  // Codebook from a seeded subsample of the group's descriptors.
  std::vector<const SiftDescriptor*> pool;
  for (const TrainingImage* t : usable)
    for (const auto& d : t->descriptors) pool.push_back(&d);
  Rng rng(gf.seed);
  const std::size_t take = std::min(pool.size(), config.sign.kmeans_samples);
  for (std::size_t i = 0; i < take; ++i) std::swap(pool[i], pool[i + rng.below(pool.size() - i)]);
  const std::size_t vocabulary = std::min(config.sign.vocabulary, take);
  if (vocabulary < 2)
    throw DataError("shape group '" + std::string(shape::shape_name(g.shape)) +
                    "' has too few descriptors for a codebook");
  std::vector<double> points;
  points.reserve(take * descriptors::kDescriptorLength);
  for (std::size_t i = 0; i < take; ++i)
    points.insert(points.end(), pool[i]->values.begin(), pool[i]->values.end());
  g.codebook = codebook::train_kmeans(points, descriptors::kDescriptorLength, vocabulary,
                                      config.sign.kmeans_iters, gf.seed)
                   .codebook;
  g.llc.neighbors = config.sign.llc_neighbors;
  g.llc.lambda = config.sign.llc_lambda;
  g.llc.sigma = config.sign.llc_sigma > 0.0 ? config.sign.llc_sigma
                                            : codebook::mean_pairwise_distance(g.codebook);
  if (!(g.llc.sigma > 0.0)) g.llc.sigma = 1.0;

  gf.docs.resize(usable.size());
  parallel_for(usable.size(), [&](std::size_t i) {
    gf.docs[i] = encode_document(usable[i]->descriptors, g.codebook, g.llc, config.sign);
  });
  for (const TrainingImage* t : usable) {
    const auto it = std::find(g.class_ids.begin(), g.class_ids.end(), t->class_id);
    gf.labels.push_back(static_cast<std::size_t>(it - g.class_ids.begin()));
  }
  return gf;
}

SignGroup fit_group_topics(const GroupFeatures& gf, std::size_t topics, const PipelineConfig& config) {
  SignGroup g = gf.group;
  if (g.shape_decides) return g;
  const std::size_t n_words = g.codebook.size();
  std::vector<std::vector<plsa::Cell>> cells(gf.docs.size());
  for (std::size_t d = 0; d < gf.docs.size(); ++d)
    for (std::size_t w = 0; w < n_words; ++w)
      if (gf.docs[d][w] > 0.0) cells[d].push_back({w, gf.docs[d][w]});
  const plsa::Corpus corpus(n_words, std::move(cells));
  plsa::FitOptions opts;
  opts.tolerance = config.sign.em_tolerance;
  auto fitted = plsa::fit(corpus, topics, config.sign.em_iters, gf.seed, opts);
  g.plsa = std::move(fitted.model);
  g.fit_report = std::move(fitted.report);

  std::vector<fuzzy_knn::TrainingPoint> points(gf.docs.size());
  parallel_for(gf.docs.size(), [&](std::size_t d) {
    points[d].x = plsa::fold_in(g.plsa, gf.docs[d], config.sign.fold_in_iters, gf.seed);
    points[d].label = gf.labels[d];
  });
  const std::size_t k = std::min(config.sign.knn_k, points.size());
  g.knn = fuzzy_knn::build(points, g.class_ids.size(), k, config.sign.knn_m, config.sign.knn_init);
  return g;
}

struct PreparedStages {
  std::vector<shape::ShapeTemplate> templates;
  std::vector<GroupFeatures> groups;
  std::optional<GroupFeatures> global;
};

PreparedStages prepare(const DatasetManifest& manifest, const PipelineConfig& config) {
  const DatasetManifest expanded = augment(manifest, config.augment);
  const auto images = load_training_images(expanded, config);
  PreparedStages ps;
  ps.templates = train_shape_stage(images, config);

  std::vector<const TrainingImage*> all;
  for (const auto& t : images) all.push_back(&t);
  for (shape::ShapeClass s : shape::kAllShapes) {
    SignGroup g;
    g.shape = s;
    std::vector<const TrainingImage*> members;
    for (const TrainingImage* t : all) {
      if (sign_class(t->class_id).canonical_shape != s) continue;
      members.push_back(t);
      g.class_ids.push_back(t->class_id);
    }
    if (members.empty()) continue;
    ps.groups.push_back(prepare_group(std::move(g), members, config));
  }
  SignGroup global;
  global.global = true;
  for (const TrainingImage* t : all) global.class_ids.push_back(t->class_id);
  ps.global = prepare_group(std::move(global), all, config);
  return ps;
}

TrainedPipeline assemble(const PreparedStages& ps, std::size_t topics, const PipelineConfig& config) {
  TrainedPipeline p;
  p.config = config;
  p.config.sign.topics = topics;
  p.templates = ps.templates;
  for (const auto& gf : ps.groups) p.groups.push_back(fit_group_topics(gf, topics, config));
  if (ps.global) p.global = fit_group_topics(*ps.global, topics, config);
  return p;
}

std::string fmt_acc(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

const SignGroup* TrainedPipeline::group_for(shape::ShapeClass s) const {
  for (const auto& g : groups)
    if (g.shape == s) return &g;
  return nullptr;
}

std::vector<SiftDescriptor> informative_descriptors(const RasterImage& img,
                                                    const descriptors::SiftConfig& config) {
  std::vector<SiftDescriptor> out;
  for (auto& d : descriptors::extract(img, config))
    if (!d.is_zero()) out.push_back(d);
  if (out.empty())
    throw ClassificationError("image yields no informative descriptors, even on the dense grid");
  return out;
}

std::vector<double> encode_document(const std::vector<SiftDescriptor>& descs,
                                    const codebook::Codebook& cb, const codebook::LlcParams& llc,
                                    const SignStageConfig& config) {
  if (descs.empty()) throw ClassificationError("no descriptors to encode");
  if (config.count_mode == CountMode::Raw) {
    std::vector<double> counts(cb.size(), 0.0);
    codebook::LlcParams hard = llc;
    hard.neighbors = 1;
    for (const auto& d : descs) counts[codebook::llc_encode(d.values, cb, hard).indices[0]] += 1.0;
    return counts;
  }
  std::vector<codebook::LlcCode> codes;
  codes.reserve(descs.size());
  for (const auto& d : descs) codes.push_back(codebook::llc_encode(d.values, cb, llc));
  auto hist = codebook::pool_histogram(codes, cb.size(), config.pooling);
  for (double& v : hist.counts) v *= config.histogram_scale;
  return hist.counts;
}

TrainedPipeline train(const DatasetManifest& manifest, const PipelineConfig& config) {
  return assemble(prepare(manifest, config), config.sign.topics, config);
}

Prediction classify_preprocessed(const TrainedPipeline& pipeline, const RasterImage& img,
                                 std::optional<shape::ShapeClass> forced_shape) {
  const auto descs = informative_descriptors(img, pipeline.config.sift);
  Prediction pred;
  pred.shape = forced_shape ? *forced_shape
                            : shape::classify_shape(img, pipeline.templates, pipeline.config.pyramid).shape;
  const SignGroup* g = pipeline.group_for(pred.shape);
  if (!g) {
    if (!pipeline.global) throw ConfigurationError("model has no global fallback components");
    g = &*pipeline.global;
    pred.used_global = true;
  }
  pred.candidate_classes = g->class_ids;
  if (g->shape_decides) {
    pred.class_id = g->class_ids.front();
    pred.memberships = {1.0};
    return pred;
  }
  const auto doc = encode_document(descs, g->codebook, g->llc, pipeline.config.sign);
  const auto topics = plsa::fold_in(g->plsa, doc, pipeline.config.sign.fold_in_iters,
                                    group_seed(pipeline.config.seed, *g));
  const auto decision = fuzzy_knn::classify(g->knn, topics);
  pred.class_id = g->class_ids[decision.label];
  pred.memberships = decision.memberships;
  return pred;
}

Prediction classify_image(const TrainedPipeline& pipeline, const RasterImage& img,
                          std::optional<shape::ShapeClass> forced_shape) {
  return classify_preprocessed(
      pipeline, preprocess(img, std::nullopt, Variant{}, pipeline.config.preprocess), forced_shape);
}

EvaluationReport evaluate(const TrainedPipeline& pipeline, const DatasetManifest& manifest,
                          Split split, const EvaluateOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  const auto entries = manifest.with_split(split);
  if (entries.empty())
    throw DataError("manifest has no entries in split '" + std::string(split_name(split)) + "'");

  struct Outcome {
    int predicted = -1;
    shape::ShapeClass shape = shape::ShapeClass::Triangle;
    bool shape_known = false;
  };
  std::vector<Outcome> outcomes(entries.size());
  parallel_for(entries.size(), [&](std::size_t i) {
    const ManifestEntry& e = *entries[i];
    const RasterImage img = load_preprocessed(e, pipeline.config.preprocess);
    std::optional<shape::ShapeClass> forced;
    if (options.oracle_shape) forced = sign_class(e.class_id).canonical_shape;
    try {
      const Prediction p = classify_preprocessed(pipeline, img, forced);
      outcomes[i] = {p.class_id, p.shape, true};
    } catch (const ClassificationError&) {
      outcomes[i].shape = forced ? *forced
                                 : shape::classify_shape(img, pipeline.templates, pipeline.config.pyramid).shape;
      outcomes[i].shape_known = true;
    }
  });

  EvaluationReport r;
  r.confusion.assign(kNumSignClasses, std::vector<std::size_t>(kNumSignClasses + 1, 0));
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const int truth = entries[i]->class_id;
    const Outcome& o = outcomes[i];
    const bool ok = o.predicted == truth;
    ++r.evaluated;
    r.correct += ok;
    if (o.predicted < 0) ++r.errors;
    if (o.shape_known && o.shape == sign_class(truth).canonical_shape) ++r.shape_correct;
    auto& sub = r.per_subcategory[sign_class(truth).subcategory];
    ++sub.total;
    sub.correct += ok;
    r.confusion[truth][o.predicted < 0 ? kNumSignClasses : o.predicted] += 1;
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

std::string EvaluationReport::to_text() const {
  std::ostringstream out;
  out << "evaluated       " << evaluated << "\n";
  out << "overall         " << fmt_acc(accuracy()) << "  (" << correct << "/" << evaluated << ")\n";
  out << "shape stage     " << fmt_acc(shape_accuracy()) << "\n";
  out << "failures        " << errors << "\n";
  for (Subcategory s : kAllSubcategories) {
    const auto it = per_subcategory.find(s);
    if (it == per_subcategory.end()) continue;
    std::string name(subcategory_name(s));
    name.resize(16, ' ');
    out << name << fmt_acc(it->second.accuracy()) << "  (" << it->second.correct << "/"
        << it->second.total << ")\n";
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "time            %.2f s\n", seconds);
  out << buf;
  return out.str();
}

std::string EvaluationReport::confusion_csv() const {
  std::ostringstream out;
  out << "true_class,predicted_class,count\n";
  for (std::size_t t = 0; t < confusion.size(); ++t)
    for (std::size_t p = 0; p < confusion[t].size(); ++p)
      if (confusion[t][p])
        out << t << ',' << (p == static_cast<std::size_t>(kNumSignClasses) ? std::string("failed") : std::to_string(p))
            << ',' << confusion[t][p] << '\n';
  return out.str();
}

std::vector<SweepRow> topic_sweep(const DatasetManifest& manifest,
                                  const std::vector<std::size_t>& topic_counts,
                                  const PipelineConfig& config, Split eval_split) {
  if (topic_counts.empty()) throw ArgumentError("topic sweep needs at least one topic count");
  const PreparedStages ps = prepare(manifest, config);
  std::vector<SweepRow> rows;
  for (std::size_t topics : topic_counts) {
    const TrainedPipeline p = assemble(ps, topics, config);
    const EvaluationReport r = evaluate(p, manifest, eval_split);
    rows.push_back({topics, r.per_subcategory, r.accuracy()});
  }
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "topics";
  for (Subcategory s : kAllSubcategories) out << ',' << subcategory_key(s) << "_acc";
  out << ",overall_acc\n";
  for (const auto& row : rows) {
    out << row.topics;
    for (Subcategory s : kAllSubcategories) {
      const auto it = row.per_subcategory.find(s);
      out << ',' << (it == row.per_subcategory.end() ? std::string("nan") : fmt_acc(it->second.accuracy()));
    }
    out << ',' << fmt_acc(row.overall) << '\n';
  }
  return out.str();
}

std::string loglik_csv(const plsa::FitReport& report) {
  std::ostringstream out;
  out << "iteration,log_likelihood\n";
  char buf[64];
  for (std::size_t i = 0; i < report.log_likelihoods.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i, report.log_likelihoods[i]);
    out << buf;
  }
  return out.str();
}

}  // namespace signtopic
