#include "signtopic/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "signtopic/error.hpp"

namespace signtopic {

namespace {

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u64(s.size());
    out_.insert(out_.end(), s.begin(), s.end());
  }
  void f64s(const std::vector<double>& v) {
    u64(v.size());
    for (double x : v) f64(x);
  }
  std::vector<std::uint8_t>& bytes() { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  Reader(std::span<const std::uint8_t> bytes, std::size_t pos) : bytes_(bytes), pos_(pos) {}

  std::uint8_t u8() {
    need(1, "byte");
    return bytes_[pos_++];
  }
  std::uint32_t u32() {
    need(4, "u32");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8, "u64");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  bool flag() {
    const std::size_t at = pos_;
    const std::uint8_t v = u8();
    if (v > 1) throw ModelError("invalid boolean flag", at);
    return v == 1;
  }
  // Element count for an array of `width`-byte items; checked against what is left.
  std::size_t count(std::size_t width, const char* what) {
    const std::size_t at = pos_;
    const std::uint64_t n = u64();
    if (width && n > (bytes_.size() - pos_) / width)
      throw ModelError(std::string("truncated ") + what + " array", at);
    return static_cast<std::size_t>(n);
  }
  std::string str() {
    const std::size_t n = count(1, "string");
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::vector<double> f64s(const char* what) {
    const std::size_t n = count(8, what);
    std::vector<double> v(n);
    for (double& x : v) x = f64();
    return v;
  }
  std::size_t pos() const { return pos_; }
  [[noreturn]] void fail(const std::string& what, std::size_t at) const { throw ModelError(what, at); }

 private:
  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) throw ModelError(std::string("truncated model file reading ") + what, pos_);
  }
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_;
};

void write_hog(Writer& w, const shape::HogDescriptor& h) {
  w.i32(h.cells_x);
  w.i32(h.cells_y);
  w.i32(h.bins);
  w.i32(h.block);
  w.f64s(h.values);
}

shape::HogDescriptor read_hog(Reader& r) {
  shape::HogDescriptor h;
  const std::size_t at = r.pos();
  h.cells_x = r.i32();
  h.cells_y = r.i32();
  h.bins = r.i32();
  h.block = r.i32();
  h.values = r.f64s("hog");
  if (h.cells_x < h.block || h.cells_y < h.block || h.bins <= 0 || h.block <= 0 ||
      h.values.size() != h.expected_length())
    r.fail("HOG dimensions disagree with its values", at);
  return h;
}

shape::ShapeClass read_shape(Reader& r) {
  const std::size_t at = r.pos();
  const std::uint32_t s = r.u32();
  if (s >= shape::kAllShapes.size()) r.fail("unknown shape id " + std::to_string(s), at);
  return static_cast<shape::ShapeClass>(s);
}

void write_group(Writer& w, const SignGroup& g) {
  w.u8(g.global);
  w.u32(static_cast<std::uint32_t>(g.shape));
  w.u8(g.shape_decides);
  w.u64(g.class_ids.size());
  for (int id : g.class_ids) w.i32(id);
  if (g.shape_decides) return;

  w.u64(g.codebook.size());
  w.u64(g.codebook.dim());
  w.f64s(g.codebook.bases());
  w.u64(g.llc.neighbors);
  w.f64(g.llc.lambda);
  w.f64(g.llc.sigma);

  const auto& p = g.plsa;
  w.u64(p.n_topics);
  w.u64(p.n_words);
  w.u64(p.n_docs);
  w.f64s(p.p_z);
  w.f64s(p.p_w_given_z);
  w.f64s(p.p_d_given_z);

  const auto& f = g.fit_report;
  w.f64s(f.log_likelihoods);
  w.i32(f.iterations_run);
  w.u64(f.seed);
  w.u8(f.converged);
  w.u64(f.warnings.size());
  for (const auto& s : f.warnings) w.str(s);

  const auto& k = g.knn;
  w.u64(k.n_classes);
  w.u64(k.k);
  w.f64(k.m);
  w.u64(k.points.size());
  for (const auto& pt : k.points) {
    w.f64s(pt.x);
    w.u64(pt.label);
    w.f64s(pt.memberships);
  }
}

SignGroup read_group(Reader& r) {
  SignGroup g;
  const std::size_t at = r.pos();
  g.global = r.flag();
  g.shape = read_shape(r);
  g.shape_decides = r.flag();
  g.class_ids.resize(r.count(4, "class id"));
  for (int& id : g.class_ids) {
    const std::size_t id_at = r.pos();
    id = r.i32();
    if (id < 0 || id >= kNumSignClasses) r.fail("class id out of range", id_at);
  }
  if (g.class_ids.empty()) r.fail("group without classes", at);
  if (g.shape_decides) return g;

  const std::size_t cb_at = r.pos();
  const std::uint64_t size = r.u64();
  const std::uint64_t dim = r.u64();
  auto bases = r.f64s("codebook");
  if (size < 2 || dim == 0 || bases.size() / dim != size || bases.size() % dim != 0)
    r.fail("codebook dimensions disagree with its values", cb_at);
  try {
    g.codebook = codebook::Codebook(size, dim, std::move(bases));
  } catch (const std::exception& e) {
    r.fail(e.what(), cb_at);
  }
  g.llc.neighbors = r.u64();
  g.llc.lambda = r.f64();
  g.llc.sigma = r.f64();

  const std::size_t p_at = r.pos();
  auto& p = g.plsa;
  p.n_topics = r.u64();
  p.n_words = r.u64();
  p.n_docs = r.u64();
  p.p_z = r.f64s("P(z)");
  p.p_w_given_z = r.f64s("P(w|z)");
  p.p_d_given_z = r.f64s("P(d|z)");
  if (p.n_topics == 0 || p.p_z.size() != p.n_topics || p.n_words != g.codebook.size() ||
      p.p_w_given_z.size() / p.n_topics != p.n_words || p.p_w_given_z.size() % p.n_topics != 0 ||
      p.p_d_given_z.size() / p.n_topics != p.n_docs || p.p_d_given_z.size() % p.n_topics != 0)
    r.fail("topic model dimensions disagree with its values", p_at);

  auto& f = g.fit_report;
  f.log_likelihoods = r.f64s("log-likelihood");
  f.iterations_run = r.i32();
  f.seed = r.u64();
  f.converged = r.flag();
  f.warnings.resize(r.count(8, "warning"));
  for (auto& s : f.warnings) s = r.str();

  const std::size_t k_at = r.pos();
  auto& k = g.knn;
  k.n_classes = r.u64();
  k.k = r.u64();
  k.m = r.f64();
  k.points.resize(r.count(24, "classifier point"));
  for (auto& pt : k.points) {
    pt.x = r.f64s("topic posterior");
    pt.label = r.u64();
    pt.memberships = r.f64s("membership");
    if (pt.x.size() != p.n_topics || pt.label >= k.n_classes || pt.memberships.size() != k.n_classes)
      r.fail("classifier point dimensions disagree", k_at);
  }
  if (k.n_classes != g.class_ids.size() || k.k == 0 || k.k > k.points.size())
    r.fail("classifier dimensions disagree with the group", k_at);
  return g;
}

}  // namespace

std::vector<std::uint8_t> serialize(const TrainedPipeline& p) {
  Writer w;
  w.u32(p.version);
  w.str(p.config.to_text());
  w.u64(p.templates.size());
  for (const auto& t : p.templates) {
    w.u32(static_cast<std::uint32_t>(t.shape));
    w.i32(t.level);
    w.i32(t.source_count);
    write_hog(w, t.hog);
  }
  w.u64(p.groups.size());
  for (const auto& g : p.groups) write_group(w, g);
  w.u8(p.global.has_value());
  if (p.global) write_group(w, *p.global);

  std::vector<std::uint8_t> out(std::begin(kModelMagic), std::end(kModelMagic));
  const std::uint64_t n = w.bytes().size();
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(n >> (8 * i)));
  out.insert(out.end(), w.bytes().begin(), w.bytes().end());
  return out;
}

TrainedPipeline deserialize(std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) throw ModelError("empty model file", 0);
  if (bytes.size() < sizeof kModelMagic ||
      std::memcmp(bytes.data(), kModelMagic, sizeof kModelMagic) != 0)
    throw ModelError("not a signtopic model file (bad magic)", 0);
  Reader header(bytes, sizeof kModelMagic);
  const std::uint64_t length = header.u64();
  const std::size_t start = header.pos();
  if (bytes.size() - start < length)
    throw ModelError("truncated model file: payload declares " + std::to_string(length) + " bytes",
                     bytes.size());
  if (bytes.size() - start > length)
    throw ModelError("trailing bytes after declared payload", start + length);
  Reader r(bytes.first(start + length), start);

  TrainedPipeline p;
  const std::size_t v_at = r.pos();
  p.version = r.u32();
  if (p.version != kPipelineVersion)
    r.fail("unsupported model version " + std::to_string(p.version), v_at);
  const std::size_t cfg_at = r.pos();
  try {
    p.config = parse_config(r.str());
  } catch (const ArgumentError& e) {
    r.fail(std::string("bad stored configuration: ") + e.what(), cfg_at);
  }
  p.templates.resize(r.count(24, "template"));
  for (auto& t : p.templates) {
    t.shape = read_shape(r);
    t.level = r.i32();
    t.source_count = r.i32();
    t.hog = read_hog(r);
  }
  p.groups.resize(r.count(11, "group"));
  for (auto& g : p.groups) g = read_group(r);
  if (r.flag()) p.global = read_group(r);
  if (r.pos() != start + length) r.fail("trailing bytes after model payload", r.pos());
  return p;
}

void save_pipeline(const TrainedPipeline& pipeline, const std::string& path) {
  const auto bytes = serialize(pipeline);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ModelError("cannot open " + path + " for writing", 0);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ModelError("failed writing " + path, 0);
}

TrainedPipeline load_pipeline(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelError("cannot open model file " + path, 0);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

}  // namespace signtopic
