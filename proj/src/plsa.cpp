#include "signtopic/plsa.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "signtopic/error.hpp"
#include "signtopic/parallel.hpp"
#include "signtopic/random.hpp"

namespace signtopic::plsa {

namespace {

constexpr double kLogFloor = -27.631021115928547;  // log(1e-12)
constexpr std::size_t kDocChunk = 32;

// Neumaier compensated accumulator.
struct CompensatedSum {
  double sum = 0.0;
  double carry = 0.0;
  void add(double v) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      carry += (sum - t) + v;
    } else {
      carry += (v - t) + sum;
    }
    sum = t;
  }
  double value() const { return sum + carry; }
};

void random_distribution(Rng& rng, std::span<double> out) {
  double total = 0.0;
  for (double& v : out) {
    v = rng.uniform_positive();
    total += v;
  }
  for (double& v : out) v /= total;
}

struct ChunkAccumulator {
  std::vector<double> word_topic;  // n_topics x n_words
  std::vector<double> topic;
  CompensatedSum loglik;
  std::size_t degenerate = 0;
};

}  // namespace

Corpus::Corpus(std::size_t n_words, std::vector<std::vector<Cell>> docs)
    : n_words_(n_words), docs_(std::move(docs)) {
  if (docs_.empty()) throw ArgumentError("corpus has no documents");
  if (n_words_ == 0) throw ArgumentError("corpus vocabulary is empty");
  CompensatedSum total;
  for (std::size_t d = 0; d < docs_.size(); ++d) {
    auto& cells = docs_[d];
    std::erase_if(cells, [](const Cell& c) { return c.count == 0.0; });
    double doc_total = 0.0;
    for (const Cell& c : cells) {
      if (c.word >= n_words_) throw ArgumentError("corpus word index out of range");
      if (!(c.count > 0.0) || !std::isfinite(c.count))
        throw ArgumentError("corpus counts must be finite and non-negative");
      doc_total += c.count;
      total.add(c.count);
    }
    if (!(doc_total > 0.0))
      throw ArgumentError("document " + std::to_string(d) + " has no positive counts");
    nonzero_ += cells.size();
  }
  total_ = total.value();
}

Corpus Corpus::from_dense(std::size_t n_docs, std::size_t n_words, std::span<const double> counts) {
  if (counts.size() != n_docs * n_words) throw ArgumentError("dense corpus size mismatch");
  std::vector<std::vector<Cell>> docs(n_docs);
  for (std::size_t d = 0; d < n_docs; ++d)
    for (std::size_t w = 0; w < n_words; ++w)
      if (counts[d * n_words + w] != 0.0) docs[d].push_back({w, counts[d * n_words + w]});
  return Corpus(n_words, std::move(docs));
}

FitResult fit(const Corpus& corpus, std::size_t n_topics, int max_iters, std::uint64_t seed,
              const FitOptions& options) {
  if (n_topics < 1) throw ArgumentError("pLSA needs at least one topic");
  if (max_iters < 1) throw ArgumentError("pLSA needs at least one iteration");
  const std::size_t nw = corpus.n_words(), nd = corpus.n_docs();

  FitResult result;
  PlsaModel& m = result.model;
  FitReport& report = result.report;
  report.seed = seed;
  if (n_topics > corpus.nonzero_cells())
    report.warnings.push_back("n_topics (" + std::to_string(n_topics) +
                              ") exceeds the number of nonzero cells (" +
                              std::to_string(corpus.nonzero_cells()) + ")");

  m.n_topics = n_topics;
  m.n_words = nw;
  m.n_docs = nd;
  m.p_z.resize(n_topics);
  m.p_w_given_z.resize(n_topics * nw);
  m.p_d_given_z.resize(n_topics * nd);
  Rng rng(seed);
  random_distribution(rng, m.p_z);
  for (std::size_t z = 0; z < n_topics; ++z) random_distribution(rng, {m.p_w_given_z.data() + z * nw, nw});
  for (std::size_t z = 0; z < n_topics; ++z) random_distribution(rng, {m.p_d_given_z.data() + z * nd, nd});

  const std::size_t chunks = (nd + kDocChunk - 1) / kDocChunk;
  std::vector<ChunkAccumulator> acc(chunks);
  std::vector<double> doc_topic(n_topics * nd);

  for (int iter = 1; iter <= max_iters; ++iter) {
    // E-step fused with the M-step numerators, one pass over nonzero cells.
    parallel_for(chunks, [&](std::size_t c) {
      ChunkAccumulator& a = acc[c];
      a.word_topic.assign(n_topics * nw, 0.0);
      a.topic.assign(n_topics, 0.0);
      a.loglik = {};
      a.degenerate = 0;
      std::vector<double> joint(n_topics);
      const std::size_t end = std::min(nd, (c + 1) * kDocChunk);
      for (std::size_t d = c * kDocChunk; d < end; ++d) {
        for (std::size_t z = 0; z < n_topics; ++z) doc_topic[z * nd + d] = 0.0;
        for (const Cell& cell : corpus.doc(d)) {
          double s = 0.0;
          for (std::size_t z = 0; z < n_topics; ++z) {
            joint[z] = m.p_z[z] * m.p_d_given_z[z * nd + d] * m.p_w_given_z[z * nw + cell.word];
            s += joint[z];
          }
          if (s <= 0.0) {
            a.loglik.add(cell.count * kLogFloor);
            ++a.degenerate;
            continue;
          }
          a.loglik.add(cell.count * std::log(s));
          for (std::size_t z = 0; z < n_topics; ++z) {
            const double r = cell.count * joint[z] / s;
            a.word_topic[z * nw + cell.word] += r;
            doc_topic[z * nd + d] += r;
            a.topic[z] += r;
          }
        }
      }
    });

    // Merge in chunk order so results do not depend on scheduling.
    std::vector<CompensatedSum> word_topic(n_topics * nw), topic(n_topics);
    CompensatedSum loglik;
    for (const ChunkAccumulator& a : acc) {
      for (std::size_t i = 0; i < word_topic.size(); ++i)
        if (a.word_topic[i] != 0.0) word_topic[i].add(a.word_topic[i]);
      for (std::size_t z = 0; z < n_topics; ++z) topic[z].add(a.topic[z]);
      loglik.add(a.loglik.value());
    }
    report.log_likelihoods.push_back(loglik.value());

    double mass = 0.0;
    for (std::size_t z = 0; z < n_topics; ++z) mass += topic[z].value();
    for (std::size_t z = 0; z < n_topics; ++z) {
      const double tz = topic[z].value();
      double* pw = m.p_w_given_z.data() + z * nw;
      double* pd = m.p_d_given_z.data() + z * nd;
      if (!(tz > 0.0)) {
        // Dead topic: keep rows valid distributions with zero prior weight.
        std::fill(pw, pw + nw, 1.0 / static_cast<double>(nw));
        std::fill(pd, pd + nd, 1.0 / static_cast<double>(nd));
        m.p_z[z] = 0.0;
        continue;
      }
      for (std::size_t w = 0; w < nw; ++w) pw[w] = word_topic[z * nw + w].value() / tz;
      for (std::size_t d = 0; d < nd; ++d) pd[d] = doc_topic[z * nd + d] / tz;
      m.p_z[z] = tz / mass;
    }
    report.iterations_run = iter;
    if (options.on_iteration) options.on_iteration(m, iter);

    const auto& ll = report.log_likelihoods;
    if (ll.size() >= 2) {
      const double prev = ll[ll.size() - 2], cur = ll.back();
      const double rel = (cur - prev) / std::max(std::abs(prev), 1e-300);
      if (rel < options.tolerance) {
        report.converged = true;
        break;
      }
    }
  }
  report.log_likelihoods.push_back(log_likelihood(m, corpus));
  return result;
}

double log_likelihood(const PlsaModel& model, const Corpus& corpus, std::size_t* degenerate_cells) {
  if (model.n_words != corpus.n_words() || model.n_docs != corpus.n_docs())
    throw ArgumentError("model and corpus dimensions differ");
  CompensatedSum total;
  std::size_t degenerate = 0;
  for (std::size_t d = 0; d < corpus.n_docs(); ++d) {
    for (const Cell& cell : corpus.doc(d)) {
      double s = 0.0;
      for (std::size_t z = 0; z < model.n_topics; ++z)
        s += model.p_z[z] * model.d_given_z(z, d) * model.w_given_z(z, cell.word);
      if (s > 0.0) {
        total.add(cell.count * std::log(s));
      } else {
        total.add(cell.count * kLogFloor);
        ++degenerate;
      }
    }
  }
  if (degenerate_cells) *degenerate_cells = degenerate;
  return total.value();
}

FoldInResult fold_in_with_trace(const PlsaModel& model, std::span<const double> word_counts,
                                int max_iters, std::uint64_t seed) {
  if (word_counts.size() != model.n_words)
    throw ArgumentError("histogram has " + std::to_string(word_counts.size()) +
                        " words, model expects " + std::to_string(model.n_words));
  if (max_iters < 1) throw ArgumentError("fold-in needs at least one iteration");
  std::vector<Cell> cells;
  double mass = 0.0;
  for (std::size_t w = 0; w < word_counts.size(); ++w) {
    const double n = word_counts[w];
    if (n < 0.0 || !std::isfinite(n)) throw ArgumentError("histogram counts must be non-negative");
    if (n > 0.0) {
      cells.push_back({w, n});
      mass += n;
    }
  }
  if (!(mass > 0.0)) throw ArgumentError("cannot fold in an all-zero histogram");

  const std::size_t k = model.n_topics;
  FoldInResult out;
  std::vector<double>& mix = out.p_z_given_d;
  mix.resize(k);
  Rng rng(seed);
  random_distribution(rng, mix);
  std::vector<double> next(k), joint(k);
  for (int iter = 1; iter <= max_iters; ++iter) {
    std::fill(next.begin(), next.end(), 0.0);
    CompensatedSum ll;
    double used = 0.0;
    for (const Cell& cell : cells) {
      double s = 0.0;
      for (std::size_t z = 0; z < k; ++z) {
        joint[z] = mix[z] * model.w_given_z(z, cell.word);
        s += joint[z];
      }
      if (s <= 0.0) {
        ll.add(cell.count * kLogFloor);
        continue;
      }
      ll.add(cell.count * std::log(s));
      for (std::size_t z = 0; z < k; ++z) next[z] += cell.count * joint[z] / s;
      used += cell.count;
    }
    out.log_likelihoods.push_back(ll.value());
    out.iterations_run = iter;
    if (!(used > 0.0)) {
      // No word of the document is supported by any topic.
      mix = model.p_z;
      break;
    }
    double change = 0.0;
    for (std::size_t z = 0; z < k; ++z) {
      const double v = next[z] / used;
      change = std::max(change, std::abs(v - mix[z]));
      mix[z] = v;
    }
    if (change < 1e-13) break;
  }
  const double total = std::accumulate(mix.begin(), mix.end(), 0.0);
  for (double& v : mix) v /= total;
  return out;
}

std::vector<double> fold_in(const PlsaModel& model, std::span<const double> word_counts,
                            int max_iters, std::uint64_t seed) {
  return fold_in_with_trace(model, word_counts, max_iters, seed).p_z_given_d;
}

double normalization_error(const PlsaModel& model) {
  auto row_err = [](const double* p, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += p[i];
    return std::abs(s - 1.0);
  };
  double err = row_err(model.p_z.data(), model.n_topics);
  for (std::size_t z = 0; z < model.n_topics; ++z) {
    err = std::max(err, row_err(model.p_w_given_z.data() + z * model.n_words, model.n_words));
    err = std::max(err, row_err(model.p_d_given_z.data() + z * model.n_docs, model.n_docs));
  }
  return err;
}

}  // namespace signtopic::plsa
