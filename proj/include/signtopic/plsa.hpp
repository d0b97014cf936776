#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace signtopic::plsa {

struct Cell {
  std::size_t word;
  double count;
};

// Sparse document-word counts n(d, w). Only positive cells are stored.
class Corpus {
 public:
  Corpus(std::size_t n_words, std::vector<std::vector<Cell>> docs);
  // Row-major dense matrix, n_docs x n_words.
  static Corpus from_dense(std::size_t n_docs, std::size_t n_words, std::span<const double> counts);

  std::size_t n_docs() const { return docs_.size(); }
  std::size_t n_words() const { return n_words_; }
  std::size_t nonzero_cells() const { return nonzero_; }
  double total_mass() const { return total_; }
  const std::vector<Cell>& doc(std::size_t d) const { return docs_[d]; }

 private:
  std::size_t n_words_;
  std::vector<std::vector<Cell>> docs_;
  std::size_t nonzero_ = 0;
  double total_ = 0.0;
};

// Aspect model parameters. p_w_given_z is n_topics x n_words and p_d_given_z
// is n_topics x n_docs, both row-major.
struct PlsaModel {
  std::size_t n_topics = 0;
  std::size_t n_words = 0;
  std::size_t n_docs = 0;
  std::vector<double> p_z;
  std::vector<double> p_w_given_z;
  std::vector<double> p_d_given_z;

  double w_given_z(std::size_t z, std::size_t w) const { return p_w_given_z[z * n_words + w]; }
  double d_given_z(std::size_t z, std::size_t d) const { return p_d_given_z[z * n_docs + d]; }
  bool operator==(const PlsaModel&) const = default;
};

struct FitReport {
  // Entry t is the log-likelihood after t M-steps (entry 0 is the random start).
  std::vector<double> log_likelihoods;
  int iterations_run = 0;
  std::uint64_t seed = 0;
  bool converged = false;
  std::vector<std::string> warnings;
  bool operator==(const FitReport&) const = default;
};

struct FitOptions {
  double tolerance = 1e-7;
  // Called after every M-step with the 1-based iteration number.
  std::function<void(const PlsaModel&, int)> on_iteration;
};

struct FitResult {
  PlsaModel model;
  FitReport report;
};

FitResult fit(const Corpus& corpus, std::size_t n_topics, int max_iters, std::uint64_t seed,
              const FitOptions& options = {});

// Sum over cells of n(d,w) log sum_z P(z)P(d|z)P(w|z). Cells with zero
// probability contribute log(1e-12); their number goes to degenerate_cells.
double log_likelihood(const PlsaModel& model, const Corpus& corpus,
                      std::size_t* degenerate_cells = nullptr);

struct FoldInResult {
  std::vector<double> p_z_given_d;
  std::vector<double> log_likelihoods;  // of the new document, per iteration
  int iterations_run = 0;
};

// Estimates P(z|d) for an unseen document with P(w|z) frozen.
FoldInResult fold_in_with_trace(const PlsaModel& model, std::span<const double> word_counts,
                                int max_iters, std::uint64_t seed);
std::vector<double> fold_in(const PlsaModel& model, std::span<const double> word_counts,
                            int max_iters, std::uint64_t seed);

// Largest |sum - 1| over P(z) and every row of P(w|z) and P(d|z).
double normalization_error(const PlsaModel& model);

}  // namespace signtopic::plsa
