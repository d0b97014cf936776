#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace signtopic::codebook {

// Visual vocabulary: M bases of dimension D, stored row-major.
class Codebook {
 public:
  Codebook() = default;
  Codebook(std::size_t size, std::size_t dim, std::vector<double> bases);

  std::size_t size() const { return size_; }
  std::size_t dim() const { return dim_; }
  std::span<const double> basis(std::size_t j) const {
    return {bases_.data() + j * dim_, dim_};
  }
  const std::vector<double>& bases() const { return bases_; }

  bool operator==(const Codebook&) const = default;

 private:
  std::size_t size_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> bases_;
};

struct KmeansResult {
  Codebook codebook;
  std::vector<double> objectives;  // one per assignment step
  std::vector<std::size_t> assignments;
  int iterations = 0;
};

// Lloyd iterations from k-means++ seeding. points holds count*dim values.
KmeansResult train_kmeans(std::span<const double> points, std::size_t dim, std::size_t clusters,
                          int max_iters, std::uint64_t seed);

// Sparse code over the k nearest bases; coefficients sum to one.
struct LlcCode {
  std::vector<std::size_t> indices;
  std::vector<double> coefficients;
};

struct LlcParams {
  std::size_t neighbors = 5;
  double lambda = 1e-4;
  double sigma = 1.0;
  bool operator==(const LlcParams&) const = default;
};

LlcCode llc_encode(std::span<const double> x, const Codebook& cb, const LlcParams& params);

// ||x - sum_j c_j b_j||^2
double reconstruction_error(std::span<const double> x, const Codebook& cb, const LlcCode& code);

// Mean Euclidean distance over all basis pairs; the default LLC sigma.
double mean_pairwise_distance(const Codebook& cb);

enum class Pooling { Sum, Max };

struct BowHistogram {
  std::vector<double> counts;
  double total = 0.0;
};

// Pools |coefficient| per codebook index. Throws on an empty code list.
BowHistogram pool_histogram(const std::vector<LlcCode>& codes, std::size_t size, Pooling pooling);

}  // namespace signtopic::codebook
