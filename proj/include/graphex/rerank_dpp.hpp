#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "graphex/types.hpp"

namespace graphex {

struct RerankConfig {
  double f_min = 0.05;
  double f_max = 0.95;
  // Diagonal jitter applied once when the kernel has a negative eigenvalue,
  // and the tolerated smallest eigenvalue afterwards. Both are relative to
  // max(1, largest diagonal entry).
  double jitter = 1e-10;
  double psd_tolerance = 1e-8;
  // Candidates whose residual d_i^2 falls below this (same relative scale)
  // are treated as linearly dependent on the selection.
  double dependence_threshold = 1e-12;
  // Stop before selecting an item whose log-det gain is <= 0.
  bool stop_at_nonpositive_gain = false;
};

// exp(alpha * r_i) with alpha = f / (2 (1 - f)).
double tradeoff_exponent(double f);
Vector adjusted_scores(const Vector& r, double f);

// Symmetric PSD kernel. Only constructible through validation.
class KernelMatrix {
 public:
  // Throws InvalidArgument if `l` is not square/symmetric/finite, and Error
  // naming the smallest eigenvalue if it is not PSD after jitter.
  static KernelMatrix from_matrix(Matrix l, const RerankConfig& config = {});

  const Matrix& matrix() const { return l_; }
  std::size_t size() const { return static_cast<std::size_t>(l_.rows()); }
  double min_eigenvalue() const { return min_eigenvalue_; }
  bool jittered() const { return jittered_; }
  // max(1, largest diagonal entry); the scale of the relative tolerances.
  double scale() const { return scale_; }
  // Residual variance below which an item counts as dependent. Jitter lifts
  // exact dependence to about jitter * scale, so the floor sits above it.
  double dependence_floor(const RerankConfig& config) const;

 private:
  KernelMatrix() = default;

  Matrix l_;
  double min_eigenvalue_ = 0.0;
  double scale_ = 1.0;
  bool jittered_ = false;
};

// L_ij = r*_i S_ij r*_j.
KernelMatrix build_kernel(const Vector& r_star, const Matrix& similarity,
                          const RerankConfig& config = {});

struct GreedyStep {
  std::size_t index;
  // log det(L_{Y+i}) - log det(L_Y) at selection time; -inf for items
  // appended after every remaining candidate became dependent.
  double gain;
};

// Fast greedy MAP inference with incremental Cholesky-style updates:
// O(n k^2) time, no determinant evaluations. Returns min(k, n) steps
// (fewer only with stop_at_nonpositive_gain). Ties go to the lower index.
std::vector<GreedyStep> greedy_map_steps(const KernelMatrix& kernel,
                                         std::size_t k,
                                         const RerankConfig& config = {});
std::vector<std::size_t> greedy_map(const KernelMatrix& kernel, std::size_t k,
                                    const RerankConfig& config = {});

// log det of the principal submatrix indexed by `subset`; 0 for the empty
// set and -inf when the submatrix is (numerically) singular.
double log_prob(const Matrix& kernel, std::span<const std::size_t> subset,
                double dependence_threshold = 1e-12);
double log_prob(const KernelMatrix& kernel, std::span<const std::size_t> subset,
                const RerankConfig& config = {});

struct RerankInput {
  std::vector<ItemId> items;
  Vector scores;      // ranker output r
  Matrix similarity;  // S, unit diagonal
  double propensity = 0.5;
  std::size_t k = 0;
};

// Throws InvalidArgument describing the first violated input invariant.
void validate_rerank_input(const RerankInput& input, const RerankConfig& config = {});

// adjusted_scores -> build_kernel -> greedy_map, mapped back to ItemIds in
// selection order.
std::vector<ItemId> rerank(const RerankInput& input, const RerankConfig& config = {});

}  // namespace graphex
