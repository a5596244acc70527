#include "graphex/rerank_dpp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <Eigen/Eigenvalues>

#include "graphex/util.hpp"

namespace graphex {

namespace {

constexpr double kSymmetryTolerance = 1e-12;

double symmetric_min_eigenvalue(const Matrix& m) {
  if (m.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m, Eigen::EigenvaluesOnly);
  return solver.eigenvalues()(0);
}

bool is_symmetric(const Matrix& m, double tol) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = i + 1; j < m.cols(); ++j)
      if (std::abs(m(i, j) - m(j, i)) > tol) return false;
  return true;
}

double diagonal_scale(const Matrix& m) {
  return m.rows() == 0 ? 1.0 : std::max(1.0, m.diagonal().cwiseAbs().maxCoeff());
}

}  // namespace

double tradeoff_exponent(double f) { return f / (2.0 * (1.0 - f)); }

Vector adjusted_scores(const Vector& r, double f) {
  if (!(f > 0.0 && f < 1.0))
    throw InvalidArgument("propensity must lie in (0, 1), got " + format_double(f));
  if (!r.allFinite()) throw InvalidArgument("scores must be finite");
  const double alpha = tradeoff_exponent(f);
  // std::exp per entry: Eigen's packet exp rounds differently from its
  // scalar tail, which would split exact score ties.
  Vector out(r.size());
  for (Eigen::Index i = 0; i < r.size(); ++i) out(i) = std::exp(alpha * r(i));
  if (!out.allFinite()) throw InvalidArgument("adjusted scores overflow");
  return out;
}

KernelMatrix KernelMatrix::from_matrix(Matrix l, const RerankConfig& config) {
  if (l.rows() != l.cols()) throw InvalidArgument("kernel must be square");
  if (!l.allFinite()) throw InvalidArgument("kernel has non-finite entries");
  KernelMatrix k;
  k.scale_ = diagonal_scale(l);
  if (!is_symmetric(l, kSymmetryTolerance * k.scale_))
    throw InvalidArgument("kernel is not symmetric");
  double min_eig = symmetric_min_eigenvalue(l);
  if (min_eig < 0.0) {
    const double eps = config.jitter * k.scale_;
    l.diagonal().array() += eps;
    min_eig = symmetric_min_eigenvalue(l);
    k.jittered_ = true;
    if (min_eig < -config.psd_tolerance * k.scale_)
      throw Error("kernel is not positive semi-definite: min eigenvalue " +
                  format_double(min_eig));
  }
  k.l_ = std::move(l);
  k.min_eigenvalue_ = min_eig;
  return k;
}

double KernelMatrix::dependence_floor(const RerankConfig& config) const {
  const double relative = jittered_ ? std::max(config.dependence_threshold, 10.0 * config.jitter)
                                    : config.dependence_threshold;
  return relative * scale_;
}

KernelMatrix build_kernel(const Vector& r_star, const Matrix& similarity,
                          const RerankConfig& config) {
  if (similarity.rows() != similarity.cols() || similarity.rows() != r_star.size())
    throw InvalidArgument("score and similarity dimensions disagree");
  if (!is_symmetric(similarity, kSymmetryTolerance))
    throw InvalidArgument("similarity matrix is not symmetric");
  // Scalar loop: equal inputs give bit-equal entries wherever they sit, so
  // exact ties stay ties. The lower triangle mirrors the upper.
  const Eigen::Index n = r_star.size();
  Matrix l(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i; j < n; ++j) {
      const double s = i == j ? similarity(i, i) : 0.5 * (similarity(i, j) + similarity(j, i));
      l(i, j) = r_star(i) * s * r_star(j);
      l(j, i) = l(i, j);
    }
  return KernelMatrix::from_matrix(std::move(l), config);
}

std::vector<GreedyStep> greedy_map_steps(const KernelMatrix& kernel,
                                         std::size_t k,
                                         const RerankConfig& config) {
  const Matrix& l = kernel.matrix();
  const std::size_t n = kernel.size();
  if (k > n)
    throw InvalidArgument("k = " + std::to_string(k) + " exceeds n = " +
                          std::to_string(n));
  const double threshold = kernel.dependence_floor(config);

  // Row t of `c` holds the t-th incremental Cholesky coefficient of every
  // candidate; d2[i] is the residual variance of candidate i.
  Matrix c = Matrix::Zero(static_cast<Eigen::Index>(std::max<std::size_t>(k, 1)),
                          static_cast<Eigen::Index>(n));
  Vector d2 = l.diagonal();
  std::vector<char> chosen(n, 0);
  std::vector<char> dependent(n, 0);
  std::vector<GreedyStep> steps;
  steps.reserve(k);

  for (std::size_t t = 0; t < k; ++t) {
    std::size_t best = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (chosen[i] || dependent[i]) continue;
      if (d2[i] < threshold) {
        dependent[i] = 1;
        continue;
      }
      if (best == n || d2[i] > d2[best]) best = i;
    }
    if (best == n) break;
    const double gain = std::log(d2[best]);
    if (config.stop_at_nonpositive_gain && gain <= 0.0) return steps;
    steps.push_back({best, gain});
    chosen[best] = 1;
    if (t + 1 == k) break;

    const double dj = std::sqrt(d2[best]);
    const auto ti = static_cast<Eigen::Index>(t);
    const auto bi = static_cast<Eigen::Index>(best);
    for (std::size_t i = 0; i < n; ++i) {
      if (chosen[i] || dependent[i]) continue;
      const auto ii = static_cast<Eigen::Index>(i);
      const double overlap = ti == 0 ? 0.0 : c.col(bi).head(ti).dot(c.col(ii).head(ti));
      const double e = (l(bi, ii) - overlap) / dj;
      c(ti, ii) = e;
      d2[i] -= e * e;
    }
  }

  if (steps.size() < k && !config.stop_at_nonpositive_gain) {
    // Every remaining candidate is dependent on the selection; append them
    // by residual then index so the list still has k entries.
    std::vector<std::size_t> rest;
    for (std::size_t i = 0; i < n; ++i)
      if (!chosen[i]) rest.push_back(i);
    std::stable_sort(rest.begin(), rest.end(), [&](std::size_t a, std::size_t b) {
      return d2[static_cast<Eigen::Index>(a)] > d2[static_cast<Eigen::Index>(b)];
    });
    for (std::size_t i : rest) {
      if (steps.size() == k) break;
      steps.push_back({i, -std::numeric_limits<double>::infinity()});
    }
  }
  return steps;
}

std::vector<std::size_t> greedy_map(const KernelMatrix& kernel, std::size_t k,
                                    const RerankConfig& config) {
  const auto steps = greedy_map_steps(kernel, k, config);
  std::vector<std::size_t> order;
  order.reserve(steps.size());
  for (const auto& s : steps) order.push_back(s.index);
  return order;
}

namespace {

double log_det_subset(const Matrix& kernel, std::span<const std::size_t> subset,
                      double threshold) {
  if (subset.empty()) return 0.0;
  const auto m = static_cast<Eigen::Index>(subset.size());
  Matrix sub(m, m);
  for (Eigen::Index a = 0; a < m; ++a) {
    const auto ia = subset[static_cast<std::size_t>(a)];
    if (ia >= static_cast<std::size_t>(kernel.rows()))
      throw InvalidArgument("subset index out of range");
    for (Eigen::Index b = 0; b < m; ++b)
      sub(a, b) = kernel(static_cast<Eigen::Index>(ia),
                         static_cast<Eigen::Index>(subset[static_cast<std::size_t>(b)]));
  }
  Eigen::LLT<Matrix> llt(sub);
  if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
  const Matrix lower = llt.matrixL();
  double out = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double pivot = lower(i, i) * lower(i, i);
    if (!(pivot >= threshold)) return -std::numeric_limits<double>::infinity();
    out += std::log(pivot);
  }
  return out;
}

}  // namespace

double log_prob(const Matrix& kernel, std::span<const std::size_t> subset,
                double dependence_threshold) {
  return log_det_subset(kernel, subset, dependence_threshold * diagonal_scale(kernel));
}

double log_prob(const KernelMatrix& kernel, std::span<const std::size_t> subset,
                const RerankConfig& config) {
  return log_det_subset(kernel.matrix(), subset, kernel.dependence_floor(config));
}

void validate_rerank_input(const RerankInput& input, const RerankConfig& config) {
  const auto n = static_cast<Eigen::Index>(input.items.size());
  if (input.scores.size() != n) throw InvalidArgument("one score per item required");
  if (input.similarity.rows() != n || input.similarity.cols() != n)
    throw InvalidArgument("similarity must be n x n");
  if (input.k > input.items.size()) throw InvalidArgument("k exceeds item count");
  if (!input.scores.allFinite()) throw InvalidArgument("scores must be finite");
  if (!input.similarity.allFinite()) throw InvalidArgument("similarity must be finite");
  if (!(input.propensity >= config.f_min - 1e-12 && input.propensity <= config.f_max + 1e-12))
    throw InvalidArgument("propensity " + format_double(input.propensity) +
                          " outside [f_min, f_max]");
  if (!is_symmetric(input.similarity, kSymmetryTolerance))
    throw InvalidArgument("similarity matrix is not symmetric");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(input.similarity(i, i) - 1.0) > 1e-9)
      throw InvalidArgument("similarity diagonal must be 1");
    for (Eigen::Index j = 0; j < n; ++j)
      if (std::abs(input.similarity(i, j)) > 1.0 + 1e-9)
        throw InvalidArgument("similarity entries must lie in [-1, 1]");
  }
}

std::vector<ItemId> rerank(const RerankInput& input, const RerankConfig& config) {
  validate_rerank_input(input, config);
  const Vector r_star = adjusted_scores(input.scores, input.propensity);
  const KernelMatrix kernel = build_kernel(r_star, input.similarity, config);
  std::vector<ItemId> out;
  for (std::size_t i : greedy_map(kernel, input.k, config)) out.push_back(input.items[i]);
  return out;
}

}  // namespace graphex
