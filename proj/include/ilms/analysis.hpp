#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ilms/engine.hpp"
#include "ilms/errors.hpp"
#include "ilms/model.hpp"

namespace ilms {

// ---------------------------------------------------------------------------
// Wiener solution

/// Solves cov_H s = cross_cov by Cholesky. Throws ConditioningError when
/// cov_H is not symmetric positive definite.
inline Vector wiener_solution(Matrix const& cov_h, Vector const& cross_cov) {
  if (cov_h.rows() != cov_h.cols() || cov_h.rows() != cross_cov.size())
    throw ShapeError("wiener_solution: cov_H must be square and match cross_cov");
  Eigen::LLT<Matrix> llt(cov_h);
  if (llt.info() != Eigen::Success || !detail::is_symmetric(cov_h)) {
    double const lmin = detail::smallest_eigenvalue(cov_h);
    throw ConditioningError(lmin, "wiener_solution: covariance is not positive definite "
                                  "(smallest eigenvalue " + std::to_string(lmin) + ")");
  }
  return llt.solve(cross_cov);
}

/// Network moments C_H = sum_j C_{H,j} and C_xH = sum_j C_{H,j} s0 implied by
/// the data model (measurement noise is zero mean and independent of h).
struct NormalEquations {
  Matrix cov_h;
  Vector cross_cov;
};

inline NormalEquations analytic_moments(NetworkConfig const& config, UnknownParameter const& s0) {
  auto const m = config.dimension();
  NormalEquations eq{Matrix::Zero(m, m), Vector::Zero(m)};
  for (auto const& node : config.nodes()) eq.cov_h += node.regressor_covariance();
  eq.cross_cov = eq.cov_h * s0.values();
  return eq;
}

// ---------------------------------------------------------------------------
// Learning curves and steady state

/// Trial-averaged squared deviation, rows = measurement times, cols = nodes.
struct LearningCurve {
  Matrix msd;
  std::size_t trials = 0;

  std::size_t iterations() const noexcept { return static_cast<std::size_t>(msd.rows()); }
  std::size_t nodes() const noexcept { return static_cast<std::size_t>(msd.cols()); }
};

/// Adds records in call order, so the mean is reproducible whenever records
/// are added in the same order.
class LearningCurveAccumulator {
 public:
  void add(TrialRecord const& record) {
    if (count_ == 0) {
      sum_ = record.per_node_error_sq;
      estimate_sum_ = record.final_estimate;
    } else {
      if (record.per_node_error_sq.rows() != sum_.rows() ||
          record.per_node_error_sq.cols() != sum_.cols() ||
          record.final_estimate.size() != estimate_sum_.size())
        throw ShapeError("learning curve: trial records differ in shape");
      sum_ += record.per_node_error_sq;
      estimate_sum_ += record.final_estimate;
    }
    ++count_;
  }

  std::size_t count() const noexcept { return count_; }

  LearningCurve curve() const {
    if (count_ == 0) throw ShapeError("learning curve: no trial records");
    return LearningCurve{sum_ / static_cast<double>(count_), count_};
  }

  /// Trial average of the estimate leaving node N at the final time.
  Vector mean_final_estimate() const {
    if (count_ == 0) throw ShapeError("learning curve: no trial records");
    return estimate_sum_ / static_cast<double>(count_);
  }

 private:
  Matrix sum_;
  Vector estimate_sum_;
  std::size_t count_ = 0;
};

inline LearningCurve empirical_learning_curve(std::span<TrialRecord const> records) {
  LearningCurveAccumulator acc;
  for (auto const& r : records) acc.add(r);
  return acc.curve();
}

struct SteadyStateEstimate {
  Vector msd_per_node;
  Vector standard_error_per_node;
  std::size_t window_start = 0;  // 1-based, inclusive
  std::size_t window_end = 0;    // = final iteration
};

/// Number of batches used for the batch-means standard error.
inline constexpr std::size_t kSteadyStateBatches = 10;

/// Mean of the trailing ceil(fraction * iterations) measurement times per
/// node. The standard error comes from non-overlapping batch means over the
/// window, which tolerates the correlation between neighbouring times.
inline SteadyStateEstimate steady_state(LearningCurve const& curve, double window_fraction = 0.1) {
  if (curve.iterations() == 0 || curve.nodes() == 0)
    throw ShapeError("steady_state: empty learning curve");
  if (!(window_fraction > 0.0) || window_fraction > 1.0)
    throw ConfigError("window_fraction: must lie in (0, 1]");

  std::size_t const total = curve.iterations();
  auto width = static_cast<std::size_t>(std::ceil(window_fraction * static_cast<double>(total)));
  width = std::clamp<std::size_t>(width, 1, total);
  std::size_t const first = total - width;  // 0-based row

  auto const n = curve.msd.cols();
  SteadyStateEstimate est{Vector::Zero(n), Vector::Zero(n), first + 1, total};
  std::size_t const batches = std::min(kSteadyStateBatches, width);

  for (Eigen::Index j = 0; j < n; ++j) {
    auto const window = curve.msd.col(j).segment(static_cast<Eigen::Index>(first),
                                                 static_cast<Eigen::Index>(width));
    est.msd_per_node[j] = window.mean();
    if (batches < 2) continue;
    Vector means(static_cast<Eigen::Index>(batches));
    for (std::size_t b = 0; b < batches; ++b) {
      auto const lo = static_cast<Eigen::Index>(b * width / batches);
      auto const hi = static_cast<Eigen::Index>((b + 1) * width / batches);
      means[static_cast<Eigen::Index>(b)] = window.segment(lo, hi - lo).mean();
    }
    double const centre = means.mean();
    double const var = (means.array() - centre).square().sum() / static_cast<double>(batches - 1);
    est.standard_error_per_node[j] = std::sqrt(var / static_cast<double>(batches));
  }
  return est;
}

// ---------------------------------------------------------------------------
// Step sizes, mean recursion, modes

/// Step for a network of n_target nodes with the same total adaptation per
/// measurement time as mu_ref on n_ref nodes (mu_1 N_1 = mu_2 N_2).
inline double fair_step_size(double mu_ref, std::size_t n_ref, std::size_t n_target) {
  if (!(mu_ref > 0.0) || n_ref == 0 || n_target == 0)
    throw ConfigError("fair_step_size: arguments must be positive");
  return mu_ref * static_cast<double>(n_ref) / static_cast<double>(n_target);
}

/// T = (I - mu_N C_N) ... (I - mu_1 C_1): node 1's factor acts first.
inline Matrix cycle_transition_matrix(NetworkConfig const& config) {
  auto const m = config.dimension();
  Matrix t = Matrix::Identity(m, m);
  for (auto const& node : config.nodes()) {
    Matrix const factor = Matrix::Identity(m, m) - node.step_size() * node.regressor_covariance();
    t = (factor * t).eval();
  }
  return t;
}

/// Mean weight error per measurement time: element t holds v(t) = T v(t-1),
/// element 0 is v(0). Growth is not an error here.
inline std::vector<Vector> mean_error_recursion(NetworkConfig const& config,
                                                Vector const& initial_mean_error,
                                                std::size_t iterations) {
  if (initial_mean_error.size() != config.dimension())
    throw ShapeError("mean_error_recursion: initial error length does not match dimension");
  Matrix const t = cycle_transition_matrix(config);
  std::vector<Vector> out;
  out.reserve(iterations + 1);
  out.push_back(initial_mean_error);
  for (std::size_t i = 0; i < iterations; ++i) out.push_back(t * out.back());
  return out;
}

struct ModeEntry {
  std::size_t m = 0;  // 1-based eigenvalue index
  double mu_lambda = 0.0;
  std::size_t n_nodes = 0;
  double magnitude = 0.0;  // |1 - mu lambda|^N
};

struct ModeTable {
  std::vector<ModeEntry> entries;
};

/// Per-measurement-time contraction of each mean-error mode for a uniform
/// profile with eigenvalues `eigenvalues`.
inline ModeTable convergence_modes(double mu, std::span<double const> eigenvalues,
                                   std::size_t n_nodes) {
  if (n_nodes == 0) throw ConfigError("convergence_modes: n_nodes must be positive");
  ModeTable table;
  table.entries.reserve(eigenvalues.size());
  for (std::size_t m = 0; m < eigenvalues.size(); ++m) {
    double const x = mu * eigenvalues[m];
    table.entries.push_back(
        {m + 1, x, n_nodes, std::pow(std::abs(1.0 - x), static_cast<double>(n_nodes))});
  }
  return table;
}

struct StabilityReport {
  double spectral_radius = 0.0;
  bool stable = false;
};

/// Spectral radius of the cycle transition matrix; stable iff < 1.
inline StabilityReport stability_check(NetworkConfig const& config) {
  Matrix const t = cycle_transition_matrix(config);
  Eigen::EigenSolver<Matrix> es(t, /*computeEigenvectors=*/false);
  double const radius = es.eigenvalues().cwiseAbs().maxCoeff();
  return {radius, radius < 1.0};
}

}  // namespace ilms
