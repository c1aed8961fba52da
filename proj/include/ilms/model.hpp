#pragma once

// Domain types of a ring network and the synthetic data generators that feed
// it: every node j observes x_j(t) = h_j(t) s0 + n_j(t) with a zero-mean
// Gaussian regressor h_j(t) of covariance C_{H,j} and white Gaussian noise.

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ilms/errors.hpp"
#include "ilms/random.hpp"

namespace ilms {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

namespace detail {

inline bool all_finite(Matrix const& m) { return m.allFinite(); }

inline bool is_symmetric(Matrix const& m) {
  if (m.rows() != m.cols()) return false;
  double const scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale;
}

inline double smallest_eigenvalue(Matrix const& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

/// Factor F with F F^T = cov. Cholesky when possible, otherwise the
/// eigen-square-root with negative rounding noise clipped. Zero maps to zero.
inline Matrix covariance_factor(Matrix const& cov) {
  if (cov.isZero(0.0)) return Matrix::Zero(cov.rows(), cov.cols());
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
  Vector root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal();
}

}  // namespace detail

/// Ground-truth vector every node estimates.
class UnknownParameter {
 public:
  explicit UnknownParameter(Vector values) : values_(std::move(values)) {
    if (values_.size() == 0) throw ConfigError("s0: dimension must be positive");
    if (!values_.allFinite()) throw ConfigError("s0: all entries must be finite");
  }

  Vector const& values() const noexcept { return values_; }
  Eigen::Index dimension() const noexcept { return values_.size(); }

  friend bool operator==(UnknownParameter const& a, UnknownParameter const& b) {
    return a.values_ == b.values_;
  }

 private:
  Vector values_;
};

/// Unit-norm parameter drawn from the Parameter stream of `seed`.
inline UnknownParameter random_unit_parameter(Eigen::Index dimension, std::uint64_t seed) {
  RandomState rng(seed, 0, 0, Stream::Parameter);
  Vector v(dimension);
  for (Eigen::Index i = 0; i < dimension; ++i) v[i] = rng.normal();
  return UnknownParameter(v / v.norm());
}

class NodeProfile {
 public:
  /// Validates C_H symmetric positive definite, sigma^2 >= 0, mu > 0 and
  /// R_Q symmetric positive semidefinite.
  NodeProfile(Matrix regressor_covariance, double measurement_noise_variance, double step_size,
              Matrix link_noise_covariance)
      : NodeProfile(std::move(regressor_covariance), measurement_noise_variance, step_size,
                    std::move(link_noise_covariance), /*strict=*/true) {}

  /// Ideal-link profile (R_Q = 0).
  NodeProfile(Matrix regressor_covariance, double measurement_noise_variance, double step_size)
      : NodeProfile(regressor_covariance, measurement_noise_variance, step_size,
                    Matrix::Zero(regressor_covariance.rows(), regressor_covariance.cols())) {}

  /// Relaxed constructor for degenerate test cases: C_H may be singular
  /// (e.g. 0*I) and the step may be zero.
  static NodeProfile degenerate(Matrix regressor_covariance, double measurement_noise_variance,
                                double step_size, Matrix link_noise_covariance) {
    return NodeProfile(std::move(regressor_covariance), measurement_noise_variance, step_size,
                       std::move(link_noise_covariance), /*strict=*/false);
  }

  /// C_H = lambda I, R_Q = link_variance I.
  static NodeProfile uniform(Eigen::Index dimension, double lambda, double measurement_noise_variance,
                             double step_size, double link_variance = 0.0) {
    return NodeProfile(lambda * Matrix::Identity(dimension, dimension), measurement_noise_variance,
                       step_size, link_variance * Matrix::Identity(dimension, dimension));
  }

  Eigen::Index dimension() const noexcept { return regressor_covariance_.rows(); }
  Matrix const& regressor_covariance() const noexcept { return regressor_covariance_; }
  double measurement_noise_variance() const noexcept { return measurement_noise_variance_; }
  double step_size() const noexcept { return step_size_; }
  Matrix const& link_noise_covariance() const noexcept { return link_noise_covariance_; }

  Matrix const& regressor_factor() const noexcept { return regressor_factor_; }
  Matrix const& link_noise_factor() const noexcept { return link_noise_factor_; }
  bool link_noise_is_zero() const noexcept { return link_noise_zero_; }
  bool regressor_is_zero() const noexcept { return regressor_zero_; }

  NodeProfile with_step_size(double step) const {
    return NodeProfile(regressor_covariance_, measurement_noise_variance_, step,
                       link_noise_covariance_, strict_);
  }

  NodeProfile with_link_noise_covariance(Matrix cov) const {
    return NodeProfile(regressor_covariance_, measurement_noise_variance_, step_size_,
                       std::move(cov), strict_);
  }

  friend bool operator==(NodeProfile const& a, NodeProfile const& b) {
    return a.regressor_covariance_ == b.regressor_covariance_ &&
           a.measurement_noise_variance_ == b.measurement_noise_variance_ &&
           a.step_size_ == b.step_size_ && a.link_noise_covariance_ == b.link_noise_covariance_;
  }

 private:
  NodeProfile(Matrix regressor_covariance, double measurement_noise_variance, double step_size,
              Matrix link_noise_covariance, bool strict)
      : regressor_covariance_(std::move(regressor_covariance)),
        measurement_noise_variance_(measurement_noise_variance),
        step_size_(step_size),
        link_noise_covariance_(std::move(link_noise_covariance)),
        strict_(strict) {
    validate();
    regressor_factor_ = detail::covariance_factor(regressor_covariance_);
    link_noise_factor_ = detail::covariance_factor(link_noise_covariance_);
    regressor_zero_ = regressor_covariance_.isZero(0.0);
    link_noise_zero_ = link_noise_covariance_.isZero(0.0);
  }

  void validate() const {
    auto const& c = regressor_covariance_;
    if (c.rows() == 0) throw ConfigError("regressor_covariance: dimension must be positive");
    if (!detail::all_finite(c) || !detail::is_symmetric(c))
      throw ConfigError("regressor_covariance: must be a finite symmetric matrix");
    double const c_min = detail::smallest_eigenvalue(c);
    if (strict_ && !(c_min > 0.0))
      throw ConfigError("regressor_covariance: must be positive definite (smallest eigenvalue " +
                        std::to_string(c_min) + ")");
    if (!strict_ && c_min < -1e-12 * std::max(1.0, c.cwiseAbs().maxCoeff()))
      throw ConfigError("regressor_covariance: must be positive semidefinite");

    if (!std::isfinite(measurement_noise_variance_) || measurement_noise_variance_ < 0.0)
      throw ConfigError("measurement_noise_variance: must be finite and >= 0");

    if (!std::isfinite(step_size_) || (strict_ ? !(step_size_ > 0.0) : step_size_ < 0.0))
      throw ConfigError("step_size: must be finite and > 0");

    auto const& q = link_noise_covariance_;
    if (q.rows() != c.rows() || q.cols() != c.cols())
      throw ConfigError("link_noise_covariance: must match the regressor dimension");
    if (!detail::all_finite(q) || !detail::is_symmetric(q))
      throw ConfigError("link_noise_covariance: must be a finite symmetric matrix");
    if (detail::smallest_eigenvalue(q) < -1e-12 * std::max(1.0, q.cwiseAbs().maxCoeff()))
      throw ConfigError("link_noise_covariance: must be positive semidefinite");
  }

  Matrix regressor_covariance_;
  double measurement_noise_variance_;
  double step_size_;
  Matrix link_noise_covariance_;
  bool strict_;
  Matrix regressor_factor_;
  Matrix link_noise_factor_;
  bool regressor_zero_ = false;
  bool link_noise_zero_ = false;
};

enum class LinkMode { Ideal, Noisy };

inline char const* to_string(LinkMode mode) { return mode == LinkMode::Ideal ? "ideal" : "noisy"; }

/// Ordered ring: node j receives from node j-1, node 1 from node N.
class NetworkConfig {
 public:
  NetworkConfig(Eigen::Index dimension, std::vector<NodeProfile> nodes, LinkMode link_mode,
                std::uint64_t seed)
      : dimension_(dimension), nodes_(std::move(nodes)), link_mode_(link_mode), seed_(seed) {
    if (dimension_ < 1) throw ConfigError("dimension: must be a positive integer");
    if (nodes_.empty()) throw ConfigError("nodes: ring needs at least one node");
    for (std::size_t j = 0; j < nodes_.size(); ++j) {
      if (nodes_[j].dimension() != dimension_)
        throw ConfigError("node " + std::to_string(j + 1) + ": covariance dimension " +
                          std::to_string(nodes_[j].dimension()) + " does not match dimension " +
                          std::to_string(dimension_));
    }
  }

  /// N copies of `profile`.
  static NetworkConfig uniform(NodeProfile const& profile, std::size_t n_nodes, LinkMode link_mode,
                               std::uint64_t seed) {
    return NetworkConfig(profile.dimension(), std::vector<NodeProfile>(n_nodes, profile), link_mode,
                         seed);
  }

  Eigen::Index dimension() const noexcept { return dimension_; }
  std::size_t size() const noexcept { return nodes_.size(); }
  std::vector<NodeProfile> const& nodes() const noexcept { return nodes_; }
  NodeProfile const& node(std::size_t j) const { return nodes_.at(j); }
  LinkMode link_mode() const noexcept { return link_mode_; }
  std::uint64_t seed() const noexcept { return seed_; }

  NetworkConfig with_seed(std::uint64_t seed) const {
    return NetworkConfig(dimension_, nodes_, link_mode_, seed);
  }
  NetworkConfig with_link_mode(LinkMode mode) const {
    return NetworkConfig(dimension_, nodes_, mode, seed_);
  }

  friend bool operator==(NetworkConfig const& a, NetworkConfig const& b) {
    return a.dimension_ == b.dimension_ && a.nodes_ == b.nodes_ && a.link_mode_ == b.link_mode_ &&
           a.seed_ == b.seed_;
  }

 private:
  Eigen::Index dimension_;
  std::vector<NodeProfile> nodes_;
  LinkMode link_mode_;
  std::uint64_t seed_;
};

struct Measurement {
  Vector regressor;  // h_j(t), stored as a column
  double observation = 0.0;
};

/// Writes h = F z with z i.i.d. standard normal; consumes M draws.
inline void sample_regressor_into(NodeProfile const& profile, RandomState& rng, Vector& out) {
  auto const m = profile.dimension();
  out.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) out[i] = rng.normal();
  if (profile.regressor_is_zero()) {
    out.setZero();
    return;
  }
  out = (profile.regressor_factor() * out).eval();
}

inline Vector sample_regressor(NodeProfile const& profile, RandomState& rng) {
  Vector h;
  sample_regressor_into(profile, rng, h);
  return h;
}

inline Measurement sample_measurement(Vector regressor, UnknownParameter const& s0,
                                      NodeProfile const& profile, RandomState& rng) {
  if (regressor.size() != s0.dimension())
    throw ShapeError("sample_measurement: regressor length does not match s0");
  double const noise = std::sqrt(profile.measurement_noise_variance()) * rng.normal();
  double const clean = regressor.dot(s0.values());
  return Measurement{std::move(regressor), clean + noise};
}

/// q = F_Q z; the exact zero vector when R_Q = 0 (draws are still consumed).
inline void sample_link_noise_into(NodeProfile const& profile, RandomState& rng, Vector& out) {
  auto const m = profile.dimension();
  out.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) out[i] = rng.normal();
  if (profile.link_noise_is_zero()) {
    out.setZero();
    return;
  }
  out = (profile.link_noise_factor() * out).eval();
}

inline Vector sample_link_noise(NodeProfile const& profile, RandomState& rng) {
  Vector q;
  sample_link_noise_into(profile, rng, q);
  return q;
}

}  // namespace ilms
