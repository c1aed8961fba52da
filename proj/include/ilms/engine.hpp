#pragma once

// Incremental LMS around a ring. One measurement time visits nodes 1..N in
// order; each node receives the running estimate from its predecessor,
// applies one LMS correction with its own fresh data and forwards it.

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ilms/errors.hpp"
#include "ilms/model.hpp"
#include "ilms/random.hpp"

namespace ilms {

/// The estimate as it travels around the ring.
struct CycleState {
  Vector estimate;
};

/// ||s0 - s_j(t)||^2 for every measurement time (rows) and node (columns),
/// plus the estimate leaving node N after the last measurement time.
struct TrialRecord {
  Matrix per_node_error_sq;
  Vector final_estimate;

  std::size_t iterations() const noexcept { return static_cast<std::size_t>(per_node_error_sq.rows()); }
  std::size_t nodes() const noexcept { return static_cast<std::size_t>(per_node_error_sq.cols()); }
};

/// Location reported by a divergence error; 1-based, zero when unknown.
struct UpdateSite {
  std::size_t node = 0;
  std::size_t iteration = 0;
};

namespace detail {

inline void check_finite(Vector const& state, UpdateSite site) {
  if (state.allFinite()) return;
  throw DivergenceError(site.node, site.iteration,
                        "divergence at node " + std::to_string(site.node) + ", iteration " +
                            std::to_string(site.iteration) + ": estimate is no longer finite");
}

/// state <- state + step * h * (x - h^T state)
inline void lms_update(Vector& state, Vector const& regressor, double observation, double step,
                       UpdateSite site) {
  double const error = observation - regressor.dot(state);
  state.noalias() += (step * error) * regressor;
  check_finite(state, site);
}

inline void check_update_shapes(Vector const& incoming, Measurement const& meas) {
  if (incoming.size() != meas.regressor.size())
    throw ShapeError("node update: estimate and regressor lengths differ");
}

}  // namespace detail

/// Ideal-link node update.
inline CycleState node_update_ideal(CycleState incoming, Measurement const& meas, double step,
                                    UpdateSite site = {}) {
  detail::check_update_shapes(incoming.estimate, meas);
  detail::lms_update(incoming.estimate, meas.regressor, meas.observation, step, site);
  return incoming;
}

/// Noisy-link node update: the ideal update applied to the received estimate
/// incoming + q. Expanding gives s + mu h e + (q - mu h h^T q) with e taken
/// against the unperturbed estimate.
inline CycleState node_update_noisy(CycleState incoming, Vector const& link_noise,
                                    Measurement const& meas, double step, UpdateSite site = {}) {
  if (link_noise.size() != incoming.estimate.size())
    throw ShapeError("node update: link noise length differs from the estimate");
  incoming.estimate += link_noise;
  return node_update_ideal(std::move(incoming), meas, step, site);
}

/// RandomState substreams of one trial: one per (node, stream) pair.
class TrialStreams {
 public:
  TrialStreams(std::uint64_t seed, std::uint64_t trial_index, std::size_t n_nodes) {
    streams_.reserve(n_nodes);
    for (std::size_t j = 0; j < n_nodes; ++j) {
      streams_.push_back(NodeStreams{RandomState(seed, trial_index, j, Stream::Regressor),
                                     RandomState(seed, trial_index, j, Stream::MeasurementNoise),
                                     RandomState(seed, trial_index, j, Stream::LinkNoise)});
    }
  }

  RandomState& regressor(std::size_t j) { return streams_[j].regressor; }
  RandomState& measurement_noise(std::size_t j) { return streams_[j].measurement_noise; }
  RandomState& link_noise(std::size_t j) { return streams_[j].link_noise; }
  std::size_t size() const noexcept { return streams_.size(); }

 private:
  struct NodeStreams {
    RandomState regressor;
    RandomState measurement_noise;
    RandomState link_noise;
  };
  std::vector<NodeStreams> streams_;
};

namespace detail {

struct CycleScratch {
  Vector regressor;
  Vector link_noise;
};

/// One measurement time in place. `row` receives N error-square values.
/// Link noise is drawn for every hop in both modes so the two modes consume
/// identical randomness.
inline void advance_cycle(Vector& state, NetworkConfig const& config, UnknownParameter const& s0,
                          TrialStreams& streams, std::size_t iteration, CycleScratch& scratch,
                          double* row) {
  bool const noisy = config.link_mode() == LinkMode::Noisy;
  for (std::size_t j = 0; j < config.size(); ++j) {
    NodeProfile const& profile = config.node(j);
    sample_link_noise_into(profile, streams.link_noise(j), scratch.link_noise);
    sample_regressor_into(profile, streams.regressor(j), scratch.regressor);
    double const noise =
        std::sqrt(profile.measurement_noise_variance()) * streams.measurement_noise(j).normal();
    double const observation = scratch.regressor.dot(s0.values()) + noise;

    if (noisy) state += scratch.link_noise;
    lms_update(state, scratch.regressor, observation, profile.step_size(), {j + 1, iteration});
    row[j] = (s0.values() - state).squaredNorm();
  }
}

}  // namespace detail

struct CycleResult {
  CycleState state;
  std::vector<double> error_sq;  // per node, ring order
};

/// Runs measurement time `iteration` (1-based) through all nodes.
inline CycleResult run_cycle(CycleState state, NetworkConfig const& config,
                             UnknownParameter const& s0, TrialStreams& streams,
                             std::size_t iteration) {
  if (state.estimate.size() != config.dimension() || s0.dimension() != config.dimension())
    throw ShapeError("run_cycle: estimate, s0 and config dimensions differ");
  if (streams.size() != config.size()) throw ShapeError("run_cycle: one stream set per node required");
  detail::check_finite(state.estimate, {0, iteration});
  CycleResult out{std::move(state), std::vector<double>(config.size())};
  detail::CycleScratch scratch;
  detail::advance_cycle(out.state.estimate, config, s0, streams, iteration, scratch,
                        out.error_sq.data());
  return out;
}

/// A full trial from the zero estimate. Pure function of its arguments.
inline TrialRecord run_trial(NetworkConfig const& config, UnknownParameter const& s0,
                             std::size_t iterations, std::uint64_t trial_index) {
  if (iterations < 1) throw ConfigError("iterations: must be >= 1");
  if (s0.dimension() != config.dimension())
    throw ShapeError("run_trial: s0 dimension does not match config");

  TrialStreams streams(config.seed(), trial_index, config.size());
  // Row-major so each measurement time writes a contiguous row.
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> history(
      static_cast<Eigen::Index>(iterations), static_cast<Eigen::Index>(config.size()));
  Vector state = Vector::Zero(config.dimension());
  detail::CycleScratch scratch;
  for (std::size_t t = 0; t < iterations; ++t) {
    detail::advance_cycle(state, config, s0, streams, t + 1, scratch,
                          history.row(static_cast<Eigen::Index>(t)).data());
  }
  return TrialRecord{Matrix(history), std::move(state)};
}

}  // namespace ilms
