#pragma once

// Monte Carlo orchestration: independent trials, trial-ordered aggregation,
// size comparisons and the built-in figure presets.

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "ilms/analysis.hpp"
#include "ilms/engine.hpp"
#include "ilms/errors.hpp"
#include "ilms/model.hpp"

namespace ilms {

enum class Output { LearningCurve, SteadyState, Modes, Stability, MeanRecursion };

enum class StepRule { FairEq14, FixedStep };

struct ExperimentSpec {
  NetworkConfig config;
  std::optional<UnknownParameter> s0;  // nullopt: random unit vector from the seed
  std::size_t iterations = 1000;
  std::size_t trials = 100;
  double window_fraction = 0.1;
  std::set<Output> outputs{Output::LearningCurve, Output::SteadyState};

  friend bool operator==(ExperimentSpec const&, ExperimentSpec const&) = default;
};

/// Uniform profile of base.config.node(0) replicated to each size. The first
/// size is the step-size reference for FairEq14.
struct ComparisonSpec {
  ExperimentSpec base;
  std::vector<std::size_t> sizes;
  StepRule step_rule = StepRule::FairEq14;

  friend bool operator==(ComparisonSpec const&, ComparisonSpec const&) = default;
};

/// Mode magnitudes over a grid of mu*lambda for several ring sizes.
struct ModeSweepSpec {
  std::vector<double> mu_lambda;
  std::vector<std::size_t> sizes;

  friend bool operator==(ModeSweepSpec const&, ModeSweepSpec const&) = default;
};

using AnySpec = std::variant<ExperimentSpec, ComparisonSpec>;
using PresetSpec = std::variant<ExperimentSpec, ComparisonSpec, ModeSweepSpec>;

inline void validate(ExperimentSpec const& spec) {
  if (spec.iterations < 1) throw ConfigError("iterations: must be >= 1");
  if (spec.trials < 1) throw ConfigError("trials: must be >= 1");
  if (!(spec.window_fraction > 0.0) || spec.window_fraction > 1.0)
    throw ConfigError("window_fraction: must lie in (0, 1]");
  if (spec.s0 && spec.s0->dimension() != spec.config.dimension())
    throw ConfigError("s0: length " + std::to_string(spec.s0->dimension()) +
                      " does not match dimension " + std::to_string(spec.config.dimension()));
}

inline void validate(ComparisonSpec const& spec) {
  validate(spec.base);
  if (spec.sizes.empty()) throw ConfigError("sizes: must list at least one node count");
  for (std::size_t i = 0; i < spec.sizes.size(); ++i)
    if (spec.sizes[i] < 1) throw ConfigError("sizes[" + std::to_string(i) + "]: must be >= 1");
}

inline UnknownParameter resolve_s0(ExperimentSpec const& spec) {
  if (spec.s0) return *spec.s0;
  return random_unit_parameter(spec.config.dimension(), spec.config.seed());
}

/// Divergence inside a Monte Carlo run, tagged with the trial index.
class TrialDivergenceError : public DivergenceError {
 public:
  TrialDivergenceError(std::size_t trial, DivergenceError const& inner)
      : DivergenceError(inner.node(), inner.iteration(),
                        "trial " + std::to_string(trial) + ": " + inner.what() +
                            " (inspect the spectral radius reported by `ilms check`)"),
        trial_(trial) {}

  std::size_t trial() const noexcept { return trial_; }

 private:
  std::size_t trial_;
};

struct ExperimentResult {
  ExperimentSpec spec;
  UnknownParameter s0;
  LearningCurve curve;
  SteadyStateEstimate steady;
  Vector mean_final_estimate;
  double bias_norm = 0.0;  // ||mean final estimate - s0||
  std::optional<ModeTable> modes;
  std::optional<StabilityReport> stability;
  std::optional<std::vector<Vector>> mean_recursion;
  double duration_seconds = 0.0;
};

/// Trials are computed in fixed-size blocks, each block split across up to
/// `parallelism` threads, then folded into the accumulator in trial order.
inline constexpr std::size_t kTrialBlock = 32;

inline LearningCurveAccumulator run_trials(NetworkConfig const& config, UnknownParameter const& s0,
                                           std::size_t iterations, std::size_t trials,
                                           std::size_t parallelism) {
  parallelism = std::max<std::size_t>(1, parallelism);
  LearningCurveAccumulator acc;
  for (std::size_t first = 0; first < trials; first += kTrialBlock) {
    std::size_t const count = std::min(kTrialBlock, trials - first);
    std::vector<TrialRecord> block(count);
    std::vector<std::exception_ptr> errors(count);
    auto work = [&](std::size_t worker, std::size_t workers) {
      for (std::size_t k = worker; k < count; k += workers) {
        try {
          block[k] = run_trial(config, s0, iterations, first + k);
        } catch (...) {
          errors[k] = std::current_exception();
        }
      }
    };
    std::size_t const workers = std::min(parallelism, count);
    if (workers == 1) {
      work(0, 1);
    } else {
      std::vector<std::jthread> pool;
      pool.reserve(workers);
      for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w, workers);
    }
    for (std::size_t k = 0; k < count; ++k) {
      if (!errors[k]) continue;
      try {
        std::rethrow_exception(errors[k]);
      } catch (DivergenceError const& e) {
        throw TrialDivergenceError(first + k, e);
      }
    }
    for (auto const& record : block) acc.add(record);
  }
  return acc;
}

/// Result is a pure function of `spec`; `parallelism` only affects speed.
inline ExperimentResult run_experiment(ExperimentSpec const& spec, std::size_t parallelism = 1) {
  validate(spec);
  auto const started = std::chrono::steady_clock::now();
  UnknownParameter s0 = resolve_s0(spec);

  auto acc = run_trials(spec.config, s0, spec.iterations, spec.trials, parallelism);
  LearningCurve curve = acc.curve();
  SteadyStateEstimate steady = steady_state(curve, spec.window_fraction);
  Vector mean_final = acc.mean_final_estimate();
  double const bias = (mean_final - s0.values()).norm();

  ExperimentResult result{spec,  s0,   std::move(curve), std::move(steady), std::move(mean_final),
                          bias, {}, {},                {},                0.0};

  if (spec.outputs.contains(Output::Modes)) {
    // Uniform-profile modes from node 1's covariance and step.
    auto const& node = spec.config.node(0);
    Eigen::SelfAdjointEigenSolver<Matrix> es(node.regressor_covariance(), Eigen::EigenvaluesOnly);
    std::vector<double> eig(es.eigenvalues().data(),
                            es.eigenvalues().data() + es.eigenvalues().size());
    result.modes = convergence_modes(node.step_size(), eig, spec.config.size());
  }
  if (spec.outputs.contains(Output::Stability)) result.stability = stability_check(spec.config);
  if (spec.outputs.contains(Output::MeanRecursion))
    result.mean_recursion = mean_error_recursion(spec.config, s0.values(), spec.iterations);

  result.duration_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

/// Step size assigned to a ring of `n` nodes under `rule`.
inline double comparison_step(ComparisonSpec const& spec, std::size_t n) {
  double const mu_ref = spec.base.config.node(0).step_size();
  if (spec.step_rule == StepRule::FixedStep || n == spec.sizes.front()) return mu_ref;
  return fair_step_size(mu_ref, spec.sizes.front(), n);
}

/// The experiment run for one entry of `spec.sizes`.
inline ExperimentSpec derived_experiment(ComparisonSpec const& spec, std::size_t n) {
  ExperimentSpec out = spec.base;
  NodeProfile const profile = spec.base.config.node(0).with_step_size(comparison_step(spec, n));
  out.config = NetworkConfig::uniform(profile, n, spec.base.config.link_mode(),
                                      spec.base.config.seed());
  return out;
}

struct ComparisonEntry {
  std::size_t n_nodes = 0;
  double step_size = 0.0;
  ExperimentResult result;
};

struct ComparisonResult {
  ComparisonSpec spec;
  std::vector<ComparisonEntry> entries;
  double duration_seconds = 0.0;
};

inline ComparisonResult run_comparison(ComparisonSpec const& spec, std::size_t parallelism = 1) {
  validate(spec);
  auto const started = std::chrono::steady_clock::now();
  ComparisonResult out{spec, {}, 0.0};
  for (std::size_t n : spec.sizes) {
    ExperimentSpec derived = derived_experiment(spec, n);
    double const step = derived.config.node(0).step_size();
    out.entries.push_back({n, step, run_experiment(derived, parallelism)});
  }
  out.duration_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return out;
}

struct ModeSweepResult {
  ModeSweepSpec spec;
  ModeTable table;  // one row per (size, grid point), m = 1 (C_H = lambda I)
};

inline ModeSweepResult run_mode_sweep(ModeSweepSpec const& spec) {
  ModeSweepResult out{spec, {}};
  double const unit = 1.0;
  for (std::size_t n : spec.sizes)
    for (double x : spec.mu_lambda) {
      auto row = convergence_modes(x, std::span<double const>(&unit, 1), n);
      out.table.entries.push_back(row.entries.front());
    }
  return out;
}

// ---------------------------------------------------------------------------
// Presets

struct PresetDefaults {
  static constexpr Eigen::Index dimension = 4;
  static constexpr double regressor_variance = 1.0;
  static constexpr double measurement_noise_variance = 1e-3;
  static constexpr double reference_step = 0.02;
  static constexpr std::size_t reference_nodes = 10;
  static constexpr std::size_t large_nodes = 40;
  static constexpr std::size_t trials = 200;
  static constexpr std::size_t iterations = 2000;
  static constexpr double link_noise_variance = 1e-4;
  static constexpr std::uint64_t seed = 2718;
};

inline std::vector<std::string> preset_names() {
  return {"fig2_ideal_size", "fig3_modes", "fig4_noisy_size"};
}

/// Size comparison with the preset network; `link_variance` > 0 selects noisy links.
inline ComparisonSpec size_comparison_preset(double link_variance, StepRule rule) {
  using D = PresetDefaults;
  auto const profile = NodeProfile::uniform(D::dimension, D::regressor_variance,
                                            D::measurement_noise_variance, D::reference_step,
                                            link_variance);
  auto const mode = link_variance > 0.0 ? LinkMode::Noisy : LinkMode::Ideal;
  ExperimentSpec base{NetworkConfig::uniform(profile, D::reference_nodes, mode, D::seed),
                      std::nullopt,
                      D::iterations,
                      D::trials,
                      0.1,
                      {Output::LearningCurve, Output::SteadyState}};
  return ComparisonSpec{std::move(base), {D::reference_nodes, D::large_nodes}, rule};
}

inline PresetSpec preset(std::string const& name) {
  using D = PresetDefaults;
  if (name == "fig2_ideal_size") return size_comparison_preset(0.0, StepRule::FairEq14);
  if (name == "fig4_noisy_size")
    return size_comparison_preset(D::link_noise_variance, StepRule::FairEq14);
  if (name == "fig3_modes") {
    ModeSweepSpec sweep;
    for (int i = 0; i <= 200; ++i) sweep.mu_lambda.push_back(i / 100.0);
    sweep.sizes = {D::reference_nodes, D::large_nodes};
    return sweep;
  }
  std::string known;
  for (auto const& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
  throw ConfigError("unknown preset '" + name + "' (available: " + known + ")");
}

}  // namespace ilms
