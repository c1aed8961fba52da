#pragma once

// Result files. CSV for tables and curves, JSON for the same data in
// structured form, and run_meta.json for every run.

#include <cstddef>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ilms/config.hpp"
#include "ilms/experiment.hpp"
#include "ilms/version.hpp"

namespace ilms {

namespace fs = std::filesystem;

enum class Format { Csv, Json };

using Manifest = std::vector<fs::path>;

/// Run-level context written to run_meta.json.
struct RunMeta {
  Json spec;  // canonical form
  std::uint64_t seed = 0;
  double duration_seconds = 0.0;
  std::optional<std::string> preset;
  Json extra = Json::object();
};

namespace detail {

/// 17 significant digits: decimal text that reparses to the same double.
inline std::string decimal(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

class FileSink {
 public:
  explicit FileSink(fs::path path) : path_(std::move(path)), out_(path_) {
    if (!out_) throw std::runtime_error("cannot open '" + path_.string() + "' for writing");
  }
  ~FileSink() = default;

  std::ofstream& stream() { return out_; }

  fs::path close() {
    out_.close();
    if (!out_) throw std::runtime_error("write failed for '" + path_.string() + "'");
    return path_;
  }

 private:
  fs::path path_;
  std::ofstream out_;
};

inline fs::path write_json(fs::path const& path, Json const& doc) {
  FileSink sink(path);
  sink.stream() << doc.dump(2) << '\n';
  return sink.close();
}

inline Json vector_json(Vector const& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(x);
  return a;
}

}  // namespace detail

inline Json steady_state_json(ExperimentResult const& r) {
  auto const& st = r.steady;
  Json nodes = Json::array();
  for (Eigen::Index j = 0; j < st.msd_per_node.size(); ++j) {
    nodes.push_back(Json{{"node", j + 1},
                         {"msd_mean", st.msd_per_node[j]},
                         {"msd_stderr", st.standard_error_per_node[j]},
                         {"window_start", st.window_start},
                         {"window_end", st.window_end}});
  }
  return Json{{"trials", r.curve.trials},
              {"window_start", st.window_start},
              {"window_end", st.window_end},
              {"bias_norm", r.bias_norm},
              {"mean_final_estimate", detail::vector_json(r.mean_final_estimate)},
              {"nodes", std::move(nodes)}};
}

inline Json modes_json(ModeTable const& t) {
  Json rows = Json::array();
  for (auto const& e : t.entries)
    rows.push_back(Json{{"m", e.m}, {"mu_lambda", e.mu_lambda}, {"n_nodes", e.n_nodes},
                        {"magnitude", e.magnitude}});
  return rows;
}

inline fs::path write_modes_csv(fs::path const& path, ModeTable const& t) {
  detail::FileSink sink(path);
  auto& out = sink.stream();
  out << "m,mu_lambda,n_nodes,magnitude\n";
  for (auto const& e : t.entries)
    out << e.m << ',' << detail::decimal(e.mu_lambda) << ',' << e.n_nodes << ','
        << detail::decimal(e.magnitude) << '\n';
  return sink.close();
}

/// Writes the requested outputs of one experiment into `dir` (created if
/// needed). Does not write run_meta.json.
inline Manifest emit_experiment_files(ExperimentResult const& r, fs::path const& dir,
                                      std::set<Format> const& formats) {
  fs::create_directories(dir);
  Manifest files;
  bool const csv = formats.contains(Format::Csv);
  bool const json = formats.contains(Format::Json);
  auto const& outs = r.spec.outputs;

  if (outs.contains(Output::LearningCurve)) {
    if (csv) {
      detail::FileSink sink(dir / "learning_curve.csv");
      auto& out = sink.stream();
      out << "iteration,node,msd\n";
      for (Eigen::Index t = 0; t < r.curve.msd.rows(); ++t)
        for (Eigen::Index j = 0; j < r.curve.msd.cols(); ++j)
          out << t + 1 << ',' << j + 1 << ',' << detail::decimal(r.curve.msd(t, j)) << '\n';
      files.push_back(sink.close());
    }
    if (json) {
      Json rows = Json::array();
      for (Eigen::Index t = 0; t < r.curve.msd.rows(); ++t)
        rows.push_back(detail::vector_json(r.curve.msd.row(t).transpose()));
      files.push_back(detail::write_json(
          dir / "learning_curve.json",
          Json{{"trials", r.curve.trials}, {"nodes", r.curve.nodes()}, {"msd", std::move(rows)}}));
    }
  }

  if (outs.contains(Output::SteadyState)) {
    if (csv) {
      detail::FileSink sink(dir / "steady_state.csv");
      auto& out = sink.stream();
      out << "node,msd_mean,msd_stderr,window_start,window_end\n";
      auto const& st = r.steady;
      for (Eigen::Index j = 0; j < st.msd_per_node.size(); ++j)
        out << j + 1 << ',' << detail::decimal(st.msd_per_node[j]) << ','
            << detail::decimal(st.standard_error_per_node[j]) << ',' << st.window_start << ','
            << st.window_end << '\n';
      files.push_back(sink.close());
    }
    if (json) files.push_back(detail::write_json(dir / "steady_state.json", steady_state_json(r)));
  }

  if (outs.contains(Output::Modes) && r.modes) {
    if (csv) files.push_back(write_modes_csv(dir / "modes.csv", *r.modes));
    if (json) files.push_back(detail::write_json(dir / "modes.json", modes_json(*r.modes)));
  }

  if (outs.contains(Output::Stability) && r.stability) {
    if (csv) {
      detail::FileSink sink(dir / "stability.csv");
      sink.stream() << "spectral_radius,stable\n"
                    << detail::decimal(r.stability->spectral_radius) << ','
                    << (r.stability->stable ? "true" : "false") << '\n';
      files.push_back(sink.close());
    }
    if (json)
      files.push_back(detail::write_json(dir / "stability.json",
                                         Json{{"spectral_radius", r.stability->spectral_radius},
                                              {"stable", r.stability->stable}}));
  }

  if (outs.contains(Output::MeanRecursion) && r.mean_recursion) {
    auto const& seq = *r.mean_recursion;
    if (csv) {
      detail::FileSink sink(dir / "mean_recursion.csv");
      auto& out = sink.stream();
      out << "iteration,component,mean_error\n";
      for (std::size_t t = 0; t < seq.size(); ++t)
        for (Eigen::Index k = 0; k < seq[t].size(); ++k)
          out << t << ',' << k + 1 << ',' << detail::decimal(seq[t][k]) << '\n';
      files.push_back(sink.close());
    }
    if (json) {
      Json rows = Json::array();
      for (auto const& v : seq) rows.push_back(detail::vector_json(v));
      files.push_back(detail::write_json(dir / "mean_recursion.json", rows));
    }
  }
  return files;
}

inline fs::path write_run_meta(fs::path const& dir, RunMeta const& meta) {
  fs::create_directories(dir);
  Json doc{{"version", kVersion},
           {"seed", meta.seed},
           {"duration_seconds", meta.duration_seconds},
           {"preset", meta.preset ? Json(*meta.preset) : Json(nullptr)},
           {"spec", meta.spec}};
  for (auto const& [k, v] : meta.extra.items()) doc[k] = v;
  return detail::write_json(dir / "run_meta.json", doc);
}

inline Manifest emit_results(ExperimentResult const& r, fs::path const& dir,
                             std::set<Format> const& formats,
                             std::optional<std::string> preset = std::nullopt) {
  Manifest files = emit_experiment_files(r, dir, formats);
  RunMeta meta{to_json(r.spec), r.spec.config.seed(), r.duration_seconds, std::move(preset),
               Json{{"s0", detail::vector_json(r.s0.values())}}};
  files.push_back(write_run_meta(dir, meta));
  return files;
}

/// Per-size outputs go to `dir/n<size>/`; the size table goes to
/// comparison.{csv,json} (terminal node steady state per size).
inline Manifest emit_results(ComparisonResult const& r, fs::path const& dir,
                             std::set<Format> const& formats,
                             std::optional<std::string> preset = std::nullopt) {
  fs::create_directories(dir);
  Manifest files;
  for (auto const& e : r.entries) {
    auto sub = emit_experiment_files(e.result, dir / ("n" + std::to_string(e.n_nodes)), formats);
    files.insert(files.end(), sub.begin(), sub.end());
  }

  auto terminal = [](ComparisonEntry const& e) {
    auto const last = e.result.steady.msd_per_node.size() - 1;
    return std::pair{e.result.steady.msd_per_node[last],
                     e.result.steady.standard_error_per_node[last]};
  };
  if (formats.contains(Format::Csv)) {
    detail::FileSink sink(dir / "comparison.csv");
    auto& out = sink.stream();
    out << "n_nodes,step_size,msd_mean,msd_stderr,window_start,window_end\n";
    for (auto const& e : r.entries) {
      auto const [mean, se] = terminal(e);
      out << e.n_nodes << ',' << detail::decimal(e.step_size) << ',' << detail::decimal(mean)
          << ',' << detail::decimal(se) << ',' << e.result.steady.window_start << ','
          << e.result.steady.window_end << '\n';
    }
    files.push_back(sink.close());
  }
  if (formats.contains(Format::Json)) {
    Json rows = Json::array();
    for (auto const& e : r.entries) {
      auto const [mean, se] = terminal(e);
      rows.push_back(Json{{"n_nodes", e.n_nodes},
                          {"step_size", e.step_size},
                          {"msd_mean", mean},
                          {"msd_stderr", se},
                          {"window_start", e.result.steady.window_start},
                          {"window_end", e.result.steady.window_end},
                          {"bias_norm", e.result.bias_norm}});
    }
    files.push_back(detail::write_json(dir / "comparison.json", rows));
  }

  Json steps = Json::array();
  for (auto const& e : r.entries) steps.push_back(Json{{"n_nodes", e.n_nodes}, {"step_size", e.step_size}});
  Json s0 = r.entries.empty() ? Json(nullptr) : detail::vector_json(r.entries.front().result.s0.values());
  RunMeta meta{to_json(r.spec), r.spec.base.config.seed(), r.duration_seconds, std::move(preset),
               Json{{"s0", s0}, {"steps", steps}}};
  files.push_back(write_run_meta(dir, meta));
  return files;
}

inline Manifest emit_results(ModeSweepResult const& r, fs::path const& dir,
                             std::set<Format> const& formats,
                             std::optional<std::string> preset = std::nullopt) {
  fs::create_directories(dir);
  Manifest files;
  if (formats.contains(Format::Csv)) files.push_back(write_modes_csv(dir / "modes.csv", r.table));
  if (formats.contains(Format::Json))
    files.push_back(detail::write_json(dir / "modes.json", modes_json(r.table)));
  files.push_back(write_run_meta(dir, RunMeta{to_json(r.spec), 0, 0.0, std::move(preset), Json::object()}));
  return files;
}

}  // namespace ilms
