// ilms: run incremental LMS ring experiments from config files or presets.

#include <cstdint>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ilms/ilms.hpp"

namespace {

std::set<ilms::Format> parse_formats(std::string const& list) {
  std::set<ilms::Format> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item == "csv") out.insert(ilms::Format::Csv);
    else if (item == "json") out.insert(ilms::Format::Json);
    else if (!item.empty()) throw ilms::ConfigError("--format: unknown format '" + item + "'");
  }
  return out;
}

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::optional<std::size_t> iterations;

  void apply(ilms::ExperimentSpec& spec) const {
    if (seed) spec.config = spec.config.with_seed(*seed);
    if (trials) spec.trials = *trials;
    if (iterations) spec.iterations = *iterations;
    ilms::validate(spec);
  }
};

void print_manifest(ilms::Manifest const& files) {
  for (auto const& f : files) std::cout << f.string() << '\n';
}

void print_steady(ilms::ExperimentResult const& r, std::string const& label) {
  auto const last = r.steady.msd_per_node.size() - 1;
  std::cerr << label << "terminal-node steady-state MSD " << r.steady.msd_per_node[last]
            << " (stderr " << r.steady.standard_error_per_node[last] << ", window "
            << r.steady.window_start << ".." << r.steady.window_end << ")\n";
}

template <class Result>
void report(Result const& r);

template <>
void report(ilms::ExperimentResult const& r) {
  print_steady(r, "");
}

template <>
void report(ilms::ComparisonResult const& r) {
  for (auto const& e : r.entries)
    print_steady(e.result, "N=" + std::to_string(e.n_nodes) + " mu=" + std::to_string(e.step_size) + ": ");
}

int run_spec(ilms::AnySpec spec, Overrides const& ov, std::size_t parallelism,
             std::string const& out, std::set<ilms::Format> const& formats,
             std::optional<std::string> preset) {
  if (auto* e = std::get_if<ilms::ExperimentSpec>(&spec)) {
    ov.apply(*e);
    auto r = ilms::run_experiment(*e, parallelism);
    report(r);
    print_manifest(ilms::emit_results(r, out, formats, preset));
  } else {
    auto& c = std::get<ilms::ComparisonSpec>(spec);
    ov.apply(c.base);
    auto r = ilms::run_comparison(c, parallelism);
    report(r);
    print_manifest(ilms::emit_results(r, out, formats, preset));
  }
  return 0;
}

std::vector<double> parse_reals(std::string const& list, char const* flag) {
  std::vector<double> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (std::exception const&) {
      throw ilms::ConfigError(std::string(flag) + ": '" + item + "' is not a number");
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Incremental LMS adaptive network simulator"};
  app.set_version_flag("--version", std::string(ilms::kVersion));
  app.require_subcommand(1);

  Overrides ov;
  std::string config_path;
  std::string out_dir;
  std::string format_list = "csv,json";
  std::size_t parallelism = 1;

  auto* run = app.add_subcommand("run", "Run an experiment or size comparison from a config file");
  run->add_option("--config", config_path, "Config document (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", ov.seed, "Override the RNG seed");
  run->add_option("--trials", ov.trials, "Override the trial count")->check(CLI::PositiveNumber);
  run->add_option("--iterations", ov.iterations, "Override the iteration count")->check(CLI::PositiveNumber);
  run->add_option("--parallelism", parallelism, "Worker threads")->check(CLI::PositiveNumber);
  run->add_option("--out", out_dir, "Output directory")->required();
  run->add_option("--format", format_list, "Comma-separated subset of csv,json");

  std::string preset_name;
  auto* pre = app.add_subcommand("preset", "Run a built-in figure preset");
  pre->add_option("name", preset_name, "fig2_ideal_size | fig3_modes | fig4_noisy_size")->required();
  pre->add_option("--out", out_dir, "Output directory")->required();
  pre->add_option("--seed", ov.seed, "Override the RNG seed");
  pre->add_option("--trials", ov.trials, "Override the trial count")->check(CLI::PositiveNumber);
  pre->add_option("--iterations", ov.iterations, "Override the iteration count")->check(CLI::PositiveNumber);
  pre->add_option("--parallelism", parallelism, "Worker threads")->check(CLI::PositiveNumber);
  pre->add_option("--format", format_list, "Comma-separated subset of csv,json");

  std::string mu_text;
  std::string lambda_text;
  std::string nodes_text;
  auto* modes = app.add_subcommand("modes", "Print mean-convergence mode magnitudes as CSV");
  modes->add_option("--mu", mu_text, "Step size")->required();
  modes->add_option("--lambda", lambda_text, "Comma-separated eigenvalues")->required();
  modes->add_option("--nodes", nodes_text, "Comma-separated ring sizes")->required();

  auto* check = app.add_subcommand("check", "Validate a config and report stability");
  check->add_option("--config", config_path, "Config document (JSON)")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      return run_spec(ilms::load_spec(config_path), ov, parallelism, out_dir,
                      parse_formats(format_list), std::nullopt);
    }
    if (*pre) {
      auto spec = ilms::preset(preset_name);
      auto const formats = parse_formats(format_list);
      if (auto* sweep = std::get_if<ilms::ModeSweepSpec>(&spec)) {
        print_manifest(ilms::emit_results(ilms::run_mode_sweep(*sweep), out_dir, formats, preset_name));
        return 0;
      }
      ilms::AnySpec any = std::holds_alternative<ilms::ExperimentSpec>(spec)
                              ? ilms::AnySpec(std::get<ilms::ExperimentSpec>(spec))
                              : ilms::AnySpec(std::get<ilms::ComparisonSpec>(spec));
      return run_spec(std::move(any), ov, parallelism, out_dir, formats, preset_name);
    }
    if (*modes) {
      auto const mu = parse_reals(mu_text, "--mu");
      if (mu.size() != 1) throw ilms::ConfigError("--mu: expected a single step size");
      auto const lambdas = parse_reals(lambda_text, "--lambda");
      std::cout << "m,mu_lambda,n_nodes,magnitude\n";
      for (double n : parse_reals(nodes_text, "--nodes")) {
        if (!(n >= 1) || n != static_cast<double>(static_cast<std::size_t>(n)))
          throw ilms::ConfigError("--nodes: ring sizes must be positive integers");
        auto const table = ilms::convergence_modes(mu.front(), lambdas, static_cast<std::size_t>(n));
        for (auto const& e : table.entries)
          std::cout << e.m << ',' << ilms::detail::decimal(e.mu_lambda) << ',' << e.n_nodes << ','
                    << ilms::detail::decimal(e.magnitude) << '\n';
      }
      return 0;
    }
    if (*check) {
      auto spec = ilms::load_spec(config_path);
      std::cout << ilms::to_json(spec).dump(2) << '\n';
      auto report_config = [](ilms::NetworkConfig const& cfg, std::string const& label) {
        auto const s = ilms::stability_check(cfg);
        std::cout << label << "spectral_radius=" << ilms::detail::decimal(s.spectral_radius)
                  << " stable=" << (s.stable ? "true" : "false") << '\n';
        return s.stable;
      };
      bool all_stable = true;
      if (auto* e = std::get_if<ilms::ExperimentSpec>(&spec)) {
        all_stable = report_config(e->config, "");
      } else {
        auto const& c = std::get<ilms::ComparisonSpec>(spec);
        for (auto n : c.sizes)
          all_stable &= report_config(ilms::derived_experiment(c, n).config,
                                      "N=" + std::to_string(n) + " ");
      }
      return all_stable ? 0 : 3;
    }
  } catch (ilms::DivergenceError const& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  } catch (std::exception const& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
