// spectro: command-line front end for the filter-function spectroscopy experiments.
//
//   spectro design|scan|reconstruct|table --config FILE [--seed N] [--out DIR]
//           [--exact-chi] [--plot-script] [--jobs N]
//
// Exit status: 0 ok, 1 configuration / argument error, 2 numerical failure.

#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "spectro/config.hpp"
#include "spectro/error.hpp"
#include "spectro/harness.hpp"

namespace {

std::string config_keys_help() {
  std::ostringstream os;
  os << "Config file: one `key = value` per line, `#` comments. Numbers may use pi, * and /.\n"
     << "Keys [default]:\n";
  for (const auto& [key, doc] : spectro::ConfigFile::known_keys()) {
    os << "  " << key << std::string(key.size() < 24 ? 24 - key.size() : 1, ' ') << doc << "\n";
  }
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Noise spectroscopy with filter-function designs"};
  app.footer(config_keys_help());
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  bool exact_chi = false;
  bool plot_script = false;
  int jobs = spectro::default_jobs();

  for (const char* name : {"design", "scan", "reconstruct", "table"}) {
    auto* sub = app.add_subcommand(name, std::string(name) + " experiment");
    sub->add_option("--config", config_path, "experiment config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "base seed (overrides the config)");
    sub->add_option("--out", out_dir, "output directory (overrides the config)");
    sub->add_flag("--exact-chi", exact_chi, "use exact overlaps instead of Monte-Carlo");
    sub->add_flag("--plot-script", plot_script, "also write a matplotlib script");
    sub->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    auto file = spectro::ConfigFile::load(config_path);
    if (seed) file.set("seed", std::to_string(*seed));
    if (exact_chi) file.set("measurement", "exact");
    const auto cfg = spectro::make_experiment_config(file);

    spectro::RunOptions opt;
    opt.out_dir = out_dir.empty() ? cfg.output : out_dir;
    opt.jobs = jobs;
    opt.plot_script = plot_script;

    spectro::RunReport report;
    if (command == "design") {
      report = spectro::run_design(cfg, opt);
    } else if (command == "scan") {
      report = spectro::run_scan(cfg, opt);
    } else if (command == "reconstruct") {
      report = spectro::run_reconstruct(cfg, opt);
    } else {
      report = spectro::run_table(cfg, opt);
    }
    for (const auto& p : report.outputs) std::cout << p.string() << "\n";
    std::cerr << command << ": done in " << report.wall_clock_s << " s\n";
    return 0;
  } catch (const spectro::NumericalError& e) {
    std::cerr << "spectro " << command << ": numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const spectro::Error& e) {
    std::cerr << "spectro " << command << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "spectro " << command << ": " << e.what() << "\n";
    return 1;
  }
}
