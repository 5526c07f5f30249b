#pragma once

// Experiment drivers behind the `spectro` CLI: design, scan, reconstruct, table.
//
// Each run writes fixed-header CSVs plus one JSON report into the output
// directory. Work items (scan points, repetitions) run on a small thread pool and
// land in indexed slots, so outputs do not depend on scheduling. Repetition r
// uses seed base_seed + r.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "spectro/config.hpp"
#include "spectro/controls.hpp"
#include "spectro/error.hpp"
#include "spectro/estimator.hpp"
#include "spectro/metrics.hpp"
#include "spectro/noisesim.hpp"
#include "spectro/spectra.hpp"

namespace spectro {

inline constexpr const char* kToolVersion = "spectro 0.1.0";

// ---------------------------------------------------------------------------
// Output helpers

/// Shortest round-trip decimal form; identical bytes for identical doubles.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header) : path_(path), out_(path) {
    if (!out_) throw ConfigError("cannot write " + path.string());
    row(header);
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
  }

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

/// File-name friendly protocol tag: BOD(3;0.5) -> BOD3_eps0.5.
inline std::string file_tag(const ProtocolSpec& p) {
  if (p.kind != ProtocolSpec::Kind::BOD) return p.label();
  return "BOD" + std::to_string(p.harmonic_cap) + "_eps" + format_double(p.epsilon);
}

// ---------------------------------------------------------------------------
// Deterministic worker pool

/// Runs fn(i) for i in [0, count) on up to `jobs` threads. The first failure by
/// index is rethrown after all workers finish.
inline void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn) {
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto threads = static_cast<std::size_t>(std::max(1, jobs));
  if (threads == 1 || count <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < std::min(threads, count); ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

inline int default_jobs() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

// ---------------------------------------------------------------------------
// Building blocks

inline std::vector<ControlSequence> protocol_sequences(const ExperimentConfig& cfg, const ProtocolSpec& p) {
  switch (p.kind) {
    case ProtocolSpec::Kind::PDD:
      return linear_sequences(Protocol::PDD, cfg.tau_min, cfg.tau_max, cfg.tau_count, cfg.flips, cfg.amplitude);
    case ProtocolSpec::Kind::CP:
      return linear_sequences(Protocol::CP, cfg.tau_min, cfg.tau_max, cfg.tau_count, cfg.flips, cfg.amplitude);
    case ProtocolSpec::Kind::BOD: {
      const auto d = design_bod(cfg.bod_tau1, p.epsilon, cfg.flips, p.harmonic_cap);
      return bod_sequences(d, cfg.amplitude, cfg.bod_scale_amplitude);
    }
  }
  throw InvalidArgument("unknown protocol");
}

inline FilterBank protocol_bank(const ExperimentConfig& cfg, const ProtocolSpec& p) {
  return build_filter_bank(protocol_sequences(cfg, p), cfg.grid());
}

/// True spectrum on a grid; a tabulated spectrum is zero past its last sample.
inline Vector true_on_grid(const SpectralDensity& sd, const FrequencyGrid& grid) {
  Vector s(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const bool inside = sd.is_parametric() || grid[k] <= sd.table().grid.back();
    s[static_cast<Eigen::Index>(k)] = inside ? sd(grid[k]) : 0.0;
  }
  return s;
}

inline MeasurementSet measure(const ExperimentConfig& cfg, const SpectralDensity& sd, const FilterBank& bank,
                              int samples, std::uint64_t seed) {
  if (cfg.measurement == MeasurementMode::Exact) return chi_exact(sd, bank);
  const auto model = make_noise_model(sd, seed, cfg.synthesis_delta_omega);
  return chi_montecarlo(model, bank, samples);
}

inline EstimationResult estimate(const ExperimentConfig& cfg, const FilterBank& bank, const Vector& chi,
                                 Method method) {
  EstimationResult r;
  switch (method) {
    case Method::LS: r = solve_ls(bank, chi, cfg.truncation); break;
    case Method::NNLS: r = solve_nnls(bank, chi, cfg.nnls_policy()); break;
    case Method::PINV: r = solve_pinv(bank, chi, cfg.truncation); break;
  }
  return cfg.clip ? clip_negative(std::move(r)) : r;
}

struct Score {
  double fidelity = 0.0;
  double mse = 0.0;
};

inline Score score(const ExperimentConfig& cfg, const Vector& s_true, const EstimationResult& r,
                   const FrequencyGrid& grid) {
  return {fidelity(s_true, r.spectrum_hat, grid, cfg.fidelity), mse(s_true, r.spectrum_hat, grid)};
}

struct Summary {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for a single value
};

inline Summary summarize(const std::vector<double>& v) {
  Summary s;
  if (v.empty()) return s;
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return s;
}

// ---------------------------------------------------------------------------
// Reports

struct RunOptions {
  std::filesystem::path out_dir = ".";
  int jobs = 1;
  bool plot_script = false;
};

struct RunReport {
  std::string command;
  nlohmann::json body = nlohmann::json::object();
  std::vector<std::string> notes;
  std::vector<std::filesystem::path> outputs;
  double wall_clock_s = 0.0;
};

inline nlohmann::json config_echo(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["raw"] = cfg.raw.values();
  nlohmann::json r;
  std::vector<std::string> labels;
  for (const auto& p : cfg.protocols) labels.push_back(p.label());
  r["protocols"] = labels;
  r["flips"] = cfg.flips;
  r["tau_min_s"] = cfg.tau_min;
  r["tau_max_s"] = cfg.tau_max;
  r["tau_count"] = cfg.tau_count;
  r["amplitude"] = cfg.amplitude;
  r["bod_tau1_s"] = cfg.bod_tau1;
  r["bod_scale_amplitude"] = cfg.bod_scale_amplitude;
  r["grid_delta_omega"] = cfg.grid_delta_omega;
  r["grid_omega_max"] = cfg.grid_omega_max;
  r["spectrum"] = cfg.spectrum_description;
  r["method"] = std::string(to_string(cfg.method));
  r["truncation"] = cfg.truncation.to_string();
  r["nnls_truncation"] = cfg.nnls_policy().to_string();
  r["clip"] = cfg.clip;
  r["fidelity"] = cfg.fidelity == FidelityConvention::Cosine ? "cosine" : "literal";
  r["measurement"] = cfg.measurement == MeasurementMode::Exact ? "exact" : "montecarlo";
  r["samples"] = cfg.samples;
  r["synthesis_delta_omega"] = cfg.synthesis_delta_omega;
  r["repetitions"] = cfg.repetitions;
  r["seed"] = cfg.seed;
  j["resolved"] = r;
  return j;
}

inline nlohmann::json eigen_diagnostics(const FilterBank& bank) {
  const auto es = symmetric_eigen(bank.gramian);
  nlohmann::json j;
  j["filters"] = bank.size();
  j["eigenvalues"] = std::vector<double>(es.values.data(), es.values.data() + es.values.size());
  j["numerical_rank"] = TruncationPolicy::numerical_rank(es.values);
  const double lo = es.values[es.values.size() - 1];
  j["condition_number"] = lo > 0.0 ? es.values[0] / lo : std::numeric_limits<double>::infinity();
  return j;
}

inline std::filesystem::path write_report(const ExperimentConfig& cfg, const RunReport& report,
                                          const RunOptions& opt) {
  nlohmann::json j;
  j["tool_version"] = kToolVersion;
  j["command"] = report.command;
  j["config"] = config_echo(cfg);
  j["results"] = report.body;
  j["notes"] = report.notes;
  std::vector<std::string> outs;
  for (const auto& p : report.outputs) outs.push_back(p.filename().string());
  j["outputs"] = outs;
  j["wall_clock_s"] = report.wall_clock_s;
  const auto path = opt.out_dir / (report.command + "_report.json");
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  return path;
}

inline void write_plot_script(const std::string& command, const RunReport& report, const RunOptions& opt) {
  const auto path = opt.out_dir / ("plot_" + command + ".py");
  std::ofstream py(path);
  if (!py) throw ConfigError("cannot write " + path.string());
  py << "# Regenerates the " << command << " figure from the CSVs next to this script.\n"
     << "import csv, math, os\nimport matplotlib\nmatplotlib.use('Agg')\nimport matplotlib.pyplot as plt\n\n"
     << "here = os.path.dirname(os.path.abspath(__file__))\n\n"
     << "def rows(name):\n    with open(os.path.join(here, name)) as f:\n        return list(csv.DictReader(f))\n\n";
  if (command == "scan") {
    py << "data = {}\nfor r in rows('scan.csv'):\n    if r['method'] == 'failed':\n        continue\n"
       << "    data.setdefault(r['protocol'], []).append((float(r['nu_rad_s']) / (2 * math.pi * 1e3), float(r['fidelity'])))\n"
       << "for p, pts in data.items():\n    plt.plot(*zip(*pts), marker='o', ms=3, label=p)\n"
       << "plt.xlabel('nu / 2pi [kHz]')\nplt.ylabel('fidelity')\nplt.ylim(0, 1.05)\nplt.legend()\n"
       << "plt.savefig(os.path.join(here, 'scan.png'), dpi=150)\n";
  } else if (command == "reconstruct") {
    py << "files = [";
    for (const auto& p : report.outputs) {
      if (p.extension() == ".csv") py << "'" << p.filename().string() << "', ";
    }
    py << "]\nfig, axes = plt.subplots(len(files), 1, figsize=(6, 2.5 * len(files)), sharex=True, squeeze=False)\n"
       << "for ax, name in zip(axes[:, 0], files):\n    d = rows(name)\n"
       << "    w = [float(r['omega_rad_s']) / (2 * math.pi * 1e3) for r in d]\n"
       << "    ax.plot(w, [float(r['s_true']) for r in d], 'k--', label='true')\n"
       << "    ax.plot(w, [float(r['s_hat']) for r in d], label='estimate')\n"
       << "    ax.set_title(name)\n    ax.set_xlim(0, 600)\n    ax.legend()\n"
       << "axes[-1, 0].set_xlabel('omega / 2pi [kHz]')\nfig.tight_layout()\n"
       << "fig.savefig(os.path.join(here, 'reconstruct.png'), dpi=150)\n";
  } else if (command == "table") {
    py << "d = rows('table.csv')\nlabels = [f\"{r['protocol']} {r['method']} s={r['samples']}\" for r in d]\n"
       << "plt.figure(figsize=(8, 8))\nplt.barh(labels, [float(r['fidelity_mean']) for r in d],\n"
       << "         xerr=[float(r['fidelity_std']) for r in d])\nplt.xlim(0, 1)\nplt.xlabel('mean fidelity')\n"
       << "plt.tight_layout()\nplt.savefig(os.path.join(here, 'table.png'), dpi=150)\n";
  } else {
    py << "d = rows('design.csv')\nn = [int(r['n']) for r in d]\n"
       << "for key in ('lower_edge_rad_s', 'peak_rad_s', 'upper_edge_rad_s'):\n"
       << "    plt.plot(n, [float(r[key]) / (2 * math.pi * 1e3) for r in d], marker='.', label=key)\n"
       << "plt.xlabel('n')\nplt.ylabel('frequency / 2pi [kHz]')\nplt.legend()\n"
       << "plt.savefig(os.path.join(here, 'design.png'), dpi=150)\n";
  }
}

namespace detail {

inline RunReport finish(const ExperimentConfig& cfg, RunReport report, const RunOptions& opt,
                        std::chrono::steady_clock::time_point start) {
  report.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (opt.plot_script) write_plot_script(report.command, report, opt);
  report.outputs.push_back(write_report(cfg, report, opt));
  return report;
}

inline void prepare_out_dir(const RunOptions& opt) {
  std::error_code ec;
  std::filesystem::create_directories(opt.out_dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + opt.out_dir.string() + ": " + ec.message());
}

}  // namespace detail

// ---------------------------------------------------------------------------
// design

inline RunReport run_design(const ExperimentConfig& cfg, const RunOptions& opt) {
  const auto start = std::chrono::steady_clock::now();
  detail::prepare_out_dir(opt);
  const auto d = design_bod(cfg.bod_tau1, cfg.bod_epsilon, cfg.flips, cfg.bod_harmonic_cap);
  RunReport report;
  report.command = "design";
  CsvWriter csv(opt.out_dir / "design.csv", {"n", "tau_s", "peak_rad_s", "lower_edge_rad_s", "upper_edge_rad_s"});
  for (std::size_t i = 0; i < d.taus.size(); ++i) {
    const ControlSequence seq(Protocol::PDD, d.taus[i], d.flips);
    csv.row({std::to_string(i + 1), format_double(d.taus[i]), format_double(seq.main_peak()),
             format_double(seq.lower_edge()), format_double(seq.upper_edge())});
  }
  report.outputs.push_back(csv.path());
  report.body["filters"] = d.taus.size();
  report.body["ratio"] = d.ratio;
  report.body["epsilon"] = d.epsilon;
  report.body["harmonic_cap"] = d.harmonic_cap;
  report.body["taus_s"] = d.taus;
  return detail::finish(cfg, std::move(report), opt, start);
}

// ---------------------------------------------------------------------------
// scan: single Gaussian with swept center

inline std::vector<double> scan_centers(const ExperimentConfig& cfg) {
  std::vector<double> nu;
  const auto steps = static_cast<long>(std::floor((cfg.scan_nu_stop - cfg.scan_nu_start) / cfg.scan_nu_step + 1e-9));
  for (long i = 0; i <= steps; ++i) nu.push_back(cfg.scan_nu_start + static_cast<double>(i) * cfg.scan_nu_step);
  return nu;
}

inline RunReport run_scan(const ExperimentConfig& cfg, const RunOptions& opt) {
  const auto start = std::chrono::steady_clock::now();
  detail::prepare_out_dir(opt);
  RunReport report;
  report.command = "scan";

  std::vector<FilterBank> banks;
  for (const auto& p : cfg.protocols) banks.push_back(protocol_bank(cfg, p));
  const auto centers = scan_centers(cfg);
  const std::size_t reps = static_cast<std::size_t>(cfg.repetitions);
  const std::size_t points = cfg.protocols.size() * centers.size();

  struct Slot {
    std::vector<Score> reps;
    std::string error;
  };
  std::vector<Slot> slots(points);
  parallel_for(points, opt.jobs, [&](std::size_t i) {
    const std::size_t pi = i / centers.size();
    const double nu = centers[i % centers.size()];
    const auto& bank = banks[pi];
    try {
      const auto sd = SpectralDensity::gaussian_mixture({{cfg.scan_power, nu, cfg.scan_sigma}});
      const Vector s_true = true_on_grid(sd, bank.grid);
      for (std::size_t r = 0; r < reps; ++r) {
        const auto m = measure(cfg, sd, bank, cfg.samples.front(), cfg.seed + r);
        slots[i].reps.push_back(score(cfg, s_true, estimate(cfg, bank, m.chi, cfg.method), bank.grid));
        if (cfg.measurement == MeasurementMode::Exact) {
          // Exact data does not depend on the seed.
          slots[i].reps.resize(reps, slots[i].reps.back());
          break;
        }
      }
    } catch (const Error& e) {
      slots[i].reps.clear();
      slots[i].error = e.what();
    }
  });

  CsvWriter csv(opt.out_dir / "scan.csv", {"nu_rad_s", "fidelity", "mse", "method", "protocol"});
  auto points_json = nlohmann::json::array();
  for (std::size_t i = 0; i < points; ++i) {
    const auto& p = cfg.protocols[i / centers.size()];
    const double nu = centers[i % centers.size()];
    nlohmann::json pj{{"protocol", p.label()}, {"nu_rad_s", nu}};
    if (!slots[i].error.empty()) {
      csv.row({format_double(nu), "", "", "failed", p.label()});
      pj["error"] = slots[i].error;
    } else {
      std::vector<double> fid, err;
      for (const auto& s : slots[i].reps) {
        fid.push_back(s.fidelity);
        err.push_back(s.mse);
      }
      const auto f = summarize(fid);
      const auto e = summarize(err);
      csv.row({format_double(nu), format_double(f.mean), format_double(e.mean), std::string(to_string(cfg.method)),
               p.label()});
      pj["fidelity"] = fid;
      pj["mse"] = err;
      pj["fidelity_mean"] = f.mean;
      pj["fidelity_std"] = f.std;
      pj["mse_mean"] = e.mean;
      pj["mse_std"] = e.std;
    }
    points_json.push_back(std::move(pj));
  }
  report.outputs.push_back(csv.path());
  report.body["points"] = std::move(points_json);
  for (std::size_t pi = 0; pi < banks.size(); ++pi) {
    report.body["banks"][cfg.protocols[pi].label()] = eigen_diagnostics(banks[pi]);
  }
  return detail::finish(cfg, std::move(report), opt, start);
}

// ---------------------------------------------------------------------------
// reconstruct: estimated spectra for one configured spectrum

inline RunReport run_reconstruct(const ExperimentConfig& cfg, const RunOptions& opt) {
  const auto start = std::chrono::steady_clock::now();
  detail::prepare_out_dir(opt);
  if (!cfg.spectrum) throw ConfigError("reconstruct needs a spectrum");
  const auto& sd = *cfg.spectrum;
  RunReport report;
  report.command = "reconstruct";

  // Protocols first, then the pseudoinverse baseline as one extra entry.
  std::vector<ProtocolSpec> specs = cfg.protocols;
  if (cfg.pinv_baseline) specs.push_back(cfg.pinv_protocol);
  std::vector<FilterBank> banks;
  for (const auto& p : specs) banks.push_back(protocol_bank(cfg, p));
  const std::size_t n_est = specs.size();
  const std::size_t reps = static_cast<std::size_t>(cfg.repetitions);

  std::vector<EstimationResult> first(n_est);
  std::vector<std::vector<Score>> scores(n_est, std::vector<Score>(reps));
  parallel_for(n_est * reps, opt.jobs, [&](std::size_t i) {
    const std::size_t e = i / reps;
    const std::size_t r = i % reps;
    const bool pinv = cfg.pinv_baseline && e + 1 == n_est;
    const auto& bank = banks[e];
    // The baseline inverts the same data as a protocol run with the same seed.
    const auto m = measure(cfg, sd, bank, cfg.samples.front(), cfg.seed + r);
    // The baseline is the plain pseudoinverse, never truncated.
    auto res = pinv ? solve_pinv(bank, m.chi) : estimate(cfg, bank, m.chi, cfg.method);
    if (pinv && cfg.clip) res = clip_negative(std::move(res));
    scores[e][r] = score(cfg, true_on_grid(sd, bank.grid), res, bank.grid);
    if (r == 0) first[e] = std::move(res);
  });

  const auto grid = cfg.grid();
  const Vector s_true = true_on_grid(sd, grid);
  for (std::size_t e = 0; e < n_est; ++e) {
    const bool pinv = cfg.pinv_baseline && e + 1 == n_est;
    const std::string tag = pinv ? "PINV" : file_tag(specs[e]);
    CsvWriter csv(opt.out_dir / ("reconstruct_" + tag + ".csv"), {"omega_rad_s", "s_true", "s_hat"});
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const auto ik = static_cast<Eigen::Index>(k);
      csv.row({format_double(grid[k]), format_double(s_true[ik]), format_double(first[e].spectrum_hat[ik])});
    }
    report.outputs.push_back(csv.path());

    std::vector<double> fid, err;
    for (const auto& s : scores[e]) {
      fid.push_back(s.fidelity);
      err.push_back(s.mse);
    }
    nlohmann::json ej;
    ej["protocol"] = specs[e].label();
    ej["method"] = std::string(to_string(first[e].method));
    ej["file"] = csv.path().filename().string();
    ej["fidelity"] = fid;
    ej["mse"] = err;
    ej["fidelity_mean"] = summarize(fid).mean;
    ej["fidelity_std"] = summarize(fid).std;
    ej["mse_mean"] = summarize(err).mean;
    ej["effective_rank"] = first[e].effective_rank;
    ej["negative_samples"] = (first[e].spectrum_hat.array() < 0.0).count();
    ej["bank"] = eigen_diagnostics(banks[e]);
    report.body["estimates"][tag] = std::move(ej);
  }
  return detail::finish(cfg, std::move(report), opt, start);
}

// ---------------------------------------------------------------------------
// table: mean fidelity over repetitions per protocol x samples x method

struct TableCell {
  std::string protocol;
  std::size_t filters = 0;
  int samples = 0;
  Method method = Method::LS;
  std::vector<double> fidelity;  // one per repetition
  std::vector<double> mse;
};

inline std::vector<TableCell> compute_table(const ExperimentConfig& cfg, const std::vector<FilterBank>& banks,
                                            int jobs) {
  if (!cfg.spectrum) throw ConfigError("table needs a spectrum");
  const auto& sd = *cfg.spectrum;
  const std::size_t reps = static_cast<std::size_t>(cfg.repetitions);
  std::vector<TableCell> cells;
  for (std::size_t p = 0; p < banks.size(); ++p) {
    for (int s : cfg.samples) {
      for (Method m : cfg.methods) {
        cells.push_back({cfg.protocols[p].label(), banks[p].size(), s, m, std::vector<double>(reps),
                         std::vector<double>(reps)});
      }
    }
  }
  std::vector<Vector> truths;
  for (const auto& b : banks) truths.push_back(true_on_grid(sd, b.grid));

  parallel_for(reps, jobs, [&](std::size_t r) {
    std::size_t c = 0;
    for (std::size_t p = 0; p < banks.size(); ++p) {
      for (int s : cfg.samples) {
        // One data set per (repetition, protocol, samples); every method sees the same chi.
        const auto meas = measure(cfg, sd, banks[p], s, cfg.seed + r);
        for (Method m : cfg.methods) {
          const auto sc = score(cfg, truths[p], estimate(cfg, banks[p], meas.chi, m), banks[p].grid);
          cells[c].fidelity[r] = sc.fidelity;
          cells[c].mse[r] = sc.mse;
          ++c;
        }
      }
    }
  });
  return cells;
}

inline std::vector<FilterBank> table_banks(const ExperimentConfig& cfg) {
  std::vector<FilterBank> banks;
  for (std::size_t p = 0; p < cfg.protocols.size(); ++p) {
    auto seqs = protocol_sequences(cfg, cfg.protocols[p]);
    if (!cfg.expected_filter_counts.empty() &&
        static_cast<int>(seqs.size()) != cfg.expected_filter_counts[p]) {
      throw ConfigError(cfg.protocols[p].label() + " produces " + std::to_string(seqs.size()) +
                        " filters, expected " + std::to_string(cfg.expected_filter_counts[p]));
    }
    banks.push_back(build_filter_bank(std::move(seqs), cfg.grid()));
  }
  return banks;
}

inline RunReport run_table(const ExperimentConfig& cfg, const RunOptions& opt) {
  const auto start = std::chrono::steady_clock::now();
  detail::prepare_out_dir(opt);
  RunReport report;
  report.command = "table";
  const auto banks = table_banks(cfg);
  const auto cells = compute_table(cfg, banks, opt.jobs);

  CsvWriter csv(opt.out_dir / "table.csv", {"protocol", "N", "samples", "method", "fidelity_mean", "fidelity_std"});
  auto cj = nlohmann::json::array();
  for (const auto& c : cells) {
    const auto f = summarize(c.fidelity);
    csv.row({c.protocol, std::to_string(c.filters), std::to_string(c.samples), std::string(to_string(c.method)),
             format_double(f.mean), format_double(f.std)});
    cj.push_back({{"protocol", c.protocol},
                  {"N", c.filters},
                  {"samples", c.samples},
                  {"method", std::string(to_string(c.method))},
                  {"fidelity", c.fidelity},
                  {"mse", c.mse},
                  {"fidelity_mean", f.mean},
                  {"fidelity_std", f.std},
                  {"mse_mean", summarize(c.mse).mean}});
  }
  report.outputs.push_back(csv.path());
  report.body["cells"] = std::move(cj);
  for (std::size_t p = 0; p < banks.size(); ++p) {
    report.body["banks"][cfg.protocols[p].label()] = eigen_diagnostics(banks[p]);
  }
  if (!cfg.raw.get("spectrum_components") && !cfg.raw.get("spectrum_csv")) {
    report.notes.push_back("spectrum not given; the two-Gaussian test spectrum was assumed");
  }
  return detail::finish(cfg, std::move(report), opt, start);
}

}  // namespace spectro
