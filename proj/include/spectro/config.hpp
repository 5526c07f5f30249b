#pragma once

// Experiment configuration: a flat `key = value` text file, `#` starts a comment.
// Numeric values accept products/quotients of numbers and `pi`, e.g. `2*pi*140e3`.
// Lists are comma separated; a BOD protocol takes `BOD(h)` or `BOD(h;eps)`.

#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "spectro/controls.hpp"
#include "spectro/error.hpp"
#include "spectro/estimator.hpp"
#include "spectro/metrics.hpp"
#include "spectro/noisesim.hpp"
#include "spectro/spectra.hpp"

namespace spectro {

namespace text {

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

/// Splits on `sep` outside parentheses, trimming each item; empty input gives no items.
inline std::vector<std::string> split_list(std::string_view s, char sep = ',') {
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  int depth = 0;
  std::string cur;
  for (char ch : s) {
    if (ch == '(') ++depth;
    if (ch == ')') --depth;
    if (ch == sep && depth == 0) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(trim(cur));
  return out;
}

inline double parse_number(std::string_view expr) {
  const std::string s = trim(expr);
  if (s.empty()) throw ConfigError("empty numeric value");
  double value = 1.0;
  char op = '*';
  std::size_t pos = 0;
  while (pos <= s.size()) {
    std::size_t next = s.find_first_of("*/", pos);
    // Skip the sign of an exponent like 1e-6 that cannot be an operator anyway.
    const std::string token = trim(s.substr(pos, next == std::string::npos ? std::string::npos : next - pos));
    double factor = 0.0;
    if (token == "pi") {
      factor = kPi;
    } else {
      try {
        std::size_t used = 0;
        factor = std::stod(token, &used);
        if (used != token.size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw ConfigError("bad numeric value '" + s + "'");
      }
    }
    value = op == '*' ? value * factor : value / factor;
    if (next == std::string::npos) break;
    op = s[next];
    pos = next + 1;
  }
  if (!std::isfinite(value)) throw ConfigError("non-finite numeric value '" + s + "'");
  return value;
}

inline bool parse_bool(std::string_view v) {
  const std::string s = trim(v);
  if (s == "true" || s == "yes" || s == "1" || s == "on") return true;
  if (s == "false" || s == "no" || s == "0" || s == "off") return false;
  throw ConfigError("bad boolean '" + s + "'");
}

}  // namespace text

/// Raw key/value pairs plus the set of recognised keys.
class ConfigFile {
 public:
  static ConfigFile parse(std::istream& in) {
    ConfigFile cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      const std::string t = text::trim(line);
      if (t.empty()) continue;
      const auto eq = t.find('=');
      if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
      const std::string key = text::trim(t.substr(0, eq));
      const std::string value = text::trim(t.substr(eq + 1));
      if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
      if (!known_keys().count(key)) throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
      if (cfg.values_.count(key)) throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
      cfg.values_[key] = value;
    }
    return cfg;
  }

  static ConfigFile load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    return parse(in);
  }

  static ConfigFile from_string(const std::string& s) {
    std::istringstream in(s);
    return parse(in);
  }

  std::optional<std::string> get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
  }
  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
  const std::map<std::string, std::string>& values() const { return values_; }

  /// Every accepted key with a one-line description (shown by --help).
  static const std::map<std::string, std::string>& known_keys() {
    static const std::map<std::string, std::string> keys = {
        {"protocols", "protocol list: PDD, CP, BOD(h) or BOD(h;eps)"},
        {"flips", "sign flips per sequence M (power of 2 for BOD) [32]"},
        {"tau_min", "PDD/CP shortest interpulse duration, s [1e-6]"},
        {"tau_max", "PDD/CP longest interpulse duration, s [5e-6]"},
        {"tau_count", "PDD/CP number of linearly spaced durations [32]"},
        {"amplitude", "control amplitude A_c (A_c^(1) for BOD), Hz [1]"},
        {"bod_tau1", "BOD longest interpulse duration tau_1, s [5e-6]"},
        {"bod_epsilon", "BOD band overlap eps in [0,1) when BOD(h) omits it [0.5]"},
        {"bod_harmonic_cap", "harmonic cap h for the design command (3 or 5) [3]"},
        {"bod_scale_amplitude", "scale BOD amplitudes as A_1 tau_1/tau_n [true]"},
        {"expected_filter_counts", "optional filter count per protocol; mismatch aborts"},
        {"grid_delta_omega", "frequency grid step, rad/s [6e3]"},
        {"grid_omega_max", "frequency grid end, rad/s [2e7]"},
        {"spectrum", "gaussian | csv [gaussian]"},
        {"spectrum_components", "Gaussian components N:nu:sigma separated by ';' (Hz^2, rad/s, rad/s)"},
        {"spectrum_csv", "two-column CSV omega_rad_s,psd_hz2_s (spectrum = csv)"},
        {"scan_power", "scan: Gaussian power N, Hz^2 [1e8]"},
        {"scan_sigma", "scan: Gaussian width, rad/s [2*pi*30e3]"},
        {"scan_nu_start", "scan: first center, rad/s [2*pi*50e3]"},
        {"scan_nu_stop", "scan: last center, rad/s [2*pi*550e3]"},
        {"scan_nu_step", "scan: center step, rad/s [2*pi*10e3]"},
        {"method", "scan/reconstruct estimator: LS | NNLS | PINV [LS]"},
        {"methods", "table estimators [LS, NNLS]"},
        {"truncation", "none | drop_smallest:R | keep_fraction:F | threshold:REL [none]"},
        {"nnls_truncation", "none | same (reuse `truncation` for NNLS) [none]"},
        {"clip", "zero negative estimate samples before scoring [true]"},
        {"fidelity", "cosine | literal [cosine]"},
        {"measurement", "exact | montecarlo [exact]"},
        {"samples", "Monte-Carlo realisations per filter; a list for table [50]"},
        {"synthesis_delta_omega", "noise synthesis harmonic spacing, rad/s [2*pi*1e3]"},
        {"repetitions", "independent repetitions, seeds base_seed + index [1]"},
        {"seed", "base seed [1]"},
        {"pinv_baseline", "reconstruct: also emit the pseudoinverse estimate [true]"},
        {"pinv_protocol", "reconstruct: protocol whose filters feed the pseudoinverse [PDD]"},
        {"output", "output directory [.]"},
    };
    return keys;
  }

 private:
  std::map<std::string, std::string> values_;
};

struct ProtocolSpec {
  enum class Kind { PDD, CP, BOD };
  Kind kind = Kind::PDD;
  int harmonic_cap = 3;
  double epsilon = 0.5;

  static ProtocolSpec parse(std::string_view text, double default_epsilon) {
    const std::string s = text::trim(text);
    if (s == "PDD") return {Kind::PDD, 3, default_epsilon};
    if (s == "CP") return {Kind::CP, 3, default_epsilon};
    if (s.rfind("BOD(", 0) == 0 && s.back() == ')') {
      std::string inner = s.substr(4, s.size() - 5);
      for (char& ch : inner) {
        if (ch == ',') ch = ';';
      }
      const auto parts = text::split_list(inner, ';');
      if (parts.empty() || parts.size() > 2) throw ConfigError("bad protocol '" + s + "'");
      ProtocolSpec p{Kind::BOD, 3, default_epsilon};
      const double h = text::parse_number(parts[0]);
      if (h != std::floor(h)) throw ConfigError("BOD harmonic cap must be an integer in '" + s + "'");
      p.harmonic_cap = static_cast<int>(h);
      if (parts.size() == 2) p.epsilon = text::parse_number(parts[1]);
      return p;
    }
    throw ConfigError("unknown protocol '" + s + "' (expected PDD, CP, BOD(h) or BOD(h;eps))");
  }

  std::string label() const {
    switch (kind) {
      case Kind::PDD: return "PDD";
      case Kind::CP: return "CP";
      case Kind::BOD: {
        std::ostringstream os;
        os << "BOD(" << harmonic_cap << ";" << epsilon << ")";
        return os.str();
      }
    }
    return "PDD";
  }
};

enum class MeasurementMode { Exact, MonteCarlo };

struct ExperimentConfig {
  std::vector<ProtocolSpec> protocols;
  int flips = 32;
  double tau_min = 1e-6;
  double tau_max = 5e-6;
  int tau_count = 32;
  double amplitude = 1.0;
  double bod_tau1 = 5e-6;
  double bod_epsilon = 0.5;
  int bod_harmonic_cap = 3;
  bool bod_scale_amplitude = true;
  std::vector<int> expected_filter_counts;

  double grid_delta_omega = 6e3;
  double grid_omega_max = 2e7;

  std::optional<SpectralDensity> spectrum;  // reconstruct/table
  std::string spectrum_description;
  double scan_power = 1e8;
  double scan_sigma = kTwoPi * 30e3;
  double scan_nu_start = kTwoPi * 50e3;
  double scan_nu_stop = kTwoPi * 550e3;
  double scan_nu_step = kTwoPi * 10e3;

  Method method = Method::LS;
  std::vector<Method> methods{Method::LS, Method::NNLS};
  TruncationPolicy truncation = TruncationPolicy::none();
  bool nnls_same_truncation = false;
  bool clip = true;
  FidelityConvention fidelity = FidelityConvention::Cosine;

  MeasurementMode measurement = MeasurementMode::Exact;
  std::vector<int> samples{50};
  double synthesis_delta_omega = kDefaultSynthesisStep;

  int repetitions = 1;
  std::uint64_t seed = 1;
  bool pinv_baseline = true;
  ProtocolSpec pinv_protocol{};
  std::string output = ".";

  ConfigFile raw;  // echoed into reports

  FrequencyGrid grid() const { return FrequencyGrid(grid_omega_max, grid_delta_omega); }
  TruncationPolicy nnls_policy() const { return nnls_same_truncation ? truncation : TruncationPolicy::none(); }
};

/// The two-Gaussian test spectrum: N = 1e8 and 5e7 Hz^2 at 2pi x 140 and 260 kHz, sigma = 2pi x 30 kHz.
inline SpectralDensity two_gaussian_spectrum() {
  return SpectralDensity::gaussian_mixture({{1e8, kTwoPi * 140e3, kTwoPi * 30e3}, {5e7, kTwoPi * 260e3, kTwoPi * 30e3}});
}

inline Method parse_method(std::string_view s) {
  const std::string t = text::trim(s);
  if (t == "LS") return Method::LS;
  if (t == "NNLS") return Method::NNLS;
  if (t == "PINV") return Method::PINV;
  throw ConfigError("unknown method '" + t + "'");
}

inline ExperimentConfig make_experiment_config(const ConfigFile& file) {
  ExperimentConfig c;
  c.raw = file;
  auto num = [&](const char* key, double& out) {
    if (auto v = file.get(key)) out = text::parse_number(*v);
  };
  auto integer = [&](const char* key, int& out) {
    if (auto v = file.get(key)) {
      const double d = text::parse_number(*v);
      if (d != std::floor(d) || std::abs(d) > 1e9) throw ConfigError(std::string(key) + " must be an integer");
      out = static_cast<int>(d);
    }
  };
  auto flag = [&](const char* key, bool& out) {
    if (auto v = file.get(key)) out = text::parse_bool(*v);
  };
  auto int_list = [&](const std::string& v) {
    std::vector<int> out;
    for (const auto& item : text::split_list(v)) {
      const double d = text::parse_number(item);
      if (d != std::floor(d)) throw ConfigError("expected integers in '" + v + "'");
      out.push_back(static_cast<int>(d));
    }
    return out;
  };

  integer("flips", c.flips);
  num("tau_min", c.tau_min);
  num("tau_max", c.tau_max);
  integer("tau_count", c.tau_count);
  num("amplitude", c.amplitude);
  num("bod_tau1", c.bod_tau1);
  num("bod_epsilon", c.bod_epsilon);
  integer("bod_harmonic_cap", c.bod_harmonic_cap);
  flag("bod_scale_amplitude", c.bod_scale_amplitude);
  num("grid_delta_omega", c.grid_delta_omega);
  num("grid_omega_max", c.grid_omega_max);
  num("scan_power", c.scan_power);
  num("scan_sigma", c.scan_sigma);
  num("scan_nu_start", c.scan_nu_start);
  num("scan_nu_stop", c.scan_nu_stop);
  num("scan_nu_step", c.scan_nu_step);
  num("synthesis_delta_omega", c.synthesis_delta_omega);
  integer("repetitions", c.repetitions);
  flag("clip", c.clip);
  flag("pinv_baseline", c.pinv_baseline);

  const std::string protocols = file.get("protocols").value_or("PDD, CP, BOD(3), BOD(5)");
  for (const auto& p : text::split_list(protocols)) c.protocols.push_back(ProtocolSpec::parse(p, c.bod_epsilon));
  if (c.protocols.empty()) throw ConfigError("protocols list is empty");
  if (auto v = file.get("expected_filter_counts")) {
    c.expected_filter_counts = int_list(*v);
    if (c.expected_filter_counts.size() != c.protocols.size()) {
      throw ConfigError("expected_filter_counts must have one entry per protocol");
    }
  }
  c.pinv_protocol = ProtocolSpec::parse(file.get("pinv_protocol").value_or("PDD"), c.bod_epsilon);

  if (auto v = file.get("method")) c.method = parse_method(*v);
  if (auto v = file.get("methods")) {
    c.methods.clear();
    for (const auto& m : text::split_list(*v)) c.methods.push_back(parse_method(m));
    if (c.methods.empty()) throw ConfigError("methods list is empty");
  }
  if (auto v = file.get("truncation")) {
    try {
      c.truncation = TruncationPolicy::parse(text::trim(*v));
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what());
    }
  }
  if (auto v = file.get("nnls_truncation")) {
    const std::string t = text::trim(*v);
    if (t != "none" && t != "same") throw ConfigError("nnls_truncation must be none or same");
    c.nnls_same_truncation = t == "same";
  }
  if (auto v = file.get("fidelity")) {
    const std::string t = text::trim(*v);
    if (t == "cosine") {
      c.fidelity = FidelityConvention::Cosine;
    } else if (t == "literal") {
      c.fidelity = FidelityConvention::Literal;
    } else {
      throw ConfigError("fidelity must be cosine or literal");
    }
  }
  if (auto v = file.get("measurement")) {
    const std::string t = text::trim(*v);
    if (t == "exact") {
      c.measurement = MeasurementMode::Exact;
    } else if (t == "montecarlo") {
      c.measurement = MeasurementMode::MonteCarlo;
    } else {
      throw ConfigError("measurement must be exact or montecarlo");
    }
  }
  if (auto v = file.get("samples")) c.samples = int_list(*v);
  if (auto v = file.get("seed")) {
    const std::string t = text::trim(*v);
    try {
      std::size_t used = 0;
      if (t.empty() || t.front() == '-') throw std::invalid_argument("sign");
      c.seed = std::stoull(t, &used);
      if (used != t.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ConfigError("seed must be a non-negative integer");
    }
  }
  if (auto v = file.get("output")) c.output = text::trim(*v);

  const std::string kind = text::trim(file.get("spectrum").value_or("gaussian"));
  try {
    if (kind == "csv") {
      const auto path = file.get("spectrum_csv");
      if (!path) throw ConfigError("spectrum = csv needs spectrum_csv");
      c.spectrum = load_tabulated_csv(text::trim(*path));
      c.spectrum_description = "tabulated:" + text::trim(*path);
    } else if (kind == "gaussian") {
      if (auto v = file.get("spectrum_components")) {
        std::vector<GaussianComponent> comps;
        for (const auto& item : text::split_list(*v, ';')) {
          const auto f = text::split_list(item, ':');
          if (f.size() != 3) throw ConfigError("spectrum component must be N:nu:sigma, got '" + item + "'");
          comps.push_back({text::parse_number(f[0]), text::parse_number(f[1]), text::parse_number(f[2])});
        }
        c.spectrum = SpectralDensity::gaussian_mixture(std::move(comps));
        c.spectrum_description = "gaussian:" + text::trim(*v);
      } else {
        c.spectrum = two_gaussian_spectrum();
        c.spectrum_description = "two-gaussian default (assumed for table experiments)";
      }
    } else {
      throw ConfigError("spectrum must be gaussian or csv");
    }
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }

  if (c.repetitions < 1) throw ConfigError("repetitions must be >= 1");
  for (int s : c.samples) {
    if (s < 1) throw ConfigError("samples must be >= 1");
  }
  if (c.samples.empty()) throw ConfigError("samples list is empty");
  if (c.tau_count < 1) throw ConfigError("tau_count must be >= 1");
  if (!(c.scan_nu_step > 0.0) || c.scan_nu_stop < c.scan_nu_start) throw ConfigError("bad scan range");
  return c;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  return make_experiment_config(ConfigFile::load(path));
}

}  // namespace spectro
