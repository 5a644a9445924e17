/**
 * @file config.hpp
 * @brief Flat `key = value` run configuration: parsing, validation, dumping
 *        and the figure-reproduction presets.
 *
 * Format: one assignment per line, `#` starts a comment, strings are
 * double-quoted, lists are `[a, b, c]`. Complex numbers are strings such as
 * "0.5-0.25j". Delays are nanoseconds; `snr_db = inf` disables noise.
 */
#pragma once

#include <charconv>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dualband/channel.hpp"
#include "dualband/evaluation.hpp"
#include "dualband/freqgrid.hpp"

namespace dualband::cli {

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, std::string key, const std::string& what)
      : std::runtime_error(format(line, key, what)), line_(line), key_(std::move(key)) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& key() const noexcept { return key_; }

 private:
  static std::string format(std::size_t line, const std::string& key, const std::string& what) {
    std::string msg = "config";
    if (line > 0) msg += " line " + std::to_string(line);
    if (!key.empty()) msg += " key '" + key + "'";
    return msg + ": " + what;
  }

  std::size_t line_;
  std::string key_;
};

struct RunConfig {
  // grid
  std::size_t K = kDefaultGridSize;
  double delta_f_hz = kDefaultSpacingHz;
  double f_carrier_hz = kDefaultCarrierHz;
  // bands
  std::size_t N_sub = kDefaultSubbandSize;
  std::optional<std::size_t> gap_subcarriers;
  std::size_t start_index = 0;
  // scenario
  std::vector<double> targets_ns{66.0, 100.0, 133.0};
  std::string gain_model = "rayleigh";
  std::vector<cplx> fixed_gains;
  double snr_db = 20.0;
  std::uint64_t seed = 1;
  double delay_jitter_ns = 0.0;
  // estimator
  std::string method = "relax";
  std::optional<std::size_t> L_max;
  double epsilon = 0.0;
  std::size_t osf = 16;
  int max_refinement_cycles = 20;
  double cycle_tolerance = 1e-8;
  // sweeps
  std::string sweep = "snr";
  std::vector<std::string> methods;
  std::size_t trials = 1000;
  std::vector<double> snr_list{-10, -5, 0, 5, 10, 15, 20, 25, 30, 35};
  std::vector<std::size_t> gap_list;
  // profile window (ns); unset means the full unambiguous range
  std::optional<double> profile_tau_min_ns;
  std::optional<double> profile_tau_max_ns;
  // output
  std::string out;
  std::string format = "csv";

  bool operator==(const RunConfig&) const = default;

  FrequencyGrid grid() const { return {K, delta_f_hz, f_carrier_hz}; }

  bool has_gap() const { return gap_subcarriers.has_value(); }

  DualBandConfig dual_band_config() const {
    if (!gap_subcarriers) throw ConfigError("gap_subcarriers (or gap_hz) is required for dual-band commands");
    DualBandConfig cfg{grid(), N_sub, *gap_subcarriers, start_index};
    cfg.validate();
    return cfg;
  }

  GainModel gain() const { return gain_model == "fixed" ? GainModel::kFixed : GainModel::kRayleigh; }

  ScenarioSpec scenario() const {
    ScenarioSpec s{dual_band(dual_band_config()), {}, gain(), fixed_gains, snr_db, seed, delay_jitter_ns * 1e-9};
    for (double t : targets_ns) s.delays_s.push_back(t * 1e-9);
    s.validate();
    return s;
  }

  EstimatorSettings estimator() const {
    EstimatorSettings e;
    e.osf = osf;
    e.max_targets = L_max.value_or(0);
    e.epsilon = epsilon;
    e.max_refinement_cycles = max_refinement_cycles;
    e.cycle_tolerance = cycle_tolerance;
    return e;
  }

  std::vector<Method> sweep_methods() const {
    std::vector<Method> out;
    if (methods.empty()) {
      out.push_back(parse_method(method));
    } else {
      for (const auto& m : methods) out.push_back(parse_method(m));
    }
    return out;
  }

  DelayGrid profile_grid() const {
    const auto fg = grid();
    const auto full = DelayGrid::oversampled(fg, osf);
    if (!profile_tau_min_ns && !profile_tau_max_ns) return full;
    const double lo = profile_tau_min_ns.value_or(0.0) * 1e-9;
    const double hi = profile_tau_max_ns ? *profile_tau_max_ns * 1e-9 : full.tau_max();
    DelayGrid g(lo, hi, full.step());
    g.validate_for(fg);
    return g;
  }

  /// Cross-field checks; throws ConfigError.
  void validate() const {
    const auto fg = grid();
    if (N_sub == 0) throw ConfigError("N_sub must be positive");
    if (osf == 0) throw ConfigError("osf must be positive");
    if (trials == 0) throw ConfigError("trials must be at least 1");
    if (gain_model != "rayleigh" && gain_model != "fixed") throw ConfigError("gain_model must be \"rayleigh\" or \"fixed\"");
    if (format != "csv") throw ConfigError("only csv output is supported");
    if (sweep != "snr" && sweep != "gap") throw ConfigError("sweep must be \"snr\" or \"gap\"");
    parse_method(method);
    for (const auto& m : methods) parse_method(m);
    if (gap_subcarriers) dual_band_config();
    for (auto g : gap_list) DualBandConfig{fg, N_sub, g, start_index}.validate();
    TargetSet probe;
    for (double t : targets_ns) {
      probe.push_back({(t - delay_jitter_ns / 2) * 1e-9, {}});
      probe.push_back({(t + delay_jitter_ns / 2) * 1e-9, {}});
    }
    validate_targets(fg, probe);
    if (gain_model == "fixed" && fixed_gains.size() != targets_ns.size()) {
      throw ConfigError("fixed_gains needs one entry per target");
    }
    if (L_max && *L_max == 0) throw ConfigError("L_max must be at least 1");
    RelaxConfig{L_max.value_or(1), epsilon, max_refinement_cycles, cycle_tolerance}.validate();
    if (std::isnan(snr_db) || snr_db == -std::numeric_limits<double>::infinity()) throw ConfigError("snr_db must be finite or inf");
    if (profile_tau_min_ns || profile_tau_max_ns) profile_grid();
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::optional<double> to_double(std::string_view s) {
  s = trim(s);
  if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const char* first = s.data();
  if (!s.empty() && s.front() == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

/// "re+imj", "re-imj", "re", "imj".
inline std::optional<cplx> to_complex(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.back() != 'j' && s.back() != 'i') {
    auto re = to_double(s);
    if (!re) return std::nullopt;
    return cplx{*re, 0.0};
  }
  const auto body = s.substr(0, s.size() - 1);
  std::size_t split = std::string_view::npos;
  for (std::size_t i = body.size(); i-- > 1;) {
    if ((body[i] == '+' || body[i] == '-') && body[i - 1] != 'e' && body[i - 1] != 'E') {
      split = i;
      break;
    }
  }
  if (split == std::string_view::npos) {
    auto im = body.empty() || body == "+" ? std::optional<double>(1.0) : body == "-" ? std::optional<double>(-1.0) : to_double(body);
    if (!im) return std::nullopt;
    return cplx{0.0, *im};
  }
  auto re = to_double(body.substr(0, split));
  auto im_text = body.substr(split);
  auto im = im_text == "+" ? std::optional<double>(1.0) : im_text == "-" ? std::optional<double>(-1.0) : to_double(im_text);
  if (!re || !im) return std::nullopt;
  return cplx{*re, *im};
}

inline std::vector<std::string_view> split_list(std::string_view v, std::size_t line, const std::string& key) {
  v = trim(v);
  if (v.size() < 2 || v.front() != '[' || v.back() != ']') throw ParseError(line, key, "expected a list [a, b, ...]");
  v = trim(v.substr(1, v.size() - 2));
  std::vector<std::string_view> items;
  if (v.empty()) return items;
  std::size_t pos = 0;
  while (true) {
    const auto comma = v.find(',', pos);
    items.push_back(trim(v.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos)));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return items;
}

inline std::string unquote(std::string_view v, std::size_t line, const std::string& key) {
  v = trim(v);
  if (v.size() < 2 || v.front() != '"' || v.back() != '"') throw ParseError(line, key, "expected a quoted string");
  return std::string(v.substr(1, v.size() - 2));
}

inline double parse_number(std::string_view v, std::size_t line, const std::string& key) {
  auto d = to_double(v);
  if (!d) throw ParseError(line, key, "expected a number, got '" + std::string(trim(v)) + "'");
  return *d;
}

inline std::uint64_t parse_unsigned(std::string_view v, std::size_t line, const std::string& key) {
  v = trim(v);
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec == std::errc() && ptr == v.data() + v.size() && !v.empty()) return out;
  // Accept integral values written as floats, e.g. 1e3.
  auto d = to_double(v);
  if (d && *d >= 0.0 && std::floor(*d) == *d && *d < 1.8e19) return static_cast<std::uint64_t>(*d);
  throw ParseError(line, key, "expected a non-negative integer, got '" + std::string(v) + "'");
}

// Hz value -> whole number of subcarriers, or error.
inline std::size_t hz_to_subcarriers(double hz, double spacing, std::size_t line, const std::string& key) {
  const double ratio = hz / spacing;
  const double rounded = std::round(ratio);
  if (!(rounded >= 0.0) || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, rounded)) {
    throw ParseError(line, key, "value is not a whole multiple of delta_f_hz");
  }
  return static_cast<std::size_t>(rounded);
}

inline std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

/// Parses and validates a configuration; omitted keys keep their defaults.
/// Hz-valued gap keys are resolved against the final delta_f_hz.
inline RunConfig parse_config(std::string_view text, RunConfig cfg = {}) {
  using namespace detail;
  struct Pending {
    std::size_t line;
    std::string key;
    std::vector<double> hz;
  };
  std::optional<Pending> gap_hz;
  std::optional<Pending> gap_list_hz;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') in_string = !in_string;
      if (line[i] == '#' && !in_string) {
        line = line.substr(0, i);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(line_no, "", "expected 'key = value'");
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view v = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError(line_no, "", "missing key");

    auto number = [&] { return parse_number(v, line_no, key); };
    auto count = [&] { return static_cast<std::size_t>(parse_unsigned(v, line_no, key)); };
    auto text_value = [&] { return unquote(v, line_no, key); };
    auto numbers = [&] {
      std::vector<double> out;
      for (auto item : split_list(v, line_no, key)) out.push_back(parse_number(item, line_no, key));
      return out;
    };

    if (key == "K") cfg.K = count();
    else if (key == "delta_f_hz") cfg.delta_f_hz = number();
    else if (key == "f_carrier_hz") cfg.f_carrier_hz = number();
    else if (key == "N_sub") cfg.N_sub = count();
    else if (key == "gap_subcarriers") {
      cfg.gap_subcarriers = count();
      gap_hz.reset();
    }
    else if (key == "gap_hz") gap_hz = Pending{line_no, key, {number()}};
    else if (key == "start_index") cfg.start_index = count();
    else if (key == "targets_ns") cfg.targets_ns = numbers();
    else if (key == "gain_model") cfg.gain_model = text_value();
    else if (key == "fixed_gains") {
      cfg.fixed_gains.clear();
      for (auto item : split_list(v, line_no, key)) {
        auto z = to_complex(unquote(item, line_no, key));
        if (!z) throw ParseError(line_no, key, "bad complex value " + std::string(item));
        cfg.fixed_gains.push_back(*z);
      }
    } else if (key == "snr_db") cfg.snr_db = number();
    else if (key == "seed") cfg.seed = parse_unsigned(v, line_no, key);
    else if (key == "delay_jitter_ns") cfg.delay_jitter_ns = number();
    else if (key == "method") cfg.method = text_value();
    else if (key == "L_max") cfg.L_max = count();
    else if (key == "epsilon") cfg.epsilon = number();
    else if (key == "osf") cfg.osf = count();
    else if (key == "max_refinement_cycles") cfg.max_refinement_cycles = static_cast<int>(count());
    else if (key == "cycle_tolerance") cfg.cycle_tolerance = number();
    else if (key == "sweep") cfg.sweep = text_value();
    else if (key == "methods") {
      cfg.methods.clear();
      for (auto item : split_list(v, line_no, key)) cfg.methods.push_back(unquote(item, line_no, key));
    } else if (key == "trials") cfg.trials = count();
    else if (key == "snr_list") cfg.snr_list = numbers();
    else if (key == "gap_list") {
      cfg.gap_list.clear();
      for (auto item : split_list(v, line_no, key)) cfg.gap_list.push_back(parse_unsigned(item, line_no, key));
      gap_list_hz.reset();
    } else if (key == "gap_list_hz") gap_list_hz = Pending{line_no, key, numbers()};
    else if (key == "profile_tau_min_ns") cfg.profile_tau_min_ns = number();
    else if (key == "profile_tau_max_ns") cfg.profile_tau_max_ns = number();
    else if (key == "out") cfg.out = text_value();
    else if (key == "format") cfg.format = text_value();
    else throw ParseError(line_no, key, "unknown key");
  }

  if (!(cfg.delta_f_hz > 0.0)) throw ParseError(0, "delta_f_hz", "must be positive");
  if (gap_hz) cfg.gap_subcarriers = hz_to_subcarriers(gap_hz->hz[0], cfg.delta_f_hz, gap_hz->line, gap_hz->key);
  if (gap_list_hz) {
    cfg.gap_list.clear();
    for (double hz : gap_list_hz->hz) {
      cfg.gap_list.push_back(hz_to_subcarriers(hz, cfg.delta_f_hz, gap_list_hz->line, gap_list_hz->key));
    }
  }
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw ParseError(0, "", e.what());
  }
  return cfg;
}

/// Every key, in a form parse_config reads back to an equal RunConfig.
inline std::string dump_config(const RunConfig& c) {
  using detail::num;
  std::ostringstream os;
  auto list = [](const auto& xs, auto fmt) {
    std::string s = "[";
    for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? ", " : "") + fmt(xs[i]);
    return s + "]";
  };
  auto quoted = [](const std::string& s) { return "\"" + s + "\""; };
  os << "K = " << c.K << '\n';
  os << "delta_f_hz = " << num(c.delta_f_hz) << '\n';
  os << "f_carrier_hz = " << num(c.f_carrier_hz) << '\n';
  os << "N_sub = " << c.N_sub << '\n';
  if (c.gap_subcarriers) os << "gap_subcarriers = " << *c.gap_subcarriers << '\n';
  os << "start_index = " << c.start_index << '\n';
  os << "targets_ns = " << list(c.targets_ns, num) << '\n';
  os << "gain_model = " << quoted(c.gain_model) << '\n';
  os << "fixed_gains = "
     << list(c.fixed_gains, [](cplx z) {
          std::string im = num(z.imag());
          if (im.front() != '-') im = "+" + im;
          return "\"" + num(z.real()) + im + "j\"";
        })
     << '\n';
  os << "snr_db = " << num(c.snr_db) << '\n';
  os << "seed = " << c.seed << '\n';
  os << "delay_jitter_ns = " << num(c.delay_jitter_ns) << '\n';
  os << "method = " << quoted(c.method) << '\n';
  if (c.L_max) os << "L_max = " << *c.L_max << '\n';
  os << "epsilon = " << num(c.epsilon) << '\n';
  os << "osf = " << c.osf << '\n';
  os << "max_refinement_cycles = " << c.max_refinement_cycles << '\n';
  os << "cycle_tolerance = " << num(c.cycle_tolerance) << '\n';
  os << "sweep = " << quoted(c.sweep) << '\n';
  os << "methods = " << list(c.methods, quoted) << '\n';
  os << "trials = " << c.trials << '\n';
  os << "snr_list = " << list(c.snr_list, num) << '\n';
  os << "gap_list = " << list(c.gap_list, [](std::size_t g) { return std::to_string(g); }) << '\n';
  if (c.profile_tau_min_ns) os << "profile_tau_min_ns = " << num(*c.profile_tau_min_ns) << '\n';
  if (c.profile_tau_max_ns) os << "profile_tau_max_ns = " << num(*c.profile_tau_max_ns) << '\n';
  os << "out = " << quoted(c.out) << '\n';
  os << "format = " << quoted(c.format) << '\n';
  return os.str();
}

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"fig4", "fig5", "fig6", "fig7"};
  return names;
}

/// Named experiment setups.
inline RunConfig preset(std::string_view name) {
  RunConfig c;
  if (name == "fig4") {
    // Single target versus SNR for 40/120/280 MHz center gaps, unit gain,
    // delay jittered per trial so grid alignment does not bias the RMSE.
    c.targets_ns = {66.0};
    c.gain_model = "fixed";
    c.fixed_gains = {cplx{1.0, 0.0}};
    c.delay_jitter_ns = 1.0;
    c.method = "mle";
    c.osf = 256;
    c.sweep = "snr";
    c.gap_list = {128, 384, 896};
    c.gap_subcarriers = 896;
  } else if (name == "fig5") {
    c.gap_subcarriers = 896;
    c.snr_db = std::numeric_limits<double>::infinity();
    c.method = "relax";
    c.profile_tau_max_ns = 300.0;
  } else if (name == "fig6") {
    c.gap_subcarriers = 896;
    c.sweep = "snr";
    c.methods = {"relax", "omp"};
  } else if (name == "fig7") {
    c.gap_subcarriers = 896;
    c.sweep = "gap";
    c.method = "relax";
    c.gap_list = {128, 256, 384, 512, 640, 768, 896};
    c.snr_list = {5.0, 15.0};
  } else {
    throw ConfigError("unknown preset '" + std::string(name) + "' (expected fig4, fig5, fig6 or fig7)");
  }
  c.validate();
  return c;
}

}  // namespace dualband::cli
