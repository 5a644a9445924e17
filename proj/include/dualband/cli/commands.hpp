/**
 * @file commands.hpp
 * @brief The psf / profile / estimate / sweep subcommands as stream writers.
 *
 * CSV dialect: comma separated, one header row, LF line endings, floats with
 * 9 significant digits. Delays are written in nanoseconds.
 */
#pragma once

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "dualband/channel.hpp"
#include "dualband/cli/config.hpp"
#include "dualband/estimators.hpp"
#include "dualband/evaluation.hpp"
#include "dualband/psf_profile.hpp"

namespace dualband::cli {

inline std::string fmt9(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

inline void write_profile_csv(std::ostream& os, const DelayProfile& p) {
  double peak = 0.0;
  for (const auto& v : p.values) peak = std::max(peak, std::abs(v));
  os << "tau_ns,re,im,mag,mag_db_rel_peak\n";
  for (std::size_t j = 0; j < p.values.size(); ++j) {
    const auto v = p.values[j];
    const double mag = std::abs(v);
    const double db = peak > 0.0 ? 20.0 * std::log10(mag / peak) : -std::numeric_limits<double>::infinity();
    os << fmt9(p.grid.at(j) * 1e9) << ',' << fmt9(v.real()) << ',' << fmt9(v.imag()) << ',' << fmt9(mag) << ','
       << fmt9(db) << '\n';
  }
}

inline void write_scf_csv(std::ostream& os, const SubcarrierSelection& sel) {
  os << "index,W\n";
  const auto w = sel.mask();
  for (std::size_t k = 0; k < w.size(); ++k) os << k << ',' << int(w[k]) << '\n';
}

inline void write_metrics_csv(std::ostream& os, const PsfMetrics& m) {
  os << "first_null_ns,psl_db,psl_tau_ns\n";
  os << fmt9(m.mainlobe_first_null_s * 1e9) << ',' << fmt9(m.peak_sidelobe_level_db) << ','
     << fmt9(m.highest_sidelobe_delay_s * 1e9) << '\n';
}

/// PSF of the configured dual-band layout; with `metrics`, a blank line and a
/// one-row metrics CSV follow. The SCF goes to `scf_out` when given.
inline void cmd_psf(const RunConfig& cfg, std::ostream& os, bool metrics, std::ostream* scf_out = nullptr) {
  const auto sel = dual_band(cfg.dual_band_config());
  const auto profile = psf(sel, cfg.profile_grid());
  if (scf_out != nullptr) write_scf_csv(*scf_out, sel);
  write_profile_csv(os, profile);
  if (metrics) {
    os << '\n';
    write_metrics_csv(os, psf_metrics(profile, sel.grid()));
  }
}

/// Delay profile of one seeded (possibly noisy) measurement of the scenario.
inline void cmd_profile(const RunConfig& cfg, std::ostream& os) {
  const auto scenario = cfg.scenario();
  const auto trial = draw_trial(scenario, cfg.snr_db, 0, 0);
  std::vector<cplx> cfr(scenario.selection.grid().size(), cplx{0.0, 0.0});
  const auto idx = scenario.selection.indices();
  for (std::size_t m = 0; m < idx.size(); ++m) cfr[idx[m]] = trial.y.samples[m];
  write_profile_csv(os, delay_profile(cfr, scenario.selection.grid(), cfg.profile_grid()));
}

struct EstimateOutputs {
  std::ostream* raw_profile = nullptr;            // IDFT profile of the measurement
  std::ostream* reconstructed_profile = nullptr;  // IDFT of the full-band reconstruction
};

/// One seeded trial through the configured estimator. MLE on a multi-target
/// scene deliberately returns a single component (model mismatch).
inline EstimateSet cmd_estimate(const RunConfig& cfg, std::ostream& os, const EstimateOutputs& extra = {}) {
  const auto scenario = cfg.scenario();
  const auto method = parse_method(cfg.method);
  const auto trial = draw_trial(scenario, cfg.snr_db, 0, 0);
  const auto& fg = scenario.selection.grid();
  const SteeringOperator op(scenario.selection, DelayGrid::oversampled(fg, cfg.osf));
  const auto est = run_estimator(method, trial.y, op, cfg.estimator(), scenario.delays_s.size());

  os << "component_index,tau_ns,alpha_re,alpha_im,residual_energy,cycles,converged\n";
  for (std::size_t i = 0; i < est.components.size(); ++i) {
    const auto& c = est.components[i];
    os << i << ',' << fmt9(c.delay_s * 1e9) << ',' << fmt9(c.gain.real()) << ',' << fmt9(c.gain.imag()) << ','
       << fmt9(est.residual_energy) << ',' << est.cycles_used << ',' << (est.converged ? "true" : "false") << '\n';
  }

  if (extra.raw_profile != nullptr || extra.reconstructed_profile != nullptr) {
    const auto grid = cfg.profile_grid();
    if (extra.raw_profile != nullptr) {
      std::vector<cplx> cfr(fg.size(), cplx{0.0, 0.0});
      const auto idx = scenario.selection.indices();
      for (std::size_t m = 0; m < idx.size(); ++m) cfr[idx[m]] = trial.y.samples[m];
      write_profile_csv(*extra.raw_profile, delay_profile(cfr, fg, grid));
    }
    if (extra.reconstructed_profile != nullptr) {
      write_profile_csv(*extra.reconstructed_profile, delay_profile(reconstruct_full_band(est, fg), fg, grid));
    }
  }
  return est;
}

inline void write_snr_sweep_csv(std::ostream& os, const SweepResult& r, bool with_gap) {
  if (with_gap) os << "gap_mhz,";
  os << "snr_db,method,rmse_ns,crb_std_ns,trials\n";
  for (const auto& p : r.points) {
    if (with_gap) os << fmt9(p.gap_hz.value_or(0.0) / 1e6) << ',';
    os << fmt9(p.snr_db) << ',' << method_name(p.method) << ',' << fmt9(p.rmse_s * 1e9) << ','
       << (p.crb_std_s ? fmt9(*p.crb_std_s * 1e9) : std::string()) << ',' << p.trials << '\n';
  }
}

inline void write_gap_sweep_csv(std::ostream& os, const SweepResult& r) {
  os << "gap_mhz,snr_db,method,rmse_ns,trials\n";
  for (const auto& p : r.points) {
    os << fmt9(p.gap_hz.value_or(0.0) / 1e6) << ',' << fmt9(p.snr_db) << ',' << method_name(p.method) << ','
       << fmt9(p.rmse_s * 1e9) << ',' << p.trials << '\n';
  }
}

/// SNR sweep (one selection, or one block per entry of gap_list with a
/// leading gap_mhz column) or gap sweep, per `sweep`.
inline SweepResult cmd_sweep(const RunConfig& cfg, std::ostream& os, unsigned threads = default_thread_count()) {
  const auto settings = cfg.estimator();
  if (cfg.sweep == "gap") {
    if (cfg.gap_list.empty()) throw ConfigError("gap sweeps need a non-empty gap_list");
    auto base_cfg = cfg;
    if (!base_cfg.gap_subcarriers) base_cfg.gap_subcarriers = cfg.gap_list.front();
    const auto scenario = base_cfg.scenario();
    const auto methods = cfg.sweep_methods();
    SweepResult all;
    for (auto m : methods) {
      auto r = sweep_gap(scenario, base_cfg.dual_band_config(), m, cfg.gap_list, cfg.snr_list, cfg.trials, cfg.seed,
                         settings, threads);
      all.points.insert(all.points.end(), r.points.begin(), r.points.end());
    }
    write_gap_sweep_csv(os, all);
    return all;
  }

  const auto methods = cfg.sweep_methods();
  if (cfg.gap_list.empty()) {
    const auto r = sweep_snr(cfg.scenario(), methods, cfg.snr_list, cfg.trials, cfg.seed, settings, threads);
    write_snr_sweep_csv(os, r, false);
    return r;
  }
  SweepResult all;
  for (auto g : cfg.gap_list) {
    auto per_gap = cfg;
    per_gap.gap_subcarriers = g;
    auto r = sweep_snr(per_gap.scenario(), methods, cfg.snr_list, cfg.trials, cfg.seed, settings, threads);
    for (auto& p : r.points) p.gap_hz = per_gap.dual_band_config().gap_hz();
    all.points.insert(all.points.end(), r.points.begin(), r.points.end());
  }
  write_snr_sweep_csv(os, all, true);
  return all;
}

}  // namespace dualband::cli
