/**
 * @file channel.hpp
 * @brief Multi-target channel frequency responses, AWGN and per-trial scenario draws.
 *
 * Randomness is always explicit: callers pass an Rng, and Monte-Carlo trials
 * derive theirs from (master seed, axis index, trial index) through trial_rng(),
 * so a trial's data never depends on execution order or thread count.
 */
#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dualband/detail/phase.hpp"
#include "dualband/freqgrid.hpp"

namespace dualband {

using cplx = std::complex<double>;
using Rng = std::mt19937_64;

struct Target {
  double delay_s = 0.0;
  cplx gain{1.0, 0.0};

  bool operator==(const Target&) const = default;
};

using TargetSet = std::vector<Target>;

/// Noisy or noiseless CFR samples on the active subcarriers, in ascending index order.
struct MeasurementVector {
  SubcarrierSelection selection;
  std::vector<cplx> samples;
  double noise_variance = 0.0;
};

/// Positive infinity means "no noise".
inline constexpr double kNoiseFreeSnrDb = std::numeric_limits<double>::infinity();

inline bool is_noise_free(double snr_db) { return std::isinf(snr_db) && snr_db > 0.0; }

/// Per-subcarrier noise variance for unit average target power.
inline double noise_variance_for_snr(double snr_db) {
  if (is_noise_free(snr_db)) return 0.0;
  return std::pow(10.0, -snr_db / 10.0);
}

/// Deterministic generator for one Monte-Carlo trial.
inline Rng trial_rng(std::uint64_t master_seed, std::uint64_t axis_index, std::uint64_t trial_index) {
  auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffu); };
  auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
  std::seed_seq seq{lo(master_seed), hi(master_seed), lo(axis_index),
                    hi(axis_index),  lo(trial_index), hi(trial_index)};
  return Rng(seq);
}

inline void validate_targets(const FrequencyGrid& grid, std::span<const Target> targets) {
  const double limit = grid.unambiguous_delay_s();
  for (const auto& t : targets) {
    if (!(t.delay_s >= 0.0) || !(t.delay_s < limit)) {
      throw ConfigError("target delay " + std::to_string(t.delay_s * 1e9) +
                        " ns outside the unambiguous range [0, " + std::to_string(limit * 1e9) + ") ns");
    }
    // Guard against delays that round onto the alias boundary on the grid.
    const double cycles = t.delay_s * grid.spacing_hz();
    if (cycles >= 1.0) throw ConfigError("target delay aliases: tau * delta_f >= 1");
  }
}

/// H[k] = W[k] * sum_l alpha_l exp(-j 2 pi k df tau_l) on the full K-point grid.
inline std::vector<cplx> synth_cfr(const SubcarrierSelection& sel, std::span<const Target> targets) {
  const auto& grid = sel.grid();
  validate_targets(grid, targets);
  std::vector<cplx> cfr(grid.size(), cplx{0.0, 0.0});
  for (auto k : sel.indices()) {
    cplx acc{0.0, 0.0};
    for (const auto& t : targets) acc += t.gain * detail::phase_ramp(k, grid.spacing_hz(), t.delay_s);
    cfr[k] = acc;
  }
  return cfr;
}

inline MeasurementVector measurement(const SubcarrierSelection& sel, std::span<const Target> targets) {
  auto cfr = synth_cfr(sel, targets);
  std::vector<cplx> y;
  y.reserve(sel.count());
  for (auto k : sel.indices()) y.push_back(cfr[k]);
  return {sel, std::move(y), 0.0};
}

/// Adds CN(0, sigma^2) noise to every sample, sigma^2 = 10^(-snr_db/10).
inline MeasurementVector add_awgn(MeasurementVector m, double snr_db, Rng& rng) {
  if (std::isnan(snr_db) || (std::isinf(snr_db) && snr_db < 0.0)) throw ConfigError("snr_db must be finite or +inf");
  const double variance = noise_variance_for_snr(snr_db);
  m.noise_variance = variance;
  if (variance == 0.0) return m;
  std::normal_distribution<double> normal(0.0, std::sqrt(variance / 2.0));
  for (auto& s : m.samples) {
    const double re = normal(rng);
    const double im = normal(rng);
    s += cplx{re, im};
  }
  return m;
}

/// i.i.d. CN(0, 1) gains; magnitudes are Rayleigh distributed.
inline std::vector<cplx> draw_gains(std::size_t count, Rng& rng) {
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  std::vector<cplx> gains;
  gains.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double re = normal(rng);
    const double im = normal(rng);
    gains.emplace_back(re, im);
  }
  return gains;
}

enum class GainModel { kRayleigh, kFixed };

struct ScenarioSpec {
  SubcarrierSelection selection;
  std::vector<double> delays_s;
  GainModel gain_model = GainModel::kRayleigh;
  std::vector<cplx> fixed_gains;  // used when gain_model == kFixed
  double snr_db = 20.0;
  std::uint64_t seed = 1;
  /// Full width of a per-trial uniform perturbation of every delay; 0 keeps delays fixed.
  double delay_jitter_s = 0.0;

  void validate() const {
    if (std::isnan(snr_db) || (std::isinf(snr_db) && snr_db < 0.0)) throw ConfigError("snr_db must be finite or +inf");
    if (gain_model == GainModel::kFixed && fixed_gains.size() != delays_s.size()) {
      throw ConfigError("fixed gain model needs one gain per target (" + std::to_string(delays_s.size()) +
                        "), got " + std::to_string(fixed_gains.size()));
    }
    if (delay_jitter_s < 0.0) throw ConfigError("delay jitter must be non-negative");
    TargetSet probe;
    for (double d : delays_s) {
      probe.push_back({d - delay_jitter_s / 2.0, {1.0, 0.0}});
      probe.push_back({d + delay_jitter_s / 2.0, {1.0, 0.0}});
    }
    validate_targets(selection.grid(), probe);
  }
};

struct Trial {
  TargetSet truth;
  MeasurementVector y;
};

/// One realization of a scenario at the given SNR. Draw order is fixed:
/// delay jitter (if any), then gains (if Rayleigh), then noise.
inline Trial draw_trial(const ScenarioSpec& spec, double snr_db, std::uint64_t axis_index, std::uint64_t trial_index) {
  Rng rng = trial_rng(spec.seed, axis_index, trial_index);
  TargetSet truth;
  truth.reserve(spec.delays_s.size());
  std::uniform_real_distribution<double> jitter(-0.5, 0.5);
  for (double d : spec.delays_s) {
    const double delay = spec.delay_jitter_s > 0.0 ? d + spec.delay_jitter_s * jitter(rng) : d;
    truth.push_back({delay, {1.0, 0.0}});
  }
  if (spec.gain_model == GainModel::kRayleigh) {
    auto gains = draw_gains(truth.size(), rng);
    for (std::size_t i = 0; i < truth.size(); ++i) truth[i].gain = gains[i];
  } else {
    for (std::size_t i = 0; i < truth.size(); ++i) truth[i].gain = spec.fixed_gains.at(i);
  }
  auto y = add_awgn(measurement(spec.selection, truth), snr_db, rng);
  return {std::move(truth), std::move(y)};
}

}  // namespace dualband
