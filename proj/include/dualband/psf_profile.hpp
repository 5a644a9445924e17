/**
 * @file psf_profile.hpp
 * @brief Delay profiles, the point-spread function induced by a subcarrier
 *        selection, its dual-band factorization, shape metrics, and full-band
 *        reconstruction from delay estimates.
 *
 * Profiles are evaluated pointwise from the exponential sums, so any delay
 * step is allowed. Normalization is 1/K throughout (not 1/M), so p(0) = M/K.
 */
#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dualband/channel.hpp"
#include "dualband/detail/phase.hpp"
#include "dualband/freqgrid.hpp"

namespace dualband {

/// Uniform delay grid tau_j = tau_min + j * step, j < points().
class DelayGrid {
 public:
  DelayGrid(double tau_min_s, double tau_max_s, double step_s) : tau_min_(tau_min_s), tau_max_(tau_max_s), step_(step_s) {
    if (!(tau_min_s >= 0.0) || !(tau_max_s > tau_min_s)) throw ConfigError("delay grid needs 0 <= tau_min < tau_max");
    if (!(step_s > 0.0)) throw ConfigError("delay grid step must be positive");
    // Tolerate representation error when tau_max is meant to be an exact grid point.
    points_ = static_cast<std::size_t>(std::floor((tau_max_ - tau_min_) / step_ + 1e-9)) + 1;
  }

  /// [0, 1/df) sampled at step 1/(osf * K * df).
  static DelayGrid oversampled(const FrequencyGrid& grid, std::size_t osf) {
    if (osf == 0) throw ConfigError("oversampling factor must be positive");
    const double step = 1.0 / (static_cast<double>(osf) * grid.span_hz());
    const auto count = osf * grid.size();
    return DelayGrid(0.0, step * static_cast<double>(count - 1), step);
  }

  /// Checks tau_max against the unambiguous range of a frequency grid.
  void validate_for(const FrequencyGrid& grid) const {
    const double limit = grid.unambiguous_delay_s();
    if (tau_max_ > limit * (1.0 + 1e-12)) {
      throw ConfigError("delay grid exceeds the unambiguous range 1/delta_f = " + std::to_string(limit * 1e9) + " ns");
    }
  }

  double tau_min() const noexcept { return tau_min_; }
  double tau_max() const noexcept { return tau_max_; }
  double step() const noexcept { return step_; }
  std::size_t points() const noexcept { return points_; }
  double at(std::size_t j) const noexcept { return tau_min_ + static_cast<double>(j) * step_; }

  bool operator==(const DelayGrid&) const = default;

 private:
  double tau_min_;
  double tau_max_;
  double step_;
  std::size_t points_ = 0;
};

struct DelayProfile {
  DelayGrid grid;
  std::vector<cplx> values;
};

struct PsfMetrics {
  double mainlobe_first_null_s = 0.0;
  double peak_sidelobe_level_db = 0.0;
  double highest_sidelobe_delay_s = 0.0;
};

/// Raised when a sampled profile is too coarse or too short to characterize.
class MetricsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

// (1/K) sum_i coeff_i exp(+j 2 pi k_i df tau) at every grid point.
inline std::vector<cplx> exp_sum(std::span<const std::size_t> indices, std::span<const cplx> coeffs,
                                 const FrequencyGrid& fgrid, const DelayGrid& dgrid) {
  const double scale = 1.0 / static_cast<double>(fgrid.size());
  std::vector<cplx> out(dgrid.points());
  for (std::size_t j = 0; j < out.size(); ++j) {
    const double tau = dgrid.at(j);
    cplx acc{0.0, 0.0};
    for (std::size_t i = 0; i < indices.size(); ++i) {
      acc += coeffs[i] * unit_phasor(static_cast<double>(indices[i]) * fgrid.spacing_hz() * tau);
    }
    out[j] = acc * scale;
  }
  return out;
}

}  // namespace detail

/// h(tau) = (1/K) sum_k H[k] exp(+j 2 pi k df tau) for a CFR on the full K-point grid.
inline DelayProfile delay_profile(std::span<const cplx> cfr, const FrequencyGrid& fgrid, const DelayGrid& dgrid) {
  if (cfr.size() != fgrid.size()) {
    throw std::invalid_argument("CFR length " + std::to_string(cfr.size()) + " does not match grid size " +
                                std::to_string(fgrid.size()));
  }
  std::vector<std::size_t> idx;
  std::vector<cplx> coeffs;
  for (std::size_t k = 0; k < cfr.size(); ++k) {
    if (cfr[k] != cplx{0.0, 0.0}) {
      idx.push_back(k);
      coeffs.push_back(cfr[k]);
    }
  }
  return {dgrid, detail::exp_sum(idx, coeffs, fgrid, dgrid)};
}

inline DelayProfile psf(const SubcarrierSelection& sel, const DelayGrid& dgrid) {
  std::vector<cplx> ones(sel.count(), cplx{1.0, 0.0});
  return {dgrid, detail::exp_sum(sel.indices(), ones, sel.grid(), dgrid)};
}

/// Envelope-times-modulation form of the dual-band PSF:
/// (1 + e^{j 2 pi f_gap tau}) * (1/K) sum_{m<N} e^{j 2 pi m df tau}, times the
/// start-offset ramp e^{j 2 pi start df tau}.
inline DelayProfile psf_dualband_closed_form(const DualBandConfig& cfg, const DelayGrid& dgrid) {
  cfg.validate();
  const double df = cfg.grid.spacing_hz();
  const double scale = 1.0 / static_cast<double>(cfg.grid.size());
  std::vector<cplx> out(dgrid.points());
  for (std::size_t j = 0; j < out.size(); ++j) {
    const double tau = dgrid.at(j);
    cplx envelope{0.0, 0.0};
    for (std::size_t m = 0; m < cfg.subband_size; ++m) {
      envelope += detail::unit_phasor(static_cast<double>(m) * df * tau);
    }
    const cplx modulation = 1.0 + detail::unit_phasor(static_cast<double>(cfg.gap) * df * tau);
    const cplx offset = detail::unit_phasor(static_cast<double>(cfg.start) * df * tau);
    out[j] = modulation * envelope * scale * offset;
  }
  return {dgrid, std::move(out)};
}

/// Mainlobe width and peak sidelobe level of a sampled PSF.
///
/// The mainlobe is centered on the grid point nearest tau = 0 (modulo the
/// alias period 1/df) and ends at the first local minimum of |p| moving to
/// larger delays. Everything whose periodic distance from 0 is at least that
/// far is sidelobe region; |p| is assumed symmetric about 0.
inline PsfMetrics psf_metrics(const DelayProfile& p, const FrequencyGrid& fgrid) {
  const auto& g = p.grid;
  const std::size_t n = p.values.size();
  const double period = fgrid.unambiguous_delay_s();
  auto periodic_distance = [&](double tau) {
    double r = std::fmod(tau, period);
    if (r < 0) r += period;
    return std::min(r, period - r);
  };

  std::size_t center = n;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n; ++j) {
    const double d = periodic_distance(g.at(j));
    if (d < best) {
      best = d;
      center = j;
    }
  }
  if (center == n || best > 0.5 * g.step()) throw MetricsError("profile grid does not sample tau = 0");
  const double peak = std::abs(p.values[center]);
  if (!(peak > 0.0)) throw MetricsError("profile has zero magnitude at tau = 0");

  std::size_t null_index = n;
  for (std::size_t j = center + 1; j + 1 < n; ++j) {
    const double here = std::abs(p.values[j]);
    if (here <= std::abs(p.values[j - 1]) && here < std::abs(p.values[j + 1])) {
      null_index = j;
      break;
    }
  }
  if (null_index == n) throw MetricsError("no local minimum after the mainlobe peak; grid too coarse or too short");

  PsfMetrics m;
  m.mainlobe_first_null_s = g.at(null_index) - g.at(center);
  double side_peak = -1.0;
  const double edge = m.mainlobe_first_null_s * (1.0 - 1e-9);
  for (std::size_t j = 0; j < n; ++j) {
    if (periodic_distance(g.at(j)) < edge) continue;
    const double mag = std::abs(p.values[j]);
    if (mag > side_peak) {
      side_peak = mag;
      m.highest_sidelobe_delay_s = g.at(j);
    }
  }
  if (side_peak < 0.0) throw MetricsError("profile grid does not extend past the mainlobe");
  m.peak_sidelobe_level_db = side_peak > 0.0 ? 20.0 * std::log10(side_peak / peak)
                                             : -std::numeric_limits<double>::infinity();
  return m;
}

/// Full-band response sum_l alpha_l b(tau_l) over k = 0..K-1.
inline std::vector<cplx> reconstruct_full_band(std::span<const Target> estimates, const FrequencyGrid& fgrid) {
  std::vector<cplx> out(fgrid.size(), cplx{0.0, 0.0});
  for (std::size_t k = 0; k < out.size(); ++k) {
    cplx acc{0.0, 0.0};
    for (const auto& e : estimates) acc += e.gain * detail::phase_ramp(k, fgrid.spacing_hz(), e.delay_s);
    out[k] = acc;
  }
  return out;
}

}  // namespace dualband
