/**
 * @file estimators.hpp
 * @brief Grid-based delay estimators on fragmented-spectrum measurements:
 *        matched-filter acquisition, RELAX, orthogonal matching pursuit and the
 *        single-target ML estimator.
 *
 * All estimators search the delay grid of a SteeringOperator and never
 * refine off-grid, so every returned delay is exactly a grid point.
 */
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dualband/channel.hpp"
#include "dualband/detail/fft.hpp"
#include "dualband/detail/phase.hpp"
#include "dualband/freqgrid.hpp"
#include "dualband/psf_profile.hpp"

namespace dualband {

using Component = Target;

struct EstimateSet {
  std::vector<Component> components;
  double residual_energy = 0.0;
  int cycles_used = 0;
  bool converged = true;
  /// Global residual energy after every single-target update (acquisitions included).
  std::vector<double> residual_trace;
};

struct RelaxConfig {
  std::size_t max_targets = 1;
  double epsilon = 0.0;
  int max_refinement_cycles = 20;
  /// Refinement stops once a cycle lowers the residual energy by at most this fraction of ||y||^2.
  double cycle_tolerance = 1e-8;

  void validate() const {
    if (max_targets < 1) throw ConfigError("L_max must be at least 1");
    if (max_refinement_cycles < 1) throw ConfigError("max_refinement_cycles must be at least 1");
    if (!(epsilon >= 0.0)) throw ConfigError("epsilon must be non-negative");
    if (!(cycle_tolerance >= 0.0)) throw ConfigError("cycle_tolerance must be non-negative");
  }
};

/// Steering vectors a_S(tau) = [exp(-j 2 pi k df tau)]_{k in S} and their
/// correlation a_S(tau)^H r over a delay search grid.
///
/// When the grid step is 1/(P df) for an integer P and tau_min is a multiple
/// of the step, correlations are computed with one length-P inverse FFT of the
/// (index-folded) residual; otherwise they are evaluated pointwise.
class SteeringOperator {
 public:
  SteeringOperator(SubcarrierSelection sel, DelayGrid search_grid)
      : sel_(std::move(sel)), grid_(search_grid) {
    grid_.validate_for(sel_.grid());
    const double periods = 1.0 / (grid_.step() * sel_.grid().spacing_hz());
    const double p = std::round(periods);
    const double offset = std::round(grid_.tau_min() / grid_.step());
    if (p >= 1.0 && p <= double(1u << 26) && std::abs(periods - p) <= 1e-9 * p &&
        std::abs(grid_.tau_min() / grid_.step() - offset) <= 1e-9 * std::max(1.0, offset)) {
      fft_size_ = static_cast<std::size_t>(p);
      fft_offset_ = static_cast<std::size_t>(offset);
    }
  }

  const SubcarrierSelection& selection() const noexcept { return sel_; }
  const DelayGrid& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return sel_.count(); }
  bool uses_fft() const noexcept { return fft_size_ != 0; }
  double delay_at(std::size_t j) const noexcept { return grid_.at(j); }

  std::vector<cplx> steering(double delay_s) const {
    std::vector<cplx> a;
    a.reserve(sel_.count());
    for (auto k : sel_.indices()) a.push_back(detail::phase_ramp(k, sel_.grid().spacing_hz(), delay_s));
    return a;
  }

  /// c(tau_j) = a_S(tau_j)^H r for every search grid point.
  std::vector<cplx> correlate(std::span<const cplx> r) const {
    std::vector<cplx> out(grid_.points());
    if (uses_fft()) {
      const auto& buf = fft_correlation(r);
      for (std::size_t j = 0; j < out.size(); ++j) out[j] = buf[(fft_offset_ + j) % fft_size_];
      return out;
    }
    check_length(r);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = correlate_at(r, grid_.at(j));
    return out;
  }

  struct Peak {
    std::size_t index;
    cplx value;
  };

  /// Grid point of largest |a_S(tau)^H r| and its correlation value. Exact
  /// magnitude ties resolve to the smallest delay; flagged points are skipped.
  Peak peak(std::span<const cplx> r, std::span<const std::uint8_t> excluded = {}) const {
    std::size_t best = grid_.points();
    double best_mag = -1.0;
    cplx best_value{0.0, 0.0};
    auto visit = [&](std::size_t j, cplx v) {
      if (!excluded.empty() && excluded[j]) return;
      const double mag = std::norm(v);
      if (mag > best_mag) {
        best_mag = mag;
        best = j;
        best_value = v;
      }
    };
    if (uses_fft()) {
      const auto& buf = fft_correlation(r);
      for (std::size_t j = 0; j < grid_.points(); ++j) visit(j, buf[(fft_offset_ + j) % fft_size_]);
    } else {
      check_length(r);
      for (std::size_t j = 0; j < grid_.points(); ++j) visit(j, correlate_at(r, grid_.at(j)));
    }
    if (best == grid_.points()) throw std::invalid_argument("every search grid point is excluded");
    return {best, best_value};
  }

 private:
  void check_length(std::span<const cplx> r) const {
    if (r.size() != sel_.count()) {
      throw std::invalid_argument("residual length " + std::to_string(r.size()) + " != M = " +
                                  std::to_string(sel_.count()));
    }
  }

  cplx correlate_at(std::span<const cplx> r, double tau) const {
    const auto idx = sel_.indices();
    const double df = sel_.grid().spacing_hz();
    cplx acc{0.0, 0.0};
    for (std::size_t m = 0; m < idx.size(); ++m) {
      acc += detail::unit_phasor(static_cast<double>(idx[m]) * df * tau) * r[m];
    }
    return acc;
  }

  // Length-P inverse DFT of the index-folded residual, in a per-thread scratch buffer.
  const std::vector<cplx>& fft_correlation(std::span<const cplx> r) const {
    check_length(r);
    thread_local std::vector<cplx> buf;
    buf.assign(fft_size_, cplx{0.0, 0.0});
    const auto idx = sel_.indices();
    for (std::size_t m = 0; m < idx.size(); ++m) buf[idx[m] % fft_size_] += r[m];
    detail::inverse_dft_inplace(buf);
    return buf;
  }

  SubcarrierSelection sel_;
  DelayGrid grid_;
  std::size_t fft_size_ = 0;
  std::size_t fft_offset_ = 0;
};

namespace detail {

inline std::vector<cplx> model_residual(std::span<const cplx> y, const SteeringOperator& op,
                                        std::span<const Component> comps, std::size_t skip = SIZE_MAX) {
  std::vector<cplx> r(y.begin(), y.end());
  for (std::size_t p = 0; p < comps.size(); ++p) {
    if (p == skip) continue;
    const auto a = op.steering(comps[p].delay_s);
    for (std::size_t m = 0; m < r.size(); ++m) r[m] -= comps[p].gain * a[m];
  }
  return r;
}

inline double energy(std::span<const cplx> v) {
  double e = 0.0;
  for (const auto& x : v) e += std::norm(x);
  return e;
}

}  // namespace detail

/// ||y - sum_l alpha_l a_S(tau_l)||^2, the ML objective under white Gaussian noise.
inline double ml_objective(std::span<const cplx> y, const SteeringOperator& op, std::span<const Component> comps) {
  return detail::energy(detail::model_residual(y, op, comps));
}

inline std::vector<cplx> correlate(const SteeringOperator& op, std::span<const cplx> r) { return op.correlate(r); }

/// Matched-filter peak over the grid followed by the single-atom least-squares gain.
inline Component acquire(const SteeringOperator& op, std::span<const cplx> r) {
  const auto p = op.peak(r);
  // ||a_S(tau)||^2 = M exactly.
  return {op.delay_at(p.index), p.value / static_cast<double>(op.size())};
}

inline Component mle_single(const MeasurementVector& y, const SteeringOperator& op) {
  return acquire(op, y.samples);
}

inline void check_measurement(const MeasurementVector& y, const SteeringOperator& op) {
  if (!(y.selection == op.selection())) throw std::invalid_argument("measurement selection differs from the steering operator's");
}

/// RELAX: add one component at a time by matched-filter acquisition on the
/// global residual, then cyclically re-fit every component against the data
/// with all others removed, until a cycle no longer lowers the residual.
inline EstimateSet relax(const MeasurementVector& y, const RelaxConfig& cfg, const SteeringOperator& op) {
  cfg.validate();
  check_measurement(y, op);
  const auto& data = y.samples;
  const double data_energy = detail::energy(data);

  EstimateSet out;
  std::vector<cplx> residual(data.begin(), data.end());
  while (true) {
    out.components.push_back(acquire(op, residual));
    double current = ml_objective(data, op, out.components);
    out.residual_trace.push_back(current);

    bool settled = false;
    for (int cycle = 1; cycle <= cfg.max_refinement_cycles; ++cycle) {
      const double before = current;
      for (std::size_t l = 0; l < out.components.size(); ++l) {
        const auto others_removed = detail::model_residual(data, op, out.components, l);
        out.components[l] = acquire(op, others_removed);
        current = ml_objective(data, op, out.components);
        out.residual_trace.push_back(current);
      }
      ++out.cycles_used;
      if (before - current <= cfg.cycle_tolerance * data_energy) {
        settled = true;
        break;
      }
    }
    if (!settled) out.converged = false;

    residual = detail::model_residual(data, op, out.components);
    out.residual_energy = detail::energy(residual);
    if (out.residual_energy <= cfg.epsilon || out.components.size() >= cfg.max_targets) break;
  }
  return out;
}

/// Orthogonal matching pursuit: greedy atom selection with a joint
/// least-squares re-fit of every selected gain after each pick. A grid point
/// is never selected twice.
inline EstimateSet omp(const MeasurementVector& y, std::size_t max_atoms, const SteeringOperator& op) {
  check_measurement(y, op);
  if (max_atoms < 1 || max_atoms > op.size() || max_atoms > op.grid().points()) {
    throw ConfigError("OMP atom count must be in [1, min(M, grid points)]");
  }
  const auto& data = y.samples;
  const auto data_corr = op.correlate(data);  // a^H y for the LS right-hand side
  const double m = static_cast<double>(op.size());

  EstimateSet out;
  std::vector<std::size_t> picked;
  std::vector<std::vector<cplx>> atoms;
  std::vector<std::uint8_t> taken(op.grid().points(), 0);
  std::vector<cplx> residual(data.begin(), data.end());

  while (picked.size() < max_atoms) {
    const auto j = op.peak(residual, taken).index;
    taken[j] = 1;
    picked.push_back(j);
    atoms.push_back(op.steering(op.delay_at(j)));

    const auto n = static_cast<Eigen::Index>(picked.size());
    Eigen::MatrixXcd gram(n, n);
    Eigen::VectorXcd rhs(n);
    for (Eigen::Index p = 0; p < n; ++p) {
      rhs(p) = data_corr[picked[p]];
      gram(p, p) = m;
      for (Eigen::Index q = p + 1; q < n; ++q) {
        cplx dot{0.0, 0.0};
        for (std::size_t k = 0; k < atoms[p].size(); ++k) dot += std::conj(atoms[p][k]) * atoms[q][k];
        gram(p, q) = dot;
        gram(q, p) = std::conj(dot);
      }
    }
    const Eigen::VectorXcd gains = gram.ldlt().solve(rhs);

    out.components.clear();
    for (Eigen::Index p = 0; p < n; ++p) out.components.push_back({op.delay_at(picked[p]), gains(p)});
    residual = detail::model_residual(data, op, out.components);
    out.residual_energy = detail::energy(residual);
    out.residual_trace.push_back(out.residual_energy);
    ++out.cycles_used;
  }
  return out;
}

inline std::vector<cplx> reconstruct_full_band(const EstimateSet& est, const FrequencyGrid& fgrid) {
  return reconstruct_full_band(std::span<const Component>(est.components), fgrid);
}

}  // namespace dualband
