/**
 * @file evaluation.hpp
 * @brief Delay RMSE with optimal target association, the single-target delay
 *        Cramer-Rao bound, and deterministic Monte-Carlo SNR / gap sweeps.
 */
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "dualband/channel.hpp"
#include "dualband/estimators.hpp"
#include "dualband/freqgrid.hpp"
#include "dualband/psf_profile.hpp"

namespace dualband {

class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Association {
  std::vector<std::pair<double, double>> pairs;  // (true delay, estimated delay), in true-target order
  double mean_squared_error = 0.0;               // (1/L) sum (tau_hat - tau)^2, s^2
};

/// Pairs estimates with true delays by the permutation of least total squared
/// error (exhaustive; intended for L <= ~8) and returns the per-trial MSE.
inline Association associate_and_rmse(std::span<const double> true_delays, std::span<const Component> estimates) {
  if (true_delays.size() != estimates.size()) {
    throw EvaluationError("cannot associate " + std::to_string(estimates.size()) + " estimates with " +
                          std::to_string(true_delays.size()) + " targets");
  }
  const std::size_t n = true_delays.size();
  if (n == 0) return {};
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::size_t> best_perm = perm;
  double best = std::numeric_limits<double>::infinity();
  do {
    double cost = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = estimates[perm[i]].delay_s - true_delays[i];
      cost += d * d;
    }
    if (cost < best) {
      best = cost;
      best_perm = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  Association out;
  for (std::size_t i = 0; i < n; ++i) out.pairs.emplace_back(true_delays[i], estimates[best_perm[i]].delay_s);
  out.mean_squared_error = best / static_cast<double>(n);
  return out;
}

/// The delay is unidentifiable (all active subcarriers coincide in index spread).
class UnboundedCrbError : public EvaluationError {
 public:
  using EvaluationError::EvaluationError;
};

/// Sum over active indices of (k - mean k)^2.
inline double index_spread(const SubcarrierSelection& sel) {
  const auto idx = sel.indices();
  double mean = 0.0;
  for (auto k : idx) mean += static_cast<double>(k);
  mean /= static_cast<double>(idx.size());
  double s = 0.0;
  for (auto k : idx) s += (static_cast<double>(k) - mean) * (static_cast<double>(k) - mean);
  return s;
}

/// CRB on tau for y = alpha a_S(tau) + n with unknown complex alpha:
///   var >= sigma^2 / (2 |alpha|^2 (2 pi df)^2 sum_k (k - kbar)^2),
/// with |alpha|^2 / sigma^2 = 10^(snr_db/10). Returns seconds^2.
inline double crb_delay_single(const SubcarrierSelection& sel, double snr_db) {
  const double spread = index_spread(sel);
  if (sel.count() < 2 || !(spread > 0.0)) {
    throw UnboundedCrbError("delay CRB is unbounded: fewer than two distinct active subcarriers");
  }
  const double snr = std::pow(10.0, snr_db / 10.0);
  const double w = 2.0 * std::numbers::pi * sel.grid().spacing_hz();
  return 1.0 / (2.0 * snr * w * w * spread);
}

enum class Method { kRelax, kOmp, kMle };

inline std::string_view method_name(Method m) {
  switch (m) {
    case Method::kRelax: return "relax";
    case Method::kOmp: return "omp";
    case Method::kMle: return "mle";
  }
  return "?";
}

inline Method parse_method(std::string_view name) {
  if (name == "relax") return Method::kRelax;
  if (name == "omp") return Method::kOmp;
  if (name == "mle") return Method::kMle;
  throw ConfigError("unknown method '" + std::string(name) + "' (expected relax, omp or mle)");
}

struct EstimatorSettings {
  std::size_t osf = 16;
  /// L_max for RELAX and atom count for OMP; 0 means "number of true targets".
  std::size_t max_targets = 0;
  double epsilon = 0.0;
  int max_refinement_cycles = 20;
  double cycle_tolerance = 1e-8;
};

/// Runs one estimator; MLE yields a single component.
inline EstimateSet run_estimator(Method method, const MeasurementVector& y, const SteeringOperator& op,
                                 const EstimatorSettings& s, std::size_t default_targets) {
  const std::size_t order = s.max_targets == 0 ? std::max<std::size_t>(default_targets, 1) : s.max_targets;
  switch (method) {
    case Method::kRelax: {
      RelaxConfig cfg{order, s.epsilon, s.max_refinement_cycles, s.cycle_tolerance};
      return relax(y, cfg, op);
    }
    case Method::kOmp:
      return omp(y, order, op);
    case Method::kMle: {
      EstimateSet out;
      out.components.push_back(mle_single(y, op));
      out.residual_energy = ml_objective(y.samples, op, out.components);
      out.residual_trace.push_back(out.residual_energy);
      return out;
    }
  }
  throw ConfigError("unknown method");
}

struct SweepPoint {
  std::optional<double> gap_hz;
  double snr_db = 0.0;
  Method method = Method::kRelax;
  double rmse_s = 0.0;
  std::optional<double> crb_std_s;
  std::size_t trials = 0;
};

struct SweepResult {
  std::vector<SweepPoint> points;
};

/// Index-keyed parallel loop; results are written by index so the reduction
/// order never depends on scheduling.
template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(count)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < count && !failed; i = next.fetch_add(1)) {
        try {
          fn(i);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
        }
      }
    });
  }
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

inline unsigned default_thread_count() { return std::max(1u, std::thread::hardware_concurrency()); }

namespace detail {

// Mean over trials of the per-trial associated MSE, for each method, at one (selection, snr) point.
inline std::vector<double> mean_squared_errors(const ScenarioSpec& scenario, std::span<const Method> methods,
                                               double snr_db, std::uint64_t axis_index, std::size_t trials,
                                               const EstimatorSettings& settings, unsigned threads) {
  const SteeringOperator op(scenario.selection, DelayGrid::oversampled(scenario.selection.grid(), settings.osf));
  const std::size_t targets = scenario.delays_s.size();
  std::vector<double> mse(trials * methods.size(), 0.0);
  parallel_for(trials, threads, [&](std::size_t t) {
    const auto trial = draw_trial(scenario, snr_db, axis_index, t);
    std::vector<double> truth;
    for (const auto& tg : trial.truth) truth.push_back(tg.delay_s);
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
      const auto est = run_estimator(methods[mi], trial.y, op, settings, targets);
      mse[mi * trials + t] = associate_and_rmse(truth, est.components).mean_squared_error;
    }
  });
  std::vector<double> out(methods.size(), 0.0);
  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    double sum = 0.0;
    for (std::size_t t = 0; t < trials; ++t) sum += mse[mi * trials + t];
    out[mi] = sum / static_cast<double>(trials);
  }
  return out;
}

inline void check_sweep_inputs(const ScenarioSpec& scenario, std::span<const Method> methods, std::size_t trials) {
  if (trials < 1) throw ConfigError("a sweep needs at least one trial");
  if (methods.empty()) throw ConfigError("a sweep needs at least one method");
  scenario.validate();
  for (auto m : methods) {
    if (m == Method::kMle && scenario.delays_s.size() != 1) {
      throw ConfigError("mle sweeps need a single-target scenario");
    }
  }
}

}  // namespace detail

/// RMSE versus SNR. Trial t at SNR index i draws its gains and noise from
/// (master_seed, i, t), so every method sees identical data. The CRB column
/// is filled for single-target scenarios.
inline SweepResult sweep_snr(ScenarioSpec scenario, std::span<const Method> methods, std::span<const double> snr_list,
                             std::size_t trials, std::uint64_t master_seed, const EstimatorSettings& settings,
                             unsigned threads = default_thread_count()) {
  scenario.seed = master_seed;
  detail::check_sweep_inputs(scenario, methods, trials);
  SweepResult out;
  for (std::size_t i = 0; i < snr_list.size(); ++i) {
    const auto mse = detail::mean_squared_errors(scenario, methods, snr_list[i], i, trials, settings, threads);
    std::optional<double> crb_std;
    if (scenario.delays_s.size() == 1 && !is_noise_free(snr_list[i])) {
      crb_std = std::sqrt(crb_delay_single(scenario.selection, snr_list[i]));
    }
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
      out.points.push_back({std::nullopt, snr_list[i], methods[mi], std::sqrt(mse[mi]), crb_std, trials});
    }
  }
  return out;
}

/// RMSE versus subband gap. The first subband stays at base.start and the
/// second moves; every gap reuses the trial keys (master_seed, snr index, t).
inline SweepResult sweep_gap(ScenarioSpec scenario, const DualBandConfig& base, Method method,
                             std::span<const std::size_t> gaps, std::span<const double> snr_list, std::size_t trials,
                             std::uint64_t master_seed, const EstimatorSettings& settings,
                             unsigned threads = default_thread_count()) {
  scenario.seed = master_seed;
  const Method methods[] = {method};
  if (trials < 1) throw ConfigError("a sweep needs at least one trial");
  std::vector<DualBandConfig> layouts;
  for (auto g : gaps) {
    DualBandConfig cfg = base;
    cfg.gap = g;
    cfg.validate();
    layouts.push_back(cfg);
  }
  SweepResult out;
  for (std::size_t si = 0; si < snr_list.size(); ++si) {
    for (const auto& cfg : layouts) {
      scenario.selection = dual_band(cfg);
      detail::check_sweep_inputs(scenario, methods, trials);
      const auto mse = detail::mean_squared_errors(scenario, methods, snr_list[si], si, trials, settings, threads);
      std::optional<double> crb_std;
      if (scenario.delays_s.size() == 1 && !is_noise_free(snr_list[si])) {
        crb_std = std::sqrt(crb_delay_single(scenario.selection, snr_list[si]));
      }
      out.points.push_back({cfg.gap_hz(), snr_list[si], method, std::sqrt(mse[0]), crb_std, trials});
    }
  }
  return out;
}

}  // namespace dualband
