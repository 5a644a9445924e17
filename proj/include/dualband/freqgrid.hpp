/**
 * @file freqgrid.hpp
 * @brief K-point OFDM frequency grid, binary subcarrier selections and
 *        dual-band layouts.
 *
 * Every other module consumes these types. All of them are immutable after
 * construction and may be shared freely between threads.
 */
#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dualband {

/// Invalid grid, band or scenario parameters.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Defaults of the reference OFDM setup (320 MHz grid, 40 MHz subbands).
inline constexpr std::size_t kDefaultGridSize = 1024;
inline constexpr double kDefaultSpacingHz = 312.5e3;
inline constexpr double kDefaultCarrierHz = 5.2e9;
inline constexpr std::size_t kDefaultSubbandSize = 128;

class FrequencyGrid {
 public:
  FrequencyGrid(std::size_t num_points, double spacing_hz, double carrier_hz = kDefaultCarrierHz)
      : size_(num_points), spacing_hz_(spacing_hz), carrier_hz_(carrier_hz) {
    if (num_points < 2) throw ConfigError("frequency grid needs K >= 2 points");
    if (!(spacing_hz > 0.0)) throw ConfigError("subcarrier spacing must be positive");
  }

  static FrequencyGrid reference() { return {kDefaultGridSize, kDefaultSpacingHz, kDefaultCarrierHz}; }

  std::size_t size() const noexcept { return size_; }
  double spacing_hz() const noexcept { return spacing_hz_; }
  /// Informational only; all processing is at baseband.
  double carrier_hz() const noexcept { return carrier_hz_; }
  double span_hz() const noexcept { return static_cast<double>(size_) * spacing_hz_; }
  /// Delays alias modulo 1/spacing.
  double unambiguous_delay_s() const noexcept { return 1.0 / spacing_hz_; }

  bool operator==(const FrequencyGrid&) const = default;

 private:
  std::size_t size_;
  double spacing_hz_;
  double carrier_hz_;
};

/// Binary subcarrier selection W[k] on a grid, stored as the sorted active index list.
class SubcarrierSelection {
 public:
  SubcarrierSelection(FrequencyGrid grid, std::vector<std::size_t> active)
      : grid_(grid), active_(std::move(active)) {
    if (active_.empty()) throw ConfigError("subcarrier selection must contain at least one index");
    for (std::size_t i = 0; i < active_.size(); ++i) {
      if (active_[i] >= grid_.size()) {
        throw ConfigError("subcarrier index " + std::to_string(active_[i]) + " outside grid of size " +
                          std::to_string(grid_.size()));
      }
      if (i > 0 && active_[i] <= active_[i - 1]) {
        throw ConfigError("subcarrier indices must be strictly increasing");
      }
    }
  }

  const FrequencyGrid& grid() const noexcept { return grid_; }
  std::span<const std::size_t> indices() const noexcept { return active_; }
  std::size_t count() const noexcept { return active_.size(); }

  bool contains(std::size_t k) const { return std::binary_search(active_.begin(), active_.end(), k); }

  /// W[k] over the full grid.
  std::vector<std::uint8_t> mask() const {
    std::vector<std::uint8_t> w(grid_.size(), 0);
    for (auto k : active_) w[k] = 1;
    return w;
  }

  bool operator==(const SubcarrierSelection&) const = default;

 private:
  FrequencyGrid grid_;
  std::vector<std::size_t> active_;
};

/// Two equal-width subbands; `gap` is the center-to-center separation in subcarriers.
struct DualBandConfig {
  FrequencyGrid grid = FrequencyGrid::reference();
  std::size_t subband_size = kDefaultSubbandSize;
  std::size_t gap = kDefaultSubbandSize;
  std::size_t start = 0;

  void validate() const {
    if (subband_size == 0) throw ConfigError("subband size must be positive");
    if (gap < subband_size) {
      throw ConfigError("subbands overlap: gap " + std::to_string(gap) + " < subband size " +
                        std::to_string(subband_size));
    }
    if (start + gap + subband_size > grid.size()) {
      throw ConfigError("dual-band layout does not fit the grid: start + gap + N = " +
                        std::to_string(start + gap + subband_size) + " > K = " + std::to_string(grid.size()));
    }
  }

  double gap_hz() const noexcept { return static_cast<double>(gap) * grid.spacing_hz(); }
  double subband_hz() const noexcept { return static_cast<double>(subband_size) * grid.spacing_hz(); }

  bool operator==(const DualBandConfig&) const = default;
};

inline SubcarrierSelection full_band(const FrequencyGrid& grid) {
  std::vector<std::size_t> active(grid.size());
  for (std::size_t k = 0; k < active.size(); ++k) active[k] = k;
  return {grid, std::move(active)};
}

/// Contiguous run [first, first + count).
inline SubcarrierSelection contiguous_band(const FrequencyGrid& grid, std::size_t first, std::size_t count) {
  std::vector<std::size_t> active(count);
  for (std::size_t i = 0; i < count; ++i) active[i] = first + i;
  return {grid, std::move(active)};
}

inline SubcarrierSelection dual_band(const DualBandConfig& cfg) {
  cfg.validate();
  std::vector<std::size_t> active;
  active.reserve(2 * cfg.subband_size);
  for (std::size_t m = 0; m < cfg.subband_size; ++m) active.push_back(cfg.start + m);
  for (std::size_t m = 0; m < cfg.subband_size; ++m) active.push_back(cfg.start + cfg.gap + m);
  return {cfg.grid, std::move(active)};
}

inline bool is_contiguous(const SubcarrierSelection& sel) {
  auto idx = sel.indices();
  return idx.back() - idx.front() + 1 == idx.size();
}

}  // namespace dualband
