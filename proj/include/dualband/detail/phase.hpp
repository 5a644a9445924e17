#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>

namespace dualband::detail {

using cplx = std::complex<double>;

/// exp(-j*2*pi*k*df*tau), with the cycle count reduced to [0, 1) before the
/// trigonometric evaluation so large k*df*tau products keep full precision.
inline cplx phase_ramp(std::size_t k, double spacing_hz, double delay_s) {
  const double cycles = static_cast<double>(k) * spacing_hz * delay_s;
  const double frac = cycles - std::floor(cycles);
  return std::polar(1.0, -2.0 * std::numbers::pi * frac);
}

/// exp(+j*2*pi*x) with x reduced to [0, 1).
inline cplx unit_phasor(double cycles) {
  const double frac = cycles - std::floor(cycles);
  return std::polar(1.0, 2.0 * std::numbers::pi * frac);
}

}  // namespace dualband::detail
