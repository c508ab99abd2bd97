// Copyright 2026 The Prosody Bench Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PROSODY_DSP_HPP
#define PROSODY_DSP_HPP

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace prosody::dsp {

std::size_t next_pow2(std::size_t n);

/// |X[k]|^2 for k in [0, nfft/2] of the zero-padded frame.
std::vector<double> power_spectrum(std::span<const double> frame, std::size_t nfft);

/// Raw lagged products sum_n x[n] x[n+lag] for lag in [0, max_lag].
std::vector<double> autocorrelation(std::span<const double> x, std::size_t max_lag);

std::vector<double> hann(std::size_t n);
std::vector<double> hamming(std::size_t n);

/// Linear-prediction polynomial [1, a1, ..., ap] by Levinson-Durbin on the
/// autocorrelation sequence. Returns an empty vector when the frame has no energy.
std::vector<double> lpc(std::span<const double> frame, int order);

/// Roots of 1 + a1 z^-1 + ... + ap z^-p (coefficients as returned by lpc).
std::vector<std::complex<double>> lpc_roots(std::span<const double> coeffs);

/// Offset in (-0.5, 0.5) of the vertex of the parabola through three points.
inline double parabolic_offset(double left, double centre, double right) {
  const double denom = left - 2.0 * centre + right;
  if (denom >= 0.0) return 0.0;
  const double d = 0.5 * (left - right) / denom;
  return d > 0.5 ? 0.5 : (d < -0.5 ? -0.5 : d);
}

inline double parabolic_peak(double left, double centre, double right, double offset) {
  return centre - 0.25 * (left - right) * offset;
}

}  // namespace prosody::dsp

#endif  // PROSODY_DSP_HPP
