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

#include "prosody/dsp.hpp"

#include <fftw3.h>

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

namespace prosody::dsp {

namespace {

// FFTW planning is not thread-safe; execution with the new-array interface
// is. Plans are created once per size under a lock and never destroyed.
struct PlanCache {
  std::mutex mutex;
  std::map<std::size_t, fftw_plan> forward;
  std::map<std::size_t, fftw_plan> inverse;
};

PlanCache& plans() {
  static PlanCache cache;
  return cache;
}

fftw_plan forward_plan(std::size_t n) {
  auto& cache = plans();
  std::lock_guard lock(cache.mutex);
  auto it = cache.forward.find(n);
  if (it != cache.forward.end()) return it->second;
  std::vector<double> in(n);
  std::vector<std::complex<double>> out(n / 2 + 1);
  fftw_plan p = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.data(),
                                     reinterpret_cast<fftw_complex*>(out.data()),
                                     FFTW_ESTIMATE | FFTW_UNALIGNED);
  cache.forward.emplace(n, p);
  return p;
}

fftw_plan inverse_plan(std::size_t n) {
  auto& cache = plans();
  std::lock_guard lock(cache.mutex);
  auto it = cache.inverse.find(n);
  if (it != cache.inverse.end()) return it->second;
  std::vector<std::complex<double>> in(n / 2 + 1);
  std::vector<double> out(n);
  fftw_plan p = fftw_plan_dft_c2r_1d(static_cast<int>(n), reinterpret_cast<fftw_complex*>(in.data()),
                                     out.data(), FFTW_ESTIMATE | FFTW_UNALIGNED);
  cache.inverse.emplace(n, p);
  return p;
}

std::vector<std::complex<double>> rfft(std::span<const double> frame, std::size_t nfft) {
  std::vector<double> in(nfft, 0.0);
  std::copy_n(frame.begin(), std::min(frame.size(), nfft), in.begin());
  std::vector<std::complex<double>> out(nfft / 2 + 1);
  fftw_execute_dft_r2c(forward_plan(nfft), in.data(), reinterpret_cast<fftw_complex*>(out.data()));
  return out;
}

}  // namespace

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

std::vector<double> power_spectrum(std::span<const double> frame, std::size_t nfft) {
  const auto spec = rfft(frame, nfft);
  std::vector<double> power(spec.size());
  for (std::size_t k = 0; k < spec.size(); ++k) power[k] = std::norm(spec[k]);
  return power;
}

std::vector<double> autocorrelation(std::span<const double> x, std::size_t max_lag) {
  const std::size_t nfft = next_pow2(x.size() + max_lag + 1);
  auto spec = rfft(x, nfft);
  for (auto& c : spec) c = std::norm(c);
  std::vector<double> out(nfft);
  fftw_execute_dft_c2r(inverse_plan(nfft), reinterpret_cast<fftw_complex*>(spec.data()), out.data());
  std::vector<double> r(max_lag + 1);
  const double scale = 1.0 / static_cast<double>(nfft);
  for (std::size_t lag = 0; lag <= max_lag; ++lag) r[lag] = out[lag] * scale;
  return r;
}

std::vector<double> hann(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * (static_cast<double>(i) + 0.5) / static_cast<double>(n));
  }
  return w;
}

std::vector<double> hamming(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * (static_cast<double>(i) + 0.5) / static_cast<double>(n));
  }
  return w;
}

std::vector<double> lpc(std::span<const double> frame, int order) {
  const auto p = static_cast<std::size_t>(order);
  std::vector<double> r(p + 1, 0.0);
  for (std::size_t lag = 0; lag <= p; ++lag) {
    double s = 0.0;
    for (std::size_t n = lag; n < frame.size(); ++n) s += frame[n] * frame[n - lag];
    r[lag] = s;
  }
  if (!(r[0] > 0.0)) return {};
  r[0] *= 1.0 + 1e-9;  // white-noise correction keeps the recursion stable

  std::vector<double> a(p + 1, 0.0);
  std::vector<double> prev(p + 1, 0.0);
  a[0] = 1.0;
  double err = r[0];
  for (std::size_t i = 1; i <= p; ++i) {
    double acc = r[i];
    for (std::size_t j = 1; j < i; ++j) acc += a[j] * r[i - j];
    const double k = -acc / err;
    prev = a;
    for (std::size_t j = 1; j < i; ++j) a[j] = prev[j] + k * prev[i - j];
    a[i] = k;
    err *= 1.0 - k * k;
    if (!(err > 0.0)) return {};
  }
  return a;
}

std::vector<std::complex<double>> lpc_roots(std::span<const double> coeffs) {
  const auto p = static_cast<Eigen::Index>(coeffs.size()) - 1;
  if (p < 1) return {};
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index j = 0; j < p; ++j) companion(0, j) = -coeffs[static_cast<std::size_t>(j + 1)];
  for (Eigen::Index i = 1; i < p; ++i) companion(i, i - 1) = 1.0;
  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
  if (solver.info() != Eigen::Success) return {};
  std::vector<std::complex<double>> roots(static_cast<std::size_t>(p));
  for (Eigen::Index i = 0; i < p; ++i) roots[static_cast<std::size_t>(i)] = solver.eigenvalues()[i];
  return roots;
}

}  // namespace prosody::dsp
