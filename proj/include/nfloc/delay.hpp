// SPDX-License-Identifier: Apache-2.0
//
// nfloc: near-field scatterer sensing and NLoS UE localization
// Copyright (C) 2026 The nfloc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------


#ifndef NFLOC_DELAY_HPP
#define NFLOC_DELAY_HPP

#include "nfloc/common.hpp"
#include "nfloc/isolation.hpp"
#include "nfloc/waveform.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <string>
#include <vector>

namespace nfloc {

// N x Gamma grid after demodulation (and, for delay estimation, symbol division).
struct ReceiveGrid {
    CMatrix values;
};

enum class Window { rectangular, hamming };

inline std::string to_string(Window w) { return w == Window::hamming ? "hamming" : "rectangular"; }

inline std::vector<double> window_coefficients(Window window, std::size_t n) {
    std::vector<double> w(n, 1.0);
    if (window == Window::hamming && n > 1)
        for (std::size_t i = 0; i < n; ++i)
            w[i] = 0.54 - 0.46 * std::cos(2.0 * kPi * static_cast<double>(i) / static_cast<double>(n - 1));
    return w;
}

/// Strips each symbol's cyclic prefix, takes the DFT (scaled by 1/N so that a unit-gain,
/// zero-delay channel returns b exactly) and divides element-wise by the transmitted
/// symbols. Samples past the Gamma-th symbol are ignored.
inline ReceiveGrid demodulate_equalize(const CVector &stream, const SymbolGrid &symbols,
                                       const WaveformConfig &config) {
    config.validate();
    detail::check_grid(symbols, config);
    const std::size_t N = config.num_subcarriers;
    const std::size_t S = config.samples_per_symbol();
    if (static_cast<std::size_t>(stream.size()) < config.frame_samples())
        throw DimensionError("demodulate_equalize: stream shorter than the OFDM frame");
    if ((symbols.values.array().abs() == 0.0).any())
        throw DomainError("demodulate_equalize: zero data symbol, cannot divide");

    Eigen::FFT<double> fft;
    std::vector<cdouble> td(N), fd;
    ReceiveGrid out{CMatrix(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(config.num_symbols))};
    const double scale = 1.0 / static_cast<double>(N);
    for (std::size_t g = 0; g < config.num_symbols; ++g) {
        const std::size_t start = g * S + config.cp_samples;
        for (std::size_t i = 0; i < N; ++i)
            td[i] = stream[static_cast<Eigen::Index>(start + i)];
        fft.fwd(fd, td);
        for (std::size_t n = 0; n < N; ++n) {
            const auto r = static_cast<Eigen::Index>(n);
            const auto c = static_cast<Eigen::Index>(g);
            out.values(r, c) = fd[n] * scale / symbols.values(r, c);
        }
    }
    return out;
}

inline ReceiveGrid demodulate_equalize(const IsolatedStream &stream, const SymbolGrid &symbols,
                                       const WaveformConfig &config) {
    return demodulate_equalize(stream.samples, symbols, config);
}

struct Periodogram {
    std::vector<double> values; // Per[k], k = 0 .. N_Per - 1
    double bin_width = 0.0;     // seconds per bin, 1 / (N_Per df)
    Window window = Window::hamming;
};

/// Per[k] = 1/(N Gamma) sum_gamma | sum_n F(n,gamma) w[n] exp(+j 2 pi k n / N_Per) |^2,
/// i.e. zero-padded inverse DFTs averaged non-coherently over symbols.
inline Periodogram periodogram(const ReceiveGrid &grid, Window window, std::size_t n_per,
                               double subcarrier_spacing) {
    const auto N = static_cast<std::size_t>(grid.values.rows());
    const auto G = static_cast<std::size_t>(grid.values.cols());
    if (N == 0 || G == 0)
        throw DimensionError("periodogram: empty receive grid");
    if (n_per < N)
        throw DomainError("periodogram: N_Per must be at least N");
    const std::vector<double> w = window_coefficients(window, N);

    Eigen::FFT<double> fft;
    fft.SetFlag(Eigen::FFT<double>::Unscaled);
    std::vector<cdouble> in(n_per), out;
    Periodogram per;
    per.values.assign(n_per, 0.0);
    per.bin_width = 1.0 / (static_cast<double>(n_per) * subcarrier_spacing);
    per.window = window;
    for (std::size_t g = 0; g < G; ++g) {
        std::fill(in.begin(), in.end(), cdouble{0.0, 0.0});
        for (std::size_t n = 0; n < N; ++n)
            in[n] = grid.values(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(g)) * w[n];
        fft.inv(out, in);
        for (std::size_t k = 0; k < n_per; ++k)
            per.values[k] += std::norm(out[k]);
    }
    const double norm = 1.0 / static_cast<double>(N * G);
    for (double &v : per.values)
        v *= norm;
    return per;
}

// Index of the largest periodogram bin (first on ties).
inline std::size_t peak_bin(const Periodogram &per) {
    if (per.values.empty())
        throw DomainError("peak_bin: empty periodogram");
    std::size_t best = 0;
    for (std::size_t k = 1; k < per.values.size(); ++k)
        if (per.values[k] > per.values[best])
            best = k;
    return best;
}

/// tau_s = k / (N_Per df) at the periodogram maximum. With interpolation the peak index is
/// refined by a three-point parabola through the log-power of the bin and its (circular)
/// neighbours.
inline double estimate_delay(const Periodogram &per, double subcarrier_spacing, std::size_t n_per,
                             bool interpolate) {
    if (per.values.empty())
        throw DomainError("estimate_delay: empty periodogram");
    if (per.values.size() != n_per)
        throw DimensionError("estimate_delay: periodogram length differs from N_Per");
    const std::size_t k = peak_bin(per);
    double index = static_cast<double>(k);
    if (interpolate && n_per >= 3) {
        const double floor = per.values[k] * 1e-300;
        const double a = std::log(std::max(per.values[(k + n_per - 1) % n_per], floor));
        const double b = std::log(std::max(per.values[k], floor));
        const double c = std::log(std::max(per.values[(k + 1) % n_per], floor));
        const double denom = a - 2.0 * b + c;
        if (denom < 0.0) {
            const double offset = 0.5 * (a - c) / denom;
            if (std::abs(offset) <= 0.5)
                index += offset;
        }
    }
    return index / (static_cast<double>(n_per) * subcarrier_spacing);
}

} // namespace nfloc

#endif
