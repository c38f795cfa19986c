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


#ifndef NFLOC_WAVEFORM_HPP
#define NFLOC_WAVEFORM_HPP

#include "nfloc/common.hpp"
#include "nfloc/rng.hpp"

#include <unsupported/Eigen/FFT>

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace nfloc {

enum class Modulation { qpsk, qam16 };

inline std::string to_string(Modulation m) { return m == Modulation::qpsk ? "qpsk" : "qam16"; }

/**
 * OFDM numerology of the uplink frame.
 *
 * Bandwidth B = N * df and the sample period is 1/B. The cyclic prefix is stored as an
 * integer number of samples so that T_CP * B is integral by construction; the symbol
 * duration T_O includes the prefix.
 */
struct WaveformConfig {
    std::size_t num_subcarriers = 256;     // N
    double subcarrier_spacing = 1.5625e6;  // df, Hz
    std::size_t num_symbols = 20;          // Gamma
    std::size_t cp_samples = 256;          // N_cp = T_CP * B
    double transmit_power = 1.0;           // P
    Modulation modulation = Modulation::qpsk;

    static WaveformConfig from_bandwidth(double bandwidth, std::size_t num_subcarriers, std::size_t num_symbols,
                                         std::size_t cp_samples, double transmit_power = 1.0) {
        WaveformConfig c;
        c.num_subcarriers = num_subcarriers;
        c.subcarrier_spacing = bandwidth / static_cast<double>(num_subcarriers);
        c.num_symbols = num_symbols;
        c.cp_samples = cp_samples;
        c.transmit_power = transmit_power;
        c.validate();
        return c;
    }

    double bandwidth() const { return static_cast<double>(num_subcarriers) * subcarrier_spacing; }
    double sample_period() const { return 1.0 / bandwidth(); }
    double cp_duration() const { return static_cast<double>(cp_samples) * sample_period(); }
    double symbol_duration() const { return cp_duration() + 1.0 / subcarrier_spacing; }
    std::size_t samples_per_symbol() const { return num_subcarriers + cp_samples; }
    std::size_t frame_samples() const { return num_symbols * samples_per_symbol(); }

    void validate() const {
        const std::size_t n = num_subcarriers;
        if (n < 2 || (n & (n - 1)) != 0)
            throw DomainError("WaveformConfig: number of subcarriers must be a power of two");
        if (!(subcarrier_spacing > 0.0) || !std::isfinite(subcarrier_spacing))
            throw DomainError("WaveformConfig: subcarrier spacing must be positive");
        if (num_symbols == 0)
            throw DomainError("WaveformConfig: at least one OFDM symbol is required");
        if (cp_samples == 0)
            throw DomainError("WaveformConfig: cyclic prefix must span at least one sample");
        if (!(transmit_power > 0.0) || !std::isfinite(transmit_power))
            throw DomainError("WaveformConfig: transmit power must be positive");
    }
};

// N x Gamma data symbols b(n, gamma).
struct SymbolGrid {
    CMatrix values;

    std::size_t num_subcarriers() const { return static_cast<std::size_t>(values.rows()); }
    std::size_t num_symbols() const { return static_cast<std::size_t>(values.cols()); }
};

// I.i.d. symbols with E|b|^2 = P/N. QPSK has constant modulus sqrt(P/N); 16-QAM is scaled to
// the same mean energy.
inline SymbolGrid generate_symbols(const WaveformConfig &config, std::uint64_t seed) {
    config.validate();
    const auto N = static_cast<Eigen::Index>(config.num_subcarriers);
    const auto G = static_cast<Eigen::Index>(config.num_symbols);
    const double amplitude = std::sqrt(config.transmit_power / static_cast<double>(config.num_subcarriers));
    Rng rng(seed);
    SymbolGrid grid{CMatrix(N, G)};
    if (config.modulation == Modulation::qpsk) {
        const double a = amplitude / std::sqrt(2.0);
        std::uniform_int_distribution<int> pick(0, 3);
        for (Eigen::Index g = 0; g < G; ++g)
            for (Eigen::Index n = 0; n < N; ++n) {
                const int s = pick(rng);
                grid.values(n, g) = cdouble{(s & 1) ? -a : a, (s & 2) ? -a : a};
            }
    } else {
        // Levels {-3,-1,1,3}; mean energy per dimension is 5, so 10 per symbol.
        constexpr std::array<double, 4> levels{-3.0, -1.0, 1.0, 3.0};
        const double a = amplitude / std::sqrt(10.0);
        std::uniform_int_distribution<int> pick(0, 3);
        for (Eigen::Index g = 0; g < G; ++g)
            for (Eigen::Index n = 0; n < N; ++n) {
                const double re = levels[static_cast<std::size_t>(pick(rng))];
                const double im = levels[static_cast<std::size_t>(pick(rng))];
                grid.values(n, g) = a * cdouble{re, im};
            }
    }
    return grid;
}

namespace detail {

inline void check_grid(const SymbolGrid &symbols, const WaveformConfig &config) {
    if (symbols.num_subcarriers() != config.num_subcarriers || symbols.num_symbols() != config.num_symbols)
        throw DimensionError("symbol grid does not match the waveform configuration");
}

// Unnormalized inverse DFT of each column: x[j] = sum_n b[n] exp(j 2 pi n j / N).
inline CMatrix time_domain_symbols(const CMatrix &freq) {
    const Eigen::Index N = freq.rows();
    CMatrix out(N, freq.cols());
    Eigen::FFT<double> fft;
    fft.SetFlag(Eigen::FFT<double>::Unscaled);
    std::vector<cdouble> in(static_cast<std::size_t>(N)), td;
    for (Eigen::Index g = 0; g < freq.cols(); ++g) {
        for (Eigen::Index n = 0; n < N; ++n)
            in[static_cast<std::size_t>(n)] = freq(n, g);
        fft.inv(td, in);
        for (Eigen::Index n = 0; n < N; ++n)
            out(n, g) = td[static_cast<std::size_t>(n)];
    }
    return out;
}

} // namespace detail

// Sampled OFDM frame at rate B: each symbol is the inverse DFT of its subcarrier column,
// preceded by its last N_cp samples. Length Gamma * (N + N_cp).
inline CVector modulate_frame(const SymbolGrid &symbols, const WaveformConfig &config) {
    config.validate();
    detail::check_grid(symbols, config);
    const std::size_t N = config.num_subcarriers;
    const std::size_t Ncp = config.cp_samples;
    const std::size_t S = config.samples_per_symbol();
    const CMatrix td = detail::time_domain_symbols(symbols.values);
    CVector frame(static_cast<Eigen::Index>(config.frame_samples()));
    for (std::size_t g = 0; g < config.num_symbols; ++g)
        for (std::size_t j = 0; j < S; ++j) {
            // (j - Ncp) mod N, the CP repeats the symbol tail
            const std::size_t idx = (j + N - (Ncp % N)) % N;
            frame[static_cast<Eigen::Index>(g * S + j)] =
                td(static_cast<Eigen::Index>(idx), static_cast<Eigen::Index>(g));
        }
    return frame;
}

// Direct evaluation of the continuous-time OFDM signal
//   s(t) = sum_gamma sum_n b(n,gamma) exp(j 2 pi n df (t - gamma T_O - T_CP)) rect((t - gamma T_O)/T_O)
// with the half-open gate [gamma T_O, (gamma+1) T_O). O(N) per call; used as a reference.
inline cdouble evaluate_reference(const SymbolGrid &symbols, const WaveformConfig &config, double t) {
    if (!std::isfinite(t))
        throw DomainError("evaluate_reference: time must be finite");
    detail::check_grid(symbols, config);
    const double To = config.symbol_duration();
    if (t < 0.0)
        return {0.0, 0.0};
    const double gamma_f = std::floor(t / To);
    if (gamma_f >= static_cast<double>(config.num_symbols))
        return {0.0, 0.0};
    const auto gamma = static_cast<Eigen::Index>(gamma_f);
    const double local = t - gamma_f * To - config.cp_duration();
    const double step = 2.0 * kPi * config.subcarrier_spacing * local;
    cdouble acc{0.0, 0.0};
    for (Eigen::Index n = 0; n < symbols.values.rows(); ++n)
        acc += symbols.values(n, gamma) * std::polar(1.0, step * static_cast<double>(n));
    return acc;
}

} // namespace nfloc

#endif
