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


#ifndef NFLOC_CHANNEL_HPP
#define NFLOC_CHANNEL_HPP

#include "nfloc/common.hpp"
#include "nfloc/geometry.hpp"
#include "nfloc/rng.hpp"
#include "nfloc/waveform.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <sstream>
#include <vector>

namespace nfloc {

// Ground truth world state: static scatterers, one moving single-antenna UE, clock offset.
struct Scenario {
    std::vector<Scatterer> scatterers;
    UeState ue;
    ClockModel clock;
    // Optional per-path Doppler (Hz) replacing the kinematic value; empty or shorter than
    // `scatterers` means no override for the remaining paths.
    std::vector<std::optional<double>> doppler_overrides;
};

enum class GainPolicy {
    unit,     // |alpha| = 1, uniform phase
    distance, // |alpha| proportional to 1 / (r_B r_U), uniform phase
};

struct PathState {
    cdouble gain{1.0, 0.0}; // alpha
    double delay = 0.0;     // tau_s, includes the clock difference
    double doppler = 0.0;   // f_D, Hz
    CVector steering;       // a(r_B, theta)
    Scatterer scatterer;
    double ue_range = 0.0;
};

/// Resolves every scatterer into a propagation path. Throws PreconditionError if a path's
/// delay leaves the cyclic prefix or its Doppler reaches df/10.
inline std::vector<PathState> compile_paths(const Scenario &scenario, const ArrayGeometry &geometry,
                                            const WaveformConfig &config, GainPolicy policy, std::uint64_t seed) {
    config.validate();
    Rng rng(seed);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
    std::vector<PathState> paths;
    paths.reserve(scenario.scatterers.size());
    for (std::size_t l = 0; l < scenario.scatterers.size(); ++l) {
        const Scatterer &sc = scenario.scatterers[l];
        sc.validate();
        const PathGeometry pg = path_params(sc, scenario.ue, scenario.clock, geometry.wavelength());
        PathState p;
        p.scatterer = sc;
        p.ue_range = pg.ue_range;
        p.delay = pg.total_delay;
        p.doppler = pg.doppler;
        if (l < scenario.doppler_overrides.size() && scenario.doppler_overrides[l])
            p.doppler = *scenario.doppler_overrides[l];
        if (!(p.delay >= 0.0) || !(p.delay < config.cp_duration())) {
            std::ostringstream os;
            os << "compile_paths: path " << l << " delay " << p.delay << " s is outside [0, T_CP = "
               << config.cp_duration() << " s)";
            throw PreconditionError(os.str());
        }
        if (!(std::abs(p.doppler) < config.subcarrier_spacing / 10.0)) {
            std::ostringstream os;
            os << "compile_paths: path " << l << " Doppler " << p.doppler << " Hz is not below df/10 = "
               << config.subcarrier_spacing / 10.0 << " Hz";
            throw PreconditionError(os.str());
        }
        const double amplitude =
            policy == GainPolicy::unit ? 1.0 : 1.0 / (sc.range * std::max(pg.ue_range, 1e-3));
        p.gain = std::polar(amplitude, phase(rng));
        p.steering = array_response(geometry, sc.range, sc.angle);
        paths.push_back(std::move(p));
    }
    return paths;
}

// M x K received samples Y = [y[0] ... y[K-1]].
struct SnapshotMatrix {
    CMatrix samples;
    double sample_rate = 0.0;

    std::size_t num_antennas() const { return static_cast<std::size_t>(samples.rows()); }
    std::size_t num_samples() const { return static_cast<std::size_t>(samples.cols()); }
};

struct NoiseModel {
    double variance = 0.0; // sigma^2 per complex sample per antenna
    std::uint64_t seed = 0;
};

enum class SynthesisMode {
    exact, // literal per-sample evaluation of the continuous-time model; slow, reference
    fast,  // per-symbol frequency-domain delay, inverse DFT, cyclic prefix
};

// K = ceil((Gamma T_O + tau_max) / T_s), counted in samples.
inline std::size_t snapshot_length(const WaveformConfig &config, double max_delay) {
    const double extra = std::max(max_delay, 0.0) * config.bandwidth();
    return config.frame_samples() + static_cast<std::size_t>(std::ceil(extra - 1e-9));
}

namespace detail {

inline void check_paths(const std::vector<PathState> &paths) {
    for (std::size_t l = 1; l < paths.size(); ++l)
        if (paths[l].steering.size() != paths[0].steering.size())
            throw DimensionError("synthesize: steering vectors have different lengths");
}

// Row l holds alpha_l s(k T_s - tau_l) exp(j 2 pi f_l k T_s).
inline CMatrix path_signals_exact(const std::vector<PathState> &paths, const SymbolGrid &symbols,
                                  const WaveformConfig &config, std::size_t K) {
    const double Ts = config.sample_period();
    CMatrix S(static_cast<Eigen::Index>(paths.size()), static_cast<Eigen::Index>(K));
    for (std::size_t l = 0; l < paths.size(); ++l) {
        const PathState &p = paths[l];
        for (std::size_t k = 0; k < K; ++k) {
            const double t = static_cast<double>(k) * Ts;
            S(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(k)) =
                p.gain * evaluate_reference(symbols, config, t - p.delay) *
                std::polar(1.0, 2.0 * kPi * p.doppler * t);
        }
    }
    return S;
}

inline CMatrix path_signals_fast(const std::vector<PathState> &paths, const SymbolGrid &symbols,
                                 const WaveformConfig &config, std::size_t K) {
    const std::size_t N = config.num_subcarriers;
    const std::size_t Ncp = config.cp_samples;
    const std::size_t S = config.samples_per_symbol();
    const std::size_t G = config.num_symbols;
    const double Ts = config.sample_period();
    const double df = config.subcarrier_spacing;
    const double frame_end = static_cast<double>(G) * config.symbol_duration();
    CMatrix out(static_cast<Eigen::Index>(paths.size()), static_cast<Eigen::Index>(K));
    for (std::size_t l = 0; l < paths.size(); ++l) {
        const PathState &p = paths[l];
        CMatrix shifted = symbols.values;
        for (std::size_t n = 0; n < N; ++n) {
            const cdouble ramp = std::polar(1.0, -2.0 * kPi * static_cast<double>(n) * df * p.delay);
            shifted.row(static_cast<Eigen::Index>(n)) *= ramp;
        }
        const CMatrix td = time_domain_symbols(shifted);
        for (std::size_t k = 0; k < K; ++k) {
            const double t = static_cast<double>(k) * Ts;
            const double local = t - p.delay;
            cdouble v{0.0, 0.0};
            if (local >= 0.0 && local < frame_end) {
                const std::size_t g = std::min(k / S, G - 1);
                const std::size_t j = k - g * S;
                const std::size_t idx = (j + N - (Ncp % N)) % N;
                v = td(static_cast<Eigen::Index>(idx), static_cast<Eigen::Index>(g)) *
                    std::polar(1.0, 2.0 * kPi * p.doppler * t);
            }
            out(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(k)) = p.gain * v;
        }
    }
    return out;
}

} // namespace detail

/// Noise-free Y = sum_l a_l s_l^T over the compiled paths. With no paths the result is an
/// all-zero M x K matrix; M is then taken from `num_antennas`.
inline SnapshotMatrix synthesize_noiseless(const std::vector<PathState> &paths, const SymbolGrid &symbols,
                                           const WaveformConfig &config, SynthesisMode mode,
                                           std::size_t num_antennas = 0) {
    config.validate();
    detail::check_grid(symbols, config);
    detail::check_paths(paths);
    const auto M = paths.empty() ? static_cast<Eigen::Index>(num_antennas) : paths.front().steering.size();
    if (M == 0)
        throw DimensionError("synthesize: number of antennas is unknown");
    double max_delay = 0.0;
    for (const auto &p : paths)
        max_delay = std::max(max_delay, p.delay);
    const std::size_t K = snapshot_length(config, max_delay);

    SnapshotMatrix Y{CMatrix::Zero(M, static_cast<Eigen::Index>(K)), config.bandwidth()};
    if (paths.empty())
        return Y;
    CMatrix A(M, static_cast<Eigen::Index>(paths.size()));
    for (std::size_t l = 0; l < paths.size(); ++l)
        A.col(static_cast<Eigen::Index>(l)) = paths[l].steering;
    const CMatrix S = mode == SynthesisMode::exact ? detail::path_signals_exact(paths, symbols, config, K)
                                                   : detail::path_signals_fast(paths, symbols, config, K);
    Y.samples.noalias() = A * S;
    return Y;
}

// Adds i.i.d. circularly-symmetric complex Gaussian noise of variance sigma^2.
inline void add_noise(SnapshotMatrix &Y, const NoiseModel &noise) {
    if (!(noise.variance >= 0.0))
        throw DomainError("add_noise: variance must be non-negative");
    if (noise.variance == 0.0)
        return;
    Rng rng(noise.seed);
    std::normal_distribution<double> gauss(0.0, std::sqrt(noise.variance / 2.0));
    for (Eigen::Index k = 0; k < Y.samples.cols(); ++k)
        for (Eigen::Index m = 0; m < Y.samples.rows(); ++m) {
            const double re = gauss(rng);
            const double im = gauss(rng);
            Y.samples(m, k) += cdouble{re, im};
        }
}

inline SnapshotMatrix synthesize_received(const std::vector<PathState> &paths, const SymbolGrid &symbols,
                                          const WaveformConfig &config, const NoiseModel &noise,
                                          SynthesisMode mode, std::size_t num_antennas = 0) {
    SnapshotMatrix Y = synthesize_noiseless(paths, symbols, config, mode, num_antennas);
    add_noise(Y, noise);
    return Y;
}

// Mean per-antenna per-sample power of a snapshot matrix.
inline double mean_power(const SnapshotMatrix &Y) {
    if (Y.samples.size() == 0)
        return 0.0;
    return Y.samples.squaredNorm() / static_cast<double>(Y.samples.size());
}

// SNR is the received, pre-beamforming, per-antenna ratio of the aggregate noiseless
// signal power to sigma^2.
inline NoiseModel calibrate_noise(double target_snr_db, const SnapshotMatrix &noiseless, std::uint64_t seed = 0) {
    const double power = mean_power(noiseless);
    if (!(power > 0.0))
        throw PreconditionError("calibrate_noise: noiseless signal has zero power");
    return {power / std::pow(10.0, target_snr_db / 10.0), seed};
}

inline NoiseModel calibrate_noise(double target_snr_db, const std::vector<PathState> &paths,
                                  const SymbolGrid &symbols, const WaveformConfig &config,
                                  SynthesisMode mode = SynthesisMode::fast, std::uint64_t seed = 0) {
    if (paths.empty())
        throw PreconditionError("calibrate_noise: at least one path is required");
    return calibrate_noise(target_snr_db, synthesize_noiseless(paths, symbols, config, mode), seed);
}

} // namespace nfloc

#endif
