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


#ifndef NFLOC_EXPERIMENT_HPP
#define NFLOC_EXPERIMENT_HPP

#include "nfloc/channel.hpp"
#include "nfloc/common.hpp"
#include "nfloc/delay.hpp"
#include "nfloc/geometry.hpp"
#include "nfloc/isolation.hpp"
#include "nfloc/localization.hpp"
#include "nfloc/music.hpp"
#include "nfloc/rng.hpp"
#include "nfloc/waveform.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace nfloc {

// ---------------------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------------------

struct ArrayConfig {
    std::size_t num_elements = 64;
    double spacing = 0.0; // meters; 0 selects lambda / 2
    double carrier_frequency = 28e9;

    ArrayGeometry geometry() const {
        if (spacing > 0.0)
            return {num_elements, spacing, carrier_frequency};
        return ArrayGeometry::half_wavelength(num_elements, carrier_frequency);
    }
};

struct ScenarioConfig {
    std::string name;
    Scenario scenario;
    GainPolicy gain_policy = GainPolicy::unit;
};

struct AlgorithmConfig {
    GridSpec grid;
    // Upper end of the range search; when unset, 1.2 x the largest scatterer range of the
    // scenario being processed.
    std::optional<double> max_range;
    double threshold = 0.5;
    std::size_t max_paths = 10;
    // An MDL rule with snapshots == 0 takes K from the snapshot matrix of each trial.
    ModelOrderRule order = ModelOrderRule::eigen_ratio(10.0);
    std::size_t refine_candidates = 1;
    std::size_t periodogram_factor = 16; // N_Per = factor * N
    Window window = Window::hamming;
    bool interpolate = true;
};

struct SweepConfig {
    std::vector<double> snr_db{0.0, 10.0, 20.0};
    std::size_t trials = 20;
    std::uint64_t seed = 1;
};

struct ExperimentConfig {
    std::string profile = "desk";
    WaveformConfig waveform;
    ArrayConfig array;
    std::vector<ScenarioConfig> scenarios;
    AlgorithmConfig algorithm;
    SweepConfig sweep;
    SynthesisMode mode = SynthesisMode::fast;
    bool dump_spectrum = false;

    ArrayGeometry geometry() const { return array.geometry(); }

    MusicOptions music_options(const ScenarioConfig &sc) const {
        MusicOptions o;
        o.grid = algorithm.grid;
        double r_max = 0.0;
        for (const auto &s : sc.scenario.scatterers)
            r_max = std::max(r_max, s.range);
        o.grid.max_range = algorithm.max_range ? *algorithm.max_range : 1.2 * r_max;
        o.threshold = algorithm.threshold;
        o.max_paths = algorithm.max_paths;
        o.order = algorithm.order;
        o.refine_candidates = algorithm.refine_candidates;
        o.keep_spectra = dump_spectrum;
        return o;
    }

    /// Throws ConfigError describing the first inconsistency found.
    void validate() const {
        try {
            waveform.validate();
            const ArrayGeometry g = geometry();
            if (scenarios.empty())
                throw ConfigError("no scenario configured");
            if (sweep.trials == 0)
                throw ConfigError("sweep.trials must be positive");
            if (!(algorithm.threshold > 0.0 && algorithm.threshold < 1.0))
                throw ConfigError("algorithm.threshold must lie in (0, 1)");
            if (algorithm.max_paths == 0 || algorithm.max_paths > g.num_elements() - 1)
                throw ConfigError("algorithm.max_paths must lie in [1, M - 1]");
            if (algorithm.periodogram_factor == 0)
                throw ConfigError("algorithm.periodogram_factor must be positive");
            for (const auto &sc : scenarios) {
                if (sc.scenario.scatterers.empty())
                    throw ConfigError("scenario '" + sc.name + "' has no scatterers");
                // Delay within the CP and Doppler below df/10.
                compile_paths(sc.scenario, g, waveform, sc.gain_policy, 0);
                music_options(sc).grid.validate();
            }
        } catch (const ConfigError &) {
            throw;
        } catch (const Error &e) {
            throw ConfigError(std::string("invalid configuration: ") + e.what());
        }
    }
};

// Scatterer layouts of the two reference scenarios ("close" and "far-apart"), with the UE at
// (15 sqrt(3), 15) m moving at (0, 10) m/s.
inline ScenarioConfig preset_scenario(const std::string &name, double clock_difference = 0.1e-6) {
    struct Polar {
        double range, angle_deg;
    };
    std::vector<Polar> layout;
    if (name == "close")
        layout = {{19.9, -18.0}, {20.9, -19.0}, {20.3, -21.0}, {2.1, -24.0}, {7.8, 14.0}};
    else if (name == "far")
        layout = {{26.6, 11.0}, {5.7, -23.0}, {23.0, 57.0}, {17.8, -16.0}, {15.4, -6.0}};
    else
        throw ConfigError("unknown scenario preset '" + name + "' (expected close or far)");
    ScenarioConfig sc;
    sc.name = name;
    for (const auto &p : layout)
        sc.scenario.scatterers.push_back({p.range, deg_to_rad(p.angle_deg)});
    sc.scenario.ue.position = {15.0 * std::sqrt(3.0), 15.0};
    sc.scenario.ue.velocity = {0.0, 10.0};
    sc.scenario.clock.clock_difference = clock_difference;
    return sc;
}

/// "desk": M = 64, N = 256, Gamma = 20, 20 trials. "paper": M = 256, N = 1024, Gamma = 100,
/// 100 trials. Both use B = 400 MHz, T_CP = 0.64 us, f_c = 28 GHz, d = lambda/2 and sweep
/// -10 .. 20 dB in 5 dB steps over both presets.
inline ExperimentConfig make_profile(const std::string &profile) {
    ExperimentConfig c;
    c.profile = profile;
    constexpr double bandwidth = 400e6;
    constexpr std::size_t cp = 256;
    if (profile == "desk") {
        c.waveform = WaveformConfig::from_bandwidth(bandwidth, 256, 20, cp);
        c.array.num_elements = 64;
        c.sweep.trials = 20;
    } else if (profile == "paper") {
        c.waveform = WaveformConfig::from_bandwidth(bandwidth, 1024, 100, cp);
        c.array.num_elements = 256;
        c.sweep.trials = 100;
    } else {
        throw ConfigError("unknown profile '" + profile + "' (expected desk or paper)");
    }
    c.array.carrier_frequency = 28e9;
    c.algorithm.order = ModelOrderRule::mdl(0);
    c.sweep.snr_db = {-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0};
    c.scenarios = {preset_scenario("far"), preset_scenario("close")};
    return c;
}

// ---------------------------------------------------------------------------------------
// Estimate-to-truth matching
// ---------------------------------------------------------------------------------------

struct Assignment {
    std::vector<std::pair<std::size_t, std::size_t>> pairs; // (truth, estimate), by truth index
    std::vector<std::size_t> missed;                         // unmatched truths
    std::vector<std::size_t> false_alarms;                   // unmatched estimates
    double total_cost = 0.0;
};

namespace detail {

// Minimum-cost assignment of every row to a distinct column (rows <= cols), Hungarian
// method with potentials. Returns the column chosen for each row.
inline std::vector<std::size_t> hungarian(const RMatrix &cost) {
    const auto n = static_cast<std::size_t>(cost.rows());
    const auto m = static_cast<std::size_t>(cost.cols());
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0), minv(m + 1);
    std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
    std::vector<char> used(m + 1);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = p[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= m; ++j) {
                if (used[j])
                    continue;
                const double cur = cost(static_cast<Eigen::Index>(i0 - 1), static_cast<Eigen::Index>(j - 1)) -
                                   u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<std::size_t> row_to_col(n, 0);
    for (std::size_t j = 1; j <= m; ++j)
        if (p[j] != 0)
            row_to_col[p[j] - 1] = j - 1;
    return row_to_col;
}

} // namespace detail

/// One-to-one assignment minimizing the total Cartesian distance between true and
/// estimated scatterer positions.
inline Assignment match_estimates(const std::vector<Scatterer> &truth,
                                  const std::vector<ScattererEstimate> &estimates) {
    Assignment out;
    const std::size_t T = truth.size(), E = estimates.size();
    if (T == 0 || E == 0) {
        for (std::size_t i = 0; i < T; ++i)
            out.missed.push_back(i);
        for (std::size_t j = 0; j < E; ++j)
            out.false_alarms.push_back(j);
        return out;
    }
    RMatrix cost(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(E));
    for (std::size_t i = 0; i < T; ++i)
        for (std::size_t j = 0; j < E; ++j)
            cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                distance(truth[i].position(), estimates[j].position());

    std::vector<char> truth_used(T, 0), est_used(E, 0);
    if (T <= E) {
        const auto cols = detail::hungarian(cost);
        for (std::size_t i = 0; i < T; ++i)
            out.pairs.emplace_back(i, cols[i]);
    } else {
        const RMatrix transposed = cost.transpose();
        const auto rows = detail::hungarian(transposed);
        for (std::size_t j = 0; j < E; ++j)
            out.pairs.emplace_back(rows[j], j);
        std::sort(out.pairs.begin(), out.pairs.end());
    }
    for (const auto &[i, j] : out.pairs) {
        truth_used[i] = 1;
        est_used[j] = 1;
        out.total_cost += cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    for (std::size_t i = 0; i < T; ++i)
        if (!truth_used[i])
            out.missed.push_back(i);
    for (std::size_t j = 0; j < E; ++j)
        if (!est_used[j])
            out.false_alarms.push_back(j);
    return out;
}

// ---------------------------------------------------------------------------------------
// Trials
// ---------------------------------------------------------------------------------------

struct TrialResult {
    std::string scenario;
    std::optional<double> snr_db; // empty: noiseless
    std::size_t trial = 0;

    std::vector<ScattererEstimate> estimates;
    std::vector<double> estimated_delays; // per estimate, when beamforming succeeded
    Assignment assignment;
    std::vector<double> scatterer_errors; // per matched pair, meters
    std::vector<double> delay_errors;     // per matched pair, seconds
    std::vector<std::string> diagnostics;
    std::vector<SpectrumGrid> spectra;

    // Populated on success only.
    std::optional<LocalizationResult> localization;
    double position_error = 0.0; // meters
    double clock_error = 0.0;    // seconds, signed
    // Populated on failure only.
    std::optional<std::string> failure;

    bool success() const { return localization.has_value(); }
};

/// Runs the complete chain for one trial: compile paths, synthesize Y, successive ZF
/// 2D-MUSIC, ZF path isolation, per-path delay estimation and the least-squares UE fix.
/// Randomness depends only on (sweep.seed, trial). Estimation failures are recorded in the
/// result; only configuration errors throw.
inline TrialResult run_trial(const ExperimentConfig &config, std::size_t scenario_index,
                             std::optional<double> snr_db, std::size_t trial) {
    if (scenario_index >= config.scenarios.size())
        throw ConfigError("run_trial: scenario index out of range");
    const ScenarioConfig &sc = config.scenarios[scenario_index];
    const ArrayGeometry geometry = config.geometry();
    const WaveformConfig &wf = config.waveform;

    TrialResult r;
    r.scenario = sc.name;
    r.snr_db = snr_db;
    r.trial = trial;

    const std::uint64_t master = config.sweep.seed;
    std::vector<PathState> paths;
    try {
        paths = compile_paths(sc.scenario, geometry, wf, sc.gain_policy, derive_seed(master, trial, Stream::gains));
    } catch (const Error &e) {
        throw ConfigError(e.what());
    }
    const SymbolGrid symbols = generate_symbols(wf, derive_seed(master, trial, Stream::symbols));
    SnapshotMatrix Y = synthesize_noiseless(paths, symbols, wf, config.mode, geometry.num_elements());
    if (snr_db)
        add_noise(Y, calibrate_noise(*snr_db, Y, derive_seed(master, trial, Stream::noise)));

    const CMatrix R = sample_covariance(Y);
    MusicOptions options = config.music_options(sc);
    if (options.order.kind == ModelOrderRule::Kind::mdl && options.order.snapshots == 0)
        options.order.snapshots = static_cast<std::size_t>(Y.samples.cols());
    MusicResult music = successive_zf_music(R, geometry, options);
    r.estimates = music.estimates;
    r.diagnostics = std::move(music.diagnostics);
    r.spectra = std::move(music.spectra);
    r.assignment = match_estimates(sc.scenario.scatterers, r.estimates);
    for (const auto &[i, j] : r.assignment.pairs)
        r.scatterer_errors.push_back(
            distance(sc.scenario.scatterers[i].position(), r.estimates[j].position()));

    if (!r.estimates.empty()) {
        try {
            const BeamformerBank bank = zf_beamformers(r.estimates, geometry);
            const auto streams = isolate_streams(Y, bank);
            const std::size_t n_per = config.algorithm.periodogram_factor * wf.num_subcarriers;
            for (const auto &s : streams) {
                const ReceiveGrid grid = demodulate_equalize(s, symbols, wf);
                const Periodogram per = periodogram(grid, config.algorithm.window, n_per, wf.subcarrier_spacing);
                r.estimated_delays.push_back(
                    estimate_delay(per, wf.subcarrier_spacing, n_per, config.algorithm.interpolate));
            }
            for (const auto &[i, j] : r.assignment.pairs)
                r.delay_errors.push_back(std::abs(r.estimated_delays[j] - paths[i].delay));
        } catch (const CollidingEstimates &e) {
            r.failure = std::string("colliding estimates: ") + e.what();
            return r;
        }
    }

    if (r.estimates.size() < 4) {
        r.failure = "insufficient anchors (" + std::to_string(r.estimates.size()) + " detected)";
        return r;
    }

    std::vector<AnchorObservation> obs;
    for (std::size_t j = 0; j < r.estimates.size(); ++j)
        obs.push_back(AnchorObservation::from_estimate(r.estimates[j], r.estimated_delays[j]));
    try {
        LocalizationResult loc = solve_ue(build_linear_system(obs));
        loc.ue_ranges = back_substitute(loc, obs);
        r.position_error = distance(loc.position, sc.scenario.ue.position);
        r.clock_error = loc.clock_difference - sc.scenario.clock.clock_difference;
        r.localization = std::move(loc);
    } catch (const DegenerateGeometry &e) {
        r.failure = std::string("degenerate geometry: ") + e.what();
    }
    return r;
}

// ---------------------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------------------

struct SweepRow {
    std::string scenario;
    double snr_db = 0.0;
    std::size_t trials = 0;
    std::size_t successes = 0;
    double rmse_position = std::numeric_limits<double>::quiet_NaN();      // meters
    double rmse_clock = std::numeric_limits<double>::quiet_NaN();         // seconds
    double mean_scatterer_error = std::numeric_limits<double>::quiet_NaN(); // meters
    double mean_delay_error = std::numeric_limits<double>::quiet_NaN();     // seconds
};

/// Aggregates the trials of one (scenario, SNR) point. RMSEs cover successful trials only;
/// the mean errors cover every matched scatterer / path of every trial.
inline SweepRow summarize(const std::string &scenario, double snr_db, const std::vector<TrialResult> &trials) {
    SweepRow row;
    row.scenario = scenario;
    row.snr_db = snr_db;
    row.trials = trials.size();
    double pos2 = 0.0, clk2 = 0.0, sc_sum = 0.0, d_sum = 0.0;
    std::size_t sc_n = 0, d_n = 0;
    for (const auto &t : trials) {
        if (t.success()) {
            ++row.successes;
            pos2 += t.position_error * t.position_error;
            clk2 += t.clock_error * t.clock_error;
        }
        for (double e : t.scatterer_errors) {
            sc_sum += e;
            ++sc_n;
        }
        for (double e : t.delay_errors) {
            d_sum += e;
            ++d_n;
        }
    }
    if (row.successes > 0) {
        row.rmse_position = std::sqrt(pos2 / static_cast<double>(row.successes));
        row.rmse_clock = std::sqrt(clk2 / static_cast<double>(row.successes));
    }
    if (sc_n > 0)
        row.mean_scatterer_error = sc_sum / static_cast<double>(sc_n);
    if (d_n > 0)
        row.mean_delay_error = d_sum / static_cast<double>(d_n);
    return row;
}

using TrialObserver = std::function<void(const TrialResult &)>;

/// Monte Carlo over every configured scenario and SNR point. Trials run in index order; the
/// observer (if any) sees each trial as it completes.
inline std::vector<SweepRow> run_sweep(const ExperimentConfig &config, const TrialObserver &observer = {}) {
    config.validate();
    std::vector<SweepRow> rows;
    for (std::size_t s = 0; s < config.scenarios.size(); ++s)
        for (double snr : config.sweep.snr_db) {
            std::vector<TrialResult> trials;
            trials.reserve(config.sweep.trials);
            for (std::size_t t = 0; t < config.sweep.trials; ++t) {
                trials.push_back(run_trial(config, s, snr, t));
                if (observer)
                    observer(trials.back());
                trials.back().spectra.clear();
            }
            rows.push_back(summarize(config.scenarios[s].name, snr, trials));
        }
    return rows;
}

namespace detail {

inline std::string format_number(double v) {
    if (std::isnan(v))
        return "nan";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

} // namespace detail

inline constexpr const char *kSweepCsvHeader =
    "snr_db,scenario,trials,successes,rmse_pos_m,rmse_tau_d_s,mean_scatterer_err_m,mean_delay_err_s";

inline std::string sweep_csv(const std::vector<SweepRow> &rows) {
    std::ostringstream os;
    os << kSweepCsvHeader << '\n';
    for (const auto &r : rows)
        os << detail::format_number(r.snr_db) << ',' << r.scenario << ',' << r.trials << ',' << r.successes << ','
           << detail::format_number(r.rmse_position) << ',' << detail::format_number(r.rmse_clock) << ','
           << detail::format_number(r.mean_scatterer_error) << ',' << detail::format_number(r.mean_delay_error)
           << '\n';
    return os.str();
}

// Plain-text spectrum dump: a range axis line, an angle axis line, then one row of values
// per range. Masked cells are written as 0.
inline std::string spectrum_text(const SpectrumGrid &s) {
    std::ostringstream os;
    os << "# ranges_m";
    for (double r : s.ranges)
        os << ' ' << detail::format_number(r);
    os << "\n# angles_rad";
    for (double a : s.angles)
        os << ' ' << detail::format_number(a);
    os << '\n';
    for (Eigen::Index i = 0; i < s.values.rows(); ++i) {
        for (Eigen::Index j = 0; j < s.values.cols(); ++j)
            os << (j ? " " : "") << detail::format_number(s.values(i, j));
        os << '\n';
    }
    return os.str();
}

} // namespace nfloc

#endif
