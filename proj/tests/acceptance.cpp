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


// Acceptance run: one PASS/FAIL line per criterion, exit status 0 only if all pass.

#include "test_support.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

using namespace nfloc;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string &what) {
        if (!ok) {
            pass = false;
            detail += (detail.empty() ? "" : "; ") + std::string("FAILED ") + what;
        }
    }
    void note(const std::string &text) { detail += (detail.empty() ? "" : "; ") + text; }
};

std::string fmt(const char *format, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), format, v);
    return buf;
}

std::vector<Scatterer> far_truth() { return preset_scenario("far").scenario.scatterers; }

// Noise-free covariance of unit-power, independent sources.
CMatrix source_covariance(const ArrayGeometry &g, const std::vector<Scatterer> &scatterers, double noise,
                          std::uint64_t seed) {
    const auto M = static_cast<Eigen::Index>(g.num_elements());
    Rng rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    SnapshotMatrix Y{CMatrix::Zero(M, 400), 1.0};
    for (const auto &s : scatterers) {
        const CVector a = array_response(g, s.range, s.angle);
        for (Eigen::Index k = 0; k < 400; ++k)
            Y.samples.col(k) += a * cdouble(gauss(rng), gauss(rng));
    }
    if (noise > 0.0)
        add_noise(Y, {noise, seed + 1});
    return sample_covariance(Y);
}

Outcome synthesis_equivalence() {
    Outcome o;
    const ArrayGeometry g = ArrayGeometry::half_wavelength(8, 28e9);
    const WaveformConfig c = WaveformConfig::from_bandwidth(400e6, 64, 2, 32);
    Scenario sc;
    sc.scatterers = {{6.0, deg_to_rad(-20.0)}, {9.5, deg_to_rad(35.0)}};
    sc.ue = {{8.0, 4.0}, {0.0, 10.0}};
    const auto paths = compile_paths(sc, g, c, GainPolicy::unit, 3);
    const SymbolGrid sym = generate_symbols(c, 4);
    const SnapshotMatrix exact = synthesize_noiseless(paths, sym, c, SynthesisMode::exact);
    const SnapshotMatrix fast = synthesize_noiseless(paths, sym, c, SynthesisMode::fast);
    o.require(exact.samples.cols() == fast.samples.cols(), "equal snapshot counts");
    const double scale = exact.samples.cwiseAbs().maxCoeff();
    double worst = 0.0;
    std::size_t compared = 0;
    for (std::size_t k = 0; k < c.frame_samples(); ++k) {
        if (k % c.samples_per_symbol() < c.cp_samples)
            continue;
        const auto col = static_cast<Eigen::Index>(k);
        worst = std::max(worst, (exact.samples.col(col) - fast.samples.col(col)).cwiseAbs().maxCoeff() / scale);
        ++compared;
    }
    o.require(worst <= 1e-9, "relative error <= 1e-9");
    o.note("max relative error " + fmt("%.2e", worst) + " over " + std::to_string(compared) + " samples");
    return o;
}

Outcome subspace_properties() {
    Outcome o;
    const ArrayGeometry g = fixture::desk_array();
    double worst_norm = 0.0;
    for (double r : {0.7, 2.1, 12.0, 26.6, 500.0})
        for (double deg : {-80.0, -23.0, 0.0, 11.0, 57.0})
            worst_norm = std::max(worst_norm, std::abs(array_response(g, r, deg_to_rad(deg)).squaredNorm() - 64.0));
    o.require(worst_norm <= 1e-10, "||a||^2 = M");

    const CMatrix R = source_covariance(g, far_truth(), 0.5, 11);
    const SubspaceBasis b = eig_split(R, ModelOrderRule::eigen_ratio());
    const double ortho = (b.signal.adjoint() * b.noise).cwiseAbs().maxCoeff();
    o.require(ortho <= 1e-10, "E_s^H E_n ~ 0");

    GridSpec spec;
    spec.max_range = 32.0;
    const SpectrumGrid s = projected_spectrum(b, NullProjector(64), spec.coarse_axes(), g);
    o.require(s.values.minCoeff() >= 0.0 && s.values.maxCoeff() <= 1.0, "spectrum within [0, 1]");

    MusicOptions opt;
    opt.grid = spec;
    opt.grid.num_ranges = 100;
    opt.grid.angle_step = deg_to_rad(1.0);
    const MusicResult base = successive_zf_music(R, g, opt);
    bool identical = true;
    for (double c : {8.0, 0.125, 3.7}) {
        const MusicResult scaled = successive_zf_music(c * R, g, opt);
        identical = identical && scaled.estimates.size() == base.estimates.size() &&
                    scaled.signal_dims == base.signal_dims;
        for (std::size_t i = 0; identical && i < base.estimates.size(); ++i)
            identical = std::abs(scaled.estimates[i].range - base.estimates[i].range) <= 1e-9 &&
                        std::abs(scaled.estimates[i].angle - base.estimates[i].angle) <= 1e-12;
    }
    o.require(identical, "R -> cR leaves the estimates unchanged");
    o.note("| ||a||^2 - M | " + fmt("%.1e", worst_norm) + ", |E_s^H E_n| " + fmt("%.1e", ortho) + ", " +
           std::to_string(base.estimates.size()) + " estimates invariant under scaling");
    return o;
}

Outcome single_path_exactness() {
    Outcome o;
    const ArrayGeometry g = fixture::desk_array();
    const CMatrix R = source_covariance(g, {{12.0, deg_to_rad(20.0)}}, 0.0, 5);
    MusicOptions opt;
    opt.grid.max_range = 1.2 * 12.0;
    const MusicResult r = successive_zf_music(R, g, opt);
    o.require(r.estimates.size() == 1, "exactly one estimate");
    if (!r.estimates.empty()) {
        const double dr = std::abs(r.estimates[0].range - 12.0);
        const double da = std::abs(rad_to_deg(r.estimates[0].angle) - 20.0);
        o.require(dr <= 0.02, "range error <= 0.02 m");
        o.require(da <= 0.01, "angle error <= 0.01 deg");
        o.note("range error " + fmt("%.2e", dr) + " m, angle error " + fmt("%.2e", da) + " deg");
    }
    return o;
}

Outcome zf_contract() {
    Outcome o;
    const ArrayGeometry g = fixture::desk_array();
    const BeamformerBank bank = zf_beamformers(fixture::estimates_from(far_truth()), g);
    double leak = 0.0, norm_err = 0.0, idem = 0.0;
    for (Eigen::Index l = 0; l < static_cast<Eigen::Index>(bank.size()); ++l) {
        norm_err = std::max(norm_err, std::abs(bank.weights.col(l).norm() - 1.0));
        for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(bank.size()); ++j)
            if (j != l)
                leak = std::max(leak, std::abs(bank.weights.col(l).dot(bank.steering.col(j))));
        const CMatrix Q = zf_projector(bank, static_cast<std::size_t>(l));
        idem = std::max(idem, (Q * Q - Q).cwiseAbs().maxCoeff());
    }
    o.require(leak <= 1e-10, "|f_l^H a_l'| <= 1e-10");
    o.require(norm_err <= 1e-12, "||f_l|| = 1");
    o.require(idem <= 1e-10, "projector idempotent");
    o.note("leakage " + fmt("%.1e", leak) + ", norm error " + fmt("%.1e", norm_err) + ", idempotency " +
           fmt("%.1e", idem));
    return o;
}

CVector single_path_stream(const WaveformConfig &c, const SymbolGrid &sym, double delay, double doppler) {
    PathState p;
    p.delay = delay;
    p.doppler = doppler;
    p.steering = CVector::Ones(1);
    return synthesize_noiseless({p}, sym, c, SynthesisMode::fast).samples.row(0).transpose();
}

Outcome delay_exactness() {
    Outcome o;
    const WaveformConfig c = WaveformConfig::from_bandwidth(400e6, 256, 4, 64);
    const SymbolGrid sym = generate_symbols(c, 5);
    const double df = c.subcarrier_spacing;
    bool exact = true;
    for (std::size_t k0 : {std::size_t{0}, std::size_t{9}, std::size_t{40}, std::size_t{63}}) {
        const double tau = static_cast<double>(k0) / (256.0 * df);
        const ReceiveGrid F = demodulate_equalize(single_path_stream(c, sym, tau, 0.0), sym, c);
        exact = exact && peak_bin(periodogram(F, Window::rectangular, 256, df)) == k0;
    }
    o.require(exact, "on-grid argmax bin exact");

    const std::size_t n_per = 16 * 256;
    const double bound = 1.0 / (2.0 * static_cast<double>(n_per) * df);
    double worst = 0.0;
    Rng rng(21);
    std::uniform_real_distribution<double> pick(0.0, 60.0);
    for (int t = 0; t < 20; ++t) {
        const double tau = pick(rng) * c.sample_period();
        const ReceiveGrid F = demodulate_equalize(single_path_stream(c, sym, tau, 0.0), sym, c);
        const Periodogram per = periodogram(F, Window::hamming, n_per, df);
        worst = std::max(worst, std::abs(estimate_delay(per, df, n_per, true) - tau));
    }
    o.require(worst <= bound, "off-grid error <= 1/(2 N_Per df)");

    const std::size_t k0 = 23;
    const ReceiveGrid F = demodulate_equalize(single_path_stream(c, sym, static_cast<double>(k0) / (256.0 * df),
                                                                 df / 20.0),
                                              sym, c);
    const std::size_t shifted = peak_bin(periodogram(F, Window::rectangular, 256, df));
    o.require(shifted == k0, "Doppler df/20 moves the peak by 0 bins");
    o.note("off-grid worst " + fmt("%.2e", worst) + " s (bound " + fmt("%.2e", bound) + " s), Doppler shift " +
           std::to_string(static_cast<long>(shifted) - static_cast<long>(k0)) + " bins");
    return o;
}

Outcome solver_exactness() {
    Outcome o;
    const Position2D ue{15.0 * std::sqrt(3.0), 15.0};
    auto obs = fixture::exact_observations(far_truth(), ue, 0.2e-6);
    const LocalizationResult r = solve_ue(build_linear_system(obs));
    const double pos = distance(r.position, ue);
    const double clk = std::abs(r.clock_difference - 0.2e-6);
    o.require(pos <= 1e-6, "position error <= 1e-6 m");
    o.require(clk <= 1e-12, "clock error <= 1e-12 s");
    obs.resize(3);
    bool thrown = false;
    try {
        solve_ue(build_linear_system(obs));
    } catch (const InsufficientAnchors &) {
        thrown = true;
    }
    o.require(thrown, "3 anchors -> InsufficientAnchors");
    o.note("position error " + fmt("%.2e", pos) + " m, clock error " + fmt("%.2e", clk) + " s");
    return o;
}

struct SweepRuns {
    std::vector<SweepRow> far;
    SweepRow close20;
};

SweepRuns desk_sweeps() {
    SweepRuns runs;
    ExperimentConfig far = make_profile("desk");
    far.scenarios = {preset_scenario("far")};
    far.sweep.snr_db = {0.0, 10.0, 20.0};
    far.sweep.trials = 20;
    runs.far = run_sweep(far);
    ExperimentConfig close = far;
    close.scenarios = {preset_scenario("close")};
    close.sweep.snr_db = {20.0};
    runs.close20 = run_sweep(close).front();
    return runs;
}

Outcome end_to_end(const SweepRuns &runs) {
    Outcome o;
    const auto &f = runs.far;
    bool finite = f.size() == 3;
    for (const auto &r : f)
        finite = finite && std::isfinite(r.rmse_position);
    o.require(finite, "RMSE defined at every SNR");
    if (finite) {
        std::size_t inversions = 0;
        bool small = true;
        for (std::size_t i = 0; i + 1 < f.size(); ++i)
            if (f[i + 1].rmse_position > f[i].rmse_position) {
                ++inversions;
                small = small && f[i + 1].rmse_position <= 1.1 * f[i].rmse_position;
            }
        o.require(inversions <= 1 && small, "(a) RMSE non-increasing in SNR");
        o.require(f[2].rmse_position <= 0.5, "(a) RMSE <= 0.5 m at 20 dB");
        o.require(f[2].rmse_position <= runs.close20.rmse_position || std::isnan(runs.close20.rmse_position),
                  "(b) far RMSE <= close RMSE at 20 dB");
        const double rate = static_cast<double>(f[2].successes) / static_cast<double>(f[2].trials);
        o.require(rate >= 0.9, "(c) success rate >= 90% at 20 dB");
        o.note("far RMSE " + fmt("%.3f", f[0].rmse_position) + " / " + fmt("%.3f", f[1].rmse_position) + " / " +
               fmt("%.3f", f[2].rmse_position) + " m at 0/10/20 dB, close " +
               fmt("%.3f", runs.close20.rmse_position) + " m at 20 dB, far success " + fmt("%.0f%%", 100.0 * rate));
    }
    return o;
}

Outcome determinism(const SweepRuns &first) {
    Outcome o;
    ExperimentConfig c = make_profile("desk");
    c.scenarios = {preset_scenario("far"), preset_scenario("close")};
    c.sweep.snr_db = {20.0};
    c.sweep.trials = 20;
    const std::string again = sweep_csv(run_sweep(c));
    const std::string before = sweep_csv({first.far[2], first.close20});
    o.require(again == before, "byte-identical CSV on re-run");
    o.note(std::to_string(again.size()) + " CSV bytes compared");
    return o;
}

} // namespace

int main() {
    struct Criterion {
        int id;
        const char *name;
        double limit_s;
        std::function<Outcome()> run;
    };
    SweepRuns sweeps;
    const std::vector<Criterion> criteria{
        {1, "synthesis oracle equivalence", 5.0, synthesis_equivalence},
        {2, "steering and subspace properties", 10.0, subspace_properties},
        {3, "single-path MUSIC exactness", 30.0, single_path_exactness},
        {4, "zero-forcing contract", 5.0, zf_contract},
        {5, "delay exactness", 10.0, delay_exactness},
        {6, "solver exactness", 1.0, solver_exactness},
        {7, "end-to-end desk sweep", 900.0,
         [&] {
             sweeps = desk_sweeps();
             return end_to_end(sweeps);
         }},
        {8, "determinism", 900.0, [&] { return determinism(sweeps); }},
    };

    int failed = 0;
    for (const auto &c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception &e) {
            o.require(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        o.require(secs < c.limit_s, "runtime limit " + fmt("%.0f s", c.limit_s));
        if (!o.pass)
            ++failed;
        std::printf("%s criterion %d (%s): %s [%.2f s]\n", o.pass ? "PASS" : "FAIL", c.id, c.name,
                    o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
