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


#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace nfloc;

namespace {

struct SmallSetup {
    ArrayGeometry geometry = ArrayGeometry::half_wavelength(8, 28e9);
    WaveformConfig waveform = fixture::small_waveform(64, 2, 32);
    Scenario scenario;

    SmallSetup() {
        scenario.scatterers = {{6.0, deg_to_rad(-20.0)}, {9.5, deg_to_rad(35.0)}};
        scenario.ue = {{8.0, 4.0}, {0.0, 10.0}};
        scenario.clock.clock_difference = 0.0;
    }
};

} // namespace

TEST(CompilePaths, DelaysGainsAndSteering) {
    SmallSetup s;
    const auto paths = compile_paths(s.scenario, s.geometry, s.waveform, GainPolicy::unit, 9);
    ASSERT_EQ(paths.size(), 2u);
    for (std::size_t l = 0; l < 2; ++l) {
        const Scatterer &sc = s.scenario.scatterers[l];
        const double expected = (sc.range + distance(sc.position(), s.scenario.ue.position)) / kSpeedOfLight;
        EXPECT_NEAR(paths[l].delay, expected, 1e-20);
        EXPECT_NEAR(std::abs(paths[l].gain), 1.0, 1e-15);
        EXPECT_LT((paths[l].steering - array_response(s.geometry, sc.range, sc.angle)).norm(), 1e-15);
    }
    const auto again = compile_paths(s.scenario, s.geometry, s.waveform, GainPolicy::unit, 9);
    EXPECT_EQ(paths[1].gain, again[1].gain);
}

TEST(CompilePaths, DistanceGainPolicy) {
    SmallSetup s;
    const auto paths = compile_paths(s.scenario, s.geometry, s.waveform, GainPolicy::distance, 1);
    for (const auto &p : paths)
        EXPECT_NEAR(std::abs(p.gain), 1.0 / (p.scatterer.range * p.ue_range), 1e-15);
}

TEST(CompilePaths, DelayOutsideCyclicPrefixIsRejected) {
    SmallSetup s;
    s.scenario.clock.clock_difference = s.waveform.cp_duration();
    EXPECT_THROW(compile_paths(s.scenario, s.geometry, s.waveform, GainPolicy::unit, 1), PreconditionError);
    s.scenario.clock.clock_difference = -1e-6;
    EXPECT_THROW(compile_paths(s.scenario, s.geometry, s.waveform, GainPolicy::unit, 1), PreconditionError);
}

TEST(CompilePaths, DopplerOverrideAndLimit) {
    SmallSetup s;
    s.scenario.doppler_overrides = {std::nullopt, 1234.0};
    const auto paths = compile_paths(s.scenario, s.geometry, s.waveform, GainPolicy::unit, 1);
    EXPECT_DOUBLE_EQ(paths[1].doppler, 1234.0);
    EXPECT_NE(paths[0].doppler, 1234.0);
    s.scenario.doppler_overrides = {s.waveform.subcarrier_spacing / 10.0};
    EXPECT_THROW(compile_paths(s.scenario, s.geometry, s.waveform, GainPolicy::unit, 1), PreconditionError);
}

TEST(Synthesis, SnapshotLengthCoversTheLatestPath) {
    const WaveformConfig c = fixture::small_waveform(64, 2, 16);
    EXPECT_EQ(snapshot_length(c, 0.0), c.frame_samples());
    EXPECT_EQ(snapshot_length(c, 3.0 * c.sample_period()), c.frame_samples() + 3);
    EXPECT_EQ(snapshot_length(c, 3.2 * c.sample_period()), c.frame_samples() + 4);
}

TEST(Synthesis, FastMatchesExactAwayFromSymbolBoundaries) {
    SmallSetup s;
    const auto paths = compile_paths(s.scenario, s.geometry, s.waveform, GainPolicy::unit, 3);
    const SymbolGrid sym = generate_symbols(s.waveform, 4);
    const SnapshotMatrix exact = synthesize_noiseless(paths, sym, s.waveform, SynthesisMode::exact);
    const SnapshotMatrix fast = synthesize_noiseless(paths, sym, s.waveform, SynthesisMode::fast);
    ASSERT_EQ(exact.samples.cols(), fast.samples.cols());
    const std::size_t S = s.waveform.samples_per_symbol();
    double worst = 0.0;
    const double scale = exact.samples.cwiseAbs().maxCoeff();
    for (std::size_t k = 0; k < s.waveform.frame_samples(); ++k) {
        if (k % S < s.waveform.cp_samples)
            continue;
        const auto c = static_cast<Eigen::Index>(k);
        worst = std::max(worst, (exact.samples.col(c) - fast.samples.col(c)).cwiseAbs().maxCoeff() / scale);
    }
    EXPECT_LT(worst, 1e-9);
}

TEST(Synthesis, NoiselessSnapshotsHaveRankL) {
    SmallSetup s;
    const auto paths = compile_paths(s.scenario, s.geometry, s.waveform, GainPolicy::unit, 3);
    const SnapshotMatrix Y = synthesize_noiseless(paths, generate_symbols(s.waveform, 4), s.waveform,
                                                  SynthesisMode::fast);
    Eigen::JacobiSVD<CMatrix> svd(Y.samples);
    const RVector sv = svd.singularValues();
    EXPECT_GT(sv[1], 1e-3 * sv[0]);
    EXPECT_LT(sv[2], 1e-10 * sv[0]);
}

TEST(Synthesis, EmptyPathListNeedsAntennaCount) {
    const WaveformConfig c = fixture::small_waveform(64, 2, 16);
    const SymbolGrid sym = generate_symbols(c, 1);
    EXPECT_THROW(synthesize_noiseless({}, sym, c, SynthesisMode::fast), DimensionError);
    const SnapshotMatrix Y = synthesize_noiseless({}, sym, c, SynthesisMode::fast, 4);
    EXPECT_EQ(Y.samples.rows(), 4);
    EXPECT_EQ(Y.samples.norm(), 0.0);
}

TEST(Noise, CalibrationFollowsTheDecibelLaw) {
    SmallSetup s;
    const auto paths = compile_paths(s.scenario, s.geometry, s.waveform, GainPolicy::unit, 3);
    const SymbolGrid sym = generate_symbols(s.waveform, 4);
    const SnapshotMatrix Y = synthesize_noiseless(paths, sym, s.waveform, SynthesisMode::fast);
    const NoiseModel n0 = calibrate_noise(0.0, Y);
    const NoiseModel n10 = calibrate_noise(10.0, Y);
    EXPECT_NEAR(n0.variance, mean_power(Y), 1e-15 * mean_power(Y));
    EXPECT_NEAR(n10.variance, n0.variance / 10.0, 1e-15 * n0.variance);
    EXPECT_NEAR(calibrate_noise(0.0, paths, sym, s.waveform).variance, n0.variance, 1e-15);
    EXPECT_THROW(calibrate_noise(0.0, SnapshotMatrix{CMatrix::Zero(2, 4), 1.0}), PreconditionError);
}

TEST(Noise, EmpiricalVarianceAndSeeding) {
    SnapshotMatrix a{CMatrix::Zero(16, 20000), 1.0};
    SnapshotMatrix b = a;
    add_noise(a, {2.5, 77});
    add_noise(b, {2.5, 77});
    EXPECT_EQ(a.samples, b.samples);
    EXPECT_NEAR(mean_power(a), 2.5, 0.025);
    EXPECT_NEAR(a.samples.real().squaredNorm() / a.samples.imag().squaredNorm(), 1.0, 0.02);
    EXPECT_THROW(add_noise(a, {-1.0, 0}), DomainError);
}
