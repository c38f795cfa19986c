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

const Position2D kUe{15.0 * std::sqrt(3.0), 15.0};

std::vector<Scatterer> far_truth() { return preset_scenario("far").scenario.scatterers; }

} // namespace

TEST(Observation, PseudoRangeIsUeRangePlusClockTerm) {
    const auto obs = fixture::exact_observations(far_truth(), kUe, 0.2e-6);
    const auto truth = far_truth();
    for (std::size_t i = 0; i < obs.size(); ++i)
        EXPECT_NEAR(obs[i].pseudo_range(), distance(truth[i].position(), kUe) + kSpeedOfLight * 0.2e-6, 1e-8);
}

TEST(LinearSystem, TrueStateSatisfiesEveryRow) {
    const auto obs = fixture::exact_observations(far_truth(), kUe, 0.2e-6);
    const LinearSystem sys = build_linear_system(obs);
    ASSERT_EQ(sys.D.rows(), 4);
    const RVector x = (RVector(3) << kUe.x, kUe.y, 0.2e-6).finished();
    EXPECT_LE((sys.D * x - sys.p).cwiseAbs().maxCoeff(), 1e-6 * sys.p.cwiseAbs().maxCoeff());
    EXPECT_THROW(build_linear_system({obs[0]}), InsufficientAnchors);
}

TEST(Solver, ExactObservationsRecoverPositionAndClock) {
    const auto obs = fixture::exact_observations(far_truth(), kUe, 0.2e-6);
    const LocalizationResult r = solve_ue(build_linear_system(obs));
    EXPECT_LE(distance(r.position, kUe), 1e-6);
    EXPECT_LE(std::abs(r.clock_difference - 0.2e-6), 1e-12);
    EXPECT_LT(r.residual_norm, 1e-6);
    EXPECT_GT(r.condition, 1.0);
    const auto checks = back_substitute(r, obs);
    for (const auto &c : checks) {
        EXPECT_TRUE(c.valid);
        EXPECT_LT(c.consistency, 1e-6);
    }
}

TEST(Solver, ThreeAnchorsAreInsufficient) {
    auto obs = fixture::exact_observations(far_truth(), kUe, 0.2e-6);
    obs.resize(3);
    EXPECT_THROW(solve_ue(build_linear_system(obs)), InsufficientAnchors);
    const LinearSystem sys = build_linear_system(obs);
    const LocalizationResult known = solve_ue_known_clock(sys.D, sys.p, 0.2e-6);
    EXPECT_LE(distance(known.position, kUe), 1e-6);
    obs.resize(2);
    const LinearSystem two = build_linear_system(obs);
    EXPECT_THROW(solve_ue_known_clock(two.D, two.p, 0.2e-6), InsufficientAnchors);
}

TEST(Solver, AnchorsOnACircleAroundTheUeAreDegenerate) {
    std::vector<Scatterer> ring;
    for (double deg : {0.0, 70.0, 150.0, 200.0, 290.0}) {
        const Position2D p = kUe + Position2D{8.0 * std::cos(deg_to_rad(deg)), 8.0 * std::sin(deg_to_rad(deg))};
        ring.push_back(Scatterer::from_position(p));
    }
    const auto obs = fixture::exact_observations(ring, kUe, 0.1e-6);
    EXPECT_THROW(solve_ue(build_linear_system(obs)), DegenerateGeometry);
}

TEST(Solver, DimensionChecks) {
    EXPECT_THROW(solve_ue(RMatrix::Zero(4, 2), RVector::Zero(4)), DimensionError);
    EXPECT_THROW(solve_ue(RMatrix::Zero(4, 3), RVector::Zero(3)), DimensionError);
}
