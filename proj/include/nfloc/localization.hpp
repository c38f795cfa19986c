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


#ifndef NFLOC_LOCALIZATION_HPP
#define NFLOC_LOCALIZATION_HPP

#include "nfloc/common.hpp"
#include "nfloc/geometry.hpp"
#include "nfloc/music.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

namespace nfloc {

// A localized scatterer used as a virtual anchor together with the total delay of its path.
struct AnchorObservation {
    Position2D anchor;        // (x_l, y_l)
    double range_to_bs = 0.0; // r_B,l
    double delay = 0.0;       // tau_s,l, includes the clock difference

    // q_l = c tau_s,l - r_B,l
    double pseudo_range() const { return kSpeedOfLight * delay - range_to_bs; }

    static AnchorObservation from_estimate(const ScattererEstimate &e, double delay) {
        return {e.position(), e.range, delay};
    }
};

// D x = p with x = [x_U, y_U, tau_d]^T; row i differences anchor 0 against anchor i + 1.
struct LinearSystem {
    RMatrix D;
    RVector p;
};

inline LinearSystem build_linear_system(const std::vector<AnchorObservation> &observations) {
    if (observations.size() < 2)
        throw InsufficientAnchors("build_linear_system: at least two anchors are required");
    const auto rows = static_cast<Eigen::Index>(observations.size() - 1);
    LinearSystem sys{RMatrix(rows, 3), RVector(rows)};
    const AnchorObservation &o1 = observations.front();
    const double x1 = o1.anchor.x, y1 = o1.anchor.y, q1 = o1.pseudo_range();
    for (Eigen::Index i = 0; i < rows; ++i) {
        const AnchorObservation &ol = observations[static_cast<std::size_t>(i + 1)];
        const double xl = ol.anchor.x, yl = ol.anchor.y, ql = ol.pseudo_range();
        sys.D(i, 0) = 2.0 * (x1 - xl);
        sys.D(i, 1) = 2.0 * (y1 - yl);
        sys.D(i, 2) = 2.0 * (ql - q1) * kSpeedOfLight;
        sys.p[i] = x1 * x1 - xl * xl + y1 * y1 - yl * yl + ql * ql - q1 * q1;
    }
    return sys;
}

struct UeRangeCheck {
    double ue_range = 0.0;    // r_U,l = c (tau_s,l - tau_d) - r_B,l
    bool valid = false;       // r_U,l > 0
    double consistency = 0.0; // | ||anchor - UE|| - r_U,l |
};

struct LocalizationResult {
    Position2D position;
    double clock_difference = 0.0;
    double residual_norm = 0.0;
    double condition = 0.0; // of the column-scaled system
    std::vector<UeRangeCheck> ue_ranges;
};

namespace detail {

// The tau_d column carries a factor c; solving for c * tau_d (meters) instead keeps the
// columns commensurate.
inline LocalizationResult solve_scaled(const RMatrix &D, const RVector &p, std::size_t unknowns) {
    const Eigen::Index n = static_cast<Eigen::Index>(unknowns);
    RMatrix A = D.leftCols(n);
    if (n == 3)
        A.col(2) /= kSpeedOfLight;
    Eigen::JacobiSVD<RMatrix> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const RVector &s = svd.singularValues();
    const double cond = s[n - 1] > 0.0 ? s[0] / s[n - 1] : std::numeric_limits<double>::infinity();
    if (!(s[0] > 0.0) || !(s[n - 1] > s[0] * 1e-10)) {
        std::ostringstream os;
        os << "solve_ue: anchor geometry is degenerate (condition " << cond << ")";
        throw DegenerateGeometry(os.str(), cond);
    }
    const RVector x = svd.solve(p);
    LocalizationResult out;
    out.position = {x[0], x[1]};
    out.clock_difference = n == 3 ? x[2] / kSpeedOfLight : 0.0;
    out.residual_norm = (A * x - p).norm();
    out.condition = cond;
    return out;
}

} // namespace detail

/// Least-squares UE position and clock difference minimizing ||D x - p||_2, computed with an
/// SVD. Needs at least three difference rows (four anchors) of full column rank.
inline LocalizationResult solve_ue(const RMatrix &D, const RVector &p) {
    if (D.cols() != 3 || D.rows() != p.size())
        throw DimensionError("solve_ue: D must be (L-1) x 3 and match p");
    if (D.rows() < 3) {
        std::ostringstream os;
        os << "solve_ue: " << D.rows() + 1 << " anchors, at least 4 are required";
        throw InsufficientAnchors(os.str());
    }
    return detail::solve_scaled(D, p, 3);
}

inline LocalizationResult solve_ue(const LinearSystem &sys) { return solve_ue(sys.D, sys.p); }

// Known clock difference: only the position is unknown, three anchors suffice.
inline LocalizationResult solve_ue_known_clock(const RMatrix &D, const RVector &p, double clock_difference) {
    if (D.cols() != 3 || D.rows() != p.size())
        throw DimensionError("solve_ue_known_clock: D must be (L-1) x 3 and match p");
    if (D.rows() < 2) {
        std::ostringstream os;
        os << "solve_ue_known_clock: " << D.rows() + 1 << " anchors, at least 3 are required";
        throw InsufficientAnchors(os.str());
    }
    const RVector rhs = p - D.col(2) * clock_difference;
    LocalizationResult out = detail::solve_scaled(D, rhs, 2);
    out.clock_difference = clock_difference;
    return out;
}

inline std::vector<UeRangeCheck> back_substitute(const LocalizationResult &result,
                                                 const std::vector<AnchorObservation> &observations) {
    std::vector<UeRangeCheck> out;
    out.reserve(observations.size());
    for (const auto &o : observations) {
        UeRangeCheck c;
        c.ue_range = kSpeedOfLight * (o.delay - result.clock_difference) - o.range_to_bs;
        c.valid = c.ue_range > 0.0;
        c.consistency = std::abs(distance(o.anchor, result.position) - c.ue_range);
        out.push_back(c);
    }
    return out;
}

} // namespace nfloc

#endif
