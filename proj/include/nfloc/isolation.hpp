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


#ifndef NFLOC_ISOLATION_HPP
#define NFLOC_ISOLATION_HPP

#include "nfloc/channel.hpp"
#include "nfloc/common.hpp"
#include "nfloc/geometry.hpp"
#include "nfloc/music.hpp"

#include <sstream>
#include <vector>

namespace nfloc {

// Column l of `weights` is the unit-norm zero-forcing beamformer f_l for estimate l.
struct BeamformerBank {
    CMatrix weights;  // M x L
    CMatrix steering; // estimated a_l, M x L

    std::size_t size() const { return static_cast<std::size_t>(weights.cols()); }
};

struct IsolatedStream {
    CVector samples; // r_l[k] = f_l^H y[k]
    std::size_t estimate_index = 0;
};

/// SNR-optimal ZF beamformers f_l = Q_l a_l / ||Q_l a_l||, where Q_l projects onto the
/// orthogonal complement of every other estimated steering vector. Q_l is built from an
/// orthonormal basis of A_l (Householder QR), not from (A_l^H A_l)^{-1}.
inline BeamformerBank zf_beamformers(const std::vector<ScattererEstimate> &estimates,
                                     const ArrayGeometry &geometry, double collision_tolerance = 1e-9) {
    if (estimates.empty())
        throw DomainError("zf_beamformers: at least one estimate is required");
    const auto M = static_cast<Eigen::Index>(geometry.num_elements());
    const auto L = static_cast<Eigen::Index>(estimates.size());
    if (L > M)
        throw DimensionError("zf_beamformers: more estimates than antennas");

    BeamformerBank bank;
    bank.steering.resize(M, L);
    for (Eigen::Index l = 0; l < L; ++l)
        bank.steering.col(l) = array_response(geometry, estimates[static_cast<std::size_t>(l)].range,
                                              estimates[static_cast<std::size_t>(l)].angle);

    // Pairwise coherence |a_i^H a_j| / M close to 1 means the pair cannot be separated.
    for (Eigen::Index i = 0; i < L; ++i)
        for (Eigen::Index j = i + 1; j < L; ++j) {
            const double coherence =
                std::abs(bank.steering.col(i).dot(bank.steering.col(j))) / static_cast<double>(M);
            if (coherence > 1.0 - collision_tolerance) {
                std::ostringstream os;
                os << "zf_beamformers: estimates " << i << " and " << j << " have parallel steering vectors";
                throw CollidingEstimates(os.str(), static_cast<std::size_t>(i), static_cast<std::size_t>(j));
            }
        }

    bank.weights.resize(M, L);
    for (Eigen::Index l = 0; l < L; ++l) {
        const CVector &a = bank.steering.col(l);
        CVector f = a;
        if (L > 1) {
            CMatrix others(M, L - 1);
            for (Eigen::Index j = 0, c = 0; j < L; ++j)
                if (j != l)
                    others.col(c++) = bank.steering.col(j);
            Eigen::HouseholderQR<CMatrix> qr(others);
            const CMatrix Q = qr.householderQ() * CMatrix::Identity(M, L - 1);
            f -= Q * (Q.adjoint() * f);
            f -= Q * (Q.adjoint() * f);
        }
        const double n = f.norm();
        if (!(n > collision_tolerance * a.norm())) {
            std::ostringstream os;
            os << "zf_beamformers: estimate " << l << " lies in the span of the others";
            throw CollidingEstimates(os.str(), static_cast<std::size_t>(l), static_cast<std::size_t>(l));
        }
        bank.weights.col(l) = f / n;
    }
    return bank;
}

// Projector Q_l = I - A_l (A_l^H A_l)^{-1} A_l^H for beamformer l, formed explicitly (tests,
// diagnostics).
inline CMatrix zf_projector(const BeamformerBank &bank, std::size_t l) {
    const Eigen::Index M = bank.steering.rows();
    const Eigen::Index L = bank.steering.cols();
    CMatrix Q = CMatrix::Identity(M, M);
    if (L <= 1)
        return Q;
    CMatrix others(M, L - 1);
    for (Eigen::Index j = 0, c = 0; j < L; ++j)
        if (j != static_cast<Eigen::Index>(l))
            others.col(c++) = bank.steering.col(j);
    Eigen::HouseholderQR<CMatrix> qr(others);
    const CMatrix B = qr.householderQ() * CMatrix::Identity(M, L - 1);
    Q.noalias() -= B * B.adjoint();
    return Q;
}

inline std::vector<IsolatedStream> isolate_streams(const SnapshotMatrix &Y, const BeamformerBank &bank) {
    if (Y.samples.rows() != bank.weights.rows())
        throw DimensionError("isolate_streams: beamformer length does not match the array");
    const CMatrix streams = bank.weights.adjoint() * Y.samples;
    std::vector<IsolatedStream> out(bank.size());
    for (std::size_t l = 0; l < out.size(); ++l) {
        out[l].samples = streams.row(static_cast<Eigen::Index>(l)).transpose();
        out[l].estimate_index = l;
    }
    return out;
}

} // namespace nfloc

#endif
