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


#ifndef NFLOC_MUSIC_HPP
#define NFLOC_MUSIC_HPP

#include "nfloc/channel.hpp"
#include "nfloc/common.hpp"
#include "nfloc/geometry.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace nfloc {

// R = Y Y^H, unnormalized. Scaling R by any c > 0 leaves every subspace (and therefore every
// estimate below) unchanged, so R / K is an equally valid input.
inline CMatrix sample_covariance(const SnapshotMatrix &Y) {
    if (Y.samples.cols() < 1)
        throw DimensionError("sample_covariance: at least one snapshot is required");
    CMatrix R(Y.samples.rows(), Y.samples.rows());
    R.setZero();
    R.selfadjointView<Eigen::Lower>().rankUpdate(Y.samples);
    R = R.selfadjointView<Eigen::Lower>();
    return R;
}

/// How many eigen-directions of a covariance count as signal.
struct ModelOrderRule {
    enum class Kind {
        known,       // fixed count
        eigen_ratio, // last index i <= cap with lambda_i >= ratio * lambda_{i+1}
        mdl,         // minimum description length (Wax-Kailath)
    };

    Kind kind = Kind::eigen_ratio;
    std::size_t known_count = 0;
    double ratio = 10.0;
    std::size_t max_dims = 0;  // 0: no cap beyond the matrix size
    std::size_t snapshots = 0; // K, required by MDL
    // Eigenvalues below dynamic_range * (reference eigenvalue) are treated as zero by the
    // ratio and MDL rules. The reference is the largest eigenvalue of the unprojected
    // covariance, so the residue a grid-quantized zero-forcing step leaves behind is not
    // read as a path.
    double dynamic_range = 1e-6;

    static ModelOrderRule known(std::size_t count) { return {Kind::known, count, 10.0, 0, 0}; }
    static ModelOrderRule eigen_ratio(double ratio = 10.0, std::size_t cap = 0) {
        return {Kind::eigen_ratio, 0, ratio, cap, 0};
    }
    static ModelOrderRule mdl(std::size_t snapshots, std::size_t cap = 0) {
        return {Kind::mdl, 0, 10.0, cap, snapshots};
    }
};

inline std::string to_string(ModelOrderRule::Kind k) {
    switch (k) {
    case ModelOrderRule::Kind::known:
        return "known";
    case ModelOrderRule::Kind::eigen_ratio:
        return "ratio";
    case ModelOrderRule::Kind::mdl:
        return "mdl";
    }
    return "?";
}

struct SubspaceBasis {
    CMatrix signal;      // E_s, M x Ls
    CMatrix noise;       // E_n, M x (M - Ls)
    RVector eigenvalues; // descending

    std::size_t signal_dims() const { return static_cast<std::size_t>(signal.cols()); }
};

namespace detail {

// Number of signal eigenvalues among the leading `n` of a descending sequence.
inline std::size_t signal_dimension(const RVector &lambda, std::size_t n, const ModelOrderRule &rule,
                                    double reference) {
    if (n == 0)
        return 0;
    std::size_t cap = n - 1;
    if (rule.max_dims > 0)
        cap = std::min(cap, rule.max_dims);

    switch (rule.kind) {
    case ModelOrderRule::Kind::known:
        return std::min(rule.known_count, n);

    case ModelOrderRule::Kind::eigen_ratio: {
        if (!(rule.ratio > 1.0))
            throw DomainError("eig_split: eigenvalue ratio threshold must exceed 1");
        const double top = lambda[0];
        if (!(top > 0.0))
            return 0;
        // Eigenvalues below the floor count as zero: never signal, and any eigenvalue above
        // the floor followed by one below it is a gap.
        const double floor = std::max(top * 1e-10, rule.dynamic_range * reference);
        std::size_t dims = 0;
        for (std::size_t i = 1; i <= cap; ++i) {
            const double hi = lambda[static_cast<Eigen::Index>(i - 1)];
            const double lo = lambda[static_cast<Eigen::Index>(i)];
            if (hi < floor)
                break;
            if (lo < floor || hi >= rule.ratio * lo)
                dims = i;
        }
        return dims;
    }

    case ModelOrderRule::Kind::mdl: {
        if (rule.snapshots == 0)
            throw DomainError("eig_split: MDL requires the snapshot count");
        const double K = static_cast<double>(rule.snapshots);
        const double top = std::max(lambda[0], std::numeric_limits<double>::min());
        const double floor = std::max(top * 1e-14, rule.dynamic_range * reference);
        // Eigenvalues under the dynamic-range floor are never signal.
        std::size_t above = 0;
        while (above < n && lambda[static_cast<Eigen::Index>(above)] >= floor)
            ++above;
        cap = std::min(cap, above);
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_k = 0;
        for (std::size_t k = 0; k <= cap; ++k) {
            const std::size_t rest = n - k;
            double log_geo = 0.0, arith = 0.0;
            for (std::size_t i = k; i < n; ++i) {
                const double v = std::max(lambda[static_cast<Eigen::Index>(i)], floor);
                log_geo += std::log(v);
                arith += v;
            }
            log_geo /= static_cast<double>(rest);
            arith /= static_cast<double>(rest);
            const double kd = static_cast<double>(k);
            const double nd = static_cast<double>(n);
            const double value = -K * static_cast<double>(rest) * (log_geo - std::log(arith)) +
                                 0.5 * kd * (2.0 * nd - kd) * std::log(K);
            if (value < best) {
                best = value;
                best_k = k;
            }
        }
        return best_k;
    }
    }
    return 0;
}

} // namespace detail

/**
 * Eigendecomposition of a Hermitian covariance split into signal and noise subspaces.
 *
 * `nulled` is the number of directions already annihilated by a zero-forcing projection;
 * the order rule only looks at the leading M - nulled eigenvalues so that the exact zeros
 * produced by the projection are not mistaken for a signal/noise gap. `reference` is the
 * eigenvalue the dynamic-range floor of both rules is measured against (default: the
 * largest eigenvalue of R itself).
 */
inline SubspaceBasis eig_split(const CMatrix &R, const ModelOrderRule &rule, std::size_t nulled = 0,
                               double reference = 0.0) {
    if (R.rows() != R.cols() || R.rows() == 0)
        throw DimensionError("eig_split: covariance must be square and non-empty");
    if (!R.allFinite())
        throw DomainError("eig_split: covariance has non-finite entries");
    Eigen::SelfAdjointEigenSolver<CMatrix> evd(R);
    if (evd.info() != Eigen::Success)
        throw Error("eig_split: eigendecomposition failed");
    const Eigen::Index M = R.rows();
    SubspaceBasis out;
    out.eigenvalues = evd.eigenvalues().reverse();
    const CMatrix vectors = evd.eigenvectors().rowwise().reverse();
    const std::size_t effective = static_cast<std::size_t>(M) > nulled ? static_cast<std::size_t>(M) - nulled : 0;
    if (!(reference > 0.0))
        reference = std::max(out.eigenvalues[0], 0.0);
    const auto Ls =
        static_cast<Eigen::Index>(detail::signal_dimension(out.eigenvalues, effective, rule, reference));
    out.signal = vectors.leftCols(Ls);
    out.noise = vectors.rightCols(M - Ls);
    return out;
}

/// Orthogonal projector W = I - Q Q^H onto the complement of span(C), kept as an orthonormal
/// basis Q rather than an M x M matrix.
class NullProjector {
  public:
    explicit NullProjector(std::size_t dimension) : basis_(static_cast<Eigen::Index>(dimension), 0) {}

    std::size_t dimension() const { return static_cast<std::size_t>(basis_.rows()); }
    std::size_t rank() const { return static_cast<std::size_t>(basis_.cols()); }
    const CMatrix &basis() const { return basis_; }

    CVector apply(const CVector &x) const {
        if (basis_.cols() == 0)
            return x;
        CVector y = x - basis_ * (basis_.adjoint() * x);
        return y - basis_ * (basis_.adjoint() * y);
    }

    void apply_in_place(CMatrix &X) const {
        if (basis_.cols() == 0)
            return;
        X.noalias() -= basis_ * (basis_.adjoint() * X);
    }

    CMatrix matrix() const {
        const auto M = basis_.rows();
        CMatrix W = CMatrix::Identity(M, M);
        if (basis_.cols() > 0)
            W.noalias() -= basis_ * basis_.adjoint();
        return W;
    }

    // Adds x to the annihilated span. Returns false (and leaves the projector unchanged) when
    // x already lies in it to within `relative_tolerance` of its norm.
    bool append(const CVector &x, double relative_tolerance = 1e-6) {
        if (x.size() != basis_.rows())
            throw DimensionError("NullProjector: vector length mismatch");
        const double norm = x.norm();
        if (!(norm > 0.0))
            return false;
        const CVector r = apply(x);
        const double rn = r.norm();
        if (rn < relative_tolerance * norm)
            return false;
        basis_.conservativeResize(Eigen::NoChange, basis_.cols() + 1);
        basis_.col(basis_.cols() - 1) = r / rn;
        return true;
    }

  private:
    CMatrix basis_;
};

// Search axes: ranges in meters, angles in radians, both ascending.
struct GridAxes {
    std::vector<double> ranges;
    std::vector<double> angles;
};

/// Coarse search grid plus local zoom refinement parameters.
struct GridSpec {
    double min_range = 1.0;
    double max_range = 32.0;
    std::size_t num_ranges = 200; // logarithmic spacing
    double angle_min = -kPi / 2.0;
    double angle_max = kPi / 2.0; // exclusive
    double angle_step = deg_to_rad(0.5);
    std::size_t refine_levels = 2;
    std::size_t refine_factor = 10;

    void validate() const {
        if (!(min_range > 0.0) || !(max_range > min_range))
            throw DomainError("GridSpec: need 0 < min_range < max_range");
        if (num_ranges < 2)
            throw DomainError("GridSpec: at least two range points are required");
        if (!(angle_step > 0.0) || !(angle_max > angle_min))
            throw DomainError("GridSpec: invalid angle axis");
        if (refine_levels > 0 && refine_factor < 2)
            throw DomainError("GridSpec: refine factor must be at least 2");
    }

    // Multiplicative step between neighbouring coarse ranges.
    double range_ratio() const {
        return std::pow(max_range / min_range, 1.0 / static_cast<double>(num_ranges - 1));
    }

    GridAxes coarse_axes() const {
        validate();
        GridAxes axes;
        axes.ranges.reserve(num_ranges);
        const double ratio = range_ratio();
        for (std::size_t i = 0; i < num_ranges; ++i)
            axes.ranges.push_back(min_range * std::pow(ratio, static_cast<double>(i)));
        axes.ranges.back() = max_range;
        for (std::size_t j = 0;; ++j) {
            const double a = angle_min + static_cast<double>(j) * angle_step;
            if (a >= angle_max - 1e-12)
                break;
            axes.angles.push_back(a);
        }
        return axes;
    }
};

/// Spectrum values on a (range x angle) grid. Masked cells are those whose steering vector
/// is (numerically) annihilated by the zero-forcing projector; their value is 0.
struct SpectrumGrid {
    std::vector<double> ranges;
    std::vector<double> angles;
    RMatrix values; // ranges.size() x angles.size()
    Eigen::Matrix<unsigned char, Eigen::Dynamic, Eigen::Dynamic> masked;

    struct Peak {
        std::size_t range_index = 0;
        std::size_t angle_index = 0;
        double range = 0.0;
        double angle = 0.0;
        double value = -1.0;
    };

    // Global maximum over unmasked cells; first one wins on ties.
    std::optional<Peak> peak() const {
        std::optional<Peak> best;
        for (Eigen::Index j = 0; j < values.cols(); ++j)
            for (Eigen::Index i = 0; i < values.rows(); ++i) {
                if (masked(i, j))
                    continue;
                if (!best || values(i, j) > best->value)
                    best = Peak{static_cast<std::size_t>(i), static_cast<std::size_t>(j),
                                ranges[static_cast<std::size_t>(i)], angles[static_cast<std::size_t>(j)],
                                values(i, j)};
            }
        return best;
    }

    // Unmasked cells no smaller than any unmasked 8-neighbour, strongest first (ties keep
    // grid order). Plateaus yield several entries.
    std::vector<Peak> local_maxima(std::size_t limit) const {
        std::vector<Peak> found;
        const Eigen::Index nr = values.rows(), na = values.cols();
        for (Eigen::Index j = 0; j < na; ++j)
            for (Eigen::Index i = 0; i < nr; ++i) {
                if (masked(i, j))
                    continue;
                const double v = values(i, j);
                bool is_max = true;
                for (Eigen::Index dj = -1; dj <= 1 && is_max; ++dj)
                    for (Eigen::Index di = -1; di <= 1; ++di) {
                        const Eigen::Index ii = i + di, jj = j + dj;
                        if ((di == 0 && dj == 0) || ii < 0 || jj < 0 || ii >= nr || jj >= na || masked(ii, jj))
                            continue;
                        if (values(ii, jj) > v) {
                            is_max = false;
                            break;
                        }
                    }
                if (is_max)
                    found.push_back({static_cast<std::size_t>(i), static_cast<std::size_t>(j),
                                     ranges[static_cast<std::size_t>(i)], angles[static_cast<std::size_t>(j)], v});
            }
        std::stable_sort(found.begin(), found.end(), [](const Peak &a, const Peak &b) { return a.value > b.value; });
        if (found.size() > limit)
            found.resize(limit);
        return found;
    }
};

/**
 * Projected signal-subspace spectrum
 *
 *     P(r, theta) = || E_s^H b ||^2,   b = W a(r, theta) / || W a(r, theta) ||.
 *
 * With W = I this is the signal form of the classical MUSIC pseudo-spectrum:
 * 1 / (a^H E_n E_n^H a) = 1 / (M (1 - P)). Cells where ||W a|| < 1e-6 sqrt(M) are masked.
 */
inline SpectrumGrid projected_spectrum(const SubspaceBasis &basis, const NullProjector &projector,
                                       const GridAxes &axes, const ArrayGeometry &geometry) {
    if (axes.ranges.empty() || axes.angles.empty())
        throw DomainError("projected_spectrum: empty grid");
    const auto M = static_cast<Eigen::Index>(geometry.num_elements());
    if (projector.dimension() != static_cast<std::size_t>(M) || basis.signal.rows() != M)
        throw DimensionError("projected_spectrum: dimension mismatch");
    const auto nr = static_cast<Eigen::Index>(axes.ranges.size());
    const auto na = static_cast<Eigen::Index>(axes.angles.size());
    const double mask_level = 1e-6 * std::sqrt(static_cast<double>(M));

    SpectrumGrid out;
    out.ranges = axes.ranges;
    out.angles = axes.angles;
    out.values = RMatrix::Zero(nr, na);
    out.masked.setZero(nr, na);

    CMatrix A;
    bool any_unmasked = false;
    const CMatrix EsH = basis.signal.adjoint();
    for (Eigen::Index j = 0; j < na; ++j) {
        array_response_columns(geometry, axes.ranges, axes.angles[static_cast<std::size_t>(j)], A);
        projector.apply_in_place(A);
        const RVector norms2 = A.colwise().squaredNorm().transpose();
        RVector captured = RVector::Zero(nr);
        if (EsH.rows() > 0)
            captured = (EsH * A).colwise().squaredNorm().transpose();
        for (Eigen::Index i = 0; i < nr; ++i) {
            const double n2 = norms2[i];
            if (std::sqrt(n2) < mask_level) {
                out.masked(i, j) = 1;
                continue;
            }
            any_unmasked = true;
            out.values(i, j) = std::clamp(captured[i] / n2, 0.0, 1.0);
        }
    }
    if (!any_unmasked)
        throw DomainError("projected_spectrum: every grid cell is masked");
    return out;
}

struct ScattererEstimate {
    double range = 0.0; // r_B, meters
    double angle = 0.0; // theta, radians
    double score = 0.0; // spectrum peak value, [0, 1]
    std::size_t order = 0;

    Position2D position() const { return {range * std::cos(angle), range * std::sin(angle)}; }
};

struct MusicOptions {
    GridSpec grid;
    double threshold = 0.5; // P_th
    std::size_t max_paths = 10;
    ModelOrderRule order = ModelOrderRule::eigen_ratio(10.0);
    bool keep_spectra = false; // retain each iteration's coarse spectrum
    // Number of strongest coarse local maxima refined per iteration; the best refined one
    // is the iteration's peak.
    std::size_t refine_candidates = 1;
};

struct MusicResult {
    std::vector<ScattererEstimate> estimates;
    std::vector<std::size_t> signal_dims; // per iteration
    std::vector<double> peak_values;      // per iteration, refined when refinement ran
    std::vector<SpectrumGrid> spectra;    // only with keep_spectra
    std::vector<std::string> diagnostics;
};

namespace detail {

struct RefinedPeak {
    double range;
    double angle;
    double value;
};

// Zooms in on a coarse peak. Each level samples (2f+1)^2 points spanning one parent cell on
// either side at 1/f of the parent step; if the best sample sits on the window border the
// window is re-centred there before descending.
inline RefinedPeak refine_peak(const SubspaceBasis &basis, const NullProjector &projector,
                               const ArrayGeometry &geometry, const GridSpec &spec, double range, double angle,
                               double value) {
    RefinedPeak best{range, angle, value};
    const double lo_angle = -kPi / 2.0;
    const double hi_angle = kPi / 2.0 - 1e-12;
    double log_step = std::log(spec.range_ratio());
    double angle_step = spec.angle_step;
    const auto f = static_cast<int>(spec.refine_factor);
    for (std::size_t level = 0; level < spec.refine_levels; ++level) {
        log_step /= static_cast<double>(f);
        angle_step /= static_cast<double>(f);
        for (int recentre = 0; recentre < 16; ++recentre) {
            GridAxes axes;
            for (int t = -f; t <= f; ++t)
                axes.ranges.push_back(best.range * std::exp(log_step * t));
            for (int t = -f; t <= f; ++t) {
                const double a = best.angle + angle_step * t;
                if (a >= lo_angle && a <= hi_angle)
                    axes.angles.push_back(a);
            }
            SpectrumGrid local;
            try {
                local = projected_spectrum(basis, projector, axes, geometry);
            } catch (const DomainError &) {
                break;
            }
            const auto pk = local.peak();
            if (!pk || !(pk->value > best.value))
                break;
            best = {pk->range, pk->angle, pk->value};
            const bool edge = pk->range_index == 0 || pk->range_index + 1 == axes.ranges.size() ||
                              pk->angle_index == 0 || pk->angle_index + 1 == axes.angles.size();
            if (!edge)
                break;
        }
    }
    return best;
}

} // namespace detail

/**
 * Successive zero-forcing 2D-MUSIC.
 *
 * Starting from R_1 = R_y and W_1 = I, each iteration takes the signal subspace of R_l,
 * searches the projected spectrum for its global peak, refines it, and stops once the peak
 * does not exceed P_th. An accepted peak's steering vector joins C, W becomes the projector
 * onto the complement of span(C), and R_{l+1} = W R_y W^H. Detections therefore come out
 * strongest first.
 */
inline MusicResult successive_zf_music(const CMatrix &Ry, const ArrayGeometry &geometry,
                                       const MusicOptions &options) {
    const std::size_t M = geometry.num_elements();
    if (Ry.rows() != static_cast<Eigen::Index>(M) || Ry.cols() != static_cast<Eigen::Index>(M))
        throw DimensionError("successive_zf_music: covariance size does not match the array");
    if (!(options.threshold > 0.0 && options.threshold < 1.0))
        throw DomainError("successive_zf_music: threshold must lie in (0, 1)");
    if (options.max_paths > M - 1)
        throw DomainError("successive_zf_music: max_paths must not exceed M - 1");
    options.grid.validate();

    const GridAxes coarse = options.grid.coarse_axes();
    MusicResult out;
    NullProjector projector(M);
    CMatrix Rl = Ry;
    const double reference = Eigen::SelfAdjointEigenSolver<CMatrix>(Ry, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();

    while (out.estimates.size() < options.max_paths) {
        const SubspaceBasis basis = eig_split(Rl, options.order, projector.rank(), reference);
        out.signal_dims.push_back(basis.signal_dims());
        if (basis.signal_dims() == 0) {
            out.peak_values.push_back(0.0);
            out.diagnostics.push_back("iteration " + std::to_string(out.signal_dims.size()) +
                                      ": empty signal subspace");
            break;
        }
        SpectrumGrid spectrum = projected_spectrum(basis, projector, coarse, geometry);
        const auto coarse_peak = spectrum.peak();
        if (options.keep_spectra)
            out.spectra.push_back(spectrum);
        if (!coarse_peak)
            break;

        detail::RefinedPeak peak{coarse_peak->range, coarse_peak->angle, coarse_peak->value};
        if (coarse_peak->value > 0.0) {
            for (const auto &cand : spectrum.local_maxima(std::max<std::size_t>(options.refine_candidates, 1))) {
                const auto refined = detail::refine_peak(basis, projector, geometry, options.grid, cand.range,
                                                         cand.angle, cand.value);
                if (refined.value > peak.value)
                    peak = refined;
            }
        }
        out.peak_values.push_back(peak.value);
        if (!(peak.value > options.threshold))
            break;

        const CVector steering = array_response(geometry, peak.range, peak.angle);
        if (!projector.append(steering)) {
            std::ostringstream os;
            os << "iteration " << out.signal_dims.size() << ": steering at (" << peak.range << " m, "
               << rad_to_deg(peak.angle) << " deg) is already annihilated; stopping";
            out.diagnostics.push_back(os.str());
            break;
        }
        out.estimates.push_back({peak.range, peak.angle, peak.value, out.estimates.size()});

        const CMatrix W = projector.matrix();
        Rl.noalias() = W * Ry * W.adjoint();
        Rl = (0.5 * (Rl + Rl.adjoint())).eval();
    }
    return out;
}

} // namespace nfloc

#endif
