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


#ifndef NFLOC_GEOMETRY_HPP
#define NFLOC_GEOMETRY_HPP

#include "nfloc/common.hpp"

#include <cmath>
#include <cstddef>
#include <sstream>

namespace nfloc {

struct Position2D {
    double x = 0.0;
    double y = 0.0;

    Position2D operator+(const Position2D &o) const { return {x + o.x, y + o.y}; }
    Position2D operator-(const Position2D &o) const { return {x - o.x, y - o.y}; }
    double norm() const { return std::hypot(x, y); }
    double dot(const Position2D &o) const { return x * o.x + y * o.y; }
    bool finite() const { return std::isfinite(x) && std::isfinite(y); }
};

inline double distance(const Position2D &a, const Position2D &b) { return (a - b).norm(); }

// Uniform linear array along the y axis. Element m (0-based here) sits at (0, m*d);
// element 0 is the phase reference.
class ArrayGeometry {
  public:
    ArrayGeometry(std::size_t num_elements, double spacing, double carrier_frequency)
        : num_elements_(num_elements), spacing_(spacing), carrier_frequency_(carrier_frequency) {
        if (num_elements_ < 2)
            throw DomainError("ArrayGeometry: at least two elements are required");
        if (!(spacing_ > 0.0) || !std::isfinite(spacing_))
            throw DomainError("ArrayGeometry: element spacing must be positive");
        if (!(carrier_frequency_ > 0.0) || !std::isfinite(carrier_frequency_))
            throw DomainError("ArrayGeometry: carrier frequency must be positive");
    }

    // d = lambda / 2 at the given carrier.
    static ArrayGeometry half_wavelength(std::size_t num_elements, double carrier_frequency) {
        return {num_elements, 0.5 * kSpeedOfLight / carrier_frequency, carrier_frequency};
    }

    std::size_t num_elements() const { return num_elements_; }
    double spacing() const { return spacing_; }
    double carrier_frequency() const { return carrier_frequency_; }
    double wavelength() const { return kSpeedOfLight / carrier_frequency_; }
    double wavenumber() const { return 2.0 * kPi / wavelength(); }
    double aperture() const { return static_cast<double>(num_elements_ - 1) * spacing_; }

    Position2D element_position(std::size_t m) const { return {0.0, static_cast<double>(m) * spacing_}; }

  private:
    std::size_t num_elements_;
    double spacing_;
    double carrier_frequency_;
};

// Scatterer in polar coordinates about the reference element.
struct Scatterer {
    double range = 1.0; // r_B, meters
    double angle = 0.0; // theta, radians, [-pi/2, pi/2)

    Position2D position() const { return {range * std::cos(angle), range * std::sin(angle)}; }

    void validate() const {
        if (!(range > 0.0) || !std::isfinite(range))
            throw DomainError("Scatterer: range must be positive and finite");
        if (!(angle >= -kPi / 2.0 && angle < kPi / 2.0))
            throw DomainError("Scatterer: angle must lie in [-pi/2, pi/2)");
    }

    static Scatterer from_position(const Position2D &p) { return {p.norm(), std::atan2(p.y, p.x)}; }
};

struct UeState {
    Position2D position;
    Position2D velocity; // m/s; zero is allowed
};

struct ClockModel {
    double clock_difference = 0.0; // tau_d, seconds
};

// Phase lag of element m (0-based) relative to the reference element for a source at
// (range, angle):  (2pi/lambda) * (|p - e_m| - range). Written in the cancellation-free
// form (x^2 - 2 r x sin(theta)) / (|p - e_m| + r), which stays accurate for r >> x.
inline double element_phase(const ArrayGeometry &geometry, double range, double angle, std::size_t m) {
    const double x = static_cast<double>(m) * geometry.spacing();
    const double sin_t = std::sin(angle);
    const double dist = std::sqrt(range * range - 2.0 * range * x * sin_t + x * x);
    return geometry.wavenumber() * (x * x - 2.0 * range * x * sin_t) / (dist + range);
}

// Near-field (uniform spherical wave) array response a(r, theta); entry m = exp(-j phi_m).
inline CVector array_response(const ArrayGeometry &geometry, double range, double angle) {
    if (!(range > 0.0) || !std::isfinite(range))
        throw DomainError("array_response: range must be positive and finite");
    if (!std::isfinite(angle))
        throw DomainError("array_response: angle must be finite");
    const std::size_t M = geometry.num_elements();
    CVector a(static_cast<Eigen::Index>(M));
    a[0] = cdouble{1.0, 0.0};
    for (std::size_t m = 1; m < M; ++m)
        a[static_cast<Eigen::Index>(m)] = std::polar(1.0, -element_phase(geometry, range, angle, m));
    return a;
}

// Writes array responses for a batch of ranges at one angle into the columns of `out`
// (M x ranges.size()). Used by the spectrum search.
template <typename RangeContainer>
void array_response_columns(const ArrayGeometry &geometry, const RangeContainer &ranges, double angle,
                            CMatrix &out) {
    const auto M = static_cast<Eigen::Index>(geometry.num_elements());
    const auto n = static_cast<Eigen::Index>(ranges.size());
    out.resize(M, n);
    const double k = geometry.wavenumber();
    const double d = geometry.spacing();
    const double sin_t = std::sin(angle);
    for (Eigen::Index c = 0; c < n; ++c) {
        const double r = ranges[static_cast<std::size_t>(c)];
        out(0, c) = cdouble{1.0, 0.0};
        for (Eigen::Index m = 1; m < M; ++m) {
            const double x = static_cast<double>(m) * d;
            const double dist = std::sqrt(r * r - 2.0 * r * x * sin_t + x * x);
            out(m, c) = std::polar(1.0, -k * (x * x - 2.0 * r * x * sin_t) / (dist + r));
        }
    }
}

struct PathGeometry {
    double ue_range = 0.0;   // r_U, meters
    double delay = 0.0;      // tau = (r_B + r_U) / c
    double total_delay = 0.0; // tau_s = tau + tau_d
    double doppler = 0.0;    // f_D, Hz
};

// Bistatic path UE -> scatterer -> BS. BS and scatterers are static, so the path length
// rate is the UE velocity projected on the UE->scatterer direction.
inline PathGeometry path_params(const Scatterer &scatterer, const UeState &ue, const ClockModel &clock,
                                double wavelength) {
    if (!(scatterer.range > 0.0))
        throw DomainError("path_params: scatterer coincides with the reference element");
    const Position2D s = scatterer.position();
    const Position2D to_scatterer = s - ue.position;
    PathGeometry out;
    out.ue_range = to_scatterer.norm();
    out.delay = (scatterer.range + out.ue_range) / kSpeedOfLight;
    out.total_delay = out.delay + clock.clock_difference;
    if (out.ue_range > 0.0) {
        const Position2D u{to_scatterer.x / out.ue_range, to_scatterer.y / out.ue_range};
        out.doppler = ue.velocity.dot(u) / wavelength;
    }
    return out;
}

// 2 D^2 / lambda with D = (M - 1) d.
inline double rayleigh_distance(const ArrayGeometry &geometry) {
    const double D = geometry.aperture();
    return 2.0 * D * D / geometry.wavelength();
}

} // namespace nfloc

#endif
