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

#ifndef NFLOC_COMMON_HPP
#define NFLOC_COMMON_HPP

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>

namespace nfloc {

using cdouble = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

inline constexpr const char *kVersion = "0.1.0";

inline constexpr double kSpeedOfLight = 299792458.0; // m/s, exact
inline constexpr double kPi = std::numbers::pi;

inline constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

// Error hierarchy. Everything thrown by the library derives from nfloc::Error.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of a function (r <= 0, NaN time, ...).
class DomainError : public Error {
  public:
    using Error::Error;
};

// A physical or algorithmic precondition does not hold (delay beyond CP, ...).
class PreconditionError : public Error {
  public:
    using Error::Error;
};

class DimensionError : public Error {
  public:
    using Error::Error;
};

// Fewer than the required number of virtual anchors.
class InsufficientAnchors : public Error {
  public:
    using Error::Error;
};

// Anchor geometry does not determine the solution (rank-deficient system).
class DegenerateGeometry : public Error {
  public:
    DegenerateGeometry(const std::string &what, double condition)
        : Error(what), condition_(condition) {}
    double condition() const { return condition_; }

  private:
    double condition_;
};

// Two estimates produce (numerically) parallel steering vectors.
class CollidingEstimates : public Error {
  public:
    CollidingEstimates(const std::string &what, std::size_t first, std::size_t second)
        : Error(what), first_(first), second_(second) {}
    std::size_t first() const { return first_; }
    std::size_t second() const { return second_; }

  private:
    std::size_t first_;
    std::size_t second_;
};

class ConfigError : public Error {
  public:
    using Error::Error;
};

} // namespace nfloc

#endif
