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


#ifndef NFLOC_RNG_HPP
#define NFLOC_RNG_HPP

#include <cstdint>
#include <random>

namespace nfloc {

// All randomness goes through std::mt19937_64 seeded from an explicit 64-bit seed; there is
// no global generator. Substreams are derived from a master seed with SplitMix64 so that a
// trial's draws depend only on (master seed, trial index, stream), never on scheduling.
using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

enum class Stream : std::uint64_t {
    symbols = 1,
    gains = 2,
    noise = 3,
};

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t trial, Stream stream) {
    std::uint64_t s = splitmix64(master);
    s = splitmix64(s ^ (trial * 0xd1b54a32d192ed03ULL));
    return splitmix64(s ^ static_cast<std::uint64_t>(stream));
}

} // namespace nfloc

#endif
