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


#ifndef NFLOC_NFLOC_HPP
#define NFLOC_NFLOC_HPP

#include "nfloc/channel.hpp"
#include "nfloc/common.hpp"
#include "nfloc/delay.hpp"
#include "nfloc/experiment.hpp"
#include "nfloc/geometry.hpp"
#include "nfloc/isolation.hpp"
#include "nfloc/localization.hpp"
#include "nfloc/music.hpp"
#include "nfloc/rng.hpp"
#include "nfloc/waveform.hpp"

#endif
