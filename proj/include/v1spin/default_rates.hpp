// Copyright 2026 The v1spin Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Default rates for the fine-structure model. Only the structure of the
// model is published; every number below is a documented choice and every
// acceptance test pins these values explicitly.
//
// Rates in 1/us, frequencies in MHz.

namespace v1spin::defaults {

/// Excited-state lifetime of the |m|=3/2 branch, 5.5 ns.
inline constexpr double kExcitedLifetimeUs = 5.5e-3;
inline constexpr double kGammaTotal = 1.0 / kExcitedLifetimeUs;  // 181.8/us

/// 10% of the |m|=3/2 excited decay goes through intersystem crossing.
inline constexpr double kIscBranching = 0.1;
inline constexpr double kGammaR = (1.0 - kIscBranching) * kGammaTotal;
inline constexpr double kGamma2 = kIscBranching * kGammaTotal;
/// gamma_1 = 3 gamma_2.
inline constexpr double kGamma1 = 3.0 * kGamma2;

/// Doublet return rates set by the 103.7 ns shelving time of the g2 fit.
inline constexpr double kShelvingUs = 103.7e-3;
inline constexpr double kGamma3 = 1.0 / kShelvingUs;
inline constexpr double kGamma4 = 1.0 / kShelvingUs;

/// Ground-state spin relaxation, 1/(260 us).
inline constexpr double kGammaRelax = 1.0 / 260.0;
inline constexpr double kGammaS = 10.0;
inline constexpr double kLambda = 10.0;

inline constexpr double kOmegaL = 5.0;

/// Broadband MW mixing rate and bandwidth.
inline constexpr double kMwRate = 5.0;
inline constexpr double kMwBandwidth = 10.0;

/// Spin-1/2-equivalent MW drive; gives a 257.5 kHz Rabi frequency on the
/// -1/2 <-> -3/2 pair (matrix element sqrt(3)/2).
inline constexpr double kMwRabiMhz = 0.2575 / 1.7320508075688772;

inline constexpr double kT2StarUs = 30.0;
inline constexpr double kT2Us = 850.0;
inline constexpr double kEchoStretch = 3.0;

}  // namespace v1spin::defaults
