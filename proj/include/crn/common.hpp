// SPDX-License-Identifier: Apache-2.0
//
// crnsim: link-level simulator for cooperative DS-CDMA and MIMO relay networks
// Copyright (C) 2026 crnsim contributors
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

#pragma once

#include <armadillo>
#include <complex>
#include <cstdint>
#include <random>

namespace crn {

using cx = std::complex<double>;

// Deterministic seed derivation: every consumer of randomness gets its own
// engine seeded from (master, stream tag, index) so that adding or removing
// one consumer never shifts the draws of another.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag, std::uint64_t index = 0) {
    std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (tag + 1) + 0xbf58476d1ce4e5b9ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Zero-mean complex Gaussian with E|x|^2 = variance.
inline cx randn_c(std::mt19937_64& rng, double variance = 1.0) {
    std::normal_distribution<double> n(0.0, std::sqrt(variance / 2.0));
    return {n(rng), n(rng)};
}

inline arma::cx_vec randn_cvec(std::mt19937_64& rng, std::size_t n, double variance = 1.0) {
    arma::cx_vec v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = randn_c(rng, variance);
    return v;
}

}  // namespace crn
