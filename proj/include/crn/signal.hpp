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

#include <cstdint>
#include <vector>

#include "crn/common.hpp"

namespace crn {

/// Unit-norm spreading sequence of one user.
struct SpreadingCode {
    arma::vec chips;  // length N, ||chips|| = 1
    std::size_t user_id = 0;
};

// K random binary (+/-1) codes of length N, normalized to unit norm.
// Deterministic for a fixed seed.
std::vector<SpreadingCode> gen_spreading_codes(std::size_t K, std::size_t N, std::uint64_t seed);

// M x L banded signature matrix, M = N + L - 1. Column j (0-based) holds the
// code shifted down by j rows:  S(i, j) = c(i - j)  when 0 <= i - j < N.
arma::mat build_signature_matrix(const SpreadingCode& code, std::size_t L);

// --- QPSK -----------------------------------------------------------------
//
// Gray map, unit energy: bit pair (b0, b1) -> ((1 - 2 b0) + j (1 - 2 b1)) / sqrt(2),
// so (0,0) -> (+1+j)/sqrt(2). The slicer quantizes to the nearest constellation
// point; exact zeros on an axis resolve to the positive side.

cx qpsk_point(int b0, int b1);
arma::cx_vec qpsk_modulate(const std::vector<int>& bits);
cx qpsk_slice(cx z);
void qpsk_bits(cx symbol, int& b0, int& b1);

// Number of differing payload bits between two QPSK symbols (after slicing).
int qpsk_bit_errors(cx decided, cx reference);

/// Packet of QPSK symbols with a known training prefix.
struct SymbolStream {
    arma::cx_vec symbols;
    std::size_t training_len = 0;
};

SymbolStream gen_symbol_stream(std::size_t P, std::size_t training_len, std::uint64_t seed);

// --- Multipath fading link --------------------------------------------------
//
// L chip-spaced taps. Per-tap nominal powers follow a randomly perturbed
// exponential decay profile normalized to sum one; realizations are complex
// Gaussian draws from that profile, so the total link power is one in
// expectation while individual draws fade. Time variation is a per-tap AR(1)
// process whose coefficient matches the Clarke autocorrelation at lag one,
// rho = J0(2*pi*f_dT); the stationary law keeps unit expected total power.
class MultipathChannel {
  public:
    MultipathChannel(std::size_t L, double f_dT, std::uint64_t seed);

    const arma::cx_vec& gains() const { return h_; }
    const arma::vec& profile() const { return profile_; }
    double fading_coefficient() const { return rho_; }

    // Advance the fading process by `steps` symbols. f_dT = 0 leaves the
    // gains untouched.
    void evolve(std::size_t steps = 1);

  private:
    arma::cx_vec h_;
    arma::vec profile_;
    double rho_;
    double f_dT_;
    std::mt19937_64 rng_;
};

// One realization of the L-tap link (unit total power), as produced by
// MultipathChannel at construction.
arma::cx_vec gen_channel(std::size_t L, std::uint64_t seed);

}  // namespace crn
