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

#include "crn/signal.hpp"

#include <cmath>
#include <stdexcept>

namespace crn {

std::vector<SpreadingCode> gen_spreading_codes(std::size_t K, std::size_t N, std::uint64_t seed) {
    if (K == 0 || N == 0) throw std::invalid_argument("gen_spreading_codes: K and N must be positive");
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution coin(0.5);
    std::vector<SpreadingCode> codes(K);
    const double scale = 1.0 / std::sqrt(static_cast<double>(N));
    for (std::size_t k = 0; k < K; ++k) {
        codes[k].user_id = k;
        codes[k].chips.set_size(N);
        for (std::size_t n = 0; n < N; ++n) codes[k].chips[n] = coin(rng) ? scale : -scale;
    }
    return codes;
}

arma::mat build_signature_matrix(const SpreadingCode& code, std::size_t L) {
    if (L == 0) throw std::invalid_argument("build_signature_matrix: L must be positive");
    const std::size_t N = code.chips.n_elem;
    const std::size_t M = N + L - 1;
    arma::mat S(M, L, arma::fill::zeros);
    for (std::size_t j = 0; j < L; ++j)
        for (std::size_t n = 0; n < N; ++n) S(n + j, j) = code.chips[n];
    return S;
}

cx qpsk_point(int b0, int b1) {
    const double s = 1.0 / std::sqrt(2.0);
    return {(1 - 2 * b0) * s, (1 - 2 * b1) * s};
}

arma::cx_vec qpsk_modulate(const std::vector<int>& bits) {
    if (bits.size() % 2 != 0) throw std::invalid_argument("qpsk_modulate: bit count must be even");
    arma::cx_vec out(bits.size() / 2);
    for (std::size_t i = 0; i < out.n_elem; ++i) out[i] = qpsk_point(bits[2 * i], bits[2 * i + 1]);
    return out;
}

cx qpsk_slice(cx z) {
    const double s = 1.0 / std::sqrt(2.0);
    return {z.real() < 0.0 ? -s : s, z.imag() < 0.0 ? -s : s};
}

void qpsk_bits(cx symbol, int& b0, int& b1) {
    b0 = symbol.real() < 0.0 ? 1 : 0;
    b1 = symbol.imag() < 0.0 ? 1 : 0;
}

int qpsk_bit_errors(cx decided, cx reference) {
    int a0, a1, r0, r1;
    qpsk_bits(qpsk_slice(decided), a0, a1);
    qpsk_bits(qpsk_slice(reference), r0, r1);
    return (a0 != r0) + (a1 != r1);
}

SymbolStream gen_symbol_stream(std::size_t P, std::size_t training_len, std::uint64_t seed) {
    if (training_len > P) throw std::invalid_argument("gen_symbol_stream: training prefix longer than packet");
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution coin(0.5);
    SymbolStream s;
    s.training_len = training_len;
    s.symbols.set_size(P);
    for (std::size_t i = 0; i < P; ++i) s.symbols[i] = qpsk_point(coin(rng) ? 1 : 0, coin(rng) ? 1 : 0);
    return s;
}

MultipathChannel::MultipathChannel(std::size_t L, double f_dT, std::uint64_t seed)
    : f_dT_(f_dT), rng_(seed) {
    if (L == 0) throw std::invalid_argument("MultipathChannel: L must be positive");
    if (f_dT < 0.0) throw std::invalid_argument("MultipathChannel: f_dT must be nonnegative");

    // Exponentially decaying profile with a random perturbation per tap,
    // normalized to unit total nominal power. Realizations keep their Rayleigh
    // amplitude statistics: the unit power holds in expectation, which is what
    // leaves the link diversity intact.
    profile_.set_size(L);
    std::uniform_real_distribution<double> u(0.5, 1.5);
    for (std::size_t l = 0; l < L; ++l) profile_[l] = std::exp(-0.5 * static_cast<double>(l)) * u(rng_);
    profile_ /= arma::accu(profile_);

    h_.set_size(L);
    for (std::size_t l = 0; l < L; ++l) h_[l] = randn_c(rng_, profile_[l]);

    rho_ = f_dT > 0.0 ? std::cyl_bessel_j(0.0, 2.0 * arma::datum::pi * f_dT) : 1.0;
}

void MultipathChannel::evolve(std::size_t steps) {
    if (f_dT_ <= 0.0) return;
    const double innov = std::sqrt(std::max(0.0, 1.0 - rho_ * rho_));
    for (std::size_t s = 0; s < steps; ++s)
        for (std::size_t l = 0; l < h_.n_elem; ++l)
            h_[l] = rho_ * h_[l] + innov * randn_c(rng_, profile_[l]);
}

arma::cx_vec gen_channel(std::size_t L, std::uint64_t seed) {
    return MultipathChannel(L, 0.0, seed).gains();
}

}  // namespace crn
