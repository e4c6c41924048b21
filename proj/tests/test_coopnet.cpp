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

#include <catch2/catch_amalgamated.hpp>

#include "crn/coopnet.hpp"

using namespace crn;

namespace {

NetworkConfig small_config(std::size_t K, std::size_t n_r, bool isi) {
    NetworkConfig cfg;
    cfg.K = K;
    cfg.n_r = n_r;
    cfg.N = 8;
    cfg.L = 3;
    cfg.sigma2 = 0.01;
    cfg.isi = isi;
    cfg.pa_spread_db = 0.0;
    return cfg;
}

}  // namespace

TEST_CASE("noiseless single-user direct block") {
    NetworkConfig cfg = small_config(1, 0, false);
    CdmaNetwork net(cfg, 0.0, 3);
    const cx b = qpsk_point(0, 1);
    const arma::cx_vec bc{b};
    const arma::vec amp{1.7};
    const arma::cx_vec zero{cx(0.0, 0.0)};
    const arma::vec zamp{0.0};

    const arma::cx_vec y = net.dest_block(0, zero, bc, zero, zamp, amp, zamp);
    const arma::cx_vec expect = 1.7 * b * net.front(0).sig[0];
    REQUIRE(arma::abs(y - expect).max() < 1e-14);
    REQUIRE(y.n_elem == cfg.M());
}

TEST_CASE("observation dimensions for the experiment setup") {
    NetworkConfig cfg;
    cfg.K = 2;
    cfg.n_r = 2;
    cfg.N = 16;
    cfg.L = 5;
    REQUIRE(cfg.M() == 20);
    REQUIRE(cfg.J() == 60);
    REQUIRE(cfg.Q() == 15);
}

TEST_CASE("receiver noise calibration") {
    std::mt19937_64 rng(17);
    const double sigma2 = 0.37;
    const std::size_t n = 100000, M = 20;
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        acc += std::norm(arma::norm(randn_cvec(rng, M, sigma2)));
    const double per_component = acc / static_cast<double>(n * M);
    REQUIRE(std::abs(per_component - sigma2) < 0.02 * sigma2);
}

TEST_CASE("noise is independent across phase blocks") {
    std::mt19937_64 a(derive_seed(5, 8, 0)), b(derive_seed(5, 8, 1));
    const std::size_t n = 100000;
    cx cross = 0.0;
    double pa = 0.0, pb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const cx x = randn_c(a), y = randn_c(b);
        cross += x * std::conj(y);
        pa += std::norm(x);
        pb += std::norm(y);
    }
    REQUIRE(std::abs(cross) / std::sqrt(pa * pb) < 0.01);
}

TEST_CASE("relay processing") {
    SECTION("AF scales and stays linear") {
        arma::cx_mat filters(4, 2, arma::fill::ones);
        const arma::cx_vec zero(4, arma::fill::zeros);
        REQUIRE(arma::norm(relay_process(RelayProtocol::af, filters, zero, 2.0)) == 0.0);

        std::mt19937_64 rng(3);
        const arma::cx_vec x = randn_cvec(rng, 4), y = randn_cvec(rng, 4);
        const arma::cx_vec lhs = relay_process(RelayProtocol::af, filters, x + y, 0.7);
        const arma::cx_vec rhs = relay_process(RelayProtocol::af, filters, x, 0.7) +
                                 relay_process(RelayProtocol::af, filters, y, 0.7);
        REQUIRE(arma::abs(lhs - rhs).max() < 1e-12);
    }

    SECTION("DF outputs stay in the alphabet") {
        std::mt19937_64 rng(4);
        arma::cx_mat filters = arma::cx_mat(randn_cvec(rng, 4));
        const arma::cx_vec out = relay_process(RelayProtocol::df, filters, randn_cvec(rng, 4));
        REQUIRE(std::abs(std::abs(out[0]) - 1.0) < 1e-12);
        REQUIRE(qpsk_slice(out[0]) == out[0]);
    }

    SECTION("DF decodes noiseless orthogonal users exactly") {
        const double s = 1.0 / std::sqrt(2.0);
        arma::cx_mat sig(2, 2);
        sig(0, 0) = s;
        sig(1, 0) = s;
        sig(0, 1) = s;
        sig(1, 1) = -s;
        const arma::cx_vec b{qpsk_point(1, 0), qpsk_point(0, 1)};
        const arma::cx_vec obs = sig * b;
        const arma::cx_vec out = relay_process(RelayProtocol::df, sig, obs);
        REQUIRE(std::abs(out[0] - b[0]) < 1e-12);
        REQUIRE(std::abs(out[1] - b[1]) < 1e-12);
    }

    SECTION("AF gain drives the output power to one") {
        std::mt19937_64 rng(9);
        AfGainTracker tracker;
        const double input_power = 3.4;
        double out_power = 0.0;
        std::size_t counted = 0;
        for (std::size_t i = 0; i < 10000; ++i) {
            const arma::cx_vec soft = randn_cvec(rng, 2, input_power);
            const double g = tracker.gain();
            tracker.observe(soft);
            if (i >= 100) {  // let the running average settle
                out_power += std::norm(arma::norm(g * soft)) / soft.n_elem;
                ++counted;
            }
        }
        REQUIRE(std::abs(out_power / counted - 1.0) < 0.05);
    }
}

TEST_CASE("stacked factorization identity") {
    // Direct block assembly agrees with sum_k P_k B_k a_k on a random
    // two-user, two-relay instance.
    NetworkConfig cfg = small_config(2, 2, false);
    CdmaNetwork net(cfg, 0.0, 21);
    std::mt19937_64 rng(33);

    arma::cx_vec b(cfg.K), zero(cfg.K, arma::fill::zeros);
    arma::cx_mat btilde(cfg.K, cfg.n_r);
    for (auto& v : b) v = qpsk_slice(randn_c(rng));
    for (auto& v : btilde) v = qpsk_slice(randn_c(rng));
    std::vector<arma::vec> amps;
    for (std::size_t k = 0; k < cfg.K; ++k)
        amps.push_back(arma::vec{0.9 + 0.1 * k, 0.4, 1.3 - 0.2 * k});

    // Phase-by-phase assembly.
    std::vector<arma::cx_vec> blocks;
    arma::vec zamp(cfg.K, arma::fill::zeros);
    for (std::size_t l = 0; l <= cfg.n_r; ++l) {
        arma::vec amp(cfg.K);
        arma::cx_vec sym(cfg.K);
        for (std::size_t k = 0; k < cfg.K; ++k) {
            amp[k] = amps[k][l];
            sym[k] = l == 0 ? b[k] : btilde(k, l - 1);
        }
        blocks.push_back(net.dest_block(l, zero, sym, zero, zamp, amp, zamp));
    }
    const arma::cx_vec direct = assemble_received(blocks);

    // Compact form.
    arma::cx_vec compact(cfg.J(), arma::fill::zeros);
    for (std::size_t k = 0; k < cfg.K; ++k) {
        const arma::cx_mat P = stacked_signature(net.front(k));
        arma::cx_vec Ba(cfg.n_r + 1);
        for (std::size_t l = 0; l <= cfg.n_r; ++l)
            Ba[l] = (l == 0 ? b[k] : btilde(k, l - 1)) * amps[k][l];
        compact += P * Ba;
    }
    REQUIRE(arma::abs(direct - compact).max() < 1e-10);
}

TEST_CASE("received vector stacking") {
    NetworkConfig cfg = small_config(1, 2, false);
    REQUIRE_THROWS_AS(assemble_received({}), std::invalid_argument);
    std::vector<arma::cx_vec> blocks{arma::cx_vec(4, arma::fill::ones),
                                     arma::cx_vec(3, arma::fill::ones)};
    REQUIRE_THROWS_AS(assemble_received(blocks), std::invalid_argument);

    std::vector<arma::cx_vec> ok{arma::cx_vec(4, arma::fill::value(cx(1.0, 0.0))),
                                 arma::cx_vec(4, arma::fill::value(cx(2.0, 0.0)))};
    const arma::cx_vec r = assemble_received(ok);
    REQUIRE(r.n_elem == 8);
    REQUIRE(r[0] == cx(1.0, 0.0));
    REQUIRE(r[4] == cx(2.0, 0.0));
}

TEST_CASE("effective signature blocks match the per-link fronts") {
    NetworkConfig cfg = small_config(2, 1, true);
    CdmaNetwork net(cfg, 0.0, 8);
    const arma::cx_vec p = effective_signature(net.front(0));
    REQUIRE(p.n_elem == cfg.J());
    REQUIRE(arma::norm(p.subvec(0, cfg.M() - 1) - net.front(0).sig[0]) == 0.0);
    REQUIRE(arma::norm(p.subvec(cfg.M(), 2 * cfg.M() - 1) - net.front(0).sig[1]) == 0.0);

    // The composite channel map reproduces the effective signature.
    const arma::cx_vec ones_b(cfg.n_r + 1, arma::fill::value(cx(1.0, 0.0)));
    const arma::vec ones_a(cfg.n_r + 1, arma::fill::ones);
    const arma::cx_mat Q = composite_channel_map(net.signature_matrix(0), ones_b, ones_a);
    REQUIRE(arma::abs(Q * net.stacked_channel(0) - p).max() < 1e-12);
}

TEST_CASE("isi spill-over is confined to the band edges") {
    NetworkConfig cfg = small_config(1, 0, true);
    CdmaNetwork net(cfg, 0.0, 12);
    const UserFront& f = net.front(0);
    // The previous symbol leaks into the first L-1 chips only.
    for (std::size_t i = cfg.L - 1; i < cfg.M(); ++i) REQUIRE(f.tail[0][i] == cx(0.0, 0.0));
    // The next symbol leaks into the last L-1 chips only.
    for (std::size_t i = 0; i < cfg.N; ++i) REQUIRE(f.head[0][i] == cx(0.0, 0.0));
    // Spill-over values are the band edges of the signature.
    for (std::size_t t = 0; t + cfg.N < cfg.M(); ++t) {
        REQUIRE(f.tail[0][t] == f.sig[0][cfg.N + t]);
        REQUIRE(f.head[0][cfg.N + t] == f.sig[0][t]);
    }
}

TEST_CASE("mimo network dimensions and pattern power") {
    MimoConfig mc;
    mc.K = 2;
    mc.n_r = 2;
    mc.M = 2;
    mc.K_sub = 2;
    MimoNetwork net(mc, 5);

    const arma::cx_vec b{qpsk_point(0, 0), qpsk_point(1, 1)};
    REQUIRE(net.phase1_dest(b).n_elem == 2);

    arma::cx_mat btilde(2, 2, arma::fill::value(qpsk_point(0, 0)));
    const std::uint32_t p = 0b0101;  // antenna 0 of each relay
    REQUIRE(std::abs(pattern_amp(p) - 1.0 / std::sqrt(2.0)) < 1e-15);
    const arma::cx_vec y = net.phase2_dest(btilde, p);
    REQUIRE(y.n_elem == 2);

    // Composite signature equals the noiseless two-phase response.
    const arma::cx_vec q0 = net.composite_signature(0, p);
    arma::cx_vec direct(4, arma::fill::zeros);
    arma::cx_vec e0{cx(1.0, 0.0), cx(0.0, 0.0)};
    direct.subvec(0, 1) = net.phase1_dest(e0);
    arma::cx_mat only0(2, 2, arma::fill::zeros);
    only0(0, 0) = 1.0;
    only0(1, 0) = 1.0;
    direct.subvec(2, 3) = net.phase2_dest(only0, p);
    REQUIRE(arma::abs(q0 - direct).max() < 1e-12);
}
