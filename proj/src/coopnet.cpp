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

#include "crn/coopnet.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

namespace crn {

arma::cx_mat stacked_signature(const UserFront& front) {
    const std::size_t links = front.sig.size();
    const std::size_t M = front.sig[0].n_elem;
    arma::cx_mat P(links * M, links, arma::fill::zeros);
    for (std::size_t l = 0; l < links; ++l) P.submat(l * M, l, (l + 1) * M - 1, l) = front.sig[l];
    return P;
}

arma::cx_vec effective_signature(const UserFront& front) {
    const std::size_t links = front.sig.size();
    const std::size_t M = front.sig[0].n_elem;
    arma::cx_vec p(links * M);
    for (std::size_t l = 0; l < links; ++l) p.subvec(l * M, (l + 1) * M - 1) = front.sig[l];
    return p;
}

arma::cx_mat composite_channel_map(const arma::mat& C, const arma::cx_vec& b_links,
                                   const arma::vec& a_links) {
    const std::size_t links = b_links.n_elem;
    if (a_links.n_elem != links) throw std::invalid_argument("composite_channel_map: link count mismatch");
    const std::size_t M = C.n_rows, L = C.n_cols;
    arma::cx_mat Q(links * M, links * L, arma::fill::zeros);
    for (std::size_t l = 0; l < links; ++l)
        Q.submat(l * M, l * L, (l + 1) * M - 1, (l + 1) * L - 1) =
            arma::conv_to<arma::cx_mat>::from(C) * (b_links[l] * a_links[l]);
    return Q;
}

arma::cx_vec assemble_received(const std::vector<arma::cx_vec>& phase_blocks) {
    if (phase_blocks.empty()) throw std::invalid_argument("assemble_received: no phase blocks");
    const std::size_t M = phase_blocks[0].n_elem;
    for (const auto& b : phase_blocks)
        if (b.n_elem != M || b.is_empty())
            throw std::invalid_argument("assemble_received: inconsistent phase block");
    arma::cx_vec r(M * phase_blocks.size());
    for (std::size_t p = 0; p < phase_blocks.size(); ++p)
        r.subvec(p * M, (p + 1) * M - 1) = phase_blocks[p];
    return r;
}

arma::cx_vec relay_process(RelayProtocol protocol, const arma::cx_mat& filters,
                           const arma::cx_vec& observation, double gain) {
    if (filters.n_rows != observation.n_elem)
        throw std::invalid_argument("relay_process: filter/observation size mismatch");
    arma::cx_vec soft = filters.t() * observation;
    if (protocol == RelayProtocol::af) return gain * soft;
    for (auto& z : soft) z = qpsk_slice(z);
    return soft;
}

void AfGainTracker::observe(const arma::cx_vec& soft) {
    power_sum_ += arma::accu(arma::square(arma::abs(soft))) / static_cast<double>(soft.n_elem);
    ++count_;
}

double AfGainTracker::gain() const {
    if (count_ == 0 || power_sum_ <= 0.0) return 1.0;
    return 1.0 / std::sqrt(power_sum_ / static_cast<double>(count_));
}

CdmaNetwork::CdmaNetwork(const NetworkConfig& cfg, double f_dT, std::uint64_t seed) : cfg_(cfg) {
    if (cfg.K == 0) throw std::invalid_argument("CdmaNetwork: K must be positive");
    if (cfg.sigma2 <= 0.0) throw std::invalid_argument("CdmaNetwork: sigma2 must be positive");

    codes_ = gen_spreading_codes(cfg.K, cfg.N, derive_seed(seed, 1));
    sig_mat_.reserve(cfg.K);
    for (std::size_t k = 0; k < cfg.K; ++k) sig_mat_.push_back(build_signature_matrix(codes_[k], cfg.L));

    if (cfg.n_r >= 63) throw std::invalid_argument("CdmaNetwork: too many relays");
    dest_ch_.resize(cfg.K);
    relay_ch_.resize(cfg.K);
    // Seed indices depend on (user, link) only, so the same master seed gives
    // identical direct-path channels regardless of the relay count.
    for (std::size_t k = 0; k < cfg.K; ++k) {
        for (std::size_t l = 0; l <= cfg.n_r; ++l)
            dest_ch_[k].emplace_back(cfg.L, f_dT, derive_seed(seed, 2, k * 64 + l));
        for (std::size_t j = 0; j < cfg.n_r; ++j)
            relay_ch_[k].emplace_back(cfg.L, f_dT, derive_seed(seed, 3, k * 64 + j));
    }

    pa_.set_size(cfg.K);
    std::mt19937_64 rng(derive_seed(seed, 4));
    std::normal_distribution<double> shadow_db(0.0, cfg.pa_spread_db);
    for (std::size_t k = 0; k < cfg.K; ++k)
        pa_[k] = cfg.pa_nominal * std::pow(10.0, (cfg.pa_spread_db > 0.0 ? shadow_db(rng) : 0.0) / 10.0);

    fronts_.resize(cfg.K);
    rebuild_fronts();
}

arma::vec CdmaNetwork::equal_allocation(std::size_t k) const {
    return arma::vec(cfg_.n_r + 1, arma::fill::value(std::sqrt(pa_[k] / static_cast<double>(cfg_.n_r + 1))));
}

arma::cx_vec CdmaNetwork::stacked_channel(std::size_t k) const {
    arma::cx_vec h(cfg_.Q());
    for (std::size_t l = 0; l <= cfg_.n_r; ++l)
        h.subvec(l * cfg_.L, (l + 1) * cfg_.L - 1) = dest_ch_[k][l].gains();
    return h;
}

void CdmaNetwork::evolve(std::size_t steps) {
    for (auto& links : dest_ch_)
        for (auto& ch : links) ch.evolve(steps);
    for (auto& links : relay_ch_)
        for (auto& ch : links) ch.evolve(steps);
    rebuild_fronts();
}

namespace {

void split_isi(const arma::cx_vec& sig, std::size_t N, arma::cx_vec& tail, arma::cx_vec& head) {
    const std::size_t M = sig.n_elem;
    tail.zeros(M);
    head.zeros(M);
    // Window overlap with the neighbours is the L-1 chips beyond one symbol
    // period: the previous symbol leaks its last chips into the top of the
    // window, the next symbol its first chips into the bottom.
    for (std::size_t t = 0; t + N < M; ++t) {
        tail[t] = sig[N + t];
        head[N + t] = sig[t];
    }
}

}  // namespace

void CdmaNetwork::rebuild_fronts() {
    for (std::size_t k = 0; k < cfg_.K; ++k) {
        UserFront& f = fronts_[k];
        f.sig.resize(cfg_.n_r + 1);
        f.tail.resize(cfg_.n_r + 1);
        f.head.resize(cfg_.n_r + 1);
        for (std::size_t l = 0; l <= cfg_.n_r; ++l) {
            f.sig[l] = arma::conv_to<arma::cx_mat>::from(sig_mat_[k]) * dest_ch_[k][l].gains();
            split_isi(f.sig[l], cfg_.N, f.tail[l], f.head[l]);
        }
        f.relay_sig.resize(cfg_.n_r);
        f.relay_tail.resize(cfg_.n_r);
        f.relay_head.resize(cfg_.n_r);
        for (std::size_t j = 0; j < cfg_.n_r; ++j) {
            f.relay_sig[j] = arma::conv_to<arma::cx_mat>::from(sig_mat_[k]) * relay_ch_[k][j].gains();
            split_isi(f.relay_sig[j], cfg_.N, f.relay_tail[j], f.relay_head[j]);
        }
    }
}

arma::cx_vec dest_block(const NetworkConfig& cfg, const std::vector<UserFront>& fronts,
                        std::size_t link, const arma::cx_vec& b_prev, const arma::cx_vec& b_cur,
                        const arma::cx_vec& b_next, const arma::vec& amp_prev,
                        const arma::vec& amp_cur, const arma::vec& amp_next) {
    if (link > cfg.n_r) throw std::invalid_argument("dest_block: bad link index");
    if (b_cur.n_elem != cfg.K || amp_cur.n_elem != cfg.K)
        throw std::invalid_argument("dest_block: symbol/amplitude vectors must have K entries");
    arma::cx_vec y(cfg.M(), arma::fill::zeros);
    for (std::size_t k = 0; k < cfg.K; ++k) {
        const UserFront& f = fronts[k];
        y += (amp_cur[k] * b_cur[k]) * f.sig[link];
        if (cfg.isi) {
            y += (amp_prev[k] * b_prev[k]) * f.tail[link];
            y += (amp_next[k] * b_next[k]) * f.head[link];
        }
    }
    return y;
}

arma::cx_vec relay_block(const NetworkConfig& cfg, const std::vector<UserFront>& fronts,
                         const arma::vec& a_sr, std::size_t j, const arma::cx_vec& b_prev,
                         const arma::cx_vec& b_cur, const arma::cx_vec& b_next) {
    if (j >= cfg.n_r) throw std::invalid_argument("relay_block: bad relay index");
    arma::cx_vec y(cfg.M(), arma::fill::zeros);
    for (std::size_t k = 0; k < cfg.K; ++k) {
        const UserFront& f = fronts[k];
        y += (a_sr[k] * b_cur[k]) * f.relay_sig[j];
        if (cfg.isi) {
            y += (a_sr[k] * b_prev[k]) * f.relay_tail[j];
            y += (a_sr[k] * b_next[k]) * f.relay_head[j];
        }
    }
    return y;
}

arma::cx_vec CdmaNetwork::dest_block(std::size_t link, const arma::cx_vec& b_prev,
                                     const arma::cx_vec& b_cur, const arma::cx_vec& b_next,
                                     const arma::vec& amp_prev, const arma::vec& amp_cur,
                                     const arma::vec& amp_next) const {
    return crn::dest_block(cfg_, fronts_, link, b_prev, b_cur, b_next, amp_prev, amp_cur, amp_next);
}

arma::cx_vec CdmaNetwork::relay_block(std::size_t j, const arma::cx_vec& b_prev,
                                      const arma::cx_vec& b_cur, const arma::cx_vec& b_next) const {
    arma::vec a_sr(cfg_.K);
    for (std::size_t k = 0; k < cfg_.K; ++k) a_sr[k] = source_relay_amp(k);
    return crn::relay_block(cfg_, fronts_, a_sr, j, b_prev, b_cur, b_next);
}

// --- MIMO -------------------------------------------------------------------

MimoNetwork::MimoNetwork(const MimoConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    if (cfg.K == 0 || cfg.n_r == 0 || cfg.M == 0)
        throw std::invalid_argument("MimoNetwork: K, n_r, M must be positive");
    if (cfg.antennas() > 32) throw std::invalid_argument("MimoNetwork: more than 32 relay antennas");
    std::mt19937_64 rng(seed);
    auto draw = [&](arma::cx_mat& H) {
        H.set_size(cfg.M, cfg.K);
        for (auto& v : H) v = randn_c(rng);
    };
    draw(H_sd_);
    H_sr_.resize(cfg.n_r);
    H_rd_.resize(cfg.n_r);
    for (std::size_t j = 0; j < cfg.n_r; ++j) {
        draw(H_sr_[j]);
        draw(H_rd_[j]);
    }
}

double MimoNetwork::source_amp() const { return 1.0 / std::sqrt(static_cast<double>(cfg_.K)); }

double pattern_amp(std::uint32_t pattern) {
    const int active = std::popcount(pattern);
    return active > 0 ? 1.0 / std::sqrt(static_cast<double>(active)) : 0.0;
}

arma::cx_vec MimoNetwork::phase1_dest(const arma::cx_vec& b) const {
    return H_sd_ * (source_amp() * b);
}

arma::cx_vec MimoNetwork::phase1_relay(std::size_t j, const arma::cx_vec& b) const {
    return H_sr_[j] * (source_amp() * b);
}

arma::cx_vec MimoNetwork::phase2_dest(const arma::cx_mat& btilde, std::uint32_t pattern) const {
    const double amp = pattern_amp(pattern);
    arma::cx_vec y(cfg_.M, arma::fill::zeros);
    for (std::size_t j = 0; j < cfg_.n_r; ++j)
        for (std::size_t k = 0; k < cfg_.K; ++k)
            if (pattern & (1u << (j * cfg_.K + k))) y += (amp * btilde(j, k)) * H_rd_[j].col(k);
    return y;
}

arma::cx_vec MimoNetwork::composite_signature(std::size_t k, std::uint32_t pattern) const {
    const double amp = pattern_amp(pattern);
    arma::cx_vec q(cfg_.J(), arma::fill::zeros);
    q.subvec(0, cfg_.M - 1) = source_amp() * H_sd_.col(k);
    for (std::size_t j = 0; j < cfg_.n_r; ++j)
        if (pattern & (1u << (j * cfg_.K + k)))
            q.subvec(cfg_.M, 2 * cfg_.M - 1) += amp * H_rd_[j].col(k);
    return q;
}

}  // namespace crn
