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
#include "crn/signal.hpp"

namespace crn {

enum class RelayProtocol { af, df };

struct NetworkConfig {
    std::size_t K = 8;    // users
    std::size_t n_r = 2;  // relays
    std::size_t N = 16;   // chips per symbol
    std::size_t L = 5;    // paths per link
    RelayProtocol protocol = RelayProtocol::df;
    double sigma2 = 0.1;
    bool isi = true;
    double pa_nominal = 1.0;   // median per-user power parameter P_A
    double pa_spread_db = 3.0; // log-normal spread of P_A across users

    std::size_t M() const { return N + L - 1; }
    std::size_t J() const { return (n_r + 1) * M(); }
    std::size_t Q() const { return (n_r + 1) * L; }
};

// Per-user composite receive-side structures for the current channel state.
// Link index 0 is the direct source->destination path, links 1..n_r are the
// relay->destination paths. `sig` is the chip-matched signature C_k h of the
// link; `tail`/`head` hold the L-1 chip spill-over of the previous/next
// symbol into the current observation window.
struct UserFront {
    std::vector<arma::cx_vec> sig, tail, head;                   // n_r+1 entries, each M
    std::vector<arma::cx_vec> relay_sig, relay_tail, relay_head; // n_r entries, each M
};

// J x (n_r+1) stacked signature matrix P_k: column l carries the link-l
// signature in block l, zeros elsewhere.
arma::cx_mat stacked_signature(const UserFront& front);

// Effective signature p_k: all destination-side link signatures stacked into
// one J-vector.
arma::cx_vec effective_signature(const UserFront& front);

// J x Q composite map from the stacked channel vector to the received signal:
// block l equals b_l * a_l * C, where C is the M x L signature matrix.
arma::cx_mat composite_channel_map(const arma::mat& C, const arma::cx_vec& b_links,
                                   const arma::vec& a_links);

// Stack per-phase blocks into the J-vector r[i]. Throws if a block is missing
// or the lengths disagree.
arma::cx_vec assemble_received(const std::vector<arma::cx_vec>& phase_blocks);

// One relay, one symbol period: separate the users with the relay's receive
// filters (columns of `filters`), then either slice to the alphabet (DF) or
// scale the soft statistic by `gain` (AF).
arma::cx_vec relay_process(RelayProtocol protocol, const arma::cx_mat& filters,
                           const arma::cx_vec& observation, double gain = 1.0);

// Running normalization for the AF soft outputs: gain = 1/sqrt(mean per-user
// soft-statistic power seen so far).
class AfGainTracker {
  public:
    void observe(const arma::cx_vec& soft);
    double gain() const;

  private:
    double power_sum_ = 0.0;
    std::size_t count_ = 0;
};

// Synchronous multiuser DS-CDMA cooperative network: codes, per-link fading
// channels, per-user power parameters. Observation assembly is noiseless by
// design; callers add receiver noise so that oracle tests stay exact.
// Stateless observation builders over a snapshot of the per-user fronts; the
// matching CdmaNetwork members use the current channel state.
arma::cx_vec dest_block(const NetworkConfig& cfg, const std::vector<UserFront>& fronts,
                        std::size_t link, const arma::cx_vec& b_prev, const arma::cx_vec& b_cur,
                        const arma::cx_vec& b_next, const arma::vec& amp_prev,
                        const arma::vec& amp_cur, const arma::vec& amp_next);
arma::cx_vec relay_block(const NetworkConfig& cfg, const std::vector<UserFront>& fronts,
                         const arma::vec& a_sr, std::size_t j, const arma::cx_vec& b_prev,
                         const arma::cx_vec& b_cur, const arma::cx_vec& b_next);

class CdmaNetwork {
  public:
    CdmaNetwork(const NetworkConfig& cfg, double f_dT, std::uint64_t seed);

    const NetworkConfig& config() const { return cfg_; }
    const std::vector<SpreadingCode>& codes() const { return codes_; }
    const arma::mat& signature_matrix(std::size_t k) const { return sig_mat_[k]; }
    const UserFront& front(std::size_t k) const { return fronts_[k]; }
    const std::vector<UserFront>& fronts() const { return fronts_; }

    double pa(std::size_t k) const { return pa_[k]; }
    // Source transmit amplitude as seen by the relays.
    double source_relay_amp(std::size_t k) const { return std::sqrt(pa_[k]); }
    // Equal split of the per-user budget over the n_r+1 destination-side links.
    arma::vec equal_allocation(std::size_t k) const;

    // Stacked destination-side channel h_k (length Q), link 0 first.
    arma::cx_vec stacked_channel(std::size_t k) const;

    void evolve(std::size_t steps = 1);

    // Noiseless matched-filter observation of destination link path `link`
    // (0 = direct, j >= 1 = relay j -> destination). `b_prev/b_cur/b_next`
    // hold the per-user symbols carried on that path at i-1, i, i+1 (zeros at
    // the packet edges); `amp` holds the per-user transmit amplitudes of the
    // path at the matching symbol indices.
    arma::cx_vec dest_block(std::size_t link, const arma::cx_vec& b_prev, const arma::cx_vec& b_cur,
                            const arma::cx_vec& b_next, const arma::vec& amp_prev,
                            const arma::vec& amp_cur, const arma::vec& amp_next) const;

    // Noiseless observation at relay j (source -> relay link, amplitudes
    // sqrt(P_A) built in).
    arma::cx_vec relay_block(std::size_t j, const arma::cx_vec& b_prev, const arma::cx_vec& b_cur,
                             const arma::cx_vec& b_next) const;

  private:
    void rebuild_fronts();

    NetworkConfig cfg_;
    std::vector<SpreadingCode> codes_;
    std::vector<arma::mat> sig_mat_;
    std::vector<std::vector<MultipathChannel>> dest_ch_;  // per user: n_r+1 links
    std::vector<std::vector<MultipathChannel>> relay_ch_; // per user: n_r links
    std::vector<UserFront> fronts_;
    arma::vec pa_;
};

// --- Cooperative MIMO (flat fading, two phases, DF) -------------------------

struct MimoConfig {
    std::size_t K = 2;     // streams / source antennas
    std::size_t n_r = 4;   // relays, K transmit antennas each
    std::size_t M = 2;     // receive antennas at relays and destination
    std::size_t K_sub = 2; // active relay antennas under TDS
    double sigma2 = 0.01;

    std::size_t J() const { return 2 * M; }
    std::size_t antennas() const { return n_r * K; }
};

class MimoNetwork {
  public:
    MimoNetwork(const MimoConfig& cfg, std::uint64_t seed);

    const MimoConfig& config() const { return cfg_; }
    const arma::cx_mat& H_sd() const { return H_sd_; }
    const arma::cx_mat& H_sr(std::size_t j) const { return H_sr_[j]; }
    const arma::cx_mat& H_rd(std::size_t j) const { return H_rd_[j]; }

    double source_amp() const;  // per-antenna amplitude, unit total phase-1 power

    // Noiseless phase observations.
    arma::cx_vec phase1_dest(const arma::cx_vec& b) const;
    arma::cx_vec phase1_relay(std::size_t j, const arma::cx_vec& b) const;
    // `btilde` is n_r x K (relay decisions); `pattern` activates relay
    // antennas (bit j*K + k), each active antenna transmitting at
    // 1/sqrt(popcount) so the relays' total power is one.
    arma::cx_vec phase2_dest(const arma::cx_mat& btilde, std::uint32_t pattern) const;

    // Composite two-phase signature of stream k under `pattern`, assuming
    // correct relay decisions.
    arma::cx_vec composite_signature(std::size_t k, std::uint32_t pattern) const;

  private:
    MimoConfig cfg_;
    arma::cx_mat H_sd_;
    std::vector<arma::cx_mat> H_sr_, H_rd_;
};

double pattern_amp(std::uint32_t pattern);

}  // namespace crn
