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
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "crn/adaptive.hpp"
#include "crn/common.hpp"
#include "crn/coopnet.hpp"
#include "crn/mmse.hpp"
#include "crn/selection.hpp"

namespace crn {

// --- Feedback quantization and the binary symmetric channel -----------------

struct FeedbackPacket {
    std::vector<int> bits;
    bool saturated = false;  // some coefficient fell outside the quantizer range
};

// Uniform midrise scalar quantizer over [-a_max, a_max], n_b bits per
// coefficient, most significant bit first.
FeedbackPacket quantize_power_vector(const arma::vec& a, std::size_t n_b, double a_max);
arma::vec dequantize_power_vector(const std::vector<int>& bits, std::size_t n_b, double a_max);

// Flip each bit independently with probability p_e.
std::vector<int> bsc_transmit(const std::vector<int>& bits, double p_e, std::uint64_t seed);

// Feedback budget closed forms (bits per packet).
std::size_t feedback_bits_group(std::size_t G, std::size_t n_r, std::size_t n_b);
std::size_t feedback_bits_tds(std::size_t n_r, std::size_t K);

// --- Complexity accounting ----------------------------------------------------

struct OpCount {
    long long adds = 0;
    long long mults = 0;
    OpCount& operator+=(const OpCount& o) {
        adds += o.adds;
        mults += o.mults;
        return *this;
    }
};

// Closed-form per-symbol operation counts of the adaptive recursions under the
// global (G = K) and individual (G = 1) power constraints.
OpCount global_filter_ops(std::size_t J, std::size_t K);
OpCount global_power_ops(std::size_t K, std::size_t n_r, std::size_t L, std::size_t M, std::size_t Q);
OpCount global_channel_ops(std::size_t K, std::size_t n_r, std::size_t Q);
OpCount user_filter_ops(std::size_t J);
OpCount user_power_ops(std::size_t n_r, std::size_t J, std::size_t L, std::size_t Q);
OpCount user_channel_ops(std::size_t Q, std::size_t M, std::size_t n_r);

struct ComplexityReport {
    std::string scheme;
    std::size_t K = 0, n_r = 0, N = 0, L = 0, M = 0, J = 0, Q = 0;
    OpCount filter, power, channel, total;
};

// Per-symbol cost of a scheme: jpais-gk, jpais-g1, cis, ncis (uplink forms;
// jpais-g1 and the downlink forms count one user). Dimensions must satisfy
// M = N+L-1, J = (n_r+1)M, Q = (n_r+1)L.
ComplexityReport complexity_count(const std::string& scheme, std::size_t K, std::size_t n_r,
                                  std::size_t N, std::size_t L);

// Per-instant multiplication counts of the selection strategies under the
// documented convention: exhaustive search re-solves the MMSE design for every
// candidate (one J^3/3 factorization plus K solves), the stochastic iteration
// only sweeps the existing filter bank across the candidate set plus the
// state-occupation update.
struct SelectionComplexity {
    long long exhaustive_tds = 0;
    long long exhaustive_tds_rs = 0;
    long long iterative_tds = 0;
    long long iterative_tds_rs = 0;
};

SelectionComplexity selection_complexity(std::size_t n_r, std::size_t K, std::size_t K_sub,
                                         std::size_t removed, std::size_t M);

// --- Experiment configuration -------------------------------------------------

struct SimConfig {
    // network
    std::size_t K = 8, n_r = 2, N = 16, L = 5;
    std::string protocol = "df";
    double snr_db = 12.0;
    double pa_spread_db = 3.0;
    bool isi = true;
    double f_dT = 0.0;
    // packets
    std::size_t packet = 1500, ntr = 200, runs = 200;
    std::uint64_t seed = 1;
    std::size_t threads = 0;  // 0 = hardware concurrency
    // adaptation
    double alpha = 0.998;
    double rinv_init = 0.01;
    std::size_t iterations = 2;
    double lambda = 0.025;
    std::size_t bootstrap = 10;
    // feedback
    std::string feedback = "once";  // once | instant
    std::size_t nb = 4;
    double pe = 0.0;
    bool quantize = false;
    // schemes and sweep
    std::vector<std::string> schemes = {"jpais_g3", "cis", "ncis"};
    std::vector<double> snr_sweep;
    std::vector<double> fdt_sweep = {1e-4, 1e-3, 1e-2};
    std::vector<double> pe_sweep = {0.0005, 0.05};
    // MIMO selection experiment
    std::size_t mimo_K = 2, mimo_nr = 4, mimo_M = 2, mimo_ksub = 0;  // 0 = K
    double mimo_snr_db = 20.0;
    std::size_t mimo_packets = 200, mimo_packet_len = 1500, mimo_ntr = 200;
    double mimo_ce_alpha = 0.9;
};

// Line-oriented `key = value` file, '#' comments; unknown keys are an error.
SimConfig load_config(const std::string& path);
void apply_config_value(SimConfig& cfg, const std::string& key, const std::string& value);

// --- Results -------------------------------------------------------------------

struct SchemeStat {
    std::uint64_t bit_errors = 0, bits = 0;
    std::uint64_t tail_bit_errors = 0, tail_bits = 0;
    std::vector<double> run_ber;  // one entry per run
    double max_constraint_error = 0.0;

    double ber() const;
    double tail_ber() const;  // over the last 500 symbols of each packet
    double stderr_of_mean() const;
};

// Standard error of the paired per-run BER difference a - b.
double paired_gap_stderr(const SchemeStat& a, const SchemeStat& b);

struct BerPoint {
    double x = 0.0;
    std::map<std::string, SchemeStat> stats;
};

struct BerCurve {
    std::string sweep_name = "snr_db";
    std::vector<std::string> schemes;
    std::vector<BerPoint> points;
};

void write_csv(const BerCurve& curve, std::ostream& os);

// --- DS-CDMA experiments ---------------------------------------------------------

struct CdmaRunOutput {
    std::uint64_t bit_errors = 0, bits = 0;
    std::uint64_t tail_bit_errors = 0, tail_bits = 0;  // last 500 symbols
    double max_constraint_error = 0.0;
    arma::cx_vec final_filter_user0;
    arma::vec final_group_allocation;
    std::vector<std::size_t> final_group;
    std::vector<arma::cx_vec> final_filters;            // adaptive runs only
    std::vector<arma::cx_vec> final_channel_estimates;  // adaptive runs only
};

// One packet simulation of one scheme on the realization drawn from `seed`.
CdmaRunOutput simulate_cdma_run(const SimConfig& cfg, const std::string& scheme,
                                std::uint64_t seed);

// Monte-Carlo BER over cfg.runs packets for every configured scheme; sweeps
// the SNR when cfg.snr_sweep is nonempty, otherwise produces one point.
BerCurve run_ber_experiment(const SimConfig& cfg);

// BER against the normalized fading rate; the allocation is fed back once per
// packet, so it ages with the channel. Adaptation constants are tuned per
// fading rate inside.
BerCurve run_fading_sweep(const SimConfig& cfg, const std::vector<double>& fdt_values);

// BER against the feedback bit-error probability, quantized allocation sent
// through the BSC once per packet.
BerCurve run_feedback_error_sweep(const SimConfig& cfg, const std::vector<double>& pe_values);

// Batch-versus-adaptive agreement on one seed: relative filter error of user 0
// and normalized inner product of the applied allocations after the training
// prefix of a static packet.
struct RalsBatchTrial {
    double filter_rel_err = 0.0;
    double allocation_inner = 0.0;
};
RalsBatchTrial rals_vs_batch_trial(std::uint64_t seed, std::size_t K = 4, std::size_t n_r = 1,
                                   double snr_db = 15.0, std::size_t ntr = 200);

// --- Cooperative MIMO selection experiment ----------------------------------------

struct MimoSchemeResult {
    std::vector<double> ber_by_symbol;  // convergence curve
    double final_ber = 0.0;             // last-200-symbol window
    std::uint64_t bit_errors = 0, bits = 0;
};

struct MimoExperimentResult {
    std::map<std::string, MimoSchemeResult> schemes;
    BerCurve convergence;  // one column per scheme, x = symbol index
};

// Runs {noncoop, no_tds, tds_exh, tds_dsa, tdsrs_exh, tdsrs_dsa}, each with a
// known-channel and a channel-estimation (suffix _ce) variant.
MimoExperimentResult run_mimo_tds_experiment(const SimConfig& cfg);

// First index at which the windowed BER curve drops below `threshold`
// (window 50); returns the curve length if it never does.
std::size_t ber_crossing_index(const std::vector<double>& ber_by_symbol, double threshold);

}  // namespace crn
