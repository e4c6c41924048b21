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

#include "crn/harness.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace crn {

// --- Feedback quantization ----------------------------------------------------

FeedbackPacket quantize_power_vector(const arma::vec& a, std::size_t n_b, double a_max) {
    if (n_b == 0 || n_b > 16) throw std::invalid_argument("quantize_power_vector: bad bit width");
    if (a_max <= 0.0) throw std::invalid_argument("quantize_power_vector: bad range");
    const long long levels = 1LL << n_b;
    const double step = 2.0 * a_max / static_cast<double>(levels);
    FeedbackPacket out;
    out.bits.reserve(a.n_elem * n_b);
    for (double x : a) {
        if (x < -a_max || x > a_max) out.saturated = true;
        long long idx = std::llround((x + a_max) / step - 0.5);
        idx = std::max(0LL, std::min(levels - 1, idx));
        for (std::size_t b = 0; b < n_b; ++b) out.bits.push_back((idx >> (n_b - 1 - b)) & 1);
    }
    return out;
}

arma::vec dequantize_power_vector(const std::vector<int>& bits, std::size_t n_b, double a_max) {
    if (n_b == 0 || bits.size() % n_b != 0)
        throw std::invalid_argument("dequantize_power_vector: bit count not a multiple of n_b");
    const double step = 2.0 * a_max / static_cast<double>(1LL << n_b);
    arma::vec out(bits.size() / n_b);
    for (std::size_t i = 0; i < out.n_elem; ++i) {
        long long idx = 0;
        for (std::size_t b = 0; b < n_b; ++b) idx = (idx << 1) | (bits[i * n_b + b] ? 1 : 0);
        out[i] = -a_max + (static_cast<double>(idx) + 0.5) * step;
    }
    return out;
}

std::vector<int> bsc_transmit(const std::vector<int>& bits, double p_e, std::uint64_t seed) {
    if (p_e < 0.0 || p_e > 1.0) throw std::invalid_argument("bsc_transmit: p_e outside [0,1]");
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution flip(p_e);
    std::vector<int> out(bits.size());
    for (std::size_t i = 0; i < bits.size(); ++i) out[i] = flip(rng) ? 1 - bits[i] : bits[i];
    return out;
}

std::size_t feedback_bits_group(std::size_t G, std::size_t n_r, std::size_t n_b) {
    return (n_r + 1) * G * n_b;
}

std::size_t feedback_bits_tds(std::size_t n_r, std::size_t K) { return n_r * K; }

// --- Complexity accounting ------------------------------------------------------

namespace {
long long sq(long long v) { return v * v; }
}  // namespace

OpCount global_filter_ops(std::size_t J_, std::size_t K_) {
    const long long J = J_, K = K_;
    return {2 * sq(J) + 2 * K * J - J + 1, 3 * sq(J) + 2 * K * J + 3 * J + 1};
}

OpCount global_power_ops(std::size_t K_, std::size_t n_r_, std::size_t L_, std::size_t M_,
                         std::size_t Q_) {
    const long long K = K_, nr = n_r_, L = L_, M = M_, Q = Q_;
    const long long D = K * (nr + 1);
    OpCount c;
    c.adds = 3 * K * D + K * (nr + 1) * (L - 1) + K * (M * (nr + 1)) + K * D + 6 * sq(D) +
             3 * K * (nr + 1) + nr + 2;
    c.mults = K * sq(D) + 4 * sq(D) + (K + L) * sq(D) - sq(D) + K * (M * Q) + nr;
    return c;
}

OpCount global_channel_ops(std::size_t K_, std::size_t n_r_, std::size_t Q_) {
    const long long K = K_, nr = n_r_, Q = Q_;
    return {5 * sq(K * Q) + 5 * K * Q + 3, 5 * sq(K * (nr + 1)) + 6 * K * Q + 1};
}

OpCount user_filter_ops(std::size_t J_) {
    const long long J = J_;
    return {2 * sq(J) + J + 1, 3 * sq(J) + 5 * J + 1};
}

OpCount user_power_ops(std::size_t n_r_, std::size_t J_, std::size_t L_, std::size_t Q_) {
    const long long nr = n_r_, J = J_, L = L_, Q = Q_;
    return {2 * sq(nr + 1) + 3 * (nr + 1) + J * L + Q - 3,
            3 * sq(nr + 1) + 7 * (nr + 1) + J * L + Q + 3};
}

OpCount user_channel_ops(std::size_t Q_, std::size_t M_, std::size_t n_r_) {
    const long long Q = Q_, M = M_, nr = n_r_;
    return {2 * sq(Q) + 5 * M * Q - 5 * (nr + 1) + 3, 6 * sq(Q) + M * Q + 4 * (nr + 1) + 1};
}

ComplexityReport complexity_count(const std::string& scheme, std::size_t K, std::size_t n_r,
                                  std::size_t N, std::size_t L) {
    if (K == 0 || N == 0 || L == 0) throw std::invalid_argument("complexity_count: bad dimensions");
    ComplexityReport rep;
    rep.scheme = scheme;
    rep.K = K;
    rep.N = N;
    rep.L = L;

    auto set_dims = [&](std::size_t nr) {
        rep.n_r = nr;
        rep.M = N + L - 1;
        rep.J = (nr + 1) * rep.M;
        rep.Q = (nr + 1) * L;
    };
    set_dims(n_r);

    if (scheme == "jpais-gk") {
        rep.filter = global_filter_ops(rep.J, K);
        rep.power = global_power_ops(K, n_r, L, rep.M, rep.Q);
        rep.channel = global_channel_ops(K, n_r, rep.Q);
    } else if (scheme == "jpais-g1") {
        rep.filter = user_filter_ops(rep.J);
        rep.power = user_power_ops(n_r, rep.J, L, rep.Q);
        rep.channel = user_channel_ops(rep.Q, rep.M, n_r);
    } else if (scheme == "cis") {
        rep.filter = global_filter_ops(rep.J, K);
    } else if (scheme == "ncis") {
        set_dims(0);
        rep.filter = global_filter_ops(rep.J, K);
    } else {
        throw std::invalid_argument("complexity_count: unknown scheme " + scheme);
    }
    rep.total += rep.filter;
    rep.total += rep.power;
    rep.total += rep.channel;
    return rep;
}

namespace {
long long binom(std::size_t n, std::size_t k) {
    if (k > n) return 0;
    long long r = 1;
    for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<long long>(n - k + i) / static_cast<long long>(i);
    return r;
}
}  // namespace

SelectionComplexity selection_complexity(std::size_t n_r, std::size_t K, std::size_t K_sub,
                                         std::size_t removed, std::size_t M) {
    if (removed >= n_r) throw std::invalid_argument("selection_complexity: removes every relay");
    const long long J = 2 * static_cast<long long>(M);
    const long long omega = binom(n_r * K, K_sub);
    const long long omega_red = binom((n_r - removed) * K, K_sub);
    auto redesign = [&](long long dim) {
        return dim * dim * dim / 3 + static_cast<long long>(K) * dim * dim +
               static_cast<long long>(K) * dim;
    };
    const long long sweep = 2 * static_cast<long long>(K) * J;       // apply existing filters
    const long long relay_sweep = 2 * static_cast<long long>(K) * M; // same at one relay
    SelectionComplexity out;
    out.exhaustive_tds = omega * redesign(J);
    out.exhaustive_tds_rs = omega_red * redesign(J) + static_cast<long long>(n_r) * redesign(M);
    out.iterative_tds = omega * sweep + 2 * omega;
    out.iterative_tds_rs = omega_red * sweep + 2 * omega_red + relay_sweep;
    return out;
}

// --- Configuration ---------------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::stringstream ss(s);
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::vector<double> split_doubles(const std::string& s) {
    std::vector<double> out;
    for (const auto& t : split_list(s)) out.push_back(std::stod(t));
    return out;
}

}  // namespace

void apply_config_value(SimConfig& cfg, const std::string& key, const std::string& value) {
    auto u = [&](const char* k) { return key == k; };
    if (u("K")) cfg.K = std::stoul(value);
    else if (u("nr")) cfg.n_r = std::stoul(value);
    else if (u("N")) cfg.N = std::stoul(value);
    else if (u("L")) cfg.L = std::stoul(value);
    else if (u("protocol")) cfg.protocol = value;
    else if (u("snr_db")) cfg.snr_db = std::stod(value);
    else if (u("pa_spread_db")) cfg.pa_spread_db = std::stod(value);
    else if (u("isi")) cfg.isi = value == "1" || value == "true" || value == "on";
    else if (u("fdt")) cfg.f_dT = std::stod(value);
    else if (u("packet")) cfg.packet = std::stoul(value);
    else if (u("ntr")) cfg.ntr = std::stoul(value);
    else if (u("runs")) cfg.runs = std::stoul(value);
    else if (u("seed")) cfg.seed = std::stoull(value);
    else if (u("threads")) cfg.threads = std::stoul(value);
    else if (u("alpha")) cfg.alpha = std::stod(value);
    else if (u("rinv_init")) cfg.rinv_init = std::stod(value);
    else if (u("iterations")) cfg.iterations = std::stoul(value);
    else if (u("lambda")) cfg.lambda = std::stod(value);
    else if (u("bootstrap")) cfg.bootstrap = std::stoul(value);
    else if (u("feedback")) cfg.feedback = value;
    else if (u("nb")) cfg.nb = std::stoul(value);
    else if (u("pe")) cfg.pe = std::stod(value);
    else if (u("quantize")) cfg.quantize = value == "1" || value == "true" || value == "on";
    else if (u("schemes")) cfg.schemes = split_list(value);
    else if (u("snr_sweep")) cfg.snr_sweep = split_doubles(value);
    else if (u("fdt_sweep")) cfg.fdt_sweep = split_doubles(value);
    else if (u("pe_sweep")) cfg.pe_sweep = split_doubles(value);
    else if (u("mimo_K")) cfg.mimo_K = std::stoul(value);
    else if (u("mimo_nr")) cfg.mimo_nr = std::stoul(value);
    else if (u("mimo_M")) cfg.mimo_M = std::stoul(value);
    else if (u("mimo_ksub")) cfg.mimo_ksub = std::stoul(value);
    else if (u("mimo_snr_db")) cfg.mimo_snr_db = std::stod(value);
    else if (u("mimo_packets")) cfg.mimo_packets = std::stoul(value);
    else if (u("mimo_packet_len")) cfg.mimo_packet_len = std::stoul(value);
    else if (u("mimo_ntr")) cfg.mimo_ntr = std::stoul(value);
    else if (u("mimo_ce_alpha")) cfg.mimo_ce_alpha = std::stod(value);
    else throw std::invalid_argument("unknown config key: " + key);
}

SimConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    SimConfig cfg;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected key = value");
        apply_config_value(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return cfg;
}

// --- Result stats -----------------------------------------------------------------

double SchemeStat::ber() const {
    return bits > 0 ? static_cast<double>(bit_errors) / static_cast<double>(bits) : 0.0;
}

double SchemeStat::tail_ber() const {
    return tail_bits > 0 ? static_cast<double>(tail_bit_errors) / static_cast<double>(tail_bits) : 0.0;
}

double SchemeStat::stderr_of_mean() const {
    const std::size_t n = run_ber.size();
    if (n < 2) return 0.0;
    double mean = 0.0;
    for (double v : run_ber) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : run_ber) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n - 1);
    return std::sqrt(var / static_cast<double>(n));
}

double paired_gap_stderr(const SchemeStat& a, const SchemeStat& b) {
    const std::size_t n = std::min(a.run_ber.size(), b.run_ber.size());
    if (n < 2) return 0.0;
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += a.run_ber[i] - b.run_ber[i];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a.run_ber[i] - b.run_ber[i] - mean;
        var += d * d;
    }
    var /= static_cast<double>(n - 1);
    return std::sqrt(var / static_cast<double>(n));
}

void write_csv(const BerCurve& curve, std::ostream& os) {
    os << curve.sweep_name;
    for (const auto& s : curve.schemes) os << "," << s << "_ber";
    os << "\n";
    os.precision(6);
    for (const auto& pt : curve.points) {
        os << pt.x;
        for (const auto& s : curve.schemes) {
            const auto it = pt.stats.find(s);
            os << "," << (it != pt.stats.end() ? it->second.ber() : 0.0);
        }
        os << "\n";
    }
}

// --- DS-CDMA engine ----------------------------------------------------------------

namespace {

struct SchemeSpec {
    enum Kind { ncis, cis, jpais, jpais_mmse } kind = jpais;
    std::size_t G = 0;  // 0 = all users
};

SchemeSpec parse_scheme(const std::string& name, std::size_t K) {
    SchemeSpec s;
    if (name == "ncis") s.kind = SchemeSpec::ncis;
    else if (name == "cis") s.kind = SchemeSpec::cis;
    else if (name == "jpais_mmse") { s.kind = SchemeSpec::jpais_mmse; s.G = K; }
    else if (name == "jpais_gk") { s.kind = SchemeSpec::jpais; s.G = K; }
    else if (name.rfind("jpais_g", 0) == 0) {
        s.kind = SchemeSpec::jpais;
        s.G = std::stoul(name.substr(7));
        if (s.G == 0 || s.G > K) throw std::invalid_argument("scheme group size outside 1..K: " + name);
    } else {
        throw std::invalid_argument("unknown scheme: " + name);
    }
    return s;
}

RelayProtocol parse_protocol(const std::string& p) {
    if (p == "af") return RelayProtocol::af;
    if (p == "df") return RelayProtocol::df;
    throw std::invalid_argument("unknown protocol: " + p);
}

// Batch MMSE relay filters for the first-phase statistics at relay j, with
// the analytic AF output normalization.
struct BatchRelays {
    std::vector<arma::cx_mat> filters;
    std::vector<double> af_gain;
};

BatchRelays batch_relay_filters(const CdmaNetwork& net) {
    const NetworkConfig& cfg = net.config();
    BatchRelays out;
    out.filters.resize(cfg.n_r);
    out.af_gain.assign(cfg.n_r, 1.0);
    for (std::size_t j = 0; j < cfg.n_r; ++j) {
        arma::cx_mat R(cfg.M(), cfg.M(), arma::fill::zeros);
        for (std::size_t k = 0; k < cfg.K; ++k) {
            const UserFront& f = net.front(k);
            const double a = net.source_relay_amp(k);
            R += (a * a) * (f.relay_sig[j] * f.relay_sig[j].t());
            if (cfg.isi)
                R += (a * a) * (f.relay_tail[j] * f.relay_tail[j].t() +
                                f.relay_head[j] * f.relay_head[j].t());
        }
        R.diag() += cfg.sigma2;
        HermitianSolver solver(R);
        arma::cx_mat W(cfg.M(), cfg.K);
        double soft_power = 0.0;
        for (std::size_t k = 0; k < cfg.K; ++k) {
            W.col(k) = solver.solve(
                arma::cx_vec(net.source_relay_amp(k) * net.front(k).relay_sig[j]));
            soft_power += std::real(arma::cdot(W.col(k), R * W.col(k)));
        }
        soft_power /= static_cast<double>(cfg.K);
        if (soft_power > 0.0) out.af_gain[j] = 1.0 / std::sqrt(soft_power);
        out.filters[j] = std::move(W);
    }
    return out;
}

struct CdmaEngineConfig {
    NetworkConfig net;
    double f_dT = 0.0;
    std::size_t packet = 1500, ntr = 200;
    SchemeSpec scheme;
    RalsOptions rals;
    bool feedback_once = false;
    bool quantize = false;
    std::size_t nb = 4;
    double pe = 0.0;
    std::size_t batch_iterations = 25;
    double lambda = 0.025;
    // Streaming feedback holds the equal split until the recursions have seen
    // enough training; the one-shot packet goes out at mid-preamble so the
    // filters settle on the new signal structure before decisions take over.
    std::size_t feedback_warmup = 50;
};

CdmaRunOutput run_cdma_packet(const CdmaEngineConfig& ec, std::uint64_t seed) {
    const NetworkConfig& nc = ec.net;
    const std::size_t K = nc.K, n_r = nc.n_r, M = nc.M(), links = n_r + 1, P = ec.packet;

    CdmaNetwork net(nc, ec.f_dT, seed);

    // Per-user symbol streams; the first ntr symbols are the known preamble.
    arma::cx_mat b(K, P);
    for (std::size_t k = 0; k < K; ++k)
        b.row(k) = gen_symbol_stream(P, ec.ntr, derive_seed(seed, 7, k)).symbols.st();

    std::vector<std::mt19937_64> dest_noise, relay_noise;
    for (std::size_t l = 0; l < links; ++l) dest_noise.emplace_back(derive_seed(seed, 8, l));
    for (std::size_t j = 0; j < n_r; ++j) relay_noise.emplace_back(derive_seed(seed, 9, j));

    // Applied per-link transmit amplitudes for every symbol (equal split until
    // a feedback event overwrites the tail of the schedule).
    std::vector<arma::mat> applied(P + 2, arma::mat(K, links));
    for (std::size_t k = 0; k < K; ++k) {
        const arma::vec eq = net.equal_allocation(k);
        for (auto& a : applied) a.row(k) = eq.t();
    }

    const bool adaptive = ec.scheme.kind != SchemeSpec::jpais_mmse;

    // Receivers.
    RalsOptions ro = ec.rals;
    ro.group_size = ec.scheme.G == 0 ? K : ec.scheme.G;
    ro.power_updates = ec.scheme.kind == SchemeSpec::jpais;
    ro.channel_estimation = ec.scheme.kind == SchemeSpec::jpais;
    ro.training_len = ec.ntr;
    std::optional<RalsReceiver> rals;
    std::optional<AdaptiveRelayBank> relay_bank;

    // Expectation-known comparator state.
    std::vector<arma::cx_vec> batch_w;
    BatchRelays batch_relays;
    arma::vec batch_group_alloc;
    std::vector<std::size_t> batch_group;

    if (adaptive) {
        rals.emplace(net, ro);
        if (n_r > 0) relay_bank.emplace(net, ec.rals.alpha, ec.rals.rinv_init);
    } else {
        std::vector<std::size_t> S(K);
        for (std::size_t k = 0; k < K; ++k) S[k] = k;
        double P_G = 0.0;
        for (std::size_t k : S) P_G += net.pa(k);
        std::vector<arma::cx_vec> a0(K);
        for (std::size_t k = 0; k < K; ++k)
            a0[k] = arma::cx_vec(net.equal_allocation(k), arma::vec(links, arma::fill::zeros));
        AlternatingOptions ao;
        ao.lambda = ec.lambda;
        ao.iterations = ec.batch_iterations;
        ao.real_amplitudes = true;
        const BatchModel model = make_batch_model(net);
        AlternatingResult sol = alternating_optimize(model, S, P_G, a0, ao);
        batch_w = std::move(sol.w);
        batch_group = S;
        batch_group_alloc = arma::abs(sol.a_group);
        for (std::size_t i = 0; i < P + 2; ++i)
            for (std::size_t k = 0; k < K; ++k)
                applied[i].row(k) = arma::abs(sol.a_all[k]).t();
        if (n_r > 0) batch_relays = batch_relay_filters(net);
    }

    // Relay processing runs one symbol ahead so the next-symbol spill-over of
    // the relayed paths is available when the destination window is built.
    const bool fading = ec.f_dT > 0.0;
    std::vector<UserFront> fronts_snapshot_cur, fronts_snapshot_next;
    const std::vector<UserFront>* fcur = &net.fronts();
    const std::vector<UserFront>* fnext = &net.fronts();

    arma::vec a_sr(K);
    for (std::size_t k = 0; k < K; ++k) a_sr[k] = net.source_relay_amp(k);

    const arma::cx_vec zK(K, arma::fill::zeros);
    auto col = [&](std::ptrdiff_t i) -> arma::cx_vec {
        if (i < 0 || i >= static_cast<std::ptrdiff_t>(P)) return zK;
        return b.col(i);
    };

    auto relay_step = [&](std::size_t i, const std::vector<UserFront>& fr) -> arma::cx_mat {
        arma::cx_mat bt(K, n_r, arma::fill::zeros);
        const bool training = i < ec.ntr;
        const arma::cx_vec bi = col(static_cast<std::ptrdiff_t>(i));
        for (std::size_t j = 0; j < n_r; ++j) {
            arma::cx_vec y = relay_block(nc, fr, a_sr, j, col(static_cast<std::ptrdiff_t>(i) - 1), bi,
                                         col(static_cast<std::ptrdiff_t>(i) + 1));
            y += randn_cvec(relay_noise[j], M, nc.sigma2);
            if (adaptive) {
                bt.col(j) = relay_bank->step(j, y, training ? &bi : nullptr);
            } else {
                arma::cx_vec soft = batch_relays.filters[j].t() * y;
                if (nc.protocol == RelayProtocol::af) {
                    bt.col(j) = batch_relays.af_gain[j] * soft;
                } else {
                    for (std::size_t k = 0; k < K; ++k)
                        bt(k, j) = training ? bi[k] : qpsk_slice(soft[k]);
                }
            }
        }
        return bt;
    };

    arma::cx_mat bt_prev(K, n_r, arma::fill::zeros);
    arma::cx_mat bt_cur(K, n_r), bt_next(K, n_r, arma::fill::zeros);
    if (n_r > 0) {
        bt_cur = relay_step(0, *fcur);
        if (P > 1) {
            if (fading) {
                fronts_snapshot_cur = net.fronts();
                fcur = &fronts_snapshot_cur;
                net.evolve(1);
                fronts_snapshot_next = net.fronts();
                fnext = &fronts_snapshot_next;
            }
            bt_next = relay_step(1, *fnext);
        }
    } else {
        bt_cur.zeros(K, 0);
        bt_prev.zeros(K, 0);
        bt_next.zeros(K, 0);
    }

    CdmaRunOutput out;
    std::vector<arma::cx_vec> phase(links);

    for (std::size_t i = 0; i < P; ++i) {
        const arma::cx_vec b_im1 = col(static_cast<std::ptrdiff_t>(i) - 1);
        const arma::cx_vec b_i = col(static_cast<std::ptrdiff_t>(i));
        const arma::cx_vec b_ip1 = col(static_cast<std::ptrdiff_t>(i) + 1);
        const arma::mat& a_prev = applied[i == 0 ? 0 : i - 1];
        const arma::mat& a_cur = applied[i];
        const arma::mat& a_next = applied[i + 1];

        // Direct path.
        phase[0] = dest_block(nc, *fcur, 0, b_im1, b_i, b_ip1, a_prev.col(0), a_cur.col(0),
                              a_next.col(0)) +
                   randn_cvec(dest_noise[0], M, nc.sigma2);
        // Relayed paths.
        for (std::size_t j = 0; j < n_r; ++j)
            phase[j + 1] = dest_block(nc, *fcur, j + 1, bt_prev.col(j), bt_cur.col(j), bt_next.col(j),
                                      a_prev.col(j + 1), a_cur.col(j + 1), a_next.col(j + 1)) +
                           randn_cvec(dest_noise[j + 1], M, nc.sigma2);
        const arma::cx_vec r = assemble_received(phase);

        arma::cx_vec decisions(K);
        if (adaptive) {
            const bool training = i < ec.ntr;
            const arma::cx_vec bi = b.col(i);
            RalsStep step = rals->step(i, r, training ? &bi : nullptr, a_cur);
            decisions = step.decisions;
        } else {
            for (std::size_t k = 0; k < K; ++k) decisions[k] = qpsk_slice(arma::cdot(batch_w[k], r));
        }

        if (i >= ec.ntr) {
            std::uint64_t e = 0;
            for (std::size_t k = 0; k < K; ++k) e += qpsk_bit_errors(decisions[k], b(k, i));
            out.bit_errors += e;
            out.bits += 2 * K;
            if (i + 500 >= P) {
                out.tail_bit_errors += e;
                out.tail_bits += 2 * K;
            }
        }

        // Feedback: the receiver's allocation reaches the transmitters two
        // symbols later (instant mode) or once at the end of the preamble.
        if (adaptive && ro.power_updates) {
            if (!ec.feedback_once) {
                if (i >= ec.feedback_warmup && i + 2 < P + 2) {
                    arma::mat next = applied[i + 2];
                    for (std::size_t k = 0; k < K; ++k)
                        next.row(k) = rals->recommended_allocation(k).t();
                    applied[i + 2] = std::move(next);
                }
            } else if (i + 1 == std::max(ec.ntr / 2, ec.feedback_warmup + 1)) {
                arma::vec group_vec = rals->group_allocation();
                if (ec.quantize) {
                    const double a_max = std::sqrt(rals->group_budget());
                    FeedbackPacket pkt = quantize_power_vector(group_vec, ec.nb, a_max);
                    const std::vector<int> rx = bsc_transmit(pkt.bits, ec.pe, derive_seed(seed, 10));
                    group_vec = dequantize_power_vector(rx, ec.nb, a_max);
                }
                const auto& S = rals->group();
                for (std::size_t t = i + 1; t < P + 2; ++t) {
                    for (std::size_t g = 0; g < S.size(); ++g)
                        applied[t].row(S[g]) = group_vec.subvec(g * links, (g + 1) * links - 1).t();
                }
                rals->notify_allocation_change();
            }
        }

        // Advance the relay pipeline.
        if (n_r > 0) {
            bt_prev = bt_cur;
            bt_cur = bt_next;
        }
        if (fading) {
            fronts_snapshot_cur = std::move(fronts_snapshot_next);
            fcur = &fronts_snapshot_cur;
        }
        if (i + 2 < P) {
            if (fading) {
                net.evolve(1);
                fronts_snapshot_next = net.fronts();
                fnext = &fronts_snapshot_next;
            }
            if (n_r > 0) bt_next = relay_step(i + 2, *fnext);
        } else if (n_r > 0) {
            bt_next.zeros(K, n_r);
        }
    }

    if (adaptive) {
        out.final_filter_user0 = rals->filter(0);
        for (std::size_t k = 0; k < K; ++k) {
            out.final_filters.push_back(rals->filter(k));
            if (ro.channel_estimation) out.final_channel_estimates.push_back(rals->channel_estimate(k));
        }
        if (ro.power_updates) {
            out.final_group_allocation = rals->group_allocation();
            out.final_group = rals->group();
            out.max_constraint_error = rals->max_constraint_error();
        }
    } else {
        out.final_filter_user0 = batch_w[0];
        out.final_group_allocation = batch_group_alloc;
        out.final_group = batch_group;
    }
    return out;
}

CdmaEngineConfig engine_config(const SimConfig& cfg, const std::string& scheme_name) {
    CdmaEngineConfig ec;
    ec.scheme = parse_scheme(scheme_name, cfg.K);
    ec.net.K = cfg.K;
    ec.net.n_r = ec.scheme.kind == SchemeSpec::ncis ? 0 : cfg.n_r;
    ec.net.N = cfg.N;
    ec.net.L = cfg.L;
    ec.net.protocol = parse_protocol(cfg.protocol);
    ec.net.sigma2 = std::pow(10.0, -cfg.snr_db / 10.0);
    ec.net.isi = cfg.isi;
    ec.net.pa_spread_db = cfg.pa_spread_db;
    ec.f_dT = cfg.f_dT;
    ec.packet = cfg.packet;
    ec.ntr = cfg.ntr;
    ec.rals.alpha = cfg.alpha;
    ec.rals.rinv_init = cfg.rinv_init;
    ec.rals.power_rinv_init = cfg.rinv_init;
    ec.rals.inner_iterations = cfg.iterations;
    ec.rals.bootstrap_len = cfg.bootstrap;
    ec.feedback_once = cfg.feedback == "once";
    ec.quantize = cfg.quantize;
    ec.nb = cfg.nb;
    ec.pe = cfg.pe;
    ec.lambda = cfg.lambda;
    return ec;
}

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, n > 0 ? n : std::size_t{1});
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        });
    for (auto& th : pool) th.join();
}

}  // namespace

CdmaRunOutput simulate_cdma_run(const SimConfig& cfg, const std::string& scheme,
                                std::uint64_t seed) {
    return run_cdma_packet(engine_config(cfg, scheme), seed);
}

BerCurve run_ber_experiment(const SimConfig& cfg) {
    std::vector<double> xs = cfg.snr_sweep;
    if (xs.empty()) xs.push_back(cfg.snr_db);

    BerCurve curve;
    curve.sweep_name = "snr_db";
    curve.schemes = cfg.schemes;

    for (double x : xs) {
        SimConfig pt_cfg = cfg;
        pt_cfg.snr_db = x;
        std::vector<CdmaEngineConfig> engines;
        for (const auto& s : cfg.schemes) engines.push_back(engine_config(pt_cfg, s));

        std::vector<std::vector<CdmaRunOutput>> slots(cfg.schemes.size(),
                                                      std::vector<CdmaRunOutput>(cfg.runs));
        parallel_for(cfg.runs, cfg.threads, [&](std::size_t r) {
            const std::uint64_t run_seed = derive_seed(cfg.seed, 100, r);
            for (std::size_t s = 0; s < engines.size(); ++s)
                slots[s][r] = run_cdma_packet(engines[s], run_seed);
        });

        BerPoint pt;
        pt.x = x;
        for (std::size_t s = 0; s < cfg.schemes.size(); ++s) {
            SchemeStat stat;
            stat.run_ber.reserve(cfg.runs);
            for (const auto& o : slots[s]) {
                stat.bit_errors += o.bit_errors;
                stat.bits += o.bits;
                stat.tail_bit_errors += o.tail_bit_errors;
                stat.tail_bits += o.tail_bits;
                stat.run_ber.push_back(o.bits ? static_cast<double>(o.bit_errors) / o.bits : 0.0);
                stat.max_constraint_error = std::max(stat.max_constraint_error, o.max_constraint_error);
            }
            pt.stats[cfg.schemes[s]] = std::move(stat);
        }
        curve.points.push_back(std::move(pt));
    }
    return curve;
}

BerCurve run_fading_sweep(const SimConfig& cfg, const std::vector<double>& fdt_values) {
    BerCurve curve;
    curve.sweep_name = "fdt";
    curve.schemes = cfg.schemes;
    for (double fdt : fdt_values) {
        SimConfig pt = cfg;
        pt.f_dT = fdt;
        pt.feedback = "once";
        // Shorter adaptation memory as the channel decorrelates faster.
        pt.alpha = fdt >= 5e-3 ? 0.99 : (fdt >= 5e-4 ? 0.997 : cfg.alpha);
        pt.snr_sweep.clear();
        BerCurve one = run_ber_experiment(pt);
        one.points[0].x = fdt;
        curve.points.push_back(std::move(one.points[0]));
    }
    return curve;
}

BerCurve run_feedback_error_sweep(const SimConfig& cfg, const std::vector<double>& pe_values) {
    BerCurve curve;
    curve.sweep_name = "pe";
    curve.schemes = cfg.schemes;
    for (double pe : pe_values) {
        SimConfig pt = cfg;
        pt.feedback = "once";
        pt.quantize = true;
        pt.pe = pe;
        pt.snr_sweep.clear();
        BerCurve one = run_ber_experiment(pt);
        one.points[0].x = pe;
        curve.points.push_back(std::move(one.points[0]));
    }
    return curve;
}

RalsBatchTrial rals_vs_batch_trial(std::uint64_t seed, std::size_t K, std::size_t n_r,
                                   double snr_db, std::size_t ntr) {
    SimConfig cfg;
    cfg.K = K;
    cfg.n_r = n_r;
    cfg.snr_db = snr_db;
    cfg.pa_spread_db = 0.0;
    cfg.packet = ntr;  // training-only packet
    cfg.ntr = ntr;
    // Streaming feedback keeps the applied allocation alternating toward the
    // coupled fixed point that the batch solver iterates to.
    cfg.feedback = "instant";

    CdmaRunOutput ad = simulate_cdma_run(cfg, "jpais_gk", seed);
    CdmaRunOutput bat = simulate_cdma_run(cfg, "jpais_mmse", seed);

    RalsBatchTrial out;
    const double wn = arma::norm(bat.final_filter_user0);
    out.filter_rel_err = wn > 0 ? arma::norm(ad.final_filter_user0 - bat.final_filter_user0) / wn : 1.0;
    const arma::vec a1 = ad.final_group_allocation / arma::norm(ad.final_group_allocation);
    const arma::vec a2 = bat.final_group_allocation / arma::norm(bat.final_group_allocation);
    out.allocation_inner = arma::dot(a1, a2);
    return out;
}

// --- Cooperative MIMO selection experiment --------------------------------------

namespace {

struct MimoSchemeState {
    std::string name;
    bool ce = false;
    bool cooperative = true;
    bool tds = false;         // pattern optimization on
    bool rs = false;          // relay removal on
    bool stochastic = false;  // DSA instead of exhaustive

    // RLS channel identification (destination and relays).
    std::optional<MatrixRls> est_sd;  // M x K
    std::optional<MatrixRls> est_rd;  // M x n_r*K
    std::vector<MatrixRls> est_sr;    // per relay, M x K

    std::optional<DsaSelector> rs_dsa;
    std::optional<DsaSelector> tds_dsa;
    std::optional<SmoothedCost> rs_cost, tds_cost;
    std::size_t removed_relay = SIZE_MAX;

    std::vector<std::uint64_t> err_by_symbol;
    std::uint64_t bit_errors = 0, bits = 0;
};

}  // namespace

std::size_t ber_crossing_index(const std::vector<double>& ber_by_symbol, double threshold) {
    const std::size_t W = 50;
    if (ber_by_symbol.size() < W) return ber_by_symbol.size();
    double acc = 0.0;
    for (std::size_t i = 0; i < ber_by_symbol.size(); ++i) {
        acc += ber_by_symbol[i];
        if (i >= W) acc -= ber_by_symbol[i - W];
        if (i + 1 >= W && acc / static_cast<double>(W) < threshold) return i;
    }
    return ber_by_symbol.size();
}

MimoExperimentResult run_mimo_tds_experiment(const SimConfig& cfg) {
    MimoConfig mc;
    mc.K = cfg.mimo_K;
    mc.n_r = cfg.mimo_nr;
    mc.M = cfg.mimo_M;
    mc.K_sub = cfg.mimo_ksub == 0 ? cfg.mimo_K : cfg.mimo_ksub;
    mc.sigma2 = std::pow(10.0, -cfg.mimo_snr_db / 10.0);

    const std::size_t K = mc.K, n_r = mc.n_r, M = mc.M, J = mc.J();
    const std::size_t P = cfg.mimo_packet_len, ntr = cfg.mimo_ntr;
    const std::vector<Pattern> omega_t = enumerate_tds(n_r, K, mc.K_sub);
    const Pattern all_on = pattern_from_bits(std::vector<int>(n_r * K, 1));

    const std::vector<std::string> base = {"noncoop", "no_tds",     "tds_exh",
                                           "tds_dsa", "tdsrs_exh", "tdsrs_dsa"};
    std::vector<std::string> names;
    for (const auto& b : base) {
        names.push_back(b);
        names.push_back(b + "_ce");
    }

    // Per-packet, per-scheme error counts by symbol index.
    std::vector<std::vector<std::vector<std::uint64_t>>> slot_err(
        cfg.mimo_packets,
        std::vector<std::vector<std::uint64_t>>(names.size(), std::vector<std::uint64_t>(P, 0)));

    parallel_for(cfg.mimo_packets, cfg.threads, [&](std::size_t pkt) {
        const std::uint64_t seed = derive_seed(cfg.seed, 200, pkt);
        MimoNetwork net(mc, derive_seed(seed, 1));
        const MimoCostModel truth = MimoCostModel::from_network(net);

        std::mt19937_64 sym_rng(derive_seed(seed, 2));
        std::mt19937_64 n1_rng(derive_seed(seed, 3)), n2_rng(derive_seed(seed, 4));
        std::vector<std::mt19937_64> nr_rng;
        for (std::size_t j = 0; j < n_r; ++j) nr_rng.emplace_back(derive_seed(seed, 5, j));

        // True-CSI relay detection filters (fixed per packet).
        std::vector<arma::cx_mat> relay_w(n_r);
        for (std::size_t j = 0; j < n_r; ++j) {
            arma::cx_mat R(M, M, arma::fill::zeros);
            for (std::size_t k = 0; k < K; ++k) {
                const arma::cx_vec p = net.source_amp() * net.H_sr(j).col(k);
                R += p * p.t();
            }
            R.diag() += mc.sigma2;
            HermitianSolver solver(R);
            arma::cx_mat W(M, K);
            for (std::size_t k = 0; k < K; ++k)
                W.col(k) = solver.solve(arma::cx_vec(net.source_amp() * net.H_sr(j).col(k)));
            relay_w[j] = std::move(W);
        }

        std::vector<std::size_t> all_relays(n_r);
        for (std::size_t j = 0; j < n_r; ++j) all_relays[j] = j;

        // Preamble sounding cycle: K_sub-antenna groups covering every relay
        // antenna, used by the estimation-based TDS schemes.
        std::vector<Pattern> sounding;
        {
            const std::size_t A = n_r * K;
            const std::size_t groups = (A + mc.K_sub - 1) / mc.K_sub;
            for (std::size_t g = 0; g < groups; ++g) {
                Pattern p = 0;
                for (std::size_t t = 0; t < mc.K_sub; ++t) p |= (1u << ((g * mc.K_sub + t) % A));
                sounding.push_back(p);
            }
        }

        std::vector<MimoSchemeState> st(names.size());
        for (std::size_t s = 0; s < names.size(); ++s) {
            MimoSchemeState& m = st[s];
            m.name = names[s];
            m.ce = m.name.size() > 3 && m.name.rfind("_ce") == m.name.size() - 3;
            const std::string core = m.ce ? m.name.substr(0, m.name.size() - 3) : m.name;
            m.cooperative = core != "noncoop";
            m.tds = core.rfind("tds", 0) == 0;
            m.rs = core.rfind("tdsrs", 0) == 0;
            m.stochastic = core == "tds_dsa" || core == "tdsrs_dsa";
            m.err_by_symbol.assign(P, 0);
            if (m.ce) {
                m.est_sd.emplace(M, K, cfg.mimo_ce_alpha);
                if (m.cooperative) {
                    m.est_rd.emplace(M, n_r * K, cfg.mimo_ce_alpha);
                    for (std::size_t j = 0; j < n_r; ++j)
                        m.est_sr.emplace_back(M, K, cfg.mimo_ce_alpha);
                }
            }
            if (m.stochastic) {
                if (m.rs) {
                    m.rs_dsa.emplace(n_r, true, derive_seed(seed, 6, s), 0);
                    m.rs_cost.emplace(n_r, 0.9);
                    m.removed_relay = m.rs_dsa->incumbent();
                    std::vector<bool> valid(omega_t.size());
                    const std::vector<Pattern> reduced = set_reduction(omega_t, m.removed_relay, K);
                    for (std::size_t t = 0; t < omega_t.size(); ++t)
                        valid[t] = std::find(reduced.begin(), reduced.end(), omega_t[t]) != reduced.end();
                    m.tds_dsa.emplace(omega_t.size(), false, derive_seed(seed, 7, s), 0);
                    m.tds_dsa->restrict_to(valid);
                } else {
                    m.tds_dsa.emplace(omega_t.size(), false, derive_seed(seed, 7, s), 0);
                }
                m.tds_cost.emplace(omega_t.size(), 0.9);
            }
        }

        // Known-CSI detection filter cache, shared across schemes of a packet.
        std::map<Pattern, std::vector<arma::cx_vec>> truth_filters;
        auto truth_filters_for = [&](Pattern p) -> const std::vector<arma::cx_vec>& {
            auto it = truth_filters.find(p);
            if (it == truth_filters.end()) it = truth_filters.emplace(p, truth.filters(p)).first;
            return it->second;
        };
        std::vector<arma::cx_vec> truth_noncoop(K);
        {
            arma::cx_mat R1(M, M, arma::fill::zeros);
            for (std::size_t k = 0; k < K; ++k) {
                const arma::cx_vec p = net.source_amp() * net.H_sd().col(k);
                R1 += p * p.t();
            }
            R1.diag() += mc.sigma2;
            HermitianSolver solver(R1);
            for (std::size_t k = 0; k < K; ++k)
                truth_noncoop[k] = solver.solve(arma::cx_vec(net.source_amp() * net.H_sd().col(k)));
        }

        for (std::size_t i = 0; i < P; ++i) {
            const bool training = i < ntr;
            arma::cx_vec b(K);
            std::bernoulli_distribution coin(0.5);
            for (std::size_t k = 0; k < K; ++k)
                b[k] = qpsk_point(coin(sym_rng) ? 1 : 0, coin(sym_rng) ? 1 : 0);

            const arma::cx_vec n1 = randn_cvec(n1_rng, M, mc.sigma2);
            const arma::cx_vec n2 = randn_cvec(n2_rng, M, mc.sigma2);
            const arma::cx_vec r_sd = net.phase1_dest(b) + n1;

            std::vector<arma::cx_vec> r_sr(n_r);
            arma::cx_mat btilde(n_r, K);
            for (std::size_t j = 0; j < n_r; ++j) {
                r_sr[j] = net.phase1_relay(j, b) + randn_cvec(nr_rng[j], M, mc.sigma2);
                const arma::cx_vec soft = relay_w[j].t() * r_sr[j];
                for (std::size_t k = 0; k < K; ++k)
                    btilde(j, k) = training ? b[k] : qpsk_slice(soft[k]);
            }

            for (std::size_t s = 0; s < names.size(); ++s) {
                MimoSchemeState& m = st[s];

                // Scheme's channel knowledge.
                std::optional<MimoCostModel> est;
                if (m.ce) {
                    std::vector<arma::cx_mat> hsr, hrd;
                    arma::cx_mat hsd = m.est_sd->estimate();
                    if (m.cooperative) {
                        for (std::size_t j = 0; j < n_r; ++j) {
                            hsr.push_back(m.est_sr[j].estimate());
                            hrd.push_back(m.est_rd->estimate().cols(j * K, (j + 1) * K - 1));
                        }
                    }
                    est.emplace(std::move(hsd), std::move(hsr), std::move(hrd), net.source_amp(),
                                mc.sigma2);
                }
                const MimoCostModel& model = m.ce ? *est : truth;

                // Pattern choice from the scheme's state and knowledge. During
                // the preamble, estimation-based TDS schemes cycle through
                // sounding patterns so every relay antenna gets excited.
                Pattern pattern = m.cooperative ? all_on : 0;
                if (m.cooperative && m.tds) {
                    if (m.ce && training) {
                        pattern = sounding[i % sounding.size()];
                    } else if (!m.stochastic) {
                        if (m.rs) {
                            const std::size_t worst = exhaustive_rs(
                                all_relays, [&](std::size_t j) { return model.relay_mse(j); });
                            pattern = exhaustive_tds(set_reduction(omega_t, worst, K),
                                                     [&](Pattern p) { return model.tds_cost(p); });
                        } else {
                            pattern =
                                exhaustive_tds(omega_t, [&](Pattern p) { return model.tds_cost(p); });
                        }
                    } else {
                        pattern = omega_t[m.tds_dsa->incumbent()];
                    }
                }

                // Second phase and detection.
                arma::cx_vec z(K);
                arma::cx_vec r;
                if (m.cooperative) {
                    const arma::cx_vec r_rd = net.phase2_dest(btilde, pattern) + n2;
                    r.set_size(J);
                    r.subvec(0, M - 1) = r_sd;
                    r.subvec(M, J - 1) = r_rd;
                    const std::vector<arma::cx_vec>& w =
                        m.ce ? model.filters(pattern) : truth_filters_for(pattern);
                    for (std::size_t k = 0; k < K; ++k) z[k] = arma::cdot(w[k], r);

                    // Channel identification from the believed symbols.
                    if (m.ce) {
                        arma::cx_vec d(K);
                        for (std::size_t k = 0; k < K; ++k)
                            d[k] = training ? b[k] : qpsk_slice(z[k]);
                        m.est_sd->update(net.source_amp() * d, r_sd);
                        const double t_amp = pattern_amp(pattern);
                        arma::cx_vec u(n_r * K, arma::fill::zeros);
                        for (std::size_t a = 0; a < n_r * K; ++a)
                            if (pattern & (1u << a)) u[a] = t_amp * d[a % K];
                        m.est_rd->update(u, r.subvec(M, J - 1));
                        for (std::size_t j = 0; j < n_r; ++j)
                            m.est_sr[j].update(net.source_amp() * btilde.row(j).st(), r_sr[j]);
                    }

                    // Stochastic selection updates from instantaneous costs.
                    if (m.stochastic) {
                        arma::cx_vec d(K);
                        for (std::size_t k = 0; k < K; ++k)
                            d[k] = training ? b[k] : qpsk_slice(z[k]);
                        if (m.rs) {
                            m.rs_dsa->step([&](std::size_t j) {
                                // Instantaneous squared errors of relay j's
                                // filters under the scheme's knowledge.
                                double e = 0.0;
                                if (m.ce) {
                                    const arma::cx_mat& Hs = m.est_sr[j].estimate();
                                    arma::cx_mat R(M, M, arma::fill::zeros);
                                    for (std::size_t k = 0; k < K; ++k) {
                                        const arma::cx_vec p = net.source_amp() * Hs.col(k);
                                        R += p * p.t();
                                    }
                                    R.diag() += mc.sigma2;
                                    HermitianSolver solver(R);
                                    for (std::size_t k = 0; k < K; ++k) {
                                        const arma::cx_vec w =
                                            solver.solve(arma::cx_vec(net.source_amp() * Hs.col(k)));
                                        e += std::norm(d[k] - arma::cdot(w, r_sr[j]));
                                    }
                                } else {
                                    for (std::size_t k = 0; k < K; ++k)
                                        e += std::norm(d[k] - arma::cdot(relay_w[j].col(k), r_sr[j]));
                                }
                                return m.rs_cost->update(j, e);
                            });
                            if (m.rs_dsa->incumbent() != m.removed_relay) {
                                m.removed_relay = m.rs_dsa->incumbent();
                                const std::vector<Pattern> reduced =
                                    set_reduction(omega_t, m.removed_relay, K);
                                std::vector<bool> valid(omega_t.size());
                                for (std::size_t t = 0; t < omega_t.size(); ++t)
                                    valid[t] = std::find(reduced.begin(), reduced.end(),
                                                         omega_t[t]) != reduced.end();
                                m.tds_dsa->restrict_to(valid);
                            }
                        }
                        m.tds_dsa->step([&](std::size_t t) {
                            const Pattern cand = omega_t[t];
                            // Swap the believed signal of the transmitted
                            // pattern for the candidate's.
                            arma::cx_vec rt = r;
                            for (std::size_t k = 0; k < K; ++k)
                                rt += (model.signature(k, cand) - model.signature(k, pattern)) * d[k];
                            const std::vector<arma::cx_vec> w = model.filters(cand);
                            double e = 0.0;
                            for (std::size_t k = 0; k < K; ++k)
                                e += std::norm(d[k] - arma::cdot(w[k], rt));
                            return m.tds_cost->update(t, e);
                        });
                    }
                } else {
                    // Direct transmission only.
                    if (m.ce) {
                        const arma::cx_mat& hsd = m.est_sd->estimate();
                        arma::cx_mat R1(M, M, arma::fill::zeros);
                        for (std::size_t k = 0; k < K; ++k) {
                            const arma::cx_vec p = net.source_amp() * hsd.col(k);
                            R1 += p * p.t();
                        }
                        R1.diag() += mc.sigma2;
                        HermitianSolver solver(R1);
                        for (std::size_t k = 0; k < K; ++k)
                            z[k] = arma::cdot(
                                solver.solve(arma::cx_vec(net.source_amp() * hsd.col(k))), r_sd);
                        arma::cx_vec d(K);
                        for (std::size_t k = 0; k < K; ++k)
                            d[k] = training ? b[k] : qpsk_slice(z[k]);
                        m.est_sd->update(net.source_amp() * d, r_sd);
                    } else {
                        for (std::size_t k = 0; k < K; ++k) z[k] = arma::cdot(truth_noncoop[k], r_sd);
                    }
                }

                std::uint64_t err = 0;
                for (std::size_t k = 0; k < K; ++k) err += qpsk_bit_errors(qpsk_slice(z[k]), b[k]);
                m.err_by_symbol[i] = err;
            }
        }

        for (std::size_t s = 0; s < names.size(); ++s) slot_err[pkt][s] = st[s].err_by_symbol;
    });

    MimoExperimentResult result;
    result.convergence.sweep_name = "symbol";
    result.convergence.schemes = names;

    const double bits_per_symbol = static_cast<double>(2 * K * cfg.mimo_packets);
    const std::size_t window = std::min<std::size_t>(200, P);
    for (std::size_t s = 0; s < names.size(); ++s) {
        MimoSchemeResult res;
        res.ber_by_symbol.assign(P, 0.0);
        for (std::size_t pkt = 0; pkt < cfg.mimo_packets; ++pkt)
            for (std::size_t i = 0; i < P; ++i)
                res.ber_by_symbol[i] += static_cast<double>(slot_err[pkt][s][i]);
        std::uint64_t werr = 0;
        for (std::size_t i = 0; i < P; ++i) {
            const std::uint64_t e = static_cast<std::uint64_t>(res.ber_by_symbol[i]);
            if (i >= ntr) {
                res.bit_errors += e;
                res.bits += 2 * K * cfg.mimo_packets;
            }
            if (i + window >= P) werr += e;
            res.ber_by_symbol[i] /= bits_per_symbol;
        }
        res.final_ber = static_cast<double>(werr) / (bits_per_symbol * static_cast<double>(window));
        result.schemes[names[s]] = std::move(res);
    }

    // Convergence CSV: 50-symbol moving average sampled every 10 symbols.
    for (std::size_t i = 0; i + 1 <= P; i += 10) {
        BerPoint pt;
        pt.x = static_cast<double>(i);
        for (const auto& name : names) {
            const auto& ber = result.schemes[name].ber_by_symbol;
            const std::size_t lo = i >= 49 ? i - 49 : 0;
            double acc = 0.0;
            for (std::size_t t = lo; t <= i; ++t) acc += ber[t];
            SchemeStat stat;
            stat.bit_errors = static_cast<std::uint64_t>(
                acc / static_cast<double>(i - lo + 1) * 1e12);
            stat.bits = static_cast<std::uint64_t>(1e12);
            pt.stats[name] = std::move(stat);
        }
        result.convergence.points.push_back(std::move(pt));
    }
    return result;
}

}  // namespace crn
