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

#include "crn/selection.hpp"

#include <bit>
#include <limits>
#include <stdexcept>

#include "crn/mmse.hpp"

namespace crn {

std::vector<Pattern> enumerate_tds(std::size_t n_r, std::size_t K, std::size_t K_sub) {
    const std::size_t antennas = n_r * K;
    if (K_sub == 0 || K_sub > antennas)
        throw std::invalid_argument("enumerate_tds: need 1 <= K_sub <= n_r*K");
    if (antennas > 32) throw std::invalid_argument("enumerate_tds: more than 32 relay antennas");

    std::vector<Pattern> out;
    std::vector<std::size_t> pick(K_sub);
    for (std::size_t i = 0; i < K_sub; ++i) pick[i] = i;
    while (true) {
        Pattern p = 0;
        for (std::size_t i : pick) p |= (1u << i);
        out.push_back(p);
        // next combination in lexicographic order
        std::size_t i = K_sub;
        while (i > 0 && pick[i - 1] == antennas - K_sub + i - 1) --i;
        if (i == 0) break;
        ++pick[i - 1];
        for (std::size_t j = i; j < K_sub; ++j) pick[j] = pick[j - 1] + 1;
    }
    return out;
}

std::vector<Pattern> set_reduction(const std::vector<Pattern>& omega, std::size_t relay,
                                   std::size_t K) {
    const Pattern mask = ((1u << K) - 1u) << (relay * K);
    std::vector<Pattern> out;
    out.reserve(omega.size());
    for (Pattern p : omega)
        if ((p & mask) == 0) out.push_back(p);
    return out;
}

std::vector<int> feedback_bits(Pattern pattern, std::size_t n_r, std::size_t K) {
    std::vector<int> bits(n_r * K);
    for (std::size_t a = 0; a < bits.size(); ++a) bits[a] = (pattern >> a) & 1u;
    return bits;
}

Pattern pattern_from_bits(const std::vector<int>& bits) {
    Pattern p = 0;
    for (std::size_t a = 0; a < bits.size(); ++a)
        if (bits[a]) p |= (1u << a);
    return p;
}

MimoCostModel::MimoCostModel(arma::cx_mat H_sd, std::vector<arma::cx_mat> H_sr,
                             std::vector<arma::cx_mat> H_rd, double source_amp, double sigma2)
    : H_sd_(std::move(H_sd)),
      H_sr_(std::move(H_sr)),
      H_rd_(std::move(H_rd)),
      a_s_(source_amp),
      sigma2_(sigma2),
      K_(H_sd_.n_cols),
      M_(H_sd_.n_rows) {}

MimoCostModel MimoCostModel::from_network(const MimoNetwork& net) {
    std::vector<arma::cx_mat> hsr, hrd;
    for (std::size_t j = 0; j < net.config().n_r; ++j) {
        hsr.push_back(net.H_sr(j));
        hrd.push_back(net.H_rd(j));
    }
    return MimoCostModel(net.H_sd(), std::move(hsr), std::move(hrd), net.source_amp(),
                         net.config().sigma2);
}

arma::cx_vec MimoCostModel::signature(std::size_t k, Pattern pattern) const {
    const double amp = pattern_amp(pattern);
    arma::cx_vec q(J(), arma::fill::zeros);
    q.subvec(0, M_ - 1) = a_s_ * H_sd_.col(k);
    for (std::size_t j = 0; j < H_rd_.size(); ++j)
        if (pattern & (1u << (j * K_ + k))) q.subvec(M_, 2 * M_ - 1) += amp * H_rd_[j].col(k);
    return q;
}

arma::cx_mat MimoCostModel::covariance(Pattern pattern) const {
    arma::cx_mat R(J(), J(), arma::fill::zeros);
    for (std::size_t k = 0; k < K_; ++k) {
        const arma::cx_vec q = signature(k, pattern);
        R += q * q.t();
    }
    R.diag() += sigma2_;
    return R;
}

std::vector<arma::cx_vec> MimoCostModel::filters(Pattern pattern) const {
    HermitianSolver solver(covariance(pattern));
    std::vector<arma::cx_vec> w(K_);
    for (std::size_t k = 0; k < K_; ++k) w[k] = solver.solve(signature(k, pattern));
    return w;
}

double MimoCostModel::tds_cost(Pattern pattern) const {
    HermitianSolver solver(covariance(pattern));
    double cost = 0.0;
    for (std::size_t k = 0; k < K_; ++k) {
        const arma::cx_vec q = signature(k, pattern);
        cost += 1.0 - std::real(arma::cdot(q, solver.solve(q)));
    }
    return cost;
}

double MimoCostModel::relay_mse(std::size_t j) const {
    arma::cx_mat R(M_, M_, arma::fill::zeros);
    for (std::size_t k = 0; k < K_; ++k) {
        const arma::cx_vec p = a_s_ * H_sr_[j].col(k);
        R += p * p.t();
    }
    R.diag() += sigma2_;
    HermitianSolver solver(R);
    double mse = 0.0;
    for (std::size_t k = 0; k < K_; ++k) {
        const arma::cx_vec p = a_s_ * H_sr_[j].col(k);
        mse += 1.0 - std::real(arma::cdot(p, solver.solve(p)));
    }
    return mse;
}

Pattern exhaustive_tds(const std::vector<Pattern>& omega,
                       const std::function<double(Pattern)>& cost) {
    if (omega.empty()) throw std::invalid_argument("exhaustive_tds: empty candidate set");
    Pattern best = omega[0];
    double best_cost = cost(best);
    for (std::size_t i = 1; i < omega.size(); ++i) {
        const double c = cost(omega[i]);
        if (c < best_cost) {
            best = omega[i];
            best_cost = c;
        }
    }
    return best;
}

std::size_t exhaustive_rs(const std::vector<std::size_t>& omega_r,
                          const std::function<double(std::size_t)>& mse) {
    if (omega_r.empty()) throw std::invalid_argument("exhaustive_rs: empty candidate set");
    std::size_t worst = omega_r[0];
    double worst_mse = mse(worst);
    for (std::size_t i = 1; i < omega_r.size(); ++i) {
        const double m = mse(omega_r[i]);
        if (m > worst_mse) {
            worst = omega_r[i];
            worst_mse = m;
        }
    }
    return worst;
}

DsaSelector::DsaSelector(std::size_t set_size, bool maximize, std::uint64_t seed, std::size_t init)
    : incumbent_(init), tracker_(init), maximize_(maximize), rng_(seed) {
    if (set_size == 0) throw std::invalid_argument("DsaSelector: empty set");
    if (init >= set_size) throw std::invalid_argument("DsaSelector: bad initial member");
    pi_.zeros(set_size);
    pi_[init] = 1.0;
    valid_.assign(set_size, true);
    valid_idx_.resize(set_size);
    for (std::size_t m = 0; m < set_size; ++m) valid_idx_[m] = m;
}

void DsaSelector::step(const std::function<double(std::size_t)>& cost) {
    ++iter_;
    const std::size_t cand = valid_idx_[std::uniform_int_distribution<std::size_t>(
        0, valid_idx_.size() - 1)(rng_)];

    const double c_cand = cost(cand);
    const double c_track = cost(tracker_);
    const bool replace = maximize_ ? (c_cand > c_track) : (c_cand < c_track);
    if (replace) tracker_ = cand;

    const double mu = 1.0 / static_cast<double>(iter_ + 1);
    pi_ *= (1.0 - mu);
    pi_[tracker_] += mu;

    if (pi_[tracker_] > pi_[incumbent_]) incumbent_ = tracker_;
}

void DsaSelector::restrict_to(const std::vector<bool>& valid) {
    if (valid.size() != static_cast<std::size_t>(pi_.n_elem))
        throw std::invalid_argument("DsaSelector: validity mask size mismatch");
    valid_ = valid;
    valid_idx_.clear();
    for (std::size_t m = 0; m < valid.size(); ++m)
        if (valid[m]) valid_idx_.push_back(m);
    if (valid_idx_.empty()) throw std::invalid_argument("DsaSelector: all members removed");

    double kept = 0.0;
    for (std::size_t m = 0; m < valid.size(); ++m) {
        if (!valid[m]) pi_[m] = 0.0;
        kept += pi_[m];
    }
    if (kept > 1e-12)
        pi_ /= kept;
    else
        for (std::size_t m : valid_idx_) pi_[m] = 1.0 / static_cast<double>(valid_idx_.size());

    if (!valid_[incumbent_]) {
        std::size_t arg = valid_idx_[0];
        for (std::size_t m : valid_idx_)
            if (pi_[m] > pi_[arg]) arg = m;
        incumbent_ = arg;
    }
    if (!valid_[tracker_]) tracker_ = incumbent_;
}

SmoothedCost::SmoothedCost(std::size_t members, double retain) : retain_(retain) {
    value_.assign(members, 0.0);
    seen_.assign(members, false);
}

double SmoothedCost::update(std::size_t key, double sample) {
    if (!seen_[key]) {
        value_[key] = sample;
        seen_[key] = true;
    } else {
        value_[key] = retain_ * value_[key] + (1.0 - retain_) * sample;
    }
    return value_[key];
}

}  // namespace crn
