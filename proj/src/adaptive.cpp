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

#include "crn/adaptive.hpp"

#include <cmath>
#include <stdexcept>

#include "crn/mmse.hpp"

namespace crn {

RlsInverse::RlsInverse(std::size_t dim, double alpha, double init_scale) : alpha_(alpha) {
    if (alpha <= 0.0 || alpha > 1.0) throw std::invalid_argument("RlsInverse: alpha must be in (0,1]");
    if (init_scale <= 0.0) throw std::invalid_argument("RlsInverse: init_scale must be positive");
    P_.zeros(dim, dim);
    P_.diag() += init_scale;
    gain_.zeros(dim);
    Px_.zeros(dim);
}

const arma::cx_vec& RlsInverse::update(const arma::cx_vec& x) {
    Px_ = P_ * x;
    const double quad = std::real(arma::cdot(x, Px_));
    const double denom = 1.0 + quad / alpha_;
    gain_ = Px_ / (alpha_ * denom);
    P_ = (P_ - gain_ * Px_.t()) / alpha_;
    P_ = 0.5 * (P_ + P_.t());
    return gain_;
}

void rls_filter_update(arma::cx_vec& w, const arma::cx_vec& gain, cx xi) {
    w += gain * std::conj(xi);
}

PowerRls::PowerRls(std::size_t dim, double alpha, double init_scale, double P_G)
    : rls_(dim, alpha, init_scale), P_G_(P_G), init_scale_(init_scale) {
    if (P_G <= 0.0) throw std::invalid_argument("PowerRls: P_G must be positive");
    equal_entry_ = std::sqrt(P_G / static_cast<double>(dim));
    a_.set_size(dim);
    a_.fill(cx(equal_entry_, 0.0));
    renormalize();
}

cx PowerRls::update(const arma::cx_vec& v, cx b) {
    const arma::cx_vec& gain = rls_.update(v);
    // The group cross-correlation accumulates b * v (the symbol conjugates sit
    // inside v), so the innovation pairs the unconjugated symbol with v^H a.
    const cx xi = b - arma::cdot(v, a_);
    a_ += gain * xi;
    renormalize();
    return xi;
}

void PowerRls::renormalize() {
    const double nrm = arma::norm(a_);
    if (nrm < 1e-300) a_.fill(cx(equal_entry_, 0.0));
    a_ *= std::sqrt(P_G_) / arma::norm(a_);
    applied_ = arma::abs(a_);
    max_constraint_err_ = std::max(max_constraint_err_, std::abs(arma::dot(applied_, applied_) - P_G_));
}

void PowerRls::reset_covariance() { rls_ = RlsInverse(a_.n_elem, rls_.alpha(), init_scale_); }

void PowerRls::remap(const std::vector<int>& keep, double new_P_G) {
    const std::size_t links = a_.n_elem / keep.size();
    arma::cx_vec next(a_.n_elem);
    P_G_ = new_P_G;
    equal_entry_ = std::sqrt(P_G_ / static_cast<double>(a_.n_elem));
    for (std::size_t g = 0; g < keep.size(); ++g) {
        if (keep[g] >= 0)
            next.subvec(g * links, (g + 1) * links - 1) =
                a_.subvec(keep[g] * links, (keep[g] + 1) * links - 1);
        else
            next.subvec(g * links, (g + 1) * links - 1).fill(cx(equal_entry_, 0.0));
    }
    a_ = std::move(next);
    rls_ = RlsInverse(a_.n_elem, rls_.alpha(), init_scale_);
    renormalize();
}

ChannelRls::ChannelRls(std::size_t dim, double alpha, double target_norm, double prior_scale)
    : alpha_(alpha), target_norm_(target_norm) {
    Ph_.zeros(dim, dim);
    Ph_.diag() += prior_scale;
    hhat_.zeros(dim);
}

void ChannelRls::advance_prior() { Ph_ = alpha_ * Ph_ + hhat_ * hhat_.t(); }

void ChannelRls::rescale() {
    const double nrm = arma::norm(hhat_);
    if (nrm > 1e-12) hhat_ *= target_norm_ / nrm;
}

const arma::cx_vec& ChannelRls::update(const arma::cx_vec& qh_rinv_r) {
    advance_prior();
    hhat_ = Ph_.t() * qh_rinv_r;
    rescale();
    return hhat_;
}

void ChannelRls::seed(const arma::cx_vec& h) {
    advance_prior();
    hhat_ = h;
    const double nrm = arma::norm(h);
    if (nrm > 1e-9) target_norm_ = nrm;
}

arma::cx_vec gram_corrected_statistic(const arma::mat& C, const arma::mat& gram,
                                      const arma::cx_vec& x, cx b, const arma::vec& a_links,
                                      double eps) {
    const std::size_t L = gram.n_rows, M = C.n_rows;
    const std::size_t links = a_links.n_elem;
    arma::cx_vec out(links * L);
    for (std::size_t l = 0; l < links; ++l) {
        const arma::cx_vec x_l = x.subvec(l * M, (l + 1) * M - 1);
        const arma::cx_vec rhs = std::conj(b * a_links[l]) *
                                 arma::cx_vec(C.t() * arma::real(x_l), C.t() * arma::imag(x_l));
        arma::mat A = std::norm(b * a_links[l]) * gram;
        A.diag() += eps;
        const arma::mat Ainv_real = arma::inv_sympd(A);
        out.subvec(l * L, (l + 1) * L - 1) =
            arma::cx_vec(Ainv_real * arma::real(rhs), Ainv_real * arma::imag(rhs));
    }
    return out;
}

MatrixRls::MatrixRls(std::size_t rows, std::size_t cols, double alpha, double init_scale)
    : alpha_(alpha) {
    phi_.zeros(cols, cols);
    phi_.diag() += init_scale;
    psi_.zeros(rows, cols);
    H_.zeros(rows, cols);
}

void MatrixRls::update(const arma::cx_vec& x, const arma::cx_vec& y) {
    phi_ = alpha_ * phi_ + x * x.t();
    psi_ = alpha_ * psi_ + y * x.t();
    arma::cx_mat A = phi_;
    A.diag() += 1e-9;
    // H solves H phi = psi.
    H_ = arma::solve(A.st(), psi_.st()).st();
}

// --- RalsReceiver -----------------------------------------------------------

RalsReceiver::RalsReceiver(const CdmaNetwork& net, const RalsOptions& opts)
    : net_(net),
      opts_(opts),
      G_(opts.group_size == 0 ? net.config().K : opts.group_size),
      P_G_(0.0),
      rls_(net.config().J(), opts.alpha, opts.rinv_init),
      power_(1, 1.0, 1.0, 1.0) {
    const NetworkConfig& cfg = net.config();
    if (G_ > cfg.K) throw std::invalid_argument("RalsReceiver: group size exceeds user count");
    const std::size_t links = cfg.n_r + 1;

    w_.assign(cfg.K, arma::cx_vec(cfg.J(), arma::fill::zeros));
    // The stacked true channel has one unit-power vector per link.
    for (std::size_t k = 0; k < cfg.K; ++k)
        ce_.emplace_back(cfg.Q(), opts.alpha, std::sqrt(static_cast<double>(links)));

    group_.resize(G_);
    for (std::size_t g = 0; g < G_; ++g) group_[g] = g;
    for (std::size_t g = 0; g < G_; ++g) P_G_ += net.pa(group_[g]);
    power_ = PowerRls(G_ * links, opts.alpha, opts.power_rinv_init, P_G_);

    ls_rhs_.assign(cfg.K, arma::cx_vec(cfg.Q(), arma::fill::zeros));
    ls_weight_.assign(cfg.K, arma::vec(links, arma::fill::zeros));
    for (std::size_t k = 0; k < cfg.K; ++k) {
        const arma::mat& C = net.signature_matrix(k);
        gram_.push_back(C.t() * C);
        gram_inv_.push_back(arma::inv_sympd(gram_.back()));
    }
    rake_blocks_.assign(cfg.K, std::vector<arma::cx_vec>(links, arma::cx_vec(cfg.M(), arma::fill::zeros)));
}

const arma::vec& RalsReceiver::group_allocation() const { return power_.applied(); }

void RalsReceiver::notify_allocation_change() {
    rls_ = RlsInverse(net_.config().J(), opts_.alpha, opts_.rinv_init);
    power_.reset_covariance();
}

double RalsReceiver::max_constraint_error() const { return power_.max_constraint_error(); }

arma::vec RalsReceiver::recommended_allocation(std::size_t k) const {
    const std::size_t links = net_.config().n_r + 1;
    if (opts_.power_updates)
        for (std::size_t g = 0; g < G_; ++g)
            if (group_[g] == k) return power_.applied().subvec(g * links, (g + 1) * links - 1);
    return net_.equal_allocation(k);
}

void RalsReceiver::update_rake_cache(std::size_t k) {
    const NetworkConfig& cfg = net_.config();
    const arma::cx_mat C = arma::conv_to<arma::cx_mat>::from(net_.signature_matrix(k));
    const arma::cx_vec& h = ce_[k].estimate();
    for (std::size_t l = 0; l <= cfg.n_r; ++l)
        rake_blocks_[k][l] = C * h.subvec(l * cfg.L, (l + 1) * cfg.L - 1);
}

void RalsReceiver::select_and_remap(const arma::cx_vec& r) {
    const NetworkConfig& cfg = net_.config();
    const std::size_t M = cfg.M();
    arma::vec mags(cfg.K);
    for (std::size_t k = 0; k < cfg.K; ++k) {
        cx z = 0.0;
        for (std::size_t l = 0; l <= cfg.n_r; ++l)
            z += arma::cdot(rake_blocks_[k][l], r.subvec(l * M, (l + 1) * M - 1));
        mags[k] = std::abs(z);
    }
    std::vector<std::size_t> fresh = select_group(mags, G_);
    if (fresh == group_) return;
    std::vector<int> keep(G_, -1);
    for (std::size_t g = 0; g < G_; ++g)
        for (std::size_t old = 0; old < G_; ++old)
            if (group_[old] == fresh[g]) keep[g] = static_cast<int>(old);
    double budget = 0.0;
    for (std::size_t k : fresh) budget += net_.pa(k);
    power_.remap(keep, budget);
    group_ = std::move(fresh);
    P_G_ = budget;
}

RalsStep RalsReceiver::step(std::size_t i, const arma::cx_vec& r, const arma::cx_vec* training,
                            const arma::mat& applied) {
    const NetworkConfig& cfg = net_.config();
    const std::size_t K = cfg.K, M = cfg.M(), L = cfg.L, links = cfg.n_r + 1;

    RalsStep out;
    out.training = training != nullptr;

    const arma::cx_vec& gain = rls_.update(r);  // gain = R^{-1}[i] r

    out.soft.set_size(K);
    out.decisions.set_size(K);
    for (std::size_t k = 0; k < K; ++k) {
        out.soft[k] = arma::cdot(w_[k], r);
        out.decisions[k] = qpsk_slice(out.soft[k]);
    }
    arma::cx_vec d(K);
    for (std::size_t k = 0; k < K; ++k) d[k] = training ? (*training)[k] : out.decisions[k];

    if (opts_.power_updates && opts_.channel_estimation) select_and_remap(r);

    if (opts_.channel_estimation) {
        // Reconstruction of every user's believed contribution; subtracting it
        // from r leaves each user a multi-access-interference-cleaned
        // observation, which keeps the per-user statistics unbiased.
        arma::cx_vec recon(cfg.J(), arma::fill::zeros);
        for (std::size_t k = 0; k < K; ++k)
            for (std::size_t l = 0; l < links; ++l)
                recon.subvec(l * M, (l + 1) * M - 1) +=
                    (d[k] * applied(k, l)) * rake_blocks_[k][l];

        // Exponentially weighted per-link least squares on the cleaned
        // observations; the prior/estimate recursion tracks its output.
        for (std::size_t k = 0; k < K; ++k) {
            const arma::mat& C = net_.signature_matrix(k);
            arma::cx_vec h0(cfg.Q(), arma::fill::zeros);
            for (std::size_t l = 0; l < links; ++l) {
                const double a = applied(k, l);
                const arma::cx_vec block = r.subvec(l * M, (l + 1) * M - 1) -
                                           recon.subvec(l * M, (l + 1) * M - 1) +
                                           (d[k] * a) * rake_blocks_[k][l];
                ls_rhs_[k].subvec(l * L, (l + 1) * L - 1) =
                    opts_.alpha * ls_rhs_[k].subvec(l * L, (l + 1) * L - 1) +
                    std::conj(d[k]) * a *
                        arma::cx_vec(C.t() * arma::real(block), C.t() * arma::imag(block));
                ls_weight_[k][l] = opts_.alpha * ls_weight_[k][l] + a * a;
                if (ls_weight_[k][l] > 1e-12) {
                    const arma::cx_vec rhs = ls_rhs_[k].subvec(l * L, (l + 1) * L - 1);
                    h0.subvec(l * L, (l + 1) * L - 1) =
                        arma::cx_vec(gram_inv_[k] * arma::real(rhs), gram_inv_[k] * arma::imag(rhs)) /
                        ls_weight_[k][l];
                } else {
                    h0.subvec(l * L, (l + 1) * L - 1) =
                        ce_[k].estimate().subvec(l * L, (l + 1) * L - 1);
                }
            }
            ce_[k].seed(h0);
            update_rake_cache(k);
        }
    }

    for (std::size_t pass = 0; pass < std::max<std::size_t>(1, opts_.inner_iterations); ++pass) {
        if (opts_.power_updates) {
            for (std::size_t g = 0; g < G_; ++g) {
                const arma::cx_vec& wk = w_[group_[g]];
                arma::cx_vec v(G_ * links);
                for (std::size_t gp = 0; gp < G_; ++gp)
                    for (std::size_t l = 0; l < links; ++l)
                        v[gp * links + l] = std::conj(d[group_[gp]]) *
                                            arma::cdot(rake_blocks_[group_[gp]][l],
                                                       wk.subvec(l * M, (l + 1) * M - 1));
                power_.update(v, d[group_[g]]);
            }
        }
        for (std::size_t k = 0; k < K; ++k) {
            const cx xi = d[k] - arma::cdot(w_[k], r);
            rls_filter_update(w_[k], gain, xi);
        }
    }
    return out;
}

// --- AdaptiveRelayBank --------------------------------------------------------

AdaptiveRelayBank::AdaptiveRelayBank(const CdmaNetwork& net, double alpha, double rinv_init)
    : net_(net) {
    const NetworkConfig& cfg = net.config();
    for (std::size_t j = 0; j < cfg.n_r; ++j) {
        rls_.emplace_back(cfg.M(), alpha, rinv_init);
        w_.emplace_back(cfg.K, arma::cx_vec(cfg.M(), arma::fill::zeros));
    }
    af_gain_.resize(cfg.n_r);
}

arma::cx_vec AdaptiveRelayBank::step(std::size_t j, const arma::cx_vec& r,
                                     const arma::cx_vec* training) {
    const NetworkConfig& cfg = net_.config();
    const arma::cx_vec& gain = rls_[j].update(r);

    arma::cx_vec soft(cfg.K), out(cfg.K);
    for (std::size_t k = 0; k < cfg.K; ++k) soft[k] = arma::cdot(w_[j][k], r);

    if (cfg.protocol == RelayProtocol::af) {
        const double g = af_gain_[j].gain();  // causal: from past symbols only
        af_gain_[j].observe(soft);
        out = g * soft;
    } else {
        for (std::size_t k = 0; k < cfg.K; ++k)
            out[k] = training ? (*training)[k] : qpsk_slice(soft[k]);
    }

    for (std::size_t k = 0; k < cfg.K; ++k) {
        const cx d = training ? (*training)[k] : qpsk_slice(soft[k]);
        rls_filter_update(w_[j][k], gain, d - soft[k]);
    }
    return out;
}

}  // namespace crn
