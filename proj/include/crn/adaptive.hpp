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
#include <optional>
#include <vector>

#include "crn/common.hpp"
#include "crn/coopnet.hpp"

namespace crn {

// Exponentially weighted inverse-covariance tracker (matrix inversion lemma).
// The gain returned by update() equals R^{-1}[i] x[i], which doubles as the
// solved right-hand side needed by the channel recursion.
class RlsInverse {
  public:
    RlsInverse(std::size_t dim, double alpha, double init_scale);

    const arma::cx_vec& update(const arma::cx_vec& x);
    const arma::cx_mat& inverse() const { return P_; }
    const arma::cx_vec& gain() const { return gain_; }
    double alpha() const { return alpha_; }

  private:
    arma::cx_mat P_;
    arma::cx_vec gain_, Px_;
    double alpha_;
};

// w <- w + k * conj(xi), the receive-filter recursion.
void rls_filter_update(arma::cx_vec& w, const arma::cx_vec& gain, cx xi);

// Group power-allocation recursion. The complex regression state follows the
// a-priori error update; the applied allocation is its magnitude vector
// rescaled onto the constraint sphere a^T a = P_G after every update.
class PowerRls {
  public:
    PowerRls(std::size_t dim, double alpha, double init_scale, double P_G);

    // One update with transformed input v and training/decision symbol b.
    // Returns the a-priori error.
    cx update(const arma::cx_vec& v, cx b);

    // Restart the covariance recursion (the allocation estimate is kept).
    void reset_covariance();

    const arma::vec& applied() const { return applied_; }
    const arma::cx_vec& raw() const { return a_; }
    double P_G() const { return P_G_; }
    double max_constraint_error() const { return max_constraint_err_; }

    // Rearrange state when the group membership changes: keep[g] gives the
    // previous block of the user now occupying block g, or -1 for a new
    // member (reset to the equal-power value). The covariance recursion
    // restarts, the pooled budget may change with the membership.
    void remap(const std::vector<int>& keep, double new_P_G);

  private:
    void renormalize();

    RlsInverse rls_;
    arma::cx_vec a_;
    arma::vec applied_;
    double P_G_;
    double equal_entry_;
    double init_scale_;
    double max_constraint_err_ = 0.0;
};

// Channel-estimate recursion: the prior accumulates the outer products of past
// estimates with forgetting, and each new estimate is
// hhat = P_h^H Q^H (R^{-1} r). The raw recursion fixes only the direction of
// the estimate, not its scale, so each update re-anchors the norm to
// `target_norm` (the links are unit power by construction).
class ChannelRls {
  public:
    ChannelRls(std::size_t dim, double alpha, double target_norm = 1.0, double prior_scale = 1.0);

    // Full recursion step given Q^H (R^{-1} r).
    const arma::cx_vec& update(const arma::cx_vec& qh_rinv_r);
    // Bootstrap path: advance the prior and force the estimate. The seed's
    // own norm becomes the scale anchor of later recursion steps (the
    // least-squares warmup carries the true channel scale).
    void seed(const arma::cx_vec& h);

    const arma::cx_vec& estimate() const { return hhat_; }
    const arma::cx_mat& prior() const { return Ph_; }

  private:
    void advance_prior();
    void rescale();

    arma::cx_mat Ph_;
    arma::cx_vec hhat_;
    double alpha_;
    double target_norm_;
};

// Exponentially weighted identification of a matrix channel from input/output
// pairs y = H x + n. The auxiliary regressor covariance starts at the identity
// and the estimate at zero; solving the regularized normal equations per
// update keeps unexcited regressor directions harmless (an inverse-covariance
// recursion would diverge on them under forgetting).
class MatrixRls {
  public:
    MatrixRls(std::size_t rows, std::size_t cols, double alpha, double init_scale = 1.0);
    void update(const arma::cx_vec& x, const arma::cx_vec& y);
    const arma::cx_mat& estimate() const { return H_; }

  private:
    arma::cx_mat phi_;  // regressor covariance
    arma::cx_mat psi_;  // output/regressor cross-correlation
    arma::cx_mat H_;
    double alpha_;
};

// Per-link Gram-corrected channel statistic: block l of the result solves
// (|b a_l|^2 C^T C + eps I) s_l = conj(b a_l) C^T x_l. The raw matched
// statistic C^T x would leave a code-autocorrelation bias in the estimate
// direction on static channels.
arma::cx_vec gram_corrected_statistic(const arma::mat& C, const arma::mat& gram,
                                      const arma::cx_vec& x, cx b, const arma::vec& a_links,
                                      double eps = 1e-6);

struct RalsOptions {
    double alpha = 0.998;
    double rinv_init = 0.01;        // R^{-1}[0] = rinv_init I
    double power_rinv_init = 0.01;  // same for the group recursion
    std::size_t group_size = 0;     // 0 selects G = K
    std::size_t inner_iterations = 2;
    bool power_updates = true;      // off reproduces the CIS baseline
    bool channel_estimation = true;
    std::size_t training_len = 200;
    std::size_t bootstrap_len = 10;  // least-squares channel warmup
};

struct RalsStep {
    arma::cx_vec soft;       // a-priori filter outputs, one per user
    arma::cx_vec decisions;  // sliced symbols used for counting and DD
    bool training = false;
};

// Destination-side RALS receiver for the cooperative DS-CDMA uplink: shared
// inverse-covariance recursion, per-user receive filters and channel
// estimates, RAKE group selection, and the group power recursion. The caller
// owns the transmit side: it passes the amplitudes actually in effect at each
// symbol and reads back `recommended_allocation` to close the feedback loop.
class RalsReceiver {
  public:
    RalsReceiver(const CdmaNetwork& net, const RalsOptions& opts);

    // Process r[i]. `training` carries the K known symbols while i <
    // training_len, nullptr afterwards. `applied` is the K x (n_r+1) matrix
    // of per-user link amplitudes the transmitters used for this symbol.
    RalsStep step(std::size_t i, const arma::cx_vec& r, const arma::cx_vec* training,
                  const arma::mat& applied);

    // Desired allocation for user k's links (sqrt P_G scaled group block for
    // members, the fixed equal split otherwise).
    arma::vec recommended_allocation(std::size_t k) const;

    // The transmit side applied a new allocation: the received statistics
    // change discontinuously, so the covariance recursions restart while the
    // filters and channel estimates carry over.
    void notify_allocation_change();
    const std::vector<std::size_t>& group() const { return group_; }
    double group_budget() const { return P_G_; }
    const arma::vec& group_allocation() const;

    const arma::cx_vec& filter(std::size_t k) const { return w_[k]; }
    const arma::cx_vec& channel_estimate(std::size_t k) const { return ce_[k].estimate(); }
    double max_constraint_error() const;

  private:
    void update_rake_cache(std::size_t k);
    void select_and_remap(const arma::cx_vec& r);

    const CdmaNetwork& net_;
    RalsOptions opts_;
    std::size_t G_;
    double P_G_;

    RlsInverse rls_;
    std::vector<arma::cx_vec> w_;
    std::vector<ChannelRls> ce_;
    PowerRls power_;
    std::vector<std::size_t> group_;

    // Exponentially weighted least-squares accumulators (the normal equations
    // are block diagonal in the links).
    std::vector<arma::cx_vec> ls_rhs_;
    std::vector<arma::vec> ls_weight_;
    std::vector<arma::mat> gram_;      // per-user C^T C
    std::vector<arma::mat> gram_inv_;  // per-user (C^T C)^{-1}

    // Cached per-user per-link RAKE blocks C_k hhat_l.
    std::vector<std::vector<arma::cx_vec>> rake_blocks_;
};

// Adaptive relay receivers: one shared inverse-covariance recursion and K
// filters per relay. DF relays retransmit the known preamble during training
// and sliced decisions afterwards; AF relays retransmit the gain-normalized
// soft statistics throughout.
class AdaptiveRelayBank {
  public:
    AdaptiveRelayBank(const CdmaNetwork& net, double alpha, double rinv_init);

    // Observation of relay j at symbol i; returns the K retransmitted symbols.
    arma::cx_vec step(std::size_t j, const arma::cx_vec& r, const arma::cx_vec* training);

  private:
    const CdmaNetwork& net_;
    std::vector<RlsInverse> rls_;
    std::vector<std::vector<arma::cx_vec>> w_;  // [relay][user]
    std::vector<AfGainTracker> af_gain_;
};

}  // namespace crn
