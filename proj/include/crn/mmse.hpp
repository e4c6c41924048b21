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

#include <cstddef>
#include <vector>

#include "crn/common.hpp"
#include "crn/coopnet.hpp"

namespace crn {

// Hermitian positive-definite solver with one factorization reused across all
// right-hand sides. Near-singular systems fall back to diagonal loading of
// 1e-8 * trace(R)/dim (escalated tenfold until the factorization succeeds);
// `loaded()` reports whether that happened.
class HermitianSolver {
  public:
    explicit HermitianSolver(const arma::cx_mat& R);
    arma::cx_vec solve(const arma::cx_vec& b) const;
    arma::cx_mat solve(const arma::cx_mat& B) const;
    bool loaded() const { return loaded_; }

  private:
    arma::cx_mat chol_;  // upper triangular factor
    bool loaded_ = false;
};

// RAKE statistic z = p^H r for the (estimated) effective signature p.
cx rake_statistic(const arma::cx_vec& r, const arma::cx_vec& p_hat);

// Indices of the G largest magnitudes, ties broken toward the lower index,
// returned in ascending index order.
std::vector<std::size_t> select_group(const arma::vec& magnitudes, std::size_t G);

struct FilterResult {
    arma::cx_vec w;
    double residual = 0.0;  // ||R w - p|| / ||p||
    bool loaded = false;
};

// Linear MMSE receive filter w = R^{-1} p.
FilterResult mmse_filter(const arma::cx_mat& R, const arma::cx_vec& p);
FilterResult mmse_filter(const HermitianSolver& solver, const arma::cx_mat& R, const arma::cx_vec& p);

struct PowerResult {
    arma::cx_vec a;            // scaled so a^H a = P_G
    bool regularized = false;  // lambda had to be raised to make the system solvable
    bool degenerate = false;   // zero response, fell back to a uniform direction
};

// Group power allocation a = (R_S + lambda I)^{-1} p_S, rescaled to the power
// constraint a^H a = P_G.
PowerResult power_allocation(const arma::cx_mat& R_S, const arma::cx_vec& p_S, double lambda,
                             double P_G);

// Same solution with the multiplier determined numerically so the constraint
// binds exactly, which makes the allocation pass an exact minimization over
// the power sphere. Falls back to the rescaled fixed-lambda solution when no
// multiplier above the floor can bind.
PowerResult power_allocation_constrained(const arma::cx_mat& R_S, const arma::cx_vec& p_S,
                                         double P_G, double lambda_floor = 1e-9);

// --- Expectation-known model of the cooperative DS-CDMA link ----------------
//
// Second-order statistics for one symbol period assuming unit-energy
// independent user symbols and correct relay decisions. P[k] maps the per-link
// amplitudes of user k to its received composite signature; P_tail/P_head are
// the matching inter-symbol spill-over maps (zero matrices when ISI is
// disabled in the network).
struct BatchModel {
    std::vector<arma::cx_mat> P, P_tail, P_head;
    double sigma2 = 0.0;

    std::size_t K() const { return P.size(); }
    std::size_t links() const { return P.empty() ? 0 : P[0].n_cols; }
    std::size_t J() const { return P.empty() ? 0 : P[0].n_rows; }
};

BatchModel make_batch_model(const CdmaNetwork& net);

// Composite receive signature q_k = P_k a_k.
arma::cx_vec composite_signature(const BatchModel& model, std::size_t k, const arma::cx_vec& a_k);

// R = sum_k (q_k q_k^H + u_k u_k^H + v_k v_k^H) + sigma2 I for the given
// per-user amplitudes.
arma::cx_mat received_covariance(const BatchModel& model, const std::vector<arma::cx_vec>& a);

// E|b_k - w^H r|^2 under the model.
double user_mse(const BatchModel& model, std::size_t k, const arma::cx_vec& w,
                const std::vector<arma::cx_vec>& a);

// Second-order statistics of the group allocation problem for the current
// receive filters: R_S = sum_{k in S} E[B_S^H P_S^H w_k w_k^H P_S B_S] and the
// stacked cross-correlation p_S.
struct GroupStats {
    arma::cx_mat R;
    arma::cx_vec p;
};

GroupStats group_allocation_stats(const BatchModel& model, const std::vector<arma::cx_vec>& w,
                                  const std::vector<std::size_t>& S);

struct AlternatingOptions {
    double lambda = 0.025;
    std::size_t iterations = 2;
    bool real_amplitudes = false;  // project group amplitudes onto magnitudes
    // Solve the multiplier numerically so the constraint binds exactly; the
    // default keeps the fixed-lambda-then-rescale convention of the adaptive
    // algorithms.
    bool exact_multiplier = false;
};

struct AlternatingResult {
    std::vector<arma::cx_vec> w;      // one filter per user
    arma::cx_vec a_group;             // a^H a = P_G
    std::vector<arma::cx_vec> a_all;  // applied per-user link amplitudes
    double group_mse = 0.0;           // summed over the group at the returned iterate
    std::size_t best_iteration = 0;
    double filter_residual = 0.0;
    double power_residual = 0.0;
    bool converged = false;
};

// Alternate the power allocation and filter solutions, rebuilding the
// covariance from the current amplitudes each pass. Filters for the initial
// amplitudes are computed first, so iterations = 0 reproduces the fixed
// equal-power baseline. Returns the best iterate seen (by group MSE) with
// stationarity residuals as diagnostics.
AlternatingResult alternating_optimize(const BatchModel& model, const std::vector<std::size_t>& S,
                                       double P_G, const std::vector<arma::cx_vec>& a_init,
                                       const AlternatingOptions& opts = {});

// --- MMSE channel estimation -------------------------------------------------
//
// hhat_k = P_h_k^H Q_k^H R^{-1} r with R = sum_k Q_k P_h_k Q_k^H + P_eta +
// sigma2 I. The factorization of R is shared with the receive-filter design
// through HermitianSolver.
struct ChannelEstimator {
    std::vector<arma::cx_mat> Q;    // per user, J x Q_k
    std::vector<arma::cx_mat> P_h;  // per user channel priors
    arma::cx_mat P_eta;             // ISI covariance, empty for none
    double sigma2 = 0.0;

    arma::cx_mat covariance() const;
    arma::cx_vec estimate(const HermitianSolver& solver, const arma::cx_vec& r, std::size_t k) const;
};

arma::cx_vec mmse_channel_estimate(const ChannelEstimator& est, const arma::cx_vec& r, std::size_t k);

}  // namespace crn
