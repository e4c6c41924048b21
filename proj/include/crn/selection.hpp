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
#include <functional>
#include <vector>

#include "crn/common.hpp"
#include "crn/coopnet.hpp"

namespace crn {

// Relay-antenna activation pattern: bit j*K + k activates transmit antenna k
// of relay j.
using Pattern = std::uint32_t;

// All patterns with exactly K_sub of the n_r*K relay antennas active, in
// lexicographic order of the active-antenna index sets.
std::vector<Pattern> enumerate_tds(std::size_t n_r, std::size_t K, std::size_t K_sub);

// Remove every pattern that transmits from `relay`.
std::vector<Pattern> set_reduction(const std::vector<Pattern>& omega, std::size_t relay,
                                   std::size_t K);

// One feedback bit per relay antenna, canonical antenna order.
std::vector<int> feedback_bits(Pattern pattern, std::size_t n_r, std::size_t K);
Pattern pattern_from_bits(const std::vector<int>& bits);

// MSE cost model of the two-phase MIMO link built from known channels or from
// channel estimates. All expectations assume unit-energy independent symbols
// and correct relay decisions.
class MimoCostModel {
  public:
    MimoCostModel(arma::cx_mat H_sd, std::vector<arma::cx_mat> H_sr, std::vector<arma::cx_mat> H_rd,
                  double source_amp, double sigma2);
    static MimoCostModel from_network(const MimoNetwork& net);

    std::size_t streams() const { return K_; }
    std::size_t relays() const { return H_sr_.size(); }
    std::size_t J() const { return 2 * M_; }

    arma::cx_vec signature(std::size_t k, Pattern pattern) const;
    arma::cx_mat covariance(Pattern pattern) const;
    std::vector<arma::cx_vec> filters(Pattern pattern) const;

    // Summed destination MSE under the activation pattern.
    double tds_cost(Pattern pattern) const;
    // Summed first-phase MSE of relay j's own MMSE filters.
    double relay_mse(std::size_t j) const;

  private:
    arma::cx_mat H_sd_;
    std::vector<arma::cx_mat> H_sr_, H_rd_;
    double a_s_, sigma2_;
    std::size_t K_, M_;
};

// Global minimizer over the pattern set; ties resolve to the earliest pattern
// in canonical order.
Pattern exhaustive_tds(const std::vector<Pattern>& omega,
                       const std::function<double(Pattern)>& cost);

// Worst relay (largest summed MSE); ties resolve to the lowest index.
std::size_t exhaustive_rs(const std::vector<std::size_t>& omega_r,
                          const std::function<double(std::size_t)>& mse);

// Discrete stochastic selector: per step it draws a uniform candidate,
// re-evaluates candidate and tracker costs, keeps the better (or worse, for
// relay removal) as tracker, moves the state-occupation-probability vector
// toward the tracker with step 1/(i+1), and promotes the tracker to incumbent
// only when its SOP entry passes the incumbent's (sticky ties).
class DsaSelector {
  public:
    DsaSelector(std::size_t set_size, bool maximize, std::uint64_t seed, std::size_t init = 0);

    void step(const std::function<double(std::size_t)>& cost);

    std::size_t incumbent() const { return incumbent_; }
    std::size_t tracker() const { return tracker_; }
    const arma::vec& sop() const { return pi_; }
    std::size_t iterations() const { return iter_; }

    // Drop members with valid[m] == false: their SOP mass is removed and the
    // rest renormalized; incumbent and tracker move onto the valid set.
    void restrict_to(const std::vector<bool>& valid);

  private:
    arma::vec pi_;
    std::vector<bool> valid_;
    std::vector<std::size_t> valid_idx_;
    std::size_t incumbent_, tracker_;
    std::size_t iter_ = 0;
    bool maximize_;
    std::mt19937_64 rng_;
};

// Exponential smoothing of per-member instantaneous cost samples.
class SmoothedCost {
  public:
    explicit SmoothedCost(std::size_t members, double retain = 0.9);
    double update(std::size_t key, double sample);

  private:
    std::vector<double> value_;
    std::vector<bool> seen_;
    double retain_;
};

}  // namespace crn
