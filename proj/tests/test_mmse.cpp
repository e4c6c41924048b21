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

#include "crn/mmse.hpp"

using namespace crn;

namespace {

BatchModel toy_model(std::size_t K, std::size_t n_r, double sigma2, std::uint64_t seed,
                     bool isi = false) {
    NetworkConfig cfg;
    cfg.K = K;
    cfg.n_r = n_r;
    cfg.N = 4;
    cfg.L = 2;
    cfg.sigma2 = sigma2;
    cfg.isi = isi;
    cfg.pa_spread_db = 0.0;
    CdmaNetwork net(cfg, 0.0, seed);
    return make_batch_model(net);
}

std::vector<arma::cx_vec> equal_amps(const BatchModel& m, double pa = 1.0) {
    std::vector<arma::cx_vec> a(m.K());
    const double v = std::sqrt(pa / static_cast<double>(m.links()));
    for (auto& ak : a)
        ak = arma::cx_vec(arma::vec(m.links(), arma::fill::value(v)), arma::vec(m.links(), arma::fill::zeros));
    return a;
}

}  // namespace

TEST_CASE("rake statistic") {
    std::mt19937_64 rng(2);
    arma::cx_vec p = randn_cvec(rng, 6);
    p /= arma::norm(p);
    REQUIRE(std::abs(rake_statistic(p, p) - cx(1.0, 0.0)) < 1e-12);

    arma::cx_vec q = randn_cvec(rng, 6);
    q -= arma::cdot(p, q) * p;  // orthogonalize
    REQUIRE(std::abs(rake_statistic(q, p)) < 1e-12);
}

TEST_CASE("rake separates orthogonal users") {
    const double s = 1.0 / std::sqrt(2.0);
    arma::cx_vec p0{cx(s, 0), cx(s, 0)}, p1{cx(s, 0), cx(-s, 0)};
    const cx b1 = qpsk_point(1, 0);
    const arma::cx_vec r = 2.0 * qpsk_point(0, 0) * p0 + 0.5 * b1 * p1;
    REQUIRE(std::abs(rake_statistic(r, p0)) > std::abs(rake_statistic(r, p1)));
}

TEST_CASE("group selection") {
    REQUIRE(select_group(arma::vec{3.0, 1.0, 2.0}, 2) == std::vector<std::size_t>{0, 2});
    REQUIRE(select_group(arma::vec{3.0, 1.0, 2.0}, 3) == std::vector<std::size_t>{0, 1, 2});
    REQUIRE(select_group(arma::vec{2.0, 2.0, 1.0}, 1) == std::vector<std::size_t>{0});
    REQUIRE_THROWS_AS(select_group(arma::vec{1.0}, 2), std::invalid_argument);
    REQUIRE_THROWS_AS(select_group(arma::vec{1.0}, 0), std::invalid_argument);
}

TEST_CASE("mmse filter basics") {
    SECTION("identity covariance") {
        arma::cx_mat R(3, 3, arma::fill::zeros);
        R.diag() += 1.0;
        arma::cx_vec p(3, arma::fill::zeros);
        p[0] = 1.0;
        const FilterResult f = mmse_filter(R, p);
        REQUIRE(arma::abs(f.w - p).max() < 1e-12);
        REQUIRE(f.residual < 1e-12);
    }

    SECTION("homogeneity") {
        std::mt19937_64 rng(7);
        arma::cx_mat A(arma::cx_mat(4, 4, arma::fill::zeros));
        for (auto& v : A) v = randn_c(rng);
        arma::cx_mat R = A * A.t();
        R.diag() += 0.5;
        const arma::cx_vec p = randn_cvec(rng, 4);
        const arma::cx_vec w1 = mmse_filter(R, p).w;
        const arma::cx_vec w2 = mmse_filter(arma::cx_mat(3.0 * R), p).w;
        REQUIRE(arma::abs(3.0 * w2 - w1).max() < 1e-9);
    }

    SECTION("residual bound holds on random systems") {
        std::mt19937_64 rng(8);
        for (int t = 0; t < 20; ++t) {
            arma::cx_mat A(6, 6);
            for (auto& v : A) v = randn_c(rng);
            arma::cx_mat R = A * A.t();
            R.diag() += 0.1;
            const arma::cx_vec p = randn_cvec(rng, 6);
            REQUIRE(mmse_filter(R, p).residual <= 1e-8);
        }
    }
}

TEST_CASE("filter matches a dense grid search on a two-user toy") {
    // K=2, n_r=0, J=2: the full filter space is 4 real dimensions.
    BatchModel m = toy_model(2, 0, 0.2, 5);
    // Shrink to a 2-chip code so J = 2.
    NetworkConfig cfg;
    cfg.K = 2;
    cfg.n_r = 0;
    cfg.N = 2;
    cfg.L = 1;
    cfg.sigma2 = 0.2;
    cfg.pa_spread_db = 0.0;
    CdmaNetwork net(cfg, 0.0, 5);
    m = make_batch_model(net);
    const auto a = equal_amps(m);

    const arma::cx_mat R = received_covariance(m, a);
    const arma::cx_vec q = composite_signature(m, 0, a[0]);
    const arma::cx_vec wopt = mmse_filter(R, q).w;
    const double mse_opt = user_mse(m, 0, wopt, a);

    // Coarse global grid to confirm the basin, then a fine local grid.
    double best = 1e9;
    for (double re0 = -2.0; re0 <= 2.0; re0 += 0.25)
        for (double im0 = -2.0; im0 <= 2.0; im0 += 0.25)
            for (double re1 = -2.0; re1 <= 2.0; re1 += 0.25)
                for (double im1 = -2.0; im1 <= 2.0; im1 += 0.25)
                    best = std::min(best,
                                    user_mse(m, 0, arma::cx_vec{cx(re0, im0), cx(re1, im1)}, a));
    REQUIRE(mse_opt <= best + 1e-9);

    best = 1e9;
    for (double re0 = -0.06; re0 <= 0.06; re0 += 0.01)
        for (double im0 = -0.06; im0 <= 0.06; im0 += 0.01)
            for (double re1 = -0.06; re1 <= 0.06; re1 += 0.01)
                for (double im1 = -0.06; im1 <= 0.06; im1 += 0.01) {
                    arma::cx_vec w = wopt + arma::cx_vec{cx(re0, im0), cx(re1, im1)};
                    best = std::min(best, user_mse(m, 0, w, a));
                }
    REQUIRE(std::abs(mse_opt - best) <= 1e-3);
}

TEST_CASE("filter local optimality under random perturbations") {
    BatchModel m = toy_model(3, 1, 0.1, 6);
    const auto a = equal_amps(m);
    const arma::cx_mat R = received_covariance(m, a);
    const arma::cx_vec q = composite_signature(m, 1, a[1]);
    const arma::cx_vec w = mmse_filter(R, q).w;
    const double mse_w = user_mse(m, 1, w, a);
    std::mt19937_64 rng(11);
    for (int t = 0; t < 1000; ++t) {
        const arma::cx_vec delta = randn_cvec(rng, w.n_elem, 1e-4);
        REQUIRE(user_mse(m, 1, w + delta, a) >= mse_w - 1e-15);
    }
}

TEST_CASE("power allocation") {
    SECTION("scalar case meets the constraint exactly") {
        arma::cx_mat R(1, 1, arma::fill::value(cx(2.0, 0.0)));
        arma::cx_vec p{cx(0.7, -0.2)};
        const PowerResult res = power_allocation(R, p, 0.025, 3.0);
        REQUIRE(std::abs(std::norm(res.a[0]) - 3.0) < 1e-10);
    }

    SECTION("large lambda turns the solution toward the cross-correlation") {
        std::mt19937_64 rng(3);
        arma::cx_mat A(4, 4);
        for (auto& v : A) v = randn_c(rng);
        arma::cx_mat R = A * A.t();
        const arma::cx_vec p = randn_cvec(rng, 4);
        const arma::cx_vec a = power_allocation(R, p, 1e9, 1.0).a;
        const double align = std::abs(arma::cdot(a / arma::norm(a), p / arma::norm(p)));
        REQUIRE(align > 1.0 - 1e-6);
    }

    SECTION("constraint invariant over random calls") {
        std::mt19937_64 rng(4);
        for (int t = 0; t < 50; ++t) {
            arma::cx_mat A(3, 3);
            for (auto& v : A) v = randn_c(rng);
            arma::cx_mat R = A * A.t();
            const PowerResult res = power_allocation(R, randn_cvec(rng, 3), 0.025, 2.5);
            REQUIRE(std::abs(std::real(arma::cdot(res.a, res.a)) - 2.5) < 1e-10);
        }
    }

    SECTION("invalid arguments") {
        arma::cx_mat R(1, 1, arma::fill::ones);
        arma::cx_vec p(1, arma::fill::ones);
        REQUIRE_THROWS_AS(power_allocation(R, p, -1.0, 1.0), std::invalid_argument);
        REQUIRE_THROWS_AS(power_allocation(R, p, 0.0, 0.0), std::invalid_argument);
    }
}

TEST_CASE("power allocation matches a sphere grid search on a one-user relay toy") {
    // One user, one relay: the group vector has two complex entries on the
    // constraint sphere.
    NetworkConfig cfg;
    cfg.K = 1;
    cfg.n_r = 1;
    cfg.N = 4;
    cfg.L = 2;
    cfg.sigma2 = 0.3;
    cfg.isi = false;
    cfg.pa_spread_db = 0.0;
    CdmaNetwork net(cfg, 0.0, 13);
    BatchModel m = make_batch_model(net);
    const double P_G = 1.0;
    auto a = equal_amps(m);

    const arma::cx_mat R = received_covariance(m, a);
    const arma::cx_vec w = mmse_filter(R, composite_signature(m, 0, a[0])).w;

    const GroupStats stats = group_allocation_stats(m, {w}, {0});
    const arma::cx_vec astar = power_allocation(stats.R, stats.p, 1e-6, P_G).a;

    auto mse_of = [&](const arma::cx_vec& cand) {
        auto amps = a;
        amps[0] = cand;
        return user_mse(m, 0, w, amps);
    };
    const double mse_star = mse_of(astar);

    double best = 1e9;
    const double pi = arma::datum::pi;
    for (double theta = 0.0; theta <= pi / 2 + 1e-9; theta += pi / 160)
        for (double psi = -pi; psi <= pi; psi += pi / 80)
            for (double phi = -pi; phi <= pi; phi += pi / 80) {
                arma::cx_vec cand{std::sqrt(P_G) * std::cos(theta) * std::exp(cx(0.0, psi)),
                                  std::sqrt(P_G) * std::sin(theta) * std::exp(cx(0.0, psi + phi))};
                best = std::min(best, mse_of(cand));
            }
    REQUIRE(mse_star <= best + 1e-3);
}

TEST_CASE("alternating optimization") {
    BatchModel m = toy_model(3, 1, 0.1, 17);
    std::vector<std::size_t> S{0, 1, 2};
    auto a0 = equal_amps(m);
    const double P_G = 3.0;

    SECTION("iterations=0 reproduces the fixed equal-power baseline") {
        AlternatingOptions opt;
        opt.iterations = 0;
        const AlternatingResult res = alternating_optimize(m, S, P_G, a0, opt);
        const arma::cx_mat R = received_covariance(m, a0);
        for (std::size_t k = 0; k < m.K(); ++k) {
            const arma::cx_vec w = mmse_filter(R, composite_signature(m, k, a0[k])).w;
            REQUIRE(arma::abs(res.w[k] - w).max() < 1e-10);
        }
        REQUIRE(arma::abs(arma::cx_vec(res.a_all[0] - a0[0])).max() < 1e-12);
    }

    SECTION("a converged point is a fixed point of one more pass") {
        AlternatingOptions opt;
        opt.iterations = 2000;
        opt.exact_multiplier = true;
        const AlternatingResult base = alternating_optimize(m, S, P_G, a0, opt);
        REQUIRE(base.converged);

        AlternatingOptions one;
        one.iterations = 1;
        one.exact_multiplier = true;
        const AlternatingResult next = alternating_optimize(m, S, P_G, base.a_all, one);
        REQUIRE(arma::norm(next.a_group - base.a_group) / arma::norm(base.a_group) < 1e-5);
        REQUIRE(arma::norm(next.w[0] - base.w[0]) / arma::norm(base.w[0]) < 1e-5);
    }

    SECTION("two iterations never do worse than one across seeds") {
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            BatchModel toy = toy_model(2, 1, 0.2, 1000 + seed);
            auto ainit = equal_amps(toy);
            AlternatingOptions o1, o2;
            o1.iterations = 1;
            o2.iterations = 2;
            const double m1 = alternating_optimize(toy, {0, 1}, 2.0, ainit, o1).group_mse;
            const double m2 = alternating_optimize(toy, {0, 1}, 2.0, ainit, o2).group_mse;
            REQUIRE(m2 <= m1 + 1e-12);
        }
    }
}

TEST_CASE("mmse channel estimator") {
    SECTION("zero prior gives a zero estimate") {
        std::mt19937_64 rng(3);
        ChannelEstimator est;
        est.Q.push_back(arma::cx_mat(6, 3, arma::fill::zeros));
        for (auto& v : est.Q[0]) v = randn_c(rng);
        est.P_h.push_back(arma::cx_mat(3, 3, arma::fill::zeros));
        est.sigma2 = 0.5;
        const arma::cx_vec h = mmse_channel_estimate(est, randn_cvec(rng, 6), 0);
        REQUIRE(arma::norm(h) == 0.0);
    }

    SECTION("small-noise limit recovers the channel") {
        std::mt19937_64 rng(5);
        arma::cx_mat A(8, 3);
        for (auto& v : A) v = randn_c(rng);
        arma::cx_mat Q, Rjunk;
        arma::qr_econ(Q, Rjunk, A);  // orthonormal columns
        ChannelEstimator est;
        est.Q.push_back(Q);
        est.P_h.push_back(arma::cx_mat(arma::eye(3, 3), arma::zeros(3, 3)));
        est.sigma2 = 1e-8;
        const arma::cx_vec h = randn_cvec(rng, 3);
        const arma::cx_vec hhat = mmse_channel_estimate(est, Q * h, 0);
        REQUIRE(arma::norm(hhat - h) / arma::norm(h) < 1e-4);
    }

    SECTION("matches the generic Wiener solution on a toy model") {
        std::mt19937_64 rng(6);
        ChannelEstimator est;
        for (int k = 0; k < 2; ++k) {
            arma::cx_mat Q(4, 2);
            for (auto& v : Q) v = randn_c(rng);
            est.Q.push_back(Q);
            arma::cx_mat B(2, 2);
            for (auto& v : B) v = randn_c(rng);
            est.P_h.push_back(arma::cx_mat(B * B.t()));
        }
        arma::cx_mat E(4, 2);
        for (auto& v : E) v = randn_c(rng);
        est.P_eta = E * E.t();
        est.sigma2 = 0.3;

        const arma::cx_vec r = randn_cvec(rng, 4);
        // First-principles Wiener estimator: E[h r^H] E[r r^H]^{-1} r.
        const arma::cx_mat Rrr = est.covariance();
        const arma::cx_mat Rhr = est.P_h[1] * est.Q[1].t();  // E[h_1 r^H]
        const arma::cx_vec direct = Rhr * arma::solve(Rrr, r);
        const arma::cx_vec viaest = mmse_channel_estimate(est, r, 1);
        REQUIRE(arma::abs(direct - viaest).max() < 1e-10);
    }

    SECTION("one factorization serves filters and estimator") {
        std::mt19937_64 rng(7);
        ChannelEstimator est;
        arma::cx_mat Q(5, 2);
        for (auto& v : Q) v = randn_c(rng);
        est.Q.push_back(Q);
        est.P_h.push_back(arma::cx_mat(arma::eye(2, 2), arma::zeros(2, 2)));
        est.sigma2 = 0.2;

        const arma::cx_mat R = est.covariance();
        HermitianSolver shared(R);
        const arma::cx_vec p = randn_cvec(rng, 5);
        const arma::cx_vec r = randn_cvec(rng, 5);

        const FilterResult f = mmse_filter(shared, R, p);
        REQUIRE(f.residual <= 1e-8);
        REQUIRE(arma::abs(est.estimate(shared, r, 0) - mmse_channel_estimate(est, r, 0)).max() <
                1e-12);
    }
}
