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

#include "crn/mmse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace crn {

HermitianSolver::HermitianSolver(const arma::cx_mat& R) {
    if (R.n_rows != R.n_cols) throw std::invalid_argument("HermitianSolver: matrix not square");
    arma::cx_mat sym = 0.5 * (R + R.t());
    double loading = 1e-8 * std::abs(arma::trace(sym)) / static_cast<double>(R.n_rows);
    if (loading <= 0.0) loading = 1e-12;
    if (arma::chol(chol_, sym)) return;
    loaded_ = true;
    for (int attempt = 0; attempt < 12; ++attempt, loading *= 10.0) {
        if (arma::chol(chol_, sym + loading * arma::cx_mat(arma::eye(R.n_rows, R.n_rows),
                                                           arma::zeros(R.n_rows, R.n_rows))))
            return;
    }
    throw std::runtime_error("HermitianSolver: factorization failed after diagonal loading");
}

arma::cx_vec HermitianSolver::solve(const arma::cx_vec& b) const {
    arma::cx_vec y = arma::solve(arma::trimatl(chol_.t()), b);
    return arma::solve(arma::trimatu(chol_), y);
}

arma::cx_mat HermitianSolver::solve(const arma::cx_mat& B) const {
    arma::cx_mat y = arma::solve(arma::trimatl(chol_.t()), B);
    return arma::solve(arma::trimatu(chol_), y);
}

cx rake_statistic(const arma::cx_vec& r, const arma::cx_vec& p_hat) {
    if (r.n_elem != p_hat.n_elem) throw std::invalid_argument("rake_statistic: size mismatch");
    return arma::cdot(p_hat, r);
}

std::vector<std::size_t> select_group(const arma::vec& magnitudes, std::size_t G) {
    const std::size_t K = magnitudes.n_elem;
    if (G == 0 || G > K) throw std::invalid_argument("select_group: need 1 <= G <= K");
    std::vector<std::size_t> idx(K);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return magnitudes[a] > magnitudes[b]; });
    idx.resize(G);
    std::sort(idx.begin(), idx.end());
    return idx;
}

FilterResult mmse_filter(const HermitianSolver& solver, const arma::cx_mat& R, const arma::cx_vec& p) {
    FilterResult out;
    out.w = solver.solve(p);
    out.loaded = solver.loaded();
    const double pn = arma::norm(p);
    out.residual = pn > 0.0 ? arma::norm(R * out.w - p) / pn : 0.0;
    return out;
}

FilterResult mmse_filter(const arma::cx_mat& R, const arma::cx_vec& p) {
    return mmse_filter(HermitianSolver(R), R, p);
}

PowerResult power_allocation(const arma::cx_mat& R_S, const arma::cx_vec& p_S, double lambda,
                             double P_G) {
    if (lambda < 0.0) throw std::invalid_argument("power_allocation: lambda must be nonnegative");
    if (P_G <= 0.0) throw std::invalid_argument("power_allocation: P_G must be positive");
    const std::size_t n = p_S.n_elem;
    PowerResult out;
    const arma::cx_mat eye(arma::eye(n, n), arma::zeros(n, n));
    double lam = lambda;
    arma::cx_mat A = R_S + lam * eye;
    while (!arma::solve(out.a, A, p_S, arma::solve_opts::no_approx)) {
        out.regularized = true;
        lam = lam > 0.0 ? lam * 10.0 : 1e-10 * (1.0 + std::abs(arma::trace(R_S)));
        A = R_S + lam * eye;
    }
    double nrm = arma::norm(out.a);
    if (nrm < 1e-300) {
        out.degenerate = true;
        out.a = arma::cx_vec(arma::vec(n, arma::fill::ones), arma::vec(n, arma::fill::zeros));
        nrm = arma::norm(out.a);
    }
    out.a *= std::sqrt(P_G) / nrm;
    return out;
}

PowerResult power_allocation_constrained(const arma::cx_mat& R_S, const arma::cx_vec& p_S,
                                         double P_G, double lambda_floor) {
    const std::size_t n = p_S.n_elem;
    const arma::cx_mat eye(arma::eye(n, n), arma::zeros(n, n));
    auto norm_at = [&](double lam) {
        arma::cx_vec a;
        if (!arma::solve(a, R_S + lam * eye, p_S, arma::solve_opts::no_approx))
            return std::numeric_limits<double>::infinity();
        return arma::norm(a);
    };
    const double target = std::sqrt(P_G);
    double lo = lambda_floor;
    if (norm_at(lo) < target) return power_allocation(R_S, p_S, lambda_floor, P_G);

    double hi = std::max(1.0, std::abs(arma::trace(R_S)));
    while (norm_at(hi) > target) hi *= 4.0;
    for (int it = 0; it < 200 && (hi - lo) > 1e-14 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (norm_at(mid) > target ? lo : hi) = mid;
    }
    PowerResult out = power_allocation(R_S, p_S, 0.5 * (lo + hi), P_G);
    return out;
}

BatchModel make_batch_model(const CdmaNetwork& net) {
    const NetworkConfig& cfg = net.config();
    BatchModel m;
    m.sigma2 = cfg.sigma2;
    const std::size_t links = cfg.n_r + 1;
    const std::size_t M = cfg.M(), J = cfg.J();
    for (std::size_t k = 0; k < cfg.K; ++k) {
        const UserFront& f = net.front(k);
        arma::cx_mat P(J, links, arma::fill::zeros), Pt(J, links, arma::fill::zeros),
            Ph(J, links, arma::fill::zeros);
        for (std::size_t l = 0; l < links; ++l) {
            P.submat(l * M, l, (l + 1) * M - 1, l) = f.sig[l];
            if (cfg.isi) {
                Pt.submat(l * M, l, (l + 1) * M - 1, l) = f.tail[l];
                Ph.submat(l * M, l, (l + 1) * M - 1, l) = f.head[l];
            }
        }
        m.P.push_back(std::move(P));
        m.P_tail.push_back(std::move(Pt));
        m.P_head.push_back(std::move(Ph));
    }
    return m;
}

arma::cx_vec composite_signature(const BatchModel& model, std::size_t k, const arma::cx_vec& a_k) {
    return model.P[k] * a_k;
}

arma::cx_mat received_covariance(const BatchModel& model, const std::vector<arma::cx_vec>& a) {
    const std::size_t J = model.J();
    arma::cx_mat R(J, J, arma::fill::zeros);
    for (std::size_t k = 0; k < model.K(); ++k) {
        const arma::cx_vec q = model.P[k] * a[k];
        R += q * q.t();
        const arma::cx_vec u = model.P_tail[k] * a[k];
        const arma::cx_vec v = model.P_head[k] * a[k];
        R += u * u.t() + v * v.t();
    }
    R.diag() += model.sigma2;
    return R;
}

double user_mse(const BatchModel& model, std::size_t k, const arma::cx_vec& w,
                const std::vector<arma::cx_vec>& a) {
    const arma::cx_mat R = received_covariance(model, a);
    const arma::cx_vec q = composite_signature(model, k, a[k]);
    return 1.0 - 2.0 * std::real(arma::cdot(w, q)) + std::real(arma::cdot(w, R * w));
}

GroupStats group_allocation_stats(const BatchModel& model, const std::vector<arma::cx_vec>& w,
                                  const std::vector<std::size_t>& S) {
    const std::size_t links = model.links();
    const std::size_t G = S.size();
    GroupStats out;
    out.R.zeros(G * links, G * links);
    out.p.zeros(G * links);
    for (std::size_t ks = 0; ks < G; ++ks) {
        const arma::cx_vec& wk = w[S[ks]];
        for (std::size_t g = 0; g < G; ++g) {
            const arma::cx_vec m = model.P[S[g]].t() * wk;
            out.R.submat(g * links, g * links, (g + 1) * links - 1, (g + 1) * links - 1) += m * m.t();
            if (g == ks) out.p.subvec(g * links, (g + 1) * links - 1) += m;
        }
    }
    return out;
}

namespace {

arma::cx_vec project_real(const arma::cx_vec& a) {
    return arma::cx_vec(arma::abs(a), arma::zeros(a.n_elem));
}

}  // namespace

AlternatingResult alternating_optimize(const BatchModel& model, const std::vector<std::size_t>& S,
                                       double P_G, const std::vector<arma::cx_vec>& a_init,
                                       const AlternatingOptions& opts) {
    const std::size_t K = model.K();
    const std::size_t links = model.links();
    AlternatingResult res;
    res.a_all = a_init;

    // Group vector from the initial per-user amplitudes, rescaled onto the
    // constraint sphere.
    res.a_group.set_size(S.size() * links);
    for (std::size_t g = 0; g < S.size(); ++g)
        res.a_group.subvec(g * links, (g + 1) * links - 1) = a_init[S[g]];
    res.a_group *= std::sqrt(P_G) / arma::norm(res.a_group);
    for (std::size_t g = 0; g < S.size(); ++g)
        res.a_all[S[g]] = res.a_group.subvec(g * links, (g + 1) * links - 1);

    auto solve_filters = [&](const std::vector<arma::cx_vec>& a, std::vector<arma::cx_vec>& w,
                             double& residual) {
        const arma::cx_mat R = received_covariance(model, a);
        HermitianSolver solver(R);
        w.resize(K);
        residual = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            FilterResult f = mmse_filter(solver, R, composite_signature(model, k, a[k]));
            w[k] = std::move(f.w);
            residual = std::max(residual, f.residual);
        }
    };

    auto group_mse = [&](const std::vector<arma::cx_vec>& w, const std::vector<arma::cx_vec>& a) {
        double s = 0.0;
        for (std::size_t k : S) s += user_mse(model, k, w[k], a);
        return s;
    };

    solve_filters(res.a_all, res.w, res.filter_residual);
    res.group_mse = group_mse(res.w, res.a_all);
    res.best_iteration = 0;

    AlternatingResult best = res;
    for (std::size_t it = 1; it <= opts.iterations; ++it) {
        GroupStats stats = group_allocation_stats(model, res.w, S);
        PowerResult pr = opts.exact_multiplier
                             ? power_allocation_constrained(stats.R, stats.p, P_G)
                             : power_allocation(stats.R, stats.p, opts.lambda, P_G);
        res.a_group = opts.real_amplitudes ? project_real(pr.a) : pr.a;
        for (std::size_t g = 0; g < S.size(); ++g)
            res.a_all[S[g]] = res.a_group.subvec(g * links, (g + 1) * links - 1);

        solve_filters(res.a_all, res.w, res.filter_residual);
        res.group_mse = group_mse(res.w, res.a_all);
        res.best_iteration = it;
        if (res.group_mse <= best.group_mse) best = res;
    }
    res = best;

    // Stationarity diagnostics at the returned iterate: direction match of the
    // power solution and the filter normal equations.
    if (opts.iterations > 0) {
        GroupStats stats = group_allocation_stats(model, res.w, S);
        PowerResult pr = opts.exact_multiplier
                             ? power_allocation_constrained(stats.R, stats.p, P_G)
                             : power_allocation(stats.R, stats.p, opts.lambda, P_G);
        const arma::cx_vec fresh = opts.real_amplitudes ? project_real(pr.a) : pr.a;
        res.power_residual = arma::norm(fresh / arma::norm(fresh) - res.a_group / arma::norm(res.a_group));
    }
    res.converged = res.power_residual < 1e-6 && res.filter_residual < 1e-6;
    return res;
}

arma::cx_mat ChannelEstimator::covariance() const {
    const std::size_t J = Q.empty() ? P_eta.n_rows : Q[0].n_rows;
    arma::cx_mat R(J, J, arma::fill::zeros);
    for (std::size_t k = 0; k < Q.size(); ++k) R += Q[k] * P_h[k] * Q[k].t();
    if (!P_eta.is_empty()) R += P_eta;
    R.diag() += sigma2;
    return R;
}

arma::cx_vec ChannelEstimator::estimate(const HermitianSolver& solver, const arma::cx_vec& r,
                                        std::size_t k) const {
    return P_h[k].t() * (Q[k].t() * solver.solve(r));
}

arma::cx_vec mmse_channel_estimate(const ChannelEstimator& est, const arma::cx_vec& r, std::size_t k) {
    HermitianSolver solver(est.covariance());
    return est.estimate(solver, r, k);
}

}  // namespace crn
