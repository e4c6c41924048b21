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

#include <fstream>
#include <sstream>

#include "crn/harness.hpp"

using namespace crn;

TEST_CASE("power vector quantizer") {
    SECTION("reconstruction levels round trip exactly") {
        const std::size_t nb = 4;
        const double a_max = 2.0;
        const double step = 2.0 * a_max / 16.0;
        arma::vec levels(16);
        for (int m = 0; m < 16; ++m) levels[m] = -a_max + (m + 0.5) * step;
        const FeedbackPacket pkt = quantize_power_vector(levels, nb, a_max);
        REQUIRE_FALSE(pkt.saturated);
        const arma::vec back = dequantize_power_vector(pkt.bits, nb, a_max);
        REQUIRE(arma::abs(back - levels).max() < 1e-12);
    }

    SECTION("round-trip error is bounded by half a step") {
        std::mt19937_64 rng(3);
        const double a_max = 1.5;
        const double half_step = a_max / 16.0;  // (2 a_max / 2^4) / 2
        std::uniform_real_distribution<double> u(-a_max, a_max);
        for (int t = 0; t < 500; ++t) {
            arma::vec x(6);
            for (auto& v : x) v = u(rng);
            const FeedbackPacket pkt = quantize_power_vector(x, 4, a_max);
            const arma::vec back = dequantize_power_vector(pkt.bits, 4, a_max);
            REQUIRE(arma::abs(back - x).max() <= half_step + 1e-12);
        }
    }

    SECTION("saturation is flagged and clamped") {
        const FeedbackPacket pkt = quantize_power_vector(arma::vec{3.0}, 4, 1.0);
        REQUIRE(pkt.saturated);
        const arma::vec back = dequantize_power_vector(pkt.bits, 4, 1.0);
        REQUIRE(back[0] < 1.0);
        REQUIRE(back[0] > 0.8);
    }

    SECTION("packet budgets match the closed forms") {
        REQUIRE(feedback_bits_group(8, 2, 4) == 96);  // G = K form
        REQUIRE(feedback_bits_group(1, 2, 4) == 12);  // per-user form
        REQUIRE(feedback_bits_tds(10, 2) == 20);
        const arma::vec a(24, arma::fill::value(0.3));
        REQUIRE(quantize_power_vector(a, 4, 1.0).bits.size() == 96);
    }
}

TEST_CASE("binary symmetric channel") {
    std::vector<int> bits(64);
    for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = (i * 7) % 2;

    REQUIRE(bsc_transmit(bits, 0.0, 5) == bits);

    std::vector<int> flipped = bsc_transmit(bits, 1.0, 5);
    for (std::size_t i = 0; i < bits.size(); ++i) REQUIRE(flipped[i] == 1 - bits[i]);

    REQUIRE(bsc_transmit(bits, 0.3, 9) == bsc_transmit(bits, 0.3, 9));
    REQUIRE_THROWS_AS(bsc_transmit(bits, 1.5, 1), std::invalid_argument);

    SECTION("empirical flip rate") {
        const std::vector<int> zeros(1000000, 0);
        const std::vector<int> out = bsc_transmit(zeros, 0.01, 77);
        std::size_t flips = 0;
        for (int b : out) flips += b;
        REQUIRE(std::abs(flips / 1e6 - 0.01) < 0.001);
    }
}

TEST_CASE("complexity closed forms") {
    SECTION("global filter entry at the experiment dimensions") {
        // J = 60 for N=16, L=5, n_r=2.
        const ComplexityReport rep = complexity_count("jpais-g1", 8, 2, 16, 5);
        REQUIRE(rep.J == 60);
        REQUIRE(rep.filter.adds == 2 * 60 * 60 + 60 + 1);  // 7261
        REQUIRE(rep.filter.adds == 7261);
        REQUIRE(rep.filter.mults == 3 * 60 * 60 + 5 * 60 + 1);
    }

    SECTION("baselines reuse the filter recursion only") {
        const ComplexityReport cis = complexity_count("cis", 8, 2, 16, 5);
        REQUIRE(cis.power.mults == 0);
        REQUIRE(cis.channel.mults == 0);
        REQUIRE(cis.total.mults == cis.filter.mults);

        const ComplexityReport ncis = complexity_count("ncis", 8, 2, 16, 5);
        REQUIRE(ncis.n_r == 0);
        REQUIRE(ncis.J == 20);
        REQUIRE(ncis.total.mults == global_filter_ops(20, 8).mults);
    }

    SECTION("scheme ordering in multiplications for every relay count") {
        for (std::size_t nr = 1; nr <= 10; ++nr) {
            const auto jp = complexity_count("jpais-gk", 8, nr, 16, 5);
            const auto cis = complexity_count("cis", 8, nr, 16, 5);
            const auto ncis = complexity_count("ncis", 8, nr, 16, 5);
            REQUIRE(jp.total.mults > cis.total.mults);
            REQUIRE(cis.total.mults > ncis.total.mults);
        }
    }

    SECTION("selection strategy ordering") {
        const SelectionComplexity sc = selection_complexity(10, 2, 2, 4, 100);
        REQUIRE(sc.exhaustive_tds > sc.exhaustive_tds_rs);
        REQUIRE(sc.exhaustive_tds_rs > sc.iterative_tds);
        REQUIRE(sc.iterative_tds > sc.iterative_tds_rs);
    }

    REQUIRE_THROWS_AS(complexity_count("bogus", 8, 2, 16, 5), std::invalid_argument);
}

TEST_CASE("config parsing") {
    SECTION("round trip through a file") {
        const std::string path = "test_cfg.tmp";
        {
            std::ofstream out(path);
            out << "# comment line\n";
            out << "K = 4\n";
            out << "snr_db = 9.5   # trailing comment\n";
            out << "schemes = jpais_g2, cis\n";
            out << "snr_sweep = 0, 4, 8\n";
        }
        const SimConfig cfg = load_config(path);
        REQUIRE(cfg.K == 4);
        REQUIRE(cfg.snr_db == 9.5);
        REQUIRE(cfg.schemes == std::vector<std::string>{"jpais_g2", "cis"});
        REQUIRE(cfg.snr_sweep == std::vector<double>{0.0, 4.0, 8.0});
        std::remove(path.c_str());
    }

    SECTION("unknown keys are rejected") {
        SimConfig cfg;
        REQUIRE_THROWS(apply_config_value(cfg, "not_a_key", "1"));
    }

    SECTION("missing file") { REQUIRE_THROWS(load_config("/nonexistent/cfg")); }
}

TEST_CASE("csv output format") {
    BerCurve curve;
    curve.sweep_name = "snr_db";
    curve.schemes = {"cis", "ncis"};
    BerPoint pt;
    pt.x = 12.0;
    pt.stats["cis"].bit_errors = 5;
    pt.stats["cis"].bits = 1000;
    pt.stats["ncis"].bit_errors = 10;
    pt.stats["ncis"].bits = 1000;
    curve.points.push_back(pt);

    std::ostringstream os;
    write_csv(curve, os);
    REQUIRE(os.str() == "snr_db,cis_ber,ncis_ber\n12,0.005,0.01\n");
}

TEST_CASE("noise-free single user is error-free") {
    SimConfig cfg;
    cfg.K = 1;
    cfg.n_r = 1;
    cfg.N = 8;
    cfg.L = 2;
    cfg.snr_db = 60.0;
    cfg.isi = false;
    cfg.pa_spread_db = 0.0;
    cfg.packet = 300;
    cfg.ntr = 100;
    cfg.runs = 2;
    cfg.schemes = {"jpais_gk"};
    const BerCurve curve = run_ber_experiment(cfg);
    REQUIRE(curve.points[0].stats.at("jpais_gk").ber() == 0.0);
}

TEST_CASE("experiments are reproducible from the master seed") {
    SimConfig cfg;
    cfg.K = 2;
    cfg.n_r = 1;
    cfg.N = 8;
    cfg.L = 2;
    cfg.packet = 150;
    cfg.ntr = 50;
    cfg.runs = 3;
    cfg.seed = 123;
    cfg.schemes = {"jpais_gk", "cis"};

    auto render = [&] {
        std::ostringstream os;
        write_csv(run_ber_experiment(cfg), os);
        return os.str();
    };
    const std::string a = render();
    const std::string b = render();
    REQUIRE(a == b);
    REQUIRE_FALSE(a.empty());
}

TEST_CASE("constraint watermark is tracked through a run") {
    SimConfig cfg;
    cfg.K = 3;
    cfg.n_r = 1;
    cfg.N = 8;
    cfg.L = 2;
    cfg.packet = 200;
    cfg.ntr = 80;
    cfg.runs = 1;
    cfg.schemes = {"jpais_gk"};
    const BerCurve curve = run_ber_experiment(cfg);
    const SchemeStat& st = curve.points[0].stats.at("jpais_gk");
    REQUIRE(st.max_constraint_error < 1e-10);
    REQUIRE(st.bits > 0);
}
