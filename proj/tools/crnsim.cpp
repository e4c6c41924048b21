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

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "crn/harness.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_path;
    std::vector<std::string> sets;
    std::uint64_t seed = 0;
    bool seed_given = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "key = value configuration file");
    cmd->add_option("--out", args.out_path, "output CSV path");
    cmd->add_option("--set", args.sets, "override a config key, e.g. --set runs=50")
        ->type_name("KEY=VALUE");
    cmd->add_option("--seed", args.seed, "master seed")->each([&](const std::string&) {
        args.seed_given = true;
    });
}

crn::SimConfig build_config(const CommonArgs& args) {
    crn::SimConfig cfg;
    if (!args.config_path.empty()) cfg = crn::load_config(args.config_path);
    for (const auto& kv : args.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw std::runtime_error("--set expects KEY=VALUE, got " + kv);
        crn::apply_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (args.seed_given) cfg.seed = args.seed;
    return cfg;
}

void emit(const crn::BerCurve& curve, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    crn::write_csv(curve, out);
    std::cout << "wrote " << path << " (" << curve.points.size() << " points, "
              << curve.schemes.size() << " schemes)\n";
}

void summarize(const crn::BerCurve& curve) {
    for (const auto& pt : curve.points) {
        std::cout << "  " << curve.sweep_name << " = " << pt.x << ":";
        for (const auto& s : curve.schemes) {
            const auto it = pt.stats.find(s);
            if (it != pt.stats.end()) std::cout << "  " << s << " " << it->second.ber();
        }
        std::cout << "\n";
    }
}

std::vector<std::size_t> parse_range(const std::string& spec) {
    const auto dots = spec.find("..");
    std::vector<std::size_t> out;
    if (dots == std::string::npos) {
        out.push_back(std::stoul(spec));
        return out;
    }
    const std::size_t lo = std::stoul(spec.substr(0, dots));
    const std::size_t hi = std::stoul(spec.substr(dots + 2));
    for (std::size_t v = lo; v <= hi; ++v) out.push_back(v);
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"link-level simulator for cooperative DS-CDMA and MIMO relay networks"};
    app.require_subcommand(1);

    CommonArgs ber_args, fading_args, feedback_args, mimo_args;
    CLI::App* ber = app.add_subcommand("ber", "BER experiment (single point or SNR sweep)");
    add_common(ber, ber_args);
    CLI::App* fading = app.add_subcommand("fading", "BER against the normalized fading rate");
    add_common(fading, fading_args);
    CLI::App* feedback = app.add_subcommand("feedback", "BER against the feedback error probability");
    add_common(feedback, feedback_args);
    CLI::App* mimo = app.add_subcommand("mimo-tds", "cooperative MIMO selection experiment");
    add_common(mimo, mimo_args);

    CLI::App* cmpx = app.add_subcommand("complexity", "per-symbol operation counts");
    std::string nr_spec = "1..10";
    std::size_t cK = 8, cN = 16, cL = 5;
    std::string cmpx_out = "complexity.csv";
    cmpx->add_option("--nr", nr_spec, "relay count or range, e.g. 2 or 1..10");
    cmpx->add_option("--K", cK, "users");
    cmpx->add_option("--N", cN, "chips per symbol");
    cmpx->add_option("--L", cL, "paths");
    cmpx->add_option("--out", cmpx_out, "output CSV path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*ber) {
            crn::SimConfig cfg = build_config(ber_args);
            crn::BerCurve curve = crn::run_ber_experiment(cfg);
            emit(curve, ber_args.out_path.empty() ? "ber.csv" : ber_args.out_path);
            summarize(curve);
        } else if (*fading) {
            crn::SimConfig cfg = build_config(fading_args);
            cfg.schemes = {"jpais_gk", "cis"};
            crn::BerCurve curve = crn::run_fading_sweep(cfg, cfg.fdt_sweep);
            emit(curve, fading_args.out_path.empty() ? "fading.csv" : fading_args.out_path);
            summarize(curve);
        } else if (*feedback) {
            crn::SimConfig cfg = build_config(feedback_args);
            cfg.schemes = {"jpais_gk", "cis"};
            crn::BerCurve curve = crn::run_feedback_error_sweep(cfg, cfg.pe_sweep);
            emit(curve, feedback_args.out_path.empty() ? "feedback.csv" : feedback_args.out_path);
            summarize(curve);
        } else if (*mimo) {
            crn::SimConfig cfg = build_config(mimo_args);
            crn::MimoExperimentResult res = crn::run_mimo_tds_experiment(cfg);
            emit(res.convergence, mimo_args.out_path.empty() ? "mimo_tds.csv" : mimo_args.out_path);
            for (const auto& [name, r] : res.schemes)
                std::cout << "  " << name << ": final BER " << r.final_ber << "\n";
        } else if (*cmpx) {
            std::ofstream out(cmpx_out);
            if (!out) throw std::runtime_error("cannot open output file: " + cmpx_out);
            const std::vector<std::string> schemes = {"jpais-gk", "jpais-g1", "cis", "ncis"};
            out << "nr";
            for (const auto& s : schemes) out << "," << s << "_adds," << s << "_mults";
            out << "\n";
            for (std::size_t nr : parse_range(nr_spec)) {
                out << nr;
                for (const auto& s : schemes) {
                    const crn::ComplexityReport rep = crn::complexity_count(s, cK, nr, cN, cL);
                    out << "," << rep.total.adds << "," << rep.total.mults;
                }
                out << "\n";
            }
            std::cout << "wrote " << cmpx_out << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
