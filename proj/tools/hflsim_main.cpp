/*
 * Copyright 2026 hflsim contributors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "hflsim/experiment.hpp"

namespace {

int cmd_run(const std::string& config_path, const std::string& outdir,
            std::uint64_t seed, bool seed_set, const std::string& algorithm,
            int prbs) {
    hflsim::ExperimentConfig cfg = hflsim::load_config(config_path);
    if (seed_set) cfg.seed = seed;
    if (!algorithm.empty()) cfg.algorithm = hflsim::algorithm_from_string(algorithm);
    if (prbs > 0) cfg.prbs = prbs;
    cfg.validate();

    const hflsim::RunResult res = hflsim::run_and_write(cfg, outdir);
    const auto& last = res.rounds.back();
    std::printf("algorithm=%s seed=%llu rounds=%zu top1=%.4f loss=%.4f energy=%.2f J\n",
                hflsim::to_string(cfg.algorithm).c_str(),
                static_cast<unsigned long long>(cfg.seed), res.rounds.size(),
                last.acc_mean[0], last.test_loss, last.cum_energy);
    std::printf("outputs written to %s\n", outdir.c_str());
    return 0;
}

nlohmann::json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in.good()) throw hflsim::invalid_argument_error("cannot open " + path);
    nlohmann::json j;
    in >> j;
    return j;
}

int cmd_solve(const std::string& instance_path) {
    const nlohmann::json j = load_json(instance_path);
    const hflsim::PlanningInstance inst = hflsim::instance_from_json(j);
    hflsim::SolveParams params;
    params.rho = inst.penalty;
    hflsim::RoundPlan plan = hflsim::sca_solve(inst, params);
    if (!plan.feasible) plan = hflsim::fallback_plan(inst);
    std::cout << hflsim::plan_to_json(plan).dump(2) << '\n';
    return plan.feasible ? 0 : 1;
}

int cmd_oracle(const std::string& instance_path, int grid) {
    const nlohmann::json j = load_json(instance_path);
    const nlohmann::json batch = j.is_array() ? j : nlohmann::json::array({j});
    nlohmann::json out = nlohmann::json::array();
    for (const auto& item : batch) {
        const hflsim::PlanningInstance inst = hflsim::instance_from_json(item);
        out.push_back(hflsim::plan_to_json(hflsim::brute_force_oracle(inst, grid)));
    }
    std::cout << (j.is_array() ? out : out[0]).dump(2) << '\n';
    return 0;
}

int cmd_bound(const std::string& rundir, bool uniform, double sigma2, double eps0,
              double eps1) {
    hflsim::BoundParams p = hflsim::bound_params_from_run(rundir);
    if (sigma2 >= 0.0) p.sgd_variance = sigma2;
    if (eps0 >= 0.0) p.intra_divergence_sq = eps0;
    if (eps1 >= 0.0) p.inter_divergence_sq = eps1;

    const auto [ok, margin] = hflsim::check_step_size(p.eta, p.smoothness,
                                                      p.edge_rounds,
                                                      p.max_local_rounds);
    const hflsim::BoundBreakdown b = hflsim::evaluate_bound(p, uniform);
    nlohmann::json out = {{"step_size_ok", ok},
                          {"step_size_margin", margin},
                          {"rounds_used", p.rounds.size()},
                          {"loss_delta", b.loss_delta},
                          {"sgd_variance", b.sgd_variance},
                          {"intra_divergence", b.intra_divergence},
                          {"inter_divergence", b.inter_divergence},
                          {"wireless", b.wireless},
                          {"total", b.total}};
    std::cout << out.dump(2) << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"resource-aware hierarchical federated learning simulator"};
    app.require_subcommand(1);

    std::string config_path, outdir = "out", algorithm, instance_path, rundir;
    std::uint64_t seed = 0;
    int prbs = 0, grid = 8;
    bool uniform = false;
    double sigma2 = -1.0, eps0 = -1.0, eps1 = -1.0;

    auto* run = app.add_subcommand("run", "run a full experiment");
    run->add_option("-c,--config", config_path, "config file (JSON)")->required();
    auto* seed_opt = run->add_option("-s,--seed", seed, "seed override");
    run->add_option("-o,--out", outdir, "output directory");
    run->add_option("-a,--algorithm", algorithm,
                    "rawhfl | hfedavg_m1 | hfedavg_m2 | hfedavg_ub | top_popular");
    run->add_option("-z,--prbs", prbs, "clients selected per BS override");

    auto* solve = app.add_subcommand("solve", "solve one planning instance");
    solve->add_option("-i,--instance", instance_path, "instance file (JSON)")
        ->required();

    auto* oracle = app.add_subcommand("oracle",
                                      "brute-force verify planning instances");
    oracle->add_option("-i,--instance", instance_path,
                       "instance file (JSON object or array)")
        ->required();
    oracle->add_option("-g,--grid", grid, "frequency grid size");

    auto* bound = app.add_subcommand("bound", "evaluate the convergence bound");
    bound->add_option("-r,--run", rundir, "run output directory")->required();
    bound->add_flag("--uniform", uniform, "assume the full L local rounds per client");
    bound->add_option("--sigma2", sigma2, "SGD variance override");
    bound->add_option("--eps0", eps0, "intra-tier divergence override");
    bound->add_option("--eps1", eps1, "inter-tier divergence override");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed())
            return cmd_run(config_path, outdir, seed, !seed_opt->empty(), algorithm,
                           prbs);
        if (solve->parsed()) return cmd_solve(instance_path);
        if (oracle->parsed()) return cmd_oracle(instance_path, grid);
        if (bound->parsed()) return cmd_bound(rundir, uniform, sigma2, eps0, eps1);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
