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

#ifndef HFLSIM_EXPERIMENT_HPP
#define HFLSIM_EXPERIMENT_HPP

#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hflsim/csv.hpp"
#include "hflsim/hfl_engine.hpp"

namespace hflsim {

/// Empirical CDF of the per-edge-round energy totals as (value, fraction <=
/// value) pairs over the distinct sample values.
inline std::vector<std::pair<double, double>> energy_cdf(std::vector<double> samples) {
    require(!samples.empty(), "energy_cdf: no samples");
    std::sort(samples.begin(), samples.end());
    std::vector<std::pair<double, double>> cdf;
    const double n = static_cast<double>(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (i + 1 < samples.size() && samples[i + 1] == samples[i]) continue;
        cdf.emplace_back(samples[i], static_cast<double>(i + 1) / n);
    }
    return cdf;
}

/// Empirical quantile (lowest sample with cumulative fraction >= q).
inline double energy_quantile(std::vector<double> samples, double q) {
    require(!samples.empty(), "energy_quantile: no samples");
    require(q > 0.0 && q <= 1.0, "energy_quantile: q must be in (0,1]");
    std::sort(samples.begin(), samples.end());
    const auto n = static_cast<double>(samples.size());
    std::size_t idx = static_cast<std::size_t>(std::ceil(q * n)) - 1;
    idx = std::min(idx, samples.size() - 1);
    return samples[idx];
}

namespace detail {

/// Single-round bound evaluation used for the per-round CSV columns.
inline BoundBreakdown round_bound(const BoundParams& scalars,
                                  const RoundBoundStats& stats) {
    if (stats.omega <= 0.0 || scalars.eta <= 0.0 || scalars.smoothness <= 0.0)
        return {};
    BoundParams p = scalars;
    p.rounds = {stats};
    return evaluate_bound(p);
}

}  // namespace detail

/// Writes metrics.csv, energy_cdf.csv, topm_summary.csv, plans.csv, and
/// run_info.json into `outdir`.
inline void write_outputs(const RunResult& res, const ExperimentConfig& cfg,
                          const std::string& outdir) {
    namespace fs = std::filesystem;
    fs::create_directories(outdir);
    const std::string base = outdir.empty() ? std::string(".") : outdir;

    {
        CsvWriter w(base + "/metrics.csv");
        std::vector<std::string> head = {
            "k",          "test_loss",   "top1_mean",  "top1_std",
            "top5_mean",  "top5_std",    "top10_mean", "top10_std",
            "round_energy", "cum_energy", "utility",   "aggregation_gap",
            "fallbacks",  "idle_cells",  "omega",      "loss_before",
            "sum_ab2_au2", "sum_ab_au2", "wireless_s1", "wireless_s2",
            "bound_loss_delta", "bound_sgd_variance", "bound_intra_div",
            "bound_inter_div",  "bound_wireless",     "bound_total"};
        for (int b = 0; b < cfg.num_bs; ++b)
            head.push_back("bs_energy_" + std::to_string(b));
        w.row(head);
        for (const RoundRecord& r : res.rounds) {
            const BoundBreakdown bb = detail::round_bound(res.bound, r.bound);
            std::vector<std::string> row = {
                csv_num(r.k),           csv_num(r.test_loss),
                csv_num(r.acc_mean[0]), csv_num(r.acc_std[0]),
                csv_num(r.acc_mean[1]), csv_num(r.acc_std[1]),
                csv_num(r.acc_mean[2]), csv_num(r.acc_std[2]),
                csv_num(r.round_energy), csv_num(r.cum_energy),
                csv_num(r.utility),     csv_num(r.aggregation_gap),
                csv_num(r.planner_fallbacks), csv_num(r.idle_cells),
                csv_num(r.bound.omega), csv_num(r.bound.loss_before),
                csv_num(r.bound.sum_ab2_au2), csv_num(r.bound.sum_ab_au2),
                csv_num(r.bound.wireless_s1), csv_num(r.bound.wireless_s2),
                csv_num(bb.loss_delta), csv_num(bb.sgd_variance),
                csv_num(bb.intra_divergence), csv_num(bb.inter_divergence),
                csv_num(bb.wireless),   csv_num(bb.total)};
            for (double be : r.bs_energy) row.push_back(csv_num(be));
            w.row(row);
        }
    }

    {
        CsvWriter w(base + "/energy_cdf.csv");
        w.row({"energy_j", "cdf"});
        for (const auto& [x, f] : energy_cdf(res.edge_energy))
            w.row({csv_num(x), csv_num(f)});
    }

    {
        CsvWriter w(base + "/topm_summary.csv");
        w.row({"top_m", "accuracy_mean", "accuracy_std", "final_test_loss",
               "total_energy_j"});
        const RoundRecord& last = res.rounds.back();
        for (std::size_t m = 0; m < kTopM.size(); ++m) {
            w.row({csv_num(kTopM[m]), csv_num(last.acc_mean[m]),
                   csv_num(last.acc_std[m]), csv_num(last.test_loss),
                   csv_num(last.cum_energy)});
        }
    }

    {
        CsvWriter w(base + "/plans.csv");
        w.row({"k", "e", "bs", "client", "local_rounds", "freq_hz", "t_cp", "t_up",
               "e_cp", "e_up", "success", "fallback"});
        for (const PlanLogEntry& p : res.plans) {
            w.row({csv_num(p.k), csv_num(p.e), csv_num(p.bs), csv_num(p.client),
                   csv_num(p.local_rounds), csv_num(p.freq_hz), csv_num(p.t_cp),
                   csv_num(p.t_up), csv_num(p.e_cp), csv_num(p.e_up),
                   csv_num(p.success), csv_num(p.fallback ? 1 : 0)});
        }
    }

    {
        nlohmann::json info;
        info["algorithm"] = to_string(cfg.algorithm);
        info["seed"] = cfg.seed;
        info["eta"] = cfg.eta;
        info["smoothness"] = cfg.smoothness;
        info["edge_rounds"] = cfg.edge_rounds;
        info["max_local_rounds"] = cfg.max_local_rounds;
        info["sgd_variance"] = res.bound.sgd_variance;
        info["intra_divergence_sq"] = res.bound.intra_divergence_sq;
        info["inter_divergence_sq"] = res.bound.inter_divergence_sq;
        info["total_energy_j"] =
            res.rounds.empty() ? 0.0 : res.rounds.back().cum_energy;
        info["constraint_violations"] = res.constraint_violations;
        std::ofstream out(base + "/run_info.json", std::ios::binary);
        require(out.good(), "write_outputs: cannot open run_info.json");
        out << info.dump(2) << '\n';
    }
}

/// Runs the configured experiment and writes all output files.
inline RunResult run_and_write(const ExperimentConfig& cfg, const std::string& outdir) {
    RunResult res = run_experiment(cfg);
    write_outputs(res, cfg, outdir);
    return res;
}

/// Rebuilds the bound inputs from a run directory (metrics.csv holds the
/// per-round statistics, run_info.json the scalar estimates).
inline BoundParams bound_params_from_run(const std::string& rundir) {
    const CsvTable t = read_csv(rundir + "/metrics.csv");
    std::ifstream in(rundir + "/run_info.json");
    require(in.good(), "bound_params_from_run: cannot open run_info.json");
    nlohmann::json info;
    in >> info;

    BoundParams p;
    p.smoothness = info.at("smoothness").get<double>();
    p.eta = info.at("eta").get<double>();
    p.edge_rounds = info.at("edge_rounds").get<int>();
    p.max_local_rounds = info.at("max_local_rounds").get<int>();
    p.sgd_variance = info.at("sgd_variance").get<double>();
    p.intra_divergence_sq = info.at("intra_divergence_sq").get<double>();
    p.inter_divergence_sq = info.at("inter_divergence_sq").get<double>();

    const int c_omega = t.column("omega");
    const int c_before = t.column("loss_before");
    const int c_loss = t.column("test_loss");
    const int c_ab2 = t.column("sum_ab2_au2");
    const int c_ab = t.column("sum_ab_au2");
    const int c_s1 = t.column("wireless_s1");
    const int c_s2 = t.column("wireless_s2");
    for (const auto& row : t.rows) {
        RoundBoundStats s;
        s.omega = std::stod(row[c_omega]);
        if (s.omega <= 0.0) continue;
        s.loss_before = std::stod(row[c_before]);
        s.loss_after = std::stod(row[c_loss]);
        s.sum_ab2_au2 = std::stod(row[c_ab2]);
        s.sum_ab_au2 = std::stod(row[c_ab]);
        s.wireless_s1 = std::stod(row[c_s1]);
        s.wireless_s2 = std::stod(row[c_s2]);
        p.rounds.push_back(s);
    }
    return p;
}

/// Planner instance (de)serialization for the solve/oracle subcommands.
inline PlanningInstance instance_from_json(const nlohmann::json& j) {
    PlanningInstance inst;
    inst.z = j.at("z").get<int>();
    inst.max_local_rounds = j.at("max_local_rounds").get<int>();
    inst.theta = j.at("theta").get<double>();
    inst.penalty = j.value("penalty", 1.0);
    inst.alpha_b = j.value("alpha_b", 1.0);
    for (const auto& cj : j.at("clients")) {
        ClientCosts c;
        c.alpha_u = cj.value("alpha_u", 1.0 / j.at("z").get<double>());
        c.t_up_s = cj.at("t_up_s").get<double>();
        c.e_up_j = cj.at("e_up_j").get<double>();
        c.cycles = cj.at("cycles").get<double>();
        c.f_max_hz = cj.at("f_max_hz").get<double>();
        c.cap_coeff = cj.at("cap_coeff").get<double>();
        c.e_bd_j = cj.at("e_bd_j").get<double>();
        c.t_th_s = cj.at("t_th_s").get<double>();
        inst.clients.push_back(c);
    }
    inst.validate();
    return inst;
}

inline nlohmann::json instance_to_json(const PlanningInstance& inst) {
    nlohmann::json j;
    j["z"] = inst.z;
    j["max_local_rounds"] = inst.max_local_rounds;
    j["theta"] = inst.theta;
    j["penalty"] = inst.penalty;
    j["alpha_b"] = inst.alpha_b;
    j["clients"] = nlohmann::json::array();
    for (const ClientCosts& c : inst.clients) {
        j["clients"].push_back({{"alpha_u", c.alpha_u},
                                {"t_up_s", c.t_up_s},
                                {"e_up_j", c.e_up_j},
                                {"cycles", c.cycles},
                                {"f_max_hz", c.f_max_hz},
                                {"cap_coeff", c.cap_coeff},
                                {"e_bd_j", c.e_bd_j},
                                {"t_th_s", c.t_th_s}});
    }
    return j;
}

inline nlohmann::json plan_to_json(const RoundPlan& plan) {
    nlohmann::json j;
    j["feasible"] = plan.feasible;
    j["fallback"] = plan.fallback;
    j["objective"] = plan.objective;
    j["iterations"] = plan.iterations;
    j["binary_residual"] = plan.binary_residual;
    if (!plan.note.empty()) j["note"] = plan.note;
    j["selected"] = plan.selected;
    j["local_rounds"] = plan.local_rounds;
    j["freq_hz"] = plan.freq_hz;
    return j;
}

}  // namespace hflsim

#endif  // HFLSIM_EXPERIMENT_HPP
