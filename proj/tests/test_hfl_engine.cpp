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

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>

#include "hflsim/hfl_engine.hpp"

using namespace hflsim;
using Catch::Matchers::WithinAbs;

namespace {

// Small but fully wired setup: 2 BSs x 2 clients, a 4-item catalog, short
// horizon. Close-in placement keeps every upload well inside the deadline.
ExperimentConfig tiny_config() {
    ExperimentConfig cfg;
    cfg.num_bs = 2;
    cfg.clients_per_bs = 2;
    cfg.cell_radius_m = 120.0;
    cfg.num_genres = 2;
    cfg.items_per_genre = 2;
    cfg.feature_dim = 4;
    cfg.global_rounds = 2;
    cfg.edge_rounds = 2;
    cfg.max_local_rounds = 3;
    cfg.eta = 0.01;
    cfg.minibatches = 2;
    cfg.batch_size = 4;
    cfg.prbs = 1;
    cfg.test_requests = 20;
    cfg.warmup_requests = 5;
    cfg.seed = 11;
    return cfg;
}

}  // namespace

TEST_CASE("simulation construction wires clients to base stations") {
    const ExperimentConfig cfg = tiny_config();
    const Simulation sim = build_simulation(cfg);
    REQUIRE(sim.clients.size() == 4);
    REQUIRE(sim.catalog.total_items() == 4);
    REQUIRE(sim.slot == cfg.warmup_requests);
    for (int u = 0; u < 4; ++u) {
        const ClientRuntime& cl = sim.clients[u];
        REQUIRE(cl.id == u);
        REQUIRE(cl.bs == u / 2);
        REQUIRE(cl.distance_m >= cfg.min_distance_m);
        REQUIRE(cl.distance_m <= cfg.cell_radius_m);
        REQUIRE(cl.user.raw_dataset.size() == 5);
        REQUIRE(cl.dataset.size() == 4);
        REQUIRE(cl.test_set.size() == 20);
        REQUIRE(cl.user.activity >= cfg.activity.lo);
        REQUIRE(cl.user.activity <= cfg.activity.hi);
        REQUIRE(cl.profile.f_max_hz >= cfg.f_max_ghz.lo * 1e9);
        REQUIRE(cl.profile.f_max_hz <= cfg.f_max_ghz.hi * 1e9);
    }
    REQUIRE(sim.global_model.w.size() == model_dim(4));

    const Simulation again = build_simulation(cfg);
    REQUIRE(again.global_model.w == sim.global_model.w);
    for (int u = 0; u < 4; ++u) {
        REQUIRE(again.clients[u].test_set.size() == sim.clients[u].test_set.size());
        REQUIRE(again.clients[u].distance_m == sim.clients[u].distance_m);
    }
}

TEST_CASE("request advancement grows datasets monotonically") {
    Simulation sim = build_simulation(tiny_config());
    std::vector<std::size_t> before;
    for (const auto& cl : sim.clients) before.push_back(cl.user.raw_dataset.size());
    for (int t = 0; t < 30; ++t) detail::advance_requests(sim);
    REQUIRE(sim.slot == tiny_config().warmup_requests + 30);
    for (std::size_t u = 0; u < sim.clients.size(); ++u) {
        REQUIRE(sim.clients[u].user.raw_dataset.size() >= before[u]);
        REQUIRE(sim.clients[u].dataset.size() ==
                sim.clients[u].user.raw_dataset.size() - 1);
    }
}

TEST_CASE("full run produces consistent metrics and no violations") {
    ExperimentConfig cfg = tiny_config();
    const RunResult res = run_experiment(cfg);

    REQUIRE(res.rounds.size() == 2);
    REQUIRE(res.edge_energy.size() == 4);
    REQUIRE(res.constraint_violations == 0);

    double prev_cum = 0.0;
    for (const RoundRecord& rec : res.rounds) {
        REQUIRE(rec.bs_energy.size() == 2);
        REQUIRE(rec.cum_energy >= prev_cum - 1e-12);
        prev_cum = rec.cum_energy;
        REQUIRE(rec.aggregation_gap < 1e-9);
        for (std::size_t m = 0; m < kTopM.size(); ++m) {
            REQUIRE(rec.acc_mean[m] >= 0.0);
            REQUIRE(rec.acc_mean[m] <= 1.0);
        }
        REQUIRE(std::isfinite(rec.test_loss));
        // Everyone reaches the BS, so the wireless masses stay zero.
        REQUIRE(rec.bound.wireless_s1 == 0.0);
        REQUIRE(rec.bound.wireless_s2 == 0.0);
    }

    // Exactly Z clients per (round, edge round, BS); plans all succeed.
    std::map<std::tuple<int, int, int>, int> per_cell;
    for (const PlanLogEntry& p : res.plans) {
        REQUIRE(p.success == 1);
        REQUIRE(p.local_rounds >= 1);
        REQUIRE(p.local_rounds <= cfg.max_local_rounds);
        REQUIRE(p.t_cp + p.t_up <= cfg.deadline_s);
        REQUIRE(p.e_cp >= 0.0);
        REQUIRE(p.e_up > 0.0);
        ++per_cell[{p.k, p.e, p.bs}];
    }
    for (const auto& [cell, count] : per_cell) REQUIRE(count == cfg.prbs);
    REQUIRE(per_cell.size() == 2u * 2u * 2u);
}

TEST_CASE("runs replay bit for bit on the same seed") {
    const ExperimentConfig cfg = tiny_config();
    const RunResult a = run_experiment(cfg);
    const RunResult b = run_experiment(cfg);
    REQUIRE(a.final_model.w == b.final_model.w);
    REQUIRE(a.rounds.size() == b.rounds.size());
    for (std::size_t k = 0; k < a.rounds.size(); ++k) {
        REQUIRE(a.rounds[k].test_loss == b.rounds[k].test_loss);
        REQUIRE(a.rounds[k].cum_energy == b.rounds[k].cum_energy);
        REQUIRE(a.rounds[k].acc_mean == b.rounds[k].acc_mean);
    }

    ExperimentConfig other = cfg;
    other.seed = 12;
    const RunResult c = run_experiment(other);
    REQUIRE(a.final_model.w != c.final_model.w);
}

TEST_CASE("channel realizations are shared across algorithms on a seed") {
    ExperimentConfig cfg = tiny_config();
    cfg.algorithm = Algorithm::rawhfl;
    const RunResult raw = run_experiment(cfg);
    cfg.algorithm = Algorithm::hfedavg_ub;
    const RunResult ub = run_experiment(cfg);

    std::map<std::tuple<int, int, int>, double> raw_t_up;
    for (const PlanLogEntry& p : raw.plans) raw_t_up[{p.k, p.e, p.client}] = p.t_up;
    int shared = 0;
    for (const PlanLogEntry& p : ub.plans) {
        const auto it = raw_t_up.find({p.k, p.e, p.client});
        if (it == raw_t_up.end()) continue;
        REQUIRE(p.t_up == it->second);
        ++shared;
    }
    REQUIRE(shared > 0);
}

TEST_CASE("baseline plans follow their definitions on the engine path") {
    ExperimentConfig cfg = tiny_config();
    cfg.algorithm = Algorithm::hfedavg_ub;
    const RunResult ub = run_experiment(cfg);
    for (const PlanLogEntry& p : ub.plans)
        REQUIRE(p.local_rounds == cfg.max_local_rounds);
    // Every client of every BS participates in every edge round.
    REQUIRE(ub.plans.size() ==
            static_cast<std::size_t>(cfg.global_rounds * cfg.edge_rounds *
                                     cfg.num_bs * cfg.clients_per_bs));

    cfg.algorithm = Algorithm::hfedavg_m2;
    const RunResult m2 = run_experiment(cfg);
    REQUIRE(m2.constraint_violations == 0);
    // A common round count per cell.
    std::map<std::tuple<int, int, int>, int> cell_rounds;
    for (const PlanLogEntry& p : m2.plans) {
        auto key = std::make_tuple(p.k, p.e, p.bs);
        if (cell_rounds.count(key)) REQUIRE(cell_rounds[key] == p.local_rounds);
        cell_rounds[key] = p.local_rounds;
    }
}

TEST_CASE("popularity baseline never trains and spends nothing") {
    ExperimentConfig cfg = tiny_config();
    cfg.algorithm = Algorithm::top_popular;
    const RunResult res = run_experiment(cfg);
    REQUIRE(res.rounds.size() == 2);
    REQUIRE(res.plans.empty());
    REQUIRE(res.bound.rounds.empty());
    for (double e : res.edge_energy) REQUIRE(e == 0.0);
    for (double e : res.client_energy) REQUIRE(e == 0.0);
    REQUIRE(std::isnan(res.rounds[0].test_loss));
    // No learning: the reported accuracy is constant across rounds.
    REQUIRE(res.rounds[0].acc_mean == res.rounds[1].acc_mean);
    REQUIRE(res.final_model.w == build_simulation(cfg).global_model.w);
}

TEST_CASE("degenerate hierarchy collapses to one local sgd call") {
    ExperimentConfig cfg = tiny_config();
    cfg.num_bs = 1;
    cfg.clients_per_bs = 1;
    cfg.prbs = 1;
    cfg.global_rounds = 1;
    cfg.edge_rounds = 1;
    cfg.max_local_rounds = 1;

    const RunResult res = run_experiment(cfg);
    REQUIRE(res.rounds.size() == 1);
    REQUIRE(res.plans.size() == 1);
    REQUIRE(res.plans[0].local_rounds == 1);

    // Manual replay: same initial state, one request slot, one training round.
    Simulation sim = build_simulation(cfg);
    detail::advance_requests(sim);
    auto rng = make_rng(cfg.seed, StreamTag::minibatch, 0, 0);
    const LocalSgdResult out =
        local_sgd(sim.global_model, sim.clients[0].dataset, 1, cfg.eta,
                  cfg.minibatches, cfg.batch_size, rng);
    REQUIRE(res.final_model.w == out.model_out.w);
}

TEST_CASE("bound statistics mirror the executed plans") {
    ExperimentConfig cfg = tiny_config();
    const RunResult res = run_experiment(cfg);
    REQUIRE(res.bound.rounds.size() == res.rounds.size());
    REQUIRE(res.bound.sgd_variance > 0.0);
    REQUIRE(res.bound.intra_divergence_sq >= 0.0);
    REQUIRE(res.bound.inter_divergence_sq >= 0.0);
    for (std::size_t k = 0; k < res.rounds.size(); ++k) {
        const RoundBoundStats& s = res.bound.rounds[k];
        REQUIRE(s.omega > 0.0);
        // One client per cell at uniform weights: omega adds alpha_b * L_u.
        double expect = 0.0;
        for (const PlanLogEntry& p : res.plans)
            if (p.k == static_cast<int>(k)) expect += 0.5 * p.local_rounds;
        REQUIRE_THAT(s.omega, WithinAbs(expect, 1e-12));
    }
    const BoundBreakdown bb = evaluate_bound(res.bound);
    REQUIRE(bb.wireless == 0.0);
    REQUIRE(std::isfinite(bb.total));
}
