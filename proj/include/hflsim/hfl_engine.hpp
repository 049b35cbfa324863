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

#ifndef HFLSIM_HFL_ENGINE_HPP
#define HFLSIM_HFL_ENGINE_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "hflsim/baselines.hpp"
#include "hflsim/bound_eval.hpp"
#include "hflsim/common.hpp"
#include "hflsim/config.hpp"
#include "hflsim/content_model.hpp"
#include "hflsim/learner.hpp"
#include "hflsim/planner.hpp"
#include "hflsim/radio_model.hpp"

namespace hflsim {

inline constexpr std::array<int, 3> kTopM = {1, 5, 10};

struct ClientRuntime {
    int id = 0;
    int bs = 0;
    UserState user;
    double distance_m = 0.0;
    double p_tx_w = 0.0;
    ComputeProfile profile;
    std::mt19937_64 request_rng;
    std::vector<ProcessedSample> dataset;   // processed view, refreshed per slot
    std::vector<ProcessedSample> test_set;  // held-out future stream, fixed
};

struct Simulation {
    ExperimentConfig cfg;
    ContentCatalog catalog;
    std::vector<ClientRuntime> clients;
    ModelParams global_model;
    int slot = 0;
};

/// One selected client's realized round, for audit and CSV export.
struct PlanLogEntry {
    int k = 0, e = 0, bs = 0, client = 0;
    int local_rounds = 0;
    double freq_hz = 0.0;
    double t_cp = 0.0, t_up = 0.0, e_cp = 0.0, e_up = 0.0;
    int success = 0;
    bool fallback = false;
};

struct RoundRecord {
    int k = 0;
    double test_loss = 0.0;
    std::array<double, 3> acc_mean{};  // Top-M for kTopM
    std::array<double, 3> acc_std{};
    std::vector<double> bs_energy;
    double round_energy = 0.0;
    double cum_energy = 0.0;
    double utility = 0.0;
    double aggregation_gap = 0.0;  // gradient-sum vs edge-model-average route
    RoundBoundStats bound;
    int planner_fallbacks = 0;
    int idle_cells = 0;  // (edge round, BS) pairs with no training
};

struct RunResult {
    std::vector<RoundRecord> rounds;
    BoundParams bound;                 // empty rounds for top_popular
    std::vector<double> edge_energy;   // selected-client total per edge round
    std::vector<double> client_energy; // per client, whole run
    std::vector<PlanLogEntry> plans;
    ModelParams final_model;
    long constraint_violations = 0;    // deadline/energy misses of selected clients
};

inline Simulation build_simulation(const ExperimentConfig& cfg) {
    cfg.validate();
    Simulation sim;
    sim.cfg = cfg;
    sim.catalog = build_catalog(cfg.num_genres, cfg.items_per_genre,
                                cfg.feature_dim, cfg.seed);

    const double sample_bits = (cfg.total_items() + 1.0) * cfg.precision_bits;
    sim.clients.resize(cfg.num_clients());
    for (int u = 0; u < cfg.num_clients(); ++u) {
        ClientRuntime& cl = sim.clients[u];
        cl.id = u;
        cl.bs = u / cfg.clients_per_bs;

        auto prof_rng = make_rng(cfg.seed, StreamTag::user_profile, u);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        auto draw = [&](const Range& r) {
            return r.lo + unit(prof_rng) * (r.hi - r.lo);
        };
        cl.user.user_id = u;
        cl.user.bs_id = cl.bs;
        cl.user.activity = draw(cfg.activity);
        cl.user.similarity_prob = draw(cfg.similarity);
        const double cycles_per_bit = draw(cfg.cycles_per_bit);
        const double f_max = draw(cfg.f_max_ghz) * 1e9;
        const double e_bd = draw(cfg.energy_budget_j);
        cl.p_tx_w = dbm_to_watt(draw(cfg.p_tx_dbm));
        cl.user.genre_prefs = sample_genre_preferences(cfg.dirichlet_concentration,
                                                       cfg.num_genres, prof_rng);

        auto place_rng = make_rng(cfg.seed, StreamTag::placement, u);
        const double r_min2 = cfg.min_distance_m * cfg.min_distance_m;
        const double r_max2 = cfg.cell_radius_m * cfg.cell_radius_m;
        cl.distance_m = std::sqrt(r_min2 + unit(place_rng) * (r_max2 - r_min2));

        cl.profile.cycles_per_bit = cycles_per_bit;
        cl.profile.sample_bits = sample_bits;
        cl.profile.minibatches = cfg.minibatches;
        cl.profile.batch_size = cfg.batch_size;
        cl.profile.f_max_hz = f_max;
        cl.profile.cap_coeff = cfg.cap_coeff;
        cl.profile.energy_budget_j = e_bd;
        cl.profile.deadline_s = cfg.deadline_s;

        cl.request_rng = make_rng(cfg.seed, StreamTag::requests, u);
        for (int i = 0; i < cfg.warmup_requests; ++i) {
            const int item = next_request_active(cl.user, sim.catalog, cl.request_rng);
            update_raw_dataset(cl.user, item, i);
        }
        cl.dataset = build_processed_dataset(cl.user);

        UserState probe = cl.user;  // future stream from the post-warmup state
        auto test_rng = make_rng(cfg.seed, StreamTag::test_requests, u);
        std::vector<int> stream(cfg.test_requests + 1);
        for (int& item : stream)
            item = next_request_active(probe, sim.catalog, test_rng);
        cl.test_set.reserve(cfg.test_requests);
        for (int i = 0; i < cfg.test_requests; ++i)
            cl.test_set.push_back({stream[i], stream[i + 1]});
    }

    sim.global_model = init_model(cfg.total_items(), cfg.seed);
    sim.slot = cfg.warmup_requests;
    return sim;
}

namespace detail {

/// One request slot for every client, then refresh the processed datasets.
inline void advance_requests(Simulation& sim) {
    for (ClientRuntime& cl : sim.clients) {
        const auto req = next_request(cl.user, sim.catalog, cl.request_rng);
        update_raw_dataset(cl.user, req, sim.slot);
        if (req.has_value()) cl.dataset = build_processed_dataset(cl.user);
    }
    ++sim.slot;
}

struct LinkCosts {
    LinkState link;
    double t_up = 0.0;
    double e_up = 0.0;
};

inline LinkCosts realize_link(const Simulation& sim, const ClientRuntime& cl,
                              int round_counter) {
    auto rng = make_rng(sim.cfg.seed, StreamTag::channel, cl.id, round_counter);
    LinkCosts lc;
    lc.link = sample_link(cl.distance_m, sim.cfg.carrier_ghz, cl.p_tx_w,
                          sim.cfg.prb_khz * 1e3, rng);
    const double gamma = snr(lc.link);
    const double s_bits = payload_bits(model_dim(sim.cfg.total_items()),
                                       sim.cfg.precision_bits);
    lc.t_up = upload_time_s(s_bits, lc.link.prb_hz, gamma);
    lc.e_up = lc.t_up * lc.link.p_tx_w;
    return lc;
}

inline ClientCosts to_costs(const ClientRuntime& cl, const LinkCosts& lc,
                            double alpha_u) {
    ClientCosts c;
    c.alpha_u = alpha_u;
    c.t_up_s = lc.t_up;
    c.e_up_j = lc.e_up;
    c.cycles = cycles_per_round(cl.profile);
    c.f_max_hz = cl.profile.f_max_hz;
    c.cap_coeff = cl.profile.cap_coeff;
    c.e_bd_j = cl.profile.energy_budget_j;
    c.t_th_s = cl.profile.deadline_s;
    return c;
}

/// Round-0 estimates of the SGD variance and the two tier-divergence bounds,
/// measured at the initial model on the warmup datasets.
inline void estimate_bound_inputs(const Simulation& sim, BoundParams& bound) {
    const ExperimentConfig& cfg = sim.cfg;
    const ModelParams& w0 = sim.global_model;

    double sigma_sq = 0.0;
    std::vector<Eigen::VectorXd> client_grads(sim.clients.size());
    for (std::size_t u = 0; u < sim.clients.size(); ++u) {
        const ClientRuntime& cl = sim.clients[u];
        auto rng = make_rng(cfg.seed, StreamTag::bound_probe, cl.id);
        std::uniform_int_distribution<std::size_t> pick(0, cl.dataset.size() - 1);
        std::vector<ProcessedSample> batch(cfg.batch_size);
        std::vector<Eigen::VectorXd> grads;
        grads.reserve(cfg.minibatches);
        Eigen::VectorXd mean = Eigen::VectorXd::Zero(w0.w.size());
        for (int b = 0; b < cfg.minibatches; ++b) {
            for (int i = 0; i < cfg.batch_size; ++i) batch[i] = cl.dataset[pick(rng)];
            grads.push_back(loss_and_grad(w0, batch).second);
            mean += grads.back();
        }
        mean /= static_cast<double>(cfg.minibatches);
        double var = 0.0;
        for (const auto& g : grads) var += (g - mean).squaredNorm();
        sigma_sq += var / cfg.minibatches;
        client_grads[u] = loss_and_grad(w0, cl.dataset).second;
    }
    bound.sgd_variance = sigma_sq / sim.clients.size();

    double eps0 = 0.0;
    std::vector<Eigen::VectorXd> bs_grads(cfg.num_bs,
                                          Eigen::VectorXd::Zero(w0.w.size()));
    for (int b = 0; b < cfg.num_bs; ++b) {
        const double au = 1.0 / cfg.clients_per_bs;
        for (int j = 0; j < cfg.clients_per_bs; ++j)
            bs_grads[b] += au * client_grads[b * cfg.clients_per_bs + j];
        double d = 0.0;
        for (int j = 0; j < cfg.clients_per_bs; ++j)
            d += au * (client_grads[b * cfg.clients_per_bs + j] - bs_grads[b])
                     .squaredNorm();
        eps0 = std::max(eps0, d);
    }
    bound.intra_divergence_sq = eps0;

    Eigen::VectorXd global_grad = Eigen::VectorXd::Zero(w0.w.size());
    const double ab = 1.0 / cfg.num_bs;
    for (const auto& g : bs_grads) global_grad += ab * g;
    double eps1 = 0.0;
    for (const auto& g : bs_grads) eps1 += ab * (g - global_grad).squaredNorm();
    bound.inter_divergence_sq = eps1;
}

inline void eval_metrics(const Simulation& sim, const ModelParams& model,
                         RoundRecord& rec) {
    const std::size_t n_cl = sim.clients.size();
    double loss = 0.0;
    std::array<double, 3> sum{}, sum_sq{};
    for (const ClientRuntime& cl : sim.clients) {
        loss += batch_loss(model, cl.test_set);
        for (std::size_t m = 0; m < kTopM.size(); ++m) {
            const double a = top_m_accuracy(model, cl.test_set, kTopM[m]);
            sum[m] += a;
            sum_sq[m] += a * a;
        }
    }
    rec.test_loss = loss / n_cl;
    for (std::size_t m = 0; m < kTopM.size(); ++m) {
        rec.acc_mean[m] = sum[m] / n_cl;
        const double var = std::max(0.0, sum_sq[m] / n_cl - rec.acc_mean[m] * rec.acc_mean[m]);
        rec.acc_std[m] = std::sqrt(var);
    }
}

inline RunResult run_top_popular(Simulation& sim) {
    const ExperimentConfig& cfg = sim.cfg;
    RunResult res;
    res.client_energy.assign(sim.clients.size(), 0.0);
    res.final_model = sim.global_model;

    RoundRecord proto;
    proto.bs_energy.assign(cfg.num_bs, 0.0);
    proto.test_loss = std::numeric_limits<double>::quiet_NaN();
    const std::size_t n_cl = sim.clients.size();
    std::array<double, 3> sum{}, sum_sq{};
    for (const ClientRuntime& cl : sim.clients) {
        for (std::size_t m = 0; m < kTopM.size(); ++m) {
            const double a = top_popular_accuracy(sim.catalog, cl.test_set, kTopM[m]);
            sum[m] += a;
            sum_sq[m] += a * a;
        }
    }
    for (std::size_t m = 0; m < kTopM.size(); ++m) {
        proto.acc_mean[m] = sum[m] / n_cl;
        const double var =
            std::max(0.0, sum_sq[m] / n_cl - proto.acc_mean[m] * proto.acc_mean[m]);
        proto.acc_std[m] = std::sqrt(var);
    }

    for (int k = 0; k < cfg.global_rounds; ++k) {
        for (int e = 0; e < cfg.edge_rounds; ++e) {
            advance_requests(sim);
            res.edge_energy.push_back(0.0);
        }
        RoundRecord rec = proto;
        rec.k = k;
        res.rounds.push_back(std::move(rec));
    }
    return res;
}

}  // namespace detail

/// Runs the configured algorithm over K global rounds of E edge rounds each
/// and collects per-round metrics, energy traces, plan logs, and the bound
/// statistics.
inline RunResult run_experiment(const ExperimentConfig& cfg) {
    Simulation sim = build_simulation(cfg);
    if (cfg.algorithm == Algorithm::top_popular) return detail::run_top_popular(sim);

    RunResult res;
    res.client_energy.assign(sim.clients.size(), 0.0);
    res.bound.smoothness = cfg.smoothness;
    res.bound.eta = cfg.eta;
    res.bound.edge_rounds = cfg.edge_rounds;
    res.bound.max_local_rounds = cfg.max_local_rounds;
    detail::estimate_bound_inputs(sim, res.bound);

    const int num_params = static_cast<int>(sim.global_model.w.size());
    const double alpha_b = 1.0 / cfg.num_bs;
    double cum_energy = 0.0;
    double prev_loss = 0.0;
    {
        RoundRecord init_probe;
        detail::eval_metrics(sim, sim.global_model, init_probe);
        prev_loss = init_probe.test_loss;
    }

    std::vector<ModelParams> edge_models(cfg.num_bs);
    Eigen::VectorXd global_sum(num_params), bs_sum(num_params);

    for (int k = 0; k < cfg.global_rounds; ++k) {
        RoundRecord rec;
        rec.k = k;
        rec.bs_energy.assign(cfg.num_bs, 0.0);
        rec.bound.loss_before = prev_loss;

        for (int b = 0; b < cfg.num_bs; ++b) edge_models[b] = sim.global_model;
        global_sum.setZero();

        for (int e = 0; e < cfg.edge_rounds; ++e) {
            detail::advance_requests(sim);
            const int round_counter = k * cfg.edge_rounds + e;
            double edge_total = 0.0;

            for (int b = 0; b < cfg.num_bs; ++b) {
                // Frozen channel snapshot and the planning instance.
                std::vector<detail::LinkCosts> links(cfg.clients_per_bs);
                PlanningInstance inst;
                inst.z = cfg.prbs;
                inst.max_local_rounds = cfg.max_local_rounds;
                inst.theta = cfg.theta;
                inst.penalty = cfg.rho;
                inst.alpha_b = alpha_b;
                for (int j = 0; j < cfg.clients_per_bs; ++j) {
                    const ClientRuntime& cl = sim.clients[b * cfg.clients_per_bs + j];
                    links[j] = detail::realize_link(sim, cl, round_counter);
                    inst.clients.push_back(
                        detail::to_costs(cl, links[j], 1.0 / cfg.prbs));
                }

                RoundPlan plan;
                switch (cfg.algorithm) {
                    case Algorithm::rawhfl: {
                        SolveParams sp;
                        sp.max_iters = cfg.planner_max_iters;
                        sp.eps_rel = cfg.planner_eps_rel;
                        sp.rho = cfg.rho;
                        plan = sca_solve(inst, sp);
                        if (!plan.feasible) plan = fallback_plan(inst);
                        if (plan.feasible && plan.fallback) ++rec.planner_fallbacks;
                        break;
                    }
                    case Algorithm::hfedavg_m1:
                        plan = hfedavg_m1_plan(inst);
                        break;
                    case Algorithm::hfedavg_m2:
                        plan = hfedavg_m2_plan(inst);
                        break;
                    case Algorithm::hfedavg_ub:
                        plan = hfedavg_ub_plan(inst);
                        break;
                    case Algorithm::top_popular:
                        break;
                }
                if (!plan.feasible) {
                    ++rec.idle_cells;
                    continue;
                }

                int selected_count = 0;
                for (int s : plan.selected) selected_count += s;
                const double alpha_u = 1.0 / selected_count;

                bs_sum.setZero();
                for (int j = 0; j < cfg.clients_per_bs; ++j) {
                    if (!plan.selected[j]) continue;
                    ClientRuntime& cl = sim.clients[b * cfg.clients_per_bs + j];
                    const int rounds = plan.local_rounds[j];
                    const double f = plan.freq_hz[j];

                    auto mb_rng = make_rng(cfg.seed, StreamTag::minibatch, cl.id,
                                           round_counter);
                    LocalSgdResult out = local_sgd(edge_models[b], cl.dataset, rounds,
                                                   cfg.eta, cfg.minibatches,
                                                   cfg.batch_size, mb_rng);

                    const double t_cp = compute_time_s(rounds, cl.profile, f);
                    const double e_cp = compute_energy_j(rounds, cl.profile, f);
                    int sc = success_indicator(t_cp, links[j].t_up,
                                               cl.profile.deadline_s);
                    const bool energy_ok =
                        e_cp + links[j].e_up <= cl.profile.energy_budget_j;
                    if (cfg.algorithm == Algorithm::hfedavg_ub) {
                        sc = 1;  // forced delivery, constraints ignored
                    } else if (sc != 1 || !energy_ok) {
                        ++res.constraint_violations;
                        require(cfg.algorithm != Algorithm::rawhfl,
                                "run_experiment: optimized plan violated a constraint");
                    }

                    const double e_tot = e_cp + links[j].e_up;
                    rec.bs_energy[b] += e_tot;
                    edge_total += e_tot;
                    res.client_energy[cl.id] += e_tot;
                    rec.utility += inst.alpha_b * alpha_u *
                                   (-cfg.theta * rounds + (1.0 - cfg.theta) * e_tot);

                    if (sc == 1) bs_sum += alpha_u * out.accumulator;

                    rec.bound.omega += alpha_b * alpha_u * rounds;
                    rec.bound.sum_ab2_au2 += alpha_b * alpha_b * alpha_u * alpha_u;
                    rec.bound.sum_ab_au2 += alpha_b * alpha_u * alpha_u;
                    accumulate_wireless(rec.bound, alpha_b, alpha_u, 1.0,
                                        out.sq_grad_norms);

                    PlanLogEntry log;
                    log.k = k;
                    log.e = e;
                    log.bs = b;
                    log.client = cl.id;
                    log.local_rounds = rounds;
                    log.freq_hz = f;
                    log.t_cp = t_cp;
                    log.t_up = links[j].t_up;
                    log.e_cp = e_cp;
                    log.e_up = links[j].e_up;
                    log.success = sc;
                    log.fallback = plan.fallback;
                    res.plans.push_back(log);
                }

                edge_models[b].w -= cfg.eta * bs_sum;
                global_sum += alpha_b * bs_sum;
            }
            res.edge_energy.push_back(edge_total);
            cum_energy += edge_total;
        }

        // Global aggregation: the gradient route is canonical; the edge-model
        // average is kept as a consistency diagnostic.
        Eigen::VectorXd telescoped = Eigen::VectorXd::Zero(num_params);
        for (int b = 0; b < cfg.num_bs; ++b) telescoped += alpha_b * edge_models[b].w;
        sim.global_model.w -= cfg.eta * global_sum;
        rec.aggregation_gap =
            (sim.global_model.w - telescoped).cwiseAbs().maxCoeff();

        detail::eval_metrics(sim, sim.global_model, rec);
        rec.bound.loss_after = rec.test_loss;
        prev_loss = rec.test_loss;
        rec.round_energy = 0.0;
        for (double be : rec.bs_energy) rec.round_energy += be;
        rec.cum_energy = cum_energy;

        if (rec.bound.omega > 0.0) res.bound.rounds.push_back(rec.bound);
        res.rounds.push_back(std::move(rec));
    }

    res.final_model = sim.global_model;
    return res;
}

}  // namespace hflsim

#endif  // HFLSIM_HFL_ENGINE_HPP
