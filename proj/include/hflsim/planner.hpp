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

#ifndef HFLSIM_PLANNER_HPP
#define HFLSIM_PLANNER_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "hflsim/common.hpp"
#include "hflsim/radio_model.hpp"
#include "hflsim/simplex.hpp"

namespace hflsim {

/// Frozen per-round costs of one candidate client. `cycles` is the CPU work
/// of a single local round (n * n_bar * c_u * D_u).
struct ClientCosts {
    double alpha_u = 0.0;
    double t_up_s = 0.0;
    double e_up_j = 0.0;
    double cycles = 0.0;
    double f_max_hz = 0.0;
    double cap_coeff = 0.0;
    double e_bd_j = 0.0;
    double t_th_s = 0.0;

    double t_cp(int local_rounds, double f_hz) const {
        return local_rounds * cycles / f_hz;
    }
    double e_cp(int local_rounds, double f_hz) const {
        return local_rounds * 0.5 * cap_coeff * cycles * f_hz * f_hz;
    }
    /// Slowest frequency that still meets the deadline at L rounds.
    double f_deadline(int local_rounds) const {
        return local_rounds * cycles / (t_th_s - t_up_s);
    }
    /// Fastest frequency that still meets the energy budget at L rounds.
    double f_budget(int local_rounds) const {
        const double head = e_bd_j - e_up_j;
        if (head <= 0.0) return 0.0;
        return std::sqrt(head / (0.5 * cap_coeff * cycles * local_rounds));
    }

    bool meets_constraints(int local_rounds, double f_hz) const {
        if (local_rounds < 1 || f_hz <= 0.0 || f_hz > f_max_hz) return false;
        if (success_indicator(t_cp(local_rounds, f_hz), t_up_s, t_th_s) != 1)
            return false;
        return e_cp(local_rounds, f_hz) + e_up_j <= e_bd_j;
    }

    /// Largest L meeting both budgets at the given frequency, capped at l_max.
    int max_feasible_rounds(int l_max, double f_hz) const {
        for (int l = l_max; l >= 1; --l)
            if (meets_constraints(l, f_hz)) return l;
        return 0;
    }
};

struct PlanningInstance {
    std::vector<ClientCosts> clients;
    int z = 0;                 // pRBs = number of clients to pick
    int max_local_rounds = 0;  // L
    double theta = 0.0;
    double penalty = 1.0;      // rho
    double alpha_b = 1.0;

    void validate() const {
        require(!clients.empty(), "PlanningInstance: no candidates");
        require(z >= 1 && z <= static_cast<int>(clients.size()),
                "PlanningInstance: need 1 <= Z <= number of candidates");
        require(max_local_rounds >= 1, "PlanningInstance: L must be >= 1");
        require(theta >= 0.0 && theta <= 1.0, "PlanningInstance: theta in [0,1]");
        require(penalty > 0.0, "PlanningInstance: penalty must be > 0");
        for (const auto& c : clients)
            require(c.alpha_u > 0.0 && c.cycles > 0.0 && c.f_max_hz > 0.0 &&
                        c.cap_coeff > 0.0 && c.e_bd_j > 0.0 && c.t_th_s > 0.0,
                    "PlanningInstance: client fields must be positive");
    }
};

struct RoundPlan {
    std::vector<int> selected;      // 0/1 per candidate
    std::vector<int> local_rounds;  // valid where selected
    std::vector<double> freq_hz;    // valid where selected
    double objective = 0.0;
    int iterations = 0;
    bool feasible = false;
    bool fallback = false;
    int descent_violations = 0;
    double binary_residual = 0.0;   // sum of s - s^2 at the relaxed optimum
    std::string note;
};

/// Selection / local-round / energy tradeoff of the plan: negative round
/// reward plus positive energy outlay, weighted by theta.
inline double utility(const RoundPlan& plan, const PlanningInstance& inst) {
    double u = 0.0;
    for (std::size_t i = 0; i < inst.clients.size(); ++i) {
        if (!plan.selected[i]) continue;
        const ClientCosts& c = inst.clients[i];
        const double e = c.e_cp(plan.local_rounds[i], plan.freq_hz[i]) + c.e_up_j;
        u += inst.alpha_b * c.alpha_u *
             (-inst.theta * plan.local_rounds[i] + (1.0 - inst.theta) * e);
    }
    return u;
}

/// Continuous iterate of the relaxed problem. `sel` is the relaxed indicator,
/// `rounds_times_sel` the product variable (the relaxed L_u * indicator), and
/// `freq_hz` the expansion frequency.
struct RelaxedIterate {
    std::vector<double> sel;
    std::vector<double> rounds;           // relaxed L_u
    std::vector<double> rounds_times_sel; // relaxed product
    std::vector<double> freq_hz;
};

namespace detail {

/// Variable layout per client: [sel, rounds, product, freq / f_max].
struct LpLayout {
    static int sel(int i) { return 4 * i; }
    static int rounds(int i) { return 4 * i + 1; }
    static int product(int i) { return 4 * i + 2; }
    static int freq(int i) { return 4 * i + 3; }
};

}  // namespace detail

/// One convexified subproblem around `it`: the product energy and time terms
/// are replaced by first-order expansions at (product, freq), the concave
/// binary penalty by its tangent at sel. Returns the LP plus the constant
/// objective offset dropped from the linear part.
inline std::pair<LinearProgram, double> linearize(const PlanningInstance& inst,
                                                  const RelaxedIterate& it,
                                                  double rho) {
    inst.validate();
    const int n = static_cast<int>(inst.clients.size());
    const int big_l = inst.max_local_rounds;
    require(static_cast<int>(it.sel.size()) == n &&
                static_cast<int>(it.rounds_times_sel.size()) == n &&
                static_cast<int>(it.freq_hz.size()) == n,
            "linearize: iterate size mismatch");

    LinearProgram lp;
    lp.num_vars = 4 * n;
    lp.c = Eigen::VectorXd::Zero(lp.num_vars);
    lp.lower = Eigen::VectorXd::Zero(lp.num_vars);
    lp.upper = Eigen::VectorXd::Zero(lp.num_vars);
    double offset = 0.0;

    using L = detail::LpLayout;
    for (int i = 0; i < n; ++i) {
        const ClientCosts& c = inst.clients[i];
        require(it.freq_hz[i] > 0.0, "linearize: expansion frequency must be > 0");
        const double f0 = it.freq_hz[i];
        const double m0 = it.rounds_times_sel[i];
        const double s0 = it.sel[i];
        const double fsc = c.f_max_hz;  // freq variable is in units of f_max
        const double w = inst.alpha_b * c.alpha_u;
        const double za = c.cap_coeff * c.cycles;

        lp.lower(L::sel(i)) = 0.0;
        lp.upper(L::sel(i)) = 1.0;
        lp.lower(L::rounds(i)) = 1.0;
        lp.upper(L::rounds(i)) = big_l;
        lp.lower(L::product(i)) = 0.0;
        lp.upper(L::product(i)) = big_l;
        lp.lower(L::freq(i)) = 0.0;
        lp.upper(L::freq(i)) = 1.0;

        // Objective: -theta * product + (1-theta) * (e_cp tangent + sel*e_up),
        // plus the penalty tangent rho * (1 - 2 s0) * sel.
        lp.c(L::product(i)) = w * (-inst.theta + (1.0 - inst.theta) * 0.5 * za * f0 * f0);
        lp.c(L::freq(i)) = w * (1.0 - inst.theta) * za * m0 * f0 * fsc;
        lp.c(L::sel(i)) = w * (1.0 - inst.theta) * c.e_up_j + rho * (1.0 - 2.0 * s0);
        offset += w * (1.0 - inst.theta) * (-za * m0 * f0 * f0) + rho * s0 * s0;

        auto coupling = [n](std::initializer_list<std::pair<int, double>> terms,
                            double b, const char* label) {
            LinearProgram::Row r;
            r.a = Eigen::VectorXd::Zero(4 * n);
            for (auto [idx, v] : terms) r.a(idx) = v;
            r.b = b;
            r.label = label;
            return r;
        };

        // product <= L * sel
        lp.rows.push_back(coupling({{L::product(i), 1.0}, {L::sel(i), -big_l}}, 0.0,
                                   "selection coupling"));
        // rounds - product >= 1 - sel
        lp.rows.push_back(coupling(
            {{L::rounds(i), -1.0}, {L::product(i), 1.0}, {L::sel(i), -1.0}}, -1.0,
            "selection coupling"));
        // rounds - product <= L * (1 - sel)
        lp.rows.push_back(coupling(
            {{L::rounds(i), 1.0}, {L::product(i), -1.0}, {L::sel(i), static_cast<double>(big_l)}},
            static_cast<double>(big_l), "selection coupling"));
        // product <= rounds + L * (1 - sel)
        lp.rows.push_back(coupling(
            {{L::product(i), 1.0}, {L::rounds(i), -1.0}, {L::sel(i), static_cast<double>(big_l)}},
            static_cast<double>(big_l), "selection coupling"));
        // Deadline, compute time linearized at (m0, f0):
        // (A/f0) product - (A m0 / f0^2) freq + sel (t_up - t_th) <= -A m0 / f0
        lp.rows.push_back(coupling(
            {{L::product(i), c.cycles / f0},
             {L::freq(i), -c.cycles * m0 / (f0 * f0) * fsc},
             {L::sel(i), c.t_up_s - c.t_th_s}},
            -c.cycles * m0 / f0, "C5 deadline"));
        // Energy, e_cp linearized at (m0, f0):
        // 0.5 za f0^2 product + za m0 f0 freq + sel (e_up - e_bd) <= za m0 f0^2
        lp.rows.push_back(coupling(
            {{L::product(i), 0.5 * za * f0 * f0},
             {L::freq(i), za * m0 * f0 * fsc},
             {L::sel(i), c.e_up_j - c.e_bd_j}},
            za * m0 * f0 * f0, "C6 energy"));
    }

    LinearProgram::Row c2;
    c2.a = Eigen::VectorXd::Zero(lp.num_vars);
    for (int i = 0; i < n; ++i) c2.a(L::sel(i)) = 1.0;
    c2.b = static_cast<double>(inst.z);
    c2.eq = true;
    c2.label = "C2 selection count";
    lp.rows.push_back(std::move(c2));

    return {std::move(lp), offset};
}

struct SolveParams {
    int max_iters = 50;
    double eps_rel = 1e-4;
    double rho = 1.0;
    int max_rho_doublings = 3;
    double binary_tol = 0.01;
};

namespace detail {

inline double recover_frequency(const ClientCosts& c, int local_rounds);

inline RelaxedIterate initial_iterate(const PlanningInstance& inst) {
    const int n = static_cast<int>(inst.clients.size());
    RelaxedIterate it;
    it.sel.assign(n, static_cast<double>(inst.z) / n);
    it.rounds.assign(n, 1.0);
    it.rounds_times_sel.resize(n);
    it.freq_hz.resize(n);
    for (int i = 0; i < n; ++i) {
        const ClientCosts& c = inst.clients[i];
        // Expand where good operating points live: the largest exactly
        // feasible round count at its slowest admissible frequency. At a
        // mid-range frequency the energy tangent can make extra rounds look
        // unprofitable and trap the iteration at one round per client.
        int l_star = 0;
        double f_star = 0.0;
        for (int l = inst.max_local_rounds; l >= 1; --l) {
            const double f = recover_frequency(c, l);
            if (f > 0.0) {
                l_star = l;
                f_star = f;
                break;
            }
        }
        if (l_star == 0) {
            // No feasible point at all; any positive frequency keeps the
            // tangents defined and recovery filters the client out later.
            l_star = 1;
            f_star = 0.5 * c.f_max_hz;
        }
        it.freq_hz[i] = f_star;
        it.rounds_times_sel[i] = l_star * it.sel[i];
        it.rounds[i] = std::max(1.0, it.rounds_times_sel[i] + 1.0 - it.sel[i]);
    }
    return it;
}

/// Deadline-tight frequency for L rounds, nudged upward until the exact
/// constraint checks pass. Returns 0 when no admissible frequency exists.
inline double recover_frequency(const ClientCosts& c, int local_rounds) {
    if (c.t_up_s >= c.t_th_s) return 0.0;
    double f = c.f_deadline(local_rounds);
    if (f > c.f_max_hz) return 0.0;
    for (int attempt = 0; attempt < 8; ++attempt) {
        if (f > 0.0 && f <= c.f_max_hz && c.meets_constraints(local_rounds, f))
            return f;
        f = std::nextafter(f * (1.0 + 1e-12), std::numeric_limits<double>::max());
        if (f > c.f_max_hz) return 0.0;
    }
    return 0.0;
}

}  // namespace detail

/// Clients that can finish at least one local round within both budgets.
inline std::vector<int> exactly_feasible_clients(const PlanningInstance& inst) {
    std::vector<int> out;
    for (int i = 0; i < static_cast<int>(inst.clients.size()); ++i) {
        if (detail::recover_frequency(inst.clients[i], 1) > 0.0) out.push_back(i);
    }
    return out;
}

/// Last-resort plan: the Z quickest uploaders at one local round and the
/// slowest admissible frequency. Infeasible when fewer than Z clients
/// qualify.
inline RoundPlan fallback_plan(const PlanningInstance& inst) {
    inst.validate();
    const int n = static_cast<int>(inst.clients.size());
    RoundPlan plan;
    plan.selected.assign(n, 0);
    plan.local_rounds.assign(n, 0);
    plan.freq_hz.assign(n, 0.0);
    plan.fallback = true;

    std::vector<int> pool = exactly_feasible_clients(inst);
    if (static_cast<int>(pool.size()) < inst.z) {
        plan.feasible = false;
        plan.note = "fewer than Z feasible clients";
        return plan;
    }
    std::sort(pool.begin(), pool.end(), [&](int a, int b) {
        if (inst.clients[a].t_up_s != inst.clients[b].t_up_s)
            return inst.clients[a].t_up_s < inst.clients[b].t_up_s;
        return a < b;
    });
    for (int r = 0; r < inst.z; ++r) {
        const int i = pool[r];
        plan.selected[i] = 1;
        plan.local_rounds[i] = 1;
        plan.freq_hz[i] = detail::recover_frequency(inst.clients[i], 1);
    }
    plan.feasible = true;
    plan.objective = utility(plan, inst);
    return plan;
}

/// Successive convexification of the relaxed selection problem followed by
/// integer recovery. Each iteration solves the tangent LP of linearize() and
/// re-expands at its optimum; the penalty weight doubles (restarting the
/// loop) while the indicators stay fractional.
inline RoundPlan sca_solve(const PlanningInstance& inst,
                           const SolveParams& params = {}) {
    inst.validate();
    const int n = static_cast<int>(inst.clients.size());
    using L = detail::LpLayout;

    RoundPlan plan;
    plan.selected.assign(n, 0);
    plan.local_rounds.assign(n, 0);
    plan.freq_hz.assign(n, 0.0);

    RelaxedIterate it;
    double rho = params.rho;
    bool lp_ok = false;
    std::string lp_fail_label;

    for (int attempt = 0; attempt <= params.max_rho_doublings; ++attempt) {
        it = detail::initial_iterate(inst);
        double prev_obj = std::numeric_limits<double>::infinity();
        lp_ok = false;

        for (int iter = 0; iter < params.max_iters; ++iter) {
            auto [lp, offset] = linearize(inst, it, rho);
            LpResult sol = solve_lp(lp);
            ++plan.iterations;
            if (!sol.feasible) {
                lp_fail_label = sol.infeasible_label;
                lp_ok = false;
                break;
            }
            lp_ok = true;
            const double obj = sol.objective + offset;
            if (obj > prev_obj + 1e-9) ++plan.descent_violations;

            for (int i = 0; i < n; ++i) {
                it.sel[i] = std::clamp(sol.x(L::sel(i)), 0.0, 1.0);
                it.rounds[i] = sol.x(L::rounds(i));
                it.rounds_times_sel[i] =
                    std::clamp(sol.x(L::product(i)), 0.0,
                               static_cast<double>(inst.max_local_rounds));
                // Keep the next expansion point away from zero frequency.
                it.freq_hz[i] = std::max(sol.x(L::freq(i)) * inst.clients[i].f_max_hz,
                                         1e-6 * inst.clients[i].f_max_hz);
            }

            if (std::isfinite(prev_obj) &&
                std::abs(obj - prev_obj) <= params.eps_rel * std::max(1.0, std::abs(prev_obj)))
                break;
            prev_obj = obj;
        }

        if (!lp_ok) break;
        plan.binary_residual = 0.0;
        for (double s : it.sel) plan.binary_residual += s - s * s;
        if (plan.binary_residual < params.binary_tol) break;
        rho *= 2.0;
    }

    // Integer recovery: keep exactly feasible clients, rank by relaxed
    // indicator, refit (L, f) per selected client.
    std::vector<int> pool = exactly_feasible_clients(inst);
    if (static_cast<int>(pool.size()) < inst.z) {
        plan.feasible = false;
        plan.note = "fewer than Z feasible clients";
        return plan;
    }
    if (!lp_ok) {
        // The relaxation failed; fall back to rank-by-upload-cost selection.
        RoundPlan fb = fallback_plan(inst);
        fb.iterations = plan.iterations;
        fb.note = "relaxed subproblem infeasible: " + lp_fail_label;
        return fb;
    }

    std::sort(pool.begin(), pool.end(), [&](int a, int b) {
        if (it.sel[a] != it.sel[b]) return it.sel[a] > it.sel[b];
        if (inst.clients[a].e_up_j != inst.clients[b].e_up_j)
            return inst.clients[a].e_up_j < inst.clients[b].e_up_j;
        return a < b;
    });

    for (int r = 0; r < inst.z; ++r) {
        const int i = pool[r];
        const ClientCosts& c = inst.clients[i];
        const double s = std::max(it.sel[i], 1e-12);
        int target = static_cast<int>(std::lround(it.rounds_times_sel[i] / s));
        target = std::clamp(target, 1, inst.max_local_rounds);

        int chosen_l = 0;
        double chosen_f = 0.0;
        for (int l = target; l >= 1; --l) {
            const double f = detail::recover_frequency(c, l);
            if (f > 0.0) {
                chosen_l = l;
                chosen_f = f;
                break;
            }
        }
        require(chosen_l >= 1, "sca_solve: recovery lost a feasible client");
        plan.selected[i] = 1;
        plan.local_rounds[i] = chosen_l;
        plan.freq_hz[i] = chosen_f;
    }

    plan.feasible = true;
    plan.objective = utility(plan, inst);
    return plan;
}

/// Exhaustive reference optimum on small instances: all Z-subsets, all
/// integer round counts, frequencies on a uniform grid of (0, f_max].
inline RoundPlan brute_force_oracle(const PlanningInstance& inst, int f_grid_size) {
    inst.validate();
    const int n = static_cast<int>(inst.clients.size());
    require(n <= 8, "brute_force_oracle: too many candidates");
    require(inst.z <= 4, "brute_force_oracle: Z too large");
    require(inst.max_local_rounds <= 5, "brute_force_oracle: L too large");
    require(f_grid_size >= 1 && f_grid_size <= 16,
            "brute_force_oracle: grid size out of range");

    RoundPlan best;
    best.selected.assign(n, 0);
    best.local_rounds.assign(n, 0);
    best.freq_hz.assign(n, 0.0);
    best.feasible = false;
    best.objective = std::numeric_limits<double>::infinity();

    // Per-client best contribution over the (L, f) grid; coupled only through
    // subset membership, so precompute then scan subsets.
    std::vector<double> contrib(n, std::numeric_limits<double>::infinity());
    std::vector<int> best_l(n, 0);
    std::vector<double> best_f(n, 0.0);
    for (int i = 0; i < n; ++i) {
        const ClientCosts& c = inst.clients[i];
        for (int l = 1; l <= inst.max_local_rounds; ++l) {
            for (int j = 1; j <= f_grid_size; ++j) {
                const double f = c.f_max_hz * j / f_grid_size;
                if (!c.meets_constraints(l, f)) continue;
                const double e = c.e_cp(l, f) + c.e_up_j;
                const double u = inst.alpha_b * c.alpha_u *
                                 (-inst.theta * l + (1.0 - inst.theta) * e);
                if (u < contrib[i]) {
                    contrib[i] = u;
                    best_l[i] = l;
                    best_f[i] = f;
                }
            }
        }
    }

    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::vector<int> subset;
    auto scan = [&](auto&& self, int start, int picked, double total) -> void {
        if (picked == inst.z) {
            if (total < best.objective) {
                best.objective = total;
                best.feasible = true;
                std::fill(best.selected.begin(), best.selected.end(), 0);
                std::fill(best.local_rounds.begin(), best.local_rounds.end(), 0);
                std::fill(best.freq_hz.begin(), best.freq_hz.end(), 0.0);
                for (int i : subset) {
                    best.selected[i] = 1;
                    best.local_rounds[i] = best_l[i];
                    best.freq_hz[i] = best_f[i];
                }
            }
            return;
        }
        for (int p = start; p < n; ++p) {
            if (!std::isfinite(contrib[p])) continue;
            subset.push_back(p);
            self(self, p + 1, picked + 1, total + contrib[p]);
            subset.pop_back();
        }
    };
    scan(scan, 0, 0, 0.0);

    if (!best.feasible) {
        best.objective = 0.0;
        best.note = "no feasible Z-subset on the grid";
    }
    return best;
}

}  // namespace hflsim

#endif  // HFLSIM_PLANNER_HPP
