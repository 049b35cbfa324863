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

#ifndef HFLSIM_BASELINES_HPP
#define HFLSIM_BASELINES_HPP

#include <algorithm>
#include <vector>

#include "hflsim/content_model.hpp"
#include "hflsim/planner.hpp"

namespace hflsim {

namespace detail {

inline RoundPlan empty_plan(int n, const char* note) {
    RoundPlan plan;
    plan.selected.assign(n, 0);
    plan.local_rounds.assign(n, 0);
    plan.freq_hz.assign(n, 0.0);
    plan.feasible = false;
    plan.note = note;
    return plan;
}

/// Largest round count this client can finish at any admissible frequency.
/// The deadline-tight frequency minimizes compute energy, so feasibility at
/// it decides feasibility outright.
inline int best_feasible_rounds(const ClientCosts& c, int l_max) {
    for (int l = l_max; l >= 1; --l)
        if (recover_frequency(c, l) > 0.0) return l;
    return 0;
}

/// Common-L plan over the given participants: everyone runs the minimum of
/// the per-client feasible maxima, each at their own slowest admissible
/// frequency. Fails when any participant cannot complete a single round.
inline RoundPlan common_rounds_plan(const PlanningInstance& inst,
                                    const std::vector<int>& participants) {
    const int n = static_cast<int>(inst.clients.size());
    int common = inst.max_local_rounds;
    for (int i : participants)
        common = std::min(common,
                          best_feasible_rounds(inst.clients[i], inst.max_local_rounds));
    if (participants.empty() || common < 1)
        return empty_plan(n, "no common feasible round count");

    RoundPlan plan;
    plan.selected.assign(n, 0);
    plan.local_rounds.assign(n, 0);
    plan.freq_hz.assign(n, 0.0);
    for (int i : participants) {
        plan.selected[i] = 1;
        plan.local_rounds[i] = common;
        plan.freq_hz[i] = recover_frequency(inst.clients[i], common);
    }
    plan.feasible = true;
    plan.objective = utility(plan, inst);
    return plan;
}

}  // namespace detail

/// Every client participates with the same round count: the minimum over all
/// clients of the largest feasible L. One overloaded client fails the whole
/// BS round.
inline RoundPlan hfedavg_m1_plan(const PlanningInstance& inst) {
    inst.validate();
    std::vector<int> all(inst.clients.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    for (int i : all) {
        if (detail::best_feasible_rounds(inst.clients[i], inst.max_local_rounds) < 1)
            return detail::empty_plan(static_cast<int>(all.size()),
                                      "straggler blocks the round");
    }
    return detail::common_rounds_plan(inst, all);
}

/// As M1, but clients that cannot finish even one round are dropped before
/// taking the minimum. Fails only when everyone is dropped.
inline RoundPlan hfedavg_m2_plan(const PlanningInstance& inst) {
    inst.validate();
    std::vector<int> keep;
    for (std::size_t i = 0; i < inst.clients.size(); ++i) {
        if (detail::best_feasible_rounds(inst.clients[i], inst.max_local_rounds) >= 1)
            keep.push_back(static_cast<int>(i));
    }
    if (keep.empty())
        return detail::empty_plan(static_cast<int>(inst.clients.size()),
                                  "all clients are stragglers");
    return detail::common_rounds_plan(inst, keep);
}

/// Unconstrained upper baseline: everyone runs the full L at full frequency;
/// deadlines and budgets are ignored but energy is still metered.
inline RoundPlan hfedavg_ub_plan(const PlanningInstance& inst) {
    inst.validate();
    const int n = static_cast<int>(inst.clients.size());
    RoundPlan plan;
    plan.selected.assign(n, 1);
    plan.local_rounds.assign(n, inst.max_local_rounds);
    plan.freq_hz.resize(n);
    for (int i = 0; i < n; ++i) plan.freq_hz[i] = inst.clients[i].f_max_hz;
    plan.feasible = true;
    plan.objective = utility(plan, inst);
    return plan;
}

/// Fixed popularity predictor: the globally top-M items. Accuracy on a
/// dataset is the fraction of labels inside that set.
inline double top_popular_accuracy(const ContentCatalog& catalog,
                                   const std::vector<ProcessedSample>& dataset,
                                   int top_m) {
    require(top_m >= 1, "top_popular_accuracy: M must be >= 1");
    require(!dataset.empty(), "top_popular_accuracy: empty dataset");
    const int m = std::min<int>(top_m, catalog.total_items());
    std::vector<char> in_set(catalog.total_items(), 0);
    for (int r = 0; r < m; ++r) in_set[catalog.global_rank[r]] = 1;
    int hit = 0;
    for (const ProcessedSample& s : dataset) hit += in_set[s.next_item];
    return static_cast<double>(hit) / static_cast<double>(dataset.size());
}

}  // namespace hflsim

#endif  // HFLSIM_BASELINES_HPP
