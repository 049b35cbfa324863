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

#ifndef HFLSIM_BOUND_EVAL_HPP
#define HFLSIM_BOUND_EVAL_HPP

#include <cmath>
#include <utility>
#include <vector>

#include "hflsim/common.hpp"

namespace hflsim {

/// Admissibility of the step size for the convergence diagnostic:
/// eta < 1 / (2 sqrt(15) beta E L) and 1 - beta eta E L - 24 (beta eta E L)^2 >= 0.
/// The margin is the smaller slack of the two conditions.
inline std::pair<bool, double> check_step_size(double eta, double smoothness,
                                               int edge_rounds, int local_rounds) {
    require(eta >= 0.0 && smoothness > 0.0 && edge_rounds >= 1 && local_rounds >= 1,
            "check_step_size: invalid inputs");
    const double bel = smoothness * eta * edge_rounds * local_rounds;
    const double cap = 1.0 / (2.0 * std::sqrt(15.0) * smoothness * edge_rounds *
                              local_rounds);
    const double slack1 = cap - eta;            // needs > 0
    const double slack2 = 1.0 - bel - 24.0 * bel * bel;  // needs >= 0
    const bool ok = (slack1 > 0.0) && (slack2 >= 0.0);
    return {ok, std::min(slack1, slack2)};
}

/// One (edge round, BS) cell of a selection: the BS weight and the selected
/// clients' (weight, local rounds) pairs.
struct EdgeSelection {
    double alpha_b = 0.0;
    std::vector<std::pair<double, int>> clients;  // (alpha_u, L_u)
};

/// Weighted local-round volume of one global round, summed over all
/// (edge round, BS) cells.
inline double omega_k(const std::vector<EdgeSelection>& cells) {
    double omega = 0.0;
    bool any = false;
    for (const auto& cell : cells) {
        for (const auto& [alpha_u, rounds] : cell.clients) {
            omega += cell.alpha_b * alpha_u * rounds;
            any = true;
        }
    }
    require(any, "omega_k: no client selected in any edge round");
    return omega;
}

/// Per-global-round statistics feeding the bound.
struct RoundBoundStats {
    double loss_before = 0.0;   // f(w^k) on the fixed evaluation data
    double loss_after = 0.0;    // f(w^{k+1}) on the same data
    double omega = 0.0;
    double sum_ab2_au2 = 0.0;   // sum_e sum_b alpha_b^2 sum_u alpha_u^2
    double sum_ab_au2 = 0.0;    // sum_e sum_b alpha_b sum_u alpha_u^2
    // Failure-weighted gradient masses: sum over (e, b, u) of
    // alpha_b alpha_u^p (1/p_sc - 1) sum_l ||g(w^l)||^2, with p = 1 and 2.
    double wireless_s1 = 0.0;
    double wireless_s2 = 0.0;
};

struct BoundParams {
    double smoothness = 0.0;    // beta_s
    double eta = 0.0;
    int edge_rounds = 0;        // E
    int max_local_rounds = 0;   // L
    double sgd_variance = 0.0;  // sigma^2
    double intra_divergence_sq = 0.0;  // eps_0^2 (clients vs BS tier)
    double inter_divergence_sq = 0.0;  // eps_1^2 (BS vs global tier)
    std::vector<RoundBoundStats> rounds;
};

struct BoundBreakdown {
    double loss_delta = 0.0;
    double sgd_variance = 0.0;
    double intra_divergence = 0.0;
    double inter_divergence = 0.0;
    double wireless = 0.0;
    double total = 0.0;
};

/// Evaluates the five additive terms of the convergence upper bound over the
/// recorded rounds. In uniform mode (`uniform_local_rounds`) every client is
/// assumed to run the full L local rounds and the round volume collapses to
/// E * L; otherwise the recorded per-round omega is used.
inline BoundBreakdown evaluate_bound(const BoundParams& p,
                                     bool uniform_local_rounds = false) {
    require(!p.rounds.empty(), "evaluate_bound: no rounds recorded");
    require(p.smoothness > 0.0 && p.eta > 0.0 && p.edge_rounds >= 1 &&
                p.max_local_rounds >= 1,
            "evaluate_bound: invalid scalar parameters");
    require(p.sgd_variance >= 0.0 && p.intra_divergence_sq >= 0.0 &&
                p.inter_divergence_sq >= 0.0,
            "evaluate_bound: variances must be nonnegative");

    const double beta = p.smoothness;
    const double eta = p.eta;
    const double e_rounds = static_cast<double>(p.edge_rounds);
    const double big_l = static_cast<double>(p.max_local_rounds);
    const double big_k = static_cast<double>(p.rounds.size());

    double t_loss = 0.0, t_sigma = 0.0, t_eps0 = 0.0, t_eps1 = 0.0, t_wireless = 0.0;
    const double bel3 = 180.0 * e_rounds * e_rounds * beta * beta * beta * eta *
                        eta * eta * big_l * big_l * big_l;

    for (const RoundBoundStats& r : p.rounds) {
        const double omega = uniform_local_rounds ? e_rounds * big_l : r.omega;
        require(omega > 0.0, "evaluate_bound: nonpositive round volume");
        const double inv = 1.0 / omega;

        t_loss += (r.loss_before - r.loss_after) * inv;
        t_sigma += inv * (r.sum_ab2_au2 + 3.0 * beta * eta * e_rounds * big_l +
                          bel3 + 4.0 * e_rounds * beta * eta * big_l * r.sum_ab_au2);
        t_eps0 += inv;
        t_eps1 += inv;
        t_wireless += inv * ((e_rounds + 3.0 * beta * eta + bel3) * r.wireless_s1 +
                             4.0 * beta * eta * e_rounds * r.wireless_s2);
    }

    BoundBreakdown out;
    out.loss_delta = (2.0 / (eta * big_k)) * t_loss;
    out.sgd_variance = (2.0 * beta * eta * big_l * p.sgd_variance / big_k) * t_sigma;
    out.intra_divergence = (18.0 * e_rounds * beta * beta * p.intra_divergence_sq *
                            eta * eta * big_l * big_l * big_l / big_k) *
                           (1.0 + 60.0 * big_l * beta * beta * eta * eta * e_rounds *
                                      e_rounds) *
                           t_eps0;
    out.inter_divergence = (60.0 * beta * beta * p.inter_divergence_sq * eta * eta *
                            big_l * big_l * big_l * e_rounds * e_rounds * e_rounds /
                            big_k) *
                           t_eps1;
    out.wireless = (2.0 * beta * eta * big_l / big_k) * t_wireless;
    out.total = out.loss_delta + out.sgd_variance + out.intra_divergence +
                out.inter_divergence + out.wireless;
    return out;
}

/// Accumulates one selected client's contribution to the failure-weighted
/// gradient masses of a round. `p_sc` must be in (0, 1].
inline void accumulate_wireless(RoundBoundStats& stats, double alpha_b,
                                double alpha_u, double p_sc,
                                const std::vector<double>& sq_grad_norms) {
    require(p_sc > 0.0 && p_sc <= 1.0, "accumulate_wireless: p_sc must be in (0,1]");
    double mass = 0.0;
    for (double g : sq_grad_norms) mass += g;
    const double fail = 1.0 / p_sc - 1.0;
    stats.wireless_s1 += alpha_b * alpha_u * fail * mass;
    stats.wireless_s2 += alpha_b * alpha_u * alpha_u * fail * mass;
}

}  // namespace hflsim

#endif  // HFLSIM_BOUND_EVAL_HPP
