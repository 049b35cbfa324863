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

#ifndef HFLSIM_CONFIG_HPP
#define HFLSIM_CONFIG_HPP

#include <cstdint>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "hflsim/common.hpp"

namespace hflsim {

enum class Algorithm { rawhfl, hfedavg_m1, hfedavg_m2, hfedavg_ub, top_popular };

inline std::string to_string(Algorithm a) {
    switch (a) {
        case Algorithm::rawhfl: return "rawhfl";
        case Algorithm::hfedavg_m1: return "hfedavg_m1";
        case Algorithm::hfedavg_m2: return "hfedavg_m2";
        case Algorithm::hfedavg_ub: return "hfedavg_ub";
        case Algorithm::top_popular: return "top_popular";
    }
    return "rawhfl";
}

inline Algorithm algorithm_from_string(const std::string& s) {
    if (s == "rawhfl") return Algorithm::rawhfl;
    if (s == "hfedavg_m1") return Algorithm::hfedavg_m1;
    if (s == "hfedavg_m2") return Algorithm::hfedavg_m2;
    if (s == "hfedavg_ub") return Algorithm::hfedavg_ub;
    if (s == "top_popular") return Algorithm::top_popular;
    throw invalid_argument_error("config: unknown algorithm \"" + s + "\"");
}

struct Range {
    double lo = 0.0;
    double hi = 0.0;
};

/// Full experiment description. Defaults follow the large-scale setup; the
/// shipped desk profile overrides the scale knobs for fast runs.
struct ExperimentConfig {
    // topology
    int num_bs = 4;
    int clients_per_bs = 12;
    double cell_radius_m = 400.0;
    double min_distance_m = 10.0;
    // catalog
    int num_genres = 16;
    int items_per_genre = 16;
    int feature_dim = 16;
    // request process
    double dirichlet_concentration = 0.3;
    Range activity{0.2, 0.8};
    Range similarity{0.1, 0.8};
    // learning
    int global_rounds = 300;      // K
    int edge_rounds = 4;          // E
    int max_local_rounds = 50;    // L
    double eta = 0.01;
    int minibatches = 10;         // n
    int batch_size = 32;          // n_bar
    int precision_bits = 32;      // phi
    // radio
    double carrier_ghz = 2.4;
    double prb_khz = 540.0;
    Range p_tx_dbm{20.0, 30.0};
    // compute
    Range cycles_per_bit{25.0, 40.0};
    Range f_max_ghz{1.2, 2.0};
    Range energy_budget_j{0.8, 1.5};
    double cap_coeff = 2e-28;
    double deadline_s = 150.0;
    // planner
    double theta = 0.4;
    double rho = 1.0;
    int planner_max_iters = 50;
    double planner_eps_rel = 1e-4;
    int prbs = 4;                 // Z, clients selected per BS
    // evaluation
    int test_requests = 200;
    int warmup_requests = 5;
    double smoothness = 1.0;      // beta_s for the bound diagnostics
    // run
    std::uint64_t seed = 1;
    Algorithm algorithm = Algorithm::rawhfl;

    int total_items() const { return num_genres * items_per_genre; }
    int num_clients() const { return num_bs * clients_per_bs; }

    void validate() const {
        auto check = [](bool ok, const char* field) {
            if (!ok)
                throw invalid_argument_error(std::string("config: invalid field ") + field);
        };
        check(num_bs >= 1, "topology.num_bs");
        check(clients_per_bs >= 1, "topology.clients_per_bs");
        check(cell_radius_m > min_distance_m && min_distance_m >= 10.0,
              "topology.cell_radius_m");
        check(num_genres >= 1, "catalog.genres");
        check(items_per_genre >= 1, "catalog.items_per_genre");
        check(total_items() >= 2, "catalog.items_per_genre");
        check(feature_dim >= 1, "catalog.feature_dim");
        check(dirichlet_concentration > 0.0, "request.dirichlet");
        check(activity.lo > 0.0 && activity.lo <= activity.hi && activity.hi <= 1.0,
              "request.activity");
        check(similarity.lo >= 0.0 && similarity.lo <= similarity.hi &&
                  similarity.hi <= 1.0,
              "request.similarity");
        check(global_rounds >= 1, "learning.global_rounds");
        check(edge_rounds >= 1, "learning.edge_rounds");
        check(max_local_rounds >= 1, "learning.max_local_rounds");
        check(eta > 0.0, "learning.eta");
        check(minibatches >= 1, "learning.minibatches");
        check(batch_size >= 1, "learning.batch_size");
        check(precision_bits >= 1, "learning.precision_bits");
        check(carrier_ghz > 0.0, "radio.carrier_ghz");
        check(prb_khz > 0.0, "radio.prb_khz");
        check(p_tx_dbm.lo <= p_tx_dbm.hi, "radio.p_tx_dbm");
        check(cycles_per_bit.lo > 0.0 && cycles_per_bit.lo <= cycles_per_bit.hi,
              "compute.cycles_per_bit");
        check(f_max_ghz.lo > 0.0 && f_max_ghz.lo <= f_max_ghz.hi, "compute.f_max_ghz");
        check(energy_budget_j.lo > 0.0 && energy_budget_j.lo <= energy_budget_j.hi,
              "compute.energy_budget_j");
        check(cap_coeff > 0.0, "compute.cap_coeff");
        check(deadline_s > 0.0, "compute.deadline_s");
        check(theta >= 0.0 && theta <= 1.0, "planner.theta");
        check(rho > 0.0, "planner.rho");
        check(planner_max_iters >= 1, "planner.max_iters");
        check(planner_eps_rel > 0.0, "planner.eps_rel");
        check(prbs >= 1 && prbs <= clients_per_bs, "planner.prbs");
        check(test_requests >= 1, "eval.test_requests");
        check(warmup_requests >= 2, "eval.warmup_requests");
        check(smoothness > 0.0, "eval.smoothness");
    }
};

namespace detail {

inline Range range_from_json(const nlohmann::json& j, const char* field) {
    require(j.is_array() && j.size() == 2,
            std::string("config: field ") + field + " must be [lo, hi]");
    return Range{j[0].get<double>(), j[1].get<double>()};
}

template <typename T>
void maybe(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

inline void maybe_range(const nlohmann::json& j, const char* key, Range& out) {
    if (j.contains(key)) out = range_from_json(j.at(key), key);
}

}  // namespace detail

/// Parses a config object; absent keys keep their defaults so profiles can be
/// sparse.
inline ExperimentConfig config_from_json(const nlohmann::json& j) {
    using detail::maybe;
    using detail::maybe_range;
    ExperimentConfig c;

    if (j.contains("topology")) {
        const auto& t = j.at("topology");
        maybe(t, "num_bs", c.num_bs);
        maybe(t, "clients_per_bs", c.clients_per_bs);
        maybe(t, "cell_radius_m", c.cell_radius_m);
        maybe(t, "min_distance_m", c.min_distance_m);
    }
    if (j.contains("catalog")) {
        const auto& t = j.at("catalog");
        maybe(t, "genres", c.num_genres);
        maybe(t, "items_per_genre", c.items_per_genre);
        maybe(t, "feature_dim", c.feature_dim);
    }
    if (j.contains("request")) {
        const auto& t = j.at("request");
        maybe(t, "dirichlet", c.dirichlet_concentration);
        maybe_range(t, "activity", c.activity);
        maybe_range(t, "similarity", c.similarity);
    }
    if (j.contains("learning")) {
        const auto& t = j.at("learning");
        maybe(t, "global_rounds", c.global_rounds);
        maybe(t, "edge_rounds", c.edge_rounds);
        maybe(t, "max_local_rounds", c.max_local_rounds);
        maybe(t, "eta", c.eta);
        maybe(t, "minibatches", c.minibatches);
        maybe(t, "batch_size", c.batch_size);
        maybe(t, "precision_bits", c.precision_bits);
    }
    if (j.contains("radio")) {
        const auto& t = j.at("radio");
        maybe(t, "carrier_ghz", c.carrier_ghz);
        maybe(t, "prb_khz", c.prb_khz);
        maybe_range(t, "p_tx_dbm", c.p_tx_dbm);
    }
    if (j.contains("compute")) {
        const auto& t = j.at("compute");
        maybe_range(t, "cycles_per_bit", c.cycles_per_bit);
        maybe_range(t, "f_max_ghz", c.f_max_ghz);
        maybe_range(t, "energy_budget_j", c.energy_budget_j);
        maybe(t, "cap_coeff", c.cap_coeff);
        maybe(t, "deadline_s", c.deadline_s);
    }
    if (j.contains("planner")) {
        const auto& t = j.at("planner");
        maybe(t, "theta", c.theta);
        maybe(t, "rho", c.rho);
        maybe(t, "max_iters", c.planner_max_iters);
        maybe(t, "eps_rel", c.planner_eps_rel);
        maybe(t, "prbs", c.prbs);
    }
    if (j.contains("eval")) {
        const auto& t = j.at("eval");
        maybe(t, "test_requests", c.test_requests);
        maybe(t, "warmup_requests", c.warmup_requests);
        maybe(t, "smoothness", c.smoothness);
    }
    maybe(j, "seed", c.seed);
    if (j.contains("algorithm"))
        c.algorithm = algorithm_from_string(j.at("algorithm").get<std::string>());

    c.validate();
    return c;
}

inline nlohmann::json config_to_json(const ExperimentConfig& c) {
    nlohmann::json j;
    j["topology"] = {{"num_bs", c.num_bs},
                     {"clients_per_bs", c.clients_per_bs},
                     {"cell_radius_m", c.cell_radius_m},
                     {"min_distance_m", c.min_distance_m}};
    j["catalog"] = {{"genres", c.num_genres},
                    {"items_per_genre", c.items_per_genre},
                    {"feature_dim", c.feature_dim}};
    j["request"] = {{"dirichlet", c.dirichlet_concentration},
                    {"activity", {c.activity.lo, c.activity.hi}},
                    {"similarity", {c.similarity.lo, c.similarity.hi}}};
    j["learning"] = {{"global_rounds", c.global_rounds},
                     {"edge_rounds", c.edge_rounds},
                     {"max_local_rounds", c.max_local_rounds},
                     {"eta", c.eta},
                     {"minibatches", c.minibatches},
                     {"batch_size", c.batch_size},
                     {"precision_bits", c.precision_bits}};
    j["radio"] = {{"carrier_ghz", c.carrier_ghz},
                  {"prb_khz", c.prb_khz},
                  {"p_tx_dbm", {c.p_tx_dbm.lo, c.p_tx_dbm.hi}}};
    j["compute"] = {{"cycles_per_bit", {c.cycles_per_bit.lo, c.cycles_per_bit.hi}},
                    {"f_max_ghz", {c.f_max_ghz.lo, c.f_max_ghz.hi}},
                    {"energy_budget_j", {c.energy_budget_j.lo, c.energy_budget_j.hi}},
                    {"cap_coeff", c.cap_coeff},
                    {"deadline_s", c.deadline_s}};
    j["planner"] = {{"theta", c.theta},
                    {"rho", c.rho},
                    {"max_iters", c.planner_max_iters},
                    {"eps_rel", c.planner_eps_rel},
                    {"prbs", c.prbs}};
    j["eval"] = {{"test_requests", c.test_requests},
                 {"warmup_requests", c.warmup_requests},
                 {"smoothness", c.smoothness}};
    j["seed"] = c.seed;
    j["algorithm"] = to_string(c.algorithm);
    return j;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), "config: cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw invalid_argument_error("config: parse error in " + path + ": " + e.what());
    }
    return config_from_json(j);
}

}  // namespace hflsim

#endif  // HFLSIM_CONFIG_HPP
