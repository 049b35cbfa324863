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

#ifndef HFLSIM_RADIO_MODEL_HPP
#define HFLSIM_RADIO_MODEL_HPP

#include <cmath>
#include <cstdint>
#include <random>

#include "hflsim/common.hpp"

namespace hflsim {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s
inline constexpr double kBsHeightM = 25.0;
inline constexpr double kUtHeightM = 1.5;
inline constexpr double kShadowSigmaLosDb = 4.0;
inline constexpr double kShadowSigmaNlosDb = 6.0;

/// Thermal noise power spectral density at -174 dBm/Hz, in W/Hz.
inline double noise_density_w_per_hz() { return std::pow(10.0, -20.4); }

inline double db_to_lin(double db) { return std::pow(10.0, db / 10.0); }
inline double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

/// Urban-macro LOS probability for UE heights up to 13 m (3GPP TR 38.901
/// Table 7.4.2-1).
inline double uma_los_probability(double distance_2d_m) {
    require(distance_2d_m > 0.0, "uma_los_probability: distance must be > 0");
    if (distance_2d_m <= 18.0) return 1.0;
    const double r = 18.0 / distance_2d_m;
    return r + std::exp(-distance_2d_m / 63.0) * (1.0 - r);
}

/// UMa breakpoint distance with the effective environment height fixed at
/// 1 m, valid for UE heights below 13 m.
inline double uma_breakpoint_distance_m(double carrier_hz) {
    const double h_e = 1.0;
    return 4.0 * (kBsHeightM - h_e) * (kUtHeightM - h_e) * carrier_hz / kSpeedOfLight;
}

/// UMa path loss in dB (3GPP TR 38.901 Table 7.4.1-1) at the default BS and
/// UE heights. `distance_m` is the 2D ground distance.
inline double pathloss_db(double distance_m, double carrier_ghz, bool los) {
    require(distance_m >= 10.0 && distance_m <= 5000.0,
            "pathloss_db: distance outside the 10..5000 m validity range");
    require(carrier_ghz > 0.0, "pathloss_db: carrier must be > 0");

    const double dh = kBsHeightM - kUtHeightM;
    const double d3d = std::sqrt(distance_m * distance_m + dh * dh);
    const double d_bp = uma_breakpoint_distance_m(carrier_ghz * 1e9);

    double pl_los;
    if (distance_m <= d_bp) {
        pl_los = 28.0 + 22.0 * std::log10(d3d) + 20.0 * std::log10(carrier_ghz);
    } else {
        pl_los = 28.0 + 40.0 * std::log10(d3d) + 20.0 * std::log10(carrier_ghz) -
                 9.0 * std::log10(d_bp * d_bp + dh * dh);
    }
    if (los) return pl_los;

    const double pl_nlos = 13.54 + 39.08 * std::log10(d3d) +
                           20.0 * std::log10(carrier_ghz) -
                           0.6 * (kUtHeightM - 1.5);
    return std::max(pl_los, pl_nlos);
}

/// Frozen per-(client, edge-round) channel snapshot. Gains are linear power
/// factors; noise is a density multiplied by the bandwidth at use sites.
struct LinkState {
    double distance_m = 0.0;
    double pathloss_lin = 0.0;        // beta
    double shadowing_lin = 0.0;       // zeta (log-Normal)
    double p_tx_w = 0.0;
    double prb_hz = 0.0;              // omega
    double noise_w_per_hz = 0.0;
    bool los = false;

    void validate() const {
        require(pathloss_lin > 0.0 && shadowing_lin > 0.0 && p_tx_w > 0.0 &&
                    prb_hz > 0.0 && noise_w_per_hz > 0.0,
                "LinkState: gains and powers must be strictly positive");
    }
};

inline double snr(const LinkState& link) {
    link.validate();
    return link.pathloss_lin * link.shadowing_lin * link.p_tx_w /
           (link.prb_hz * link.noise_w_per_hz);
}

inline double upload_time_s(double payload_bits, double bandwidth_hz, double snr_lin) {
    require(payload_bits > 0.0, "upload_time: payload must be > 0");
    require(bandwidth_hz > 0.0, "upload_time: bandwidth must be > 0");
    require(snr_lin > 0.0, "upload_time: SNR must be > 0");
    return payload_bits / (bandwidth_hz * std::log2(1.0 + snr_lin));
}

inline double upload_energy_j(double payload_bits, double bandwidth_hz,
                              double snr_lin, double p_tx_w) {
    return p_tx_w * upload_time_s(payload_bits, bandwidth_hz, snr_lin);
}

/// Gradient payload in bits: d parameters, each quantized to `precision_bits`
/// plus one bookkeeping bit.
inline double payload_bits(std::int64_t model_dim, int precision_bits) {
    require(model_dim > 0 && precision_bits > 0, "payload_bits: invalid inputs");
    return static_cast<double>(model_dim) * (precision_bits + 1);
}

struct ComputeProfile {
    double cycles_per_bit = 0.0;   // c_u
    double sample_bits = 0.0;      // D_u
    int minibatches = 0;           // n
    int batch_size = 0;            // n_bar
    double f_max_hz = 0.0;
    double cap_coeff = 0.0;        // effective chip capacitance
    double energy_budget_j = 0.0;
    double deadline_s = 0.0;

    void validate() const {
        require(cycles_per_bit > 0.0 && sample_bits > 0.0 && minibatches > 0 &&
                    batch_size > 0 && f_max_hz > 0.0 && cap_coeff > 0.0 &&
                    energy_budget_j > 0.0 && deadline_s > 0.0,
                "ComputeProfile: all fields must be strictly positive");
    }
};

/// CPU cycles consumed by one local training round.
inline double cycles_per_round(const ComputeProfile& p) {
    return static_cast<double>(p.minibatches) * p.batch_size * p.cycles_per_bit *
           p.sample_bits;
}

inline double compute_time_s(int local_rounds, const ComputeProfile& p, double f_hz) {
    p.validate();
    require(local_rounds >= 1, "compute_time: local rounds must be >= 1");
    require(f_hz > 0.0, "compute_time: frequency must be > 0");
    require(f_hz <= p.f_max_hz, "compute_time: frequency exceeds f_max");
    return local_rounds * cycles_per_round(p) / f_hz;
}

inline double compute_energy_j(int local_rounds, const ComputeProfile& p, double f_hz) {
    p.validate();
    require(local_rounds >= 1, "compute_energy: local rounds must be >= 1");
    require(f_hz > 0.0, "compute_energy: frequency must be > 0");
    require(f_hz <= p.f_max_hz, "compute_energy: frequency exceeds f_max");
    return local_rounds * 0.5 * p.cap_coeff * cycles_per_round(p) * f_hz * f_hz;
}

inline int success_indicator(double t_cp, double t_up, double t_th) {
    require(t_cp >= 0.0 && t_up >= 0.0 && t_th >= 0.0,
            "success_indicator: times must be nonnegative");
    return (t_cp + t_up <= t_th) ? 1 : 0;
}

/// Draws the LOS condition and shadowing for one (client, edge round) and
/// freezes them into a LinkState. Consumes exactly two rng variates.
inline LinkState sample_link(double distance_m, double carrier_ghz, double p_tx_w,
                             double prb_hz, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const bool los = unit(rng) < uma_los_probability(distance_m);
    const double sigma = los ? kShadowSigmaLosDb : kShadowSigmaNlosDb;
    std::normal_distribution<double> shadow_db(0.0, sigma);

    LinkState link;
    link.distance_m = distance_m;
    link.los = los;
    link.pathloss_lin = db_to_lin(-pathloss_db(distance_m, carrier_ghz, los));
    link.shadowing_lin = db_to_lin(shadow_db(rng));
    link.p_tx_w = p_tx_w;
    link.prb_hz = prb_hz;
    link.noise_w_per_hz = noise_density_w_per_hz();
    return link;
}

}  // namespace hflsim

#endif  // HFLSIM_RADIO_MODEL_HPP
