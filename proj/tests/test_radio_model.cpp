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
#include <random>

#include "hflsim/radio_model.hpp"

using namespace hflsim;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Independent transcription of the urban-macro pathloss tables so the header
// implementation has something to disagree with.
double oracle_uma_db(double d2d, double fc_ghz, bool los) {
    const double h_bs = 25.0, h_ut = 1.5, h_e = 1.0;
    const double d3d = std::hypot(d2d, h_bs - h_ut);
    const double d_bp = 4.0 * (h_bs - h_e) * (h_ut - h_e) * (fc_ghz * 1e9) / 299792458.0;
    double pl_los;
    if (d2d <= d_bp) {
        pl_los = 28.0 + 22.0 * std::log10(d3d) + 20.0 * std::log10(fc_ghz);
    } else {
        const double dh = h_bs - h_ut;
        pl_los = 28.0 + 40.0 * std::log10(d3d) + 20.0 * std::log10(fc_ghz) -
                 9.0 * std::log10(d_bp * d_bp + dh * dh);
    }
    if (los) return pl_los;
    const double pl_nlos =
        13.54 + 39.08 * std::log10(d3d) + 20.0 * std::log10(fc_ghz) - 0.6 * (h_ut - 1.5);
    return std::max(pl_los, pl_nlos);
}

LinkState unit_link() {
    LinkState link;
    link.distance_m = 100.0;
    link.pathloss_lin = 1.0;
    link.shadowing_lin = 1.0;
    link.p_tx_w = 1.0;
    link.prb_hz = 1.0;
    link.noise_w_per_hz = 1.0;
    return link;
}

}  // namespace

TEST_CASE("pathloss matches an independent table transcription") {
    REQUIRE_THAT(pathloss_db(100.0, 2.4, true),
                 WithinAbs(oracle_uma_db(100.0, 2.4, true), 1e-9));
    for (double d : {10.0, 50.0, 150.0, 383.0, 385.0, 700.0, 1500.0, 5000.0}) {
        for (double f : {2.4, 28.0}) {
            REQUIRE_THAT(pathloss_db(d, f, true), WithinAbs(oracle_uma_db(d, f, true), 1e-9));
            REQUIRE_THAT(pathloss_db(d, f, false), WithinAbs(oracle_uma_db(d, f, false), 1e-9));
        }
    }
}

TEST_CASE("pathloss grows with distance") {
    REQUIRE(pathloss_db(400.0, 2.4, true) > pathloss_db(100.0, 2.4, true));
    REQUIRE(pathloss_db(400.0, 2.4, false) > pathloss_db(100.0, 2.4, false));
}

TEST_CASE("NLOS pathloss dominates LOS on a distance grid") {
    for (int i = 0; i < 10; ++i) {
        const double d = 10.0 + i * (4990.0 / 9.0);
        REQUIRE(pathloss_db(d, 2.4, false) >= pathloss_db(d, 2.4, true));
    }
}

TEST_CASE("pathloss rejects out-of-range distances") {
    REQUIRE_THROWS_AS(pathloss_db(9.0, 2.4, true), invalid_argument_error);
    REQUIRE_THROWS_AS(pathloss_db(5001.0, 2.4, true), invalid_argument_error);
}

TEST_CASE("breakpoint distance at 2.4 GHz") {
    const double expected = 4.0 * 24.0 * 0.5 * 2.4e9 / 299792458.0;
    REQUIRE_THAT(uma_breakpoint_distance_m(2.4e9), WithinAbs(expected, 1e-9));
    REQUIRE_THAT(uma_breakpoint_distance_m(2.4e9), WithinAbs(384.27, 0.01));
}

TEST_CASE("LOS probability is one up close and decays with distance") {
    REQUIRE(uma_los_probability(10.0) == 1.0);
    REQUIRE(uma_los_probability(18.0) == 1.0);
    const double p100 = uma_los_probability(100.0);
    REQUIRE_THAT(p100, WithinAbs(18.0 / 100.0 + std::exp(-100.0 / 63.0) * 0.82, 1e-12));
    double prev = 1.0;
    for (double d = 20.0; d <= 2000.0; d += 20.0) {
        const double p = uma_los_probability(d);
        REQUIRE(p <= prev);
        REQUIRE(p > 0.0);
        prev = p;
    }
}

TEST_CASE("snr unit cancellation and linearity") {
    LinkState link = unit_link();
    REQUIRE_THAT(snr(link), WithinAbs(1.0, 1e-15));
    link.p_tx_w = 2.0;
    REQUIRE_THAT(snr(link), WithinAbs(2.0, 1e-15));
}

TEST_CASE("snr scalar arithmetic case") {
    LinkState link;
    link.distance_m = 250.0;
    link.pathloss_lin = 1e-10;
    link.shadowing_lin = 1.5;
    link.p_tx_w = 0.1;
    link.prb_hz = 540e3;
    link.noise_w_per_hz = std::pow(10.0, -20.4);
    const double expected = 1e-10 * 1.5 * 0.1 / (540e3 * std::pow(10.0, -20.4));
    REQUIRE_THAT(snr(link), WithinRel(expected, 1e-12));
}

TEST_CASE("snr rejects non-positive fields") {
    LinkState link = unit_link();
    link.pathloss_lin = 0.0;
    REQUIRE_THROWS_AS(snr(link), invalid_argument_error);
}

TEST_CASE("upload time closed-form points") {
    REQUIRE_THAT(upload_time_s(540e3, 540e3, 1.0), WithinAbs(1.0, 1e-12));
    REQUIRE_THAT(upload_time_s(2.0 * 540e3, 540e3, 3.0), WithinAbs(1.0, 1e-12));
    REQUIRE_THROWS_AS(upload_time_s(1.0, 1.0, 0.0), invalid_argument_error);
}

TEST_CASE("upload time decreases with snr") {
    double prev = upload_time_s(1e6, 540e3, 0.5);
    for (double g = 1.0; g < 100.0; g *= 2.0) {
        const double t = upload_time_s(1e6, 540e3, g);
        REQUIRE(t < prev);
        prev = t;
    }
}

TEST_CASE("upload energy is power times time") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0.1, 10.0);
    for (int i = 0; i < 20; ++i) {
        const double s = u(rng) * 1e5, w = u(rng) * 1e5, g = u(rng), p = u(rng);
        REQUIRE_THAT(upload_energy_j(s, w, g, p), WithinRel(p * upload_time_s(s, w, g), 1e-12));
        REQUIRE_THAT(upload_energy_j(2.0 * s, w, g, p),
                     WithinRel(2.0 * upload_energy_j(s, w, g, p), 1e-12));
    }
}

TEST_CASE("payload size counts one extra bit per parameter") {
    REQUIRE(payload_bits(256, 32) == 256.0 * 33.0);
    // One-hot feature plus label at 32-bit precision.
    REQUIRE(payload_bits(328704, 32) == 328704.0 * 33.0);
}

TEST_CASE("compute cost closed forms at full-scale constants") {
    ComputeProfile p;
    p.cycles_per_bit = 30.0;
    p.sample_bits = (256.0 + 1.0) * 32.0;  // 8224
    p.minibatches = 10;
    p.batch_size = 32;
    p.f_max_hz = 2.0e9;
    p.cap_coeff = 2e-28;
    p.energy_budget_j = 1.0;
    p.deadline_s = 150.0;

    const double cycles = 10.0 * 32.0 * 30.0 * 8224.0;
    REQUIRE_THAT(cycles_per_round(p), WithinRel(cycles, 1e-12));
    REQUIRE_THAT(cycles_per_round(p), WithinRel(78950400.0, 1e-12));
    REQUIRE_THAT(compute_time_s(1, p, 1.5e9), WithinRel(cycles / 1.5e9, 1e-12));
    REQUIRE_THAT(compute_energy_j(1, p, 1.5e9),
                 WithinRel(0.5 * 2e-28 * cycles * 1.5e9 * 1.5e9, 1e-12));
}

TEST_CASE("compute cost scales linearly in rounds and with frequency") {
    ComputeProfile p;
    p.cycles_per_bit = 25.0;
    p.sample_bits = 1056.0;
    p.minibatches = 10;
    p.batch_size = 32;
    p.f_max_hz = 2.0e9;
    p.cap_coeff = 2e-28;
    p.energy_budget_j = 1.0;
    p.deadline_s = 150.0;

    REQUIRE_THAT(compute_time_s(2, p, 1e9), WithinRel(2.0 * compute_time_s(1, p, 1e9), 1e-12));
    REQUIRE_THAT(compute_energy_j(2, p, 1e9),
                 WithinRel(2.0 * compute_energy_j(1, p, 1e9), 1e-12));
    // Doubling f halves the time and quadruples the energy (f^2 law).
    REQUIRE_THAT(compute_time_s(1, p, 2e9), WithinRel(0.5 * compute_time_s(1, p, 1e9), 1e-12));
    REQUIRE_THAT(compute_energy_j(1, p, 2e9),
                 WithinRel(4.0 * compute_energy_j(1, p, 1e9), 1e-12));
    REQUIRE_THROWS_AS(compute_time_s(1, p, 3e9), invalid_argument_error);
    REQUIRE_THROWS_AS(compute_energy_j(0, p, 1e9), invalid_argument_error);
}

TEST_CASE("success indicator includes the deadline boundary") {
    REQUIRE(success_indicator(1.0, 2.0, 3.0) == 1);
    REQUIRE(success_indicator(0.0, 3.0, 3.0) == 1);
    REQUIRE(success_indicator(0.1, 3.0, 3.0) == 0);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    for (int i = 0; i < 100; ++i) {
        const double a = u(rng), b = u(rng), th = u(rng);
        REQUIRE(success_indicator(a, b, th) == ((a + b <= th) ? 1 : 0));
    }
}

TEST_CASE("sampled links are reproducible and respect the shadow spread") {
    auto rng1 = make_rng(31, StreamTag::channel, 3, 17);
    auto rng2 = make_rng(31, StreamTag::channel, 3, 17);
    const LinkState a = sample_link(120.0, 2.4, 0.5, 540e3, rng1);
    const LinkState b = sample_link(120.0, 2.4, 0.5, 540e3, rng2);
    REQUIRE(a.pathloss_lin == b.pathloss_lin);
    REQUIRE(a.shadowing_lin == b.shadowing_lin);
    REQUIRE(a.los == b.los);
    REQUIRE(a.noise_w_per_hz == noise_density_w_per_hz());
    // The frozen pathloss equals the deterministic formula for the drawn state.
    REQUIRE_THAT(a.pathloss_lin,
                 WithinRel(db_to_lin(-pathloss_db(120.0, 2.4, a.los)), 1e-12));
}

TEST_CASE("close-in links are always line of sight") {
    auto rng = make_rng(32, StreamTag::channel, 0, 0);
    for (int i = 0; i < 20; ++i) {
        const LinkState link = sample_link(15.0, 2.4, 0.5, 540e3, rng);
        REQUIRE(link.los);
    }
}
