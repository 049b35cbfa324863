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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "hflsim/content_model.hpp"

using namespace hflsim;

namespace {

UserState make_user(const ContentCatalog& cat, double activity,
                    double similarity_prob) {
    UserState u;
    u.activity = activity;
    u.similarity_prob = similarity_prob;
    u.genre_prefs.assign(cat.num_genres, 1.0 / cat.num_genres);
    return u;
}

// Reference argmax over the genre of `ref`, written independently of the
// library helper so the two can disagree.
int brute_force_most_similar(const ContentCatalog& cat, int ref) {
    const int g = cat.genre_of(ref);
    int best = -1;
    double best_sim = -2.0;
    for (int c = g * cat.items_per_genre; c < (g + 1) * cat.items_per_genre; ++c) {
        if (c == ref) continue;
        double dot = 0.0;
        for (int i = 0; i < cat.feature_dim; ++i)
            dot += cat.features[ref][i] * cat.features[c][i];
        if (dot > best_sim + 1e-15) {
            best_sim = dot;
            best = c;
        }
    }
    return best;
}

}  // namespace

TEST_CASE("catalog has expected shape and unit-norm features") {
    const ContentCatalog cat = build_catalog(8, 32, 16, 42);
    REQUIRE(cat.total_items() == 256);
    REQUIRE(cat.features.size() == 256);
    for (const auto& f : cat.features) {
        REQUIRE(f.size() == 16);
        const double norm = std::sqrt(
            std::inner_product(f.begin(), f.end(), f.begin(), 0.0));
        REQUIRE_THAT(norm, Catch::Matchers::WithinAbs(1.0, 1e-12));
    }
}

TEST_CASE("catalog genre ranks are permutations of the genre id range") {
    const ContentCatalog cat = build_catalog(8, 32, 16, 42);
    for (int g = 0; g < 8; ++g) {
        std::set<int> seen(cat.genre_rank[g].begin(), cat.genre_rank[g].end());
        REQUIRE(seen.size() == 32);
        REQUIRE(*seen.begin() == g * 32);
        REQUIRE(*seen.rbegin() == g * 32 + 31);
    }
    std::set<int> global(cat.global_rank.begin(), cat.global_rank.end());
    REQUIRE(global.size() == 256);
    // Top of the global order is the per-genre leader of each genre in turn.
    for (int g = 0; g < 8; ++g) REQUIRE(cat.global_rank[g] == cat.genre_rank[g][0]);
}

TEST_CASE("catalog construction is deterministic in the seed") {
    const ContentCatalog a = build_catalog(4, 8, 8, 7);
    const ContentCatalog b = build_catalog(4, 8, 8, 7);
    const ContentCatalog c = build_catalog(4, 8, 8, 8);
    REQUIRE(a.features == b.features);
    REQUIRE(a.genre_rank == b.genre_rank);
    REQUIRE(a.global_rank == b.global_rank);
    REQUIRE(a.features != c.features);
}

TEST_CASE("degenerate single-item catalog") {
    const ContentCatalog cat = build_catalog(1, 1, 4, 3);
    REQUIRE(cat.total_items() == 1);
    REQUIRE(cat.global_rank == std::vector<int>{0});
    REQUIRE(cat.genre_of(0) == 0);
}

TEST_CASE("catalog rejects non-positive dimensions") {
    REQUIRE_THROWS_AS(build_catalog(0, 4, 4, 1), invalid_argument_error);
    REQUIRE_THROWS_AS(build_catalog(4, 0, 4, 1), invalid_argument_error);
    REQUIRE_THROWS_AS(build_catalog(4, 4, 0, 1), invalid_argument_error);
}

TEST_CASE("genre preferences form a probability vector") {
    auto rng = make_rng(11, StreamTag::user_profile);
    for (int trial = 0; trial < 100; ++trial) {
        const auto p = sample_genre_preferences(0.3, 8, rng);
        REQUIRE(p.size() == 8);
        double sum = 0.0;
        for (double x : p) {
            REQUIRE(x >= 0.0);
            sum += x;
        }
        REQUIRE_THAT(sum, Catch::Matchers::WithinAbs(1.0, 1e-12));
    }
}

TEST_CASE("huge concentration gives a near-uniform preference vector") {
    const auto p = sample_genre_preferences(1e6, 8, std::uint64_t{5});
    for (double x : p) REQUIRE_THAT(x, Catch::Matchers::WithinAbs(0.125, 1e-3));
}

TEST_CASE("preference components are symmetric in expectation") {
    auto rng = make_rng(13, StreamTag::user_profile);
    std::vector<double> mean(8, 0.0);
    const int draws = 10000;
    for (int t = 0; t < draws; ++t) {
        const auto p = sample_genre_preferences(0.3, 8, rng);
        for (int g = 0; g < 8; ++g) mean[g] += p[g];
    }
    for (int g = 0; g < 8; ++g)
        REQUIRE_THAT(mean[g] / draws, Catch::Matchers::WithinAbs(0.125, 0.01));
}

TEST_CASE("cosine similarity reference values") {
    REQUIRE_THAT(cosine_similarity({1, 0}, {1, 0}),
                 Catch::Matchers::WithinAbs(1.0, 1e-12));
    REQUIRE_THAT(cosine_similarity({1, 0}, {0, 1}),
                 Catch::Matchers::WithinAbs(0.0, 1e-12));
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    REQUIRE_THAT(cosine_similarity({inv_sqrt2, inv_sqrt2}, {1, 0}),
                 Catch::Matchers::WithinAbs(0.7071, 1e-4));
    REQUIRE_THAT(cosine_similarity({inv_sqrt2, inv_sqrt2}, {1, 0}),
                 Catch::Matchers::WithinAbs(inv_sqrt2, 1e-6));
    REQUIRE_THROWS_AS(cosine_similarity({1, 0}, {1, 0, 0}), invalid_argument_error);
    REQUIRE_THROWS_AS(cosine_similarity({0, 0}, {1, 0}), invalid_argument_error);
}

TEST_CASE("zero activity never requests, full activity always does") {
    const ContentCatalog cat = build_catalog(4, 4, 8, 21);
    auto rng = make_rng(1, StreamTag::requests, 0);

    UserState idle = make_user(cat, 0.0, 0.5);
    for (int t = 0; t < 50; ++t) REQUIRE_FALSE(next_request(idle, cat, rng).has_value());
    REQUIRE(idle.raw_dataset.empty());

    UserState busy = make_user(cat, 1.0, 0.5);
    for (int t = 0; t < 50; ++t) REQUIRE(next_request(busy, cat, rng).has_value());
}

TEST_CASE("active fraction tracks the activity probability") {
    const ContentCatalog cat = build_catalog(4, 4, 8, 21);
    auto rng = make_rng(2, StreamTag::requests, 0);
    UserState u = make_user(cat, 0.5, 0.5);
    int active = 0;
    const int slots = 10000;
    for (int t = 0; t < slots; ++t)
        if (next_request(u, cat, rng).has_value()) ++active;
    const double frac = static_cast<double>(active) / slots;
    REQUIRE(frac >= 0.48);
    REQUIRE(frac <= 0.52);
}

TEST_CASE("first request picks the leader of the preferred genre") {
    const ContentCatalog cat = build_catalog(4, 4, 8, 33);
    for (int g = 0; g < 4; ++g) {
        UserState u = make_user(cat, 1.0, 0.5);
        u.genre_prefs.assign(4, 0.0);
        u.genre_prefs[g] = 1.0;
        auto rng = make_rng(3, StreamTag::requests, g);
        const int item = next_request_active(u, cat, rng);
        REQUIRE(item == cat.genre_rank[g][0]);
        REQUIRE(u.current_genre == g);
        REQUIRE(u.last_request == item);
    }
}

TEST_CASE("similarity branch matches a brute-force argmax") {
    const ContentCatalog cat = build_catalog(2, 6, 8, 55);
    for (int ref = 0; ref < cat.total_items(); ++ref) {
        UserState u = make_user(cat, 1.0, 1.0);
        u.last_request = ref;
        u.current_genre = cat.genre_of(ref);
        auto rng = make_rng(4, StreamTag::requests, ref);
        const int item = next_request_active(u, cat, rng);
        REQUIRE(item == brute_force_most_similar(cat, ref));
        REQUIRE(cat.genre_of(item) == cat.genre_of(ref));
        REQUIRE(item != ref);
    }
}

TEST_CASE("similarity ties break toward the lowest item id") {
    ContentCatalog cat;
    cat.num_genres = 1;
    cat.items_per_genre = 4;
    cat.feature_dim = 2;
    // Items 1 and 2 are identical, both closest to item 0.
    cat.features = {{1, 0}, {0, 1}, {0, 1}, {-1, 0}};
    cat.genre_rank = {{0, 1, 2, 3}};
    cat.global_rank = {0, 1, 2, 3};

    UserState u;
    u.activity = 1.0;
    u.similarity_prob = 1.0;
    u.genre_prefs = {1.0};
    u.last_request = 0;
    u.current_genre = 0;
    auto rng = make_rng(5, StreamTag::requests, 0);
    REQUIRE(next_request_active(u, cat, rng) == 1);
}

TEST_CASE("single-item genre repeats the same request") {
    const ContentCatalog cat = build_catalog(3, 1, 4, 66);
    UserState u = make_user(cat, 1.0, 1.0);
    auto rng = make_rng(6, StreamTag::requests, 0);
    const int first = next_request_active(u, cat, rng);
    for (int t = 0; t < 10; ++t) REQUIRE(next_request_active(u, cat, rng) == first);
}

TEST_CASE("zero similarity always switches genre") {
    const ContentCatalog cat = build_catalog(4, 4, 8, 77);
    UserState u = make_user(cat, 1.0, 0.0);
    auto rng = make_rng(7, StreamTag::requests, 0);
    int prev_genre = cat.genre_of(next_request_active(u, cat, rng));
    for (int t = 0; t < 500; ++t) {
        const int g = cat.genre_of(next_request_active(u, cat, rng));
        REQUIRE(g != prev_genre);
        prev_genre = g;
    }
}

TEST_CASE("genre switch renormalizes the remaining preference mass") {
    const ContentCatalog cat = build_catalog(3, 2, 4, 88);
    UserState u = make_user(cat, 1.0, 0.0);
    u.genre_prefs = {0.5, 0.5, 0.0};
    u.current_genre = 0;
    u.last_request = cat.genre_rank[0][0];
    auto rng = make_rng(8, StreamTag::requests, 0);
    for (int t = 0; t < 200; ++t) {
        u.current_genre = 0;
        u.last_request = cat.genre_rank[0][0];
        REQUIRE(cat.genre_of(next_request_active(u, cat, rng)) == 1);
    }
}

TEST_CASE("genre switch with all mass on the current genre picks uniformly") {
    const ContentCatalog cat = build_catalog(3, 2, 4, 99);
    UserState u = make_user(cat, 1.0, 0.0);
    u.genre_prefs = {1.0, 0.0, 0.0};
    auto rng = make_rng(9, StreamTag::requests, 0);
    std::set<int> seen;
    for (int t = 0; t < 200; ++t) {
        u.current_genre = 0;
        u.last_request = cat.genre_rank[0][0];
        const int g = cat.genre_of(next_request_active(u, cat, rng));
        REQUIRE(g != 0);
        seen.insert(g);
    }
    REQUIRE(seen == std::set<int>{1, 2});
}

TEST_CASE("single-genre catalog stays in genre zero") {
    const ContentCatalog cat = build_catalog(1, 5, 4, 12);
    UserState u = make_user(cat, 1.0, 0.0);
    auto rng = make_rng(10, StreamTag::requests, 0);
    for (int t = 0; t < 50; ++t)
        REQUIRE(cat.genre_of(next_request_active(u, cat, rng)) == 0);
}

TEST_CASE("request sequences are deterministic in the seed") {
    const ContentCatalog cat = build_catalog(4, 4, 8, 20);
    std::vector<int> runs[2];
    for (int rep = 0; rep < 2; ++rep) {
        UserState u = make_user(cat, 0.7, 0.4);
        auto rng = make_rng(123, StreamTag::requests, 5);
        for (int t = 0; t < 300; ++t) {
            const auto r = next_request(u, cat, rng);
            runs[rep].push_back(r ? *r : -1);
        }
    }
    REQUIRE(runs[0] == runs[1]);
}

TEST_CASE("raw dataset appends requests in order and skips idle slots") {
    UserState u;
    update_raw_dataset(u, 4, 0);
    update_raw_dataset(u, std::nullopt, 1);
    update_raw_dataset(u, 7, 2);
    update_raw_dataset(u, 4, 3);
    REQUIRE(u.raw_dataset.size() == 3);
    REQUIRE(u.raw_dataset[0].item == 4);
    REQUIRE(u.raw_dataset[0].slot == 0);
    REQUIRE(u.raw_dataset[1].item == 7);
    REQUIRE(u.raw_dataset[1].slot == 2);
    REQUIRE(u.raw_dataset[2].item == 4);
    REQUIRE(u.raw_dataset[2].slot == 3);
}

TEST_CASE("processed dataset pairs consecutive requests") {
    UserState u;
    for (int i = 0; i < 51; ++i) update_raw_dataset(u, i % 5, i);
    const auto samples = build_processed_dataset(u);
    REQUIRE(samples.size() == 50);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        REQUIRE(samples[i].prev_item == static_cast<int>(i % 5));
        REQUIRE(samples[i].next_item == static_cast<int>((i + 1) % 5));
    }
}

TEST_CASE("processed dataset is empty below two raw requests") {
    UserState u;
    REQUIRE(build_processed_dataset(u).empty());
    update_raw_dataset(u, 3, 0);
    REQUIRE(build_processed_dataset(u).empty());
    update_raw_dataset(u, 1, 1);
    REQUIRE(build_processed_dataset(u).size() == 1);
}
