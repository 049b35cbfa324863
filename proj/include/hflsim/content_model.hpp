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

#ifndef HFLSIM_CONTENT_MODEL_HPP
#define HFLSIM_CONTENT_MODEL_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include "hflsim/common.hpp"

namespace hflsim {

/// Fixed catalog of C = G * C_bar items. Item ids are contiguous per genre:
/// genre g owns ids [g*C_bar, (g+1)*C_bar). Each item carries a unit-norm
/// feature vector so cosine similarity reduces to a dot product.
struct ContentCatalog {
    int num_genres = 0;       // G
    int items_per_genre = 0;  // C_bar
    int feature_dim = 0;
    std::vector<std::vector<double>> features;  // size C, each unit norm
    // genre_rank[g][r] = item id with popularity rank r inside genre g
    // (rank 0 = most popular).
    std::vector<std::vector<int>> genre_rank;
    // Global popularity order: round-robin over genres by in-genre rank, so
    // the top G items globally are the G genre leaders.
    std::vector<int> global_rank;

    int total_items() const { return num_genres * items_per_genre; }
    int genre_of(int item) const { return item / items_per_genre; }
};

/// A raw request as stored in the append-only per-user history.
struct RawRequest {
    int item = 0;
    int slot = 0;
};

/// Training sample derived from two consecutive requests: the feature is the
/// one-hot encoding of the previous item (stored as its index), the label is
/// the next item.
struct ProcessedSample {
    int prev_item = 0;  // one-hot index into [0, C)
    int next_item = 0;  // class label in [0, C)
};

struct UserState {
    int user_id = 0;
    int bs_id = 0;
    double activity = 0.0;         // p_ac in [0,1]
    std::vector<double> genre_prefs;
    double similarity_prob = 0.0;  // upsilon_u in [0,1]
    int current_genre = -1;
    std::optional<int> last_request;
    std::vector<RawRequest> raw_dataset;
};

inline double cosine_similarity(const std::vector<double>& f1,
                                const std::vector<double>& f2) {
    require(f1.size() == f2.size(), "cosine_similarity: dimension mismatch");
    require(!f1.empty(), "cosine_similarity: empty vectors");
    double dot = 0.0, n1 = 0.0, n2 = 0.0;
    for (std::size_t i = 0; i < f1.size(); ++i) {
        dot += f1[i] * f2[i];
        n1 += f1[i] * f1[i];
        n2 += f2[i] * f2[i];
    }
    require(n1 > 0.0 && n2 > 0.0, "cosine_similarity: zero vector");
    return dot / (std::sqrt(n1) * std::sqrt(n2));
}

inline ContentCatalog build_catalog(int num_genres, int items_per_genre,
                                    int feature_dim, std::uint64_t seed) {
    require(num_genres >= 1, "build_catalog: num_genres must be >= 1");
    require(items_per_genre >= 1, "build_catalog: items_per_genre must be >= 1");
    require(feature_dim >= 1, "build_catalog: feature_dim must be >= 1");

    ContentCatalog cat;
    cat.num_genres = num_genres;
    cat.items_per_genre = items_per_genre;
    cat.feature_dim = feature_dim;

    auto rng = make_rng(seed, StreamTag::catalog);
    std::normal_distribution<double> normal(0.0, 1.0);

    const int total = num_genres * items_per_genre;
    cat.features.resize(total);
    for (int c = 0; c < total; ++c) {
        std::vector<double> f(feature_dim);
        double norm_sq = 0.0;
        do {
            norm_sq = 0.0;
            for (double& x : f) {
                x = normal(rng);
                norm_sq += x * x;
            }
        } while (norm_sq == 0.0);
        const double inv = 1.0 / std::sqrt(norm_sq);
        for (double& x : f) x *= inv;
        cat.features[c] = std::move(f);
    }

    cat.genre_rank.resize(num_genres);
    for (int g = 0; g < num_genres; ++g) {
        std::vector<int>& rank = cat.genre_rank[g];
        rank.resize(items_per_genre);
        std::iota(rank.begin(), rank.end(), g * items_per_genre);
        std::shuffle(rank.begin(), rank.end(), rng);
    }

    cat.global_rank.reserve(total);
    for (int r = 0; r < items_per_genre; ++r)
        for (int g = 0; g < num_genres; ++g)
            cat.global_rank.push_back(cat.genre_rank[g][r]);

    return cat;
}

inline std::vector<double> sample_genre_preferences(double concentration,
                                                    int num_genres,
                                                    std::mt19937_64& rng) {
    require(concentration > 0.0,
            "sample_genre_preferences: concentration must be > 0");
    require(num_genres >= 1, "sample_genre_preferences: num_genres must be >= 1");
    std::gamma_distribution<double> gamma(concentration, 1.0);
    std::vector<double> p(num_genres);
    double sum = 0.0;
    do {
        sum = 0.0;
        for (double& x : p) {
            x = gamma(rng);
            sum += x;
        }
    } while (sum <= 0.0);
    for (double& x : p) x /= sum;
    return p;
}

inline std::vector<double> sample_genre_preferences(double concentration,
                                                    int num_genres,
                                                    std::uint64_t seed) {
    auto rng = make_rng(seed, StreamTag::user_profile);
    return sample_genre_preferences(concentration, num_genres, rng);
}

namespace detail {

inline int sample_discrete(const std::vector<double>& weights, double total,
                           std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double u = unit(rng) * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        acc += weights[i];
        if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(weights.size()) - 1;
}

/// Most similar item to `ref` within its genre, excluding `ref` itself.
/// Ties break toward the lowest item id. A single-item genre returns `ref`.
inline int most_similar_in_genre(const ContentCatalog& cat, int ref) {
    const int g = cat.genre_of(ref);
    const int begin = g * cat.items_per_genre;
    const int end = begin + cat.items_per_genre;
    int best = -1;
    double best_sim = -2.0;
    for (int c = begin; c < end; ++c) {
        if (c == ref) continue;
        const double sim = cosine_similarity(cat.features[ref], cat.features[c]);
        if (sim > best_sim) {
            best_sim = sim;
            best = c;
        }
    }
    return best < 0 ? ref : best;
}

}  // namespace detail

/// One forced-active request draw (no activity coin). Updates the user's
/// current genre and last request.
inline int next_request_active(UserState& user, const ContentCatalog& cat,
                               std::mt19937_64& rng) {
    require(static_cast<int>(user.genre_prefs.size()) == cat.num_genres,
            "next_request: genre_prefs not initialized for this catalog");
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    int item;
    if (!user.last_request.has_value()) {
        const int g = detail::sample_discrete(user.genre_prefs, 1.0, rng);
        user.current_genre = g;
        item = cat.genre_rank[g][0];
    } else if (unit(rng) < user.similarity_prob || cat.num_genres == 1) {
        item = detail::most_similar_in_genre(cat, *user.last_request);
    } else {
        // Switch genre: resample from the preference vector with the current
        // genre excluded and the remaining mass renormalized.
        std::vector<double> w = user.genre_prefs;
        w[user.current_genre] = 0.0;
        double total = std::accumulate(w.begin(), w.end(), 0.0);
        int g;
        if (total > 0.0) {
            g = detail::sample_discrete(w, total, rng);
        } else {
            // All preference mass sat on the current genre; fall back to a
            // uniform choice among the others.
            std::vector<double> uni(cat.num_genres, 1.0);
            uni[user.current_genre] = 0.0;
            g = detail::sample_discrete(uni, static_cast<double>(cat.num_genres - 1), rng);
        }
        user.current_genre = g;
        item = cat.genre_rank[g][0];
    }
    user.last_request = item;
    return item;
}

/// One slot of the request process: inactive with probability 1 - p_ac,
/// otherwise the popularity/preference draw of next_request_active.
inline std::optional<int> next_request(UserState& user, const ContentCatalog& cat,
                                       std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    if (unit(rng) >= user.activity) return std::nullopt;
    return next_request_active(user, cat, rng);
}

/// Appends the requested item to the raw dataset; a nullopt request (inactive
/// slot) leaves the dataset untouched.
inline void update_raw_dataset(UserState& user, const std::optional<int>& request,
                               int slot) {
    if (request.has_value()) user.raw_dataset.push_back({*request, slot});
}

/// Sliding window over the raw history: each consecutive request pair (r_i,
/// r_{i+1}) becomes one (one-hot(r_i) -> r_{i+1}) sample. Fewer than two raw
/// entries yield an empty dataset.
inline std::vector<ProcessedSample> build_processed_dataset(const UserState& user) {
    std::vector<ProcessedSample> out;
    if (user.raw_dataset.size() < 2) return out;
    out.reserve(user.raw_dataset.size() - 1);
    for (std::size_t i = 0; i + 1 < user.raw_dataset.size(); ++i)
        out.push_back({user.raw_dataset[i].item, user.raw_dataset[i + 1].item});
    return out;
}

}  // namespace hflsim

#endif  // HFLSIM_CONTENT_MODEL_HPP
