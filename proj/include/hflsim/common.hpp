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

#ifndef HFLSIM_COMMON_HPP
#define HFLSIM_COMMON_HPP

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace hflsim {

/// Thrown on violated preconditions and invalid configuration values.
class invalid_argument_error : public std::invalid_argument {
  public:
    explicit invalid_argument_error(const std::string& what)
        : std::invalid_argument(what) {}
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw invalid_argument_error(msg);
}

namespace detail {

// splitmix64 finalizer; used to derive independent seeds from a master seed.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace detail

/// Derives a stream seed from a master seed and up to three stream tags.
/// Streams for different tags are decorrelated, so per-entity generators can
/// be created in any order (or in parallel) with identical results.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t h = detail::mix64(master);
    h = detail::mix64(h ^ a);
    h = detail::mix64(h ^ b);
    h = detail::mix64(h ^ c);
    return h;
}

/// Stream tags used throughout the simulator so that every random draw has a
/// fixed, documented origin.
enum class StreamTag : std::uint64_t {
    catalog = 1,
    user_profile = 2,
    requests = 3,
    test_requests = 4,
    placement = 5,
    channel = 6,
    model_init = 7,
    minibatch = 8,
    bound_probe = 9,
};

inline std::mt19937_64 make_rng(std::uint64_t master, StreamTag tag,
                                std::uint64_t a = 0, std::uint64_t b = 0) {
    return std::mt19937_64(
        derive_seed(master, static_cast<std::uint64_t>(tag), a, b));
}

}  // namespace hflsim

#endif  // HFLSIM_COMMON_HPP
