#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <string_view>

namespace icstb {

constexpr std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline double u64_to_unit_double(std::uint64_t x) {
    // 53 mantissa bits -> [0,1). Identical on every IEEE-754 platform.
    return static_cast<double>(x >> 11) * 0x1.0p-53;
}

// Named substream of the run's root seed. Streams with equal (seed, label)
// replay identically; distinct labels are decorrelated via hashing. Components
// draw only from their own stream so that adding traffic elsewhere (e.g. an
// attack) cannot shift benign draws.
class RngStream {
public:
    RngStream() = default;
    RngStream(std::uint64_t root_seed, std::string_view label)
        : engine_(splitmix64(root_seed ^ fnv1a64(label))) {}

    std::uint64_t next_u64() { return engine_(); }

    double uniform01() { return u64_to_unit_double(next_u64()); }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    bool bernoulli(double p) { return uniform01() < p; }

    double normal(double mean = 0.0, double sigma = 1.0) {
        // Box-Muller, one value per draw pair (second discarded for simplicity;
        // reproducibility matters more than throughput here).
        double u1 = uniform01();
        double u2 = uniform01();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        double r = std::sqrt(-2.0 * std::log(u1));
        return mean + sigma * r * std::cos(6.283185307179586476925287 * u2);
    }

private:
    std::mt19937_64 engine_{0};
};

// Order-independent draw: a pure function of (seed, label, key, index). Used
// where the set of consumers or their query order varies between scenarios
// (e.g. per-link shadowing per coherence interval).
inline double keyed_normal(std::uint64_t root_seed, std::string_view label,
                           std::uint64_t key, std::int64_t index,
                           double mean, double sigma) {
    std::uint64_t h = splitmix64(root_seed ^ fnv1a64(label));
    h = splitmix64(h ^ key);
    h = splitmix64(h ^ static_cast<std::uint64_t>(index));
    double u1 = u64_to_unit_double(splitmix64(h));
    double u2 = u64_to_unit_double(splitmix64(h ^ 0xa5a5a5a5a5a5a5a5ULL));
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    double r = std::sqrt(-2.0 * std::log(u1));
    return mean + sigma * r * std::cos(6.283185307179586476925287 * u2);
}

// Registry of named substreams, created lazily. Creation order does not matter
// because seeding depends only on (root_seed, label).
class RngHub {
public:
    explicit RngHub(std::uint64_t root_seed = 0) : root_seed_(root_seed) {}

    std::uint64_t root_seed() const { return root_seed_; }

    RngStream& stream(const std::string& label) {
        auto it = streams_.find(label);
        if (it == streams_.end())
            it = streams_.emplace(label, RngStream(root_seed_, label)).first;
        return it->second;
    }

private:
    std::uint64_t root_seed_;
    std::map<std::string, RngStream> streams_;
};

} // namespace icstb
