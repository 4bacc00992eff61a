#pragma once
// deterministic randomness. mt19937_64 gives a portable bit stream, but the
// standard <random> distributions are implementation-defined, so all draws
// go through the hand-rolled helpers below. independent streams are derived
// from (seed, tag...) with splitmix64 so every pipeline stage and every
// training step gets its own stream without any shared mutable state.

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace mj {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// fold a seed with a list of stream tags; order-sensitive by design
inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) {
    std::uint64_t s = splitmix64(seed);
    for (std::uint64_t t : tags) s = splitmix64(s ^ splitmix64(t));
    return s;
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // unbiased integer in [0, n)
    std::uint64_t uniform_int(std::uint64_t n);

    // uniform in [0, 1), 53-bit resolution
    double uniform01() { return double(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    bool bernoulli(double p) { return uniform01() < p; }

    // index drawn from an unnormalized weight vector
    std::size_t categorical(const std::vector<double>& weights);

private:
    std::mt19937_64 gen_;
};

} // namespace mj
