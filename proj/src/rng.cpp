#include "microjudge/rng.hpp"

#include "microjudge/util.hpp"

namespace mj {

std::uint64_t Rng::uniform_int(std::uint64_t n) {
    require(n > 0, "uniform_int: n must be positive");
    // rejection sampling over the top of the 64-bit range removes modulo bias
    std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
        v = gen_();
    } while (v >= limit);
    return v % n;
}

std::size_t Rng::categorical(const std::vector<double>& weights) {
    require(!weights.empty(), "categorical: empty weights");
    double total = 0.0;
    for (double w : weights) {
        require(w >= 0.0, "categorical: negative weight");
        total += w;
    }
    require(total > 0.0, "categorical: all weights zero");
    double u = uniform01() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); i++) {
        acc += weights[i];
        if (u < acc) return i;
    }
    return weights.size() - 1; // fp fallthrough lands on the last positive bucket
}

} // namespace mj
