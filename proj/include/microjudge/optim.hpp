#pragma once
// first/second-moment adaptive optimizer with optional decoupled weight decay
// and the cosine learning-rate schedule shared by all trainers.

#include <cstdint>
#include <vector>

namespace mj {

// lr * 0.5 * (1 + cos(pi * step / total)); equals lr at step 0 and 0 at step == total
double cosine_lr(std::uint64_t step, std::uint64_t total, double lr);

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0; // decoupled (applied to params, not the gradient)
};

struct Adam {
    AdamConfig cfg;
    std::vector<double> m, v;
    std::uint64_t t = 0;

    Adam() = default;
    Adam(std::size_t n, AdamConfig c) : cfg(c), m(n, 0.0), v(n, 0.0) {}

    void step(std::vector<double>& params, const std::vector<double>& grad, double lr);
};

} // namespace mj
