#include "microjudge/optim.hpp"

#include <cmath>

#include "microjudge/util.hpp"

namespace mj {

double cosine_lr(std::uint64_t step, std::uint64_t total, double lr) {
    require(total > 0, "cosine_lr: total must be positive");
    if (step >= total) return 0.0;
    double phase = M_PI * (double)step / (double)total;
    return lr * 0.5 * (1.0 + std::cos(phase));
}

void Adam::step(std::vector<double>& params, const std::vector<double>& grad, double lr) {
    require(params.size() == m.size() && grad.size() == m.size(), "Adam::step: size mismatch");
    t++;
    double bc1 = 1.0 - std::pow(cfg.beta1, (double)t);
    double bc2 = 1.0 - std::pow(cfg.beta2, (double)t);
    for (std::size_t i = 0; i < params.size(); i++) {
        double g = grad[i];
        if (!std::isfinite(g)) throw numeric_error("Adam::step: non-finite gradient");
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
        double mhat = m[i] / bc1;
        double vhat = v[i] / bc2;
        params[i] -= lr * (mhat / (std::sqrt(vhat) + cfg.eps) + cfg.weight_decay * params[i]);
    }
}

} // namespace mj
