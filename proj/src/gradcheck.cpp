#include "microjudge/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <vector>

#include "microjudge/policy.hpp"
#include "microjudge/rng.hpp"
#include "microjudge/sft.hpp"
#include "microjudge/util.hpp"

namespace mj {

namespace {

std::vector<Tok> random_tokens(Rng& rng, int lo, int hi) {
    int len = lo + (int)rng.uniform_int((std::uint64_t)(hi - lo + 1));
    std::vector<Tok> out((std::size_t)len);
    for (auto& t : out) t = (Tok)rng.uniform_int(tok::VOCAB_SIZE);
    return out;
}

// max relative error of the analytic gradient vs central differences over
// randomly probed coordinates. `corrupt` bends the first probed coordinate.
double probe(const std::function<double(const PolicyParams&)>& f,
             const std::vector<double>& grad, const PolicyParams& at, Rng& rng, int coords,
             double step, bool corrupt) {
    PolicyParams work = at;
    double worst = 0.0;
    for (int c = 0; c < coords; c++) {
        std::size_t i = (std::size_t)rng.uniform_int(at.flat.size());
        double saved = at.flat[i];
        work.flat[i] = saved + step;
        double hi = f(work);
        work.flat[i] = saved - step;
        double lo = f(work);
        work.flat[i] = saved;
        double fd = (hi - lo) / (2.0 * step);
        double g = grad[i];
        if (corrupt && c == 0) g += 0.1 * (1.0 + std::abs(g));
        double rel = std::abs(fd - g) / std::max(1e-8, std::abs(fd) + std::abs(g));
        worst = std::max(worst, rel);
    }
    return worst;
}

} // namespace

GradCheckReport run_grad_check(std::uint64_t seed, int instances, int coords_per_instance,
                               double fd_step, double tolerance, bool corrupt) {
    require(instances >= 1 && coords_per_instance >= 1, "grad check: empty probe plan");
    GradCheckReport report;
    report.tolerance = tolerance;

    Dims dims;
    for (int n = 0; n < instances; n++) {
        PolicyParams params = init_params(derive_seed(seed, {0x6Cull, (std::uint64_t)n}), dims);
        Rng rng(derive_seed(seed, {0xFDull, (std::uint64_t)n}));

        std::vector<Tok> prompt = random_tokens(rng, 3, 10);
        std::vector<Tok> output = random_tokens(rng, 1, 8);
        std::vector<double> g = grad_log_prob(params, prompt, output);
        auto f_lp = [&](const PolicyParams& p) {
            return sequence_log_prob(p, prompt, output).total;
        };
        report.max_rel_logprob = std::max(
            report.max_rel_logprob,
            probe(f_lp, g, params, rng, coords_per_instance, fd_step, corrupt));

        std::vector<SftRow> batch(2 + rng.uniform_int(3));
        for (auto& row : batch) {
            row.prompt = random_tokens(rng, 3, 10);
            row.target = random_tokens(rng, 1, 6);
        }
        SftGradResult res = sft_loss(params, batch);
        auto f_sft = [&](const PolicyParams& p) { return sft_loss_value(p, batch); };
        report.max_rel_sft = std::max(
            report.max_rel_sft,
            probe(f_sft, res.grad, params, rng, coords_per_instance, fd_step, corrupt));

        report.probes += 2 * coords_per_instance;
    }
    report.pass = report.max_rel_logprob <= tolerance && report.max_rel_sft <= tolerance;
    return report;
}

std::string grad_check_summary(const GradCheckReport& r) {
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "log-prob gradient  max relative error %.3e\n"
                  "sft-loss gradient  max relative error %.3e\n"
                  "%d probes against tolerance %.1e: %s\n",
                  r.max_rel_logprob, r.max_rel_sft, r.probes, r.tolerance,
                  r.pass ? "PASS" : "FAIL");
    return buf;
}

} // namespace mj
