#include "microjudge/kernels.hpp"

#include <cmath>

#include "microjudge/util.hpp"

namespace mj {

namespace {

// one group's contribution to the objective. T_tot and n_traces are batch
// totals fixed by a pre-pass so per-token weights are final here.
struct GroupAccum {
    double surrogate = 0.0; // sum over traces of sum_t min(rho*A, clip(rho)*A)
    double kl_sum = 0.0;    // sum over traces of per-trace mean k3
};

GroupAccum group_grad(const PolicyParams& params, const RolloutGroup& g, double clip_eps,
                      double kl_beta, double t_tot, double n_traces, const InputProj* proj,
                      double* grad) {
    GroupAccum acc;
    int d = params.dims.d;
    PromptCtx pc = prompt_forward(params, g.prompt, proj);
    std::vector<double> dh((std::size_t)d, 0.0);
    std::vector<double> weights;
    bool any_backward = false;

    for (std::size_t i = 0; i < g.traces.size(); i++) {
        const auto& trace = g.traces[i];
        std::size_t t_i = trace.output.size();
        if (t_i == 0) continue;
        OutputScore score = output_logprobs(params, pc, trace.output, proj);
        double a = g.advantages[i];
        weights.assign(t_i, 0.0);
        double k3_sum = 0.0;
        bool any_w = false;
        for (std::size_t t = 0; t < t_i; t++) {
            double lp_theta = score.logprobs[t];
            double rho = std::exp(lp_theta - trace.logprobs[t]);
            if (!std::isfinite(rho))
                throw numeric_error("non-finite importance ratio at token " + std::to_string(t));
            double clipped = std::min(std::max(rho, 1.0 - clip_eps), 1.0 + clip_eps);
            double unclipped_term = rho * a;
            double clipped_term = clipped * a;
            // min with ties resolved to the unclipped branch
            bool take_unclipped = unclipped_term <= clipped_term;
            acc.surrogate += take_unclipped ? unclipped_term : clipped_term;

            double delta = g.ref_lps[i][t] - lp_theta;
            double r = std::exp(delta);
            if (!std::isfinite(r))
                throw numeric_error("non-finite kl ratio at token " + std::to_string(t));
            k3_sum += std::expm1(delta) - delta; // r - 1 - ln r, stable near r = 1

            double w = 0.0;
            if (take_unclipped) w -= a * rho / t_tot; // d(-surrogate)/d lp_theta
            if (kl_beta != 0.0) w += kl_beta / n_traces * (1.0 - r) / (double)t_i;
            weights[t] = w;
            if (w != 0.0) any_w = true;
        }
        acc.kl_sum += k3_sum / (double)t_i;
        if (any_w) {
            output_backward(params, pc, trace.output, score, weights, grad, dh.data());
            any_backward = true;
        }
    }
    if (any_backward) prompt_backward(params, g.prompt, pc, dh.data(), grad);
    return acc;
}

void check_groups(const std::vector<RolloutGroup>& groups) {
    require(!groups.empty(), "grpo gradient: empty group list");
    for (const auto& g : groups) {
        require(!g.traces.empty(), "grpo gradient: empty group");
        require(g.advantages.size() == g.traces.size() && g.ref_lps.size() == g.traces.size(),
                "grpo gradient: group missing advantages or reference log-probs");
    }
}

struct BatchTotals {
    double t_tot = 0.0;
    double n_traces = 0.0;
};

BatchTotals batch_totals(const std::vector<RolloutGroup>& groups) {
    BatchTotals bt;
    for (const auto& g : groups)
        for (const auto& tr : g.traces) {
            bt.t_tot += (double)tr.output.size();
            bt.n_traces += 1.0;
        }
    require(bt.t_tot > 0.0, "grpo gradient: batch has no output tokens");
    return bt;
}

} // namespace

ObjectiveResult grpo_grad_serial(const PolicyParams& params, const std::vector<RolloutGroup>& groups,
                                 double clip_eps, double kl_beta, const InputProj* proj) {
    check_groups(groups);
    BatchTotals bt = batch_totals(groups);
    ObjectiveResult r;
    r.grad.assign(params.dims.flat_size(), 0.0);
    double sur = 0.0, kl = 0.0;
    for (const auto& g : groups) {
        GroupAccum acc = group_grad(params, g, clip_eps, kl_beta, bt.t_tot, bt.n_traces, proj,
                                    r.grad.data());
        sur += acc.surrogate;
        kl += acc.kl_sum;
    }
    r.mean_kl = kl / bt.n_traces;
    r.loss = -sur / bt.t_tot + kl_beta * r.mean_kl;
    return r;
}

ObjectiveResult grpo_grad_parallel(const PolicyParams& params, const std::vector<RolloutGroup>& groups,
                                   double clip_eps, double kl_beta, const InputProj* proj) {
    check_groups(groups);
    BatchTotals bt = batch_totals(groups);
    std::size_t n = groups.size(), p = params.dims.flat_size();

    // one buffer per group; the fixed ascending reduction below makes the
    // result independent of scheduling and thread count
    std::vector<std::vector<double>> grads(n);
    std::vector<GroupAccum> accs(n);
#pragma omp parallel for schedule(dynamic)
    for (std::size_t gi = 0; gi < n; gi++) {
        grads[gi].assign(p, 0.0);
        accs[gi] = group_grad(params, groups[gi], clip_eps, kl_beta, bt.t_tot, bt.n_traces, proj,
                              grads[gi].data());
    }

    ObjectiveResult r;
    r.grad.assign(p, 0.0);
    double sur = 0.0, kl = 0.0;
    for (std::size_t gi = 0; gi < n; gi++) {
        const double* src = grads[gi].data();
        double* dst = r.grad.data();
        for (std::size_t k = 0; k < p; k++) dst[k] += src[k];
        sur += accs[gi].surrogate;
        kl += accs[gi].kl_sum;
    }
    r.mean_kl = kl / bt.n_traces;
    r.loss = -sur / bt.t_tot + kl_beta * r.mean_kl;
    return r;
}

std::vector<RolloutGroup> collect_rollouts_serial(const PolicyParams& old_params,
                                                  const PolicyParams& ref_params,
                                                  const std::vector<RolloutSpec>& specs, int G,
                                                  const SampleOptions& opt, double alpha) {
    InputProj old_proj = build_input_proj(old_params);
    InputProj ref_proj = build_input_proj(ref_params);
    std::vector<RolloutGroup> groups(specs.size());
    for (std::size_t i = 0; i < specs.size(); i++)
        groups[i] = collect_group(old_params, ref_params, *specs[i].example, G, opt, alpha,
                                  specs[i].seed, &old_proj, &ref_proj);
    return groups;
}

std::vector<RolloutGroup> collect_rollouts_parallel(const PolicyParams& old_params,
                                                    const PolicyParams& ref_params,
                                                    const std::vector<RolloutSpec>& specs, int G,
                                                    const SampleOptions& opt, double alpha) {
    InputProj old_proj = build_input_proj(old_params);
    InputProj ref_proj = build_input_proj(ref_params);
    std::vector<RolloutGroup> groups(specs.size());
    // slots are fully independent: every group draws from its own seeded stream
#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < specs.size(); i++)
        groups[i] = collect_group(old_params, ref_params, *specs[i].example, G, opt, alpha,
                                  specs[i].seed, &old_proj, &ref_proj);
    return groups;
}

namespace {

double sft_row_grad(const PolicyParams& params, const SftRow& row, double t_tot,
                    const InputProj* proj, double* grad) {
    PromptCtx pc = prompt_forward(params, row.prompt, proj);
    OutputScore score = output_logprobs(params, pc, row.target, proj);
    double nll = 0.0;
    for (double lp : score.logprobs) nll -= lp;
    std::vector<double> weights(row.target.size(), -1.0 / t_tot);
    std::vector<double> dh((std::size_t)params.dims.d, 0.0);
    output_backward(params, pc, row.target, score, weights, grad, dh.data());
    prompt_backward(params, row.prompt, pc, dh.data(), grad);
    return nll;
}

double sft_batch_tokens(const std::vector<SftRow>& batch) {
    require(!batch.empty(), "sft gradient: empty batch");
    double t = 0.0;
    for (const auto& row : batch) {
        require(!row.target.empty(), "sft gradient: empty target");
        t += (double)row.target.size();
    }
    return t;
}

} // namespace

SftGradResult sft_grad_serial(const PolicyParams& params, const std::vector<SftRow>& batch,
                              const InputProj* proj) {
    double t_tot = sft_batch_tokens(batch);
    SftGradResult r;
    r.grad.assign(params.dims.flat_size(), 0.0);
    double nll = 0.0;
    for (const auto& row : batch) nll += sft_row_grad(params, row, t_tot, proj, r.grad.data());
    r.loss = nll / t_tot;
    return r;
}

SftGradResult sft_grad_parallel(const PolicyParams& params, const std::vector<SftRow>& batch,
                                const InputProj* proj) {
    double t_tot = sft_batch_tokens(batch);
    std::size_t n = batch.size(), p = params.dims.flat_size();
    std::vector<std::vector<double>> grads(n);
    std::vector<double> nlls(n, 0.0);
#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < n; i++) {
        grads[i].assign(p, 0.0);
        nlls[i] = sft_row_grad(params, batch[i], t_tot, proj, grads[i].data());
    }
    SftGradResult r;
    r.grad.assign(p, 0.0);
    double nll = 0.0;
    for (std::size_t i = 0; i < n; i++) {
        const double* src = grads[i].data();
        for (std::size_t k = 0; k < p; k++) r.grad[k] += src[k];
        nll += nlls[i];
    }
    r.loss = nll / t_tot;
    return r;
}

namespace {

ParsedVerdict predict_one(const PolicyParams& params, const Example& e, int max_len,
                          const InputProj* proj) {
    SampleOptions opt;
    opt.greedy = true;
    opt.max_len = max_len;
    Rng rng(0); // unused under greedy decoding
    GenerationTrace t = sample_sequence(params, encode_example(e), opt, rng, proj);
    return parse_output(t.output);
}

} // namespace

std::vector<ParsedVerdict> predict_batch_serial(const PolicyParams& params,
                                                const std::vector<const Example*>& examples,
                                                int max_len, const InputProj* proj) {
    std::vector<ParsedVerdict> out(examples.size());
    for (std::size_t i = 0; i < examples.size(); i++)
        out[i] = predict_one(params, *examples[i], max_len, proj);
    return out;
}

std::vector<ParsedVerdict> predict_batch_parallel(const PolicyParams& params,
                                                  const std::vector<const Example*>& examples,
                                                  int max_len, const InputProj* proj) {
    std::vector<ParsedVerdict> out(examples.size());
#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < examples.size(); i++)
        out[i] = predict_one(params, *examples[i], max_len, proj);
    return out;
}

} // namespace mj
