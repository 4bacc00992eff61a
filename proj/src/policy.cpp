#include "microjudge/policy.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "microjudge/util.hpp"

using nlohmann::json;

namespace mj {

namespace {

constexpr const char* kRngNote =
    "parameters are a pure function of (seed, dims); training derives per-step "
    "streams from (seed, stage, step, slot) via splitmix64, so no rng state "
    "needs to be persisted for exact resume";

void check_tokens(const std::vector<Tok>& toks, int vocab, const char* what) {
    for (Tok t : toks)
        require(t >= 0 && t < vocab, std::string(what) + ": token id out of range");
}

// dot products and accumulation orders here are pinned: W_x e + b_h first,
// then + W_h h. the InputProj cache precomputes exactly the first half, so
// both paths round identically.
inline void step_from_proj_row(const double* proj_row, const double* wh, const double* h_prev,
                               double* h_out, int d) {
    for (int i = 0; i < d; i++) {
        double a = proj_row[i];
        const double* whr = wh + (std::size_t)i * d;
        for (int j = 0; j < d; j++) a += whr[j] * h_prev[j];
        h_out[i] = std::tanh(a);
    }
}

inline void proj_row_for(const PolicyParams& p, Tok token, double* row) {
    int d = p.dims.d;
    const double* x = p.e() + (std::size_t)token * d;
    const double* wx = p.wx();
    const double* bh = p.bh();
    for (int i = 0; i < d; i++) {
        double a = 0.0;
        const double* wxr = wx + (std::size_t)i * d;
        for (int j = 0; j < d; j++) a += wxr[j] * x[j];
        row[i] = a + bh[i];
    }
}

} // namespace

PolicyParams init_params(std::uint64_t seed, Dims dims) {
    require(dims.d >= 1, "init_params: d must be >= 1");
    require(dims.vocab == tok::VOCAB_SIZE, "init_params: vocabulary size is fixed at 48");
    PolicyParams p(dims);
    Rng rng(seed);
    double s = 1.0 / std::sqrt((double)dims.d);
    auto fill = [&](std::size_t off, std::size_t n) {
        for (std::size_t i = 0; i < n; i++) p.flat[off + i] = rng.uniform(-s, s);
    };
    std::size_t d = (std::size_t)dims.d, v = (std::size_t)dims.vocab;
    fill(dims.e_off(), v * d);
    fill(dims.wx_off(), d * d);
    fill(dims.wh_off(), d * d);
    // b_h stays zero
    fill(dims.wo_off(), v * d);
    // b_o stays zero
    return p;
}

PolicyParams interpolate_params(const PolicyParams& a, const PolicyParams& b, double t) {
    require(a.dims == b.dims, "interpolate_params: dims mismatch");
    require(t >= 0.0 && t <= 1.0, "interpolate_params: t outside [0,1]");
    if (t == 0.0) return a;
    if (t == 1.0) return b;
    PolicyParams out(a.dims);
    for (std::size_t i = 0; i < out.flat.size(); i++)
        out.flat[i] = (1.0 - t) * a.flat[i] + t * b.flat[i];
    return out;
}

InputProj build_input_proj(const PolicyParams& p) {
    InputProj proj;
    proj.rows.resize((std::size_t)p.dims.vocab * p.dims.d);
    for (Tok t = 0; t < p.dims.vocab; t++)
        proj_row_for(p, t, proj.rows.data() + (std::size_t)t * p.dims.d);
    return proj;
}

void policy_step(const PolicyParams& p, const InputProj* proj, const double* h_prev, Tok token,
                 double* h_out) {
    int d = p.dims.d;
    if (proj) {
        step_from_proj_row(proj->rows.data() + (std::size_t)token * d, p.wh(), h_prev, h_out, d);
    } else {
        std::vector<double> row((std::size_t)d);
        proj_row_for(p, token, row.data());
        step_from_proj_row(row.data(), p.wh(), h_prev, h_out, d);
    }
}

void policy_logits(const PolicyParams& p, const double* h, double* logits) {
    int d = p.dims.d, v = p.dims.vocab;
    const double* wo = p.wo();
    const double* bo = p.bo();
    for (int r = 0; r < v; r++) {
        double a = 0.0;
        const double* wor = wo + (std::size_t)r * d;
        for (int j = 0; j < d; j++) a += wor[j] * h[j];
        logits[r] = a + bo[r];
    }
}

double log_softmax_at(const double* logits, int n, int at) {
    double m = logits[0];
    for (int i = 1; i < n; i++) m = std::max(m, logits[i]);
    double s = 0.0;
    for (int i = 0; i < n; i++) s += std::exp(logits[i] - m);
    return logits[at] - m - std::log(s);
}

std::vector<double> forward_logits(const PolicyParams& p, const std::vector<Tok>& context) {
    require(!context.empty(), "forward_logits: empty context");
    check_tokens(context, p.dims.vocab, "forward_logits");
    int d = p.dims.d, v = p.dims.vocab;
    std::vector<double> out((std::size_t)context.size() * v);
    std::vector<double> h((std::size_t)d, 0.0), h2((std::size_t)d);
    for (std::size_t t = 0; t < context.size(); t++) {
        policy_step(p, nullptr, h.data(), context[t], h2.data());
        std::swap(h, h2);
        policy_logits(p, h.data(), out.data() + t * v);
    }
    return out;
}

GenerationTrace sample_sequence(const PolicyParams& p, const std::vector<Tok>& prompt,
                                const SampleOptions& opt, Rng& rng, const InputProj* proj) {
    require(!prompt.empty(), "sample_sequence: empty prompt");
    require(opt.temperature > 0.0, "sample_sequence: temperature must be positive");
    require(opt.max_len >= 1, "sample_sequence: max_len must be >= 1");
    check_tokens(prompt, p.dims.vocab, "sample_sequence");

    int d = p.dims.d, v = p.dims.vocab;
    GenerationTrace trace;
    trace.prompt = prompt;
    std::vector<double> h((std::size_t)d, 0.0), h2((std::size_t)d);
    for (Tok t : prompt) {
        policy_step(p, proj, h.data(), t, h2.data());
        std::swap(h, h2);
    }

    std::vector<double> logits((std::size_t)v), probs((std::size_t)v);
    trace.term = TermReason::MaxLen;
    for (int step = 0; step < opt.max_len; step++) {
        policy_logits(p, h.data(), logits.data());
        Tok chosen;
        if (opt.greedy) {
            chosen = 0;
            for (int i = 1; i < v; i++)
                if (logits[(std::size_t)i] > logits[(std::size_t)chosen]) chosen = i;
        } else {
            double m = logits[0];
            for (int i = 1; i < v; i++) m = std::max(m, logits[(std::size_t)i]);
            double total = 0.0;
            for (int i = 0; i < v; i++) {
                probs[(std::size_t)i] = std::exp((logits[(std::size_t)i] - m) / opt.temperature);
                total += probs[(std::size_t)i];
            }
            double u = rng.uniform01() * total, acc = 0.0;
            chosen = v - 1;
            for (int i = 0; i < v; i++) {
                acc += probs[(std::size_t)i];
                if (u < acc) {
                    chosen = i;
                    break;
                }
            }
        }
        // recorded log-prob always lives on the temperature-1 measure
        trace.output.push_back(chosen);
        trace.logprobs.push_back(log_softmax_at(logits.data(), v, chosen));
        if (chosen == tok::EOS) {
            trace.term = TermReason::Eos;
            break;
        }
        policy_step(p, proj, h.data(), chosen, h2.data());
        std::swap(h, h2);
    }
    return trace;
}

PromptCtx prompt_forward(const PolicyParams& p, const std::vector<Tok>& prompt,
                         const InputProj* proj) {
    require(!prompt.empty(), "prompt_forward: empty prompt");
    check_tokens(prompt, p.dims.vocab, "prompt_forward");
    int d = p.dims.d;
    PromptCtx pc;
    pc.len = (int)prompt.size();
    pc.states.resize(prompt.size() * (std::size_t)d);
    const double* h_prev = nullptr;
    std::vector<double> zero((std::size_t)d, 0.0);
    h_prev = zero.data();
    for (std::size_t t = 0; t < prompt.size(); t++) {
        double* h = pc.states.data() + t * (std::size_t)d;
        policy_step(p, proj, h_prev, prompt[t], h);
        h_prev = h;
    }
    return pc;
}

OutputScore output_logprobs(const PolicyParams& p, const PromptCtx& pc, const std::vector<Tok>& output,
                            const InputProj* proj) {
    check_tokens(output, p.dims.vocab, "output_logprobs");
    int d = p.dims.d, v = p.dims.vocab;
    std::size_t n = output.size();
    OutputScore score;
    score.logprobs.resize(n);
    score.probs.resize(n * (std::size_t)v);
    score.states.resize(n > 0 ? (n - 1) * (std::size_t)d : 0);

    std::vector<double> logits((std::size_t)v);
    const double* h = pc.last(p.dims);
    for (std::size_t k = 0; k < n; k++) {
        policy_logits(p, h, logits.data());
        double m = logits[0];
        for (int i = 1; i < v; i++) m = std::max(m, logits[(std::size_t)i]);
        double total = 0.0;
        double* prow = score.probs.data() + k * (std::size_t)v;
        for (int i = 0; i < v; i++) {
            prow[i] = std::exp(logits[(std::size_t)i] - m);
            total += prow[i];
        }
        score.logprobs[k] = logits[(std::size_t)output[k]] - m - std::log(total);
        double inv = 1.0 / total;
        for (int i = 0; i < v; i++) prow[i] *= inv;
        if (k + 1 < n) {
            double* hn = score.states.data() + k * (std::size_t)d;
            policy_step(p, proj, h, output[k], hn);
            h = hn;
        }
    }
    return score;
}

SeqLogProb sequence_log_prob(const PolicyParams& p, const std::vector<Tok>& prompt,
                             const std::vector<Tok>& output) {
    PromptCtx pc = prompt_forward(p, prompt);
    OutputScore score = output_logprobs(p, pc, output);
    SeqLogProb r;
    r.per_token = std::move(score.logprobs);
    for (double lp : r.per_token) r.total += lp;
    return r;
}

void output_backward(const PolicyParams& p, const PromptCtx& pc, const std::vector<Tok>& output,
                     const OutputScore& score, const std::vector<double>& weights, double* grad,
                     double* dh_prompt) {
    require(weights.size() == output.size(), "output_backward: weight count mismatch");
    int d = p.dims.d, v = p.dims.vocab;
    std::size_t n = output.size();
    const Dims& dm = p.dims;

    double* g_e = grad + dm.e_off();
    double* g_wx = grad + dm.wx_off();
    double* g_wh = grad + dm.wh_off();
    double* g_bh = grad + dm.bh_off();
    double* g_wo = grad + dm.wo_off();
    double* g_bo = grad + dm.bo_off();

    std::vector<double> dh((std::size_t)d, 0.0), da((std::size_t)d), dl((std::size_t)v);

    for (std::size_t k = n; k-- > 0;) {
        const double* h_prev = k == 0 ? pc.last(dm) : score.states.data() + (k - 1) * (std::size_t)d;
        const double* prow = score.probs.data() + k * (std::size_t)v;
        double w = weights[k];
        // d(logprob)/d(logits) = onehot(target) - softmax
        for (int r = 0; r < v; r++) dl[(std::size_t)r] = -w * prow[r];
        dl[(std::size_t)output[k]] += w;
        for (int r = 0; r < v; r++) {
            double dlr = dl[(std::size_t)r];
            if (dlr == 0.0) continue;
            double* gr = g_wo + (std::size_t)r * d;
            const double* wor = p.wo() + (std::size_t)r * d;
            for (int j = 0; j < d; j++) {
                gr[j] += dlr * h_prev[j];
                dh[(std::size_t)j] += wor[j] * dlr;
            }
            g_bo[r] += dlr;
        }
        if (k == 0) break;
        // pass the adjoint through the recurrence step that produced h_prev
        const double* h_before = k == 1 ? pc.last(dm) : score.states.data() + (k - 2) * (std::size_t)d;
        Tok tk = output[k - 1];
        const double* x = p.e() + (std::size_t)tk * d;
        for (int i = 0; i < d; i++) da[(std::size_t)i] = dh[(std::size_t)i] * (1.0 - h_prev[i] * h_prev[i]);
        double* g_x = g_e + (std::size_t)tk * d;
        for (int i = 0; i < d; i++) {
            double dai = da[(std::size_t)i];
            double* gwxr = g_wx + (std::size_t)i * d;
            double* gwhr = g_wh + (std::size_t)i * d;
            const double* wxr = p.wx() + (std::size_t)i * d;
            for (int j = 0; j < d; j++) {
                gwxr[j] += dai * x[j];
                gwhr[j] += dai * h_before[j];
                g_x[j] += wxr[j] * dai;
            }
            g_bh[i] += dai;
        }
        for (int j = 0; j < d; j++) {
            double acc = 0.0;
            for (int i = 0; i < d; i++) acc += p.wh()[(std::size_t)i * d + j] * da[(std::size_t)i];
            dh[(std::size_t)j] = acc;
        }
    }
    for (int j = 0; j < d; j++) dh_prompt[j] += dh[(std::size_t)j];
}

void prompt_backward(const PolicyParams& p, const std::vector<Tok>& prompt, const PromptCtx& pc,
                     const double* dh_end, double* grad) {
    int d = p.dims.d;
    const Dims& dm = p.dims;
    double* g_e = grad + dm.e_off();
    double* g_wx = grad + dm.wx_off();
    double* g_wh = grad + dm.wh_off();
    double* g_bh = grad + dm.bh_off();

    std::vector<double> dh(dh_end, dh_end + d), da((std::size_t)d);
    for (std::size_t t = prompt.size(); t-- > 0;) {
        const double* h_cur = pc.states.data() + t * (std::size_t)d;
        const double* h_before = t > 0 ? pc.states.data() + (t - 1) * (std::size_t)d : nullptr;
        Tok tk = prompt[t];
        const double* x = p.e() + (std::size_t)tk * d;
        for (int i = 0; i < d; i++) da[(std::size_t)i] = dh[(std::size_t)i] * (1.0 - h_cur[i] * h_cur[i]);
        double* g_x = g_e + (std::size_t)tk * d;
        for (int i = 0; i < d; i++) {
            double dai = da[(std::size_t)i];
            double* gwxr = g_wx + (std::size_t)i * d;
            const double* wxr = p.wx() + (std::size_t)i * d;
            for (int j = 0; j < d; j++) {
                gwxr[j] += dai * x[j];
                g_x[j] += wxr[j] * dai;
            }
            if (h_before) {
                double* gwhr = g_wh + (std::size_t)i * d;
                for (int j = 0; j < d; j++) gwhr[j] += dai * h_before[j];
            }
            g_bh[i] += dai;
        }
        if (t == 0) break;
        for (int j = 0; j < d; j++) {
            double acc = 0.0;
            for (int i = 0; i < d; i++) acc += p.wh()[(std::size_t)i * d + j] * da[(std::size_t)i];
            dh[(std::size_t)j] = acc;
        }
    }
}

std::vector<double> grad_log_prob(const PolicyParams& p, const std::vector<Tok>& prompt,
                                  const std::vector<Tok>& output) {
    std::vector<double> grad(p.dims.flat_size(), 0.0);
    if (output.empty()) return grad;
    std::vector<double> weights(output.size(), 1.0);
    accumulate_weighted_grad(p, prompt, output, weights, grad.data());
    return grad;
}

void accumulate_weighted_grad(const PolicyParams& p, const std::vector<Tok>& prompt,
                              const std::vector<Tok>& output, const std::vector<double>& weights,
                              double* grad) {
    if (output.empty()) return;
    PromptCtx pc = prompt_forward(p, prompt);
    OutputScore score = output_logprobs(p, pc, output);
    std::vector<double> dh((std::size_t)p.dims.d, 0.0);
    output_backward(p, pc, output, score, weights, grad, dh.data());
    prompt_backward(p, prompt, pc, dh.data(), grad);
    for (std::size_t i = 0; i < p.dims.flat_size(); i++)
        if (!std::isfinite(grad[i]))
            throw numeric_error("non-finite gradient at flat index " + std::to_string(i));
}

std::string checkpoint_to_json(const PolicyParams& p) {
    json j;
    j["format_version"] = 1;
    j["dims"] = json{{"d", p.dims.d}, {"vocab", p.dims.vocab}};
    j["vocabulary"] = vocab_symbols();
    json flat = json::array();
    for (double v : p.flat) flat.push_back(fmt17(v));
    j["flat_params"] = flat;
    j["rng_note"] = kRngNote;
    return j.dump() + "\n";
}

PolicyParams checkpoint_from_json(const std::string& text) {
    json j = json::parse(text);
    require(j.at("format_version").get<int>() == 1, "unsupported checkpoint format_version");
    Dims dims;
    dims.d = j.at("dims").at("d").get<int>();
    dims.vocab = j.at("dims").at("vocab").get<int>();
    require(dims.d >= 1, "checkpoint: bad d");
    require(dims.vocab == tok::VOCAB_SIZE, "checkpoint: vocabulary size mismatch");
    // vocabulary must match the builtin symbol table exactly
    auto stored = j.at("vocabulary").get<std::vector<std::string>>();
    require(stored == vocab_symbols(), "checkpoint: vocabulary mismatch");
    PolicyParams p(dims);
    const auto& flat = j.at("flat_params");
    require(flat.size() == p.flat.size(), "checkpoint: flat_params length mismatch");
    for (std::size_t i = 0; i < p.flat.size(); i++) {
        p.flat[i] = parse17(flat[i].get<std::string>());
        require(std::isfinite(p.flat[i]), "checkpoint: non-finite parameter");
    }
    return p;
}

void save_checkpoint(const PolicyParams& p, const std::string& path) {
    atomic_write_file(path, checkpoint_to_json(p));
}

PolicyParams load_checkpoint(const std::string& path) {
    return checkpoint_from_json(read_file(path));
}

} // namespace mj
