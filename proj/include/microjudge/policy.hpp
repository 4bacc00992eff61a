#pragma once
// compact autoregressive policy: token embedding -> single Elman recurrence
// -> output projection. everything is double precision and hand-derived
// reverse mode, so gradients can be checked against finite differences to
// tight tolerances. all sampling and scoring share one step function, which
// makes recomputed log-probs bit-identical to the ones recorded at sampling
// time.

#include <cstdint>
#include <string>
#include <vector>

#include "microjudge/rng.hpp"
#include "microjudge/vocab.hpp"

namespace mj {

struct Dims {
    int d = 32;
    int vocab = tok::VOCAB_SIZE;

    bool operator==(const Dims&) const = default;
    // flat layout: E (V x d), W_x (d x d), W_h (d x d), b_h (d), W_o (V x d), b_o (V)
    std::size_t e_off() const { return 0; }
    std::size_t wx_off() const { return (std::size_t)vocab * d; }
    std::size_t wh_off() const { return wx_off() + (std::size_t)d * d; }
    std::size_t bh_off() const { return wh_off() + (std::size_t)d * d; }
    std::size_t wo_off() const { return bh_off() + (std::size_t)d; }
    std::size_t bo_off() const { return wo_off() + (std::size_t)vocab * d; }
    std::size_t flat_size() const { return bo_off() + (std::size_t)vocab; }
};

struct PolicyParams {
    Dims dims;
    std::vector<double> flat;

    PolicyParams() = default;
    explicit PolicyParams(Dims dm) : dims(dm), flat(dm.flat_size(), 0.0) {}

    const double* e() const { return flat.data() + dims.e_off(); }
    const double* wx() const { return flat.data() + dims.wx_off(); }
    const double* wh() const { return flat.data() + dims.wh_off(); }
    const double* bh() const { return flat.data() + dims.bh_off(); }
    const double* wo() const { return flat.data() + dims.wo_off(); }
    const double* bo() const { return flat.data() + dims.bo_off(); }
};

// weights uniform in [-1/sqrt(d), 1/sqrt(d)], biases zero
PolicyParams init_params(std::uint64_t seed, Dims dims);

// element-wise (1-t)*a + t*b; dims must match
PolicyParams interpolate_params(const PolicyParams& a, const PolicyParams& b, double t);

enum class TermReason { Eos, MaxLen };

struct GenerationTrace {
    std::vector<Tok> prompt;
    std::vector<Tok> output;              // includes the final EOS when one was emitted
    std::vector<double> logprobs;         // per output token, temperature-1 measure
    TermReason term = TermReason::MaxLen;

    double total_logprob() const {
        double s = 0.0;
        for (double v : logprobs) s += v;
        return s;
    }
};

// per-token input projection cache: row t holds W_x e(t) + b_h. building it
// costs one V x d x d sweep, so it pays off when many sequences run under the
// same frozen parameters (rollouts, batch gradients, suite evaluation).
// cached and uncached stepping follow the same summation order, so results
// are bit-identical either way.
struct InputProj {
    std::vector<double> rows; // V x d
};

InputProj build_input_proj(const PolicyParams& p);

// one recurrence step: h_out = tanh(W_x e(token) + b_h + W_h h_prev)
void policy_step(const PolicyParams& p, const InputProj* proj, const double* h_prev, Tok token,
                 double* h_out);
// logits = W_o h + b_o
void policy_logits(const PolicyParams& p, const double* h, double* logits);
// stable log softmax of one row evaluated at index `at`
double log_softmax_at(const double* logits, int n, int at);

// per-position logits for every context position (row-major T x V)
std::vector<double> forward_logits(const PolicyParams& p, const std::vector<Tok>& context);

struct SampleOptions {
    double temperature = 1.0;
    int max_len = 48;
    bool greedy = false; // temperature->0 limit, deterministic argmax
};

GenerationTrace sample_sequence(const PolicyParams& p, const std::vector<Tok>& prompt,
                                const SampleOptions& opt, Rng& rng,
                                const InputProj* proj = nullptr);

struct SeqLogProb {
    double total = 0.0;
    std::vector<double> per_token;
};

SeqLogProb sequence_log_prob(const PolicyParams& p, const std::vector<Tok>& prompt,
                             const std::vector<Tok>& output);

// hidden states after each prompt token (row-major, len x d); reusable across
// the traces of one rollout group since they share the prompt
struct PromptCtx {
    std::vector<double> states;
    int len = 0;

    const double* last(const Dims& dims) const { return states.data() + (std::size_t)(len - 1) * dims.d; }
};

PromptCtx prompt_forward(const PolicyParams& p, const std::vector<Tok>& prompt,
                         const InputProj* proj = nullptr);

struct OutputScore {
    std::vector<double> logprobs; // per output token
    std::vector<double> states;   // hidden states after output tokens 0..len-2
    std::vector<double> probs;    // softmax rows feeding each output token (len x V)
};

OutputScore output_logprobs(const PolicyParams& p, const PromptCtx& pc, const std::vector<Tok>& output,
                            const InputProj* proj = nullptr);

// reverse pass over the output segment of sum_t weights[t] * logprob[t].
// accumulates parameter gradients into grad (flat, caller-zeroed) and the
// adjoint arriving at the last prompt state into dh_prompt (length d). the
// prompt segment is closed separately by prompt_backward, so the adjoints of
// many traces sharing one prompt can be summed first (backprop is linear in
// the adjoint, which keeps this exact).
void output_backward(const PolicyParams& p, const PromptCtx& pc, const std::vector<Tok>& output,
                     const OutputScore& score, const std::vector<double>& weights, double* grad,
                     double* dh_prompt);

void prompt_backward(const PolicyParams& p, const std::vector<Tok>& prompt, const PromptCtx& pc,
                     const double* dh_end, double* grad);

// gradient of sequence_log_prob w.r.t. every parameter (all token weights 1)
std::vector<double> grad_log_prob(const PolicyParams& p, const std::vector<Tok>& prompt,
                                  const std::vector<Tok>& output);

// same reverse pass with caller-chosen per-token weights; accumulates into grad
void accumulate_weighted_grad(const PolicyParams& p, const std::vector<Tok>& prompt,
                              const std::vector<Tok>& output, const std::vector<double>& weights,
                              double* grad);

// checkpoint file round-trip; flat params serialize as %.17g decimal strings
std::string checkpoint_to_json(const PolicyParams& p);
PolicyParams checkpoint_from_json(const std::string& text);
void save_checkpoint(const PolicyParams& p, const std::string& path);
PolicyParams load_checkpoint(const std::string& path);

} // namespace mj
