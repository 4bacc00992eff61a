#pragma once
// group-relative policy optimization. a rollout samples G traces per prompt
// under a frozen "old" snapshot; rewards are normalized within the group into
// advantages; the update maximizes the clipped importance-weighted surrogate
// with a k3 KL penalty anchored to the frozen reference policy.

#include <cstdint>
#include <string>
#include <vector>

#include "microjudge/dataset.hpp"
#include "microjudge/policy.hpp"
#include "microjudge/rewards.hpp"

namespace mj {

struct RolloutGroup {
    std::string example_id;
    Label gold = Label::Yes;
    std::vector<Tok> prompt;
    std::vector<GenerationTrace> traces;      // sampled under old; logprobs are lp_old
    std::vector<std::vector<double>> ref_lps; // teacher-forced per-token lp under the reference
    std::vector<RewardBreakdown> rewards;
    std::vector<ParseFailure> failures;
    std::vector<double> advantages;
};

struct RlConfig {
    std::uint64_t seed = 21;
    int G = 20;
    double clip_eps = 0.2;
    double kl_beta = 0.01;
    double alpha = 0.1;
    double lr = 3e-3;
    int global_batch = 32;  // prompts per optimizer update
    int rollout_batch = 64; // prompts sampled per rollout phase
    int max_steps = 2000;   // optimizer updates
    int eval_every = 50;
    int reuse_epochs = 1; // passes over one rollout before refreshing the old snapshot
    double temperature = 1.0;
    SampleStrategy strategy = SampleStrategy::Proportional;
    std::vector<TaskKind> tasks = {TaskKind::AlignPoint, TaskKind::SafetyPoint,
                                   TaskKind::QualityPoint};
    int early_stop_patience = 10; // evals without val improvement; 0 disables
    bool reward_trace = false;    // append per-trace audit rows to reward_trace.jsonl

    void validate() const;
};

// A_i = (r_i - mean) / population std; all zero when std < 1e-8
std::vector<double> compute_advantages(const std::vector<double>& rewards);
void fill_advantages(RolloutGroup& g);

// G traces for one prompt under `old`, scored with rl-form rewards, plus the
// reference's per-token log-probs for the KL term
RolloutGroup collect_group(const PolicyParams& old_params, const PolicyParams& ref_params,
                           const Example& example, int G, const SampleOptions& opt, double alpha,
                           std::uint64_t seed, const InputProj* old_proj = nullptr,
                           const InputProj* ref_proj = nullptr);

// per-token importance ratios exp(lp_theta - lp_old), recomputed from both
// parameter sets. the trainer's hot path uses the bit-identical log-probs
// recorded at sampling time instead of re-running old.
std::vector<double> ratio_terms(const PolicyParams& params, const PolicyParams& old_params,
                                const GenerationTrace& trace);

// mean over output tokens of k3 = r - 1 - ln r, r = pi_ref / pi_theta
double kl_estimate(const PolicyParams& params, const PolicyParams& ref_params,
                   const GenerationTrace& trace);

struct ObjectiveResult {
    double loss = 0.0;
    double mean_kl = 0.0;
    std::vector<double> grad;
};

// loss = -(1/total tokens) sum_g sum_i sum_t min(rho*A, clip(rho)*A)
//        + kl_beta * mean_i kl_i,
// with old and reference represented by the per-token log-probs the groups
// carry (recorded under those exact parameter sets). gradient is exact
// reverse mode; min/clip selection treats ties as unclipped.
ObjectiveResult grpo_objective(const PolicyParams& params, const std::vector<RolloutGroup>& groups,
                               double clip_eps, double kl_beta, const InputProj* proj = nullptr);

// plain policy-gradient estimator -(1/total tokens) sum_i A_i sum_t lp_t,
// used to cross-check the surrogate at theta == old
ObjectiveResult plain_pg_gradient(const PolicyParams& params, const std::vector<RolloutGroup>& groups,
                                  const InputProj* proj = nullptr);

struct TrainOutcome {
    int steps_run = 0;
    int best_step = 0;
    double best_val = -1.0;
    bool early_stopped = false;
};

// full training loop: rollout, advantage, update, periodic greedy validation
// on mean accuracy reward, best-checkpoint persistence, and resumable state.
// writes log.jsonl, checkpoint_best.json(+.meta.json) and state_last.json
// under run_dir. `resume` continues from state_last.json.
TrainOutcome grpo_train(const RlConfig& cfg, int max_len, const Dataset& ds,
                        const PolicyParams& start, const PolicyParams& ref,
                        const std::string& run_dir, bool resume);

} // namespace mj
