#pragma once
// supervised baselines: token-level cross-entropy on bare [label, EOS]
// targets, sharing the policy, data and evaluation stack with the rl trainer.
// also hosts the format pretraining stage every judge initializes from: a
// synthesized corpus covering all five prompt shapes and both output
// grammars, with labels drawn uniformly from each task's alphabet. that
// teaches the output forms and which alphabet each task tag answers in while
// carrying zero task knowledge (random labels are independent of the scenes).

#include <cstdint>
#include <string>
#include <vector>

#include "microjudge/dataset.hpp"
#include "microjudge/grpo.hpp"
#include "microjudge/kernels.hpp"
#include "microjudge/policy.hpp"

namespace mj {

struct SftTarget {
    std::string example_id;
    std::vector<Tok> target; // [label token, EOS]
};

// pairwise examples are never trained and render no target
SftTarget render_target(const Example& e);

// mean negative log-likelihood per target token plus the exact gradient
SftGradResult sft_loss(const PolicyParams& params, const std::vector<SftRow>& batch,
                       const InputProj* proj = nullptr);
// forward only, for finite-difference probes
double sft_loss_value(const PolicyParams& params, const std::vector<SftRow>& batch,
                      const InputProj* proj = nullptr);

struct SftConfig {
    std::uint64_t seed = 31;
    double lr = 1e-2;
    double weight_decay = 1e-5; // decoupled
    int batch = 64;
    int max_steps = 1500;
    int eval_every = 50;
    SampleStrategy strategy = SampleStrategy::Proportional;
    std::vector<TaskKind> tasks = {TaskKind::AlignPoint, TaskKind::SafetyPoint,
                                   TaskKind::QualityPoint};
    int early_stop_patience = 10; // evals without val improvement; 0 disables
    void validate() const;
};

// best checkpoint by mean per-task validation macro-F1; writes log.jsonl,
// checkpoint_best.json(+.meta.json) and state_last.json under run_dir
TrainOutcome sft_train(const SftConfig& cfg, int max_len, const Dataset& ds,
                       const PolicyParams& start, const std::string& run_dir, bool resume);

struct BackboneConfig {
    std::uint64_t seed = 11;
    int steps = 20000;
    int batch = 64;
    double lr = 1e-2;
    int think_max = 0;      // thinking-body length drawn uniformly from [0, think_max]
    double rl_frac = 1.0;   // fraction of rows rendered in the rl grammar
    double echo_frac = 0.7; // fraction of rows that are echo rows (grammar phase)
    double claim_frac = 1.0; // share of claim-task echo rows planting a claim
                             // token instead of a label
    // the carry circuit the judging tasks need — hold an early token across
    // a long body that contains look-alike tokens — does not form under
    // those final conditions directly: distractor tokens of the carried
    // family stall the echo loss, and format rows (whose scene bodies are
    // made of that family yet never predict the random target) push the
    // recurrence to discard it. it does form at short gaps with clean
    // filler, and a formed carry can be stretched. the schedule is
    // therefore three phases on one optimizer state:
    //   A (`steps`, peak `lr`): echo-only, claim gaps short, filler free of
    //     plantable families — the carry groks;
    //   B (`stretch_steps`, peak `stretch_lr`): echo-only, claim gaps ramp
    //     to full length while distractor filler fades in;
    //   C (`grammar_steps`, peak `grammar_lr`): format rows enter at
    //     echo_frac to teach the output grammar while ongoing echo rows
    //     maintain the carry.
    int stretch_steps = 15000;
    double stretch_lr = 3e-3; // peak lr of the stretch-phase cosine
    int grammar_steps = 10000;
    double grammar_lr = 3e-3; // peak lr of the grammar-phase cosine
    void validate() const;
};

// one synthesized training row, in one of two flavors:
//   format row: prompt for a random example with any claim tokens removed,
//     target for a random label in that task's alphabet. teaches the output
//     grammar and which alphabet each task tag selects; the label is
//     independent of the scenes, so no judging rule leaks in. the claim is
//     stripped because a prompt whose claim provably does not predict the
//     target trains the recurrence to discard early claim tokens — the
//     exact opposite of what echo rows build.
//   echo row: the prompt is the task tag followed by filler noise with one
//     token planted near the front, and the target repeats that token.
//     teaches the recurrence to carry an early token across a long gap,
//     which the judging tasks need for claim conditioning. the plant is a
//     random label from the task's alphabet, or — for claim-bearing tasks,
//     with probability claim_frac — a random claim-side token (quantifier,
//     shape or color). the plant is unrelated to any scene, so this stays
//     task-knowledge-free.
// `echo_frac` is the echo-row probability for this draw; `ramp` in [0,1]
// sets the curriculum position: claim-plant bodies grow from 8 to 28
// tokens and filler beyond the plant window admits plantable-family
// distractors with probability ramp.
SftRow backbone_row(const BackboneConfig& cfg, const SceneGenConfig& scene_cfg, Rng& rng,
                    double echo_frac, double ramp);

// trains from scratch on the synthesized corpus; writes checkpoint.json and
// log.jsonl under out_dir and returns the final parameters. runs are cheap
// and cached whole, so there is no mid-run resume.
PolicyParams backbone_train(const BackboneConfig& cfg, Dims dims, const std::string& out_dir);

} // namespace mj
