#pragma once
// batch kernels, each in two variants: *_serial is the plain reference
// implementation, *_parallel is the OpenMP production path. the parallel
// gradient kernels accumulate into per-unit buffers that are reduced in a
// fixed index order, so their results are byte-identical for any thread
// count (including builds without OpenMP, where the pragmas are no-ops).
// rollout and prediction kernels write to disjoint slots and are exact in
// both variants by construction.

#include <cstdint>
#include <optional>
#include <vector>

#include "microjudge/grpo.hpp"
#include "microjudge/policy.hpp"
#include "microjudge/rewards.hpp"

namespace mj {

struct RolloutSpec {
    const Example* example = nullptr;
    std::uint64_t seed = 0;
};

std::vector<RolloutGroup> collect_rollouts_serial(const PolicyParams& old_params,
                                                  const PolicyParams& ref_params,
                                                  const std::vector<RolloutSpec>& specs, int G,
                                                  const SampleOptions& opt, double alpha);
std::vector<RolloutGroup> collect_rollouts_parallel(const PolicyParams& old_params,
                                                    const PolicyParams& ref_params,
                                                    const std::vector<RolloutSpec>& specs, int G,
                                                    const SampleOptions& opt, double alpha);

ObjectiveResult grpo_grad_serial(const PolicyParams& params, const std::vector<RolloutGroup>& groups,
                                 double clip_eps, double kl_beta, const InputProj* proj = nullptr);
ObjectiveResult grpo_grad_parallel(const PolicyParams& params, const std::vector<RolloutGroup>& groups,
                                   double clip_eps, double kl_beta, const InputProj* proj = nullptr);

struct SftRow {
    std::vector<Tok> prompt;
    std::vector<Tok> target;
};

struct SftGradResult {
    double loss = 0.0; // mean negative log-likelihood per target token
    std::vector<double> grad;
};

SftGradResult sft_grad_serial(const PolicyParams& params, const std::vector<SftRow>& batch,
                              const InputProj* proj = nullptr);
SftGradResult sft_grad_parallel(const PolicyParams& params, const std::vector<SftRow>& batch,
                                const InputProj* proj = nullptr);

// greedy decode + parse for each prompt
std::vector<ParsedVerdict> predict_batch_serial(const PolicyParams& params,
                                                const std::vector<const Example*>& examples,
                                                int max_len, const InputProj* proj = nullptr);
std::vector<ParsedVerdict> predict_batch_parallel(const PolicyParams& params,
                                                  const std::vector<const Example*>& examples,
                                                  int max_len, const InputProj* proj = nullptr);

} // namespace mj
