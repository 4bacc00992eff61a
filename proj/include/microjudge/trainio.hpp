#pragma once
// persistence shared by every trainer: resumable optimizer state, append-only
// jsonl logs with resume truncation, and best-checkpoint files with their
// {step, val_r_acc, role} sidecar. doubles round-trip as %.17g strings so a
// resumed run continues bit-identically.

#include <string>
#include <vector>

#include "microjudge/optim.hpp"
#include "microjudge/policy.hpp"

namespace mj {

struct TrainerState {
    PolicyParams params;
    Adam adam;
    int step = 0;
    double best_val = -1.0; // any real score beats the sentinel
    int best_step = 0;
    int evals_since_improve = 0;
};

void save_state(const std::string& path, const TrainerState& st, const std::string& role);
void load_state(const std::string& path, TrainerState& st, const std::string& role);

// drop log rows past the resume step so a resumed run reproduces the
// uninterrupted log byte for byte
void truncate_log(const std::string& path, int keep_step);

void save_best_checkpoint(const std::string& run_dir, const PolicyParams& params, int step,
                          double val, const std::string& role);

} // namespace mj
