#pragma once
// central finite-difference verification of the hand-derived gradients, over
// random parameter draws and random token sequences. the corrupt flag is a
// negative control: it perturbs one probed gradient coordinate and must fail.

#include <cstdint>
#include <string>

namespace mj {

struct GradCheckReport {
    double max_rel_logprob = 0.0; // sequence log-prob gradient probes
    double max_rel_sft = 0.0;     // batch cross-entropy gradient probes
    int probes = 0;
    double tolerance = 0.0;
    bool pass = false;
};

GradCheckReport run_grad_check(std::uint64_t seed, int instances, int coords_per_instance,
                               double fd_step, double tolerance, bool corrupt);

std::string grad_check_summary(const GradCheckReport& r);

} // namespace mj
