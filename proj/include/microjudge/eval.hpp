#pragma once
// greedy prediction, macro-F1 with explicit confusion counts, per-task suite
// reports, and the held-out pairwise comparison harness. a parsed label is
// scored wherever one exists, whatever grammar it arrived in; format
// adherence against the requested form is tracked as a separate axis, the
// same split the reward makes. the two pairwise families stand in for the
// held-out comparison benchmarks: AlignPair for the alignment family,
// SafetyPair for the safety family.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "microjudge/dataset.hpp"
#include "microjudge/policy.hpp"
#include "microjudge/rewards.hpp"

namespace mj {

const std::string& form_name(RequiredForm f);
RequiredForm form_from_name(const std::string& name);

struct ClassMetrics {
    Label label = Label::Yes;
    int tp = 0, fp = 0, fn = 0;
    double precision = 0.0, recall = 0.0, f1 = 0.0;
};

struct F1Result {
    double macro_f1 = 0.0;
    std::vector<ClassMetrics> per_class; // label_set order
};

// absent predictions (and predictions outside label_set) count against the
// gold class's recall and credit no class's precision
F1Result compute_f1(const std::vector<std::optional<Label>>& preds, const std::vector<Label>& golds,
                    const std::vector<Label>& label_set);
double macro_f1(const std::vector<std::optional<Label>>& preds, const std::vector<Label>& golds,
                const std::vector<Label>& label_set);

// greedy decode + parse; deterministic
ParsedVerdict predict(const PolicyParams& params, const Example& example, int max_len,
                      const InputProj* proj = nullptr);

struct TaskReport {
    TaskKind task = TaskKind::AlignPoint;
    int n = 0;
    double macro_f1 = 0.0;
    std::vector<ClassMetrics> per_class;
    double format_rate = 0.0;              // fraction parsing clean in the requested form
    std::map<std::string, int> failures;   // failure name -> count, nonzero only
};

struct EvalReport {
    std::string checkpoint_id; // content hash of the evaluated parameters
    std::string split;
    RequiredForm form = RequiredForm::Rl;
    std::uint64_t seed = 0;
    std::vector<TaskReport> tasks; // TaskKind declaration order
};

// short content hash identifying a parameter vector
std::string checkpoint_id(const PolicyParams& params);

// scores every example of the split, grouped per task. when `raw` is given it
// receives one verdict per example in split order (for the predictions csv).
EvalReport evaluate_suite(const PolicyParams& params, const Dataset& ds, Split split,
                          RequiredForm form, int max_len, std::uint64_t seed,
                          std::vector<ParsedVerdict>* raw = nullptr);

std::string report_to_json(const EvalReport& r);
std::string report_to_text(const EvalReport& r);
// columns: id, task, gold, pred, failure ("" prediction when no label parsed)
std::string predictions_csv(const Dataset& ds, Split split, const std::vector<ParsedVerdict>& raw);

struct NamedCheckpoint {
    std::string name;
    const PolicyParams* params = nullptr;
    RequiredForm form = RequiredForm::Rl; // the form this judge was trained to emit
};

struct ComparisonRow {
    std::string name;
    RequiredForm form = RequiredForm::Rl;
    std::vector<std::pair<TaskKind, double>> per_task; // pairwise tasks, declaration order
    double mean_f1 = 0.0;
};

struct ComparisonReport {
    std::vector<ComparisonRow> rows; // caller order
    // mean_f1("MT-RL") - mean_f1("SFT-Unified") when both rows are present
    std::optional<double> gap;
};

ComparisonReport generalization_eval(const std::vector<NamedCheckpoint>& checkpoints,
                                     const Dataset& ds, int max_len);

std::string comparison_to_json(const ComparisonReport& r);
std::string comparison_to_text(const ComparisonReport& r);

} // namespace mj
