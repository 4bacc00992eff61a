#pragma once
// experiment orchestration on disk. stages cache under the output directory,
// each keyed by the hash of the config slice that determines it:
//   <out>/data/<data-hash>/          dataset jsonl files + manifest
//   <out>/backbone/<model-hash>/     the shared init checkpoint + its log
//   <out>/runs/<mode>/<config-hash>/ config copy, log, checkpoints, reports
// a pid lock file guards every directory that is being written; locks left by
// dead processes are taken over.

#include <optional>
#include <string>
#include <vector>

#include "microjudge/config.hpp"
#include "microjudge/eval.hpp"

namespace mj {

enum class TrainMode { SftSingle, SftUnified, RlSingle, MtRl };
const std::string& mode_name(TrainMode m);
std::optional<TrainMode> mode_from_name(const std::string& name);

class LockFile {
  public:
    explicit LockFile(const std::string& dir);
    ~LockFile();
    LockFile(const LockFile&) = delete;
    LockFile& operator=(const LockFile&) = delete;

  private:
    std::string path_;
};

std::string dataset_dir(const ExperimentConfig& cfg);
std::string backbone_dir(const ExperimentConfig& cfg);

// build when missing, then load. building announces itself on stdout; a
// cache hit prints a no-op notice only when `announce` is set.
Dataset ensure_dataset(const ExperimentConfig& cfg, bool announce = false);
PolicyParams ensure_backbone(const ExperimentConfig& cfg);

struct RunResult {
    std::string run_dir;
    TrainOutcome outcome;
};

// resolves the mode's task list (single modes require `task`, the others
// reject it), hashes the effective config, runs the trainer from the shared
// init, and records run.json
RunResult run_training(const ExperimentConfig& cfg, TrainMode mode,
                       const std::optional<std::string>& task, bool resume);

// evaluates a checkpoint file on one split; writes eval_<split>.{json,txt,csv}
// next to the checkpoint and prints the text table
EvalReport run_eval(const ExperimentConfig& cfg, const std::string& ckpt_path, Split split,
                    const std::optional<RequiredForm>& form_override);

// cross-run pairwise comparison: an Off-the-shelf row for the shared init
// plus one row per run dir. writes <out>/report/comparison.{json,txt} and a
// curve.csv per run dir, and prints the table.
ComparisonReport run_report(const ExperimentConfig& cfg, const std::vector<std::string>& run_dirs);

} // namespace mj
