#include "microjudge/runs.hpp"

#include <fcntl.h>
#include <signal.h>
#include <unistd.h>

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <iostream>

#include <json.hpp>

#include "microjudge/trainio.hpp"
#include "microjudge/util.hpp"

using nlohmann::json;

namespace mj {

namespace {

const std::vector<std::string> kModeNames = {"sft-single", "sft-unified", "rl-single", "mt-rl"};

bool pid_alive(long pid) {
    if (pid <= 0) return false;
    return ::kill((pid_t)pid, 0) == 0 || errno == EPERM;
}

std::string parent_dir(const std::string& path) {
    return std::filesystem::path(path).parent_path().string();
}

bool is_rl_mode(TrainMode m) { return m == TrainMode::RlSingle || m == TrainMode::MtRl; }
bool is_single_mode(TrainMode m) { return m == TrainMode::RlSingle || m == TrainMode::SftSingle; }

} // namespace

const std::string& mode_name(TrainMode m) { return kModeNames[(std::size_t)m]; }

std::optional<TrainMode> mode_from_name(const std::string& name) {
    for (std::size_t i = 0; i < kModeNames.size(); i++)
        if (kModeNames[i] == name) return (TrainMode)i;
    return std::nullopt;
}

LockFile::LockFile(const std::string& dir) : path_(dir + "/lock") {
    std::string body = std::to_string((long)::getpid()) + "\n";
    for (int attempt = 0; attempt < 2; attempt++) {
        int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
        if (fd >= 0) {
            ssize_t n = ::write(fd, body.data(), body.size());
            ::close(fd);
            require(n == (ssize_t)body.size(), "cannot write lock file " + path_);
            return;
        }
        require(errno == EEXIST, "cannot create lock file " + path_ + ": " + std::strerror(errno));
        long holder = 0;
        if (file_exists(path_)) {
            try {
                holder = std::stol(read_file(path_));
            } catch (...) {
                holder = 0;
            }
        }
        if (pid_alive(holder))
            throw check_error("another process (pid " + std::to_string(holder) + ") holds " + path_);
        ::unlink(path_.c_str()); // holder is gone; take the lock over
    }
    throw check_error("cannot acquire lock " + path_);
}

LockFile::~LockFile() { ::unlink(path_.c_str()); }

std::string dataset_dir(const ExperimentConfig& cfg) {
    return cfg.output_dir + "/data/" + data_config_hash(cfg.data);
}

std::string backbone_dir(const ExperimentConfig& cfg) {
    return cfg.output_dir + "/backbone/" + model_section_hash(cfg);
}

Dataset ensure_dataset(const ExperimentConfig& cfg, bool announce) {
    std::string dir = dataset_dir(cfg);
    if (!file_exists(dir + "/manifest.json")) {
        ensure_dir(dir);
        LockFile lock(dir);
        if (!file_exists(dir + "/manifest.json")) { // losing a race is fine
            std::cout << "building dataset at " << dir << "\n";
            build_dataset(cfg.data, dir);
        }
    } else if (announce) {
        std::cout << "dataset up to date at " << dir << " (no-op)\n";
    }
    return load_dataset(dir);
}

PolicyParams ensure_backbone(const ExperimentConfig& cfg) {
    std::string dir = backbone_dir(cfg);
    if (!file_exists(dir + "/checkpoint.json")) {
        ensure_dir(dir);
        LockFile lock(dir);
        if (!file_exists(dir + "/checkpoint.json")) {
            std::cout << "pretraining shared init at " << dir << "\n";
            Dims dims;
            dims.d = cfg.model.d;
            backbone_train(cfg.model.backbone, dims, dir);
        }
    }
    PolicyParams params = load_checkpoint(dir + "/checkpoint.json");
    require(params.dims.d == cfg.model.d, "cached init dimension mismatch at " + dir);
    return params;
}

RunResult run_training(const ExperimentConfig& cfg, TrainMode mode,
                       const std::optional<std::string>& task, bool resume) {
    ExperimentConfig eff = cfg;
    std::optional<TaskKind> single_task;
    if (is_single_mode(mode)) {
        if (!task.has_value())
            throw usage_error(mode_name(mode) + " requires --task with a pointwise task name");
        single_task = task_from_name(*task);
        if (!single_task.has_value()) throw usage_error("unknown task: " + *task);
        if (is_pairwise(*single_task))
            throw usage_error("pairwise tasks are never trained: " + *task);
        if (is_rl_mode(mode))
            eff.rl.tasks = {*single_task};
        else
            eff.sft.tasks = {*single_task};
    } else if (task.has_value()) {
        throw usage_error("--task applies only to the *-single modes");
    }

    std::string hash = config_hash(eff);
    Dataset ds = ensure_dataset(eff);
    PolicyParams init = ensure_backbone(eff);

    std::string run_dir = eff.output_dir + "/runs/" + mode_name(mode) + "/" + hash;
    ensure_dir(run_dir);
    LockFile lock(run_dir);
    atomic_write_file(run_dir + "/config.json", config_to_json(eff));

    std::cout << "training " << mode_name(mode) << " in " << run_dir << "\n";
    TrainOutcome outcome;
    std::string role;
    std::uint64_t seed;
    if (is_rl_mode(mode)) {
        role = "grpo";
        seed = eff.rl.seed;
        outcome = grpo_train(eff.rl, eff.model.max_len, ds, init, init, run_dir, resume);
    } else {
        role = "sft";
        seed = eff.sft.seed;
        outcome = sft_train(eff.sft, eff.model.max_len, ds, init, run_dir, resume);
    }

    json meta{{"mode", mode_name(mode)},
              {"role", role},
              {"config_hash", hash},
              {"seed", seed},
              {"data_hash", data_config_hash(eff.data)},
              {"backbone_hash", model_section_hash(eff)},
              {"best_step", outcome.best_step},
              {"best_val", outcome.best_val},
              {"steps_run", outcome.steps_run},
              {"early_stopped", outcome.early_stopped}};
    if (single_task) meta["task"] = task_name(*single_task);
    atomic_write_file(run_dir + "/run.json", meta.dump(2) + "\n");

    std::cout << "best checkpoint at step " << outcome.best_step << " (val "
              << outcome.best_val << ") after " << outcome.steps_run << " steps\n";
    return RunResult{run_dir, outcome};
}

namespace {

RequiredForm resolve_form(const ExperimentConfig& cfg, const std::string& ckpt_path,
                          const std::optional<RequiredForm>& override) {
    if (override.has_value()) return *override;
    if (cfg.eval.form != "auto") return form_from_name(cfg.eval.form);
    std::string meta_path = ckpt_path;
    const std::string suffix = ".json";
    if (meta_path.size() > suffix.size() &&
        meta_path.compare(meta_path.size() - suffix.size(), suffix.size(), suffix) == 0)
        meta_path = meta_path.substr(0, meta_path.size() - suffix.size());
    meta_path += ".meta.json";
    if (!file_exists(meta_path))
        throw usage_error("cannot infer the output form for " + ckpt_path +
                          " (no sidecar); pass --form rl|sft");
    std::string role = json::parse(read_file(meta_path)).at("role").get<std::string>();
    return role == "sft" ? RequiredForm::Sft : RequiredForm::Rl;
}

} // namespace

EvalReport run_eval(const ExperimentConfig& cfg, const std::string& ckpt_path, Split split,
                    const std::optional<RequiredForm>& form_override) {
    if (!file_exists(ckpt_path)) throw usage_error("checkpoint not found: " + ckpt_path);
    PolicyParams params = load_checkpoint(ckpt_path);
    RequiredForm form = resolve_form(cfg, ckpt_path, form_override);
    Dataset ds = ensure_dataset(cfg);

    std::vector<ParsedVerdict> raw;
    EvalReport report =
        evaluate_suite(params, ds, split, form, cfg.model.max_len, cfg.data.seed, &raw);

    std::string prefix = parent_dir(ckpt_path) + "/eval_" + split_name(split);
    atomic_write_file(prefix + ".json", report_to_json(report));
    atomic_write_file(prefix + ".txt", report_to_text(report));
    atomic_write_file(prefix + ".csv", predictions_csv(ds, split, raw));
    std::cout << report_to_text(report);
    return report;
}

namespace {

std::string curve_csv(const std::string& log_path) {
    std::string out = "step,loss,r_acc,r_for,kl\n";
    for (const auto& line : read_lines(log_path)) {
        if (line.empty()) continue;
        json row = json::parse(line);
        out += std::to_string(row.at("step").get<int>()) + ",";
        out += json(row.at("loss")).dump();
        if (row.contains("mean_r_acc")) {
            out += "," + json(row.at("mean_r_acc")).dump() + "," +
                   json(row.at("mean_r_for")).dump() + "," + json(row.at("mean_kl")).dump();
        } else {
            out += ",,,";
        }
        out += "\n";
    }
    return out;
}

} // namespace

ComparisonReport run_report(const ExperimentConfig& cfg, const std::vector<std::string>& run_dirs) {
    Dataset ds = ensure_dataset(cfg);
    PolicyParams init = ensure_backbone(cfg);

    std::vector<PolicyParams> loaded;
    loaded.reserve(run_dirs.size());
    std::vector<NamedCheckpoint> rows;
    rows.push_back({"Off-the-shelf", &init, RequiredForm::Rl});

    std::vector<json> metas;
    for (const auto& dir : run_dirs) {
        if (!file_exists(dir + "/run.json"))
            throw usage_error("not a completed run directory (no run.json): " + dir);
        json meta = json::parse(read_file(dir + "/run.json"));
        if (!file_exists(dir + "/checkpoint_best.json"))
            throw usage_error("run has no best checkpoint: " + dir);
        loaded.push_back(load_checkpoint(dir + "/checkpoint_best.json"));
        metas.push_back(meta);
    }
    for (std::size_t i = 0; i < run_dirs.size(); i++) {
        const json& meta = metas[i];
        std::string mode = meta.at("mode").get<std::string>();
        std::string name;
        if (mode == "mt-rl") name = "MT-RL";
        else if (mode == "sft-unified") name = "SFT-Unified";
        else if (mode == "rl-single") name = "RL-Single:" + meta.at("task").get<std::string>();
        else name = "SFT-Single:" + meta.at("task").get<std::string>();
        RequiredForm form =
            meta.at("role").get<std::string>() == "sft" ? RequiredForm::Sft : RequiredForm::Rl;
        rows.push_back({name, &loaded[i], form});
    }

    ComparisonReport report = generalization_eval(rows, ds, cfg.model.max_len);

    std::string report_dir = cfg.output_dir + "/report";
    ensure_dir(report_dir);
    atomic_write_file(report_dir + "/comparison.json", comparison_to_json(report));
    atomic_write_file(report_dir + "/comparison.txt", comparison_to_text(report));
    for (std::size_t i = 0; i < run_dirs.size(); i++)
        atomic_write_file(run_dirs[i] + "/curve.csv", curve_csv(run_dirs[i] + "/log.jsonl"));

    std::cout << comparison_to_text(report);
    return report;
}

} // namespace mj
