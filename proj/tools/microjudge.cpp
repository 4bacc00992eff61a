// command-line driver: dataset generation, the four training modes, split
// evaluation, cross-run comparison reports, and gradient verification.
// exit codes: 0 ok, 1 check failure, 2 usage, 3 numerical divergence.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "microjudge/config.hpp"
#include "microjudge/gradcheck.hpp"
#include "microjudge/runs.hpp"
#include "microjudge/util.hpp"

using namespace mj;

int main(int argc, char** argv) {
    CLI::App app{"microjudge: multi-task judge training on synthetic scenes"};
    app.require_subcommand(1);
    app.fallthrough(); // global flags may follow the subcommand name

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    bool resume = false;
    app.add_option("--config", config_path, "experiment config JSON (defaults when omitted)");
    app.add_option("--seed", seed, "override the seed of the section the subcommand uses");
    app.add_option("--out", out_dir, "override the output directory");
    app.add_flag("--resume", resume, "continue an interrupted training run");

    auto* gen = app.add_subcommand("gen-data", "generate the dataset for the config");

    auto* train = app.add_subcommand("train", "train one judge");
    std::string mode_str;
    std::optional<std::string> task;
    train->add_option("--mode", mode_str, "sft-single | sft-unified | rl-single | mt-rl")
        ->required();
    train->add_option("--task", task, "pointwise task for the *-single modes");

    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on one split");
    std::string ckpt_path, split_str;
    std::optional<std::string> form_str;
    eval_cmd->add_option("--ckpt", ckpt_path, "checkpoint JSON path")->required();
    eval_cmd->add_option("--split", split_str, "train | val | test | ood")->required();
    eval_cmd->add_option("--form", form_str, "rl | sft (otherwise the config's eval.form)");

    auto* report = app.add_subcommand("report", "compare completed runs on the held-out split");
    std::vector<std::string> run_dirs;
    report->add_option("runs", run_dirs, "run directories")->expected(-1);

    auto* gc = app.add_subcommand("grad-check", "verify gradients against finite differences");
    int gc_instances = 20, gc_coords = 100;
    double gc_step = 1e-5, gc_tol = 1e-4;
    bool gc_corrupt = false;
    gc->add_option("--instances", gc_instances, "random instances to probe");
    gc->add_option("--coords", gc_coords, "coordinates per instance");
    gc->add_option("--step", gc_step, "finite-difference step");
    gc->add_option("--tol", gc_tol, "max relative error accepted");
    gc->add_flag("--corrupt", gc_corrupt, "negative control: bend one coordinate, expect FAIL")
        ->group(""); // test hook, hidden from help

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        ExperimentConfig cfg =
            config_path.empty() ? ExperimentConfig{} : load_config(config_path);
        if (out_dir) cfg.output_dir = *out_dir;
        if (resume && !train->parsed()) throw usage_error("--resume applies only to train");

        if (gen->parsed()) {
            if (seed) cfg.data.seed = *seed;
            Dataset ds = ensure_dataset(cfg, true);
            std::cout << manifest_to_json(ds.manifest);
            return 0;
        }

        if (train->parsed()) {
            auto mode = mode_from_name(mode_str);
            if (!mode) throw usage_error("unknown mode: " + mode_str);
            if (seed) {
                if (*mode == TrainMode::RlSingle || *mode == TrainMode::MtRl)
                    cfg.rl.seed = *seed;
                else
                    cfg.sft.seed = *seed;
            }
            run_training(cfg, *mode, task, resume);
            return 0;
        }

        if (eval_cmd->parsed()) {
            auto split = split_from_name(split_str);
            if (!split) throw usage_error("unknown split: " + split_str);
            std::optional<RequiredForm> form;
            if (form_str) {
                if (*form_str != "rl" && *form_str != "sft")
                    throw usage_error("--form must be rl or sft");
                form = form_from_name(*form_str);
            }
            run_eval(cfg, ckpt_path, *split, form);
            return 0;
        }

        if (report->parsed()) {
            if (run_dirs.empty()) throw usage_error("report needs at least one run directory");
            run_report(cfg, run_dirs);
            return 0;
        }

        if (gc->parsed()) {
            GradCheckReport r = run_grad_check(seed.value_or(7), gc_instances, gc_coords, gc_step,
                                               gc_tol, gc_corrupt);
            std::cout << grad_check_summary(r);
            return r.pass ? 0 : 1;
        }
    } catch (const usage_error& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const numeric_error& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
