#include "microjudge/sft.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "microjudge/eval.hpp"
#include "microjudge/optim.hpp"
#include "microjudge/trainio.hpp"
#include "microjudge/util.hpp"

using nlohmann::json;

namespace mj {

void SftConfig::validate() const {
    require(lr > 0.0, "sft: lr must be positive");
    require(weight_decay >= 0.0, "sft: weight_decay must be >= 0");
    require(batch >= 1, "sft: batch must be positive");
    require(max_steps >= 1, "sft: max_steps must be >= 1");
    require(eval_every >= 1, "sft: eval_every must be >= 1");
    require(!tasks.empty(), "sft: task list is empty");
    for (TaskKind t : tasks) require(!is_pairwise(t), "sft: pairwise tasks are never trained");
    require(early_stop_patience >= 0, "sft: early_stop_patience must be >= 0");
}

SftTarget render_target(const Example& e) {
    require(!is_pairwise(e.task), "render_target: pairwise examples are never trained");
    SftTarget t;
    t.example_id = e.id;
    t.target = {token_from_label(e.gold), tok::EOS};
    return t;
}

SftGradResult sft_loss(const PolicyParams& params, const std::vector<SftRow>& batch,
                       const InputProj* proj) {
    return sft_grad_parallel(params, batch, proj);
}

double sft_loss_value(const PolicyParams& params, const std::vector<SftRow>& batch,
                      const InputProj* proj) {
    require(!batch.empty(), "sft_loss_value: empty batch");
    double nll = 0.0, t_tot = 0.0;
    for (const auto& row : batch) {
        require(!row.target.empty(), "sft_loss_value: empty target");
        PromptCtx pc = prompt_forward(params, row.prompt, proj);
        OutputScore score = output_logprobs(params, pc, row.target, proj);
        for (double lp : score.logprobs) nll -= lp;
        t_tot += (double)row.target.size();
    }
    return nll / t_tot;
}

namespace {

// mean over tasks of per-task validation macro-F1, plus the breakdown
double val_macro_f1(const PolicyParams& params, const std::vector<TaskKind>& tasks,
                    const std::vector<std::vector<const Example*>>& pools, int max_len,
                    json& breakdown) {
    InputProj proj = build_input_proj(params);
    double sum = 0.0;
    for (std::size_t k = 0; k < tasks.size(); k++) {
        auto verdicts = predict_batch_parallel(params, pools[k], max_len, &proj);
        std::vector<std::optional<Label>> preds;
        std::vector<Label> golds;
        for (std::size_t i = 0; i < pools[k].size(); i++) {
            preds.push_back(verdicts[i].label);
            golds.push_back(pools[k][i]->gold);
        }
        double f1 = macro_f1(preds, golds, label_alphabet(tasks[k]));
        breakdown[task_name(tasks[k])] = f1;
        sum += f1;
    }
    return sum / (double)tasks.size();
}

} // namespace

TrainOutcome sft_train(const SftConfig& cfg, int max_len, const Dataset& ds,
                       const PolicyParams& start, const std::string& run_dir, bool resume) {
    cfg.validate();
    require(max_len >= 2, "sft: max_len too small for a label and EOS");
    ensure_dir(run_dir);

    const std::string log_path = run_dir + "/log.jsonl";
    const std::string state_path = run_dir + "/state_last.json";

    AdamConfig adam_cfg;
    adam_cfg.weight_decay = cfg.weight_decay;
    TrainerState st;
    st.params = start;
    st.adam = Adam(start.dims.flat_size(), adam_cfg);
    if (resume) {
        require(file_exists(state_path), "--resume: no state_last.json in " + run_dir);
        load_state(state_path, st, "sft");
        st.adam.cfg = adam_cfg;
        truncate_log(log_path, st.step);
    } else {
        atomic_write_file(log_path, "");
    }

    std::ofstream log(log_path, std::ios::app);
    require(log.good(), "cannot open " + log_path);

    std::vector<std::vector<const Example*>> val_pools(cfg.tasks.size());
    for (std::size_t k = 0; k < cfg.tasks.size(); k++) {
        for (const auto& e : ds.split(Split::Val))
            if (e.task == cfg.tasks[k]) val_pools[k].push_back(&e);
        require(!val_pools[k].empty(),
                "sft: validation split has no examples for " + task_name(cfg.tasks[k]));
    }

    const auto& train_split = ds.split(Split::Train);
    TrainOutcome outcome;

    for (int s = st.step + 1; s <= cfg.max_steps; s++) {
        Rng batch_rng(derive_seed(cfg.seed, {0x5F7Bull, (std::uint64_t)s}));
        auto idx = sample_batch(ds, Split::Train, cfg.strategy, (std::size_t)cfg.batch, batch_rng,
                                cfg.tasks);
        std::vector<SftRow> rows(idx.size());
        for (std::size_t i = 0; i < idx.size(); i++) {
            const Example& e = train_split[idx[i]];
            rows[i].prompt = encode_example(e);
            rows[i].target = render_target(e).target;
        }

        InputProj proj = build_input_proj(st.params);
        SftGradResult res = sft_grad_parallel(st.params, rows, &proj);
        if (!std::isfinite(res.loss))
            throw numeric_error("sft_train: non-finite loss at step " + std::to_string(s));

        st.adam.step(st.params.flat, res.grad,
                     cosine_lr((std::uint64_t)s - 1, (std::uint64_t)cfg.max_steps, cfg.lr));
        st.step = s;

        json row{{"role", "sft"}, {"step", s}, {"loss", res.loss}};

        bool stop = false;
        if (s % cfg.eval_every == 0 || s == cfg.max_steps) {
            json breakdown = json::object();
            double val = val_macro_f1(st.params, cfg.tasks, val_pools, max_len, breakdown);
            row["val_macro_f1"] = val;
            row["val_f1_per_task"] = breakdown;

            if (val > st.best_val) {
                st.best_val = val;
                st.best_step = s;
                st.evals_since_improve = 0;
                save_best_checkpoint(run_dir, st.params, s, val, "sft");
            } else {
                st.evals_since_improve++;
            }
            save_state(state_path, st, "sft");
            if (cfg.early_stop_patience > 0 && st.evals_since_improve >= cfg.early_stop_patience)
                stop = true;
        }
        log << row.dump() << '\n';
        log.flush();
        if (stop) {
            outcome.early_stopped = true;
            break;
        }
    }

    if (st.best_step == 0 && st.step > 0) save_state(state_path, st, "sft");

    outcome.steps_run = st.step;
    outcome.best_step = st.best_step;
    outcome.best_val = st.best_val;
    return outcome;
}

void BackboneConfig::validate() const {
    require(steps >= 1, "backbone: steps must be >= 1");
    require(batch >= 1, "backbone: batch must be positive");
    require(lr > 0.0, "backbone: lr must be positive");
    require(think_max >= 0 && think_max <= 16, "backbone: think_max outside [0,16]");
    require(rl_frac >= 0.0 && rl_frac <= 1.0, "backbone: rl_frac outside [0,1]");
    require(echo_frac >= 0.0 && echo_frac <= 1.0, "backbone: echo_frac outside [0,1]");
    require(claim_frac >= 0.0 && claim_frac <= 1.0, "backbone: claim_frac outside [0,1]");
    require(stretch_steps >= 0, "backbone: stretch_steps must be >= 0");
    require(stretch_lr > 0.0, "backbone: stretch_lr must be positive");
    require(grammar_steps >= 0, "backbone: grammar_steps must be >= 0");
    require(grammar_lr > 0.0, "backbone: grammar_lr must be positive");
}

SftRow backbone_row(const BackboneConfig& cfg, const SceneGenConfig& scene_cfg, Rng& rng,
                    double echo_frac, double ramp) {
    constexpr TaskKind kTasks[] = {TaskKind::AlignPoint, TaskKind::SafetyPoint,
                                   TaskKind::QualityPoint, TaskKind::AlignPair,
                                   TaskKind::SafetyPair};
    TaskKind task = kTasks[rng.uniform_int(5)];
    const auto alphabet = label_alphabet(task);
    Tok label = token_from_label(alphabet[rng.uniform_int(alphabet.size())]);

    SftRow row;
    Tok plant = label;
    if (rng.bernoulli(echo_frac)) {
        // echo row: the target token is planted near the front of a filler
        // prompt, so hitting it requires carrying one early token across a
        // long gap. the plant is the task's verdict label or, for
        // claim-bearing tasks with probability claim_frac, a claim-side
        // token (quantifier, shape or color), so the carry circuit also
        // keys on the tokens a claim prompt opens with. the plant is
        // unrelated to any scene, so no judging rule leaks in.
        // claim-side tokens double as the object-attribute tokens of scene
        // bodies, where they carry no verdict information, so the store
        // gate has to be positional rather than keyed on the token alone.
        // inside the plant window (positions 0..3 of the body) filler always
        // excludes the plantable families; beyond it, distractors from those
        // families fade in with the curriculum (probability `ramp`).
        constexpr Tok kClaimLo = tok::PRESENT;
        constexpr Tok kClaimHi = tok::BLUE;
        if (cfg.claim_frac > 0.0 && has_claim(task) && rng.bernoulli(cfg.claim_frac))
            plant = kClaimLo + (Tok)rng.uniform_int(kClaimHi - kClaimLo + 1);
        constexpr int kLowFill = kClaimLo - tok::TASK_ALIGN_POINT;      // 14..20
        constexpr int kFillSpan = kLowFill + (tok::THINK_7 - kClaimHi); // plus 30..47
        constexpr int kWindow = 4; // plant window length
        // the nine-way claim carry only groks at short gaps; its bodies
        // start at 8 tokens and stretch to the label plants' full 28
        const bool claim_plant = plant >= kClaimLo && plant <= kClaimHi;
        int body_cap = claim_plant ? 8 + (int)std::llround(20.0 * ramp) : 28;
        int body_len = 1 + (int)rng.uniform_int((std::uint64_t)body_cap);
        int plant_pos = (int)rng.uniform_int((std::uint64_t)std::min(body_len, kWindow));
        row.prompt.push_back(tok::TASK_ALIGN_POINT + (Tok)task);
        for (int i = 0; i < body_len; i++) {
            if (i == plant_pos) {
                row.prompt.push_back(plant);
            } else if (i >= kWindow && rng.bernoulli(ramp)) {
                row.prompt.push_back(tok::TASK_ALIGN_POINT +
                                     (Tok)rng.uniform_int(tok::THINK_7 - tok::TASK_ALIGN_POINT + 1));
            } else {
                int f = (int)rng.uniform_int(kFillSpan);
                row.prompt.push_back(f < kLowFill ? tok::TASK_ALIGN_POINT + f
                                                  : kClaimHi + 1 + (f - kLowFill));
            }
        }
        row.prompt.push_back(tok::EOP);
    } else {
        Example e;
        e.task = task;
        if (has_claim(task)) e.claim = generate_claim(rng);
        int arity = is_pairwise(task) ? 2 : 1;
        for (int i = 0; i < arity; i++) e.scenes.push_back(generate_scene(rng, scene_cfg));
        row.prompt = encode_example(e);
        // drop the claim tokens (see backbone_row contract): a random-label
        // target must not train the recurrence against claim carrying
        if (has_claim(task))
            row.prompt.erase(row.prompt.begin() + 1, row.prompt.begin() + 4);
    }
    if (rng.bernoulli(cfg.rl_frac)) {
        row.target.push_back(tok::THINK_OPEN);
        int think_len = (int)rng.uniform_int((std::uint64_t)cfg.think_max + 1);
        for (int i = 0; i < think_len; i++)
            row.target.push_back(tok::THINK_0 + (Tok)rng.uniform_int(8));
        row.target.push_back(tok::THINK_CLOSE);
        row.target.push_back(tok::BOX_OPEN);
        row.target.push_back(tok::JSON_LABEL_KEY);
        row.target.push_back(plant);
        row.target.push_back(tok::BOX_CLOSE);
        row.target.push_back(tok::EOS);
    } else {
        row.target = {plant, tok::EOS};
    }
    return row;
}

PolicyParams backbone_train(const BackboneConfig& cfg, Dims dims, const std::string& out_dir) {
    cfg.validate();
    ensure_dir(out_dir);
    const std::string log_path = out_dir + "/log.jsonl";
    atomic_write_file(log_path, "");
    std::ofstream log(log_path, std::ios::app);
    require(log.good(), "cannot open " + log_path);

    SceneGenConfig scene_cfg; // fixed defaults: the corpus predates any dataset config
    PolicyParams params = init_params(derive_seed(cfg.seed, {0x1217ull}), dims);
    Adam adam(params.dims.flat_size(), AdamConfig{});

    // three phases on one optimizer state (see BackboneConfig): A groks the
    // carry at short clean gaps, B stretches it while distractors fade in,
    // C adds format rows for the output grammar. each phase runs its own
    // cosine so the next one re-heats a settled solution gently.
    const int total = cfg.steps + cfg.stretch_steps + cfg.grammar_steps;
    for (int s = 1; s <= total; s++) {
        double ramp, echo, lr;
        if (s <= cfg.steps) {
            ramp = 0.0;
            echo = 1.0;
            lr = cosine_lr((std::uint64_t)s - 1, (std::uint64_t)cfg.steps, cfg.lr);
        } else if (s <= cfg.steps + cfg.stretch_steps) {
            ramp = double(s - cfg.steps) / cfg.stretch_steps;
            echo = 1.0;
            lr = cosine_lr((std::uint64_t)(s - cfg.steps) - 1, (std::uint64_t)cfg.stretch_steps,
                           cfg.stretch_lr);
        } else {
            ramp = 1.0;
            echo = cfg.echo_frac;
            lr = cosine_lr((std::uint64_t)(s - cfg.steps - cfg.stretch_steps) - 1,
                           (std::uint64_t)cfg.grammar_steps, cfg.grammar_lr);
        }
        std::vector<SftRow> rows((std::size_t)cfg.batch);
        for (std::size_t i = 0; i < rows.size(); i++) {
            Rng rng(derive_seed(cfg.seed, {0xBBull, (std::uint64_t)s, (std::uint64_t)i}));
            rows[i] = backbone_row(cfg, scene_cfg, rng, echo, ramp);
        }
        InputProj proj = build_input_proj(params);
        SftGradResult res = sft_grad_parallel(params, rows, &proj);
        if (!std::isfinite(res.loss))
            throw numeric_error("backbone_train: non-finite loss at step " + std::to_string(s));
        adam.step(params.flat, res.grad, lr);
        json row{{"role", "backbone"}, {"step", s}, {"loss", res.loss}};
        log << row.dump() << '\n';
    }
    log.flush();
    save_checkpoint(params, out_dir + "/checkpoint.json");
    return params;
}

} // namespace mj
