#include "microjudge/grpo.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "microjudge/kernels.hpp"
#include "microjudge/optim.hpp"
#include "microjudge/trainio.hpp"
#include "microjudge/util.hpp"

using nlohmann::json;

namespace mj {

void RlConfig::validate() const {
    require(G >= 2, "rl: G must be >= 2");
    require(clip_eps > 0.0 && clip_eps < 1.0, "rl: clip_eps must be in (0,1)");
    require(kl_beta >= 0.0, "rl: kl_beta must be >= 0");
    require(alpha >= 0.0 && alpha <= 1.0, "rl: alpha must be in [0,1]");
    require(lr > 0.0, "rl: lr must be positive");
    require(global_batch >= 1 && rollout_batch >= 1, "rl: batch sizes must be positive");
    require(rollout_batch % global_batch == 0, "rl: rollout_batch must be a multiple of global_batch");
    require(max_steps >= 1, "rl: max_steps must be >= 1");
    require(eval_every >= 1, "rl: eval_every must be >= 1");
    require(reuse_epochs >= 1, "rl: reuse_epochs must be >= 1");
    int cycle = rollout_batch / global_batch * reuse_epochs;
    require(eval_every % cycle == 0,
            "rl: eval_every must be a multiple of rollout_batch/global_batch*reuse_epochs "
            "so resume points align with rollout boundaries");
    require(temperature > 0.0, "rl: temperature must be positive");
    require(!tasks.empty(), "rl: task list is empty");
    for (TaskKind t : tasks) require(!is_pairwise(t), "rl: pairwise tasks are never trained");
    require(early_stop_patience >= 0, "rl: early_stop_patience must be >= 0");
}

std::vector<double> compute_advantages(const std::vector<double>& rewards) {
    require(rewards.size() >= 2, "compute_advantages: need G >= 2");
    double n = (double)rewards.size();
    double mean = 0.0;
    for (double r : rewards) mean += r;
    mean /= n;
    double var = 0.0;
    for (double r : rewards) var += (r - mean) * (r - mean);
    var /= n; // population variance
    double sd = std::sqrt(var);
    std::vector<double> adv(rewards.size(), 0.0);
    if (sd < 1e-8) return adv; // degenerate group carries no signal
    for (std::size_t i = 0; i < rewards.size(); i++) adv[i] = (rewards[i] - mean) / sd;
    return adv;
}

void fill_advantages(RolloutGroup& g) {
    std::vector<double> totals;
    totals.reserve(g.rewards.size());
    for (const auto& r : g.rewards) totals.push_back(r.r_total);
    g.advantages = compute_advantages(totals);
}

RolloutGroup collect_group(const PolicyParams& old_params, const PolicyParams& ref_params,
                           const Example& example, int G, const SampleOptions& opt, double alpha,
                           std::uint64_t seed, const InputProj* old_proj,
                           const InputProj* ref_proj) {
    require(G >= 2, "collect_group: need G >= 2");
    RolloutGroup g;
    g.example_id = example.id;
    g.gold = example.gold;
    g.prompt = encode_example(example);
    g.traces.reserve((std::size_t)G);

    for (int i = 0; i < G; i++) {
        Rng rng(derive_seed(seed, {0x77ACEull, (std::uint64_t)i}));
        g.traces.push_back(sample_sequence(old_params, g.prompt, opt, rng, old_proj));
    }
    // score under the rl grammar and record the reference's view of each trace
    PromptCtx ref_pc = prompt_forward(ref_params, g.prompt, ref_proj);
    for (const auto& trace : g.traces) {
        ParsedVerdict parsed = parse_output(trace.output);
        RewardBreakdown b;
        b.alpha = alpha;
        b.r_acc = accuracy_reward(parsed, example.gold);
        b.r_for = format_reward(parsed, RequiredForm::Rl);
        b.r_total = total_reward(b.r_acc, b.r_for, alpha);
        g.rewards.push_back(b);
        g.failures.push_back(parsed.failure);
        g.ref_lps.push_back(output_logprobs(ref_params, ref_pc, trace.output, ref_proj).logprobs);
    }
    return g;
}

std::vector<double> ratio_terms(const PolicyParams& params, const PolicyParams& old_params,
                                const GenerationTrace& trace) {
    SeqLogProb cur = sequence_log_prob(params, trace.prompt, trace.output);
    SeqLogProb old = sequence_log_prob(old_params, trace.prompt, trace.output);
    std::vector<double> rho(trace.output.size());
    for (std::size_t t = 0; t < rho.size(); t++) {
        rho[t] = std::exp(cur.per_token[t] - old.per_token[t]);
        if (!std::isfinite(rho[t]))
            throw numeric_error("ratio_terms: non-finite ratio at token " + std::to_string(t));
    }
    return rho;
}

double kl_estimate(const PolicyParams& params, const PolicyParams& ref_params,
                   const GenerationTrace& trace) {
    if (trace.output.empty()) return 0.0;
    SeqLogProb cur = sequence_log_prob(params, trace.prompt, trace.output);
    SeqLogProb ref = sequence_log_prob(ref_params, trace.prompt, trace.output);
    double k3 = 0.0;
    for (std::size_t t = 0; t < trace.output.size(); t++) {
        double delta = ref.per_token[t] - cur.per_token[t];
        double v = std::expm1(delta) - delta;
        if (!std::isfinite(v))
            throw numeric_error("kl_estimate: non-finite term at token " + std::to_string(t));
        k3 += v;
    }
    return k3 / (double)trace.output.size();
}

ObjectiveResult grpo_objective(const PolicyParams& params, const std::vector<RolloutGroup>& groups,
                               double clip_eps, double kl_beta, const InputProj* proj) {
    require(clip_eps > 0.0 && clip_eps < 1.0, "grpo_objective: clip_eps must be in (0,1)");
    return grpo_grad_parallel(params, groups, clip_eps, kl_beta, proj);
}

ObjectiveResult plain_pg_gradient(const PolicyParams& params, const std::vector<RolloutGroup>& groups,
                                  const InputProj* proj) {
    require(!groups.empty(), "plain_pg_gradient: empty group list");
    double t_tot = 0.0;
    for (const auto& g : groups)
        for (const auto& tr : g.traces) t_tot += (double)tr.output.size();
    require(t_tot > 0.0, "plain_pg_gradient: batch has no output tokens");

    ObjectiveResult r;
    r.grad.assign(params.dims.flat_size(), 0.0);
    for (const auto& g : groups) {
        PromptCtx pc = prompt_forward(params, g.prompt, proj);
        std::vector<double> dh((std::size_t)params.dims.d, 0.0);
        bool any = false;
        for (std::size_t i = 0; i < g.traces.size(); i++) {
            const auto& trace = g.traces[i];
            if (trace.output.empty()) continue;
            OutputScore score = output_logprobs(params, pc, trace.output, proj);
            double a = g.advantages[i];
            for (double lp : score.logprobs) r.loss -= a * lp / t_tot;
            if (a == 0.0) continue;
            std::vector<double> weights(trace.output.size(), -a / t_tot);
            output_backward(params, pc, trace.output, score, weights, r.grad.data(), dh.data());
            any = true;
        }
        if (any) prompt_backward(params, g.prompt, pc, dh.data(), r.grad.data());
    }
    return r;
}

// ---- training loop ----

TrainOutcome grpo_train(const RlConfig& cfg, int max_len, const Dataset& ds,
                        const PolicyParams& start, const PolicyParams& ref,
                        const std::string& run_dir, bool resume) {
    cfg.validate();
    require(max_len >= 8, "rl: max_len too small for the output grammar");
    ensure_dir(run_dir);

    const std::string log_path = run_dir + "/log.jsonl";
    const std::string state_path = run_dir + "/state_last.json";
    const std::string trace_path = run_dir + "/reward_trace.jsonl";

    TrainerState st;
    st.params = start;
    st.adam = Adam(start.dims.flat_size(), AdamConfig{});
    if (resume) {
        require(file_exists(state_path), "--resume: no state_last.json in " + run_dir);
        load_state(state_path, st, "grpo");
        truncate_log(log_path, st.step);
        if (cfg.reward_trace) truncate_log(trace_path, st.step);
    } else {
        atomic_write_file(log_path, "");
        if (cfg.reward_trace) atomic_write_file(trace_path, "");
    }

    std::ofstream log(log_path, std::ios::app);
    require(log.good(), "cannot open " + log_path);
    std::ofstream trace_log;
    if (cfg.reward_trace) {
        trace_log.open(trace_path, std::ios::app);
        require(trace_log.good(), "cannot open " + trace_path);
    }

    // validation pool: pointwise examples of the trained tasks
    std::vector<const Example*> val_pool;
    for (const auto& e : ds.split(Split::Val))
        for (TaskKind t : cfg.tasks)
            if (e.task == t) val_pool.push_back(&e);
    require(!val_pool.empty(), "rl: validation split has no examples for the trained tasks");

    SampleOptions sample_opt;
    sample_opt.temperature = cfg.temperature;
    sample_opt.max_len = max_len;

    const int upr = cfg.rollout_batch / cfg.global_batch;
    const int cycle = upr * cfg.reuse_epochs;
    const auto& train_split = ds.split(Split::Train);

    std::vector<RolloutGroup> groups;
    TrainOutcome outcome;
    outcome.best_step = st.best_step;
    outcome.best_val = st.best_val;

    for (int s = st.step + 1; s <= cfg.max_steps; s++) {
        if ((s - 1) % cycle == 0) {
            // fresh rollout under a frozen old snapshot (= current params)
            Rng batch_rng(derive_seed(cfg.seed, {0xB47Cull, (std::uint64_t)s}));
            auto idx = sample_batch(ds, Split::Train, cfg.strategy, (std::size_t)cfg.rollout_batch,
                                    batch_rng, cfg.tasks);
            std::vector<RolloutSpec> specs(idx.size());
            for (std::size_t i = 0; i < idx.size(); i++) {
                specs[i].example = &train_split[idx[i]];
                specs[i].seed = derive_seed(cfg.seed, {0x5A3Bull, (std::uint64_t)s, (std::uint64_t)i});
            }
            groups = collect_rollouts_parallel(st.params, ref, specs, cfg.G, sample_opt, cfg.alpha);
            for (auto& g : groups) fill_advantages(g);
            if (cfg.reward_trace) {
                for (const auto& g : groups)
                    for (std::size_t i = 0; i < g.traces.size(); i++) {
                        json row{{"step", s},
                                 {"example_id", g.example_id},
                                 {"output_tokens", g.traces[i].output},
                                 {"failure", failure_name(g.failures[i])},
                                 {"r_acc", g.rewards[i].r_acc},
                                 {"r_for", g.rewards[i].r_for},
                                 {"r_total", g.rewards[i].r_total}};
                        trace_log << row.dump() << '\n';
                    }
                trace_log.flush();
            }
        }

        int chunk = ((s - 1) % cycle) % upr;
        std::vector<RolloutGroup> batch(groups.begin() + chunk * cfg.global_batch,
                                        groups.begin() + (chunk + 1) * cfg.global_batch);

        InputProj proj = build_input_proj(st.params);
        ObjectiveResult obj = grpo_grad_parallel(st.params, batch, cfg.clip_eps, cfg.kl_beta, &proj);
        if (!std::isfinite(obj.loss)) {
            std::string ids;
            for (const auto& g : batch) ids += g.example_id + " ";
            throw numeric_error("grpo_train: non-finite loss at step " + std::to_string(s) +
                                " on batch: " + ids);
        }

        double n_traces = 0.0, racc = 0.0, rfor = 0.0;
        for (const auto& g : batch)
            for (const auto& r : g.rewards) {
                racc += r.r_acc;
                rfor += r.r_for;
                n_traces += 1.0;
            }
        racc /= n_traces;
        rfor /= n_traces;

        st.adam.step(st.params.flat, obj.grad, cosine_lr((std::uint64_t)s - 1,
                                                         (std::uint64_t)cfg.max_steps, cfg.lr));
        st.step = s;

        json row{{"role", "grpo"}, {"step", s},          {"loss", obj.loss},
                 {"mean_r_acc", racc}, {"mean_r_for", rfor}, {"mean_kl", obj.mean_kl}};

        bool stop = false;
        if (s % cfg.eval_every == 0 || s == cfg.max_steps) {
            InputProj eval_proj = build_input_proj(st.params);
            auto verdicts = predict_batch_parallel(st.params, val_pool, max_len, &eval_proj);
            double val = 0.0;
            for (std::size_t i = 0; i < val_pool.size(); i++)
                val += accuracy_reward(verdicts[i], val_pool[i]->gold);
            val /= (double)val_pool.size();
            row["val_r_acc"] = val;

            if (val > st.best_val) {
                st.best_val = val;
                st.best_step = s;
                st.evals_since_improve = 0;
                save_best_checkpoint(run_dir, st.params, s, val, "grpo");
            } else {
                st.evals_since_improve++;
            }
            save_state(state_path, st, "grpo");
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

    // a run shorter than one eval interval still needs its state persisted
    if (st.best_step == 0 && st.step > 0) save_state(state_path, st, "grpo");

    outcome.steps_run = st.step;
    outcome.best_step = st.best_step;
    outcome.best_val = st.best_val;
    return outcome;
}

} // namespace mj
