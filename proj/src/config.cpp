#include "microjudge/config.hpp"

#include <json.hpp>

#include "microjudge/util.hpp"

using nlohmann::json;

namespace mj {

namespace {

void check_keys(const json& j, const std::string& section, std::initializer_list<const char*> allowed) {
    require(j.is_object(), "config: section '" + section + "' must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        bool known = false;
        for (const char* a : allowed)
            if (key == a) known = true;
        require(known, "config: unknown field '" + key + "' in section '" + section + "'");
    }
}

void fetch(const json& j, const char* key, double& into) {
    if (!j.contains(key)) return;
    require(j.at(key).is_number(), std::string("config: '") + key + "' must be a number");
    into = j.at(key).get<double>();
}

void fetch(const json& j, const char* key, int& into) {
    if (!j.contains(key)) return;
    require(j.at(key).is_number_integer(), std::string("config: '") + key + "' must be an integer");
    into = j.at(key).get<int>();
}

void fetch(const json& j, const char* key, std::uint64_t& into) {
    if (!j.contains(key)) return;
    require(j.at(key).is_number_integer() && j.at(key).get<std::int64_t>() >= 0,
            std::string("config: '") + key + "' must be a non-negative integer");
    into = j.at(key).get<std::uint64_t>();
}

void fetch(const json& j, const char* key, bool& into) {
    if (!j.contains(key)) return;
    require(j.at(key).is_boolean(), std::string("config: '") + key + "' must be a boolean");
    into = j.at(key).get<bool>();
}

void fetch(const json& j, const char* key, std::string& into) {
    if (!j.contains(key)) return;
    require(j.at(key).is_string(), std::string("config: '") + key + "' must be a string");
    into = j.at(key).get<std::string>();
}

void fetch_probs(const json& j, const char* key, std::vector<double>& into) {
    if (!j.contains(key)) return;
    const json& arr = j.at(key);
    require(arr.is_array() && arr.size() == into.size(),
            std::string("config: '") + key + "' must be an array of " +
                std::to_string(into.size()) + " numbers");
    for (std::size_t i = 0; i < into.size(); i++) {
        require(arr[i].is_number(), std::string("config: '") + key + "' entries must be numbers");
        into[i] = arr[i].get<double>();
    }
}

void fetch_tasks(const json& j, const char* key, std::vector<TaskKind>& into) {
    if (!j.contains(key)) return;
    const json& arr = j.at(key);
    require(arr.is_array() && !arr.empty(),
            std::string("config: '") + key + "' must be a non-empty array of task names");
    into.clear();
    for (const auto& name : arr) {
        require(name.is_string(), std::string("config: '") + key + "' entries must be task names");
        auto t = task_from_name(name.get<std::string>());
        require(t.has_value(), "config: unknown task '" + name.get<std::string>() + "'");
        into.push_back(*t);
    }
}

void fetch_strategy(const json& j, const char* key, SampleStrategy& into) {
    if (!j.contains(key)) return;
    require(j.at(key).is_string(), std::string("config: '") + key + "' must be a string");
    auto s = strategy_from_name(j.at(key).get<std::string>());
    require(s.has_value(), "config: unknown strategy '" + j.at(key).get<std::string>() + "'");
    into = *s;
}

CountSpec counts_from_json(const json& jc) {
    require(jc.is_object(), "config: 'counts' must be an object keyed by task name");
    CountSpec counts;
    for (const auto& [tname, per_split] : jc.items()) {
        auto task = task_from_name(tname);
        require(task.has_value(), "config: unknown task '" + tname + "' in counts");
        require(per_split.is_object(), "config: counts per task must map split names");
        for (const auto& [sname, per_label] : per_split.items()) {
            auto split = split_from_name(sname);
            require(split.has_value(), "config: unknown split '" + sname + "' in counts");
            require(per_label.is_object(), "config: counts per split must map label names");
            for (const auto& [lname, n] : per_label.items()) {
                auto label = label_from_name(lname);
                require(label.has_value(), "config: unknown label '" + lname + "' in counts");
                require(n.is_number_integer() && n.get<int>() >= 0,
                        "config: counts must be non-negative integers");
                counts[*task][*split][*label] = n.get<int>();
            }
        }
    }
    return counts;
}

json counts_to_json(const CountSpec& counts) {
    json jc = json::object();
    for (const auto& [task, per_split] : counts) {
        json jt = json::object();
        for (const auto& [split, per_label] : per_split) {
            json jl = json::object();
            for (const auto& [label, n] : per_label) jl[label_name(label)] = n;
            jt[split_name(split)] = jl;
        }
        jc[task_name(task)] = jt;
    }
    return jc;
}

void data_from_json(const json& j, DataConfig& cfg) {
    check_keys(j, "data",
               {"seed", "object_max", "noise_max", "hazard_prob", "shape_probs", "color_probs",
                "size_probs", "quality_threshold", "tie_cap_frac", "max_reject_factor", "counts"});
    fetch(j, "seed", cfg.seed);
    fetch(j, "object_max", cfg.scene.object_max);
    fetch(j, "noise_max", cfg.scene.noise_max);
    fetch(j, "hazard_prob", cfg.scene.hazard_prob);
    fetch_probs(j, "shape_probs", cfg.scene.shape_probs);
    fetch_probs(j, "color_probs", cfg.scene.color_probs);
    fetch_probs(j, "size_probs", cfg.scene.size_probs);
    fetch(j, "quality_threshold", cfg.scene.quality_threshold);
    fetch(j, "tie_cap_frac", cfg.tie_cap_frac);
    fetch(j, "max_reject_factor", cfg.max_reject_factor);
    if (j.contains("counts")) cfg.counts = counts_from_json(j.at("counts"));
}

void model_from_json(const json& j, ModelConfig& cfg) {
    check_keys(j, "model", {"d", "vocab", "max_len", "backbone"});
    fetch(j, "d", cfg.d);
    fetch(j, "vocab", cfg.vocab);
    fetch(j, "max_len", cfg.max_len);
    if (j.contains("backbone")) {
        const json& jb = j.at("backbone");
        check_keys(jb, "model.backbone",
                   {"seed", "steps", "batch", "lr", "think_max", "rl_frac", "echo_frac",
                    "claim_frac", "stretch_steps", "stretch_lr", "grammar_steps", "grammar_lr"});
        fetch(jb, "seed", cfg.backbone.seed);
        fetch(jb, "steps", cfg.backbone.steps);
        fetch(jb, "batch", cfg.backbone.batch);
        fetch(jb, "lr", cfg.backbone.lr);
        fetch(jb, "think_max", cfg.backbone.think_max);
        fetch(jb, "rl_frac", cfg.backbone.rl_frac);
        fetch(jb, "echo_frac", cfg.backbone.echo_frac);
        fetch(jb, "claim_frac", cfg.backbone.claim_frac);
        fetch(jb, "stretch_steps", cfg.backbone.stretch_steps);
        fetch(jb, "stretch_lr", cfg.backbone.stretch_lr);
        fetch(jb, "grammar_steps", cfg.backbone.grammar_steps);
        fetch(jb, "grammar_lr", cfg.backbone.grammar_lr);
    }
}

void rl_from_json(const json& j, RlConfig& cfg) {
    check_keys(j, "rl",
               {"seed", "G", "clip_eps", "kl_beta", "alpha", "lr", "global_batch", "rollout_batch",
                "max_steps", "eval_every", "reuse_epochs", "temperature", "strategy", "tasks",
                "early_stop_patience", "reward_trace"});
    fetch(j, "seed", cfg.seed);
    fetch(j, "G", cfg.G);
    fetch(j, "clip_eps", cfg.clip_eps);
    fetch(j, "kl_beta", cfg.kl_beta);
    fetch(j, "alpha", cfg.alpha);
    fetch(j, "lr", cfg.lr);
    fetch(j, "global_batch", cfg.global_batch);
    fetch(j, "rollout_batch", cfg.rollout_batch);
    fetch(j, "max_steps", cfg.max_steps);
    fetch(j, "eval_every", cfg.eval_every);
    fetch(j, "reuse_epochs", cfg.reuse_epochs);
    fetch(j, "temperature", cfg.temperature);
    fetch_strategy(j, "strategy", cfg.strategy);
    fetch_tasks(j, "tasks", cfg.tasks);
    fetch(j, "early_stop_patience", cfg.early_stop_patience);
    fetch(j, "reward_trace", cfg.reward_trace);
}

void sft_from_json(const json& j, SftConfig& cfg) {
    check_keys(j, "sft",
               {"seed", "lr", "weight_decay", "batch", "max_steps", "eval_every", "strategy",
                "tasks", "early_stop_patience"});
    fetch(j, "seed", cfg.seed);
    fetch(j, "lr", cfg.lr);
    fetch(j, "weight_decay", cfg.weight_decay);
    fetch(j, "batch", cfg.batch);
    fetch(j, "max_steps", cfg.max_steps);
    fetch(j, "eval_every", cfg.eval_every);
    fetch_strategy(j, "strategy", cfg.strategy);
    fetch_tasks(j, "tasks", cfg.tasks);
    fetch(j, "early_stop_patience", cfg.early_stop_patience);
}

void eval_from_json(const json& j, EvalConfig& cfg) {
    check_keys(j, "eval", {"splits", "form"});
    if (j.contains("splits")) {
        const json& arr = j.at("splits");
        require(arr.is_array() && !arr.empty(),
                "config: 'splits' must be a non-empty array of split names");
        cfg.splits.clear();
        for (const auto& name : arr) {
            require(name.is_string(), "config: 'splits' entries must be split names");
            auto s = split_from_name(name.get<std::string>());
            require(s.has_value(), "config: unknown split '" + name.get<std::string>() + "'");
            cfg.splits.push_back(*s);
        }
    }
    fetch(j, "form", cfg.form);
}

json data_to_json(const DataConfig& cfg) {
    return json{{"seed", cfg.seed},
                {"object_max", cfg.scene.object_max},
                {"noise_max", cfg.scene.noise_max},
                {"hazard_prob", cfg.scene.hazard_prob},
                {"shape_probs", cfg.scene.shape_probs},
                {"color_probs", cfg.scene.color_probs},
                {"size_probs", cfg.scene.size_probs},
                {"quality_threshold", cfg.scene.quality_threshold},
                {"tie_cap_frac", cfg.tie_cap_frac},
                {"max_reject_factor", cfg.max_reject_factor},
                {"counts", counts_to_json(cfg.counts)}};
}

json model_to_json(const ModelConfig& cfg) {
    return json{{"d", cfg.d},
                {"vocab", cfg.vocab},
                {"max_len", cfg.max_len},
                {"backbone", json{{"seed", cfg.backbone.seed},
                                  {"steps", cfg.backbone.steps},
                                  {"batch", cfg.backbone.batch},
                                  {"lr", cfg.backbone.lr},
                                  {"think_max", cfg.backbone.think_max},
                                  {"rl_frac", cfg.backbone.rl_frac},
                                  {"echo_frac", cfg.backbone.echo_frac},
                                  {"claim_frac", cfg.backbone.claim_frac},
                                  {"stretch_steps", cfg.backbone.stretch_steps},
                                  {"stretch_lr", cfg.backbone.stretch_lr},
                                  {"grammar_steps", cfg.backbone.grammar_steps},
                                  {"grammar_lr", cfg.backbone.grammar_lr}}}};
}

json tasks_to_json(const std::vector<TaskKind>& tasks) {
    json arr = json::array();
    for (TaskKind t : tasks) arr.push_back(task_name(t));
    return arr;
}

json rl_to_json(const RlConfig& cfg) {
    return json{{"seed", cfg.seed},
                {"G", cfg.G},
                {"clip_eps", cfg.clip_eps},
                {"kl_beta", cfg.kl_beta},
                {"alpha", cfg.alpha},
                {"lr", cfg.lr},
                {"global_batch", cfg.global_batch},
                {"rollout_batch", cfg.rollout_batch},
                {"max_steps", cfg.max_steps},
                {"eval_every", cfg.eval_every},
                {"reuse_epochs", cfg.reuse_epochs},
                {"temperature", cfg.temperature},
                {"strategy", strategy_name(cfg.strategy)},
                {"tasks", tasks_to_json(cfg.tasks)},
                {"early_stop_patience", cfg.early_stop_patience},
                {"reward_trace", cfg.reward_trace}};
}

json sft_to_json(const SftConfig& cfg) {
    return json{{"seed", cfg.seed},
                {"lr", cfg.lr},
                {"weight_decay", cfg.weight_decay},
                {"batch", cfg.batch},
                {"max_steps", cfg.max_steps},
                {"eval_every", cfg.eval_every},
                {"strategy", strategy_name(cfg.strategy)},
                {"tasks", tasks_to_json(cfg.tasks)},
                {"early_stop_patience", cfg.early_stop_patience}};
}

json eval_to_json(const EvalConfig& cfg) {
    json splits = json::array();
    for (Split s : cfg.splits) splits.push_back(split_name(s));
    return json{{"splits", splits}, {"form", cfg.form}};
}

} // namespace

void ModelConfig::validate() const {
    require(d >= 2 && d <= 1024, "config: model.d outside [2,1024]");
    require(vocab == "default", "config: only the 'default' vocabulary exists");
    require(max_len >= 8 && max_len <= 256, "config: model.max_len outside [8,256]");
    backbone.validate();
    require(backbone.think_max + 7 <= max_len,
            "config: max_len cannot fit the longest pretraining target");
}

void EvalConfig::validate() const {
    require(!splits.empty(), "config: eval.splits is empty");
    require(form == "rl" || form == "sft" || form == "auto",
            "config: eval.form must be rl, sft or auto");
}

void ExperimentConfig::validate() const {
    require(!output_dir.empty(), "config: output_dir is empty");
    data.validate();
    model.validate();
    rl.validate();
    sft.validate();
    eval.validate();
}

ExperimentConfig config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw usage_error(std::string("config: invalid JSON: ") + e.what());
    }
    ExperimentConfig cfg;
    try {
        check_keys(j, "<root>", {"output_dir", "data", "model", "rl", "sft", "eval"});
        fetch(j, "output_dir", cfg.output_dir);
        if (j.contains("data")) data_from_json(j.at("data"), cfg.data);
        if (j.contains("model")) model_from_json(j.at("model"), cfg.model);
        if (j.contains("rl")) rl_from_json(j.at("rl"), cfg.rl);
        if (j.contains("sft")) sft_from_json(j.at("sft"), cfg.sft);
        if (j.contains("eval")) eval_from_json(j.at("eval"), cfg.eval);
        cfg.validate();
    } catch (const check_error& e) {
        // a config mistake is the caller's usage problem, not an internal bug
        throw usage_error(e.what());
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    if (!file_exists(path)) throw usage_error("config file not found: " + path);
    return config_from_json(read_file(path));
}

std::string config_to_json(const ExperimentConfig& cfg) {
    json j{{"output_dir", cfg.output_dir}, {"data", data_to_json(cfg.data)},
           {"model", model_to_json(cfg.model)}, {"rl", rl_to_json(cfg.rl)},
           {"sft", sft_to_json(cfg.sft)},       {"eval", eval_to_json(cfg.eval)}};
    return j.dump(2) + "\n";
}

std::string config_hash(const ExperimentConfig& cfg) { return sha256_hex(config_to_json(cfg)); }

std::string model_section_hash(const ExperimentConfig& cfg) {
    return sha256_hex(model_to_json(cfg.model).dump());
}

} // namespace mj
