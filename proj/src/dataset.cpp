#include "microjudge/dataset.hpp"

#include <algorithm>
#include <cstdio>

#include <json.hpp>

#include "microjudge/util.hpp"

using nlohmann::json;

namespace mj {

namespace {
const std::vector<std::string> kSplitNames = {"train", "val", "test", "ood"};
const std::vector<TaskKind> kAllTasks = {TaskKind::AlignPoint, TaskKind::SafetyPoint,
                                         TaskKind::QualityPoint, TaskKind::AlignPair,
                                         TaskKind::SafetyPair};
const std::vector<Split> kAllSplits = {Split::Train, Split::Val, Split::Test, Split::Ood};

bool is_negative_label(Label l) {
    return l == Label::No || l == Label::Unsafe || l == Label::Second;
}
} // namespace

const std::string& split_name(Split s) { return kSplitNames[(std::size_t)s]; }

std::optional<Split> split_from_name(const std::string& name) {
    for (std::size_t i = 0; i < kSplitNames.size(); i++)
        if (kSplitNames[i] == name) return (Split)i;
    return std::nullopt;
}

DataConfig DataConfig::defaults() {
    DataConfig cfg;
    cfg.seed = 1;
    // per-label counts follow the reference split sizes at 1/10 scale,
    // rounded half away from zero per class
    cfg.counts = {
        {TaskKind::AlignPoint,
         {{Split::Train, {{Label::No, 254}, {Label::Yes, 301}}},
          {Split::Val, {{Label::No, 30}, {Label::Yes, 39}}},
          {Split::Test, {{Label::No, 31}, {Label::Yes, 38}}}}},
        {TaskKind::SafetyPoint,
         {{Split::Train, {{Label::Safe, 295}, {Label::Unsafe, 434}}},
          {Split::Val, {{Label::Safe, 32}, {Label::Unsafe, 49}}},
          {Split::Test, {{Label::Safe, 78}, {Label::Unsafe, 126}}}}},
        {TaskKind::QualityPoint,
         {{Split::Train, {{Label::No, 244}, {Label::Yes, 240}}},
          {Split::Val, {{Label::No, 29}, {Label::Yes, 32}}},
          {Split::Test, {{Label::No, 30}, {Label::Yes, 31}}}}},
        {TaskKind::AlignPair, {{Split::Ood, {{Label::First, 100}, {Label::Second, 100}}}}},
        {TaskKind::SafetyPair, {{Split::Ood, {{Label::First, 100}, {Label::Second, 100}}}}},
    };
    return cfg;
}

void DataConfig::validate() const {
    scene.validate();
    require(tie_cap_frac >= 0.0 && tie_cap_frac <= 1.0, "tie_cap_frac must be in [0,1]");
    require(max_reject_factor >= 1, "max_reject_factor must be >= 1");
    for (const auto& [task, per_split] : counts) {
        auto alphabet = label_alphabet(task);
        for (const auto& [split, per_label] : per_split) {
            if (is_pairwise(task))
                require(split == Split::Ood, task_name(task) + " examples belong to the ood split only");
            else
                require(split != Split::Ood, task_name(task) + " examples never belong to the ood split");
            for (const auto& [label, n] : per_label) {
                require(n >= 0, "negative example count");
                require(std::find(alphabet.begin(), alphabet.end(), label) != alphabet.end(),
                        "label " + label_name(label) + " outside the " + task_name(task) + " alphabet");
            }
        }
    }
}

// ---- json serialization ----

namespace {

json claim_to_json(const Claim& c) {
    return json{{"shape", c.shape ? shape_name(*c.shape) : "any"},
                {"color", c.color ? color_name(*c.color) : "any"},
                {"quantifier", c.quantifier == Quantifier::Present ? "present" : "absent"}};
}

Claim claim_from_json(const json& j) {
    Claim c;
    std::string sh = j.at("shape").get<std::string>();
    std::string co = j.at("color").get<std::string>();
    std::string q = j.at("quantifier").get<std::string>();
    if (sh != "any") {
        auto v = shape_from_name(sh);
        require(v.has_value(), "bad claim shape: " + sh);
        c.shape = *v;
    }
    if (co != "any") {
        auto v = color_from_name(co);
        require(v.has_value(), "bad claim color: " + co);
        c.color = *v;
    }
    require(q == "present" || q == "absent", "bad claim quantifier: " + q);
    c.quantifier = q == "present" ? Quantifier::Present : Quantifier::Absent;
    require(c.shape || c.color, "claim needs at least one concrete attribute");
    return c;
}

json scene_to_json(const Scene& s) {
    json objs = json::array();
    for (const auto& o : s.objects)
        objs.push_back(json{{"shape", shape_name(o.shape)},
                            {"color", color_name(o.color)},
                            {"size", size_name(o.size)},
                            {"hazard", o.hazard}});
    return json{{"objects", objs}, {"noise_level", s.noise_level}};
}

Scene scene_from_json(const json& j) {
    Scene s;
    for (const auto& jo : j.at("objects")) {
        Object o;
        auto sh = shape_from_name(jo.at("shape").get<std::string>());
        auto co = color_from_name(jo.at("color").get<std::string>());
        auto sz = size_from_name(jo.at("size").get<std::string>());
        require(sh && co && sz, "bad object attribute");
        o.shape = *sh;
        o.color = *co;
        o.size = *sz;
        o.hazard = jo.at("hazard").get<bool>();
        s.objects.push_back(o);
    }
    require(!s.objects.empty(), "scene needs at least one object");
    s.noise_level = j.at("noise_level").get<int>();
    return s;
}

} // namespace

std::string example_to_json_line(const Example& e) {
    json j;
    j["id"] = e.id;
    j["task"] = task_name(e.task);
    j["claim"] = e.claim ? claim_to_json(*e.claim) : json(nullptr);
    json scenes = json::array();
    for (const auto& s : e.scenes) scenes.push_back(scene_to_json(s));
    j["scenes"] = scenes;
    j["gold"] = label_name(e.gold);
    j["split"] = split_name(e.split);
    return j.dump();
}

Example example_from_json_line(const std::string& line) {
    json j = json::parse(line);
    Example e;
    e.id = j.at("id").get<std::string>();
    auto task = task_from_name(j.at("task").get<std::string>());
    require(task.has_value(), "bad task name");
    e.task = *task;
    if (!j.at("claim").is_null()) e.claim = claim_from_json(j.at("claim"));
    for (const auto& js : j.at("scenes")) e.scenes.push_back(scene_from_json(js));
    auto gold = label_from_name(j.at("gold").get<std::string>());
    require(gold.has_value(), "bad gold label");
    e.gold = *gold;
    auto split = split_from_name(j.at("split").get<std::string>());
    require(split.has_value(), "bad split name");
    e.split = *split;
    return e;
}

std::string manifest_to_json(const DatasetManifest& m) {
    json counts = json::object();
    for (const auto& [task, per_split] : m.counts) {
        json jt = json::object();
        for (const auto& [split, sc] : per_split) {
            json per_label = json::object();
            for (const auto& [label, n] : sc.per_label) per_label[label_name(label)] = n;
            jt[split_name(split)] =
                json{{"n", sc.n}, {"neg", sc.neg}, {"pos", sc.pos}, {"per_label", per_label}};
        }
        counts[task_name(task)] = jt;
    }
    json j{{"format_version", m.format_version},
           {"seed", m.seed},
           {"config_hash", m.config_hash},
           {"counts", counts}};
    return j.dump(2) + "\n";
}

DatasetManifest manifest_from_json(const std::string& text) {
    json j = json::parse(text);
    DatasetManifest m;
    m.format_version = j.at("format_version").get<int>();
    require(m.format_version == 1, "unsupported manifest format_version");
    m.seed = j.at("seed").get<std::uint64_t>();
    m.config_hash = j.at("config_hash").get<std::string>();
    for (const auto& [tname, jt] : j.at("counts").items()) {
        auto task = task_from_name(tname);
        require(task.has_value(), "bad task in manifest");
        for (const auto& [sname, js] : jt.items()) {
            auto split = split_from_name(sname);
            require(split.has_value(), "bad split in manifest");
            SplitCount sc;
            sc.n = js.at("n").get<int>();
            sc.neg = js.at("neg").get<int>();
            sc.pos = js.at("pos").get<int>();
            for (const auto& [lname, n] : js.at("per_label").items()) {
                auto label = label_from_name(lname);
                require(label.has_value(), "bad label in manifest");
                sc.per_label[*label] = n.get<int>();
            }
            m.counts[*task][*split] = sc;
        }
    }
    return m;
}

std::string canonical_data_config(const DataConfig& cfg) {
    json counts = json::object();
    for (const auto& [task, per_split] : cfg.counts) {
        json jt = json::object();
        for (const auto& [split, per_label] : per_split) {
            json jl = json::object();
            for (const auto& [label, n] : per_label) jl[label_name(label)] = n;
            jt[split_name(split)] = jl;
        }
        counts[task_name(task)] = jt;
    }
    json j{{"seed", cfg.seed},
           {"object_max", cfg.scene.object_max},
           {"noise_max", cfg.scene.noise_max},
           {"hazard_prob", cfg.scene.hazard_prob},
           {"shape_probs", cfg.scene.shape_probs},
           {"color_probs", cfg.scene.color_probs},
           {"size_probs", cfg.scene.size_probs},
           {"quality_threshold", cfg.scene.quality_threshold},
           {"tie_cap_frac", cfg.tie_cap_frac},
           {"max_reject_factor", cfg.max_reject_factor},
           {"counts", counts}};
    return j.dump(); // nlohmann keeps keys sorted, which makes this canonical
}

std::string data_config_hash(const DataConfig& cfg) { return sha256_hex(canonical_data_config(cfg)); }

// ---- generation ----

namespace {

struct Candidate {
    std::optional<Claim> claim;
    std::vector<Scene> scenes;
    Label gold = Label::Yes;
    bool tie = false; // pairwise score tie, resolved to Second by the rules
};

Candidate draw_candidate(TaskKind task, Rng& rng, const SceneGenConfig& scfg) {
    Candidate c;
    if (has_claim(task)) c.claim = generate_claim(rng);
    std::size_t arity = is_pairwise(task) ? 2 : 1;
    for (std::size_t i = 0; i < arity; i++) c.scenes.push_back(generate_scene(rng, scfg));
    c.gold = ground_truth(task, c.claim, c.scenes, scfg.quality_threshold);
    if (task == TaskKind::AlignPair)
        c.tie = count_matches(*c.claim, c.scenes[0]) == count_matches(*c.claim, c.scenes[1]);
    else if (task == TaskKind::SafetyPair)
        c.tie = count_hazards(c.scenes[0]) == count_hazards(c.scenes[1]);
    return c;
}

} // namespace

DatasetManifest build_dataset(const DataConfig& cfg, const std::string& dir) {
    cfg.validate();
    ensure_dir(dir);

    std::map<Split, std::vector<Example>> per_split;
    DatasetManifest manifest;
    manifest.seed = cfg.seed;
    manifest.config_hash = data_config_hash(cfg);

    // each (task, split) gets its own derived stream so the outputs do not
    // depend on generation order or on the other tasks' configs
    for (std::size_t ti = 0; ti < kAllTasks.size(); ti++) {
        TaskKind task = kAllTasks[ti];
        auto it = cfg.counts.find(task);
        if (it == cfg.counts.end()) continue;
        for (const auto& [split, wanted] : it->second) {
            Rng rng(derive_seed(cfg.seed, {0xDA7Aull, ti, (std::uint64_t)split}));
            std::map<Label, int> needs = wanted;
            long long total = 0;
            for (const auto& [label, n] : wanted) total += n;
            long long remaining = total;
            long long max_draws = std::max<long long>(total * cfg.max_reject_factor, 1000);
            long long tie_cap = (long long)(cfg.tie_cap_frac * (double)total);
            long long ties_accepted = 0;
            long long draws = 0;
            int index = 0;
            while (remaining > 0) {
                require(++draws <= max_draws,
                        "generation error: class ratios unreachable for " + task_name(task) + "/" +
                            split_name(split) + " within the draw budget");
                Candidate c = draw_candidate(task, rng, cfg.scene);
                if (c.tie && ties_accepted + 1 > tie_cap) continue;
                auto need = needs.find(c.gold);
                if (need == needs.end() || need->second == 0) continue;
                need->second--;
                remaining--;
                if (c.tie) ties_accepted++;

                Example e;
                char idbuf[64];
                std::snprintf(idbuf, sizeof idbuf, "%s-%s-%06d", task_name(task).c_str(),
                              split_name(split).c_str(), index++);
                e.id = idbuf;
                e.task = task;
                e.claim = c.claim;
                e.scenes = std::move(c.scenes);
                e.gold = c.gold;
                e.split = split;
                per_split[split].push_back(std::move(e));
            }
            SplitCount sc;
            for (const auto& [label, n] : wanted) {
                sc.n += n;
                (is_negative_label(label) ? sc.neg : sc.pos) += n;
                sc.per_label[label] = n;
            }
            manifest.counts[task][split] = sc;
        }
    }

    for (Split s : kAllSplits) {
        std::string body;
        for (const auto& e : per_split[s]) {
            body += example_to_json_line(e);
            body += '\n';
        }
        atomic_write_file(dir + "/" + split_name(s) + ".jsonl", body);
    }
    atomic_write_file(dir + "/manifest.json", manifest_to_json(manifest));
    return manifest;
}

const std::vector<Example>& Dataset::split(Split s) const {
    auto it = splits.find(s);
    require(it != splits.end(), "split not loaded: " + split_name(s));
    return it->second;
}

Dataset load_dataset(const std::string& dir) {
    Dataset ds;
    ds.manifest = manifest_from_json(read_file(dir + "/manifest.json"));
    for (Split s : kAllSplits) {
        std::vector<Example> examples;
        for (const auto& line : read_lines(dir + "/" + split_name(s) + ".jsonl"))
            if (!line.empty()) examples.push_back(example_from_json_line(line));
        ds.splits[s] = std::move(examples);
    }
    return ds;
}

void verify_dataset(const Dataset& ds, int quality_threshold) {
    for (const auto& [split, examples] : ds.splits) {
        for (const auto& e : examples) {
            require(e.split == split, "example " + e.id + " filed under the wrong split");
            if (is_pairwise(e.task))
                require(split == Split::Ood, "pairwise example " + e.id + " outside ood");
            else
                require(split != Split::Ood, "pointwise example " + e.id + " inside ood");
            require(e.gold == ground_truth(e.task, e.claim, e.scenes, quality_threshold),
                    "stored gold disagrees with ground truth for " + e.id);
        }
    }
}

std::vector<Tok> encode_example(const Example& e) {
    static const Tok task_tags[] = {tok::TASK_ALIGN_POINT, tok::TASK_SAFETY_POINT,
                                    tok::TASK_QUALITY_POINT, tok::TASK_ALIGN_PAIR,
                                    tok::TASK_SAFETY_PAIR};
    static const Tok shape_toks[] = {tok::CIRCLE, tok::SQUARE, tok::TRIANGLE};
    static const Tok color_toks[] = {tok::RED, tok::GREEN, tok::BLUE};
    static const Tok size_toks[] = {tok::SMALL, tok::LARGE};

    std::vector<Tok> out;
    out.push_back(task_tags[(std::size_t)e.task]);
    require(e.claim.has_value() == has_claim(e.task), "claim presence does not match task");
    if (e.claim) {
        out.push_back(e.claim->quantifier == Quantifier::Present ? tok::PRESENT : tok::ABSENT);
        out.push_back(e.claim->shape ? shape_toks[(std::size_t)*e.claim->shape] : tok::ANY);
        out.push_back(e.claim->color ? color_toks[(std::size_t)*e.claim->color] : tok::ANY);
    }
    require(e.scenes.size() == (is_pairwise(e.task) ? 2u : 1u), "scene count does not match task");
    for (const auto& s : e.scenes) {
        out.push_back(tok::SCENE);
        for (const auto& o : s.objects) {
            out.push_back(shape_toks[(std::size_t)o.shape]);
            out.push_back(color_toks[(std::size_t)o.color]);
            out.push_back(size_toks[(std::size_t)o.size]);
            out.push_back(o.hazard ? tok::HAZ : tok::NOHAZ);
            out.push_back(tok::OBJ_END);
        }
        require(s.noise_level >= 0 && s.noise_level <= 5, "noise level outside the token range");
        out.push_back(tok::noise(s.noise_level));
    }
    out.push_back(tok::EOP);
    return out;
}

const std::string& strategy_name(SampleStrategy s) {
    static const std::vector<std::string> names = {"proportional", "uniform-task"};
    return names[(std::size_t)s];
}

std::optional<SampleStrategy> strategy_from_name(const std::string& name) {
    if (name == "proportional") return SampleStrategy::Proportional;
    if (name == "uniform-task") return SampleStrategy::UniformTask;
    return std::nullopt;
}

std::vector<std::size_t> sample_batch(const Dataset& ds, Split split, SampleStrategy strategy,
                                      std::size_t batch_size, Rng& rng,
                                      const std::vector<TaskKind>& tasks) {
    const auto& examples = ds.split(split);
    std::map<TaskKind, std::vector<std::size_t>> per_task;
    for (TaskKind t : tasks) per_task[t]; // keep requested tasks present even if empty
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < examples.size(); i++) {
        auto it = per_task.find(examples[i].task);
        if (it == per_task.end()) continue;
        it->second.push_back(i);
        pool.push_back(i);
    }
    require(!pool.empty(), "sample_batch: no examples for the requested tasks in " + split_name(split));

    std::vector<std::size_t> batch;
    batch.reserve(batch_size);
    if (strategy == SampleStrategy::Proportional) {
        for (std::size_t k = 0; k < batch_size; k++)
            batch.push_back(pool[rng.uniform_int(pool.size())]);
    } else {
        for (const auto& [t, idx] : per_task)
            require(!idx.empty(), "sample_batch: task " + task_name(t) + " has no examples in " +
                                      split_name(split));
        for (std::size_t k = 0; k < batch_size; k++) {
            auto it = per_task.begin();
            std::advance(it, (long)rng.uniform_int(per_task.size()));
            const auto& idx = it->second;
            batch.push_back(idx[rng.uniform_int(idx.size())]);
        }
    }
    return batch;
}

} // namespace mj
