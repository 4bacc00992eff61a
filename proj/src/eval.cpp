#include "microjudge/eval.hpp"

#include <algorithm>
#include <cstdio>

#include <json.hpp>

#include "microjudge/kernels.hpp"
#include "microjudge/util.hpp"

using nlohmann::json;

namespace mj {

namespace {

constexpr TaskKind kTaskOrder[] = {TaskKind::AlignPoint, TaskKind::SafetyPoint,
                                   TaskKind::QualityPoint, TaskKind::AlignPair,
                                   TaskKind::SafetyPair};

std::string f4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

std::string pad(const std::string& s, std::size_t w) {
    std::string out = s;
    while (out.size() < w) out += ' ';
    return out;
}

json class_metrics_json(const ClassMetrics& c) {
    return json{{"label", label_name(c.label)}, {"tp", c.tp},
                {"fp", c.fp},                   {"fn", c.fn},
                {"precision", c.precision},     {"recall", c.recall},
                {"f1", c.f1}};
}

} // namespace

const std::string& form_name(RequiredForm f) {
    static const std::string rl = "rl", sft = "sft";
    return f == RequiredForm::Rl ? rl : sft;
}

RequiredForm form_from_name(const std::string& name) {
    if (name == "rl") return RequiredForm::Rl;
    if (name == "sft") return RequiredForm::Sft;
    throw check_error("unknown output form: " + name);
}

F1Result compute_f1(const std::vector<std::optional<Label>>& preds, const std::vector<Label>& golds,
                    const std::vector<Label>& label_set) {
    require(preds.size() == golds.size(), "compute_f1: prediction/gold length mismatch");
    auto in_set = [&](Label l) { return std::find(label_set.begin(), label_set.end(), l) != label_set.end(); };
    for (Label g : golds) require(in_set(g), "compute_f1: gold label outside label set");

    std::map<Label, ClassMetrics> counts;
    for (Label l : label_set) counts[l].label = l;
    for (std::size_t i = 0; i < golds.size(); i++) {
        const auto& p = preds[i];
        if (p.has_value() && *p == golds[i]) {
            counts[golds[i]].tp++;
        } else {
            counts[golds[i]].fn++;
            // absent or out-of-set predictions spend no false positive
            if (p.has_value() && in_set(*p)) counts[*p].fp++;
        }
    }

    F1Result r;
    for (Label l : label_set) {
        ClassMetrics& c = counts[l];
        double pd = c.tp + c.fp, rd = c.tp + c.fn;
        c.precision = pd > 0 ? c.tp / pd : 0.0;
        c.recall = rd > 0 ? c.tp / rd : 0.0;
        c.f1 = (c.precision + c.recall) > 0 ? 2.0 * c.precision * c.recall / (c.precision + c.recall)
                                            : 0.0;
        r.macro_f1 += c.f1;
        r.per_class.push_back(c);
    }
    r.macro_f1 /= (double)label_set.size();
    return r;
}

double macro_f1(const std::vector<std::optional<Label>>& preds, const std::vector<Label>& golds,
                const std::vector<Label>& label_set) {
    return compute_f1(preds, golds, label_set).macro_f1;
}

ParsedVerdict predict(const PolicyParams& params, const Example& example, int max_len,
                      const InputProj* proj) {
    std::vector<const Example*> one{&example};
    return predict_batch_serial(params, one, max_len, proj)[0];
}

std::string checkpoint_id(const PolicyParams& params) {
    return sha256_hex(checkpoint_to_json(params)).substr(0, 12);
}

EvalReport evaluate_suite(const PolicyParams& params, const Dataset& ds, Split split,
                          RequiredForm form, int max_len, std::uint64_t seed,
                          std::vector<ParsedVerdict>* raw) {
    const auto& examples = ds.split(split);
    std::vector<const Example*> ptrs;
    ptrs.reserve(examples.size());
    for (const auto& e : examples) ptrs.push_back(&e);

    InputProj proj = build_input_proj(params);
    auto verdicts = predict_batch_parallel(params, ptrs, max_len, &proj);
    if (raw) *raw = verdicts;

    EvalReport report;
    report.checkpoint_id = checkpoint_id(params);
    report.split = split_name(split);
    report.form = form;
    report.seed = seed;

    for (TaskKind task : kTaskOrder) {
        std::vector<std::optional<Label>> preds;
        std::vector<Label> golds;
        TaskReport tr;
        tr.task = task;
        int clean = 0;
        for (std::size_t i = 0; i < examples.size(); i++) {
            if (examples[i].task != task) continue;
            preds.push_back(verdicts[i].label);
            golds.push_back(examples[i].gold);
            if (format_reward(verdicts[i], form) == 1.0) clean++;
            tr.failures[failure_name(verdicts[i].failure)]++;
        }
        if (golds.empty()) continue;
        F1Result f1 = compute_f1(preds, golds, label_alphabet(task));
        tr.n = (int)golds.size();
        tr.macro_f1 = f1.macro_f1;
        tr.per_class = f1.per_class;
        tr.format_rate = (double)clean / (double)tr.n;
        report.tasks.push_back(std::move(tr));
    }
    return report;
}

std::string report_to_json(const EvalReport& r) {
    json tasks = json::array();
    for (const auto& t : r.tasks) {
        json classes = json::array();
        for (const auto& c : t.per_class) classes.push_back(class_metrics_json(c));
        tasks.push_back(json{{"task", task_name(t.task)},
                             {"n", t.n},
                             {"macro_f1", t.macro_f1},
                             {"format_rate", t.format_rate},
                             {"failures", t.failures},
                             {"classes", classes}});
    }
    json j{{"checkpoint_id", r.checkpoint_id},
           {"split", r.split},
           {"form", form_name(r.form)},
           {"seed", r.seed},
           {"tasks", tasks}};
    return j.dump(2) + "\n";
}

std::string report_to_text(const EvalReport& r) {
    std::string out = "checkpoint " + r.checkpoint_id + "  split " + r.split + "  form " +
                      form_name(r.form) + "  seed " + std::to_string(r.seed) + "\n\n";
    std::size_t tw = 4;
    for (const auto& t : r.tasks) tw = std::max(tw, task_name(t.task).size());
    out += pad("task", tw) + "     n  macro_f1  format_rate  failures\n";
    for (const auto& t : r.tasks) {
        char nbuf[16];
        std::snprintf(nbuf, sizeof nbuf, "%6d", t.n);
        out += pad(task_name(t.task), tw) + nbuf + "    " + f4(t.macro_f1) + "       " +
               f4(t.format_rate) + "  ";
        bool first = true;
        for (const auto& [name, count] : t.failures) {
            if (!first) out += " ";
            out += name + ":" + std::to_string(count);
            first = false;
        }
        out += "\n";
    }
    out += "\nper-class:\n";
    for (const auto& t : r.tasks)
        for (const auto& c : t.per_class)
            out += "  " + pad(task_name(t.task), tw) + "  " + pad(label_name(c.label), 6) + "  P " +
                   f4(c.precision) + "  R " + f4(c.recall) + "  F1 " + f4(c.f1) + "  (tp " +
                   std::to_string(c.tp) + " fp " + std::to_string(c.fp) + " fn " +
                   std::to_string(c.fn) + ")\n";
    return out;
}

std::string predictions_csv(const Dataset& ds, Split split, const std::vector<ParsedVerdict>& raw) {
    const auto& examples = ds.split(split);
    require(raw.size() == examples.size(), "predictions_csv: verdict count mismatch");
    std::string out = "id,task,gold,pred,failure\n";
    for (std::size_t i = 0; i < examples.size(); i++) {
        out += examples[i].id + "," + task_name(examples[i].task) + "," +
               label_name(examples[i].gold) + ",";
        if (raw[i].label.has_value()) out += label_name(*raw[i].label);
        out += "," + failure_name(raw[i].failure) + "\n";
    }
    return out;
}

ComparisonReport generalization_eval(const std::vector<NamedCheckpoint>& checkpoints,
                                     const Dataset& ds, int max_len) {
    const auto& ood = ds.split(Split::Ood);
    require(!ood.empty(), "generalization_eval: ood split missing or empty");

    ComparisonReport report;
    for (const auto& ck : checkpoints) {
        require(ck.params != nullptr, "generalization_eval: null checkpoint " + ck.name);
        EvalReport er = evaluate_suite(*ck.params, ds, Split::Ood, ck.form, max_len, 0);
        ComparisonRow row;
        row.name = ck.name;
        row.form = ck.form;
        for (const auto& t : er.tasks) {
            require(is_pairwise(t.task), "generalization_eval: ood split contains pointwise task");
            row.per_task.emplace_back(t.task, t.macro_f1);
            row.mean_f1 += t.macro_f1;
        }
        require(!row.per_task.empty(), "generalization_eval: no pairwise tasks in ood split");
        row.mean_f1 /= (double)row.per_task.size();
        report.rows.push_back(std::move(row));
    }

    const ComparisonRow* rl = nullptr;
    const ComparisonRow* sft = nullptr;
    for (const auto& row : report.rows) {
        if (row.name == "MT-RL") rl = &row;
        if (row.name == "SFT-Unified") sft = &row;
    }
    if (rl && sft) report.gap = rl->mean_f1 - sft->mean_f1;
    return report;
}

std::string comparison_to_json(const ComparisonReport& r) {
    json rows = json::array();
    for (const auto& row : r.rows) {
        json per_task = json::object();
        for (const auto& [task, f1] : row.per_task) per_task[task_name(task)] = f1;
        rows.push_back(json{{"name", row.name},
                            {"form", form_name(row.form)},
                            {"per_task", per_task},
                            {"mean_f1", row.mean_f1}});
    }
    json j{{"rows", rows}};
    if (r.gap.has_value()) j["gap_mt_rl_minus_sft_unified"] = *r.gap;
    return j.dump(2) + "\n";
}

std::string comparison_to_text(const ComparisonReport& r) {
    std::size_t nw = 10;
    for (const auto& row : r.rows) nw = std::max(nw, row.name.size());
    std::string out = pad("checkpoint", nw) + "  form  ";
    if (!r.rows.empty())
        for (const auto& [task, f1] : r.rows[0].per_task) out += pad(task_name(task), 10) + "  ";
    out += "mean\n";
    for (const auto& row : r.rows) {
        out += pad(row.name, nw) + "  " + pad(form_name(row.form), 4) + "  ";
        for (const auto& [task, f1] : row.per_task) out += pad(f4(f1), 10) + "  ";
        out += f4(row.mean_f1) + "\n";
    }
    if (r.gap.has_value())
        out += "\ngap MT-RL - SFT-Unified: " + f4(*r.gap) + "\n";
    return out;
}

} // namespace mj
