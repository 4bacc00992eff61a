#include "microjudge/trainio.hpp"

#include <json.hpp>

#include "microjudge/util.hpp"

using nlohmann::json;

namespace mj {

namespace {

json doubles_to_json(const std::vector<double>& v) {
    json arr = json::array();
    for (double x : v) arr.push_back(fmt17(x));
    return arr;
}

std::vector<double> doubles_from_json(const json& arr) {
    std::vector<double> v;
    v.reserve(arr.size());
    for (const auto& s : arr) v.push_back(parse17(s.get<std::string>()));
    return v;
}

} // namespace

void save_state(const std::string& path, const TrainerState& st, const std::string& role) {
    json j;
    j["format_version"] = 1;
    j["role"] = role;
    j["step"] = st.step;
    j["adam_t"] = st.adam.t;
    j["flat_params"] = doubles_to_json(st.params.flat);
    j["adam_m"] = doubles_to_json(st.adam.m);
    j["adam_v"] = doubles_to_json(st.adam.v);
    j["best_val"] = fmt17(st.best_val);
    j["best_step"] = st.best_step;
    j["evals_since_improve"] = st.evals_since_improve;
    atomic_write_file(path, j.dump() + "\n");
}

void load_state(const std::string& path, TrainerState& st, const std::string& role) {
    json j = json::parse(read_file(path));
    require(j.at("format_version").get<int>() == 1, "unsupported state format_version");
    require(j.at("role").get<std::string>() == role, "resume state belongs to a different trainer");
    st.step = j.at("step").get<int>();
    st.adam.t = j.at("adam_t").get<std::uint64_t>();
    st.params.flat = doubles_from_json(j.at("flat_params"));
    require(st.params.flat.size() == st.params.dims.flat_size(),
            "resume state: parameter size mismatch");
    st.adam.m = doubles_from_json(j.at("adam_m"));
    st.adam.v = doubles_from_json(j.at("adam_v"));
    require(st.adam.m.size() == st.params.flat.size() && st.adam.v.size() == st.params.flat.size(),
            "resume state: moment size mismatch");
    st.best_val = parse17(j.at("best_val").get<std::string>());
    st.best_step = j.at("best_step").get<int>();
    st.evals_since_improve = j.at("evals_since_improve").get<int>();
}

void truncate_log(const std::string& path, int keep_step) {
    if (!file_exists(path)) return;
    std::string kept;
    for (const auto& line : read_lines(path)) {
        if (line.empty()) continue;
        json row = json::parse(line);
        if (row.at("step").get<int>() > keep_step) continue;
        kept += line;
        kept += '\n';
    }
    atomic_write_file(path, kept);
}

void save_best_checkpoint(const std::string& run_dir, const PolicyParams& params, int step,
                          double val, const std::string& role) {
    save_checkpoint(params, run_dir + "/checkpoint_best.json");
    json meta{{"step", step}, {"val_r_acc", val}, {"role", role}};
    atomic_write_file(run_dir + "/checkpoint_best.meta.json", meta.dump(2) + "\n");
}

} // namespace mj
