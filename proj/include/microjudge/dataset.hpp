#pragma once
// dataset construction and access. build_dataset writes one JSONL file per
// split plus a manifest; class ratios are enforced by rejection sampling so
// the invariant gold == ground_truth(...) always holds on disk.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "microjudge/rng.hpp"
#include "microjudge/scene.hpp"
#include "microjudge/vocab.hpp"

namespace mj {

enum class Split { Train, Val, Test, Ood };
const std::string& split_name(Split s);
std::optional<Split> split_from_name(const std::string& name);

struct Example {
    std::string id;
    TaskKind task = TaskKind::AlignPoint;
    std::optional<Claim> claim; // present exactly for Align* tasks
    std::vector<Scene> scenes;  // 1 for pointwise, 2 for pairwise
    Label gold = Label::Yes;
    Split split = Split::Train;

    bool operator==(const Example&) const = default;
};

// per-task, per-split, per-label target counts
using CountSpec = std::map<TaskKind, std::map<Split, std::map<Label, int>>>;

struct DataConfig {
    std::uint64_t seed = 1;
    SceneGenConfig scene;
    CountSpec counts;
    double tie_cap_frac = 0.05;  // accepted pairwise ties stay below this fraction
    int max_reject_factor = 1000; // draw budget per split: factor * requested count

    // Table-1-shaped desk defaults: three pointwise tasks for train/val/test,
    // two pairwise tasks confined to the ood split
    static DataConfig defaults();
    void validate() const;
};

struct SplitCount {
    int n = 0;
    int neg = 0; // No, Unsafe, Second
    int pos = 0; // Yes, Safe, First
    std::map<Label, int> per_label;
};

struct DatasetManifest {
    int format_version = 1;
    std::uint64_t seed = 0;
    std::string config_hash; // sha256 of the canonical data-config serialization
    std::map<TaskKind, std::map<Split, SplitCount>> counts;
};

std::string example_to_json_line(const Example& e);
Example example_from_json_line(const std::string& line);

std::string manifest_to_json(const DatasetManifest& m);
DatasetManifest manifest_from_json(const std::string& text);

// canonical serialization of the data section; its sha256 keys the dataset dir
std::string canonical_data_config(const DataConfig& cfg);
std::string data_config_hash(const DataConfig& cfg);

// writes <dir>/{train,val,test,ood}.jsonl and <dir>/manifest.json
DatasetManifest build_dataset(const DataConfig& cfg, const std::string& dir);

struct Dataset {
    DatasetManifest manifest;
    std::map<Split, std::vector<Example>> splits;

    const std::vector<Example>& split(Split s) const;
};

Dataset load_dataset(const std::string& dir);

// full re-derivation pass: every stored gold must equal ground_truth
void verify_dataset(const Dataset& ds, int quality_threshold);

// deterministic flat prompt encoding:
//   task tag, claim (quantifier shape color) if any,
//   per scene: SCENE, per object (shape color size hazard OBJ_END), noise,
//   EOP
std::vector<Tok> encode_example(const Example& e);

enum class SampleStrategy { Proportional, UniformTask };
std::optional<SampleStrategy> strategy_from_name(const std::string& name);
const std::string& strategy_name(SampleStrategy s);

// draws batch_size indices into ds.split(split), restricted to the given
// tasks, with replacement. proportional = uniform over the pooled examples;
// uniform-task picks a task first.
std::vector<std::size_t> sample_batch(const Dataset& ds, Split split, SampleStrategy strategy,
                                      std::size_t batch_size, Rng& rng,
                                      const std::vector<TaskKind>& tasks);

} // namespace mj
