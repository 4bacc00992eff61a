#pragma once
// single-document experiment configuration: strict schema (unknown fields
// rejected, missing fields defaulted), plus a canonical serialization whose
// sha256 keys artifact directories. sub-hashes key the stage caches: the data
// section keys the dataset dir, the model section keys the shared init.

#include <string>
#include <vector>

#include "microjudge/dataset.hpp"
#include "microjudge/grpo.hpp"
#include "microjudge/sft.hpp"

namespace mj {

struct ModelConfig {
    int d = 32;
    std::string vocab = "default"; // the builtin 48-symbol vocabulary
    int max_len = 48;
    BackboneConfig backbone;
    void validate() const;
};

struct EvalConfig {
    std::vector<Split> splits = {Split::Test, Split::Ood};
    std::string form = "auto"; // rl | sft | auto (the evaluated run's native form)
    void validate() const;
};

struct ExperimentConfig {
    std::string output_dir = "out";
    DataConfig data = DataConfig::defaults();
    ModelConfig model;
    RlConfig rl;
    SftConfig sft;
    EvalConfig eval;
    void validate() const;
};

// both throw usage errors on malformed, unknown or invalid fields
ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_config(const std::string& path);

// canonical: every field present, sorted keys, platform-independent bytes
std::string config_to_json(const ExperimentConfig& cfg);
std::string config_hash(const ExperimentConfig& cfg);
std::string model_section_hash(const ExperimentConfig& cfg);

} // namespace mj
