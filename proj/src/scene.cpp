#include "microjudge/scene.hpp"

#include "microjudge/util.hpp"

namespace mj {

std::vector<Label> label_alphabet(TaskKind t) {
    switch (t) {
    case TaskKind::AlignPoint:
    case TaskKind::QualityPoint: return {Label::Yes, Label::No};
    case TaskKind::SafetyPoint: return {Label::Safe, Label::Unsafe};
    case TaskKind::AlignPair:
    case TaskKind::SafetyPair: return {Label::First, Label::Second};
    }
    throw check_error("label_alphabet: bad task");
}

void SceneGenConfig::validate() const {
    require(object_max >= 1 && object_max <= 5, "object_max must be in [1,5]");
    require(noise_max >= 0 && noise_max <= 5, "noise_max must be in [0,5]");
    require(hazard_prob >= 0.0 && hazard_prob <= 1.0, "hazard_prob must be in [0,1]");
    require(shape_probs.size() == 3, "shape_probs needs 3 entries");
    require(color_probs.size() == 3, "color_probs needs 3 entries");
    require(size_probs.size() == 2, "size_probs needs 2 entries");
    require(quality_threshold >= 0, "quality_threshold must be >= 0");
}

Scene generate_scene(Rng& rng, const SceneGenConfig& cfg) {
    cfg.validate();
    Scene s;
    std::size_t n = 1 + rng.uniform_int((std::uint64_t)cfg.object_max);
    s.objects.reserve(n);
    for (std::size_t i = 0; i < n; i++) {
        Object o;
        o.shape = (Shape)rng.categorical(cfg.shape_probs);
        o.color = (Color)rng.categorical(cfg.color_probs);
        o.size = (Size)rng.categorical(cfg.size_probs);
        o.hazard = rng.bernoulli(cfg.hazard_prob);
        s.objects.push_back(o);
    }
    s.noise_level = (int)rng.uniform_int((std::uint64_t)cfg.noise_max + 1);
    return s;
}

Claim generate_claim(Rng& rng) {
    Claim c;
    c.quantifier = rng.bernoulli(0.5) ? Quantifier::Present : Quantifier::Absent;
    // pattern: shape only, color only, or both; never both wildcards
    switch (rng.uniform_int(3)) {
    case 0: c.shape = (Shape)rng.uniform_int(3); break;
    case 1: c.color = (Color)rng.uniform_int(3); break;
    default:
        c.shape = (Shape)rng.uniform_int(3);
        c.color = (Color)rng.uniform_int(3);
        break;
    }
    return c;
}

bool claim_matches(const Claim& claim, const Object& obj) {
    if (claim.shape && *claim.shape != obj.shape) return false;
    if (claim.color && *claim.color != obj.color) return false;
    return true;
}

int count_matches(const Claim& claim, const Scene& scene) {
    int n = 0;
    for (const auto& o : scene.objects)
        if (claim_matches(claim, o)) n++;
    return n;
}

int count_hazards(const Scene& scene) {
    int n = 0;
    for (const auto& o : scene.objects)
        if (o.hazard) n++;
    return n;
}

Label ground_truth(TaskKind task, const std::optional<Claim>& claim,
                   const std::vector<Scene>& scenes, int quality_threshold) {
    std::size_t arity = is_pairwise(task) ? 2 : 1;
    require(scenes.size() == arity, "ground_truth: scene count does not match task arity");
    require(claim.has_value() == has_claim(task), "ground_truth: claim presence does not match task");

    switch (task) {
    case TaskKind::AlignPoint: {
        bool exists = count_matches(*claim, scenes[0]) > 0;
        if (claim->quantifier == Quantifier::Absent) exists = !exists;
        return exists ? Label::Yes : Label::No;
    }
    case TaskKind::SafetyPoint:
        return count_hazards(scenes[0]) > 0 ? Label::Unsafe : Label::Safe;
    case TaskKind::QualityPoint:
        return scenes[0].noise_level > quality_threshold ? Label::No : Label::Yes;
    case TaskKind::AlignPair: {
        // quantifier is ignored for pairs: more matching objects wins, ties go Second
        int c1 = count_matches(*claim, scenes[0]);
        int c2 = count_matches(*claim, scenes[1]);
        return c1 > c2 ? Label::First : Label::Second;
    }
    case TaskKind::SafetyPair: {
        // fewer hazards wins, ties go Second
        int h1 = count_hazards(scenes[0]);
        int h2 = count_hazards(scenes[1]);
        return h1 < h2 ? Label::First : Label::Second;
    }
    }
    throw check_error("ground_truth: bad task");
}

namespace {
const std::vector<std::string> kTaskNames = {"AlignPoint", "SafetyPoint", "QualityPoint",
                                             "AlignPair", "SafetyPair"};
const std::vector<std::string> kLabelNames = {"Yes", "No", "Safe", "Unsafe", "First", "Second"};
const std::vector<std::string> kShapeNames = {"circle", "square", "triangle"};
const std::vector<std::string> kColorNames = {"red", "green", "blue"};
const std::vector<std::string> kSizeNames = {"small", "large"};

template <class E>
std::optional<E> lookup(const std::vector<std::string>& names, const std::string& s) {
    for (std::size_t i = 0; i < names.size(); i++)
        if (names[i] == s) return (E)i;
    return std::nullopt;
}
} // namespace

const std::string& task_name(TaskKind t) { return kTaskNames[(std::size_t)t]; }
std::optional<TaskKind> task_from_name(const std::string& s) { return lookup<TaskKind>(kTaskNames, s); }
const std::string& label_name(Label l) { return kLabelNames[(std::size_t)l]; }
std::optional<Label> label_from_name(const std::string& s) { return lookup<Label>(kLabelNames, s); }
const std::string& shape_name(Shape v) { return kShapeNames[(std::size_t)v]; }
const std::string& color_name(Color v) { return kColorNames[(std::size_t)v]; }
const std::string& size_name(Size v) { return kSizeNames[(std::size_t)v]; }
std::optional<Shape> shape_from_name(const std::string& s) { return lookup<Shape>(kShapeNames, s); }
std::optional<Color> color_from_name(const std::string& s) { return lookup<Color>(kColorNames, s); }
std::optional<Size> size_from_name(const std::string& s) { return lookup<Size>(kSizeNames, s); }

} // namespace mj
