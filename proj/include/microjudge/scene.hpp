#pragma once
// synthetic observations and the deterministic labeling rules. a Scene is a
// tiny stand-in for an image: a handful of attributed objects plus a noise
// level. every task label is a pure function of (task, claim, scenes), which
// is what makes the training rewards verifiable.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "microjudge/rng.hpp"

namespace mj {

enum class Shape { Circle, Square, Triangle };
enum class Color { Red, Green, Blue };
enum class Size { Small, Large };

struct Object {
    Shape shape = Shape::Circle;
    Color color = Color::Red;
    Size size = Size::Small;
    bool hazard = false;

    bool operator==(const Object&) const = default;
};

struct Scene {
    std::vector<Object> objects; // 1..object_max
    int noise_level = 0;         // 0..noise_max

    bool operator==(const Scene&) const = default;
};

enum class TaskKind { AlignPoint, SafetyPoint, QualityPoint, AlignPair, SafetyPair };

constexpr bool is_pairwise(TaskKind t) {
    return t == TaskKind::AlignPair || t == TaskKind::SafetyPair;
}
constexpr bool has_claim(TaskKind t) {
    return t == TaskKind::AlignPoint || t == TaskKind::AlignPair;
}

enum class Label { Yes, No, Safe, Unsafe, First, Second };

// label alphabet a task draws verdicts from, in fixed order
std::vector<Label> label_alphabet(TaskKind t);

enum class Quantifier { Present, Absent };

// a claim like "some red circle is present"; "any" wildcards one attribute,
// but never both at once
struct Claim {
    std::optional<Shape> shape; // nullopt = any
    std::optional<Color> color; // nullopt = any
    Quantifier quantifier = Quantifier::Present;

    bool operator==(const Claim&) const = default;
};

struct SceneGenConfig {
    int object_max = 5;
    int noise_max = 5;
    double hazard_prob = 0.35;
    std::vector<double> shape_probs = {1, 1, 1}; // circle, square, triangle
    std::vector<double> color_probs = {1, 1, 1}; // red, green, blue
    std::vector<double> size_probs = {1, 1};     // small, large
    int quality_threshold = 2;                   // noise above this means quality "No"

    void validate() const;
};

Scene generate_scene(Rng& rng, const SceneGenConfig& cfg);
Claim generate_claim(Rng& rng);

bool claim_matches(const Claim& claim, const Object& obj);
int count_matches(const Claim& claim, const Scene& scene);
int count_hazards(const Scene& scene);

// the annotation oracle. claim must be present exactly for Align* tasks and
// the scene count must match the task arity.
Label ground_truth(TaskKind task, const std::optional<Claim>& claim,
                   const std::vector<Scene>& scenes, int quality_threshold);

// name tables shared by serialization and reports
const std::string& task_name(TaskKind t);
std::optional<TaskKind> task_from_name(const std::string& name);
const std::string& label_name(Label l);
std::optional<Label> label_from_name(const std::string& name);
const std::string& shape_name(Shape s);
const std::string& color_name(Color c);
const std::string& size_name(Size s);
std::optional<Shape> shape_from_name(const std::string& name);
std::optional<Color> color_from_name(const std::string& name);
std::optional<Size> size_from_name(const std::string& name);

} // namespace mj
