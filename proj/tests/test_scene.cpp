#include <doctest.h>

#include <optional>
#include <vector>

#include "microjudge/scene.hpp"
#include "microjudge/util.hpp"

using namespace mj;

namespace {

Scene make_scene(std::vector<Object> objs, int noise = 0) {
    Scene s;
    s.objects = std::move(objs);
    s.noise_level = noise;
    return s;
}

Object obj(Shape sh, Color c, Size sz = Size::Small, bool haz = false) {
    return Object{sh, c, sz, haz};
}

} // namespace

TEST_CASE("degenerate config forces one small red circle") {
    SceneGenConfig cfg;
    cfg.object_max = 1;
    cfg.noise_max = 0;
    cfg.hazard_prob = 0.0;
    cfg.shape_probs = {1, 0, 0};
    cfg.color_probs = {1, 0, 0};
    cfg.size_probs = {1, 0};
    Rng rng(0);
    Scene s = generate_scene(rng, cfg);
    REQUIRE(s.objects.size() == 1);
    CHECK(s.objects[0] == Object{Shape::Circle, Color::Red, Size::Small, false});
    CHECK(s.noise_level == 0);
}

TEST_CASE("generation is deterministic in the rng state") {
    SceneGenConfig cfg;
    Rng a(7), b(7);
    for (int i = 0; i < 20; i++) CHECK(generate_scene(a, cfg) == generate_scene(b, cfg));
}

TEST_CASE("seed 7 default config golden fixture") {
    SceneGenConfig cfg;
    Rng rng(7);
    Scene s = generate_scene(rng, cfg);
    Scene expect = make_scene({obj(Shape::Triangle, Color::Red, Size::Large, true)}, 0);
    CHECK(s == expect);
}

TEST_CASE("generated scenes respect config bounds") {
    SceneGenConfig cfg;
    Rng rng(99);
    bool saw_max_objects = false, saw_max_noise = false;
    for (int i = 0; i < 2000; i++) {
        Scene s = generate_scene(rng, cfg);
        REQUIRE(s.objects.size() >= 1);
        REQUIRE((int)s.objects.size() <= cfg.object_max);
        REQUIRE(s.noise_level >= 0);
        REQUIRE(s.noise_level <= cfg.noise_max);
        saw_max_objects |= (int)s.objects.size() == cfg.object_max;
        saw_max_noise |= s.noise_level == cfg.noise_max;
    }
    CHECK(saw_max_objects);
    CHECK(saw_max_noise);
}

TEST_CASE("invalid config bounds are rejected") {
    SceneGenConfig cfg;
    cfg.object_max = 0;
    CHECK_THROWS_AS(cfg.validate(), check_error);
    cfg = SceneGenConfig{};
    cfg.noise_max = -1;
    CHECK_THROWS_AS(cfg.validate(), check_error);
    cfg = SceneGenConfig{};
    cfg.shape_probs = {0, 0, 0};
    CHECK_THROWS_AS(cfg.validate(), check_error);
    cfg = SceneGenConfig{};
    cfg.hazard_prob = 1.5;
    CHECK_THROWS_AS(cfg.validate(), check_error);
}

TEST_CASE("generated claims never wildcard both attributes") {
    Rng rng(5);
    for (int i = 0; i < 2000; i++) {
        Claim c = generate_claim(rng);
        CHECK((c.shape.has_value() || c.color.has_value()));
    }
}

TEST_CASE("claim matching") {
    Claim red_circle{Shape::Circle, Color::Red, Quantifier::Present};
    CHECK(claim_matches(red_circle, obj(Shape::Circle, Color::Red)));
    CHECK_FALSE(claim_matches(red_circle, obj(Shape::Circle, Color::Blue)));
    CHECK_FALSE(claim_matches(red_circle, obj(Shape::Square, Color::Red)));

    Claim any_red{std::nullopt, Color::Red, Quantifier::Present};
    CHECK(claim_matches(any_red, obj(Shape::Triangle, Color::Red)));
    CHECK_FALSE(claim_matches(any_red, obj(Shape::Triangle, Color::Green)));

    Claim circle_any{Shape::Circle, std::nullopt, Quantifier::Present};
    CHECK(claim_matches(circle_any, obj(Shape::Circle, Color::Green)));
    CHECK_FALSE(claim_matches(circle_any, obj(Shape::Square, Color::Green)));

    // quantifier plays no role in per-object matching
    Claim absent{Shape::Circle, Color::Red, Quantifier::Absent};
    CHECK(claim_matches(absent, obj(Shape::Circle, Color::Red)));
}

TEST_CASE("count helpers") {
    Scene s = make_scene({obj(Shape::Circle, Color::Red), obj(Shape::Circle, Color::Red, Size::Large),
                          obj(Shape::Square, Color::Blue, Size::Small, true)});
    CHECK(count_matches(Claim{Shape::Circle, Color::Red, Quantifier::Present}, s) == 2);
    CHECK(count_matches(Claim{std::nullopt, Color::Blue, Quantifier::Present}, s) == 1);
    CHECK(count_hazards(s) == 1);
    CHECK(count_hazards(make_scene({obj(Shape::Circle, Color::Red)})) == 0);
}

TEST_CASE("ground truth: align point") {
    Claim red_circle{Shape::Circle, Color::Red, Quantifier::Present};
    Scene with = make_scene({obj(Shape::Circle, Color::Red)});
    Scene without = make_scene({obj(Shape::Square, Color::Blue)});
    CHECK(ground_truth(TaskKind::AlignPoint, red_circle, {with}, 2) == Label::Yes);
    CHECK(ground_truth(TaskKind::AlignPoint, red_circle, {without}, 2) == Label::No);

    Claim absent = red_circle;
    absent.quantifier = Quantifier::Absent;
    CHECK(ground_truth(TaskKind::AlignPoint, absent, {with}, 2) == Label::No);
    CHECK(ground_truth(TaskKind::AlignPoint, absent, {without}, 2) == Label::Yes);
}

TEST_CASE("ground truth: safety point") {
    Scene safe = make_scene({obj(Shape::Circle, Color::Red), obj(Shape::Square, Color::Blue)});
    Scene unsafe = make_scene({obj(Shape::Circle, Color::Red, Size::Small, true)});
    CHECK(ground_truth(TaskKind::SafetyPoint, std::nullopt, {safe}, 2) == Label::Safe);
    CHECK(ground_truth(TaskKind::SafetyPoint, std::nullopt, {unsafe}, 2) == Label::Unsafe);
}

TEST_CASE("ground truth: quality point threshold") {
    Scene s = make_scene({obj(Shape::Circle, Color::Red)});
    for (int noise = 0; noise <= 5; noise++) {
        s.noise_level = noise;
        Label want = noise > 2 ? Label::No : Label::Yes;
        CHECK(ground_truth(TaskKind::QualityPoint, std::nullopt, {s}, 2) == want);
    }
    s.noise_level = 3;
    CHECK(ground_truth(TaskKind::QualityPoint, std::nullopt, {s}, 3) == Label::Yes);
}

TEST_CASE("ground truth: align pair with tie to second") {
    Claim red_any{std::nullopt, Color::Red, Quantifier::Present};
    Scene two_red = make_scene({obj(Shape::Circle, Color::Red), obj(Shape::Square, Color::Red)});
    Scene also_two = make_scene({obj(Shape::Triangle, Color::Red), obj(Shape::Circle, Color::Red)});
    Scene one_red = make_scene({obj(Shape::Circle, Color::Red), obj(Shape::Square, Color::Blue)});
    CHECK(ground_truth(TaskKind::AlignPair, red_any, {two_red, one_red}, 2) == Label::First);
    CHECK(ground_truth(TaskKind::AlignPair, red_any, {one_red, two_red}, 2) == Label::Second);
    CHECK(ground_truth(TaskKind::AlignPair, red_any, {two_red, also_two}, 2) == Label::Second);
}

TEST_CASE("ground truth: safety pair prefers fewer hazards, tie to second") {
    Scene none = make_scene({obj(Shape::Circle, Color::Red)});
    Scene one = make_scene({obj(Shape::Circle, Color::Red, Size::Small, true)});
    Scene two = make_scene({obj(Shape::Circle, Color::Red, Size::Small, true),
                            obj(Shape::Square, Color::Blue, Size::Small, true)});
    CHECK(ground_truth(TaskKind::SafetyPair, std::nullopt, {none, one}, 2) == Label::First);
    CHECK(ground_truth(TaskKind::SafetyPair, std::nullopt, {two, one}, 2) == Label::Second);
    CHECK(ground_truth(TaskKind::SafetyPair, std::nullopt, {one, one}, 2) == Label::Second);
}

TEST_CASE("ground truth contract errors") {
    Scene s = make_scene({obj(Shape::Circle, Color::Red)});
    Claim c{Shape::Circle, Color::Red, Quantifier::Present};
    // arity mismatch
    CHECK_THROWS_AS(ground_truth(TaskKind::AlignPair, c, {s}, 2), check_error);
    CHECK_THROWS_AS(ground_truth(TaskKind::SafetyPoint, std::nullopt, {s, s}, 2), check_error);
    // claim presence mismatch
    CHECK_THROWS_AS(ground_truth(TaskKind::AlignPoint, std::nullopt, {s}, 2), check_error);
    CHECK_THROWS_AS(ground_truth(TaskKind::SafetyPoint, c, {s}, 2), check_error);
}

TEST_CASE("label alphabets per task") {
    CHECK(label_alphabet(TaskKind::AlignPoint) == std::vector<Label>{Label::Yes, Label::No});
    CHECK(label_alphabet(TaskKind::QualityPoint) == std::vector<Label>{Label::Yes, Label::No});
    CHECK(label_alphabet(TaskKind::SafetyPoint) == std::vector<Label>{Label::Safe, Label::Unsafe});
    CHECK(label_alphabet(TaskKind::AlignPair) == std::vector<Label>{Label::First, Label::Second});
    CHECK(label_alphabet(TaskKind::SafetyPair) == std::vector<Label>{Label::First, Label::Second});
}

TEST_CASE("task and label predicates") {
    CHECK(is_pairwise(TaskKind::AlignPair));
    CHECK(is_pairwise(TaskKind::SafetyPair));
    CHECK_FALSE(is_pairwise(TaskKind::SafetyPoint));
    CHECK(has_claim(TaskKind::AlignPoint));
    CHECK(has_claim(TaskKind::AlignPair));
    CHECK_FALSE(has_claim(TaskKind::QualityPoint));
}

TEST_CASE("name tables round-trip") {
    for (TaskKind t : {TaskKind::AlignPoint, TaskKind::SafetyPoint, TaskKind::QualityPoint,
                       TaskKind::AlignPair, TaskKind::SafetyPair})
        CHECK(task_from_name(task_name(t)) == t);
    for (Label l : {Label::Yes, Label::No, Label::Safe, Label::Unsafe, Label::First, Label::Second})
        CHECK(label_from_name(label_name(l)) == l);
    for (Shape s : {Shape::Circle, Shape::Square, Shape::Triangle})
        CHECK(shape_from_name(shape_name(s)) == s);
    for (Color c : {Color::Red, Color::Green, Color::Blue})
        CHECK(color_from_name(color_name(c)) == c);
    for (Size s : {Size::Small, Size::Large}) CHECK(size_from_name(size_name(s)) == s);
    CHECK_FALSE(task_from_name("NoSuchTask").has_value());
    CHECK_FALSE(label_from_name("Maybe").has_value());
}
