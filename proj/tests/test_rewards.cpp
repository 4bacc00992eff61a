#include <doctest.h>

#include <optional>
#include <vector>

#include "microjudge/rewards.hpp"
#include "microjudge/rng.hpp"
#include "microjudge/util.hpp"

using namespace mj;
using mj::tok::BOX_CLOSE;
using mj::tok::BOX_OPEN;
using mj::tok::EOS;
using mj::tok::JSON_LABEL_KEY;
using mj::tok::THINK_CLOSE;
using mj::tok::THINK_OPEN;

namespace {

ParsedVerdict rl_verdict(Label l, int span_begin, int span_end) {
    ParsedVerdict v;
    v.form = VerdictForm::Rl;
    v.label = l;
    v.thinking_span = {span_begin, span_end};
    return v;
}

ParsedVerdict sft_verdict(Label l) {
    ParsedVerdict v;
    v.form = VerdictForm::Sft;
    v.label = l;
    return v;
}

ParsedVerdict failed(ParseFailure f) {
    ParsedVerdict v;
    v.form = VerdictForm::Invalid;
    v.failure = f;
    return v;
}

} // namespace

TEST_CASE("golden parse table") {
    const Tok T0 = tok::THINK_0, T1 = tok::THINK_0 + 1;
    struct Row {
        std::vector<Tok> output;
        ParsedVerdict want;
    };
    const std::vector<Row> table = {
        // valid rl form
        {{THINK_OPEN, T0, T1, THINK_CLOSE, BOX_OPEN, JSON_LABEL_KEY, tok::SAFE, BOX_CLOSE, EOS},
         rl_verdict(Label::Safe, 1, 3)},
        {{THINK_OPEN, THINK_CLOSE, BOX_OPEN, JSON_LABEL_KEY, tok::YES, BOX_CLOSE},
         rl_verdict(Label::Yes, 1, 1)},
        // valid sft form
        {{tok::SAFE}, sft_verdict(Label::Safe)},
        {{tok::NO, EOS}, sft_verdict(Label::No)},
        // no_think_open
        {{BOX_OPEN, JSON_LABEL_KEY, tok::SAFE, BOX_CLOSE}, failed(ParseFailure::NoThinkOpen)},
        {{}, failed(ParseFailure::NoThinkOpen)},
        {{tok::RED}, failed(ParseFailure::NoThinkOpen)},
        // no_think_close
        {{THINK_OPEN, T0, EOS}, failed(ParseFailure::NoThinkClose)},
        {{THINK_OPEN, T0}, failed(ParseFailure::NoThinkClose)},
        {{THINK_OPEN, BOX_OPEN, JSON_LABEL_KEY, tok::SAFE, BOX_CLOSE},
         failed(ParseFailure::NoThinkClose)},
        // multiple_think_blocks
        {{THINK_OPEN, THINK_CLOSE, THINK_OPEN, THINK_CLOSE, BOX_OPEN, JSON_LABEL_KEY, tok::SAFE,
          BOX_CLOSE},
         failed(ParseFailure::MultipleThinkBlocks)},
        {{THINK_OPEN, T0, THINK_OPEN, THINK_CLOSE}, failed(ParseFailure::MultipleThinkBlocks)},
        // no_box
        {{THINK_OPEN, THINK_CLOSE, EOS}, failed(ParseFailure::NoBox)},
        {{THINK_OPEN, T0, THINK_CLOSE}, failed(ParseFailure::NoBox)},
        // malformed_json
        {{THINK_OPEN, THINK_CLOSE, BOX_OPEN, tok::SAFE, BOX_CLOSE},
         failed(ParseFailure::MalformedJson)},
        {{THINK_OPEN, THINK_CLOSE, BOX_OPEN, JSON_LABEL_KEY, tok::SAFE},
         failed(ParseFailure::MalformedJson)},
        {{THINK_OPEN, THINK_CLOSE, BOX_OPEN, JSON_LABEL_KEY}, failed(ParseFailure::MalformedJson)},
        // unknown_label
        {{THINK_OPEN, THINK_CLOSE, BOX_OPEN, JSON_LABEL_KEY, tok::RED, BOX_CLOSE},
         failed(ParseFailure::UnknownLabel)},
        // trailing_tokens
        {{THINK_OPEN, THINK_CLOSE, BOX_OPEN, JSON_LABEL_KEY, tok::SAFE, BOX_CLOSE, EOS, tok::YES},
         failed(ParseFailure::TrailingTokens)},
        {{THINK_OPEN, THINK_CLOSE, BOX_OPEN, JSON_LABEL_KEY, tok::SAFE, BOX_CLOSE, tok::YES},
         failed(ParseFailure::TrailingTokens)},
        {{tok::YES, tok::NO}, failed(ParseFailure::TrailingTokens)},
        {{tok::YES, EOS, EOS}, failed(ParseFailure::TrailingTokens)},
    };
    REQUIRE(table.size() >= 12);
    for (std::size_t i = 0; i < table.size(); i++) {
        CAPTURE(i);
        CHECK(parse_output(table[i].output) == table[i].want);
    }
}

TEST_CASE("parsing is total and idempotent on random sequences") {
    Rng rng(123);
    for (int trial = 0; trial < 5000; trial++) {
        std::vector<Tok> out(rng.uniform_int(12));
        for (auto& t : out) t = (Tok)rng.uniform_int(tok::VOCAB_SIZE);
        ParsedVerdict v = parse_output(out);
        CHECK(parse_output(out) == v);
        CHECK((v.failure == ParseFailure::None) == (v.form != VerdictForm::Invalid));
        if (v.form == VerdictForm::Rl) {
            CHECK(v.label.has_value());
            CHECK(v.thinking_span.has_value());
        }
        if (v.form == VerdictForm::Sft) {
            CHECK(v.label.has_value());
            CHECK_FALSE(v.thinking_span.has_value());
        }
    }
}

TEST_CASE("format reward requires the matching valid form") {
    ParsedVerdict rl = parse_output({THINK_OPEN, THINK_CLOSE, BOX_OPEN, JSON_LABEL_KEY, tok::SAFE,
                                     BOX_CLOSE, EOS});
    ParsedVerdict sft = parse_output({tok::SAFE, EOS});
    ParsedVerdict bad = parse_output({tok::YES, tok::NO});
    CHECK(format_reward(rl, RequiredForm::Rl) == 1.0);
    CHECK(format_reward(rl, RequiredForm::Sft) == 0.0);
    CHECK(format_reward(sft, RequiredForm::Sft) == 1.0);
    CHECK(format_reward(sft, RequiredForm::Rl) == 0.0);
    CHECK(format_reward(bad, RequiredForm::Rl) == 0.0);
    CHECK(format_reward(bad, RequiredForm::Sft) == 0.0);
}

TEST_CASE("accuracy reward compares the extracted label to gold") {
    ParsedVerdict safe = parse_output({tok::SAFE});
    CHECK(accuracy_reward(safe, Label::Safe) == 1.0);
    CHECK(accuracy_reward(safe, Label::Unsafe) == 0.0);
    ParsedVerdict malformed = parse_output({THINK_OPEN, tok::SAFE, EOS});
    CHECK_FALSE(malformed.label.has_value());
    CHECK(accuracy_reward(malformed, Label::Safe) == 0.0);
}

TEST_CASE("total reward worked examples") {
    CHECK(total_reward(1, 1, 0.1) == 1.0);
    CHECK(total_reward(0, 1, 0.1) == 0.1);
    CHECK(total_reward(1, 0, 0.1) == 0.9);
    CHECK(total_reward(0, 0, 0.1) == 0.0);
    CHECK_THROWS_AS(total_reward(1, 1, -0.01), check_error);
    CHECK_THROWS_AS(total_reward(1, 1, 1.01), check_error);
}

TEST_CASE("total reward lands exactly in {0, alpha, 1-alpha, 1}") {
    const double alphas[] = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    for (double a : alphas) {
        CHECK(total_reward(0, 0, a) == 0.0);
        CHECK(total_reward(0, 1, a) == a);
        CHECK(total_reward(1, 0, a) == 1.0 - a);
        CHECK(total_reward(1, 1, a) == 1.0);
    }
}

TEST_CASE("total reward is monotone in each argument") {
    for (double a = 0.0; a <= 1.0; a += 0.1) {
        for (double f : {0.0, 1.0}) CHECK(total_reward(1, f, a) >= total_reward(0, f, a));
        for (double r : {0.0, 1.0}) CHECK(total_reward(r, 1, a) >= total_reward(r, 0, a));
    }
}

TEST_CASE("score_output composes the three rewards") {
    std::vector<Tok> out = {THINK_OPEN, THINK_CLOSE, BOX_OPEN, JSON_LABEL_KEY, tok::UNSAFE,
                            BOX_CLOSE, EOS};
    RewardBreakdown b = score_output(out, Label::Unsafe, RequiredForm::Rl, 0.1);
    CHECK(b.r_acc == 1.0);
    CHECK(b.r_for == 1.0);
    CHECK(b.r_total == 1.0);
    b = score_output(out, Label::Safe, RequiredForm::Rl, 0.1);
    CHECK(b.r_acc == 0.0);
    CHECK(b.r_for == 1.0);
    CHECK(b.r_total == 0.1);
    b = score_output({tok::UNSAFE, EOS}, Label::Unsafe, RequiredForm::Rl, 0.1);
    CHECK(b.r_acc == 1.0);
    CHECK(b.r_for == 0.0);
    CHECK(b.r_total == 0.9);
    b = score_output({tok::RED}, Label::Unsafe, RequiredForm::Rl, 0.1);
    CHECK(b.r_total == 0.0);
}

TEST_CASE("label and token conversions round-trip") {
    for (Label l : {Label::Yes, Label::No, Label::Safe, Label::Unsafe, Label::First, Label::Second}) {
        Tok t = token_from_label(l);
        CHECK(tok::is_label(t));
        CHECK(label_from_token(t) == l);
    }
    CHECK_THROWS_AS(label_from_token(tok::RED), check_error);
    CHECK_THROWS_AS(label_from_token(tok::EOS), check_error);
}

TEST_CASE("failure names are distinct and stable") {
    CHECK(failure_name(ParseFailure::None) == "none");
    CHECK(failure_name(ParseFailure::NoThinkOpen) == "no_think_open");
    CHECK(failure_name(ParseFailure::NoThinkClose) == "no_think_close");
    CHECK(failure_name(ParseFailure::MultipleThinkBlocks) == "multiple_think_blocks");
    CHECK(failure_name(ParseFailure::NoBox) == "no_box");
    CHECK(failure_name(ParseFailure::MalformedJson) == "malformed_json");
    CHECK(failure_name(ParseFailure::UnknownLabel) == "unknown_label");
    CHECK(failure_name(ParseFailure::TrailingTokens) == "trailing_tokens");
}
