#pragma once
// output grammar, verdict extraction and the composite reward. two verdict
// forms exist:
//   rl form:  THINK_OPEN body* THINK_CLOSE BOX_OPEN JSON_LABEL_KEY label
//             BOX_CLOSE [EOS]
//   sft form: label [EOS]
// where body tokens are anything except the five structural tokens and EOS.
// parsing never throws; every token sequence maps to exactly one verdict.

#include <optional>
#include <string>
#include <vector>

#include "microjudge/scene.hpp"
#include "microjudge/vocab.hpp"

namespace mj {

enum class VerdictForm { Rl, Sft, Invalid };

enum class ParseFailure {
    None,
    NoThinkOpen,
    NoThinkClose,
    MultipleThinkBlocks,
    NoBox,
    MalformedJson,
    UnknownLabel,
    TrailingTokens,
};

const std::string& failure_name(ParseFailure f);

// Label enumerators are declared in label-token order, so these are offsets
Label label_from_token(Tok t);
Tok token_from_label(Label l);

struct ParsedVerdict {
    VerdictForm form = VerdictForm::Invalid;
    std::optional<Label> label;
    // [begin, end) token range of the thinking body; absent for sft form
    std::optional<std::pair<int, int>> thinking_span;
    ParseFailure failure = ParseFailure::None;

    bool operator==(const ParsedVerdict&) const = default;
};

ParsedVerdict parse_output(const std::vector<Tok>& output);

enum class RequiredForm { Rl, Sft };

double format_reward(const ParsedVerdict& parsed, RequiredForm required);
double accuracy_reward(const ParsedVerdict& parsed, Label gold);
// (1 - alpha) * r_acc + alpha * r_for
double total_reward(double r_acc, double r_for, double alpha);

struct RewardBreakdown {
    double r_acc = 0.0;
    double r_for = 0.0;
    double alpha = 0.0;
    double r_total = 0.0;
};

RewardBreakdown score_output(const std::vector<Tok>& output, Label gold, RequiredForm required,
                             double alpha);

} // namespace mj
