#include "microjudge/rewards.hpp"

#include "microjudge/util.hpp"

namespace mj {

namespace {

const std::vector<std::string> kFailureNames = {
    "none", "no_think_open", "no_think_close", "multiple_think_blocks",
    "no_box", "malformed_json", "unknown_label", "trailing_tokens"};

ParsedVerdict fail(ParseFailure f) {
    ParsedVerdict v;
    v.form = VerdictForm::Invalid;
    v.failure = f;
    return v;
}

// tokens allowed inside the thinking body: everything except the structural
// grammar tokens and EOS (EOS would mean generation ended mid-thought)
bool think_body_ok(Tok t) { return !tok::is_structural(t) && t != tok::EOS; }

} // namespace

const std::string& failure_name(ParseFailure f) { return kFailureNames[(std::size_t)f]; }

Label label_from_token(Tok t) {
    require(tok::is_label(t), "label_from_token: not a label token");
    return (Label)(t - tok::YES);
}

Tok token_from_label(Label l) { return tok::YES + (Tok)l; }

ParsedVerdict parse_output(const std::vector<Tok>& output) {
    std::size_t n = output.size();
    if (n == 0) return fail(ParseFailure::NoThinkOpen);

    // sft form: bare label, optional EOS
    if (tok::is_label(output[0])) {
        if (n >= 2 && output[1] != tok::EOS) return fail(ParseFailure::TrailingTokens);
        if (n > 2) return fail(ParseFailure::TrailingTokens);
        ParsedVerdict v;
        v.form = VerdictForm::Sft;
        v.label = label_from_token(output[0]);
        return v;
    }

    if (output[0] != tok::THINK_OPEN) return fail(ParseFailure::NoThinkOpen);

    // thinking body until THINK_CLOSE
    std::size_t i = 1;
    while (i < n && think_body_ok(output[i])) i++;
    if (i == n || output[i] == tok::EOS) return fail(ParseFailure::NoThinkClose);
    if (output[i] == tok::THINK_OPEN) return fail(ParseFailure::MultipleThinkBlocks);
    if (output[i] != tok::THINK_CLOSE) return fail(ParseFailure::NoThinkClose);
    std::pair<int, int> span{1, (int)i};
    i++;

    if (i < n && output[i] == tok::THINK_OPEN) return fail(ParseFailure::MultipleThinkBlocks);
    if (i == n || output[i] != tok::BOX_OPEN) return fail(ParseFailure::NoBox);
    i++;

    if (i == n || output[i] != tok::JSON_LABEL_KEY) return fail(ParseFailure::MalformedJson);
    i++;
    if (i == n) return fail(ParseFailure::MalformedJson);
    if (!tok::is_label(output[i])) return fail(ParseFailure::UnknownLabel);
    Label label = label_from_token(output[i]);
    i++;
    if (i == n || output[i] != tok::BOX_CLOSE) return fail(ParseFailure::MalformedJson);
    i++;

    if (i < n && output[i] == tok::EOS) i++;
    if (i != n) return fail(ParseFailure::TrailingTokens);

    ParsedVerdict v;
    v.form = VerdictForm::Rl;
    v.label = label;
    v.thinking_span = span;
    return v;
}

double format_reward(const ParsedVerdict& parsed, RequiredForm required) {
    if (parsed.failure != ParseFailure::None) return 0.0;
    bool match = (required == RequiredForm::Rl && parsed.form == VerdictForm::Rl) ||
                 (required == RequiredForm::Sft && parsed.form == VerdictForm::Sft);
    return match ? 1.0 : 0.0;
}

double accuracy_reward(const ParsedVerdict& parsed, Label gold) {
    return parsed.label.has_value() && *parsed.label == gold ? 1.0 : 0.0;
}

double total_reward(double r_acc, double r_for, double alpha) {
    require(alpha >= 0.0 && alpha <= 1.0, "total_reward: alpha outside [0,1]");
    return (1.0 - alpha) * r_acc + alpha * r_for;
}

RewardBreakdown score_output(const std::vector<Tok>& output, Label gold, RequiredForm required,
                             double alpha) {
    ParsedVerdict parsed = parse_output(output);
    RewardBreakdown b;
    b.alpha = alpha;
    b.r_acc = accuracy_reward(parsed, gold);
    b.r_for = format_reward(parsed, required);
    b.r_total = total_reward(b.r_acc, b.r_for, alpha);
    return b;
}

} // namespace mj
