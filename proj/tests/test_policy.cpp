#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

#include <json.hpp>

#include "microjudge/policy.hpp"
#include "microjudge/util.hpp"

using namespace mj;

namespace {

std::vector<Tok> toks(std::initializer_list<int> ids) {
    return std::vector<Tok>(ids.begin(), ids.end());
}

} // namespace

TEST_CASE("flat layout is contiguous and totals 5200 at the default width") {
    Dims dm; // d = 32, vocab = 48
    CHECK(dm.e_off() == 0);
    CHECK(dm.wx_off() == 48 * 32);
    CHECK(dm.wh_off() == 48 * 32 + 32 * 32);
    CHECK(dm.bh_off() == 48 * 32 + 2 * 32 * 32);
    CHECK(dm.wo_off() == 48 * 32 + 2 * 32 * 32 + 32);
    CHECK(dm.bo_off() == 2 * 48 * 32 + 2 * 32 * 32 + 32);
    CHECK(dm.flat_size() == 5200);

    Dims thin{1, 48};
    CHECK(thin.flat_size() == 48 + 1 + 1 + 1 + 48 + 48);
}

TEST_CASE("init draws weights in [-1/sqrt(d), 1/sqrt(d)] and zeroes biases") {
    Dims dm;
    PolicyParams p = init_params(5, dm);
    REQUIRE(p.flat.size() == dm.flat_size());
    const double bound = 1.0 / std::sqrt(32.0);
    double lo = 0.0, hi = 0.0;
    auto scan = [&](std::size_t off, std::size_t n) {
        for (std::size_t i = 0; i < n; i++) {
            double v = p.flat[off + i];
            CHECK(std::abs(v) <= bound);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    };
    scan(dm.e_off(), 48 * 32);
    scan(dm.wx_off(), 32 * 32);
    scan(dm.wh_off(), 32 * 32);
    scan(dm.wo_off(), 48 * 32);
    // the draw actually fills the range
    CHECK(lo < -0.9 * bound);
    CHECK(hi > 0.9 * bound);
    for (int i = 0; i < 32; i++) CHECK(p.bh()[i] == 0.0);
    for (int r = 0; r < 48; r++) CHECK(p.bo()[r] == 0.0);

    CHECK(init_params(5, dm).flat == p.flat);
    CHECK(init_params(6, dm).flat != p.flat);
    CHECK_THROWS_AS(init_params(5, Dims{32, 47}), check_error);
}

TEST_CASE("zero parameters score every token uniformly") {
    PolicyParams p(Dims{});
    std::vector<double> logits = forward_logits(p, toks({2, 19, 24}));
    REQUIRE(logits.size() == 3 * 48);
    for (double v : logits) CHECK(v == 0.0);
    CHECK(log_softmax_at(logits.data(), 48, 7) == doctest::Approx(-std::log(48.0)).epsilon(1e-15));

    SeqLogProb lp = sequence_log_prob(p, toks({2}), toks({5, 7, 8, 1}));
    CHECK(lp.total == doctest::Approx(-4.0 * std::log(48.0)).epsilon(1e-15));
}

TEST_CASE("one-unit network matches the recurrence computed by hand") {
    Dims dm{1, 48};
    PolicyParams p(dm);
    double* e = p.flat.data() + dm.e_off();
    e[2] = 0.8;
    e[5] = -0.3;
    p.flat[dm.wx_off()] = 0.5;
    p.flat[dm.wh_off()] = 0.25;
    p.flat[dm.bh_off()] = 0.1;
    double* wo = p.flat.data() + dm.wo_off();
    double* bo = p.flat.data() + dm.bo_off();
    for (int r = 0; r < 48; r++) {
        wo[r] = 0.01 * r;
        bo[r] = -0.02 * r;
    }

    double h1 = std::tanh(0.5 * 0.8 + 0.1);
    double h2 = std::tanh(0.5 * (-0.3) + 0.1 + 0.25 * h1);
    std::vector<double> logits = forward_logits(p, toks({2, 5}));
    for (int r = 0; r < 48; r++) {
        CHECK(logits[r] == doctest::Approx(0.01 * r * h1 - 0.02 * r).epsilon(1e-15));
        CHECK(logits[48 + r] == doctest::Approx(0.01 * r * h2 - 0.02 * r).epsilon(1e-15));
    }

    // sequence log-prob of output [7] after prompt [2,5] from the same row
    double m = *std::max_element(logits.begin() + 48, logits.end());
    double z = 0.0;
    for (int r = 0; r < 48; r++) z += std::exp(logits[48 + r] - m);
    SeqLogProb lp = sequence_log_prob(p, toks({2, 5}), toks({7}));
    CHECK(lp.total == doctest::Approx(logits[48 + 7] - m - std::log(z)).epsilon(1e-14));
}

TEST_CASE("sampled log-probs equal the teacher-forced rescore bit for bit") {
    PolicyParams p = init_params(3, Dims{});
    Rng rng(17);
    SampleOptions opt;
    opt.max_len = 24;
    for (int trial = 0; trial < 10; trial++) {
        GenerationTrace tr = sample_sequence(p, toks({14, 21, 24, 27, 2}), opt, rng);
        REQUIRE(!tr.output.empty());
        SeqLogProb lp = sequence_log_prob(p, tr.prompt, tr.output);
        REQUIRE(lp.per_token.size() == tr.logprobs.size());
        for (std::size_t i = 0; i < tr.logprobs.size(); i++) CHECK(tr.logprobs[i] == lp.per_token[i]);
        CHECK(tr.total_logprob() == lp.total);
    }
}

TEST_CASE("greedy decoding ignores the rng and repeats exactly") {
    PolicyParams p = init_params(9, Dims{});
    SampleOptions opt;
    opt.greedy = true;
    opt.max_len = 32;
    Rng r1(1), r2(999);
    GenerationTrace a = sample_sequence(p, toks({15, 19, 24, 2}), opt, r1);
    GenerationTrace b = sample_sequence(p, toks({15, 19, 24, 2}), opt, r2);
    CHECK(a.output == b.output);
    CHECK(a.logprobs == b.logprobs);
    CHECK(a.term == b.term);
}

TEST_CASE("sampling from uniform logits covers the vocabulary without bias") {
    PolicyParams p(Dims{}); // all-zero parameters -> exactly uniform
    SampleOptions opt;
    opt.max_len = 1;
    Rng rng(31);
    const int n = 48000;
    std::vector<int> hist(48, 0);
    for (int i = 0; i < n; i++) {
        GenerationTrace tr = sample_sequence(p, toks({2}), opt, rng);
        REQUIRE(tr.output.size() == 1);
        hist[tr.output[0]]++;
    }
    double mean = n / 48.0;
    double sd = std::sqrt(n * (1.0 / 48.0) * (47.0 / 48.0));
    for (int t = 0; t < 48; t++) CHECK(std::abs(hist[t] - mean) < 4.0 * sd);
}

TEST_CASE("termination: argmax-stable prompt hits max_len, a loud EOS bias stops at once") {
    PolicyParams flat_p(Dims{});
    SampleOptions opt;
    opt.greedy = true;
    opt.max_len = 9;
    Rng rng(0);
    // all-equal logits: argmax ties resolve to token 0, which is not EOS
    GenerationTrace tr = sample_sequence(flat_p, toks({2}), opt, rng);
    CHECK(tr.term == TermReason::MaxLen);
    CHECK(tr.output.size() == 9);

    PolicyParams eager(Dims{});
    eager.flat[eager.dims.bo_off() + tok::EOS] = 50.0;
    GenerationTrace done = sample_sequence(eager, toks({2}), opt, rng);
    CHECK(done.term == TermReason::Eos);
    REQUIRE(done.output.size() == 1);
    CHECK(done.output[0] == tok::EOS);
    CHECK(done.logprobs[0] == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("log-prob gradient matches central finite differences") {
    PolicyParams p = init_params(23, Dims{});
    std::vector<Tok> prompt = toks({16, 19, 25, 28, 31, 2});
    std::vector<Tok> output = toks({3, 44, 4, 5, 7, 8, 6, 1});
    std::vector<double> grad = grad_log_prob(p, prompt, output);

    Rng pick(77);
    const double h = 1e-6;
    for (int probe = 0; probe < 24; probe++) {
        std::size_t i = pick.uniform_int(p.flat.size());
        PolicyParams plus = p, minus = p;
        plus.flat[i] += h;
        minus.flat[i] -= h;
        double fd = (sequence_log_prob(plus, prompt, output).total -
                     sequence_log_prob(minus, prompt, output).total) /
                    (2.0 * h);
        double denom = std::max({std::abs(fd), std::abs(grad[i]), 1e-8});
        CHECK(std::abs(fd - grad[i]) / denom < 1e-6);
    }
}

TEST_CASE("gradient for a never-emitted token is minus its summed probability") {
    PolicyParams p = init_params(41, Dims{});
    std::vector<Tok> prompt = toks({17, 19, 26, 29, 2});
    std::vector<Tok> output = toks({3, 4, 5, 7, 9, 6, 1}); // PAD never appears
    std::vector<double> grad = grad_log_prob(p, prompt, output);

    PromptCtx pc = prompt_forward(p, prompt);
    OutputScore score = output_logprobs(p, pc, output);
    double expect = 0.0;
    for (std::size_t k = 0; k < output.size(); k++) expect -= score.probs[k * 48 + tok::PAD];
    CHECK(grad[p.dims.bo_off() + tok::PAD] == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("empty output yields zero log-prob and zero gradient") {
    PolicyParams p = init_params(2, Dims{});
    SeqLogProb lp = sequence_log_prob(p, toks({14, 2}), {});
    CHECK(lp.total == 0.0);
    CHECK(lp.per_token.empty());
    std::vector<double> grad = grad_log_prob(p, toks({14, 2}), {});
    for (double g : grad) CHECK(g == 0.0);
}

TEST_CASE("interpolation is the element-wise line between two parameter sets") {
    PolicyParams a = init_params(1, Dims{});
    PolicyParams b = init_params(2, Dims{});
    CHECK(interpolate_params(a, b, 0.0).flat == a.flat);
    CHECK(interpolate_params(a, b, 1.0).flat == b.flat);
    PolicyParams mid = interpolate_params(a, b, 0.25);
    for (std::size_t i = 0; i < a.flat.size(); i++)
        CHECK(mid.flat[i] == doctest::Approx(0.75 * a.flat[i] + 0.25 * b.flat[i]).epsilon(1e-15));
    CHECK_THROWS_AS(interpolate_params(a, b, 1.5), check_error);
    PolicyParams thin(Dims{16, 48});
    CHECK_THROWS_AS(interpolate_params(a, thin, 0.5), check_error);
}

TEST_CASE("checkpoints round-trip bit for bit and reject corrupted content") {
    PolicyParams p = init_params(12, Dims{});
    p.flat[100] = 1.0 / 3.0; // a value that needs all 17 digits
    std::string text = checkpoint_to_json(p);
    PolicyParams back = checkpoint_from_json(text);
    CHECK(back.dims == p.dims);
    CHECK(back.flat == p.flat);

    nlohmann::json j = nlohmann::json::parse(text);
    j["format_version"] = 2;
    CHECK_THROWS_AS(checkpoint_from_json(j.dump()), check_error);

    j = nlohmann::json::parse(text);
    j["vocabulary"][3] = "renamed";
    CHECK_THROWS_AS(checkpoint_from_json(j.dump()), check_error);

    j = nlohmann::json::parse(text);
    j["flat_params"].erase(0);
    CHECK_THROWS_AS(checkpoint_from_json(j.dump()), check_error);

    j = nlohmann::json::parse(text);
    j["flat_params"][0] = "inf";
    CHECK_THROWS_AS(checkpoint_from_json(j.dump()), check_error);

    std::string path = "ckpt_roundtrip_tmp.json";
    save_checkpoint(p, path);
    PolicyParams loaded = load_checkpoint(path);
    CHECK(loaded.flat == p.flat);
    std::remove(path.c_str());
}

TEST_CASE("the input-projection cache changes nothing, bit for bit") {
    PolicyParams p = init_params(8, Dims{});
    InputProj proj = build_input_proj(p);

    // single steps agree for every token from a nontrivial state
    std::vector<double> h(32), a(32), b(32);
    Rng rng(4);
    for (int i = 0; i < 32; i++) h[i] = rng.uniform(-0.9, 0.9);
    for (Tok t = 0; t < 48; t++) {
        policy_step(p, nullptr, h.data(), t, a.data());
        policy_step(p, &proj, h.data(), t, b.data());
        CHECK(a == b);
    }

    // whole-sequence scoring agrees
    std::vector<Tok> prompt = toks({18, 19, 24, 27, 30, 33, 20, 2});
    std::vector<Tok> output = toks({3, 4, 5, 7, 12, 6, 1});
    PromptCtx pc_plain = prompt_forward(p, prompt);
    PromptCtx pc_cached = prompt_forward(p, prompt, &proj);
    CHECK(pc_plain.states == pc_cached.states);
    OutputScore s_plain = output_logprobs(p, pc_plain, output);
    OutputScore s_cached = output_logprobs(p, pc_cached, output, &proj);
    CHECK(s_plain.logprobs == s_cached.logprobs);

    // greedy sampling agrees
    SampleOptions opt;
    opt.greedy = true;
    Rng r1(0), r2(0);
    GenerationTrace g_plain = sample_sequence(p, prompt, opt, r1);
    GenerationTrace g_cached = sample_sequence(p, prompt, opt, r2, &proj);
    CHECK(g_plain.output == g_cached.output);
    CHECK(g_plain.logprobs == g_cached.logprobs);
}
