#include <doctest.h>

#include <set>

#include "microjudge/vocab.hpp"

using namespace mj;

TEST_CASE("vocabulary has 48 distinct symbols") {
    const auto& syms = vocab_symbols();
    REQUIRE(syms.size() == 48);
    std::set<std::string> uniq(syms.begin(), syms.end());
    CHECK(uniq.size() == 48);
}

TEST_CASE("pinned token ids") {
    CHECK(tok::PAD == 0);
    CHECK(tok::EOS == 1);
    CHECK(tok::EOP == 2);
    CHECK(tok::THINK_OPEN == 3);
    CHECK(tok::THINK_CLOSE == 4);
    CHECK(tok::BOX_OPEN == 5);
    CHECK(tok::BOX_CLOSE == 6);
    CHECK(tok::JSON_LABEL_KEY == 7);
    CHECK(tok::YES == 8);
    CHECK(tok::SECOND == 13);
    CHECK(tok::TASK_ALIGN_POINT == 14);
    CHECK(tok::TASK_SAFETY_PAIR == 18);
    CHECK(tok::SCENE == 19);
    CHECK(tok::OBJ_END == 20);
    CHECK(tok::PRESENT == 21);
    CHECK(tok::ANY == 23);
    CHECK(tok::CIRCLE == 24);
    CHECK(tok::LARGE == 31);
    CHECK(tok::HAZ == 32);
    CHECK(tok::NOISE_0 == 34);
    CHECK(tok::NOISE_5 == 39);
    CHECK(tok::noise(3) == 37);
    CHECK(tok::THINK_0 == 40);
    CHECK(tok::THINK_7 == 47);
    CHECK(tok::VOCAB_SIZE == 48);
}

TEST_CASE("label and structural predicates") {
    for (Tok t = 0; t < tok::VOCAB_SIZE; t++) {
        CHECK(tok::is_label(t) == (t >= tok::YES && t <= tok::SECOND));
        CHECK(tok::is_structural(t) == (t >= tok::THINK_OPEN && t <= tok::JSON_LABEL_KEY));
    }
}

TEST_CASE("names round-trip through ids") {
    for (Tok t = 0; t < tok::VOCAB_SIZE; t++) CHECK(symbol_id(symbol_name(t)) == t);
    CHECK(symbol_id("no-such-symbol") == -1);
}

TEST_CASE("vocab hash is stable within a process and nonempty") {
    CHECK(vocab_hash() == vocab_hash());
    CHECK(vocab_hash().size() == 64); // sha-256 hex
}
