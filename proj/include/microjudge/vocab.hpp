#pragma once
// fixed 48-symbol vocabulary. ids are compile-time constants because the
// encoder, the output grammar and the policy all share them; the symbol list
// still travels inside every checkpoint so loads can verify compatibility.

#include <cstdint>
#include <string>
#include <vector>

namespace mj {

using Tok = int; // token id, always in [0, vocab_size)

namespace tok {
// control
constexpr Tok PAD = 0;
constexpr Tok EOS = 1;
constexpr Tok EOP = 2; // end of prompt
// output grammar structure
constexpr Tok THINK_OPEN = 3;
constexpr Tok THINK_CLOSE = 4;
constexpr Tok BOX_OPEN = 5;
constexpr Tok BOX_CLOSE = 6;
constexpr Tok JSON_LABEL_KEY = 7;
// verdict labels
constexpr Tok YES = 8;
constexpr Tok NO = 9;
constexpr Tok SAFE = 10;
constexpr Tok UNSAFE = 11;
constexpr Tok FIRST = 12;
constexpr Tok SECOND = 13;
// task tags
constexpr Tok TASK_ALIGN_POINT = 14;
constexpr Tok TASK_SAFETY_POINT = 15;
constexpr Tok TASK_QUALITY_POINT = 16;
constexpr Tok TASK_ALIGN_PAIR = 17;
constexpr Tok TASK_SAFETY_PAIR = 18;
// scene structure
constexpr Tok SCENE = 19;
constexpr Tok OBJ_END = 20;
// claim
constexpr Tok PRESENT = 21;
constexpr Tok ABSENT = 22;
constexpr Tok ANY = 23;
// object attributes
constexpr Tok CIRCLE = 24;
constexpr Tok SQUARE = 25;
constexpr Tok TRIANGLE = 26;
constexpr Tok RED = 27;
constexpr Tok GREEN = 28;
constexpr Tok BLUE = 29;
constexpr Tok SMALL = 30;
constexpr Tok LARGE = 31;
constexpr Tok HAZ = 32;
constexpr Tok NOHAZ = 33;
// noise level 0..5
constexpr Tok NOISE_0 = 34;
constexpr Tok NOISE_5 = 39;
// free-form thinking tokens
constexpr Tok THINK_0 = 40;
constexpr Tok THINK_7 = 47;

constexpr int VOCAB_SIZE = 48;

constexpr Tok noise(int level) { return NOISE_0 + level; }
constexpr bool is_label(Tok t) { return t >= YES && t <= SECOND; }
constexpr bool is_structural(Tok t) { return t >= THINK_OPEN && t <= JSON_LABEL_KEY; }
} // namespace tok

// symbol names in id order, e.g. for checkpoints and debug dumps
const std::vector<std::string>& vocab_symbols();
// hash over the joined symbol list; checkpoints must match it to load
std::string vocab_hash();
const std::string& symbol_name(Tok t);
// returns -1 when the name is unknown
Tok symbol_id(const std::string& name);

} // namespace mj
