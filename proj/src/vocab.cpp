#include "microjudge/vocab.hpp"

#include <unordered_map>

#include "microjudge/util.hpp"

namespace mj {

const std::vector<std::string>& vocab_symbols() {
    static const std::vector<std::string> syms = {
        "PAD", "EOS", "EOP",
        "THINK_OPEN", "THINK_CLOSE", "BOX_OPEN", "BOX_CLOSE", "JSON_LABEL_KEY",
        "YES", "NO", "SAFE", "UNSAFE", "FIRST", "SECOND",
        "TASK_ALIGN_POINT", "TASK_SAFETY_POINT", "TASK_QUALITY_POINT",
        "TASK_ALIGN_PAIR", "TASK_SAFETY_PAIR",
        "SCENE", "OBJ_END",
        "PRESENT", "ABSENT", "ANY",
        "CIRCLE", "SQUARE", "TRIANGLE",
        "RED", "GREEN", "BLUE",
        "SMALL", "LARGE",
        "HAZ", "NOHAZ",
        "NOISE_0", "NOISE_1", "NOISE_2", "NOISE_3", "NOISE_4", "NOISE_5",
        "THINK_0", "THINK_1", "THINK_2", "THINK_3", "THINK_4", "THINK_5",
        "THINK_6", "THINK_7",
    };
    return syms;
}

std::string vocab_hash() {
    static const std::string h = [] {
        std::string joined;
        for (const auto& s : vocab_symbols()) {
            joined += s;
            joined += '\n';
        }
        return sha256_hex(joined);
    }();
    return h;
}

const std::string& symbol_name(Tok t) {
    const auto& syms = vocab_symbols();
    require(t >= 0 && t < (Tok)syms.size(), "symbol_name: token id out of range");
    return syms[(std::size_t)t];
}

Tok symbol_id(const std::string& name) {
    static const std::unordered_map<std::string, Tok> index = [] {
        std::unordered_map<std::string, Tok> m;
        const auto& syms = vocab_symbols();
        for (std::size_t i = 0; i < syms.size(); i++) m[syms[i]] = (Tok)i;
        return m;
    }();
    auto it = index.find(name);
    return it == index.end() ? -1 : it->second;
}

} // namespace mj
