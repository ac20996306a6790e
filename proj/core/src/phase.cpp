#include "phasorflow/phase.hpp"

#include "phasorflow/errors.hpp"

namespace phasorflow {

std::optional<Phase> parse_phase(char ch) noexcept {
    switch (ch) {
        case 'a':
        case 'A':
            return Phase::a;
        case 'b':
        case 'B':
            return Phase::b;
        case 'c':
        case 'C':
            return Phase::c;
        default:
            return std::nullopt;
    }
}

Phase parse_phase_or_throw(std::string_view text) {
    if (text.size() == 1) {
        if (auto p = parse_phase(text[0])) return *p;
    }
    throw ValidationError("bad phase '" + std::string(text) + "'");
}

PhaseSet PhaseSet::parse(std::string_view text) {
    PhaseSet set;
    for (char ch : text) {
        auto p = parse_phase(ch);
        if (!p) throw ValidationError("bad phase list '" + std::string(text) + "'");
        if (set.contains(*p)) throw ValidationError("repeated phase in '" + std::string(text) + "'");
        set.insert(*p);
    }
    return set;
}

std::string PhaseSet::str() const {
    std::string out;
    for (Phase p : *this) out.push_back(to_char(p));
    return out;
}

}  // namespace phasorflow
