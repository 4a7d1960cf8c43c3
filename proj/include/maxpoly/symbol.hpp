#ifndef MAXPOLY_SYMBOL_HPP_
#define MAXPOLY_SYMBOL_HPP_

#include <compare>
#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "maxpoly/error.hpp"

namespace maxpoly {

/// One grid cell: a MIDI pitch 0..127, a rest, or a hold (continuation of
/// the previous note). Ordered pitches first, then Rest, then Hold.
class Symbol {
public:
    static constexpr int kRestCode = 128;
    static constexpr int kHoldCode = 129;
    static constexpr int kCodeCount = 130;

    constexpr Symbol() = default;

    static Symbol pitch(int midi) {
        if (midi < 0 || midi > 127) {
            throw RangeError("pitch " + std::to_string(midi) + " outside [0, 127]");
        }
        return Symbol(static_cast<std::int16_t>(midi));
    }
    static constexpr Symbol rest() { return Symbol(kRestCode); }
    static constexpr Symbol hold() { return Symbol(kHoldCode); }
    static Symbol from_code(int code) {
        if (code < 0 || code >= kCodeCount) {
            throw RangeError("symbol code " + std::to_string(code) + " invalid");
        }
        return Symbol(static_cast<std::int16_t>(code));
    }

    constexpr bool is_pitch() const { return code_ < kRestCode; }
    constexpr bool is_rest() const { return code_ == kRestCode; }
    constexpr bool is_hold() const { return code_ == kHoldCode; }
    constexpr int code() const { return code_; }
    constexpr int midi() const { return code_; }

    // Pitch shifted by `semitones`; Rest/Hold pass through. Empty when the
    // shifted pitch leaves [0, 127].
    constexpr std::optional<Symbol> shifted(int semitones) const {
        if (!is_pitch() || semitones == 0) return *this;
        int p = code_ + semitones;
        if (p < 0 || p > 127) return std::nullopt;
        return Symbol(static_cast<std::int16_t>(p));
    }

    std::string to_string() const {
        if (is_rest()) return "R";
        if (is_hold()) return "H";
        return std::to_string(code_);
    }

    constexpr auto operator<=>(const Symbol&) const = default;

private:
    constexpr explicit Symbol(std::int16_t code) : code_(code) {}
    std::int16_t code_ = 0;
};

// Corpus cell encoding: integer pitch, "R" or "H".
inline nlohmann::json symbol_to_json(Symbol s) {
    if (s.is_rest()) return "R";
    if (s.is_hold()) return "H";
    return s.midi();
}

inline Symbol symbol_from_json(const nlohmann::json& j) {
    if (j.is_number_integer()) {
        auto v = j.get<long long>();
        if (v < 0 || v > 127) throw ParseError("cell pitch " + std::to_string(v) + " outside [0, 127]");
        return Symbol::pitch(static_cast<int>(v));
    }
    if (j.is_string()) {
        const auto& s = j.get_ref<const std::string&>();
        if (s == "R") return Symbol::rest();
        if (s == "H") return Symbol::hold();
    }
    throw ParseError("invalid cell " + j.dump());
}

}  // namespace maxpoly

template <>
struct std::hash<maxpoly::Symbol> {
    std::size_t operator()(const maxpoly::Symbol& s) const noexcept {
        return std::hash<int>{}(s.code());
    }
};

#endif  // MAXPOLY_SYMBOL_HPP_
