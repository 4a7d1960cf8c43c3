#ifndef MAXPOLY_CORPUS_HPP_
#define MAXPOLY_CORPUS_HPP_

#include <algorithm>
#include <cstddef>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "maxpoly/error.hpp"
#include "maxpoly/grid.hpp"
#include "maxpoly/symbol.hpp"
#include "maxpoly/util.hpp"

namespace maxpoly {

enum class Mode { major, minor };

inline std::string to_string(Mode m) { return m == Mode::major ? "major" : "minor"; }

inline Mode mode_from_string(const std::string& s) {
    if (s == "major") return Mode::major;
    if (s == "minor") return Mode::minor;
    throw ParseError("unknown mode \"" + s + "\"");
}

/// A note in the onset-list representation. Times are in bins of the
/// piece's source resolution.
struct NoteEvent {
    int voice = 0;
    int onset = 0;
    int duration = 1;
    Symbol pitch;

    auto operator<=>(const NoteEvent&) const = default;
};

struct Piece {
    std::string id;
    Mode mode = Mode::major;
    int original_key = 0;
    ChordSequence grid;
    std::optional<int> beats_per_bar;
    // Source bins per bar for the onset-list variant.
    std::optional<int> bins_per_bar;
    std::vector<NoteEvent> events;

    bool operator==(const Piece&) const = default;
};

using Alphabet = std::vector<Symbol>;  // sorted, unique

class Corpus {
public:
    Corpus() = default;

    Corpus(std::size_t voices, std::vector<Piece> pieces) : voices_(voices), pieces_(std::move(pieces)) {
        if (voices_ == 0) throw ShapeError("corpus must have at least one voice");
        std::vector<std::set<Symbol>> seen(voices_);
        for (const auto& p : pieces_) {
            if (p.grid.voices() != voices_) {
                throw ShapeError("piece \"" + p.id + "\" has " + std::to_string(p.grid.voices()) +
                                 " voices, corpus has " + std::to_string(voices_));
            }
            if (p.grid.length() == 0) throw ShapeError("piece \"" + p.id + "\" is empty");
            for (std::size_t i = 0; i < voices_; ++i) {
                for (Symbol s : p.grid.row(i)) seen[i].insert(s);
            }
        }
        alphabets_.resize(voices_);
        for (std::size_t i = 0; i < voices_; ++i) alphabets_[i].assign(seen[i].begin(), seen[i].end());
    }

    std::size_t voices() const { return voices_; }
    const std::vector<Piece>& pieces() const { return pieces_; }
    const std::vector<Alphabet>& alphabets() const { return alphabets_; }
    const Alphabet& alphabet(std::size_t voice) const { return alphabets_.at(voice); }
    bool empty() const { return pieces_.empty(); }

    std::size_t total_length() const {
        std::size_t t = 0;
        for (const auto& p : pieces_) t += p.grid.length();
        return t;
    }

    std::vector<ChordSequence> sequences() const {
        std::vector<ChordSequence> out;
        out.reserve(pieces_.size());
        for (const auto& p : pieces_) out.push_back(p.grid);
        return out;
    }

private:
    std::size_t voices_ = 0;
    std::vector<Piece> pieces_;
    std::vector<Alphabet> alphabets_;
};

// ---------------------------------------------------------------------------
// Transposition

/// Semitone shift that brings `key` to C, chosen in [-6, +5].
inline int key_shift(int key) {
    if (key < 0 || key > 11) throw RangeError("key " + std::to_string(key) + " outside [0, 11]");
    int s = (12 - key) % 12;
    return s > 5 ? s - 12 : s;
}

inline Piece transpose_by(const Piece& piece, int shift) {
    Piece out = piece;
    for (std::size_t i = 0; i < out.grid.voices(); ++i) {
        for (Symbol& s : out.grid.row(i)) {
            auto t = s.shifted(shift);
            if (!t) throw RangeError("transposing " + s.to_string() + " by " + std::to_string(shift) + " leaves [0, 127]");
            s = *t;
        }
    }
    for (auto& e : out.events) {
        auto t = e.pitch.shifted(shift);
        if (!t) throw RangeError("transposing event pitch " + e.pitch.to_string() + " leaves [0, 127]");
        e.pitch = *t;
    }
    return out;
}

inline Piece transpose_to_c(const Piece& piece) {
    Piece out = transpose_by(piece, key_shift(piece.original_key));
    out.original_key = 0;
    return out;
}

inline Corpus transpose_to_c(const Corpus& corpus) {
    std::vector<Piece> pieces;
    pieces.reserve(corpus.pieces().size());
    for (const auto& p : corpus.pieces()) pieces.push_back(transpose_to_c(p));
    return Corpus(corpus.voices(), std::move(pieces));
}

inline std::pair<Corpus, Corpus> split_by_mode(const Corpus& corpus) {
    std::vector<Piece> major, minor;
    for (const auto& p : corpus.pieces()) (p.mode == Mode::major ? major : minor).push_back(p);
    return {Corpus(corpus.voices(), std::move(major)), Corpus(corpus.voices(), std::move(minor))};
}

inline Corpus filter_mode(const Corpus& corpus, Mode mode) {
    auto [major, minor] = split_by_mode(corpus);
    return mode == Mode::major ? major : minor;
}

// ---------------------------------------------------------------------------
// Onset-list conversions

inline std::size_t event_voice_count(const Piece& piece) {
    int n = 0;
    for (const auto& e : piece.events) n = std::max(n, e.voice + 1);
    return static_cast<std::size_t>(n);
}

inline void validate_events(const Piece& piece, std::size_t voices) {
    std::vector<std::vector<std::pair<int, int>>> spans(voices);
    for (const auto& e : piece.events) {
        if (e.voice < 0 || static_cast<std::size_t>(e.voice) >= voices) {
            throw ShapeError("piece \"" + piece.id + "\": event voice " + std::to_string(e.voice) + " out of range");
        }
        if (e.onset < 0 || e.duration < 1) {
            throw ParseError("piece \"" + piece.id + "\": event needs onset >= 0 and duration >= 1");
        }
        if (!e.pitch.is_pitch()) throw ParseError("piece \"" + piece.id + "\": event symbol must be a pitch");
        spans[static_cast<std::size_t>(e.voice)].emplace_back(e.onset, e.onset + e.duration);
    }
    for (auto& v : spans) {
        std::sort(v.begin(), v.end());
        for (std::size_t k = 1; k < v.size(); ++k) {
            if (v[k].first < v[k - 1].second) {
                throw ShapeError("piece \"" + piece.id + "\": overlapping notes in one voice");
            }
        }
    }
}

struct QuantizeOptions {
    // Emit Rest for silent beats instead of failing.
    bool rests = false;
    // Keep only notes struck exactly on the beat; notes sustained into the
    // beat from an off-beat onset leave the cell silent.
    bool onset_only = false;
    std::size_t voices = 0;  // 0: infer from events
};

/// Samples the onset list at each beat time, keeping the note sounding at
/// the beat onset.
inline Piece beat_quantize(const Piece& piece, std::span<const int> beat_grid, const QuantizeOptions& opts = {}) {
    std::size_t n = opts.voices ? opts.voices : event_voice_count(piece);
    validate_events(piece, n);
    ChordSequence grid(n, beat_grid.size(), Symbol::rest());
    for (std::size_t b = 0; b < beat_grid.size(); ++b) {
        int t = beat_grid[b];
        for (std::size_t v = 0; v < n; ++v) {
            const NoteEvent* hit = nullptr;
            for (const auto& e : piece.events) {
                if (static_cast<std::size_t>(e.voice) != v) continue;
                bool sounding = opts.onset_only ? e.onset == t : (e.onset <= t && t < e.onset + e.duration);
                if (sounding) {
                    hit = &e;
                    break;
                }
            }
            if (hit) {
                grid(v, b) = hit->pitch;
            } else if (!opts.rests) {
                throw EmptyBeatError("piece \"" + piece.id + "\": voice " + std::to_string(v) +
                                     " has no note at beat " + std::to_string(b));
            }
        }
    }
    Piece out = piece;
    out.grid = std::move(grid);
    out.events.clear();
    return out;
}

inline std::vector<int> regular_beat_grid(int span_bins, int period) {
    if (period < 1) throw ConfigError("beat period must be positive");
    std::vector<int> beats;
    for (int t = 0; t < span_bins; t += period) beats.push_back(t);
    return beats;
}

/// Encodes the onset list on a metrical grid of `bins_per_cycle` bins per
/// bar: onset -> pitch, sustain -> Hold, silence -> Rest. The grid is padded
/// with rests to a whole number of cycles.
inline Piece encode_rhythm_grid(const Piece& piece, int bins_per_cycle, std::size_t voices = 0) {
    if (bins_per_cycle < 1) throw ConfigError("bins_per_cycle must be positive");
    std::size_t n = voices ? voices : event_voice_count(piece);
    validate_events(piece, n);
    const long source = piece.bins_per_bar.value_or(bins_per_cycle);
    auto to_bins = [&](long t) {
        long scaled = t * bins_per_cycle;
        if (scaled % source != 0) {
            throw ResolutionError("piece \"" + piece.id + "\": time " + std::to_string(t) + " falls between bins");
        }
        return static_cast<std::size_t>(scaled / source);
    };
    std::size_t end = 0;
    for (const auto& e : piece.events) end = std::max(end, to_bins(e.onset + e.duration));
    std::size_t cycles = std::max<std::size_t>(1, (end + bins_per_cycle - 1) / bins_per_cycle);
    ChordSequence grid(n, cycles * static_cast<std::size_t>(bins_per_cycle), Symbol::rest());
    for (const auto& e : piece.events) {
        std::size_t on = to_bins(e.onset), off = to_bins(e.onset + e.duration);
        auto v = static_cast<std::size_t>(e.voice);
        grid(v, on) = e.pitch;
        for (std::size_t t = on + 1; t < off; ++t) grid(v, t) = Symbol::hold();
    }
    Piece out = piece;
    out.grid = std::move(grid);
    out.bins_per_bar = bins_per_cycle;
    out.events.clear();
    return out;
}

/// Inverse of encode_rhythm_grid: merges Hold runs, drops rests. A Hold
/// that follows silence stays silent.
inline std::vector<NoteEvent> decode_rhythm_grid(const ChordSequence& grid) {
    std::vector<NoteEvent> events;
    for (std::size_t v = 0; v < grid.voices(); ++v) {
        std::optional<NoteEvent> open;
        for (std::size_t t = 0; t < grid.length(); ++t) {
            Symbol s = grid(v, t);
            if (s.is_hold()) {
                if (open) ++open->duration;
                continue;
            }
            if (open) events.push_back(*open);
            open.reset();
            if (s.is_pitch()) open = NoteEvent{static_cast<int>(v), static_cast<int>(t), 1, s};
        }
        if (open) events.push_back(*open);
    }
    return events;
}

// ---------------------------------------------------------------------------
// JSON

enum class CorpusFormat { grid, events };

struct LoadOptions {
    CorpusFormat format = CorpusFormat::grid;
    // events format: encode on a metrical grid with this many bins per bar...
    int bins_per_cycle = 0;
    // ...or sample at regular beats of this period (source bins).
    int beat_period = 0;
    QuantizeOptions quantize;
};

inline Piece piece_from_json(const nlohmann::json& j, std::size_t voices, CorpusFormat format) {
    if (!j.is_object()) throw ParseError("piece must be an object");
    Piece p;
    try {
        p.id = j.at("id").get<std::string>();
        p.mode = mode_from_string(j.at("mode").get<std::string>());
        p.original_key = j.at("original_key").get<int>();
        if (p.original_key < 0 || p.original_key > 11) throw ParseError("original_key outside [0, 11]");
        if (j.contains("beats_per_bar") && !j["beats_per_bar"].is_null()) {
            p.beats_per_bar = j["beats_per_bar"].get<int>();
            if (*p.beats_per_bar < 1) throw ParseError("beats_per_bar must be positive");
        }
        if (j.contains("bins_per_bar") && !j["bins_per_bar"].is_null()) {
            p.bins_per_bar = j["bins_per_bar"].get<int>();
            if (*p.bins_per_bar < 1) throw ParseError("bins_per_bar must be positive");
        }
        if (format == CorpusFormat::grid) {
            const auto& rows_json = j.at("grid");
            if (!rows_json.is_array()) throw ParseError("grid must be an array of rows");
            std::vector<std::vector<Symbol>> rows;
            for (const auto& r : rows_json) {
                if (!r.is_array()) throw ParseError("grid row must be an array");
                std::vector<Symbol> row;
                row.reserve(r.size());
                for (const auto& c : r) row.push_back(symbol_from_json(c));
                rows.push_back(std::move(row));
            }
            if (rows.size() != voices) {
                throw ShapeError("piece \"" + p.id + "\" has " + std::to_string(rows.size()) + " rows, expected " +
                                 std::to_string(voices));
            }
            p.grid = ChordSequence::from_rows(rows);
            if (p.grid.length() == 0) throw ShapeError("piece \"" + p.id + "\" has empty rows");
        } else {
            for (const auto& e : j.at("events")) {
                if (!e.is_array() || e.size() != 4) throw ParseError("event must be [voice, onset, duration, pitch]");
                p.events.push_back(NoteEvent{e[0].get<int>(), e[1].get<int>(), e[2].get<int>(), symbol_from_json(e[3])});
            }
            validate_events(p, voices);
        }
    } catch (const nlohmann::json::exception& ex) {
        throw ParseError(std::string("malformed piece: ") + ex.what());
    }
    return p;
}

inline Corpus corpus_from_json(const nlohmann::json& j, const LoadOptions& opts = {}) {
    if (!j.is_object()) throw ParseError("corpus must be a JSON object");
    std::size_t voices = 0;
    std::vector<Piece> pieces;
    try {
        int v = j.at("voices").get<int>();
        if (v < 1) throw ShapeError("voices must be >= 1");
        voices = static_cast<std::size_t>(v);
        const auto& arr = j.at("pieces");
        if (!arr.is_array()) throw ParseError("pieces must be an array");
        for (const auto& pj : arr) {
            Piece p = piece_from_json(pj, voices, opts.format);
            if (opts.format == CorpusFormat::events) {
                if (opts.bins_per_cycle > 0) {
                    p = encode_rhythm_grid(p, opts.bins_per_cycle, voices);
                } else if (opts.beat_period > 0) {
                    int span = 0;
                    for (const auto& e : p.events) span = std::max(span, e.onset + e.duration);
                    auto q = opts.quantize;
                    q.voices = voices;
                    p = beat_quantize(p, regular_beat_grid(span, opts.beat_period), q);
                } else {
                    throw ConfigError("events format needs bins_per_cycle or beat_period");
                }
            }
            pieces.push_back(std::move(p));
        }
    } catch (const nlohmann::json::exception& ex) {
        throw ParseError(std::string("malformed corpus: ") + ex.what());
    }
    return Corpus(voices, std::move(pieces));
}

inline Corpus load_corpus(const std::string& path, const LoadOptions& opts = {}) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& ex) {
        throw ParseError(path + ": " + ex.what());
    }
    return corpus_from_json(j, opts);
}

inline nlohmann::json grid_to_json(const ChordSequence& grid) {
    auto rows = nlohmann::json::array();
    for (std::size_t i = 0; i < grid.voices(); ++i) {
        auto r = nlohmann::json::array();
        for (Symbol s : grid.row(i)) r.push_back(symbol_to_json(s));
        rows.push_back(std::move(r));
    }
    return rows;
}

inline nlohmann::json piece_to_json(const Piece& p) {
    nlohmann::json j;
    j["id"] = p.id;
    j["mode"] = to_string(p.mode);
    j["original_key"] = p.original_key;
    if (p.beats_per_bar) j["beats_per_bar"] = *p.beats_per_bar;
    if (p.bins_per_bar) j["bins_per_bar"] = *p.bins_per_bar;
    if (!p.events.empty() && p.grid.empty()) {
        auto ev = nlohmann::json::array();
        for (const auto& e : p.events) ev.push_back({e.voice, e.onset, e.duration, symbol_to_json(e.pitch)});
        j["events"] = std::move(ev);
    } else {
        j["grid"] = grid_to_json(p.grid);
    }
    return j;
}

inline nlohmann::json corpus_to_json(std::size_t voices, const std::vector<Piece>& pieces) {
    nlohmann::json j;
    j["voices"] = voices;
    j["pieces"] = nlohmann::json::array();
    for (const auto& p : pieces) j["pieces"].push_back(piece_to_json(p));
    return j;
}

inline nlohmann::json corpus_to_json(const Corpus& c) { return corpus_to_json(c.voices(), c.pieces()); }

inline std::string corpus_fingerprint(const Corpus& c) { return hex64(fnv1a64(corpus_to_json(c).dump())); }

}  // namespace maxpoly

#endif  // MAXPOLY_CORPUS_HPP_
