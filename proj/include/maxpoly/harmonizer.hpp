#ifndef MAXPOLY_HARMONIZER_HPP_
#define MAXPOLY_HARMONIZER_HPP_

#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "maxpoly/corpus.hpp"
#include "maxpoly/evaluator.hpp"
#include "maxpoly/model.hpp"
#include "maxpoly/sampler.hpp"

namespace maxpoly {

struct Key {
    int tonic = 0;  // pitch class
    Mode mode = Mode::major;
    auto operator<=>(const Key&) const = default;
};

using KeyTrack = std::vector<Key>;

inline std::string to_string(const Key& k) {
    static constexpr const char* kNames[] = {"C", "C#", "D", "Eb", "E", "F", "F#", "G", "Ab", "A", "Bb", "B"};
    return std::string(kNames[k.tonic]) + " " + to_string(k.mode);
}

inline nlohmann::json keytrack_to_json(const KeyTrack& track) {
    auto j = nlohmann::json::array();
    for (std::size_t b = 0; b < track.size(); ++b) j.push_back({b, track[b].tonic, to_string(track[b].mode)});
    return j;
}

inline KeyTrack keytrack_from_json(const nlohmann::json& j) {
    KeyTrack t;
    try {
        if (!j.is_array()) throw ParseError("key track must be an array");
        for (const auto& e : j) {
            if (!e.is_array() || e.size() != 3) throw ParseError("key track entry must be [beat, keypc, mode]");
            auto beat = e[0].get<std::size_t>();
            if (beat != t.size()) throw ParseError("key track beats must be consecutive from 0");
            int pc = e[1].get<int>();
            if (pc < 0 || pc > 11) throw ParseError("key pitch class outside [0, 11]");
            t.push_back(Key{pc, mode_from_string(e[2].get<std::string>())});
        }
    } catch (const nlohmann::json::exception& ex) {
        throw ParseError(std::string("malformed key track: ") + ex.what());
    }
    return t;
}

// Krumhansl-Kessler key profiles, tonic first.
inline constexpr std::array<double, 12> kMajorProfile = {6.35, 2.23, 3.48, 2.33, 4.38, 4.09,
                                                         2.52, 5.19, 2.39, 3.66, 2.29, 2.88};
inline constexpr std::array<double, 12> kMinorProfile = {6.33, 2.68, 3.52, 5.38, 2.60, 3.53,
                                                         2.54, 4.75, 3.98, 2.69, 3.34, 3.17};

struct KeyDetectorOptions {
    int window = 8;      // beats [j - window/2, j + window/2)
    int hysteresis = 4;  // consecutive winning windows needed to change key
};

/// Correlation of a pitch-class histogram with every key profile; index
/// mode * 12 + tonic (major first). Empty histograms yield nullopt.
inline std::optional<std::array<double, 24>> key_scores(const std::array<double, 12>& histogram) {
    double total = 0;
    for (double h : histogram) total += h;
    if (total == 0) return std::nullopt;
    std::array<double, 24> out{};
    for (int m = 0; m < 2; ++m) {
        const auto& prof = m == 0 ? kMajorProfile : kMinorProfile;
        for (int tonic = 0; tonic < 12; ++tonic) {
            std::vector<double> x(12), y(12);
            for (int pc = 0; pc < 12; ++pc) {
                x[static_cast<std::size_t>(pc)] = histogram[static_cast<std::size_t>(pc)];
                y[static_cast<std::size_t>(pc)] = prof[static_cast<std::size_t>((pc - tonic + 12) % 12)];
            }
            double r = pearson(x, y);
            out[static_cast<std::size_t>(m * 12 + tonic)] = std::isnan(r) ? -1.0 : r;
        }
    }
    return out;
}

namespace detail {

inline Key key_of_index(std::size_t idx) { return Key{static_cast<int>(idx % 12), idx < 12 ? Mode::major : Mode::minor}; }
inline std::size_t index_of_key(const Key& k) { return static_cast<std::size_t>((k.mode == Mode::major ? 0 : 12) + k.tonic); }

// Highest-scoring key; the incumbent wins ties.
inline Key best_key(const std::array<double, 24>& scores, const Key& incumbent) {
    std::size_t best = index_of_key(incumbent);
    for (std::size_t k = 0; k < 24; ++k) {
        if (scores[k] > scores[best] + 1e-12) best = k;
    }
    return key_of_index(best);
}

inline std::array<double, 12> histogram(std::span<const Symbol> melody, std::size_t lo, std::size_t hi) {
    std::array<double, 12> h{};
    for (std::size_t j = lo; j < hi; ++j) {
        if (melody[j].is_pitch()) h[static_cast<std::size_t>(melody[j].midi() % 12)] += 1.0;
    }
    return h;
}

}  // namespace detail

/// Sliding-window profile-correlation key finder with hysteresis. The track
/// starts in the best key of the whole melody; a new key takes over after
/// winning `hysteresis` consecutive windows, from the first of them on.
inline KeyTrack detect_keys(std::span<const Symbol> melody, const KeyDetectorOptions& opt = {}) {
    const std::size_t len = melody.size();
    KeyTrack track(len);
    if (len == 0) return track;
    Key incumbent{0, Mode::major};
    if (auto global = key_scores(detail::histogram(melody, 0, len))) incumbent = detail::best_key(*global, incumbent);

    const long half = opt.window / 2;
    Key challenger = incumbent;
    std::size_t streak_start = 0;
    int streak = 0;
    for (std::size_t j = 0; j < len; ++j) {
        auto lo = static_cast<std::size_t>(std::max(0L, static_cast<long>(j) - half));
        auto hi = static_cast<std::size_t>(std::min(static_cast<long>(len), static_cast<long>(j) + (opt.window - half)));
        Key cand = incumbent;
        if (auto s = key_scores(detail::histogram(melody, lo, hi))) cand = detail::best_key(*s, incumbent);
        if (cand == incumbent) {
            streak = 0;
        } else {
            if (streak > 0 && challenger == cand) {
                ++streak;
            } else {
                challenger = cand;
                streak_start = j;
                streak = 1;
            }
            if (streak >= opt.hysteresis) {
                incumbent = cand;
                for (std::size_t t = streak_start; t < j; ++t) track[t] = incumbent;
                streak = 0;
            }
        }
        track[j] = incumbent;
    }
    return track;
}

struct HarmonizationRequest {
    std::vector<Symbol> melody;
    std::size_t melody_voice = 0;
    ConstraintSet constraints;  // extra pins/ranges in concert pitch
    std::optional<KeyTrack> keys;
    SamplerConfig sampler;
};

struct Harmonization {
    ChordSequence sequence;
    KeyTrack keys;
    SampleResult chain;
};

/// Scores a move at beat j with the model of that beat's mode after
/// transposing the neighbourhood from the beat's key into C.
struct GluedLogRatio {
    std::vector<const Model*> models;  // per beat
    std::vector<int> shifts;           // per beat, concert -> C

    double operator()(const ChordSequence& s, std::size_t voice, std::size_t col, Symbol cand) const {
        Symbol cur = s(voice, col);
        if (cur == cand) return 0.0;
        const Model& m = *models[col];
        return m.local_score(s, voice, col, cand, shifts[col]) - m.local_score(s, voice, col, cur, shifts[col]);
    }
};

inline Harmonization reharmonize(const HarmonizationRequest& req, const std::map<Mode, Model>& models) {
    const std::size_t len = req.melody.size();
    if (len == 0) throw ConfigError("melody is empty");
    if (models.empty()) throw MissingModelError("no trained model supplied");
    const std::size_t n = models.begin()->second.topology().voices;
    for (const auto& [mode, m] : models) {
        if (m.topology().voices != n) throw ConfigError("models disagree on voice count");
    }
    if (req.melody_voice >= n) throw ConfigError("melody voice out of range");

    KeyTrack keys = req.keys ? *req.keys : detect_keys(req.melody);
    if (keys.size() != len) throw ConfigError("key track length differs from melody length");

    GluedLogRatio ratio;
    for (const auto& k : keys) {
        auto it = models.find(k.mode);
        if (it == models.end()) throw MissingModelError("no model trained for " + to_string(k.mode) + " mode");
        ratio.models.push_back(&it->second);
        ratio.shifts.push_back(key_shift(k.tonic));
    }

    ChainSpace space{n, len, {}, {}};
    space.allowed.resize(n * len);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < len; ++j) {
            auto& slot = space.allowed[i * len + j];
            for (Symbol a : ratio.models[j]->topology().alphabets[i]) {
                if (auto c = a.shifted(-ratio.shifts[j])) slot.push_back(*c);
            }
        }
    }
    auto allowed_contains = [&](std::size_t i, std::size_t j, Symbol s) {
        const auto& slot = space.allowed[i * len + j];
        return std::find(slot.begin(), slot.end(), s) != slot.end();
    };

    std::map<Cell, Symbol> pins;
    for (std::size_t j = 0; j < len; ++j) {
        if (!allowed_contains(req.melody_voice, j, req.melody[j])) {
            throw AlphabetError("melody note " + req.melody[j].to_string() + " at beat " + std::to_string(j) +
                                " is outside the voice alphabet in " + to_string(keys[j]));
        }
        pins[{req.melody_voice, j}] = req.melody[j];
    }
    for (const auto& [cell, sym] : req.constraints.pins) {
        if (cell.first >= n || cell.second >= len) throw ConstraintError("pin outside the grid");
        if (pins.count(cell) && pins[cell] != sym) throw ConstraintError("pin conflicts with the melody");
        if (!allowed_contains(cell.first, cell.second, sym)) {
            throw AlphabetError("pinned note " + sym.to_string() + " outside the alphabet of voice " + std::to_string(cell.first));
        }
        pins[cell] = sym;
    }
    std::map<Cell, std::vector<Symbol>> ranges;
    for (const auto& [cell, set] : req.constraints.ranges) {
        if (cell.first >= n || cell.second >= len) throw ConstraintError("range outside the grid");
        if (pins.count(cell)) throw ConstraintError("cell is both pinned and range-constrained");
        if (set.empty()) throw ConstraintError("empty pitch range");
        for (Symbol s : set) {
            if (!allowed_contains(cell.first, cell.second, s)) {
                throw AlphabetError("range note " + s.to_string() + " outside the alphabet of voice " + std::to_string(cell.first));
            }
        }
        ranges[cell] = set;
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < len; ++j) {
            auto& slot = space.allowed[i * len + j];
            if (auto p = pins.find({i, j}); p != pins.end()) {
                slot = {p->second};
                continue;
            }
            if (auto r = ranges.find({i, j}); r != ranges.end()) {
                std::vector<Symbol> kept;
                for (Symbol s : slot) {
                    if (std::find(r->second.begin(), r->second.end(), s) != r->second.end()) kept.push_back(s);
                }
                slot = std::move(kept);
            }
            space.free_cells.push_back(i * len + j);
        }
    }

    auto sched = resolve_schedule(req.sampler, ratio.models.front()->topology(), len);
    Harmonization out;
    out.chain = run_chain(space, ratio, sched, req.sampler.seed, req.sampler.record_trajectory);
    out.sequence = out.chain.sequence;
    out.keys = std::move(keys);
    return out;
}

}  // namespace maxpoly

#endif  // MAXPOLY_HARMONIZER_HPP_
