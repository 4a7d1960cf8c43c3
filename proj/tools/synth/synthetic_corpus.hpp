#ifndef MAXPOLY_SYNTH_SYNTHETIC_CORPUS_HPP_
#define MAXPOLY_SYNTH_SYNTHETIC_CORPUS_HPP_

// Deterministic toy corpora for tests and demos: four-voice functional
// chord progressions with voice leading, and a rhythmic onset-list corpus.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "maxpoly/corpus.hpp"
#include "maxpoly/rng.hpp"

namespace maxpoly::synth {

struct ChordSpec {
    std::vector<int> pcs;  // root first
    std::vector<std::pair<int, int>> next;  // (chord index, weight)
};

// Degree chords in C; indices: 0 I, 1 ii, 2 iii, 3 IV, 4 V, 5 V7, 6 vi, 7 vii.
inline std::vector<ChordSpec> chord_table(Mode mode) {
    std::vector<std::vector<int>> pcs = mode == Mode::major
        ? std::vector<std::vector<int>>{{0, 4, 7}, {2, 5, 9}, {4, 7, 11}, {5, 9, 0}, {7, 11, 2}, {7, 11, 2, 5}, {9, 0, 4}, {11, 2, 5}}
        : std::vector<std::vector<int>>{{0, 3, 7}, {2, 5, 8}, {3, 7, 10}, {5, 8, 0}, {7, 11, 2}, {7, 11, 2, 5}, {8, 0, 3}, {11, 2, 5}};
    std::vector<std::vector<std::pair<int, int>>> next = {
        {{3, 3}, {4, 3}, {6, 2}, {1, 2}, {2, 1}, {0, 1}},
        {{4, 4}, {5, 3}, {7, 1}},
        {{6, 3}, {3, 2}},
        {{4, 3}, {0, 2}, {1, 2}, {5, 1}},
        {{0, 5}, {6, 2}, {5, 1}},
        {{0, 5}, {6, 1}},
        {{1, 3}, {3, 3}, {4, 1}},
        {{0, 4}},
    };
    std::vector<ChordSpec> out;
    for (std::size_t k = 0; k < pcs.size(); ++k) out.push_back({pcs[k], next[k]});
    return out;
}

inline int weighted_pick(const std::vector<std::pair<int, int>>& options, Rng& rng) {
    int total = 0;
    for (auto [c, w] : options) total += w;
    auto r = static_cast<int>(rng.below(static_cast<std::uint64_t>(total)));
    for (auto [c, w] : options) {
        if (r < w) return c;
        r -= w;
    }
    return options.back().first;
}

inline int pc_of(int p) { return ((p % 12) + 12) % 12; }

using Voicing = std::array<int, 4>;  // soprano, alto, tenor, bass

inline std::vector<Voicing> voicings(const std::vector<int>& pcs, bool third_in_bass) {
    static constexpr int lo[4] = {60, 55, 48, 40};
    static constexpr int hi[4] = {79, 74, 67, 60};
    auto in_chord = [&](int p) { return std::find(pcs.begin(), pcs.end(), pc_of(p)) != pcs.end(); };
    int bass_pc = third_in_bass ? pcs[1] : pcs[0];
    std::vector<Voicing> out;
    for (int b = lo[3]; b <= hi[3]; ++b) {
        if (pc_of(b) != bass_pc) continue;
        for (int t = lo[2]; t <= hi[2]; ++t) {
            if (!in_chord(t) || t <= b) continue;
            for (int a = lo[1]; a <= hi[1]; ++a) {
                if (!in_chord(a) || a <= t || a - t > 12) continue;
                for (int s = lo[0]; s <= hi[0]; ++s) {
                    if (!in_chord(s) || s <= a || s - a > 12) continue;
                    // every chord tone present (the fifth may go in seventh chords)
                    bool complete = true;
                    for (std::size_t k = 0; k < pcs.size(); ++k) {
                        if (pcs.size() == 4 && k == 2) continue;
                        int pc = pcs[k];
                        if (pc_of(s) != pc && pc_of(a) != pc && pc_of(t) != pc && pc_of(b) != pc) complete = false;
                    }
                    // never double the leading tone
                    int leading = 0;
                    for (int p : {s, a, t, b}) leading += pc_of(p) == 11;
                    if (complete && leading <= 1) out.push_back({s, a, t, b});
                }
            }
        }
    }
    return out;
}

inline double leading_cost(const Voicing& prev, const Voicing& next) {
    double cost = 0;
    for (int v = 0; v < 4; ++v) cost += std::abs(next[static_cast<std::size_t>(v)] - prev[static_cast<std::size_t>(v)]) * (v == 3 ? 0.3 : 1.0);
    for (std::size_t u = 0; u < 4; ++u) {
        for (std::size_t w = u + 1; w < 4; ++w) {
            int i0 = pc_of(prev[u] - prev[w]), i1 = pc_of(next[u] - next[w]);
            bool moving = next[u] != prev[u];
            if (moving && i0 == i1 && (i0 == 0 || i0 == 7)) cost += 8;
        }
    }
    return cost;
}

struct ChoraleOptions {
    std::size_t pieces = 40;
    int min_phrases = 3;
    int max_phrases = 6;
    Mode mode = Mode::major;
    std::uint64_t seed = 1;
    bool random_keys = true;
    std::string id_prefix = "chorale";
};

inline std::vector<Piece> make_chorales(const ChoraleOptions& opt) {
    Rng rng(opt.seed);
    const auto table = chord_table(opt.mode);
    std::vector<Piece> out;
    for (std::size_t p = 0; p < opt.pieces; ++p) {
        int phrases = opt.min_phrases + static_cast<int>(rng.below(static_cast<std::uint64_t>(opt.max_phrases - opt.min_phrases + 1)));
        std::vector<int> chords;
        int cur = 0;
        for (int ph = 0; ph < phrases; ++ph) {
            for (int b = 0; b < 8; ++b) {
                if (ph == 0 && b == 0) {
                    cur = 0;
                } else if (b == 6) {
                    cur = rng.below(3) == 0 ? 5 : 4;
                } else if (b == 7) {
                    cur = (ph + 1 < phrases && rng.below(4) == 0) ? 6 : 0;
                } else {
                    cur = weighted_pick(table[static_cast<std::size_t>(cur)].next, rng);
                }
                chords.push_back(cur);
            }
        }
        std::vector<Voicing> line;
        Voicing prev{72, 64, 55, 48};
        for (int c : chords) {
            bool inversion = c != 0 && rng.below(5) == 0;
            auto cands = voicings(table[static_cast<std::size_t>(c)].pcs, inversion);
            if (cands.empty()) cands = voicings(table[static_cast<std::size_t>(c)].pcs, false);
            double best = std::numeric_limits<double>::infinity();
            Voicing pick = cands.front();
            for (const auto& v : cands) {
                double cost = leading_cost(prev, v) + 3.0 * rng.uniform();
                if (cost < best) {
                    best = cost;
                    pick = v;
                }
            }
            line.push_back(pick);
            prev = pick;
        }
        int key = opt.random_keys ? static_cast<int>(rng.below(12)) : 0;
        int store_shift = -key_shift(key);
        ChordSequence grid(4, line.size());
        for (std::size_t j = 0; j < line.size(); ++j) {
            for (std::size_t v = 0; v < 4; ++v) grid(v, j) = Symbol::pitch(line[j][v] + store_shift);
        }
        Piece piece;
        piece.id = opt.id_prefix + "-" + to_string(opt.mode) + "-" + std::to_string(p);
        piece.mode = opt.mode;
        piece.original_key = key;
        piece.grid = std::move(grid);
        out.push_back(std::move(piece));
    }
    return out;
}

struct RhythmOptions {
    std::size_t pieces = 30;
    int bars = 8;
    std::uint64_t seed = 7;
};

/// Three-voice onset-list pieces on a bar of 8 eighth-note bins.
inline std::vector<Piece> make_rhythmic_pieces(const RhythmOptions& opt) {
    // (onset, duration) lists per bar; a missing span is a rest.
    static const std::vector<std::vector<std::pair<int, int>>> patterns = {
        {{0, 8}},
        {{0, 4}, {4, 4}},
        {{0, 4}, {4, 2}, {6, 2}},
        {{2, 2}, {4, 4}},
        {{0, 6}, {6, 2}},
        {{0, 2}, {2, 1}, {3, 1}, {4, 4}},
        {{4, 4}},
        {{0, 2}, {2, 2}, {4, 2}, {6, 2}},
    };
    static const std::vector<std::vector<std::pair<int, int>>> voice_weights = {
        {{1, 3}, {2, 3}, {5, 2}, {7, 2}, {4, 1}},
        {{1, 3}, {3, 3}, {4, 2}, {6, 1}, {2, 1}},
        {{0, 3}, {1, 3}, {6, 2}, {4, 1}},
    };
    static const int scale[] = {0, 2, 4, 5, 7, 9, 11};
    static const int base[] = {72, 60, 48};
    Rng rng(opt.seed);
    std::vector<Piece> out;
    for (std::size_t p = 0; p < opt.pieces; ++p) {
        Piece piece;
        piece.id = "rhythm-" + std::to_string(p);
        piece.beats_per_bar = 4;
        piece.bins_per_bar = 8;
        for (int v = 0; v < 3; ++v) {
            int degree = static_cast<int>(rng.below(5));
            for (int bar = 0; bar < opt.bars; ++bar) {
                const auto& pat = patterns[static_cast<std::size_t>(weighted_pick(voice_weights[static_cast<std::size_t>(v)], rng))];
                for (auto [on, dur] : pat) {
                    int step = static_cast<int>(rng.below(5)) - 2;
                    degree = std::clamp(degree + step, -3, 9);
                    int octave = degree >= 0 ? degree / 7 : -1;
                    int pitch = base[v] + 12 * octave + scale[((degree % 7) + 7) % 7];
                    piece.events.push_back(NoteEvent{v, bar * 8 + on, dur, Symbol::pitch(pitch)});
                }
            }
        }
        out.push_back(std::move(piece));
    }
    return out;
}

}  // namespace maxpoly::synth

#endif  // MAXPOLY_SYNTH_SYNTHETIC_CORPUS_HPP_
