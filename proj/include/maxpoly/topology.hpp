#ifndef MAXPOLY_TOPOLOGY_HPP_
#define MAXPOLY_TOPOLOGY_HPP_

#include <array>
#include <cstddef>
#include <cstdlib>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "maxpoly/corpus.hpp"
#include "maxpoly/error.hpp"
#include "maxpoly/symbol.hpp"

namespace maxpoly {

/// Shape of the graphical model. Same-voice connections reach `horizon`
/// steps, cross-voice connections reach `cross_horizon` <= horizon steps
/// (vertical connections at offset 0 are always present unless unary_only).
struct Topology {
    std::size_t voices = 0;
    int horizon = 0;        // K
    int cross_horizon = 0;  // L
    std::vector<Alphabet> alphabets;
    std::optional<int> bins_per_cycle;  // rhythm extension: position-dependent local fields
    bool unary_only = false;            // local fields only (independent model)

    void validate() const {
        if (voices < 1) throw ConfigError("topology needs at least one voice");
        if (horizon < 0 || cross_horizon < 0 || cross_horizon > horizon) {
            throw ConfigError("topology requires 0 <= L <= K (K=" + std::to_string(horizon) +
                              ", L=" + std::to_string(cross_horizon) + ")");
        }
        if (alphabets.size() != voices) throw ConfigError("one alphabet per voice required");
        for (std::size_t i = 0; i < voices; ++i) {
            if (alphabets[i].empty()) throw ConfigError("alphabet of voice " + std::to_string(i) + " is empty");
            for (std::size_t k = 1; k < alphabets[i].size(); ++k) {
                if (!(alphabets[i][k - 1] < alphabets[i][k])) {
                    throw ConfigError("alphabet of voice " + std::to_string(i) + " must be sorted and unique");
                }
            }
        }
        if (bins_per_cycle && *bins_per_cycle < 1) throw ConfigError("bins_per_cycle must be positive");
    }

    bool rhythm() const { return bins_per_cycle.has_value(); }
    std::size_t positions() const { return bins_per_cycle ? static_cast<std::size_t>(*bins_per_cycle) : 1; }

    std::size_t alphabet_sum() const {
        std::size_t t = 0;
        for (const auto& a : alphabets) t += a.size();
        return t;
    }
    double mean_alphabet_size() const { return static_cast<double>(alphabet_sum()) / static_cast<double>(voices); }

    bool operator==(const Topology&) const = default;

    static Topology from_corpus(const Corpus& corpus, int horizon, int cross_horizon,
                                std::optional<int> bins_per_cycle = std::nullopt) {
        Topology t;
        t.voices = corpus.voices();
        t.horizon = horizon;
        t.cross_horizon = cross_horizon;
        t.alphabets = corpus.alphabets();
        t.bins_per_cycle = bins_per_cycle;
        t.validate();
        return t;
    }
};

/// Canonical key (a, b, i, j, k) of the pair feature counting positions m
/// with s[i][m] = a and s[j][m + k] = b. Canonical means k > 0, or k = 0
/// with i < j, or a local field (k = 0, i = j, a = b).
struct FeatureIndex {
    Symbol a;
    Symbol b;
    int i = 0;
    int j = 0;
    int k = 0;

    bool is_local_field() const { return k == 0 && i == j; }
    auto operator<=>(const FeatureIndex&) const = default;
};

/// Representative of {(a,b,i,j,k), (b,a,j,i,-k)} without any scope check.
inline FeatureIndex canonical_form(Symbol a, Symbol b, int i, int j, int k) {
    if (k < 0 || (k == 0 && i > j)) return FeatureIndex{b, a, j, i, -k};
    return FeatureIndex{a, b, i, j, k};
}

inline bool alphabet_contains(const Alphabet& alpha, Symbol s) {
    return std::binary_search(alpha.begin(), alpha.end(), s);
}

inline FeatureIndex canonicalize(const Topology& topo, Symbol a, Symbol b, int i, int j, int k) {
    const int n = static_cast<int>(topo.voices);
    if (i < 0 || i >= n || j < 0 || j >= n) throw ScopeError("voice index out of range");
    if (std::abs(k) > topo.horizon) throw ScopeError("offset " + std::to_string(k) + " exceeds K");
    if (i != j && std::abs(k) > topo.cross_horizon) throw ScopeError("cross-voice offset " + std::to_string(k) + " exceeds L");
    if (k == 0 && i == j && a != b) throw ZeroFeatureError("(k=0, i=j, a!=b) is identically zero");
    if (topo.unary_only && !(k == 0 && i == j)) throw ScopeError("unary-only topology has no pair features");
    if (!alphabet_contains(topo.alphabets[static_cast<std::size_t>(i)], a) ||
        !alphabet_contains(topo.alphabets[static_cast<std::size_t>(j)], b)) {
        throw AlphabetError("feature symbol outside voice alphabet");
    }
    return canonical_form(a, b, i, j, k);
}

/// Position-dependent local field of the rhythm extension.
struct PositionFieldKey {
    int voice = 0;
    Symbol symbol;
    int position = 0;
    auto operator<=>(const PositionFieldKey&) const = default;
};

/// Dense layout of every canonical parameter of a topology. Pair blocks
/// are |A_first| x |A_second| row-major matrices; local fields follow,
/// one copy per metrical position in rhythm mode.
class ParameterLayout {
public:
    struct Block {
        int first = 0;
        int second = 0;
        int offset = 0;  // k
        std::size_t start = 0;
        std::size_t rows = 0;
        std::size_t cols = 0;
    };

    // A connection seen from one voice: the partner lives `dk` columns
    // away; parameter index = start + candidate * cand_stride + partner * partner_stride.
    struct Term {
        int partner_voice = 0;
        int dk = 0;
        std::size_t start = 0;
        std::size_t cand_stride = 0;
        std::size_t partner_stride = 0;
    };

    ParameterLayout() = default;

    explicit ParameterLayout(const Topology& topo) : topo_(topo) {
        topo_.validate();
        const int n = static_cast<int>(topo_.voices);
        std::size_t cursor = 0;
        if (!topo_.unary_only) {
            for (int k = 0; k <= topo_.horizon; ++k) {
                for (int i = 0; i < n; ++i) {
                    for (int j = 0; j < n; ++j) {
                        bool in_scope = k == 0 ? i < j : (i == j || k <= topo_.cross_horizon);
                        if (!in_scope) continue;
                        Block b{i, j, k, cursor, alpha(i).size(), alpha(j).size()};
                        block_index_[{i, j, k}] = blocks_.size();
                        blocks_.push_back(b);
                        cursor += b.rows * b.cols;
                    }
                }
            }
        }
        pair_count_ = cursor;
        local_start_.resize(topo_.voices);
        for (std::size_t i = 0; i < topo_.voices; ++i) {
            local_start_[i] = cursor;
            cursor += topo_.positions() * alpha(static_cast<int>(i)).size();
        }
        size_ = cursor;

        terms_.resize(topo_.voices);
        for (const auto& b : blocks_) {
            terms_[static_cast<std::size_t>(b.first)].push_back(Term{b.second, b.offset, b.start, b.cols, 1});
            terms_[static_cast<std::size_t>(b.second)].push_back(Term{b.first, -b.offset, b.start, 1, b.cols});
        }

        lookup_.resize(topo_.voices);
        for (std::size_t i = 0; i < topo_.voices; ++i) {
            lookup_[i].fill(-1);
            for (std::size_t a = 0; a < topo_.alphabets[i].size(); ++a) {
                lookup_[i][static_cast<std::size_t>(topo_.alphabets[i][a].code())] = static_cast<int>(a);
            }
        }
    }

    const Topology& topology() const { return topo_; }
    std::size_t size() const { return size_; }
    std::size_t pair_count() const { return pair_count_; }
    const std::vector<Block>& blocks() const { return blocks_; }
    const std::vector<Term>& terms(std::size_t voice) const { return terms_[voice]; }

    // Alphabet position of `s` in voice `voice`, or -1.
    int symbol_index(std::size_t voice, Symbol s) const { return lookup_[voice][static_cast<std::size_t>(s.code())]; }

    std::size_t position_of(std::size_t col) const { return col % topo_.positions(); }

    std::size_t local_index(std::size_t voice, std::size_t position, std::size_t symbol_idx) const {
        return local_start_[voice] + position * topo_.alphabets[voice].size() + symbol_idx;
    }
    std::size_t local_start(std::size_t voice, std::size_t position) const {
        return local_start_[voice] + position * topo_.alphabets[voice].size();
    }
    bool is_local(std::size_t flat) const { return flat >= pair_count_; }

    std::optional<std::size_t> block_of(int i, int j, int k) const {
        auto it = block_index_.find({i, j, k});
        if (it == block_index_.end()) return std::nullopt;
        return it->second;
    }

    // Flat index of a canonical pair feature or plain local field.
    std::optional<std::size_t> flat_index(const FeatureIndex& f) const {
        auto ia = static_cast<std::size_t>(f.i), jb = static_cast<std::size_t>(f.j);
        if (f.i < 0 || f.j < 0 || ia >= topo_.voices || jb >= topo_.voices) return std::nullopt;
        int a = symbol_index(ia, f.a), b = symbol_index(jb, f.b);
        if (a < 0 || b < 0) return std::nullopt;
        if (f.is_local_field()) {
            if (topo_.rhythm() || f.a != f.b) return std::nullopt;
            return local_index(ia, 0, static_cast<std::size_t>(a));
        }
        auto blk = block_of(f.i, f.j, f.k);
        if (!blk) return std::nullopt;
        const Block& bl = blocks_[*blk];
        return bl.start + static_cast<std::size_t>(a) * bl.cols + static_cast<std::size_t>(b);
    }

    std::optional<std::size_t> flat_index(const PositionFieldKey& p) const {
        if (!topo_.rhythm() || p.voice < 0 || static_cast<std::size_t>(p.voice) >= topo_.voices) return std::nullopt;
        if (p.position < 0 || static_cast<std::size_t>(p.position) >= topo_.positions()) return std::nullopt;
        int a = symbol_index(static_cast<std::size_t>(p.voice), p.symbol);
        if (a < 0) return std::nullopt;
        return local_index(static_cast<std::size_t>(p.voice), static_cast<std::size_t>(p.position), static_cast<std::size_t>(a));
    }

    // Inverse of flat_index for pair features and plain local fields.
    FeatureIndex feature_at(std::size_t flat) const {
        if (flat < pair_count_) {
            auto it = std::upper_bound(blocks_.begin(), blocks_.end(), flat,
                                       [](std::size_t f, const Block& b) { return f < b.start; });
            const Block& b = *std::prev(it);
            std::size_t rel = flat - b.start;
            return FeatureIndex{alpha(b.first)[rel / b.cols], alpha(b.second)[rel % b.cols], b.first, b.second, b.offset};
        }
        auto key = position_field_at(flat);
        return FeatureIndex{key.symbol, key.symbol, key.voice, key.voice, 0};
    }

    PositionFieldKey position_field_at(std::size_t flat) const {
        std::size_t v = topo_.voices - 1;
        while (local_start_[v] > flat) --v;
        std::size_t rel = flat - local_start_[v];
        std::size_t asz = topo_.alphabets[v].size();
        return PositionFieldKey{static_cast<int>(v), topo_.alphabets[v][rel % asz], static_cast<int>(rel / asz)};
    }

private:
    const Alphabet& alpha(int voice) const { return topo_.alphabets[static_cast<std::size_t>(voice)]; }

    Topology topo_;
    std::vector<Block> blocks_;
    std::map<std::tuple<int, int, int>, std::size_t> block_index_;
    std::vector<std::size_t> local_start_;
    std::vector<std::vector<Term>> terms_;
    std::vector<std::array<int, Symbol::kCodeCount>> lookup_;
    std::size_t pair_count_ = 0;
    std::size_t size_ = 0;
};

}  // namespace maxpoly

#endif  // MAXPOLY_TOPOLOGY_HPP_
