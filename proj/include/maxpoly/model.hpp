#ifndef MAXPOLY_MODEL_HPP_
#define MAXPOLY_MODEL_HPP_

#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "maxpoly/corpus.hpp"
#include "maxpoly/error.hpp"
#include "maxpoly/grid.hpp"
#include "maxpoly/topology.hpp"

namespace maxpoly {

/// Sparse parameters: absent keys are zero. In rhythm mode local fields
/// live in `position_fields` only.
struct ParameterVector {
    std::map<FeatureIndex, double> pairs;
    std::map<PositionFieldKey, double> position_fields;

    bool operator==(const ParameterVector&) const = default;
};

struct ModelMetadata {
    double lambda = 0.0;
    std::string corpus_fingerprint;
    std::optional<Mode> mode;
    nlohmann::json extra = nlohmann::json::object();

    bool operator==(const ModelMetadata&) const = default;
};

class Model {
public:
    Model() = default;

    Model(const Topology& topo, std::vector<double> theta, ModelMetadata meta = {})
        : layout_(std::make_shared<const ParameterLayout>(topo)), theta_(std::move(theta)), meta_(std::move(meta)) {
        if (theta_.size() != layout_->size()) {
            throw ValidationError("parameter vector has " + std::to_string(theta_.size()) + " entries, layout needs " +
                                  std::to_string(layout_->size()));
        }
        for (double v : theta_) {
            if (!std::isfinite(v)) throw ValidationError("non-finite parameter");
        }
    }

    Model(const Topology& topo, const ParameterVector& params, ModelMetadata meta = {})
        : Model(topo, std::vector<double>(ParameterLayout(topo).size(), 0.0), std::move(meta)) {
        for (const auto& [key, value] : params.pairs) {
            if (canonical_form(key.a, key.b, key.i, key.j, key.k) != key) {
                throw ValidationError("parameter key is not canonical");
            }
            auto idx = layout_->flat_index(key);
            if (!idx) throw ValidationError("parameter key outside topology scope or alphabets");
            if (!std::isfinite(value)) throw ValidationError("non-finite parameter");
            theta_[*idx] = value;
        }
        for (const auto& [key, value] : params.position_fields) {
            auto idx = layout_->flat_index(key);
            if (!idx) throw ValidationError("position field outside topology");
            if (!std::isfinite(value)) throw ValidationError("non-finite parameter");
            theta_[*idx] = value;
        }
    }

    static Model zero(const Topology& topo, ModelMetadata meta = {}) {
        return Model(topo, std::vector<double>(ParameterLayout(topo).size(), 0.0), std::move(meta));
    }

    const Topology& topology() const { return layout_->topology(); }
    const ParameterLayout& layout() const { return *layout_; }
    std::span<const double> theta() const { return theta_; }
    const ModelMetadata& metadata() const { return meta_; }

    // Non-zero parameters in sparse form.
    ParameterVector params() const {
        ParameterVector p;
        for (std::size_t f = 0; f < theta_.size(); ++f) {
            if (theta_[f] == 0.0) continue;
            if (topology().rhythm() && layout_->is_local(f)) {
                p.position_fields[layout_->position_field_at(f)] = theta_[f];
            } else {
                p.pairs[layout_->feature_at(f)] = theta_[f];
            }
        }
        return p;
    }

    double value(const FeatureIndex& f) const {
        auto idx = layout_->flat_index(f);
        return idx ? theta_[*idx] : 0.0;
    }
    double value(const PositionFieldKey& k) const {
        auto idx = layout_->flat_index(k);
        return idx ? theta_[*idx] : 0.0;
    }

    /// Sum of theta * f over every feature touching cell (voice, col) when it
    /// holds `candidate`, i.e. minus the cell's share of the energy. Pitches
    /// read from `s` (and the candidate) are shifted by `shift` semitones
    /// before lookup; symbols outside the alphabets contribute nothing.
    double local_score(const ChordSequence& s, std::size_t voice, std::size_t col, Symbol candidate,
                       int shift = 0) const {
        auto c = candidate.shifted(shift);
        int ci = c ? layout_->symbol_index(voice, *c) : -1;
        if (ci < 0) throw AlphabetError("candidate " + candidate.to_string() + " outside alphabet of voice " + std::to_string(voice));
        return local_score_index(s, voice, col, static_cast<std::size_t>(ci), shift);
    }

    double local_score_index(const ChordSequence& s, std::size_t voice, std::size_t col, std::size_t ci,
                             int shift = 0) const {
        const auto& L = *layout_;
        double score = theta_[L.local_index(voice, L.position_of(col), ci)];
        const auto len = static_cast<long>(s.length());
        for (const auto& t : L.terms(voice)) {
            long pc = static_cast<long>(col) + t.dk;
            if (pc < 0 || pc >= len) continue;
            Symbol partner = s(static_cast<std::size_t>(t.partner_voice), static_cast<std::size_t>(pc));
            int pi;
            if (shift == 0) {
                pi = L.symbol_index(static_cast<std::size_t>(t.partner_voice), partner);
            } else {
                auto ps = partner.shifted(shift);
                pi = ps ? L.symbol_index(static_cast<std::size_t>(t.partner_voice), *ps) : -1;
            }
            if (pi < 0) continue;
            score += theta_[t.start + ci * t.cand_stride + static_cast<std::size_t>(pi) * t.partner_stride];
        }
        return score;
    }

    /// E(s) = -sum theta * f(s), evaluated block by block over the dense layout.
    double energy(const ChordSequence& s) const {
        check_conforms(s);
        const auto& L = *layout_;
        const std::size_t len = s.length();
        double sum = 0.0;
        for (const auto& b : L.blocks()) {
            auto k = static_cast<std::size_t>(b.offset);
            for (std::size_t m = 0; m + k < len; ++m) {
                int a = L.symbol_index(static_cast<std::size_t>(b.first), s(static_cast<std::size_t>(b.first), m));
                int c = L.symbol_index(static_cast<std::size_t>(b.second), s(static_cast<std::size_t>(b.second), m + k));
                sum += theta_[b.start + static_cast<std::size_t>(a) * b.cols + static_cast<std::size_t>(c)];
            }
        }
        for (std::size_t i = 0; i < s.voices(); ++i) {
            for (std::size_t m = 0; m < len; ++m) {
                sum += theta_[L.local_index(i, L.position_of(m), static_cast<std::size_t>(L.symbol_index(i, s(i, m))))];
            }
        }
        return -sum;
    }

    void check_conforms(const ChordSequence& s) const {
        const auto& topo = topology();
        if (s.voices() != topo.voices) throw ShapeError("sequence voice count does not match topology");
        for (std::size_t i = 0; i < s.voices(); ++i) {
            for (Symbol x : s.row(i)) {
                if (layout_->symbol_index(i, x) < 0) {
                    throw AlphabetError("symbol " + x.to_string() + " not in alphabet of voice " + std::to_string(i));
                }
            }
        }
    }

    bool operator==(const Model& o) const {
        return topology() == o.topology() && theta_ == o.theta_ && meta_ == o.meta_;
    }

private:
    std::shared_ptr<const ParameterLayout> layout_;
    std::vector<double> theta_;
    ModelMetadata meta_;
};

// ---------------------------------------------------------------------------

/// Occurrence counts of every canonical feature in scope (plain local fields
/// as (a, a, i, i, 0)). Pairs falling off either end contribute nothing.
inline std::map<FeatureIndex, long> count_features(const ChordSequence& s, const Topology& topo) {
    std::map<FeatureIndex, long> counts;
    const int n = static_cast<int>(s.voices());
    const int len = static_cast<int>(s.length());
    for (int i = 0; i < n; ++i) {
        for (int m = 0; m < len; ++m) {
            Symbol a = s(static_cast<std::size_t>(i), static_cast<std::size_t>(m));
            ++counts[FeatureIndex{a, a, i, i, 0}];
        }
    }
    if (topo.unary_only) return counts;
    for (int k = 0; k <= topo.horizon; ++k) {
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                bool in_scope = k == 0 ? i < j : (i == j || k <= topo.cross_horizon);
                if (!in_scope) continue;
                for (int m = 0; m + k < len; ++m) {
                    Symbol a = s(static_cast<std::size_t>(i), static_cast<std::size_t>(m));
                    Symbol b = s(static_cast<std::size_t>(j), static_cast<std::size_t>(m + k));
                    ++counts[FeatureIndex{a, b, i, j, k}];
                }
            }
        }
    }
    return counts;
}

inline std::map<PositionFieldKey, long> count_position_fields(const ChordSequence& s, std::size_t positions) {
    std::map<PositionFieldKey, long> counts;
    for (std::size_t i = 0; i < s.voices(); ++i) {
        for (std::size_t m = 0; m < s.length(); ++m) {
            ++counts[PositionFieldKey{static_cast<int>(i), s(i, m), static_cast<int>(m % positions)}];
        }
    }
    return counts;
}

inline double energy(const ChordSequence& s, const Model& model) { return model.energy(s); }

/// Definitional energy: sparse dot product of parameters with feature counts.
inline double energy_from_counts(const ChordSequence& s, const Model& model) {
    const auto& topo = model.topology();
    const auto params = model.params();
    double sum = 0.0;
    for (const auto& [key, count] : count_features(s, topo)) {
        if (key.is_local_field() && topo.rhythm()) continue;
        auto it = params.pairs.find(key);
        if (it != params.pairs.end()) sum += it->second * static_cast<double>(count);
    }
    if (topo.rhythm()) {
        for (const auto& [key, count] : count_position_fields(s, topo.positions())) {
            auto it = params.position_fields.find(key);
            if (it != params.position_fields.end()) sum += it->second * static_cast<double>(count);
        }
    }
    return -sum;
}

/// P(s_ij = c | rest of s) for every c in A_i, from the K-neighbourhood only.
inline std::vector<double> conditional_distribution(const ChordSequence& s, std::size_t voice, std::size_t col,
                                                    const Model& model) {
    const auto& alpha = model.topology().alphabets.at(voice);
    std::vector<double> p(alpha.size());
    double best = -INFINITY;
    for (std::size_t c = 0; c < alpha.size(); ++c) {
        p[c] = model.local_score_index(s, voice, col, c);
        best = std::max(best, p[c]);
    }
    double z = 0.0;
    for (double& v : p) z += (v = std::exp(v - best));
    for (double& v : p) v /= z;
    return p;
}

/// Visits every sequence of length `length` over the topology alphabets.
inline void enumerate_sequences(const Topology& topo, std::size_t length,
                                const std::function<void(const ChordSequence&)>& visit) {
    const std::size_t n = topo.voices;
    ChordSequence s(n, length);
    std::vector<std::size_t> digit(n * length, 0);
    for (std::size_t c = 0; c < n * length; ++c) s(c / length, c % length) = topo.alphabets[c / length][0];
    while (true) {
        visit(s);
        std::size_t c = 0;
        for (; c < n * length; ++c) {
            const auto& alpha = topo.alphabets[c / length];
            if (++digit[c] < alpha.size()) {
                s(c / length, c % length) = alpha[digit[c]];
                break;
            }
            digit[c] = 0;
            s(c / length, c % length) = alpha[0];
        }
        if (c == n * length) return;
    }
}

inline constexpr double kEnumerationLimit = 1e7;

inline double enumeration_size(const Topology& topo, std::size_t length) {
    double count = 1.0;
    for (const auto& a : topo.alphabets) count *= std::pow(static_cast<double>(a.size()), static_cast<double>(length));
    return count;
}

/// Z(theta) = sum over all sequences of exp(-E). Desk-scale only.
inline double exact_partition_oracle(const Model& model, std::size_t length) {
    if (enumeration_size(model.topology(), length) > kEnumerationLimit) {
        throw TooLargeError("enumeration exceeds 1e7 sequences");
    }
    double z = 0.0;
    enumerate_sequences(model.topology(), length, [&](const ChordSequence& s) { z += std::exp(-model.energy(s)); });
    return z;
}

}  // namespace maxpoly

#endif  // MAXPOLY_MODEL_HPP_
