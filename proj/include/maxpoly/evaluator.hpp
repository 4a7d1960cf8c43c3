#ifndef MAXPOLY_EVALUATOR_HPP_
#define MAXPOLY_EVALUATOR_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "maxpoly/corpus.hpp"
#include "maxpoly/model.hpp"
#include "maxpoly/trainer.hpp"
#include "maxpoly/util.hpp"

namespace maxpoly {

// ---------------------------------------------------------------------------
// Pair statistics

/// Feature counts divided by the number of positions where the pair fits
/// (sum over sequences of l - k); local fields divide by sum of l.
inline std::map<FeatureIndex, double> normalized_pair_frequencies(const std::vector<ChordSequence>& seqs,
                                                                  const Topology& topo) {
    std::map<FeatureIndex, long> counts;
    std::map<int, long> slots;  // by offset k
    for (const auto& s : seqs) {
        for (const auto& [f, c] : count_features(s, topo)) counts[f] += c;
        for (int k = 0; k <= topo.horizon; ++k) {
            slots[k] += std::max(0L, static_cast<long>(s.length()) - k);
        }
    }
    std::map<FeatureIndex, double> freq;
    for (const auto& [f, c] : counts) freq[f] = static_cast<double>(c) / static_cast<double>(slots[f.k]);
    return freq;
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n) return std::numeric_limits<double>::quiet_NaN();
    if (x == y) return 1.0;
    double mx = 0, my = 0;
    for (std::size_t k = 0; k < n; ++k) {
        mx += x[k];
        my += y[k];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t k = 0; k < n; ++k) {
        sxy += (x[k] - mx) * (y[k] - my);
        sxx += (x[k] - mx) * (x[k] - mx);
        syy += (y[k] - my) * (y[k] - my);
    }
    if (sxx == 0 || syy == 0) return std::numeric_limits<double>::quiet_NaN();
    return sxy / std::sqrt(sxx * syy);
}

struct PairStatRow {
    FeatureIndex key;
    double freq_generated = 0.0;
    double freq_corpus = 0.0;
};

struct PairStatistics {
    std::vector<PairStatRow> rows;
    std::map<std::tuple<int, int, int>, double> group_correlation;  // (i, j, k)
    double overall_correlation = 0.0;

    // Correlation restricted to features whose corpus frequency exceeds `min_corpus_freq`.
    double correlation_above(double min_corpus_freq) const {
        std::vector<double> g, c;
        for (const auto& r : rows) {
            if (r.freq_corpus > min_corpus_freq) {
                g.push_back(r.freq_generated);
                c.push_back(r.freq_corpus);
            }
        }
        return pearson(g, c);
    }
};

inline PairStatistics pair_statistics_table(const std::vector<ChordSequence>& generated,
                                            const std::vector<ChordSequence>& corpus, const Topology& topo) {
    auto fg = normalized_pair_frequencies(generated, topo);
    auto fc = normalized_pair_frequencies(corpus, topo);
    std::set<FeatureIndex> keys;
    for (const auto& [f, v] : fg) keys.insert(f);
    for (const auto& [f, v] : fc) keys.insert(f);
    PairStatistics out;
    std::map<std::tuple<int, int, int>, std::pair<std::vector<double>, std::vector<double>>> groups;
    std::vector<double> all_g, all_c;
    for (const auto& f : keys) {
        PairStatRow row{f, fg.count(f) ? fg[f] : 0.0, fc.count(f) ? fc[f] : 0.0};
        out.rows.push_back(row);
        auto& grp = groups[{f.i, f.j, f.k}];
        grp.first.push_back(row.freq_generated);
        grp.second.push_back(row.freq_corpus);
        all_g.push_back(row.freq_generated);
        all_c.push_back(row.freq_corpus);
    }
    for (const auto& [key, xy] : groups) out.group_correlation[key] = pearson(xy.first, xy.second);
    out.overall_correlation = pearson(all_g, all_c);
    return out;
}

// ---------------------------------------------------------------------------
// Cited / discovered / invented

enum class Provenance { cited, discovered, invented };

struct TaxonomyCounts {
    std::size_t cited = 0;
    std::size_t discovered = 0;
    std::size_t invented = 0;

    std::size_t total() const { return cited + discovered + invented; }
    double fraction(Provenance p) const {
        if (total() == 0) return 0.0;
        std::size_t c = p == Provenance::cited ? cited : (p == Provenance::discovered ? discovered : invented);
        return static_cast<double>(c) / static_cast<double>(total());
    }
    void add(Provenance p) { (p == Provenance::cited ? cited : (p == Provenance::discovered ? discovered : invented))++; }
};

/// Token-level counts (every generated occurrence) and distinct-item counts.
struct TaxonomyReport {
    TaxonomyCounts tokens;
    TaxonomyCounts distinct;

    double cited() const { return tokens.fraction(Provenance::cited); }
    double discovered() const { return tokens.fraction(Provenance::discovered); }
    double invented() const { return tokens.fraction(Provenance::invented); }
};

using ChordKey = std::vector<Symbol>;

struct QuadKey {
    int voice = 0;
    int other = 0;
    Symbol upper_now, upper_next, lower_now, lower_next;
    auto operator<=>(const QuadKey&) const = default;
};

inline std::vector<ChordKey> chords_of(const ChordSequence& s) {
    std::vector<ChordKey> out;
    out.reserve(s.length());
    for (std::size_t j = 0; j < s.length(); ++j) out.push_back(s.column(j));
    return out;
}

inline std::vector<QuadKey> quads_of(const ChordSequence& s) {
    std::vector<QuadKey> out;
    for (std::size_t i = 0; i < s.voices(); ++i) {
        for (std::size_t i2 = i + 1; i2 < s.voices(); ++i2) {
            for (std::size_t j = 0; j + 1 < s.length(); ++j) {
                out.push_back(QuadKey{static_cast<int>(i), static_cast<int>(i2), s(i, j), s(i, j + 1), s(i2, j), s(i2, j + 1)});
            }
        }
    }
    return out;
}

template <class Key, class Extract>
std::set<Key> item_set(const std::vector<ChordSequence>& seqs, Extract extract) {
    std::set<Key> out;
    for (const auto& s : seqs) {
        for (auto& k : extract(s)) out.insert(std::move(k));
    }
    return out;
}

template <class Key, class Extract>
TaxonomyReport classify_items(const std::vector<ChordSequence>& generated, const std::vector<ChordSequence>& train,
                              const std::vector<ChordSequence>& reference, Extract extract) {
    const auto train_set = item_set<Key>(train, extract);
    const auto ref_set = item_set<Key>(reference, extract);
    auto classify = [&](const Key& k) {
        if (train_set.count(k)) return Provenance::cited;
        if (ref_set.count(k)) return Provenance::discovered;
        return Provenance::invented;
    };
    TaxonomyReport r;
    std::set<Key> seen;
    for (const auto& s : generated) {
        for (auto& k : extract(s)) {
            Provenance p = classify(k);
            r.tokens.add(p);
            if (seen.insert(std::move(k)).second) r.distinct.add(p);
        }
    }
    return r;
}

inline TaxonomyReport classify_chords(const std::vector<ChordSequence>& generated, const std::vector<ChordSequence>& train,
                                      const std::vector<ChordSequence>& reference) {
    return classify_items<ChordKey>(generated, train, reference, chords_of);
}

inline TaxonomyReport classify_quads(const std::vector<ChordSequence>& generated, const std::vector<ChordSequence>& train,
                                     const std::vector<ChordSequence>& reference) {
    return classify_items<QuadKey>(generated, train, reference, quads_of);
}

struct TrajectoryPoint {
    double normalized_step = 0.0;  // Metropolis steps / (|A| n l)
    double cited = 0.0;
    double discovered = 0.0;
    double invented = 0.0;
};

/// Chord taxonomy of each recorded state; all states must share one length.
inline std::vector<TrajectoryPoint> taxonomy_trajectory(const std::vector<ChordSequence>& states,
                                                        const std::vector<std::uint64_t>& steps, const Topology& topo,
                                                        const std::vector<ChordSequence>& train,
                                                        const std::vector<ChordSequence>& reference) {
    const auto train_set = item_set<ChordKey>(train, chords_of);
    const auto ref_set = item_set<ChordKey>(reference, chords_of);
    std::vector<TrajectoryPoint> out;
    for (std::size_t t = 0; t < states.size(); ++t) {
        TaxonomyCounts c;
        for (const auto& k : chords_of(states[t])) {
            c.add(train_set.count(k) ? Provenance::cited : (ref_set.count(k) ? Provenance::discovered : Provenance::invented));
        }
        double scale = static_cast<double>(topo.alphabet_sum()) * static_cast<double>(states[t].length());
        out.push_back(TrajectoryPoint{static_cast<double>(steps[t]) / scale, c.fraction(Provenance::cited),
                                      c.fraction(Provenance::discovered), c.fraction(Provenance::invented)});
    }
    return out;
}

struct RestitutionDiscovery {
    double restitution = 0.0;  // percent of distinct training chords generated
    double discovery = 0.0;    // percent of distinct test-only chords generated
};

inline RestitutionDiscovery restitution_discovery(const std::vector<ChordSequence>& generated,
                                                  const std::vector<ChordSequence>& train,
                                                  const std::vector<ChordSequence>& test) {
    const auto gen = item_set<ChordKey>(generated, chords_of);
    const auto tr = item_set<ChordKey>(train, chords_of);
    const auto te = item_set<ChordKey>(test, chords_of);
    if (tr.empty()) throw EmptyReferenceError("training corpus has no chords");
    std::size_t test_only = 0, cited = 0, discovered = 0;
    for (const auto& k : te) {
        if (!tr.count(k)) {
            ++test_only;
            if (gen.count(k)) ++discovered;
        }
    }
    if (test_only == 0) throw EmptyReferenceError("test corpus has no chord absent from training");
    for (const auto& k : tr) {
        if (gen.count(k)) ++cited;
    }
    return {100.0 * static_cast<double>(cited) / static_cast<double>(tr.size()),
            100.0 * static_cast<double>(discovered) / static_cast<double>(test_only)};
}

// ---------------------------------------------------------------------------
// Baselines

enum class BaselineKind { independent, vertical_only };

/// independent: local fields theta_a = log p(a) per voice (and metrical
/// position in rhythm mode). vertical_only: K = L = 0 trained with `cfg`.
inline Model baseline_model(const Corpus& corpus, BaselineKind kind, const TrainingConfig& cfg = {}) {
    if (kind == BaselineKind::vertical_only) {
        TrainingConfig c = cfg;
        c.horizon = 0;
        c.cross_horizon = 0;
        return fit(corpus, c);
    }
    Topology topo = Topology::from_corpus(corpus, 0, 0, cfg.bins_per_cycle);
    topo.unary_only = true;
    const ParameterLayout layout(topo);
    std::vector<double> theta(layout.size(), 0.0);
    std::vector<double> totals(topo.voices * topo.positions(), 0.0);
    for (const auto& p : corpus.pieces()) {
        for (std::size_t i = 0; i < topo.voices; ++i) {
            for (std::size_t m = 0; m < p.grid.length(); ++m) {
                std::size_t pos = layout.position_of(m);
                theta[layout.local_index(i, pos, static_cast<std::size_t>(layout.symbol_index(i, p.grid(i, m))))] += 1.0;
                totals[i * topo.positions() + pos] += 1.0;
            }
        }
    }
    // Unseen symbols get a floor well below every observed one.
    for (std::size_t i = 0; i < topo.voices; ++i) {
        for (std::size_t pos = 0; pos < topo.positions(); ++pos) {
            double tot = totals[i * topo.positions() + pos];
            for (std::size_t a = 0; a < topo.alphabets[i].size(); ++a) {
                double& v = theta[layout.local_index(i, pos, a)];
                v = (v > 0 && tot > 0) ? std::log(v / tot) : std::log(1e-6);
            }
        }
    }
    ModelMetadata meta;
    meta.corpus_fingerprint = corpus_fingerprint(corpus);
    meta.extra = {{"baseline", "independent"}};
    if (!corpus.empty()) meta.mode = corpus.pieces().front().mode;
    return Model(topo, theta, meta);
}

// ---------------------------------------------------------------------------
// CSV reports

inline std::string format_double(double v) {
    std::ostringstream ss;
    ss << std::setprecision(17) << v;
    return ss.str();
}

inline std::string pair_stats_csv(const PairStatistics& stats) {
    std::ostringstream out;
    out << "a,b,i,j,k,freq_generated,freq_corpus\n";
    for (const auto& r : stats.rows) {
        out << r.key.a.to_string() << ',' << r.key.b.to_string() << ',' << r.key.i << ',' << r.key.j << ',' << r.key.k
            << ',' << format_double(r.freq_generated) << ',' << format_double(r.freq_corpus) << '\n';
    }
    return out.str();
}

inline std::string pair_correlations_csv(const PairStatistics& stats) {
    std::ostringstream out;
    out << "i,j,k,pearson\n";
    for (const auto& [key, r] : stats.group_correlation) {
        out << std::get<0>(key) << ',' << std::get<1>(key) << ',' << std::get<2>(key) << ',' << format_double(r) << '\n';
    }
    out << "all,all,all," << format_double(stats.overall_correlation) << '\n';
    return out.str();
}

inline std::string taxonomy_csv(const TaxonomyReport& chords, const TaxonomyReport& quads) {
    std::ostringstream out;
    out << "structure,counting,total,cited,discovered,invented,cited_pct,discovered_pct,invented_pct\n";
    auto row = [&](const char* structure, const char* counting, const TaxonomyCounts& c) {
        out << structure << ',' << counting << ',' << c.total() << ',' << c.cited << ',' << c.discovered << ','
            << c.invented << ',' << format_double(100.0 * c.fraction(Provenance::cited)) << ','
            << format_double(100.0 * c.fraction(Provenance::discovered)) << ','
            << format_double(100.0 * c.fraction(Provenance::invented)) << '\n';
    };
    row("chord", "tokens", chords.tokens);
    row("chord", "distinct", chords.distinct);
    row("quad", "tokens", quads.tokens);
    row("quad", "distinct", quads.distinct);
    return out.str();
}

struct RestitutionRow {
    double lambda = 0.0;
    std::string mode;
    RestitutionDiscovery values;
};

inline std::string restitution_csv(const std::vector<RestitutionRow>& rows) {
    std::ostringstream out;
    out << "lambda,mode,restitution,discovery\n";
    for (const auto& r : rows) {
        out << format_double(r.lambda) << ',' << r.mode << ',' << format_double(r.values.restitution) << ','
            << format_double(r.values.discovery) << '\n';
    }
    return out.str();
}

inline std::string trajectory_csv(const std::vector<TrajectoryPoint>& pts) {
    std::ostringstream out;
    out << "normalized_step,cited,discovered,invented\n";
    for (const auto& p : pts) {
        out << format_double(p.normalized_step) << ',' << format_double(p.cited) << ',' << format_double(p.discovered)
            << ',' << format_double(p.invented) << '\n';
    }
    return out.str();
}

}  // namespace maxpoly

#endif  // MAXPOLY_EVALUATOR_HPP_
