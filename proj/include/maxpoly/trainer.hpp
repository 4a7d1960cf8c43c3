#ifndef MAXPOLY_TRAINER_HPP_
#define MAXPOLY_TRAINER_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "maxpoly/corpus.hpp"
#include "maxpoly/model.hpp"
#include "maxpoly/optimizer.hpp"

namespace maxpoly {

struct TrainingConfig {
    int horizon = 4;        // K
    int cross_horizon = 2;  // L
    double lambda = 3e-5;
    int max_iterations = 500;
    double tolerance = 1e-6;
    OptimizerKind optimizer = OptimizerKind::owlqn;
    std::uint64_t seed = 0;
    bool exempt_local_fields = false;
    // Divide lambda by the per-voice sample count.
    bool scale_lambda_by_samples = false;
    std::optional<int> bins_per_cycle;
    std::optional<Mode> mode;  // train on one mode of a mixed corpus

    void validate() const {
        if (!(lambda >= 0)) throw ConfigError("lambda must be >= 0");
        if (!(tolerance > 0)) throw ConfigError("tolerance must be > 0");
        if (max_iterations < 0) throw ConfigError("max_iterations must be >= 0");
        if (horizon < 0 || cross_horizon < 0 || cross_horizon > horizon) throw ConfigError("need 0 <= L <= K");
        if (bins_per_cycle && *bins_per_cycle < 1) throw ConfigError("bins_per_cycle must be positive");
    }

    static TrainingConfig from_json(const nlohmann::json& j) {
        TrainingConfig c;
        try {
            c.horizon = j.value("K", c.horizon);
            c.cross_horizon = j.value("L", c.cross_horizon);
            c.lambda = j.value("lambda", c.lambda);
            c.max_iterations = j.value("max_iterations", c.max_iterations);
            c.tolerance = j.value("tolerance", c.tolerance);
            if (j.contains("optimizer")) c.optimizer = optimizer_from_string(j["optimizer"].get<std::string>());
            c.seed = j.value("seed", c.seed);
            c.exempt_local_fields = j.value("exempt_local_fields", c.exempt_local_fields);
            c.scale_lambda_by_samples = j.value("scale_lambda_by_samples", c.scale_lambda_by_samples);
            if (j.contains("bins_per_cycle") && !j["bins_per_cycle"].is_null()) c.bins_per_cycle = j["bins_per_cycle"].get<int>();
            if (j.contains("mode") && !j["mode"].is_null()) c.mode = mode_from_string(j["mode"].get<std::string>());
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("bad training config: ") + e.what());
        }
        c.validate();
        return c;
    }
};

/// One pseudo-likelihood sample: the centre cell of `window`, a copy of the
/// piece columns [col - K, col + K].
struct TrainingSample {
    std::size_t voice = 0;
    std::size_t position = 0;  // metrical position of the centre column
    Symbol center;
    ChordSequence window;
};

struct VoiceDataset {
    std::size_t voice = 0;
    std::vector<TrainingSample> samples;
};

/// Splits the corpus into one dataset per voice, keeping only columns whose
/// whole K-window lies inside its piece (l - 2K columns per piece).
inline std::vector<VoiceDataset> build_datasets(const Corpus& corpus, const Topology& topo) {
    topo.validate();
    if (corpus.voices() != topo.voices) throw ValidationError("corpus voice count does not match topology");
    const ParameterLayout layout(topo);
    const std::size_t K = static_cast<std::size_t>(topo.horizon);
    std::vector<VoiceDataset> data(topo.voices);
    for (std::size_t i = 0; i < topo.voices; ++i) data[i].voice = i;
    std::size_t total = 0;
    for (const auto& piece : corpus.pieces()) {
        const auto& g = piece.grid;
        for (std::size_t i = 0; i < g.voices(); ++i) {
            for (Symbol s : g.row(i)) {
                if (layout.symbol_index(i, s) < 0) throw AlphabetError("corpus symbol " + s.to_string() + " outside topology alphabet");
            }
        }
        if (g.length() < 2 * K + 1) continue;
        for (std::size_t col = K; col + K < g.length(); ++col) {
            ChordSequence window(g.voices(), 2 * K + 1);
            for (std::size_t i = 0; i < g.voices(); ++i) {
                for (std::size_t d = 0; d < 2 * K + 1; ++d) window(i, d) = g(i, col - K + d);
            }
            for (std::size_t i = 0; i < g.voices(); ++i) {
                data[i].samples.push_back(TrainingSample{i, layout.position_of(col), g(i, col), window});
            }
            ++total;
        }
    }
    if (total == 0) throw EmptyDatasetError("no piece is longer than 2K");
    return data;
}

/// Preprocessed datasets: for each sample, the parameter indexes its centre
/// cell touches (local field first, then one per connection) so that the
/// candidate c maps to base + c * stride.
struct SufficientStats {
    std::size_t voices = 0;
    std::size_t dimension = 0;
    std::vector<std::size_t> sample_counts;          // #D_i
    std::vector<std::vector<double>> counts;         // per voice: empirical feature counts over D_i
    std::vector<std::vector<std::size_t>> strides;   // per voice, per touched slot
    std::vector<std::vector<std::uint32_t>> bases;   // per voice, samples x slots
    std::vector<std::vector<std::uint16_t>> centers; // per voice, alphabet index of x
    std::vector<std::size_t> alphabet_sizes;

    std::size_t slots(std::size_t voice) const { return strides[voice].size(); }

    // Mean over voices of the per-voice empirical means (the data term of the gradient).
    std::vector<double> empirical_gradient_term() const {
        std::vector<double> e(dimension, 0.0);
        for (std::size_t i = 0; i < voices; ++i) {
            double w = 1.0 / (static_cast<double>(voices) * static_cast<double>(sample_counts[i]));
            for (std::size_t f = 0; f < dimension; ++f) e[f] += w * counts[i][f];
        }
        return e;
    }
};

inline SufficientStats precompute_stats(const std::vector<VoiceDataset>& datasets, const Topology& topo) {
    const ParameterLayout layout(topo);
    SufficientStats st;
    st.voices = topo.voices;
    st.dimension = layout.size();
    st.sample_counts.assign(topo.voices, 0);
    st.counts.assign(topo.voices, std::vector<double>(layout.size(), 0.0));
    st.strides.resize(topo.voices);
    st.bases.resize(topo.voices);
    st.centers.resize(topo.voices);
    for (std::size_t i = 0; i < topo.voices; ++i) st.alphabet_sizes.push_back(topo.alphabets[i].size());
    if (datasets.size() != topo.voices) throw ValidationError("one dataset per voice required");

    for (const auto& ds : datasets) {
        const std::size_t i = ds.voice;
        const auto& terms = layout.terms(i);
        st.strides[i].push_back(1);
        for (const auto& t : terms) st.strides[i].push_back(t.cand_stride);
        st.sample_counts[i] = ds.samples.size();
        for (const auto& smp : ds.samples) {
            const auto& w = smp.window;
            const long centre = static_cast<long>(topo.horizon);
            int x = layout.symbol_index(i, smp.center);
            if (x < 0) throw AlphabetError("sample centre outside alphabet");
            st.centers[i].push_back(static_cast<std::uint16_t>(x));
            std::size_t base = layout.local_start(i, smp.position);
            st.bases[i].push_back(static_cast<std::uint32_t>(base));
            st.counts[i][base + static_cast<std::size_t>(x)] += 1.0;
            for (const auto& t : terms) {
                long pc = centre + t.dk;
                int p = layout.symbol_index(static_cast<std::size_t>(t.partner_voice),
                                            w(static_cast<std::size_t>(t.partner_voice), static_cast<std::size_t>(pc)));
                std::size_t b = t.start + static_cast<std::size_t>(p) * t.partner_stride;
                st.bases[i].push_back(static_cast<std::uint32_t>(b));
                st.counts[i][b + static_cast<std::size_t>(x) * t.cand_stride] += 1.0;
            }
        }
    }
    return st;
}

struct ObjectiveValue {
    double value = 0.0;
    std::vector<double> gradient;
};

namespace detail {

// Accumulates loss and model-expectation gradient over the samples
// [first, last) of the flattened (voice, sample) sequence.
inline double accumulate_range(const SufficientStats& st, std::span<const double> theta, std::size_t first,
                               std::size_t last, std::span<double> grad) {
    double loss = 0.0;
    std::vector<double> score;
    std::size_t offset = 0;
    for (std::size_t i = 0; i < st.voices; ++i) {
        const std::size_t count = st.sample_counts[i];
        const std::size_t lo = std::max(first, offset), hi = std::min(last, offset + count);
        if (lo < hi) {
            const std::size_t A = st.alphabet_sizes[i], S = st.slots(i);
            const double w = 1.0 / (static_cast<double>(st.voices) * static_cast<double>(count));
            const auto& strides = st.strides[i];
            score.assign(A, 0.0);
            for (std::size_t smp = lo - offset; smp < hi - offset; ++smp) {
                const std::uint32_t* base = st.bases[i].data() + smp * S;
                std::fill(score.begin(), score.end(), 0.0);
                for (std::size_t t = 0; t < S; ++t) {
                    const double* th = theta.data() + base[t];
                    const std::size_t stride = strides[t];
                    for (std::size_t c = 0; c < A; ++c) score[c] += th[c * stride];
                }
                double best = *std::max_element(score.begin(), score.end());
                double z = 0.0;
                for (std::size_t c = 0; c < A; ++c) z += std::exp(score[c] - best);
                double log_z = best + std::log(z);
                loss += w * (log_z - score[st.centers[i][smp]]);
                if (grad.empty()) continue;
                for (std::size_t c = 0; c < A; ++c) score[c] = w * std::exp(score[c] - log_z);
                for (std::size_t t = 0; t < S; ++t) {
                    double* g = grad.data() + base[t];
                    const std::size_t stride = strides[t];
                    for (std::size_t c = 0; c < A; ++c) g[c * stride] += score[c];
                }
            }
        }
        offset += count;
    }
    return loss;
}

}  // namespace detail

/// Negative pseudo-log-likelihood (1/n) sum_i L_i and its gradient. Work is
/// split into fixed-size chunks reduced in order, so the result does not
/// depend on the thread count.
inline double pseudo_likelihood_objective(const SufficientStats& st, std::span<const double> theta,
                                          std::span<double> grad, const std::vector<double>& empirical,
                                          unsigned threads = 0) {
    constexpr std::size_t kChunk = 2048;
    std::size_t total = 0;
    for (auto c : st.sample_counts) total += c;
    const std::size_t chunks = std::max<std::size_t>(1, (total + kChunk - 1) / kChunk);
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, chunks));

    std::vector<double> losses(chunks, 0.0);
    std::vector<std::vector<double>> partial(grad.empty() ? 0 : chunks);
    auto work = [&](std::size_t c) {
        std::span<double> g;
        if (!grad.empty()) {
            partial[c].assign(st.dimension, 0.0);
            g = partial[c];
        }
        losses[c] = detail::accumulate_range(st, theta, c * kChunk, std::min(total, (c + 1) * kChunk), g);
    };
    if (threads <= 1) {
        for (std::size_t c = 0; c < chunks; ++c) work(c);
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back([&, t] {
                for (std::size_t c = t; c < chunks; c += threads) work(c);
            });
        }
        for (auto& th : pool) th.join();
    }
    double loss = 0.0;
    for (double l : losses) loss += l;
    if (!grad.empty()) {
        for (std::size_t f = 0; f < st.dimension; ++f) {
            double g = -empirical[f];
            for (std::size_t c = 0; c < chunks; ++c) g += partial[c][f];
            grad[f] = g;
        }
    }
    return loss;
}

inline ObjectiveValue objective_and_gradient(std::span<const double> theta, const SufficientStats& st) {
    ObjectiveValue out;
    out.gradient.assign(st.dimension, 0.0);
    out.value = pseudo_likelihood_objective(st, theta, out.gradient, st.empirical_gradient_term());
    return out;
}

/// Per-voice loss L_i alone.
inline double voice_loss(std::span<const double> theta, const SufficientStats& st, std::size_t voice) {
    std::size_t first = 0;
    for (std::size_t i = 0; i < voice; ++i) first += st.sample_counts[i];
    double scaled = detail::accumulate_range(st, theta, first, first + st.sample_counts[voice], {});
    return scaled * static_cast<double>(st.voices);
}

struct FitOptions {
    std::optional<std::vector<double>> initial;  // default: theta = 0
    unsigned threads = 0;
};

struct FitResult {
    Model model;
    OptimizationResult optimization;
};

inline std::vector<double> l1_weights(const ParameterLayout& layout, const TrainingConfig& cfg,
                                      const SufficientStats& st) {
    double lam = cfg.lambda;
    if (cfg.scale_lambda_by_samples) {
        double mean = 0.0;
        for (auto c : st.sample_counts) mean += static_cast<double>(c);
        lam /= mean / static_cast<double>(st.voices);
    }
    std::vector<double> w(layout.size(), lam);
    if (cfg.exempt_local_fields) {
        for (std::size_t f = layout.pair_count(); f < layout.size(); ++f) w[f] = 0.0;
    }
    return w;
}

inline FitResult fit_detailed(const Corpus& corpus, const Topology& topo, const TrainingConfig& cfg,
                              const FitOptions& opts = {}) {
    cfg.validate();
    const auto datasets = build_datasets(corpus, topo);
    const auto st = precompute_stats(datasets, topo);
    const ParameterLayout layout(topo);
    const auto empirical = st.empirical_gradient_term();
    const auto weights = l1_weights(layout, cfg, st);
    SmoothObjective fn = [&](std::span<const double> x, std::span<double> g) {
        return pseudo_likelihood_objective(st, x, g, empirical, opts.threads);
    };
    std::vector<double> x0 = opts.initial ? *opts.initial : std::vector<double>(layout.size(), 0.0);
    if (x0.size() != layout.size()) throw ConfigError("initial parameter vector has wrong size");
    OptimizerOptions oo{cfg.optimizer, cfg.max_iterations, cfg.tolerance};
    auto res = minimize_l1(fn, std::move(x0), weights, oo);

    ModelMetadata meta;
    meta.lambda = cfg.lambda;
    meta.corpus_fingerprint = corpus_fingerprint(corpus);
    if (cfg.mode) {
        meta.mode = cfg.mode;
    } else if (!corpus.empty() && std::all_of(corpus.pieces().begin(), corpus.pieces().end(),
                                              [&](const Piece& p) { return p.mode == corpus.pieces().front().mode; })) {
        meta.mode = corpus.pieces().front().mode;
    }
    meta.extra = {{"optimizer", to_string(cfg.optimizer)},
                  {"iterations", res.iterations},
                  {"objective", res.objective},
                  {"converged", res.converged},
                  {"exempt_local_fields", cfg.exempt_local_fields},
                  {"pieces", corpus.pieces().size()}};
    Model model(topo, res.x, meta);
    return FitResult{std::move(model), std::move(res)};
}

inline Model fit(const Corpus& corpus, const Topology& topo, const TrainingConfig& cfg, const FitOptions& opts = {}) {
    return fit_detailed(corpus, topo, cfg, opts).model;
}

/// Builds the topology from the corpus alphabets and the config, filtering
/// to cfg.mode when set.
inline Model fit(const Corpus& corpus, const TrainingConfig& cfg, const FitOptions& opts = {}) {
    Corpus used = cfg.mode ? filter_mode(corpus, *cfg.mode) : corpus;
    auto topo = Topology::from_corpus(used, cfg.horizon, cfg.cross_horizon, cfg.bins_per_cycle);
    return fit(used, topo, cfg, opts);
}

}  // namespace maxpoly

#endif  // MAXPOLY_TRAINER_HPP_
