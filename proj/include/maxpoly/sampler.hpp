#ifndef MAXPOLY_SAMPLER_HPP_
#define MAXPOLY_SAMPLER_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "maxpoly/model.hpp"
#include "maxpoly/rng.hpp"

namespace maxpoly {

using Cell = std::pair<std::size_t, std::size_t>;  // (voice, column)

/// Pinned notes and per-cell allowed pitch sets.
struct ConstraintSet {
    std::map<Cell, Symbol> pins;
    std::map<Cell, std::vector<Symbol>> ranges;

    bool empty() const { return pins.empty() && ranges.empty(); }

    void validate(const Topology& topo, std::size_t length) const {
        auto check_cell = [&](const Cell& c) {
            if (c.first >= topo.voices || c.second >= length) {
                throw ConstraintError("constraint cell (" + std::to_string(c.first) + ", " + std::to_string(c.second) +
                                      ") outside the " + std::to_string(topo.voices) + "x" + std::to_string(length) + " grid");
            }
        };
        for (const auto& [cell, sym] : pins) {
            check_cell(cell);
            if (!alphabet_contains(topo.alphabets[cell.first], sym)) {
                throw ConstraintError("pinned symbol " + sym.to_string() + " not in alphabet of voice " + std::to_string(cell.first));
            }
            if (ranges.count(cell)) throw ConstraintError("cell is both pinned and range-constrained");
        }
        for (const auto& [cell, set] : ranges) {
            check_cell(cell);
            if (set.empty()) throw ConstraintError("empty pitch range");
            for (Symbol s : set) {
                if (!alphabet_contains(topo.alphabets[cell.first], s)) {
                    throw ConstraintError("range symbol " + s.to_string() + " not in alphabet of voice " + std::to_string(cell.first));
                }
            }
        }
    }

    bool satisfied_by(const ChordSequence& s) const {
        for (const auto& [cell, sym] : pins) {
            if (s(cell.first, cell.second) != sym) return false;
        }
        for (const auto& [cell, set] : ranges) {
            if (std::find(set.begin(), set.end(), s(cell.first, cell.second)) == set.end()) return false;
        }
        return true;
    }

    static ConstraintSet from_json(const nlohmann::json& j) {
        ConstraintSet c;
        try {
            if (j.is_null()) return c;
            if (!j.is_object()) throw ParseError("constraints must be an object");
            if (j.contains("pins")) {
                for (const auto& p : j["pins"]) {
                    if (!p.is_array() || p.size() != 3) throw ParseError("pin must be [voice, position, cell]");
                    c.pins[{p[0].get<std::size_t>(), p[1].get<std::size_t>()}] = symbol_from_json(p[2]);
                }
            }
            if (j.contains("ranges")) {
                for (const auto& r : j["ranges"]) {
                    if (!r.is_array() || r.size() != 3 || !r[2].is_array()) {
                        throw ParseError("range must be [voice, position, [cell, ...]]");
                    }
                    std::vector<Symbol> set;
                    for (const auto& x : r[2]) set.push_back(symbol_from_json(x));
                    std::sort(set.begin(), set.end());
                    set.erase(std::unique(set.begin(), set.end()), set.end());
                    c.ranges[{r[0].get<std::size_t>(), r[1].get<std::size_t>()}] = std::move(set);
                }
            }
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("malformed constraints: ") + e.what());
        }
        return c;
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["pins"] = nlohmann::json::array();
        for (const auto& [cell, sym] : pins) j["pins"].push_back({cell.first, cell.second, symbol_to_json(sym)});
        j["ranges"] = nlohmann::json::array();
        for (const auto& [cell, set] : ranges) {
            auto cells = nlohmann::json::array();
            for (Symbol s : set) cells.push_back(symbol_to_json(s));
            j["ranges"].push_back({cell.first, cell.second, cells});
        }
        return j;
    }
};

inline constexpr double kDefaultBudgetConstant = 20.0;

/// c * n * l * |A| Metropolis steps, with |A| the mean alphabet size.
inline std::uint64_t default_step_budget(const Topology& topo, std::size_t length,
                                         double constant = kDefaultBudgetConstant) {
    return static_cast<std::uint64_t>(std::llround(constant * static_cast<double>(length) *
                                                   static_cast<double>(topo.alphabet_sum())));
}

inline std::uint64_t default_step_budget(const Model& model, std::size_t length,
                                         double constant = kDefaultBudgetConstant) {
    return default_step_budget(model.topology(), length, constant);
}

struct SamplerConfig {
    std::optional<std::uint64_t> total_steps;  // default: default_step_budget
    std::optional<std::uint64_t> burn_in;      // default: half the steps
    std::optional<std::uint64_t> thinning;     // default: n * l
    std::uint64_t seed = 0;
    bool record_trajectory = false;
    double budget_constant = kDefaultBudgetConstant;
};

/// Allowed symbols of every cell (row-major) and the unpinned cells.
struct ChainSpace {
    std::size_t voices = 0;
    std::size_t length = 0;
    std::vector<std::vector<Symbol>> allowed;
    std::vector<std::size_t> free_cells;

    const std::vector<Symbol>& at(std::size_t voice, std::size_t col) const { return allowed[voice * length + col]; }
};

inline ChainSpace make_chain_space(const Topology& topo, std::size_t length, const ConstraintSet& constraints) {
    constraints.validate(topo, length);
    ChainSpace sp{topo.voices, length, {}, {}};
    sp.allowed.resize(topo.voices * length);
    for (std::size_t i = 0; i < topo.voices; ++i) {
        for (std::size_t j = 0; j < length; ++j) {
            auto& slot = sp.allowed[i * length + j];
            if (auto p = constraints.pins.find({i, j}); p != constraints.pins.end()) {
                slot = {p->second};
                continue;
            }
            if (auto r = constraints.ranges.find({i, j}); r != constraints.ranges.end()) {
                slot = r->second;  // sorted, same order as the alphabet
            } else {
                slot = topo.alphabets[i];
            }
            sp.free_cells.push_back(i * length + j);
        }
    }
    return sp;
}

struct Move {
    std::size_t voice = 0;
    std::size_t col = 0;
    Symbol candidate;
};

/// Uniform unpinned cell, then a uniform symbol from its allowed set (which
/// may be the current one).
inline Move propose(const ChainSpace& space, Rng& rng) {
    if (space.free_cells.empty()) throw FullyPinnedError("every cell is pinned");
    std::size_t cell = space.free_cells[rng.below(space.free_cells.size())];
    const auto& allowed = space.allowed[cell];
    return Move{cell / space.length, cell % space.length, allowed[rng.below(allowed.size())]};
}

inline Move propose(const ChordSequence& s, const Model& model, const ConstraintSet& constraints, Rng& rng) {
    return propose(make_chain_space(model.topology(), s.length(), constraints), rng);
}

/// alpha = P(s') / P(s) from the features touching the changed cell only.
inline double acceptance_ratio(const ChordSequence& s, const Move& move, const Model& model) {
    Symbol current = s(move.voice, move.col);
    if (current == move.candidate) return 1.0;
    return std::exp(model.local_score(s, move.voice, move.col, move.candidate) -
                    model.local_score(s, move.voice, move.col, current));
}

struct SampleResult {
    ChordSequence sequence;
    std::vector<ChordSequence> trajectory;
    std::vector<std::uint64_t> trajectory_steps;
    std::uint64_t steps = 0;
    std::uint64_t accepted = 0;
    std::uint64_t burn_in = 0;
    std::uint64_t thinning = 0;
};

using StateObserver = std::function<void(std::uint64_t step, const ChordSequence&)>;

struct ChainSchedule {
    std::uint64_t total = 0;
    std::uint64_t burn_in = 0;
    std::uint64_t thinning = 1;
};

inline ChainSchedule resolve_schedule(const SamplerConfig& cfg, const Topology& topo, std::size_t length) {
    ChainSchedule s;
    s.total = cfg.total_steps.value_or(default_step_budget(topo, length, cfg.budget_constant));
    s.burn_in = cfg.burn_in.value_or(s.total / 2);
    s.thinning = cfg.thinning.value_or(static_cast<std::uint64_t>(topo.voices * length));
    if (s.total == 0) throw ConfigError("step budget is zero");
    if (s.burn_in >= s.total) throw ConfigError("burn_in must be smaller than total_steps");
    if (s.thinning < 1) throw ConfigError("thinning must be >= 1");
    return s;
}

/// Generic Metropolis chain over `space`. `log_ratio(s, voice, col, cand)`
/// returns log P(s') - log P(s) for the single-cell move.
template <class LogRatio>
SampleResult run_chain(const ChainSpace& space, LogRatio&& log_ratio, const ChainSchedule& sched, std::uint64_t seed,
                       bool record, const StateObserver& observer = {}) {
    if (space.free_cells.empty()) throw FullyPinnedError("every cell is pinned");
    Rng rng(seed);
    SampleResult out;
    out.burn_in = sched.burn_in;
    out.thinning = sched.thinning;
    ChordSequence s(space.voices, space.length);
    for (std::size_t c = 0; c < space.allowed.size(); ++c) {
        const auto& allowed = space.allowed[c];
        s(c / space.length, c % space.length) = allowed.size() == 1 ? allowed[0] : allowed[rng.below(allowed.size())];
    }
    for (std::uint64_t step = 1; step <= sched.total; ++step) {
        Move m = propose(space, rng);
        double alpha = std::exp(log_ratio(s, m.voice, m.col, m.candidate));
        if (rng.uniform() < alpha) {
            s(m.voice, m.col) = m.candidate;
            ++out.accepted;
        }
        if (step > sched.burn_in && (step - sched.burn_in) % sched.thinning == 0) {
            if (observer) observer(step, s);
            if (record) {
                out.trajectory.push_back(s);
                out.trajectory_steps.push_back(step);
            }
        }
    }
    out.steps = sched.total;
    out.sequence = std::move(s);
    return out;
}

/// Log acceptance ratio under a single model.
struct ModelLogRatio {
    const Model* model;
    double operator()(const ChordSequence& s, std::size_t voice, std::size_t col, Symbol cand) const {
        Symbol cur = s(voice, col);
        if (cur == cand) return 0.0;
        return model->local_score(s, voice, col, cand) - model->local_score(s, voice, col, cur);
    }
};

inline SampleResult run(const Model& model, std::size_t length, const ConstraintSet& constraints,
                        const SamplerConfig& cfg, const StateObserver& observer = {}) {
    if (length == 0) throw ConfigError("sequence length must be positive");
    auto space = make_chain_space(model.topology(), length, constraints);
    auto sched = resolve_schedule(cfg, model.topology(), length);
    return run_chain(space, ModelLogRatio{&model}, sched, cfg.seed, cfg.record_trajectory, observer);
}

}  // namespace maxpoly

#endif  // MAXPOLY_SAMPLER_HPP_
