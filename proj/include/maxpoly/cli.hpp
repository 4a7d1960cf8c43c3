#ifndef MAXPOLY_CLI_HPP_
#define MAXPOLY_CLI_HPP_

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "maxpoly/corpus.hpp"
#include "maxpoly/evaluator.hpp"
#include "maxpoly/harmonizer.hpp"
#include "maxpoly/http_server.hpp"
#include "maxpoly/model_io.hpp"
#include "maxpoly/sampler.hpp"
#include "maxpoly/service.hpp"
#include "maxpoly/trainer.hpp"

namespace maxpoly::cli {

using nlohmann::json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitDomain = 2;

namespace detail {

inline json read_json(const std::string& path) {
    try {
        return json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw ParseError(path + ": " + e.what());
    }
}

inline bool has_events(const json& corpus) {
    return corpus.contains("pieces") && corpus["pieces"].is_array() && !corpus["pieces"].empty() &&
           corpus["pieces"][0].contains("events");
}

inline Corpus load_any_corpus(const std::string& path, std::optional<int> bins_per_cycle) {
    auto j = read_json(path);
    LoadOptions lo;
    if (has_events(j)) {
        if (!bins_per_cycle) throw ConfigError(path + ": onset-list corpus needs bins_per_cycle in the config");
        lo.format = CorpusFormat::events;
        lo.bins_per_cycle = *bins_per_cycle;
    }
    return transpose_to_c(corpus_from_json(j, lo));
}

inline std::vector<ChordSequence> grids(const Corpus& c) { return c.sequences(); }

inline std::map<Mode, Model> load_model_dir(const std::string& dir) {
    std::map<Mode, Model> out;
    std::optional<Model> modeless;
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        Model m = load_model(f.string());
        if (m.metadata().mode) {
            out.emplace(*m.metadata().mode, std::move(m));
        } else if (!modeless) {
            modeless = std::move(m);
        }
    }
    if (modeless) {
        out.emplace(Mode::major, *modeless);
        out.emplace(Mode::minor, *modeless);
    }
    if (out.empty()) throw MissingModelError("no model files in " + dir);
    return out;
}

inline std::string sidecar_path(const std::string& out) {
    std::filesystem::path p(out);
    auto stem = p.stem().string();
    return (p.parent_path() / (stem + ".keytrack.json")).string();
}

struct Args {
    // train
    std::string corpus, config, out;
    unsigned threads = 0;
    // sample
    std::string model, constraints;
    long long length = 0, steps = 0;
    std::uint64_t seed = 0;
    std::optional<std::uint64_t> burn_in, thinning;
    // reharmonize
    std::string model_dir, melody, keys;
    std::size_t voice = 0;
    // evaluate
    std::string generated, train_corpus, test_corpus, report_dir;
    int horizon = 4, cross_horizon = 2;
    std::optional<int> bins_per_cycle;
    // serve
    int port = 8080;
    std::string host = "127.0.0.1";
    std::size_t queue_capacity = 4;
};

inline int run_train(const Args& a, std::ostream& out) {
    auto cfg = TrainingConfig::from_json(read_json(a.config));
    auto corpus = load_any_corpus(a.corpus, cfg.bins_per_cycle);
    FitOptions fo;
    fo.threads = a.threads;
    Corpus used = cfg.mode ? filter_mode(corpus, *cfg.mode) : corpus;
    auto topo = Topology::from_corpus(used, cfg.horizon, cfg.cross_horizon, cfg.bins_per_cycle);
    auto res = fit_detailed(used, topo, cfg, fo);
    save_model(res.model, a.out);
    out << json{{"model", a.out},
                {"parameters", res.model.params().pairs.size() + res.model.params().position_fields.size()},
                {"objective", res.optimization.objective},
                {"iterations", res.optimization.iterations},
                {"converged", res.optimization.converged}}
               .dump()
        << '\n';
    return kExitOk;
}

inline int run_sample(const Args& a, std::ostream& out) {
    Model m = load_model(a.model);
    ConstraintSet cs;
    if (!a.constraints.empty()) cs = ConstraintSet::from_json(read_json(a.constraints));
    SamplerConfig sc;
    sc.total_steps = static_cast<std::uint64_t>(a.steps);
    sc.burn_in = a.burn_in;
    sc.thinning = a.thinning;
    sc.seed = a.seed;
    auto res = run(m, static_cast<std::size_t>(a.length), cs, sc);
    Piece p;
    p.id = "sample-" + std::to_string(a.seed);
    p.mode = m.metadata().mode.value_or(Mode::major);
    p.grid = res.sequence;
    write_file(a.out, corpus_to_json(m.topology().voices, {p}).dump(1));
    out << json{{"out", a.out}, {"steps", res.steps}, {"accepted", res.accepted}}.dump() << '\n';
    return kExitOk;
}

inline int run_reharmonize(const Args& a, std::ostream& out) {
    auto models = load_model_dir(a.model_dir);
    auto mj = read_json(a.melody);
    auto mc = corpus_from_json(mj);
    if (mc.voices() != 1 || mc.pieces().size() != 1) throw ParseError("melody file must hold one 1-row piece");
    HarmonizationRequest req;
    auto row = mc.pieces().front().grid.row(0);
    req.melody.assign(row.begin(), row.end());
    req.melody_voice = a.voice;
    if (!a.keys.empty()) req.keys = keytrack_from_json(read_json(a.keys));
    if (!a.constraints.empty()) req.constraints = ConstraintSet::from_json(read_json(a.constraints));
    if (a.steps > 0) req.sampler.total_steps = static_cast<std::uint64_t>(a.steps);
    req.sampler.seed = a.seed;
    auto h = reharmonize(req, models);
    Piece p;
    p.id = mc.pieces().front().id + "-reharmonized";
    p.mode = h.keys.front().mode;
    p.grid = h.sequence;
    const std::size_t voices = models.begin()->second.topology().voices;
    write_file(a.out, corpus_to_json(voices, {p}).dump(1));
    auto side = sidecar_path(a.out);
    write_file(side, keytrack_to_json(h.keys).dump());
    out << json{{"out", a.out}, {"keytrack", side}}.dump() << '\n';
    return kExitOk;
}

inline int run_evaluate(const Args& a, std::ostream& out) {
    auto gen = load_any_corpus(a.generated, a.bins_per_cycle);
    auto train = load_any_corpus(a.train_corpus, a.bins_per_cycle);
    std::optional<Corpus> test;
    if (!a.test_corpus.empty()) test = load_any_corpus(a.test_corpus, a.bins_per_cycle);
    if (gen.voices() != train.voices()) throw ShapeError("generated and training corpora differ in voice count");
    std::filesystem::create_directories(a.report_dir);
    auto dir = std::filesystem::path(a.report_dir);

    const auto g = grids(gen), tr = grids(train);
    const std::vector<ChordSequence> ref = test ? grids(*test) : std::vector<ChordSequence>{};
    auto chords = classify_chords(g, tr, ref);
    auto quads = classify_quads(g, tr, ref);
    write_file((dir / "taxonomy.csv").string(), taxonomy_csv(chords, quads));

    Topology topo = !a.model.empty() ? load_model(a.model).topology()
                                     : Topology::from_corpus(train, a.horizon, a.cross_horizon, a.bins_per_cycle);
    auto stats = pair_statistics_table(g, tr, topo);
    write_file((dir / "pair_stats.csv").string(), pair_stats_csv(stats));
    write_file((dir / "pair_correlations.csv").string(), pair_correlations_csv(stats));

    json summary{{"chord_cited_pct", 100.0 * chords.cited()},
                 {"chord_discovered_pct", 100.0 * chords.discovered()},
                 {"chord_invented_pct", 100.0 * chords.invented()},
                 {"quad_cited_pct", 100.0 * quads.cited()},
                 {"quad_discovered_pct", 100.0 * quads.discovered()},
                 {"quad_invented_pct", 100.0 * quads.invented()},
                 {"pair_correlation", stats.overall_correlation}};
    if (test) {
        try {
            auto rd = restitution_discovery(g, tr, ref);
            RestitutionRow row;
            if (!a.model.empty()) row.lambda = load_model(a.model).metadata().lambda;
            row.mode = gen.empty() ? "" : to_string(gen.pieces().front().mode);
            row.values = rd;
            write_file((dir / "restitution.csv").string(), restitution_csv({row}));
            summary["restitution_pct"] = rd.restitution;
            summary["discovery_pct"] = rd.discovery;
        } catch (const EmptyReferenceError& e) {
            summary["restitution_error"] = e.what();
        }
    }
    write_file((dir / "summary.json").string(), summary.dump(1));
    out << summary.dump() << '\n';
    return kExitOk;
}

inline int run_serve(const Args& a, std::ostream& out) {
    std::string dir = a.model_dir;
    if (dir.empty()) {
        const char* env = std::getenv("MAXPOLY_MODEL_DIR");
        dir = env ? env : "models";
    }
    service::ApiConfig cfg;
    cfg.model_dir = dir;
    cfg.queue_capacity = a.queue_capacity;
    service::Api api(cfg);
    out << json{{"listening", a.host + ":" + std::to_string(a.port)}, {"model_dir", dir}}.dump() << std::endl;
    if (!service::serve(api, a.host, a.port)) throw ConfigError("cannot listen on " + a.host + ":" + std::to_string(a.port));
    return kExitOk;
}

inline void print_error(std::ostream& err, const std::string& kind, const std::string& message) {
    err << json{{"error", kind}, {"message", message}}.dump() << '\n';
}

}  // namespace detail

/// Entry point of the command-line tool. Returns the process exit code:
/// 0 success, 1 usage error, 2 domain error (JSON on `err`).
inline int cli_dispatch(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    detail::Args a;
    CLI::App app{"maxpoly: maximum-entropy polyphonic sequence models"};
    app.name("maxpoly");
    app.require_subcommand(1);

    auto* train = app.add_subcommand("train", "fit a model on a corpus");
    train->add_option("--corpus", a.corpus, "corpus JSON")->required()->check(CLI::ExistingFile);
    train->add_option("--config", a.config, "training config JSON")->required()->check(CLI::ExistingFile);
    train->add_option("--out", a.out, "model file to write")->required();
    train->add_option("--threads", a.threads, "worker threads (0 = all cores)");

    auto* sample = app.add_subcommand("sample", "generate a sequence");
    sample->add_option("--model", a.model, "model JSON")->required()->check(CLI::ExistingFile);
    sample->add_option("--length", a.length, "columns to generate")->required()->check(CLI::PositiveNumber);
    sample->add_option("--steps", a.steps, "Metropolis steps")->required()->check(CLI::PositiveNumber);
    sample->add_option("--seed", a.seed, "random seed")->required();
    sample->add_option("--constraints", a.constraints, "constraint JSON")->check(CLI::ExistingFile);
    sample->add_option("--burn-in", a.burn_in, "steps discarded before recording");
    sample->add_option("--thinning", a.thinning, "steps between recorded states")->check(CLI::PositiveNumber);
    sample->add_option("--out", a.out, "output corpus JSON")->required();

    auto* reharm = app.add_subcommand("reharmonize", "harmonize a melody");
    reharm->add_option("--model-dir", a.model_dir, "directory of per-mode models")->required()->check(CLI::ExistingDirectory);
    reharm->add_option("--melody", a.melody, "one-piece, one-row corpus JSON")->required()->check(CLI::ExistingFile);
    reharm->add_option("--keys", a.keys, "key track JSON [[beat, keypc, mode], ...]")->check(CLI::ExistingFile);
    reharm->add_option("--constraints", a.constraints, "extra constraint JSON")->check(CLI::ExistingFile);
    reharm->add_option("--voice", a.voice, "voice carrying the melody");
    reharm->add_option("--steps", a.steps, "Metropolis steps")->check(CLI::PositiveNumber);
    reharm->add_option("--seed", a.seed, "random seed");
    reharm->add_option("--out", a.out, "output corpus JSON")->required();

    auto* eval = app.add_subcommand("evaluate", "write evaluation reports");
    eval->add_option("--generated", a.generated, "generated corpus JSON")->required()->check(CLI::ExistingFile);
    eval->add_option("--train-corpus", a.train_corpus, "training corpus JSON")->required()->check(CLI::ExistingFile);
    eval->add_option("--test-corpus", a.test_corpus, "held-out corpus JSON")->check(CLI::ExistingFile);
    eval->add_option("--report-dir", a.report_dir, "output directory")->required();
    eval->add_option("--model", a.model, "model whose topology scopes the pair statistics")->check(CLI::ExistingFile);
    eval->add_option("--K", a.horizon, "pair-statistics horizon without --model")->check(CLI::NonNegativeNumber);
    eval->add_option("--L", a.cross_horizon, "pair-statistics cross horizon without --model")->check(CLI::NonNegativeNumber);
    eval->add_option("--bins-per-cycle", a.bins_per_cycle, "grid resolution for onset-list corpora")->check(CLI::PositiveNumber);

    auto* serve = app.add_subcommand("serve", "run the HTTP API");
    serve->add_option("--port", a.port, "TCP port")->required()->check(CLI::Range(1, 65535));
    serve->add_option("--model-dir", a.model_dir, "model directory (default $MAXPOLY_MODEL_DIR)");
    serve->add_option("--host", a.host, "bind address");
    serve->add_option("--queue-capacity", a.queue_capacity, "maximum waiting training jobs")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e, out, err);
        detail::print_error(err, "UsageError", e.what());
        return kExitUsage;
    }

    try {
        if (*train) return detail::run_train(a, out);
        if (*sample) return detail::run_sample(a, out);
        if (*reharm) return detail::run_reharmonize(a, out);
        if (*eval) return detail::run_evaluate(a, out);
        if (*serve) return detail::run_serve(a, out);
    } catch (const Error& e) {
        detail::print_error(err, e.kind(), e.what());
        return kExitDomain;
    } catch (const json::exception& e) {
        detail::print_error(err, "ParseError", e.what());
        return kExitDomain;
    } catch (const std::filesystem::filesystem_error& e) {
        detail::print_error(err, "IOError", e.what());
        return kExitDomain;
    }
    detail::print_error(err, "UsageError", "no subcommand");
    return kExitUsage;
}

}  // namespace maxpoly::cli

#endif  // MAXPOLY_CLI_HPP_
