#ifndef MAXPOLY_SERVICE_HPP_
#define MAXPOLY_SERVICE_HPP_

#include <chrono>
#include <condition_variable>
#include <ctime>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "maxpoly/corpus.hpp"
#include "maxpoly/harmonizer.hpp"
#include "maxpoly/model_io.hpp"
#include "maxpoly/sampler.hpp"
#include "maxpoly/trainer.hpp"

namespace maxpoly::service {

using nlohmann::json;

inline std::string utc_timestamp() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// ---------------------------------------------------------------------------
// Models: content-addressed JSON files in one directory.

inline std::string model_id(const Model& m) { return hex64(fnv1a64(model_to_json(m).dump())); }

inline json model_summary(const std::string& id, const Model& m) {
    const auto& t = m.topology();
    json alphabets = json::array();
    for (const auto& a : t.alphabets) {
        json row = json::array();
        for (Symbol s : a) row.push_back(symbol_to_json(s));
        alphabets.push_back(std::move(row));
    }
    return {{"id", id},
            {"voices", t.voices},
            {"K", t.horizon},
            {"L", t.cross_horizon},
            {"alphabets", std::move(alphabets)},
            {"bins_per_cycle", t.bins_per_cycle ? json(*t.bins_per_cycle) : json(nullptr)},
            {"mode", m.metadata().mode ? json(to_string(*m.metadata().mode)) : json(nullptr)},
            {"lambda", m.metadata().lambda}};
}

class ModelStore {
public:
    explicit ModelStore(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::filesystem::create_directories(dir_);
    }

    const std::filesystem::path& dir() const { return dir_; }

    std::vector<std::string> ids() const {
        std::vector<std::string> out;
        for (const auto& e : std::filesystem::directory_iterator(dir_)) {
            if (e.is_regular_file() && e.path().extension() == ".json") out.push_back(e.path().stem().string());
        }
        std::sort(out.begin(), out.end());
        return out;
    }

    bool contains(const std::string& id) const {
        if (id.empty() || id.find_first_of("/\\.") != std::string::npos) return false;
        return std::filesystem::is_regular_file(path_of(id));
    }

    std::shared_ptr<const Model> get(const std::string& id) const {
        std::lock_guard lock(mu_);
        if (auto it = cache_.find(id); it != cache_.end()) return it->second;
        if (!contains(id)) return nullptr;
        auto m = std::make_shared<const Model>(load_model(path_of(id).string()));
        cache_[id] = m;
        return m;
    }

    std::string put(const Model& m) {
        std::string id = model_id(m);
        std::lock_guard lock(mu_);
        auto path = path_of(id);
        if (!std::filesystem::exists(path)) {
            auto tmp = path;
            tmp += ".tmp";
            save_model(m, tmp.string());
            std::filesystem::rename(tmp, path);
        }
        return id;
    }

    std::filesystem::path path_of(const std::string& id) const { return dir_ / (id + ".json"); }

private:
    std::filesystem::path dir_;
    mutable std::mutex mu_;
    mutable std::map<std::string, std::shared_ptr<const Model>> cache_;
};

// ---------------------------------------------------------------------------
// Jobs

enum class JobStatus { queued, running, done, failed };

inline std::string to_string(JobStatus s) {
    switch (s) {
        case JobStatus::queued: return "queued";
        case JobStatus::running: return "running";
        case JobStatus::done: return "done";
        case JobStatus::failed: return "failed";
    }
    return "?";
}

inline bool is_terminal(JobStatus s) { return s == JobStatus::done || s == JobStatus::failed; }

inline bool transition_allowed(JobStatus from, JobStatus to) {
    return (from == JobStatus::queued && to == JobStatus::running) ||
           (from == JobStatus::running && (to == JobStatus::done || to == JobStatus::failed));
}

struct JobRecord {
    std::string id;
    std::string kind;  // train | sample | reharmonize | evaluate
    JobStatus status = JobStatus::queued;
    std::string created;
    std::string finished;
    std::vector<std::string> artifacts;
    std::string error;
    json result;  // e.g. {"model_id": ...}

    void advance(JobStatus to) {
        if (!transition_allowed(status, to)) {
            throw std::logic_error("job " + id + ": illegal transition " + to_string(status) + " -> " + to_string(to));
        }
        status = to;
        if (is_terminal(to)) finished = utc_timestamp();
    }

    json to_json() const {
        return {{"id", id},
                {"kind", kind},
                {"status", to_string(status)},
                {"created", created},
                {"finished", finished.empty() ? json(nullptr) : json(finished)},
                {"artifacts", artifacts},
                {"error", error.empty() ? json(nullptr) : json(error)},
                {"result", result}};
    }
};

class QueueFullError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "QueueFullError"; }
};

struct JobOutput {
    std::vector<std::string> artifacts;
    json result;
};

/// FIFO of background jobs run by `workers` threads; at most `capacity`
/// jobs may wait at once.
class JobQueue {
public:
    using Task = std::function<JobOutput()>;

    explicit JobQueue(std::size_t capacity = 4, std::size_t workers = 1) : capacity_(capacity) {
        for (std::size_t w = 0; w < std::max<std::size_t>(1, workers); ++w) threads_.emplace_back([this] { work(); });
    }

    ~JobQueue() {
        {
            std::lock_guard lock(mu_);
            stopping_ = true;
        }
        cv_.notify_all();
        for (auto& t : threads_) t.join();
    }

    JobQueue(const JobQueue&) = delete;
    JobQueue& operator=(const JobQueue&) = delete;

    std::string submit(const std::string& kind, Task task) {
        std::lock_guard lock(mu_);
        if (pending_.size() >= capacity_) throw QueueFullError("job queue is full");
        JobRecord r;
        r.id = "job-" + std::to_string(++counter_);
        r.kind = kind;
        r.created = utc_timestamp();
        jobs_[r.id] = r;
        pending_.push_back({r.id, std::move(task)});
        cv_.notify_one();
        return r.id;
    }

    std::optional<JobRecord> get(const std::string& id) const {
        std::lock_guard lock(mu_);
        auto it = jobs_.find(id);
        if (it == jobs_.end()) return std::nullopt;
        return it->second;
    }

    /// Blocks until the job is terminal or the timeout passes.
    std::optional<JobRecord> wait(const std::string& id, std::chrono::milliseconds timeout) const {
        std::unique_lock lock(mu_);
        done_cv_.wait_for(lock, timeout, [&] {
            auto it = jobs_.find(id);
            return it == jobs_.end() || is_terminal(it->second.status);
        });
        auto it = jobs_.find(id);
        if (it == jobs_.end()) return std::nullopt;
        return it->second;
    }

private:
    void work() {
        for (;;) {
            std::pair<std::string, Task> item;
            {
                std::unique_lock lock(mu_);
                cv_.wait(lock, [&] { return stopping_ || !pending_.empty(); });
                if (stopping_ && pending_.empty()) return;
                item = std::move(pending_.front());
                pending_.pop_front();
                jobs_[item.first].advance(JobStatus::running);
            }
            JobOutput out;
            std::string err;
            bool ok = true;
            try {
                out = item.second();
            } catch (const std::exception& e) {
                ok = false;
                err = e.what();
            }
            {
                std::lock_guard lock(mu_);
                auto& r = jobs_[item.first];
                if (ok) {
                    r.artifacts = std::move(out.artifacts);
                    r.result = std::move(out.result);
                    r.advance(JobStatus::done);
                } else {
                    r.error = err;
                    r.advance(JobStatus::failed);
                }
            }
            done_cv_.notify_all();
        }
    }

    std::size_t capacity_;
    mutable std::mutex mu_;
    std::condition_variable cv_;
    mutable std::condition_variable done_cv_;
    std::deque<std::pair<std::string, Task>> pending_;
    std::map<std::string, JobRecord> jobs_;
    std::vector<std::thread> threads_;
    std::size_t counter_ = 0;
    bool stopping_ = false;
};

// ---------------------------------------------------------------------------
// JSON API

struct ApiConfig {
    std::filesystem::path model_dir = "models";
    std::size_t queue_capacity = 4;
    std::size_t training_workers = 1;
    std::uint64_t max_steps = 50'000'000;  // per sampling request
};

struct Response {
    int status = 200;
    std::string body;
};

class Api {
public:
    explicit Api(ApiConfig cfg)
        : cfg_(std::move(cfg)), store_(cfg_.model_dir), jobs_(cfg_.queue_capacity, cfg_.training_workers) {}

    ModelStore& store() { return store_; }
    JobQueue& jobs() { return jobs_; }

    Response handle(const std::string& method, const std::string& path, const std::string& body) {
        try {
            auto parts = split_path(path);
            if (method == "GET" && parts == std::vector<std::string>{"models"}) return list_models();
            if (method == "POST" && parts.size() == 3 && parts[0] == "models") {
                if (parts[2] == "sample") return sample(parts[1], parse_body(body));
                if (parts[2] == "reharmonize") return reharmonize(parts[1], parse_body(body));
            }
            if (method == "POST" && parts == std::vector<std::string>{"jobs", "train"}) return submit_training(parse_body(body));
            if (method == "GET" && parts.size() == 2 && parts[0] == "jobs") {
                auto r = jobs_.get(parts[1]);
                if (!r) return error(404, "NotFound", "unknown job " + parts[1]);
                return ok(r->to_json());
            }
            return error(404, "NotFound", "no route for " + method + " " + path);
        } catch (const QueueFullError& e) {
            return error(503, e.kind(), e.what());
        } catch (const ConstraintError& e) {
            return error(422, e.kind(), e.what());
        } catch (const AlphabetError& e) {
            return error(422, e.kind(), e.what());
        } catch (const MissingModelError& e) {
            return error(422, e.kind(), e.what());
        } catch (const FullyPinnedError& e) {
            return error(422, e.kind(), e.what());
        } catch (const ParseError& e) {
            return error(400, e.kind(), e.what());
        } catch (const ConfigError& e) {
            return error(400, e.kind(), e.what());
        } catch (const ShapeError& e) {
            return error(400, e.kind(), e.what());
        } catch (const json::exception& e) {
            return error(400, "ParseError", e.what());
        } catch (const Error& e) {
            return error(500, e.kind(), e.what());
        } catch (const std::exception& e) {
            return error(500, "InternalError", e.what());
        }
    }

private:
    static std::vector<std::string> split_path(const std::string& path) {
        std::vector<std::string> out;
        std::string cur;
        for (char c : path.substr(0, path.find('?'))) {
            if (c == '/') {
                if (!cur.empty()) out.push_back(std::move(cur));
                cur.clear();
            } else {
                cur += c;
            }
        }
        if (!cur.empty()) out.push_back(std::move(cur));
        return out;
    }

    static json parse_body(const std::string& body) {
        try {
            auto j = json::parse(body.empty() ? "{}" : body);
            if (!j.is_object()) throw ParseError("request body must be a JSON object");
            return j;
        } catch (const json::parse_error& e) {
            throw ParseError(std::string("malformed JSON body: ") + e.what());
        }
    }

    static Response ok(const json& j) { return Response{200, j.dump()}; }

    static Response error(int status, const std::string& kind, const std::string& message) {
        return Response{status, json{{"error", kind}, {"message", message}}.dump()};
    }

    Response list_models() {
        json out = json::array();
        for (const auto& id : store_.ids()) {
            try {
                if (auto m = store_.get(id)) out.push_back(model_summary(id, *m));
            } catch (const Error&) {
                // unreadable files are skipped
            }
        }
        return ok(json{{"models", out}});
    }

    std::shared_ptr<const Model> require_model(const std::string& id) {
        auto m = store_.get(id);
        if (!m) throw NotFound("unknown model " + id);
        return m;
    }

    struct NotFound : std::runtime_error {
        using std::runtime_error::runtime_error;
    };

    SamplerConfig sampler_config(const json& body, const Topology& topo, std::size_t length) const {
        SamplerConfig sc;
        sc.seed = body.value("seed", std::uint64_t{0});
        if (body.contains("steps") && !body["steps"].is_null()) {
            auto steps = body["steps"].get<long long>();
            if (steps < 1) throw ConfigError("steps must be positive");
            sc.total_steps = static_cast<std::uint64_t>(steps);
        } else {
            sc.total_steps = std::min(cfg_.max_steps, default_step_budget(topo, length));
        }
        if (*sc.total_steps > cfg_.max_steps) {
            throw ConfigError("steps exceed the per-request budget of " + std::to_string(cfg_.max_steps));
        }
        if (body.contains("burn_in")) sc.burn_in = body["burn_in"].get<std::uint64_t>();
        if (body.contains("thinning")) sc.thinning = body["thinning"].get<std::uint64_t>();
        return sc;
    }

    static Piece output_piece(const std::string& id, const Model& m, ChordSequence grid) {
        Piece p;
        p.id = id;
        p.mode = m.metadata().mode.value_or(Mode::major);
        p.original_key = 0;
        p.grid = std::move(grid);
        return p;
    }

    Response sample(const std::string& id, const json& body) {
        std::shared_ptr<const Model> m;
        try {
            m = require_model(id);
        } catch (const NotFound& e) {
            return error(404, "NotFound", e.what());
        }
        if (!body.contains("length")) throw ParseError("missing \"length\"");
        auto length = body["length"].get<long long>();
        if (length < 1) throw ConfigError("length must be positive");
        auto constraints = ConstraintSet::from_json(body.value("constraints", json(nullptr)));
        auto sc = sampler_config(body, m->topology(), static_cast<std::size_t>(length));
        auto res = run(*m, static_cast<std::size_t>(length), constraints, sc);
        auto piece = output_piece(id + "-sample-" + std::to_string(sc.seed), *m, std::move(res.sequence));
        return ok(json{{"piece", piece_to_json(piece)},
                       {"voices", m->topology().voices},
                       {"steps", res.steps},
                       {"accepted", res.accepted}});
    }

    // The requested model serves its own mode; the other mode comes from the
    // first stored model with that mode and the same voice count.
    std::map<Mode, Model> harmonization_models(const std::string& id, const Model& primary) {
        std::map<Mode, Model> out;
        if (!primary.metadata().mode) {
            out.emplace(Mode::major, primary);
            out.emplace(Mode::minor, primary);
            return out;
        }
        out.emplace(*primary.metadata().mode, primary);
        for (const auto& other : store_.ids()) {
            if (other == id) continue;
            std::shared_ptr<const Model> m;
            try {
                m = store_.get(other);
            } catch (const Error&) {
                continue;
            }
            if (!m || !m->metadata().mode || m->topology().voices != primary.topology().voices) continue;
            out.emplace(*m->metadata().mode, *m);
        }
        return out;
    }

    static std::vector<Symbol> melody_from_json(const json& j) {
        std::vector<Symbol> melody;
        if (j.is_array()) {
            for (const auto& x : j) melody.push_back(symbol_from_json(x));
        } else if (j.is_object()) {
            auto c = corpus_from_json(j);
            if (c.voices() != 1 || c.pieces().size() != 1) throw ParseError("melody corpus must hold one 1-row piece");
            auto row = c.pieces().front().grid.row(0);
            melody.assign(row.begin(), row.end());
        } else {
            throw ParseError("melody must be a symbol array or a one-piece corpus");
        }
        return melody;
    }

    Response reharmonize(const std::string& id, const json& body) {
        std::shared_ptr<const Model> m;
        try {
            m = require_model(id);
        } catch (const NotFound& e) {
            return error(404, "NotFound", e.what());
        }
        if (!body.contains("melody")) throw ParseError("missing \"melody\"");
        HarmonizationRequest req;
        req.melody = melody_from_json(body["melody"]);
        req.melody_voice = body.value("voice", std::size_t{0});
        req.constraints = ConstraintSet::from_json(body.value("constraints", json(nullptr)));
        if (body.contains("keytrack") && !body["keytrack"].is_null()) req.keys = keytrack_from_json(body["keytrack"]);
        req.sampler = sampler_config(body, m->topology(), req.melody.size());
        auto models = harmonization_models(id, *m);
        auto h = maxpoly::reharmonize(req, models);
        auto piece = output_piece(id + "-reharmonized-" + std::to_string(req.sampler.seed), *m, std::move(h.sequence));
        return ok(json{{"piece", piece_to_json(piece)},
                       {"voices", m->topology().voices},
                       {"keytrack", keytrack_to_json(h.keys)},
                       {"steps", h.chain.steps},
                       {"accepted", h.chain.accepted}});
    }

    Response submit_training(const json& body) {
        if (!body.contains("corpus")) throw ParseError("missing \"corpus\"");
        auto cfg = TrainingConfig::from_json(body.value("config", json::object()));
        LoadOptions lo;
        if (cfg.bins_per_cycle && body["corpus"].contains("pieces") && !body["corpus"]["pieces"].empty() &&
            body["corpus"]["pieces"][0].contains("events")) {
            lo.format = CorpusFormat::events;
            lo.bins_per_cycle = *cfg.bins_per_cycle;
        }
        auto corpus = transpose_to_c(corpus_from_json(body["corpus"], lo));
        auto id = jobs_.submit("train", [this, corpus = std::move(corpus), cfg] {
            auto model = fit(corpus, cfg);
            auto mid = store_.put(model);
            return JobOutput{{store_.path_of(mid).string()}, json{{"model_id", mid}}};
        });
        return Response{202, json{{"id", id}}.dump()};
    }

    ApiConfig cfg_;
    ModelStore store_;
    JobQueue jobs_;
};

}  // namespace maxpoly::service

#endif  // MAXPOLY_SERVICE_HPP_
