#include <gtest/gtest.h>

#include <thread>

#include "maxpoly/http_server.hpp"
#include "maxpoly/service.hpp"
#include "support/oracles.hpp"
#include "support/tempdir.hpp"

using namespace maxpoly;
using namespace maxpoly::service;
using testing_support::TempDir;

namespace {

Model tiny_model(std::optional<Mode> mode, std::uint64_t seed = 1) {
    auto t = oracle::tiny_topology({4, 4}, 1, 1);
    auto base = oracle::random_model(t, seed, 0.5);
    std::vector<double> theta(base.theta().begin(), base.theta().end());
    ModelMetadata meta;
    meta.lambda = 1e-3;
    meta.mode = mode;
    return Model(t, theta, meta);
}

nlohmann::json body_of(const Response& r) { return nlohmann::json::parse(r.body); }

nlohmann::json small_corpus_json() {
    auto c = load_corpus(std::string(MAXPOLY_FIXTURE_DIR) + "/chorales.json");
    std::vector<Piece> few(c.pieces().begin(), c.pieces().begin() + 4);
    return corpus_to_json(c.voices(), few);
}

struct ApiFixture : ::testing::Test {
    TempDir dir;
    std::unique_ptr<Api> api;
    std::string id;

    void SetUp() override {
        ApiConfig cfg;
        cfg.model_dir = dir.path() / "models";
        cfg.max_steps = 100000;
        api = std::make_unique<Api>(cfg);
        id = api->store().put(tiny_model(std::nullopt));
    }
};

}  // namespace

TEST(JobStateMachine, Transitions) {
    using S = JobStatus;
    const S all[] = {S::queued, S::running, S::done, S::failed};
    for (S a : all) {
        for (S b : all) {
            bool legal = (a == S::queued && b == S::running) || (a == S::running && (b == S::done || b == S::failed));
            EXPECT_EQ(transition_allowed(a, b), legal);
        }
    }
    JobRecord r;
    EXPECT_THROW(r.advance(S::done), std::logic_error);
    r.advance(S::running);
    r.advance(S::failed);
    EXPECT_FALSE(r.finished.empty());
    EXPECT_THROW(r.advance(S::running), std::logic_error);
}

TEST(JobQueueTest, RunsToTerminalStates) {
    JobQueue q(4, 1);
    auto ok = q.submit("train", [] { return JobOutput{{"a.json"}, {{"model_id", "x"}}}; });
    auto bad = q.submit("train", []() -> JobOutput { throw ConfigError("boom"); });
    auto r1 = q.wait(ok, std::chrono::seconds(10));
    auto r2 = q.wait(bad, std::chrono::seconds(10));
    ASSERT_TRUE(r1 && r2);
    EXPECT_EQ(r1->status, JobStatus::done);
    EXPECT_EQ(r1->artifacts, std::vector<std::string>{"a.json"});
    EXPECT_EQ(r2->status, JobStatus::failed);
    EXPECT_EQ(r2->error, "boom");
    EXPECT_FALSE(q.get("job-99"));
}

TEST(JobQueueTest, CapacityIsEnforced) {
    JobQueue q(1, 1);
    std::mutex gate;
    gate.lock();
    auto blocker = q.submit("train", [&] {
        std::lock_guard g(gate);
        return JobOutput{};
    });
    // wait until the worker has taken the blocker off the queue
    for (int i = 0; i < 1000 && q.get(blocker)->status == JobStatus::queued; ++i)
        std::this_thread::sleep_for(std::chrono::milliseconds(1));
    q.submit("train", [] { return JobOutput{}; });
    EXPECT_THROW(q.submit("train", [] { return JobOutput{}; }), QueueFullError);
    gate.unlock();
}

TEST(ModelStoreTest, PutGetAndIds) {
    TempDir dir;
    ModelStore store(dir.path());
    auto m = tiny_model(Mode::major);
    auto id = store.put(m);
    EXPECT_EQ(id, model_id(m));
    EXPECT_EQ(store.put(m), id);
    EXPECT_EQ(store.ids(), std::vector<std::string>{id});
    EXPECT_EQ(*store.get(id), m);
    EXPECT_EQ(store.get("nope"), nullptr);
    EXPECT_FALSE(store.contains("../" + id));
}

TEST_F(ApiFixture, ListModels) {
    auto r = api->handle("GET", "/models", "");
    ASSERT_EQ(r.status, 200);
    auto j = body_of(r);
    ASSERT_EQ(j["models"].size(), 1u);
    EXPECT_EQ(j["models"][0]["id"], id);
    EXPECT_EQ(j["models"][0]["voices"], 2);
    EXPECT_TRUE(j["models"][0]["mode"].is_null());
}

TEST_F(ApiFixture, SampleIsDeterministic) {
    std::string req = R"({"length": 6, "seed": 9, "steps": 2000})";
    auto a = api->handle("POST", "/models/" + id + "/sample", req);
    auto b = api->handle("POST", "/models/" + id + "/sample", req);
    ASSERT_EQ(a.status, 200) << a.body;
    EXPECT_EQ(a.body, b.body);
    auto j = body_of(a);
    EXPECT_EQ(j["steps"], 2000);
    EXPECT_EQ(j["piece"]["grid"].size(), 2u);
    EXPECT_EQ(j["piece"]["grid"][0].size(), 6u);
    auto c = api->handle("POST", "/models/" + id + "/sample", R"({"length": 6, "seed": 10, "steps": 2000})");
    EXPECT_NE(a.body, c.body);
}

TEST_F(ApiFixture, SampleHonoursConstraints) {
    auto r = api->handle("POST", "/models/" + id + "/sample",
                         R"({"length": 5, "seed": 1, "steps": 3000, "constraints": {"pins": [[0, 2, 64]], "ranges": [[1, 0, [48, 50]]]}})");
    ASSERT_EQ(r.status, 200) << r.body;
    auto g = body_of(r)["piece"]["grid"];
    EXPECT_EQ(g[0][2], 64);
    EXPECT_TRUE(g[1][0] == 48 || g[1][0] == 50);
}

TEST_F(ApiFixture, ErrorMapping) {
    auto path = "/models/" + id + "/sample";
    auto expect = [&](const Response& r, int status, const std::string& kind) {
        EXPECT_EQ(r.status, status) << r.body;
        auto j = body_of(r);
        EXPECT_EQ(j["error"], kind) << r.body;
        EXPECT_TRUE(j["message"].is_string());
    };
    expect(api->handle("POST", path, R"({"length": 4, "constraints": {"pins": [[0, 1, 61]]}})"), 422, "ConstraintError");
    expect(api->handle("POST", path, R"({"length": 4, "constraints": {"pins": [[0, 9, 60]]}})"), 422, "ConstraintError");
    expect(api->handle("POST", path, "{not json"), 400, "ParseError");
    expect(api->handle("POST", path, R"({"seed": 1})"), 400, "ParseError");
    expect(api->handle("POST", path, R"({"length": 0})"), 400, "ConfigError");
    expect(api->handle("POST", path, R"({"length": 4, "steps": 100001})"), 400, "ConfigError");
    expect(api->handle("POST", "/models/unknown/sample", R"({"length": 4})"), 404, "NotFound");
    expect(api->handle("GET", "/jobs/job-404", ""), 404, "NotFound");
    expect(api->handle("DELETE", "/models", ""), 404, "NotFound");
    expect(api->handle("POST", "/models/" + id + "/reharmonize", R"({"melody": [61, 62]})"), 422, "AlphabetError");
}

TEST_F(ApiFixture, DefaultStepsAreCapped) {
    auto r = api->handle("POST", "/models/" + id + "/sample", R"({"length": 2000})");
    ASSERT_EQ(r.status, 200) << r.body;
    EXPECT_EQ(body_of(r)["steps"], 100000);
}

TEST_F(ApiFixture, Reharmonize) {
    auto r = api->handle("POST", "/models/" + id + "/reharmonize",
                         R"({"melody": [60, 62, 64, 66, 64], "seed": 4, "steps": 4000,
                             "keytrack": [[0,0,"major"],[1,0,"major"],[2,0,"major"],[3,0,"major"],[4,0,"major"]]})");
    ASSERT_EQ(r.status, 200) << r.body;
    auto j = body_of(r);
    EXPECT_EQ(j["piece"]["grid"][0], nlohmann::json::parse("[60, 62, 64, 66, 64]"));
    EXPECT_EQ(j["keytrack"].size(), 5u);
    EXPECT_EQ(j["steps"], 4000);

    auto melody_corpus = R"({"melody": {"voices": 1, "pieces": [{"id": "m", "mode": "major", "original_key": 0, "grid": [[60, 62]]}]},
                             "seed": 4, "steps": 500})";
    EXPECT_EQ(api->handle("POST", "/models/" + id + "/reharmonize", melody_corpus).status, 200);
}

TEST_F(ApiFixture, ReharmonizeNeedsModelForEveryMode) {
    auto major_id = api->store().put(tiny_model(Mode::major, 2));
    auto r = api->handle("POST", "/models/" + major_id + "/reharmonize",
                         R"({"melody": [60, 62], "steps": 100, "keytrack": [[0,0,"minor"],[1,0,"minor"]]})");
    EXPECT_EQ(r.status, 422);
    EXPECT_EQ(body_of(r)["error"], "MissingModelError");
    auto minor_id = api->store().put(tiny_model(Mode::minor, 3));
    r = api->handle("POST", "/models/" + major_id + "/reharmonize",
                    R"({"melody": [60, 62], "steps": 100, "keytrack": [[0,0,"major"],[1,0,"minor"]]})");
    EXPECT_EQ(r.status, 200) << r.body;
    (void)minor_id;
}

TEST_F(ApiFixture, TrainingJobLifecycle) {
    nlohmann::json req{{"corpus", small_corpus_json()}, {"config", {{"K", 1}, {"L", 0}, {"lambda", 1e-3}, {"mode", "major"}}}};
    auto r = api->handle("POST", "/jobs/train", req.dump());
    ASSERT_EQ(r.status, 202) << r.body;
    std::string job = body_of(r)["id"];
    auto rec = api->jobs().wait(job, std::chrono::minutes(5));
    ASSERT_TRUE(rec);
    ASSERT_EQ(rec->status, JobStatus::done) << rec->error;
    auto status = body_of(api->handle("GET", "/jobs/" + job, ""));
    EXPECT_EQ(status["status"], "done");
    std::string mid = status["result"]["model_id"];
    EXPECT_TRUE(api->store().contains(mid));
    auto m = api->store().get(mid);
    EXPECT_EQ(m->topology().horizon, 1);
    EXPECT_EQ(m->metadata().mode, Mode::major);

    auto bad = api->handle("POST", "/jobs/train", R"({"corpus": {"voices": 1, "pieces": []}, "config": {"K": 1, "L": 2}})");
    EXPECT_EQ(bad.status, 400);
}

TEST(ApiQueue, FullQueueIs503) {
    TempDir dir;
    ApiConfig cfg;
    cfg.model_dir = dir.path();
    cfg.queue_capacity = 0;
    Api api(cfg);
    nlohmann::json req{{"corpus", small_corpus_json()}, {"config", {{"K", 1}, {"L", 0}}}};
    auto r = api.handle("POST", "/jobs/train", req.dump());
    EXPECT_EQ(r.status, 503);
    EXPECT_EQ(body_of(r)["error"], "QueueFullError");
}

TEST_F(ApiFixture, HttpRoundTrip) {
    httplib::Server server;
    mount(server, *api);
    int port = server.bind_to_any_port("127.0.0.1");
    ASSERT_GT(port, 0);
    std::thread t([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    httplib::Client client("127.0.0.1", port);
    auto models = client.Get("/models");
    ASSERT_TRUE(models);
    EXPECT_EQ(models->status, 200);
    EXPECT_EQ(models->get_header_value("Access-Control-Allow-Origin"), "*");
    EXPECT_EQ(nlohmann::json::parse(models->body)["models"][0]["id"], id);

    std::string body = R"({"length": 4, "seed": 3, "steps": 1000})";
    auto s = client.Post("/models/" + id + "/sample", body, "application/json");
    ASSERT_TRUE(s);
    EXPECT_EQ(s->status, 200);
    EXPECT_EQ(s->body, api->handle("POST", "/models/" + id + "/sample", body).body);

    auto bad = client.Post("/models/" + id + "/sample", R"({"length": 4, "constraints": {"pins": [[0, 0, 99]]}})",
                           "application/json");
    ASSERT_TRUE(bad);
    EXPECT_EQ(bad->status, 422);

    auto pre = client.Options("/models");
    ASSERT_TRUE(pre);
    EXPECT_EQ(pre->status, 204);

    server.stop();
    t.join();
}
