#ifndef MAXPOLY_HTTP_SERVER_HPP_
#define MAXPOLY_HTTP_SERVER_HPP_

#include <string>

#include <httplib.h>

#include "maxpoly/service.hpp"

namespace maxpoly::service {

/// Routes every request through `api`. The caller owns the server lifetime.
inline void mount(httplib::Server& server, Api& api) {
    auto forward = [&api](const httplib::Request& req, httplib::Response& res) {
        auto r = api.handle(req.method, req.path, req.body);
        res.status = r.status;
        res.set_content(r.body, "application/json");
        res.set_header("Access-Control-Allow-Origin", "*");
    };
    server.Get("/models", forward);
    server.Post(R"(/models/[^/]+/(sample|reharmonize))", forward);
    server.Post("/jobs/train", forward);
    server.Get(R"(/jobs/[^/]+)", forward);
    server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) {
        res.set_header("Access-Control-Allow-Origin", "*");
        res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
        res.status = 204;
    });
}

/// Blocks serving on host:port until the server is stopped.
inline bool serve(Api& api, const std::string& host, int port) {
    httplib::Server server;
    mount(server, api);
    return server.listen(host, port);
}

}  // namespace maxpoly::service

#endif  // MAXPOLY_HTTP_SERVER_HPP_
