#ifndef MAXPOLY_MODEL_IO_HPP_
#define MAXPOLY_MODEL_IO_HPP_

#include <string>

#include <json.hpp>

#include "maxpoly/model.hpp"
#include "maxpoly/util.hpp"

namespace maxpoly {

inline constexpr int kModelFormatVersion = 1;

inline nlohmann::json topology_to_json(const Topology& t) {
    nlohmann::json j;
    j["n"] = t.voices;
    j["K"] = t.horizon;
    j["L"] = t.cross_horizon;
    j["alphabets"] = nlohmann::json::array();
    for (const auto& a : t.alphabets) {
        auto row = nlohmann::json::array();
        for (Symbol s : a) row.push_back(symbol_to_json(s));
        j["alphabets"].push_back(std::move(row));
    }
    j["rhythm"] = t.bins_per_cycle ? nlohmann::json{{"bins_per_cycle", *t.bins_per_cycle}} : nlohmann::json(nullptr);
    if (t.unary_only) j["unary_only"] = true;
    return j;
}

inline Topology topology_from_json(const nlohmann::json& j) {
    Topology t;
    t.voices = j.at("n").get<std::size_t>();
    t.horizon = j.at("K").get<int>();
    t.cross_horizon = j.at("L").get<int>();
    for (const auto& row : j.at("alphabets")) {
        Alphabet a;
        for (const auto& c : row) a.push_back(symbol_from_json(c));
        t.alphabets.push_back(std::move(a));
    }
    if (j.contains("rhythm") && !j["rhythm"].is_null()) t.bins_per_cycle = j["rhythm"].at("bins_per_cycle").get<int>();
    t.unary_only = j.value("unary_only", false);
    try {
        t.validate();
    } catch (const ConfigError& e) {
        throw ValidationError(e.what());
    }
    return t;
}

inline nlohmann::json metadata_to_json(const ModelMetadata& m) {
    nlohmann::json j = m.extra.is_object() ? m.extra : nlohmann::json::object();
    j["lambda"] = m.lambda;
    j["corpus_fingerprint"] = m.corpus_fingerprint;
    j["mode"] = m.mode ? nlohmann::json(to_string(*m.mode)) : nlohmann::json(nullptr);
    return j;
}

inline ModelMetadata metadata_from_json(const nlohmann::json& j) {
    ModelMetadata m;
    if (!j.is_object()) return m;
    m.extra = j;
    if (j.contains("lambda")) m.lambda = j["lambda"].get<double>();
    if (j.contains("corpus_fingerprint")) m.corpus_fingerprint = j["corpus_fingerprint"].get<std::string>();
    if (j.contains("mode") && !j["mode"].is_null()) m.mode = mode_from_string(j["mode"].get<std::string>());
    m.extra.erase("lambda");
    m.extra.erase("corpus_fingerprint");
    m.extra.erase("mode");
    return m;
}

inline nlohmann::json model_to_json(const Model& model) {
    nlohmann::json j;
    j["version"] = kModelFormatVersion;
    j["topology"] = topology_to_json(model.topology());
    const ParameterVector p = model.params();
    j["params"] = nlohmann::json::array();
    for (const auto& [f, v] : p.pairs) {
        j["params"].push_back({symbol_to_json(f.a), symbol_to_json(f.b), f.i, f.j, f.k, v});
    }
    if (model.topology().rhythm()) {
        j["position_fields"] = nlohmann::json::array();
        for (const auto& [key, v] : p.position_fields) {
            j["position_fields"].push_back({key.voice, symbol_to_json(key.symbol), key.position, v});
        }
    } else {
        j["position_fields"] = nullptr;
    }
    j["metadata"] = metadata_to_json(model.metadata());
    return j;
}

inline Model model_from_json(const nlohmann::json& j) {
    try {
        if (!j.is_object()) throw ParseError("model must be a JSON object");
        if (!j.contains("version") || !j["version"].is_number_integer() || j["version"].get<int>() != kModelFormatVersion) {
            throw VersionError("unsupported model format version");
        }
        Topology topo = topology_from_json(j.at("topology"));
        ParameterVector params;
        for (const auto& e : j.at("params")) {
            if (!e.is_array() || e.size() != 6) throw ParseError("param entry must be [a, b, i, j, k, value]");
            FeatureIndex f{symbol_from_json(e[0]), symbol_from_json(e[1]), e[2].get<int>(), e[3].get<int>(), e[4].get<int>()};
            params.pairs[f] = e[5].get<double>();
        }
        if (j.contains("position_fields") && !j["position_fields"].is_null()) {
            for (const auto& e : j["position_fields"]) {
                if (!e.is_array() || e.size() != 4) throw ParseError("position field must be [voice, symbol, position, value]");
                params.position_fields[PositionFieldKey{e[0].get<int>(), symbol_from_json(e[1]), e[2].get<int>()}] =
                    e[3].get<double>();
            }
        }
        return Model(topo, params, metadata_from_json(j.value("metadata", nlohmann::json::object())));
    } catch (const nlohmann::json::exception& ex) {
        throw ParseError(std::string("malformed model: ") + ex.what());
    }
}

inline void save_model(const Model& model, const std::string& path) { write_file(path, model_to_json(model).dump(1)); }

inline Model load_model(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& ex) {
        throw ParseError(path + ": " + ex.what());
    }
    return model_from_json(j);
}

}  // namespace maxpoly

#endif  // MAXPOLY_MODEL_IO_HPP_
