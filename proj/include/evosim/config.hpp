#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "evosim/engine.hpp"
#include "evosim/http_provider.hpp"

namespace evosim {

struct ProviderChoice {
    std::string kind = "scripted";  // scripted | http
    std::string script_path;        // scripted only
    HttpProviderSettings http;      // http only
};

struct LoadedConfig {
    SimulationConfig sim;
    ProviderChoice provider;
};

namespace detail {

inline Pressure pressure_from_string(const std::string& s) {
    if (s == "direct") return Pressure::direct;
    if (s == "indirect") return Pressure::indirect;
    if (s == "abstract") return Pressure::abstract_;
    throw EvoError(errc::config_schema, "unknown pressure level: " + s);
}

template <typename T>
T field(const nlohmann::json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw EvoError(errc::config_schema, std::string("field '") + key + "' has the wrong type");
    }
}

template <typename T>
T required_field(const nlohmann::json& j, const char* key) {
    if (!j.contains(key))
        throw EvoError(errc::config_schema, std::string("missing required field '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw EvoError(errc::config_schema, std::string("field '") + key + "' has the wrong type");
    }
}

}  // namespace detail

// Parses and validates a scenario config document. Relative scripted paths
// are resolved against base_dir.
inline LoadedConfig config_from_json(const nlohmann::json& doc, const std::string& base_dir = ".") {
    if (!doc.is_object()) throw EvoError(errc::config_schema, "config must be a JSON object");
    LoadedConfig out;
    ScenarioSpec& spec = out.sim.scenario;

    spec.kind = scenario_kind_from_string(detail::required_field<std::string>(doc, "scenario"));
    if (!doc.contains("participants") || !doc["participants"].is_array())
        throw EvoError(errc::config_schema, "config needs a 'participants' array");
    for (const auto& pj : doc["participants"]) {
        AgentProfile p;
        p.agent_id = detail::required_field<std::string>(pj, "id");
        p.display_name = detail::field<std::string>(pj, "name", p.agent_id);
        p.role_kind = RoleKind::participant;
        p.background = detail::required_field<std::string>(pj, "background");
        if (!pj.contains("secret"))
            throw EvoError(errc::config_schema, "participant '" + p.agent_id + "' needs a 'secret'");
        p.secret_payload = pj.at("secret");
        spec.participants.push_back(std::move(p));
    }

    const auto& gj = doc.contains("guideline") ? doc.at("guideline") : nlohmann::json();
    if (!gj.is_object()) throw EvoError(errc::config_schema, "config needs a 'guideline' object");
    spec.guideline.rule_text = detail::required_field<std::string>(gj, "rule");
    spec.guideline.keywords = detail::field<std::vector<std::string>>(gj, "keywords", {});
    spec.guideline.pressure =
        detail::pressure_from_string(detail::field<std::string>(gj, "pressure", "direct"));

    spec.turns_per_round = detail::field<int>(doc, "turns_per_round", 4);
    spec.target_replies = detail::field<int>(doc, "target_replies", 10);
    spec.evolution_rounds = detail::field<int>(doc, "evolution_rounds", 1);
    spec.reflection_threshold = detail::field<int>(doc, "reflection_threshold", 1);

    EngineSettings& settings = out.sim.settings;
    settings.review_cumulative = detail::field<bool>(doc, "review_cumulative", false);
    settings.attempt_cap_factor = detail::field<int>(doc, "attempt_cap_factor", 20);
    if (settings.attempt_cap_factor < 1)
        throw EvoError(errc::config_schema, "attempt_cap_factor must be >= 1");
    if (doc.contains("memory")) {
        const auto& mj = doc.at("memory");
        settings.memory.history_chars = detail::field<int>(mj, "history_chars", 6000);
        settings.memory.log_chars = detail::field<int>(mj, "log_chars", 4000);
        settings.memory.keep_last_turns = detail::field<int>(mj, "keep_last_turns", 2);
    }
    if (settings.memory.history_chars < 1 || settings.memory.log_chars < 1 ||
        settings.memory.keep_last_turns < 1)
        throw EvoError(errc::config_schema, "memory limits must be positive");

    if (doc.contains("provider")) {
        const auto& pj = doc.at("provider");
        out.provider.kind = detail::field<std::string>(pj, "kind", "scripted");
        if (out.provider.kind != "scripted" && out.provider.kind != "http")
            throw EvoError(errc::config_schema, "provider kind must be scripted or http");
        if (pj.contains("script")) {
            std::filesystem::path script = pj.at("script").get<std::string>();
            if (script.is_relative()) script = std::filesystem::path(base_dir) / script;
            out.provider.script_path = script.string();
        }
        out.provider.http.endpoint =
            detail::field<std::string>(pj, "endpoint", out.provider.http.endpoint);
        out.provider.http.model = detail::field<std::string>(pj, "model", out.provider.http.model);
        settings.participant_gen.temperature = detail::field<double>(pj, "temperature_participant", 0.7);
        settings.supervisor_temperature = detail::field<double>(pj, "temperature_supervisor", 0.0);
        settings.participant_gen.max_tokens = detail::field<int>(pj, "max_tokens", 512);
        settings.supervisor_max_tokens = settings.participant_gen.max_tokens;
        for (double t : {settings.participant_gen.temperature, settings.supervisor_temperature})
            if (t < 0.0 || t > 2.0)
                throw EvoError(errc::config_schema, "temperature must lie in [0,2]");
        if (settings.participant_gen.max_tokens < 1)
            throw EvoError(errc::config_schema, "max_tokens must be >= 1");
        if (pj.contains("retry")) {
            const auto& rj = pj.at("retry");
            out.provider.http.retry.max_attempts = detail::field<int>(rj, "max_attempts", 3);
            out.provider.http.retry.base_delay =
                std::chrono::milliseconds(detail::field<int>(rj, "base_delay_ms", 500));
            out.provider.http.retry.multiplier = detail::field<double>(rj, "multiplier", 2.0);
            out.provider.http.timeout =
                std::chrono::seconds(detail::field<int>(rj, "timeout_s", 60));
            if (out.provider.http.retry.max_attempts < 1)
                throw EvoError(errc::config_schema, "retry max_attempts must be >= 1");
        }
    }

    out.sim.seed = detail::field<std::uint64_t>(doc, "seed", 0);
    out.provider.http.seed = out.sim.seed;
    out.sim.snapshot = doc;

    validate_scenario(spec);
    return out;
}

inline LoadedConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw EvoError(errc::io, "cannot open config: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw EvoError(errc::config_schema, "config parse failure: " + std::string(e.what()));
    }
    return config_from_json(doc, std::filesystem::path(path).parent_path().string());
}

}  // namespace evosim
