#pragma once

#include <deque>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "evosim/errors.hpp"
#include "evosim/provider.hpp"

namespace evosim {

// Tag pattern for scripted lookup. Unset fields are wildcards; specificity is
// the number of set fields.
struct TagPattern {
    std::optional<std::string> agent_id;
    std::optional<std::string> module_name;
    std::optional<int> round_index;
    std::optional<int> turn_index;

    int specificity() const {
        return (agent_id ? 1 : 0) + (module_name ? 1 : 0) + (round_index ? 1 : 0) +
               (turn_index ? 1 : 0);
    }

    bool matches(const CallTag& tag) const {
        if (agent_id && *agent_id != tag.agent_id) return false;
        if (module_name && *module_name != tag.module_name) return false;
        if (round_index && *round_index != tag.round_index) return false;
        if (turn_index && *turn_index != tag.turn_index) return false;
        return true;
    }
};

struct ScriptRule {
    TagPattern match;
    std::deque<std::string> responses;
};

// Deterministic response script. Among matching rules with responses left,
// the most specific wins (ties by declaration order) and one queue entry is
// consumed. When no such rule exists the default response, if any, is served.
struct ScriptBook {
    std::vector<ScriptRule> entries;
    std::optional<std::string> default_response;

    static ScriptBook from_json(const nlohmann::json& doc);
    static ScriptBook load_file(const std::string& path);
};

inline ScriptBook ScriptBook::from_json(const nlohmann::json& doc) {
    ScriptBook book;
    if (!doc.is_object())
        throw EvoError(errc::config_schema, "script book must be a JSON object");
    if (doc.contains("default")) {
        if (!doc["default"].is_string())
            throw EvoError(errc::config_schema, "script book 'default' must be a string");
        book.default_response = doc["default"].get<std::string>();
    }
    if (!doc.contains("entries") || !doc["entries"].is_array())
        throw EvoError(errc::config_schema, "script book needs an 'entries' array");
    for (const auto& item : doc["entries"]) {
        ScriptRule rule;
        if (item.contains("match")) {
            const auto& m = item["match"];
            if (m.contains("agent")) rule.match.agent_id = m["agent"].get<std::string>();
            if (m.contains("module")) rule.match.module_name = m["module"].get<std::string>();
            if (m.contains("round")) rule.match.round_index = m["round"].get<int>();
            if (m.contains("turn")) rule.match.turn_index = m["turn"].get<int>();
        }
        if (!item.contains("responses") || !item["responses"].is_array() ||
            item["responses"].empty())
            throw EvoError(errc::config_schema, "script entry needs a non-empty 'responses' array");
        for (const auto& r : item["responses"]) rule.responses.push_back(r.get<std::string>());
        book.entries.push_back(std::move(rule));
    }
    return book;
}

inline ScriptBook ScriptBook::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw EvoError(errc::io, "cannot open script book: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw EvoError(errc::config_schema, "script book parse failure: " + std::string(e.what()));
    }
    return from_json(doc);
}

// Plays back a ScriptBook. Pure function of (book, call history); queue
// consumption is atomic per call.
class ScriptedProvider : public Provider {
public:
    explicit ScriptedProvider(ScriptBook book) : book_(std::move(book)) {}

    CompletionResponse complete(const CompletionRequest& req) override {
        std::lock_guard<std::mutex> lock(mutex_);
        ScriptRule* best = nullptr;
        bool any_match = false;
        for (auto& rule : book_.entries) {
            if (!rule.match.matches(req.tag)) continue;
            any_match = true;
            if (rule.responses.empty()) continue;
            if (!best || rule.match.specificity() > best->match.specificity()) best = &rule;
        }
        if (best) {
            std::string text = std::move(best->responses.front());
            best->responses.pop_front();
            return {text, "scripted", 0};
        }
        if (book_.default_response) return {*book_.default_response, "scripted", 0};
        const std::string where = req.tag.agent_id + "/" + req.tag.module_name + "/round " +
                                  std::to_string(req.tag.round_index) + "/turn " +
                                  std::to_string(req.tag.turn_index);
        if (any_match)
            throw EvoError(errc::queue_exhausted, "script queue exhausted for " + where);
        throw EvoError(errc::script_miss, "no script entry matches " + where);
    }

private:
    std::mutex mutex_;
    ScriptBook book_;
};

}  // namespace evosim
