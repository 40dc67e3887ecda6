#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "evosim/errors.hpp"

namespace evosim {

enum class RoleKind { participant, supervisor };

inline std::string to_string(RoleKind k) {
    return k == RoleKind::participant ? "participant" : "supervisor";
}

// Static identity of one agent. `secret_payload` holds the scenario ground
// truth this agent must convey: an integer for guess-number, a pet name for a
// buyer, a pet->{time,place,person} table for a seller, a stance string for a
// forum poster. Null for the supervisor.
struct AgentProfile {
    std::string agent_id;
    std::string display_name;
    RoleKind role_kind = RoleKind::participant;
    std::string background;
    nlohmann::json secret_payload;  // null iff role_kind == supervisor
};

// The seven prompt elements, assembled in this fixed order. Only background
// and instructions are mandatory; empty elements are omitted from the
// serialized prompt.
struct PromptBundle {
    std::string background;
    std::string dialogue_history;
    std::string violation_log;
    std::string regulations;
    std::string guidance;
    std::string plan;
    std::string instructions;
};

struct Message {
    std::string author_id;
    std::string author_name;
    int turn_index = 0;  // utterance sequence number within the round
    std::string body;
    bool censored = false;    // forum mode only
    bool is_summary = false;  // produced by memory compression
};

struct Transcript {
    std::vector<Message> messages;
    int round_index = 0;
};

enum class VerdictStage { keyword, llm_review };

inline std::string to_string(VerdictStage s) {
    return s == VerdictStage::keyword ? "keyword" : "llm_review";
}

struct ViolationRecord {
    int round_index = 0;
    std::string offending_text;
    std::string rationale;
    VerdictStage stage = VerdictStage::keyword;
    bool is_summary = false;
    // How many original records this entry stands for. 1 for a normal record,
    // >1 for a compression summary; logical log length is the sum.
    int covered = 1;
};

// Long-term memory of supervisor detections. Append-only: compression may
// replace a prefix with a summary record but never loses count semantics.
struct ViolationLog {
    std::vector<ViolationRecord> records;

    void append(ViolationRecord r) { records.push_back(std::move(r)); }
    bool empty() const { return records.empty(); }

    int logical_size() const {
        int n = 0;
        for (const auto& r : records) n += r.covered;
        return n;
    }
};

namespace detail {

inline void append_section(std::string& out, const char* header, const std::string& body) {
    if (body.empty()) return;
    if (!out.empty()) out += "\n";
    out += "## ";
    out += header;
    out += "\n";
    out += body;
    out += "\n";
}

}  // namespace detail

// Serializes a bundle into provider-ready text: each populated element once,
// under a literal `## <Element Name>` header, in declared order. Pure.
inline std::string assemble_prompt(const PromptBundle& b) {
    if (b.background.empty() || b.instructions.empty())
        throw EvoError(errc::invalid_bundle, "background and instructions must be non-empty");
    std::string out;
    detail::append_section(out, "Background Information", b.background);
    detail::append_section(out, "Dialogue History", b.dialogue_history);
    detail::append_section(out, "Violation Log", b.violation_log);
    detail::append_section(out, "Regulations", b.regulations);
    detail::append_section(out, "Guidance", b.guidance);
    detail::append_section(out, "Plan", b.plan);
    detail::append_section(out, "Instructions", b.instructions);
    return out;
}

// One line per message, `<display_name>: <body>`. Censored messages are
// dropped unless include_censored is set.
inline std::string render_transcript(const Transcript& t, bool include_censored) {
    std::string out;
    for (const auto& m : t.messages) {
        if (m.censored && !include_censored) continue;
        out += m.author_name;
        out += ": ";
        out += m.body;
        out += "\n";
    }
    return out;
}

// One line per record, oldest first. Summary records render the condensed
// text in place of offending/rationale detail.
inline std::string render_violation_log(const ViolationLog& log) {
    std::string out;
    for (const auto& r : log.records) {
        out += "- round " + std::to_string(r.round_index);
        if (r.is_summary) {
            out += " [summary of " + std::to_string(r.covered) + " records]: " + r.rationale;
        } else {
            out += " [" + to_string(r.stage) + "]: \"" + r.offending_text +
                   "\" (reason: " + r.rationale + ")";
        }
        out += "\n";
    }
    return out;
}

}  // namespace evosim
