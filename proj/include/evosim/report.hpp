#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "evosim/engine.hpp"
#include "evosim/metrics.hpp"

namespace evosim {

namespace detail {

inline std::string fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

inline std::string coord(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

inline std::string tick_label(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

inline std::string xml_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c; break;
        }
    }
    return out;
}

}  // namespace detail

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);  // binary keeps LF endings everywhere
    if (!out) throw EvoError(errc::io, "cannot open for writing: " + path);
    out << content;
    if (!out) throw EvoError(errc::io, "write failed: " + path);
}

// ── CSV ─────────────────────────────────────────────────────────────────

// Header `round,<series names...>`, one row per round, 6 fractional digits,
// '.' decimal point, LF line endings.
inline std::string csv_text(const RunReport& report) {
    if (report.series.empty())
        throw EvoError(errc::precondition, "report carries no series to emit");
    std::string out = "round";
    for (const auto& s : report.series) out += "," + s.name;
    out += "\n";
    const size_t rounds = report.series.front().values.size();
    for (size_t i = 0; i < rounds; ++i) {
        out += std::to_string(i);
        for (const auto& s : report.series)
            out += "," + detail::fixed6(i < s.values.size() ? s.values[i] : 0.0);
        out += "\n";
    }
    return out;
}

inline void emit_csv(const RunReport& report, const std::string& path) {
    write_text_file(path, csv_text(report));
}

// ── SVG line chart ──────────────────────────────────────────────────────

// One polyline per series over round index, with axes and a legend. Output
// is a pure function of the series content.
inline std::string svg_text(const std::vector<MetricSeries>& series) {
    static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                    "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
    const double width = 860, height = 480;
    const double x0 = 60, y0 = 20, x1 = 690, y1 = 430;

    size_t max_len = 0;
    double vmin = 0.0, vmax = 0.0;
    bool any = false;
    for (const auto& s : series) {
        max_len = std::max(max_len, s.values.size());
        for (double v : s.values) {
            if (!any) {
                vmin = vmax = v;
                any = true;
            }
            vmin = std::min(vmin, v);
            vmax = std::max(vmax, v);
        }
    }
    if (!any) {
        vmin = 0.0;
        vmax = 1.0;
    }
    if (vmin == vmax) {
        vmin -= 1.0;
        vmax += 1.0;
    }

    auto map_x = [&](size_t i) {
        if (max_len <= 1) return (x0 + x1) / 2.0;
        return x0 + static_cast<double>(i) / static_cast<double>(max_len - 1) * (x1 - x0);
    };
    auto map_y = [&](double v) { return y1 - (v - vmin) / (vmax - vmin) * (y1 - y0); };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + detail::coord(width) +
           "\" height=\"" + detail::coord(height) + "\" viewBox=\"0 0 " + detail::coord(width) +
           " " + detail::coord(height) + "\">\n";
    svg += "<rect x=\"0\" y=\"0\" width=\"" + detail::coord(width) + "\" height=\"" +
           detail::coord(height) + "\" fill=\"white\"/>\n";

    // axes
    svg += "<line x1=\"" + detail::coord(x0) + "\" y1=\"" + detail::coord(y1) + "\" x2=\"" +
           detail::coord(x1) + "\" y2=\"" + detail::coord(y1) +
           "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    svg += "<line x1=\"" + detail::coord(x0) + "\" y1=\"" + detail::coord(y0) + "\" x2=\"" +
           detail::coord(x0) + "\" y2=\"" + detail::coord(y1) +
           "\" stroke=\"black\" stroke-width=\"1\"/>\n";

    // y ticks
    const int y_ticks = 5;
    for (int t = 0; t <= y_ticks; ++t) {
        double v = vmin + (vmax - vmin) * t / y_ticks;
        double y = map_y(v);
        svg += "<line x1=\"" + detail::coord(x0 - 4) + "\" y1=\"" + detail::coord(y) + "\" x2=\"" +
               detail::coord(x0) + "\" y2=\"" + detail::coord(y) + "\" stroke=\"black\"/>\n";
        svg += "<text x=\"" + detail::coord(x0 - 8) + "\" y=\"" + detail::coord(y + 4) +
               "\" font-size=\"11\" text-anchor=\"end\">" + detail::tick_label(v) + "</text>\n";
    }

    // x ticks at integer rounds, thinned to at most ~12 labels
    if (max_len > 0) {
        size_t step = (max_len - 1) / 12 + 1;
        for (size_t i = 0; i < max_len; i += step) {
            double x = map_x(i);
            svg += "<line x1=\"" + detail::coord(x) + "\" y1=\"" + detail::coord(y1) + "\" x2=\"" +
                   detail::coord(x) + "\" y2=\"" + detail::coord(y1 + 4) + "\" stroke=\"black\"/>\n";
            svg += "<text x=\"" + detail::coord(x) + "\" y=\"" + detail::coord(y1 + 18) +
                   "\" font-size=\"11\" text-anchor=\"middle\">" + std::to_string(i) + "</text>\n";
        }
    }

    // axis labels
    svg += "<text x=\"" + detail::coord((x0 + x1) / 2) + "\" y=\"" + detail::coord(height - 6) +
           "\" font-size=\"12\" text-anchor=\"middle\">round</text>\n";
    svg += "<text x=\"14\" y=\"" + detail::coord((y0 + y1) / 2) +
           "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 14 " +
           detail::coord((y0 + y1) / 2) + ")\">value</text>\n";

    // series polylines
    for (size_t si = 0; si < series.size(); ++si) {
        const char* color = palette[si % (sizeof(palette) / sizeof(palette[0]))];
        std::string points;
        for (size_t i = 0; i < series[si].values.size(); ++i) {
            if (i) points += " ";
            points += detail::coord(map_x(i)) + "," + detail::coord(map_y(series[si].values[i]));
        }
        svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) +
               "\" stroke-width=\"1.5\" points=\"" + points + "\"/>\n";
    }

    // legend
    for (size_t si = 0; si < series.size(); ++si) {
        const char* color = palette[si % (sizeof(palette) / sizeof(palette[0]))];
        double ly = y0 + 14 + 18 * static_cast<double>(si);
        svg += "<line x1=\"" + detail::coord(x1 + 14) + "\" y1=\"" + detail::coord(ly - 4) +
               "\" x2=\"" + detail::coord(x1 + 38) + "\" y2=\"" + detail::coord(ly - 4) +
               "\" stroke=\"" + color + "\" stroke-width=\"1.5\"/>\n";
        svg += "<text x=\"" + detail::coord(x1 + 44) + "\" y=\"" + detail::coord(ly) +
               "\" font-size=\"11\">" + detail::xml_escape(series[si].name) + "</text>\n";
    }

    svg += "</svg>\n";
    return svg;
}

inline const MetricSeries& find_series(const RunReport& report, const std::string& name) {
    for (const auto& s : report.series)
        if (s.name == name) return s;
    std::string available;
    for (const auto& s : report.series) {
        if (!available.empty()) available += ", ";
        available += s.name;
    }
    throw EvoError(errc::unknown_series, "no series named '" + name + "' (available: " +
                                             available + ")");
}

inline void emit_plot(const RunReport& report, const std::vector<std::string>& names,
                      const std::string& path) {
    std::vector<MetricSeries> picked;
    for (const auto& name : names) picked.push_back(find_series(report, name));
    write_text_file(path, svg_text(picked));
}

// ── run record (single self-describing JSON document) ───────────────────

namespace detail {

inline nlohmann::json message_to_json(const Message& m) {
    return {{"author_id", m.author_id}, {"author_name", m.author_name},
            {"turn_index", m.turn_index}, {"body", m.body},
            {"censored", m.censored},     {"summary", m.is_summary}};
}

inline Message message_from_json(const nlohmann::json& j) {
    Message m;
    m.author_id = j.at("author_id").get<std::string>();
    m.author_name = j.at("author_name").get<std::string>();
    m.turn_index = j.at("turn_index").get<int>();
    m.body = j.at("body").get<std::string>();
    m.censored = j.at("censored").get<bool>();
    m.is_summary = j.at("summary").get<bool>();
    return m;
}

inline nlohmann::json violation_to_json(const ViolationRecord& v) {
    return {{"round_index", v.round_index}, {"offending_text", v.offending_text},
            {"rationale", v.rationale},     {"stage", to_string(v.stage)},
            {"summary", v.is_summary},      {"covered", v.covered}};
}

inline ViolationRecord violation_from_json(const nlohmann::json& j) {
    ViolationRecord v;
    v.round_index = j.at("round_index").get<int>();
    v.offending_text = j.at("offending_text").get<std::string>();
    v.rationale = j.at("rationale").get<std::string>();
    v.stage = j.at("stage").get<std::string>() == "keyword" ? VerdictStage::keyword
                                                            : VerdictStage::llm_review;
    v.is_summary = j.at("summary").get<bool>();
    v.covered = j.at("covered").get<int>();
    return v;
}

inline QuestionKind question_kind_from_string(const std::string& s) {
    if (s == "counterpart_number") return QuestionKind::counterpart_number;
    if (s == "pet_kind") return QuestionKind::pet_kind;
    if (s == "deal_time") return QuestionKind::deal_time;
    if (s == "deal_place") return QuestionKind::deal_place;
    if (s == "deal_person") return QuestionKind::deal_person;
    if (s == "stance") return QuestionKind::stance;
    throw EvoError(errc::config_schema, "unknown question kind: " + s);
}

inline nlohmann::json interview_to_json(const InterviewAnswer& a) {
    nlohmann::json parsed;
    if (const long* n = std::get_if<long>(&a.parsed_value))
        parsed = *n;
    else if (const std::string* s = std::get_if<std::string>(&a.parsed_value))
        parsed = *s;
    return {{"subject", a.subject_agent}, {"kind", to_string(a.question_kind)},
            {"answer", a.answer_text},    {"parsed", parsed}};
}

inline InterviewAnswer interview_from_json(const nlohmann::json& j) {
    InterviewAnswer a;
    a.subject_agent = j.at("subject").get<std::string>();
    a.question_kind = question_kind_from_string(j.at("kind").get<std::string>());
    a.answer_text = j.at("answer").get<std::string>();
    const auto& parsed = j.at("parsed");
    if (parsed.is_number_integer())
        a.parsed_value = parsed.get<long>();
    else if (parsed.is_string())
        a.parsed_value = parsed.get<std::string>();
    return a;
}

inline nlohmann::json scores_to_json(const ScoreSet& s) {
    nlohmann::json accuracy = nlohmann::json::object();
    for (const auto& [id, v] : s.accuracy_per_agent) accuracy[id] = v;
    return {{"turns_survived", s.turns_survived}, {"accuracy_per_agent", accuracy},
            {"success_count", s.success_count},   {"attempts", s.attempts},
            {"expressed_count", s.expressed_count}};
}

inline ScoreSet scores_from_json(const nlohmann::json& j) {
    ScoreSet s;
    s.turns_survived = j.at("turns_survived").get<int>();
    for (auto it = j.at("accuracy_per_agent").begin(); it != j.at("accuracy_per_agent").end(); ++it)
        s.accuracy_per_agent[it.key()] = it.value().get<double>();
    s.success_count = j.at("success_count").get<int>();
    s.attempts = j.at("attempts").get<int>();
    s.expressed_count = j.at("expressed_count").get<int>();
    return s;
}

}  // namespace detail

inline nlohmann::json record_to_json(const RunReport& report) {
    nlohmann::json rounds = nlohmann::json::array();
    for (const auto& r : report.round_results) {
        nlohmann::json transcript = nlohmann::json::array();
        for (const auto& m : r.transcript.messages)
            transcript.push_back(detail::message_to_json(m));
        nlohmann::json interviews = nlohmann::json::array();
        for (const auto& a : r.interviews) interviews.push_back(detail::interview_to_json(a));
        rounds.push_back({{"round_index", r.round_index},
                          {"halted", r.halted},
                          {"attempts", r.attempts},
                          {"transcript", transcript},
                          {"violation", r.violation ? detail::violation_to_json(*r.violation)
                                                    : nlohmann::json()},
                          {"interviews", interviews},
                          {"scores", detail::scores_to_json(r.scores)}});
    }
    nlohmann::json series = nlohmann::json::array();
    for (const auto& s : report.series) series.push_back({{"name", s.name}, {"values", s.values}});
    nlohmann::json journal = nlohmann::json::array();
    for (const auto& e : report.journal)
        journal.push_back({{"agent", e.tag.agent_id},
                           {"module", e.tag.module_name},
                           {"round", e.tag.round_index},
                           {"turn", e.tag.turn_index},
                           {"request_hash", e.request_hash},
                           {"response", e.response_text},
                           {"provider", e.provider_name}});
    return {{"format", "evosim-run-record"},
            {"version", 1},
            {"kind", to_string(report.kind)},
            {"participants", report.participant_ids},
            {"seed", report.seed},
            {"complete", report.complete},
            {"error", report.error},
            {"config", report.config_snapshot},
            {"rounds", rounds},
            {"series", series},
            {"journal", journal}};
}

inline RunReport record_from_json(const nlohmann::json& doc) {
    if (!doc.is_object() || doc.value("format", "") != "evosim-run-record")
        throw EvoError(errc::config_schema, "not an evosim run record");
    RunReport report;
    report.kind = scenario_kind_from_string(doc.at("kind").get<std::string>());
    report.participant_ids = doc.at("participants").get<std::vector<std::string>>();
    report.seed = doc.at("seed").get<std::uint64_t>();
    report.complete = doc.at("complete").get<bool>();
    report.error = doc.at("error").get<std::string>();
    report.config_snapshot = doc.at("config");
    for (const auto& rj : doc.at("rounds")) {
        RoundResult r;
        r.round_index = rj.at("round_index").get<int>();
        r.halted = rj.at("halted").get<bool>();
        r.attempts = rj.at("attempts").get<int>();
        r.transcript.round_index = r.round_index;
        for (const auto& mj : rj.at("transcript"))
            r.transcript.messages.push_back(detail::message_from_json(mj));
        if (!rj.at("violation").is_null())
            r.violation = detail::violation_from_json(rj.at("violation"));
        for (const auto& aj : rj.at("interviews"))
            r.interviews.push_back(detail::interview_from_json(aj));
        r.scores = detail::scores_from_json(rj.at("scores"));
        report.round_results.push_back(std::move(r));
    }
    for (const auto& sj : doc.at("series")) {
        MetricSeries s;
        s.name = sj.at("name").get<std::string>();
        s.values = sj.at("values").get<std::vector<double>>();
        report.series.push_back(std::move(s));
    }
    for (const auto& ej : doc.at("journal")) {
        JournalEntry e;
        e.tag = {ej.at("agent").get<std::string>(), ej.at("module").get<std::string>(),
                 ej.at("round").get<int>(), ej.at("turn").get<int>()};
        e.request_hash = ej.at("request_hash").get<std::string>();
        e.response_text = ej.at("response").get<std::string>();
        e.provider_name = ej.at("provider").get<std::string>();
        report.journal.push_back(std::move(e));
    }
    return report;
}

inline void save_record(const RunReport& report, const std::string& path) {
    write_text_file(path, record_to_json(report).dump(2) + "\n");
}

inline RunReport load_record(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw EvoError(errc::io, "cannot open record: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw EvoError(errc::config_schema, "record parse failure: " + std::string(e.what()));
    }
    return record_from_json(doc);
}

// Recomputes the metric series from the stored round results and compares
// them with the stored series, exactly.
struct ReplayOutcome {
    bool ok = true;
    std::string detail;
};

inline ReplayOutcome verify_record(const RunReport& report) {
    std::vector<MetricSeries> recomputed =
        build_series(report.kind, report.participant_ids, report.round_results);
    if (recomputed.size() != report.series.size())
        return {false, "series count mismatch: stored " + std::to_string(report.series.size()) +
                           ", recomputed " + std::to_string(recomputed.size())};
    for (size_t i = 0; i < recomputed.size(); ++i) {
        const auto& a = report.series[i];
        const auto& b = recomputed[i];
        if (a.name != b.name) return {false, "series name mismatch at index " + std::to_string(i)};
        if (a.values.size() != b.values.size())
            return {false, "series '" + a.name + "' length mismatch"};
        for (size_t j = 0; j < a.values.size(); ++j)
            if (a.values[j] != b.values[j])
                return {false, "series '" + a.name + "' diverges at round " + std::to_string(j) +
                                   ": stored " + detail::fixed6(a.values[j]) + ", recomputed " +
                                   detail::fixed6(b.values[j])};
    }
    return {true, ""};
}

}  // namespace evosim
