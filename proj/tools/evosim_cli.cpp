#include <filesystem>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "evosim/evosim.hpp"

namespace fs = std::filesystem;

namespace {

std::unique_ptr<evosim::Provider> make_provider(const evosim::ProviderChoice& choice,
                                                const std::string& script_override) {
    if (choice.kind == "http") return std::make_unique<evosim::HttpProvider>(choice.http);
    std::string path = script_override.empty() ? choice.script_path : script_override;
    if (path.empty())
        throw evosim::EvoError(evosim::errc::config_schema,
                               "scripted provider needs a script book (--script or config)");
    return std::make_unique<evosim::ScriptedProvider>(evosim::ScriptBook::load_file(path));
}

std::vector<std::string> split_names(const std::string& csv) {
    std::vector<std::string> names;
    size_t pos = 0;
    while (pos <= csv.size()) {
        size_t comma = csv.find(',', pos);
        if (comma == std::string::npos) comma = csv.size();
        std::string name = csv.substr(pos, comma - pos);
        if (!name.empty()) names.push_back(name);
        pos = comma + 1;
    }
    return names;
}

int cmd_run(const std::string& config_path, const std::string& provider_kind,
            const std::string& script_path, std::uint64_t seed, bool seed_set,
            const std::string& out_dir) {
    evosim::LoadedConfig loaded = evosim::load_config_file(config_path);
    if (!provider_kind.empty()) loaded.provider.kind = provider_kind;
    if (seed_set) {
        loaded.sim.seed = seed;
        loaded.provider.http.seed = seed;
    }
    auto provider = make_provider(loaded.provider, script_path);

    evosim::RunReport report = evosim::run_simulation(loaded.sim, *provider);

    fs::create_directories(out_dir);
    evosim::save_record(report, (fs::path(out_dir) / "record.json").string());
    evosim::emit_csv(report, (fs::path(out_dir) / "metrics.csv").string());
    std::vector<std::string> all_names;
    for (const auto& s : report.series) all_names.push_back(s.name);
    evosim::emit_plot(report, all_names, (fs::path(out_dir) / "metrics.svg").string());

    if (!report.complete) {
        std::cerr << "run incomplete: " << report.error << "\n";
        return 2;
    }
    std::cout << "run complete: " << report.round_results.size() << " rounds, artifacts in "
              << out_dir << "\n";
    return 0;
}

int cmd_replay(const std::string& record_path, const std::string& out_dir) {
    evosim::RunReport report = evosim::load_record(record_path);
    evosim::ReplayOutcome outcome = evosim::verify_record(report);
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        evosim::RunReport recomputed = report;
        recomputed.series =
            evosim::build_series(report.kind, report.participant_ids, report.round_results);
        evosim::emit_csv(recomputed, (fs::path(out_dir) / "metrics.csv").string());
    }
    if (!outcome.ok) {
        std::cerr << "error: " << evosim::errc::series_diverged << ": " << outcome.detail << "\n";
        return 3;
    }
    std::cout << "replay ok: stored series match recomputation\n";
    return 0;
}

int cmd_report(const std::string& record_path, const std::string& plot_names, int window,
               const std::string& out_dir) {
    evosim::RunReport report = evosim::load_record(record_path);
    std::vector<std::string> names = split_names(plot_names);
    if (names.empty())
        throw evosim::EvoError(evosim::errc::config_schema, "--plot needs at least one series name");
    std::vector<evosim::MetricSeries> smoothed;
    for (const auto& name : names)
        smoothed.push_back(evosim::moving_average(evosim::find_series(report, name), window));

    fs::create_directories(out_dir);
    evosim::write_text_file((fs::path(out_dir) / "report.svg").string(),
                            evosim::svg_text(smoothed));
    evosim::RunReport view;
    view.series = smoothed;
    evosim::emit_csv(view, (fs::path(out_dir) / "report.csv").string());
    std::cout << "report written to " << out_dir << "\n";
    return 0;
}

int cmd_validate(const std::string& config_path) {
    evosim::load_config_file(config_path);
    std::cout << "config ok: " << config_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"evosim: supervised dialogue evolution simulator"};
    app.require_subcommand(1);

    std::string config_path, out_dir, provider_kind, script_path, record_path, plot_names;
    std::uint64_t seed = 0;
    int window = 5;

    auto* run = app.add_subcommand("run", "execute a simulation and write its artifacts");
    run->add_option("--config", config_path, "scenario config file")->required();
    run->add_option("--provider", provider_kind, "provider override: scripted|http")
        ->check(CLI::IsMember({"scripted", "http"}));
    run->add_option("--script", script_path, "script book for the scripted provider");
    auto* seed_opt = run->add_option("--seed", seed, "seed recorded in the run (forwarded to http backends)");
    run->add_option("--out", out_dir, "output directory")->required();

    auto* replay = app.add_subcommand("replay", "verify a stored run record's series");
    replay->add_option("--record", record_path, "run record file")->required();
    replay->add_option("--out", out_dir, "directory for recomputed series");

    auto* report = app.add_subcommand("report", "smooth and plot stored series");
    report->add_option("--record", record_path, "run record file")->required();
    report->add_option("--plot", plot_names, "comma-separated series names")->required();
    report->add_option("--window", window, "smoothing window (default 5)");
    report->add_option("--out", out_dir, "output directory")->required();

    auto* validate = app.add_subcommand("validate-config", "schema-check a scenario config");
    validate->add_option("--config", config_path, "scenario config file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (run->parsed())
            return cmd_run(config_path, provider_kind, script_path, seed, seed_opt->count() > 0,
                           out_dir);
        if (replay->parsed()) return cmd_replay(record_path, out_dir);
        if (report->parsed()) return cmd_report(record_path, plot_names, window, out_dir);
        if (validate->parsed()) return cmd_validate(config_path);
    } catch (const evosim::EvoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
