// Scenario runner: run, validate and list-scenarios.
// Exit codes: 0 success, 1 invalid configuration, 2 runtime failure.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "droplet/experiments.hpp"

#ifndef DROPLET_SCENARIO_DIR
#define DROPLET_SCENARIO_DIR "scenarios"
#endif

namespace fs = std::filesystem;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_config = 1;
constexpr int exit_runtime = 2;

fs::path scenario_dir(const std::string& flag) {
    if (!flag.empty()) {
        return flag;
    }
    if (const char* env = std::getenv("DROPLET_SCENARIO_DIR"); env != nullptr && *env != '\0') {
        return env;
    }
    return DROPLET_SCENARIO_DIR;
}

/// A path to an existing file, or the name of a preset in the scenario directory.
fs::path resolve_config(const std::string& arg, const fs::path& dir) {
    if (fs::is_regular_file(arg)) {
        return arg;
    }
    for (const fs::path& candidate : {dir / arg, dir / (arg + ".json")}) {
        if (fs::is_regular_file(candidate)) {
            return candidate;
        }
    }
    throw droplet::ConfigError("no config file or preset named '" + arg + "' (looked in " + dir.string() + ")");
}

std::vector<fs::path> preset_files(const fs::path& dir) {
    std::vector<fs::path> out;
    if (!fs::is_directory(dir)) {
        return out;
    }
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() == ".json") {
            out.push_back(e.path());
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

int guarded(const std::function<int()>& body) {
    try {
        return body();
    } catch (const droplet::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_runtime;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acoustic droplet source reconstruction scenarios"};
    app.require_subcommand(1);
    std::string scenarios_flag;
    app.add_option("--scenario-dir", scenarios_flag, "Directory of preset configs (env DROPLET_SCENARIO_DIR)");

    std::string run_config;
    std::string output_dir;
    bool timing = false;
    auto* run = app.add_subcommand("run", "Run a scenario and write CSV and JSON outputs");
    run->add_option("config", run_config, "Config file or preset name")->required();
    run->add_option("-o,--output-dir", output_dir,
                    "Output directory (default: $DROPLET_OUTPUT_DIR/<name>, else outputs.directory, else output/<name>)");
    run->add_flag("--timing", timing, "Record wall-clock time in report.json");

    std::string validate_config;
    auto* validate = app.add_subcommand("validate", "Check a config without running it");
    validate->add_option("config", validate_config, "Config file or preset name")->required();

    auto* list = app.add_subcommand("list-scenarios", "List preset scenarios");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_config;
    }

    const fs::path dir = scenario_dir(scenarios_flag);

    if (run->parsed()) {
        return guarded([&] {
            const droplet::Scenario s = droplet::load_scenario(resolve_config(run_config, dir));
            for (const auto& w : droplet::validate_scenario(s)) {
                std::cerr << "warning: " << w << '\n';
            }
            const fs::path out = droplet::resolve_output_directory(s, output_dir);
            const auto report = droplet::run_scenario(s, out, {timing});
            for (const auto& f : report.files) {
                std::cout << f.string() << '\n';
            }
            return exit_ok;
        });
    }
    if (validate->parsed()) {
        return guarded([&] {
            const droplet::Scenario s = droplet::load_scenario(resolve_config(validate_config, dir));
            for (const auto& w : droplet::validate_scenario(s)) {
                std::cerr << "warning: " << w << '\n';
            }
            std::cout << s.name << " (" << s.kind << "): ok\n";
            return exit_ok;
        });
    }
    if (list->parsed()) {
        return guarded([&] {
            const auto files = preset_files(dir);
            if (files.empty()) {
                std::cerr << "no presets in " << dir.string() << '\n';
            }
            for (const auto& f : files) {
                try {
                    const droplet::Scenario s = droplet::load_scenario(f);
                    std::cout << f.stem().string() << "\t" << s.kind << "\t" << s.description << '\n';
                } catch (const droplet::ConfigError& e) {
                    std::cout << f.stem().string() << "\tinvalid\t" << e.what() << '\n';
                }
            }
            return exit_ok;
        });
    }
    return exit_runtime;
}
