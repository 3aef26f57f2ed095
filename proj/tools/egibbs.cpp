#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "egibbs/cli/runner.hpp"

namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw egibbs::Error("cli_runner", "IoError", "cannot write " + path.string());
    out << content;
}

std::optional<std::uint64_t> env_seed() {
    for (const char* name : {"EGIBBS_SEED", "TOOL_SEED"}) {
        if (const char* v = std::getenv(name); v && *v) {
            try {
                std::size_t used = 0;
                auto s = std::stoull(v, &used);
                if (used == std::string(v).size()) return s;
            } catch (const std::exception&) {
            }
            throw egibbs::Error("cli_runner", "TypeError", std::string(name) + " must be a nonnegative integer");
        }
    }
    return std::nullopt;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Loop-space Gibbs measures: verification and uniqueness certificates"};
    std::string subcommand, config_path, out_dir;
    std::optional<std::uint64_t> seed;
    std::string names;
    for (const auto& s : egibbs::cli::subcommands()) names += (names.empty() ? "" : ", ") + s;
    app.add_option("subcommand", subcommand, "one of: " + names)->required();
    app.add_option("--config", config_path, "JSON experiment configuration")->required()->check(CLI::ExistingFile);
    app.add_option("--seed", seed, "master seed (overrides EGIBBS_SEED / TOOL_SEED and rng.seed)");
    app.add_option("--out", out_dir, "output directory (default: output.dir or ./out)");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : egibbs::cli::kError;
    }

    egibbs::cli::RunReport rep;
    try {
        auto cfg = egibbs::cli::load_config(config_path);
        if (!seed) seed = env_seed();
        if (seed) cfg.resolved["rng.seed"] = *seed;
        if (out_dir.empty()) out_dir = cfg.has("output.dir") ? cfg.text("output.dir") : "out";
        rep = egibbs::cli::run(subcommand, cfg);
    } catch (const egibbs::Error& e) {
        rep.report = {{"schema_version", egibbs::cli::kSchemaVersion},
                      {"artifact_version", egibbs::cli::kArtifactVersion},
                      {"subcommand", subcommand},
                      {"status", "error"},
                      {"error", {{"code", e.code()}, {"message", e.what()}}}};
        rep.exit_status = egibbs::cli::kError;
        if (out_dir.empty()) out_dir = "out";
    }

    try {
        fs::create_directories(out_dir);
        write_file(fs::path(out_dir) / "report.json", rep.report.dump(2) + "\n");
        if (!rep.timings.is_null()) write_file(fs::path(out_dir) / "timings.json", rep.timings.dump(2) + "\n");
        for (const auto& t : rep.tables) write_file(fs::path(out_dir) / t.name, t.content);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return egibbs::cli::kError;
    }

    const std::string status = rep.report.value("status", "error");
    std::cout << subcommand << ": " << status;
    if (rep.report.contains("error")) std::cout << " (" << rep.report["error"]["message"].get<std::string>() << ")";
    std::cout << "\n";
    return rep.exit_status;
}
