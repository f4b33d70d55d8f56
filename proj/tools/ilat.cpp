// Command-line front end: run verification experiments, simulate fields, or
// validate a configuration without computing anything.
//
// Exit codes: 0 all checks passed, 1 at least one check failed,
// 2 configuration error, 3 runtime error.

#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "ilat/config.hpp"

namespace {

int run_configs(const std::string& config_path, const std::string& out_path,
                const std::string& format, bool quiet) {
    auto configs = ilat::parse_config_file(config_path);
    std::vector<ilat::TestReport> reports;
    std::vector<std::string> artifacts;
    bool all_pass = true;
    for (const auto& c : configs) {
        ilat::RunOutcome outcome = ilat::run_experiment(c);
        for (auto& r : outcome.reports) {
            if (!quiet)
                std::cout << (r.pass ? "[pass] " : "[FAIL] ") << r.name
                          << "  statistic=" << r.statistic << "  threshold=" << r.threshold
                          << "  n=" << r.n_samples << "  seed=" << r.seed << "\n";
            all_pass = all_pass && r.pass;
            reports.push_back(std::move(r));
        }
        for (auto& a : outcome.artifacts) {
            if (!quiet) std::cout << "[out ] wrote " << a << "\n";
            artifacts.push_back(std::move(a));
        }
    }
    if (!out_path.empty()) {
        std::string payload =
            format == "csv" ? ilat::reports_to_csv(reports) : ilat::reports_to_json(reports);
        ilat::atomic_write(out_path, payload);
        if (!quiet) std::cout << "[out ] wrote " << out_path << "\n";
    }
    return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"integrable lattice simulation and verification"};
    app.require_subcommand(1);

    std::string config_path, out_path, format = "json";
    int threads = 0;
    bool quiet = false;

    CLI::App* cmd_run = app.add_subcommand("run", "run the experiments in a config file");
    cmd_run->add_option("--config", config_path, "JSON config path")->required();
    cmd_run->add_option("--out", out_path, "report output path");
    cmd_run->add_option("--format", format, "json or csv")
        ->check(CLI::IsMember({"json", "csv"}));
    cmd_run->add_option("--threads", threads, "worker threads (LATTICE_THREADS overrides)");
    cmd_run->add_flag("--quiet", quiet, "suppress per-report lines");

    CLI::App* cmd_sim = app.add_subcommand("simulate", "evolve a field and write it as CSV");
    cmd_sim->add_option("--config", config_path, "JSON config path")->required();
    cmd_sim->add_option("--threads", threads, "worker threads (LATTICE_THREADS overrides)");

    CLI::App* cmd_val = app.add_subcommand("validate", "parse and validate a config, run nothing");
    cmd_val->add_option("--config", config_path, "JSON config path")->required();

    CLI11_PARSE(app, argc, argv);

    if (threads > 0 && std::getenv("LATTICE_THREADS") == nullptr) {
        setenv("LATTICE_THREADS", std::to_string(threads).c_str(), 0);
    }

    try {
        if (cmd_val->parsed()) {
            auto configs = ilat::parse_config_file(config_path);
            std::cout << "ok: " << configs.size() << " experiment(s)\n";
            return 0;
        }
        if (cmd_sim->parsed()) {
            auto configs = ilat::parse_config_file(config_path);
            for (const auto& c : configs) {
                if (c.experiment != ilat::ExperimentKind::simulate)
                    ilat::fail(ilat::ErrorKind::ConfigError,
                               "simulate subcommand expects simulate experiments");
                auto outcome = ilat::run_experiment(c);
                for (const auto& a : outcome.artifacts) std::cout << "wrote " << a << "\n";
            }
            return 0;
        }
        return run_configs(config_path, out_path, format, quiet);
    } catch (const ilat::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.kind() == ilat::ErrorKind::ConfigError ? 2 : 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
