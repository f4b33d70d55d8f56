#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ilat/carrier_solver.hpp"
#include "ilat/distributions.hpp"
#include "ilat/lattice_maps.hpp"
#include "ilat/verification.hpp"

namespace ilat {

enum class ExperimentKind {
    detailed_balance,
    detailed_balance_star,
    invariance,
    burke,
    ergodicity_reconstruction,
    ultradiscretization,
    correspondence,
    stochastic_quadrant,
    simulate,
};

const char* to_string(ExperimentKind k);

/// One experiment: what to run, on which model/measures, at which sizes, with
/// which seed, and where to put the output. Parsed and validated before any
/// computation; a missing seed is a configuration error.
struct ExperimentConfig {
    ExperimentKind experiment = ExperimentKind::detailed_balance;
    std::string label;

    std::optional<LocalMap> model;
    std::map<std::string, DistSpec> measures;  // slots: mu, nu, mu_tilde, nu_tilde,
                                               // boundary_x, boundary_u, bulk

    // mc block
    std::size_t samples = 100000;
    std::size_t window = 4096;
    std::size_t margin = 512;
    std::size_t time_steps = 128;
    std::size_t n_fields = 32;
    std::uint64_t seed = 0;

    // test block
    double alpha = 0.01;
    std::size_t bins = 8;
    std::vector<double> eps_list = {0.2, 0.1, 0.05};

    // experiment-specific scalars (lambda, c, L, lambda1, lambda2, J, alpha, ...)
    std::map<std::string, double> params;
    std::string target;  // ultradiscretization target or correspondence side

    // simulate
    std::vector<double> initial;

    // output block
    std::string out_path;
    std::string format = "json";

    const DistSpec& measure(const std::string& slot) const;
    std::optional<DistSpec> measure_opt(const std::string& slot) const;
};

/// Parse a JSON document holding one experiment object or an array of them.
/// Throws Error(ConfigError) naming the offending field.
std::vector<ExperimentConfig> parse_config_text(const std::string& text);
std::vector<ExperimentConfig> parse_config_file(const std::string& path);

struct RunOutcome {
    std::vector<TestReport> reports;
    std::vector<std::string> artifacts;  // paths written (simulate)
    bool all_pass = true;
};

/// Dispatch one experiment to the verification/simulation modules.
RunOutcome run_experiment(const ExperimentConfig& config);

std::string reports_to_json(const std::vector<TestReport>& reports);
std::string reports_to_csv(const std::vector<TestReport>& reports);

/// Write content to path via a temporary file plus rename, so an interrupted
/// run never leaves a partial file at the target.
void atomic_write(const std::string& path, const std::string& content);

enum class PlotKind { ks_curve, field_heatmap, marginal_hist };

/// Plot-ready CSV extractors. Each checks that the input carries the data the
/// kind needs and throws KindMismatch otherwise.
std::string emit_plot_data(const TestReport& report, PlotKind kind);
std::string emit_plot_data(const SpaceTimeField& field, PlotKind kind);
std::string emit_plot_data(const std::vector<double>& sample, const DistSpec& law,
                           std::size_t bins, PlotKind kind);

/// Window import from a JSON object {"kind","offset","model","values"}.
LatticeWindow window_from_json_text(const std::string& text);

}  // namespace ilat
