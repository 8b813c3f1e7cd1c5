#pragma once

#include "plriv/csv_io.hpp"
#include "plriv/estimator.hpp"
#include "plriv/simulation.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace plriv {

/// Everything a command needs, filled from flags by run_cli or directly by
/// callers embedding the tool.
struct RunConfig {
    std::string command;  // estimate | test | ci | cv | simulate
    std::string input_path;
    ColumnMapping columns{};

    FitConfig fit{};
    std::optional<double> lambda;  // fixed penalty; CV-selected when absent
    double grid_min = 1e-8;
    double grid_max = 10.0;
    int grid_count = 30;

    int B = 499;
    std::vector<double> levels{0.05, 0.10};
    double theta0 = 0.0;
    std::uint64_t seed = 0;
    int workers = 1;
    bool equal_tail = false;

    std::string out_path;
    std::string format = "table";  // table | csv | report

    // simulate
    DgpSpec dgp{};
    int replications = 1000;
    bool warp_speed = true;
    int bootstrap_B = 199;
    std::string sim_kind = "size";  // size | power
    std::vector<double> gamma_grid{0.0, 0.25, 0.5, 0.75, 1.0};
};

/// Ordered key/value output; the order is part of the byte-stable contract.
struct Report {
    std::vector<std::pair<std::string, std::string>> items;

    void add(std::string key, std::string value);
    void add(std::string key, const char* value);
    void add(std::string key, double value);
    void add(std::string key, bool value);
    void add(std::string key, long long value);
    void add(std::string key, std::uint64_t value);

    std::string to_table() const;
    std::string to_csv() const;
    std::string to_report() const;
    std::string render(const std::string& format) const;
};

/// Lossless, locale-independent decimal rendering used across all outputs.
std::string format_number(double v);

Report cmd_estimate(const RunConfig& cfg);
Report cmd_test(const RunConfig& cfg);
Report cmd_ci(const RunConfig& cfg);
Report cmd_cv(const RunConfig& cfg);
/// Also writes the size/power CSV artifact to cfg.out_path.
Report cmd_simulate(const RunConfig& cfg);

/// Parses argv, dispatches, prints. Exit codes: 0 success, 2 configuration
/// error, 3 data error, 4 numeric failure.
int run_cli(int argc, const char* const* argv);

}  // namespace plriv
