#pragma once

// Experiment runner behind the divcong command-line tool.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "divcong/report.hpp"
#include "divcong/signs.hpp"
#include "divcong/statistics.hpp"

namespace divcong {

inline constexpr const char* kCacheDirEnv = "DIVCONG_CACHE_DIR";

const char* code_version() noexcept;

struct ExperimentConfig {
    std::string command;

    std::int64_t r1 = 1, q1 = 1, r2 = 1, q2 = 1;

    // delta / mainterm / sieve
    std::optional<double> x;
    std::optional<double> t;
    std::vector<double> x_values;
    std::uint64_t n_max = 0;
    std::uint64_t csv_rows = 1000;

    // moments / meanvalue / excursion
    std::vector<int> k{2};
    double tmin = 1e4;
    double tmax = 1e5;
    int per_decade = 8;
    std::vector<double> T_values;
    std::optional<double> ck;
    std::uint64_t grid_points = 201;

    // shortint
    double T = 1e5;
    std::vector<double> h0{1, 4, 16, 64, 150};

    // signs / runs
    double c1 = kDefaultC1;
    double c2 = kDefaultC2;
    double c5 = kDefaultC5;
    double step = kDefaultStep;
    std::uint64_t samples = 100;
    std::uint64_t trace_points = 2001;

    // kernel / voronoi-residual
    double alpha = 10.0;
    std::vector<int> zeta{1, -1};
    double t2min = 1e5;
    double t2max = 2e5;
    std::optional<double> y;
    std::vector<double> y_values{100, 1000};
    double U = 1e4;

    double tol = kDefaultTolerance;
    std::uint64_t seed = 1;

    int threads = 0;  // 0: OpenMP default
    std::uint64_t mem_budget = std::uint64_t{3} << 29;
    bool force_streaming = false;

    std::filesystem::path out_dir = ".";
    std::string name;  // output stem, defaults to the command
    std::string format = "both";
    std::optional<std::filesystem::path> cache_dir;
    bool no_cache = false;

    std::filesystem::path report;  // plot: input report

    CongruenceParams params() const;
    std::string stem() const { return name.empty() ? command : name; }
};

// Every precondition of the operation behind cfg.command, checked up front.
// Throws InvalidArgument naming the offending field.
void validate(const ExperimentConfig& cfg);

json config_to_json(const ExperimentConfig& cfg);

struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::optional<double>>> rows;
};

struct ExperimentResult {
    std::string report_type;
    json result;
    std::vector<std::string> warnings;
    json achieved_tolerances = json::object();
    json extra_diagnostics = json::object();  // merged into diagnostics (cache use, ...)
    CsvTable table;
};

// Runs the computation without touching the filesystem (apart from the sieve
// cache). The result JSON does not depend on the thread count.
ExperimentResult compute_experiment(const ExperimentConfig& cfg);

std::string format_csv(const CsvTable& table, const std::vector<std::string>& header_lines);

// Values written with %.17g; missing values as empty fields.
std::string format_number(double v);

// Writes path via a temporary sibling and rename.
void write_atomic(const std::filesystem::path& path, const std::string& contents);

// Cache file for (params, [1, n_max]) inside dir.
std::filesystem::path sieve_cache_path(const std::filesystem::path& dir, const CongruenceParams& p,
                                       std::uint64_t n_max);

struct RunStatus {
    int exit_code = 0;
    std::vector<std::filesystem::path> written;
    std::string error;  // structured error record (JSON) when exit_code != 0
};

// Validates, computes and writes the report files. Never throws; on failure a
// <stem>.FAILED marker is written next to where the outputs would have gone.
RunStatus run_experiment(const ExperimentConfig& cfg);

// Writes a matplotlib script for the report and returns its path.
std::filesystem::path emit_plot_script(const std::filesystem::path& report_path,
                                       const std::filesystem::path& out_dir);

// Parses argv and runs; returns the process exit status.
int run_cli(int argc, char** argv);

}  // namespace divcong
