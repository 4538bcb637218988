#pragma once

// Command-line driver: subcommands check, ratio, flow, minimize and ricci,
// each writing its artifacts and a run manifest into the output directory.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

namespace isoflow {

inline constexpr const char* kVersion = "0.1.0";

struct RunConfig {
    std::string command;
    std::string metric_spec;  ///< empty selects the command's default
    std::optional<std::filesystem::path> curve_path;
    std::filesystem::path output_dir = "out";
    std::uint64_t seed = 0;
    std::size_t starts = 5;  ///< radii per start center
    double c1 = 1.0, c2 = 1.0;
    double t_end = 0.6;
    std::optional<double> el_tol;
    std::optional<double> energy_cap;
    std::size_t threads = 0;  ///< 0 selects the number of logical cores
    // command-specific settings
    std::string flow_mode = "csf";  ///< csf (curvature reduction) or ratio (gradient descent)
    std::optional<int> max_steps;
    std::size_t vertices = 512;
    double jitter = 0.0;
    std::size_t cells = 300;
    double r_max = 1e6;
    std::vector<double> track_times;

    nlohmann::json to_json() const;
};

/// Runs one command. Returns 0 on success, 2 on configuration errors and 3
/// on domain errors (reported on `err` with the error name).
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Parses argv into a RunConfig and runs it.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

} // namespace isoflow
