#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sim::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitDiverged = 3;
inline constexpr int kExitIo = 4;

/// Source of a run configuration: a JSON file or a named scenario, plus
/// dotted-path overrides, plus the output directory.
struct RunArgs {
    std::string config_path;
    std::string scenario_name;
    std::vector<std::string> overrides;
    std::string out_dir;
};

/// Writes trajectory.csv, summary.json, mse.svg, w.svg, qr.svg.
int run_command(const RunArgs& args);

/// Paired base/variant runs over seeds; writes compare.csv and compare.json.
/// Overrides apply to both configs.
int compare_command(const RunArgs& base_args, const std::string& variant_path,
                    const std::vector<std::uint64_t>& seeds);

/// Writes verify.json and verify.csv.
int verify_command(const std::string& out_dir, int trials, int max_m, int max_k,
                   long long samples, std::uint64_t seed);

/// One run per value of `param`; writes per-point subdirectories plus
/// index.csv.
int sweep_command(const RunArgs& args, const std::string& param,
                  const std::vector<std::string>& values);

} // namespace sim::cli
