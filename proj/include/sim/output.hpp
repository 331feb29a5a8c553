#pragma once

#include "sim/harness.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace sim {

/// One double with 17 significant digits (%.17g), enough to round-trip.
std::string format_g17(double v);

/// Trajectory CSV. Header:
///   t,mse_window,eg_analytic,w_1..w_K,Q_11..Q_KK (upper triangle row-major),
///   R_11..R_KM (row-major). Newlines are '\n'.
std::string trajectory_csv(const std::vector<TrajectoryRecord>& records, int k, int m);

std::string compare_csv(const CompareReport& report);
std::string verify_csv(const VerifyReport& report);

/// Writes to <path>.tmp then renames, so a failure never leaves a partial
/// file at the destination. Throws IoError.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Figure panels for a run: MSE (log y), hidden-to-output weights, and the
/// Q/R overlaps, all against t.
std::string mse_chart_svg(const std::vector<TrajectoryRecord>& records);
std::string w_chart_svg(const std::vector<TrajectoryRecord>& records, int k);
std::string qr_chart_svg(const std::vector<TrajectoryRecord>& records, int k, int m);

} // namespace sim
