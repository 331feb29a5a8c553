#pragma once

#include "sim/learning.hpp"
#include "sim/model.hpp"
#include "sim/orderparams.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace sim {

enum class Backend { Direct, ThermoLimit };

struct DropoutConfig {
    double p = 0.5;
    MaskMode mask_mode = MaskMode::FixedSize;
    InferenceMode inference_mode = InferenceMode::Rescaled;
};

/// Full description of one experiment. Fields with sentinel -1 default to N.
struct SimConfig {
    int n = 1000;
    int m = 0;
    int k = 0;
    double eta = 0.005;
    bool use_dropout = false;
    DropoutConfig dropout;
    TeacherKind teacher_kind = TeacherKind::Orthogonal;
    Backend backend = Backend::Direct;
    InputDist input_dist = InputDist::Gaussian;
    WUpdate w_update = WUpdate::Gradient;
    long long steps = 0;
    long long sample_every = -1;
    long long window = -1;
    std::uint64_t seed = 0;
    double teacher_v = 0.5;
    bool orthonormalize = false;

    // Detector conventions, exposed for tuning.
    double plateau_slope_tol = 1e-5;    // per unit t, on log(mse)
    double plateau_min_duration = 200.0; // t units
    double singular_band_lo = 0.8;
    double singular_band_hi = 0.98;
    double symmetry_drop_factor = 0.5;

    long long effective_sample_every() const { return sample_every >= 0 ? sample_every : n; }
    long long effective_window() const { return window >= 0 ? window : n; }
    RuleSpec rule_spec() const;
    void validate() const; // throws ConfigError
};

struct TrajectoryRecord {
    double t = 0.0;          // m / N
    double mse_window = 0.0; // trailing mean of (1/2) delta^2; at t=0, eg_analytic
    double eg_analytic = 0.0;
    Eigen::VectorXd w;
    std::vector<double> q_upper; // upper triangle, row-major, K(K+1)/2 values
    std::vector<double> r;       // row-major, K*M values
};

struct PlateauInterval {
    double t_start = 0.0;
    double t_end = 0.0;
    double level = 0.0;
};

struct RunSummary {
    TrajectoryRecord final_record;
    std::vector<PlateauInterval> plateaus;
    std::optional<double> symmetry_break_t;
    std::optional<double> singular_dwell; // Singular-teacher runs only
    bool diverged = false;
    long long diverged_step = -1;
    double max_tracking_drift = 0.0; // direct backend, at re-measurement checkpoints
};

struct RunResult {
    std::vector<TrajectoryRecord> records;
    RunSummary summary;
    Eigen::MatrixXd teacher_overlap; // T block, fixed over the run
};

/// Executes one experiment. Records are taken at step 0 and every
/// sample_every steps. The direct backend tracks order parameters
/// incrementally and re-measures exactly every 10^5 steps; the
/// thermodynamic-limit backend never materializes N-dimensional weights.
/// Fully deterministic given the config (including its seed).
RunResult run(const SimConfig& config);

/// Trailing mean over `window` entries; shorter prefixes average what is
/// available.
std::vector<double> windowed_mse(const std::vector<double>& errors, long long window);

/// Maximal intervals where the least-squares slope of log(value) over a
/// sliding window of width min_duration/2 stays within slope_tol, kept when
/// at least min_duration long. Series must be sorted by t.
std::vector<PlateauInterval> detect_plateaus(const std::vector<std::pair<double, double>>& series,
                                             double slope_tol, double min_duration);

/// Earliest t whose value falls below drop_factor times the mean of the
/// preceding (up to 16) samples; absent when no such drop exists.
std::optional<double> detect_symmetry_break(const std::vector<std::pair<double, double>>& series,
                                            double drop_factor);

/// Total time with max_{i,n} |R_in| inside [lo, hi] before the first sample
/// above hi; spans the whole series when hi is never exceeded.
double singular_dwell(const std::vector<std::pair<double, Eigen::MatrixXd>>& r_series, double lo,
                      double hi);
double singular_dwell_metric(const std::vector<std::pair<double, double>>& series, double lo,
                             double hi);

struct CompareMetrics {
    double final_mse = 0.0;
    std::optional<double> symmetry_break_t;
    std::optional<double> singular_dwell;
    bool diverged = false;
};

struct CompareReport {
    std::vector<std::uint64_t> seeds;
    std::vector<CompareMetrics> base;    // indexed like seeds
    std::vector<CompareMetrics> variant;
    CompareMetrics base_median;
    CompareMetrics variant_median;
};

/// Paired runs over the given seeds. The two configs must be identical
/// except for the learning rule, and the rules must differ. Runs may execute
/// in parallel; the report is merged by seed index and therefore identical
/// for any thread count.
CompareReport compare(const SimConfig& base, const SimConfig& variant,
                      const std::vector<std::uint64_t>& seeds);

struct VerifyTrial {
    int m = 0;
    int k = 0;
    bool singular = false;
    double analytic = 0.0;
    double mc_mean = 0.0;
    double mc_stderr = 0.0;
    double z = 0.0;
    bool pass = false;
};

struct VerifyReport {
    std::vector<VerifyTrial> trials;
    int pass_count = 0;
    long long samples = 0;
    std::uint64_t seed = 0;
};

/// Validation suite for the closed-form error: builds random finite-N
/// (N=400) teacher/student pairs with non-trivial overlaps, measures order
/// parameters, and compares analytic against Monte-Carlo values at the
/// 5-standard-error threshold.
VerifyReport verify_generalization_error(int trials, int max_m, int max_k, long long samples,
                                         std::uint64_t seed);

/// Named parameter sets for the standard experiments (M=2 teacher, N=1000,
/// eta=0.005): learnable_sgd, redundant_sgd, redundant_dropout, singular_sgd,
/// singular_dropout.
SimConfig scenario(const std::string& name);
std::vector<std::string> scenario_names();

} // namespace sim
