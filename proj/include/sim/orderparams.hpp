#pragma once

#include "sim/learning.hpp"
#include "sim/model.hpp"
#include "sim/rng.hpp"

#include <Eigen/Dense>

namespace sim {

/// Macroscopic state of a run: Q_ij = J_i . J_j, R_in = B_n . J_i,
/// T_nm = B_n . B_m. Q and T are symmetric and the full block matrix
/// [[T, R^T], [R, Q]] is positive semidefinite for any realizable state.
struct OrderParameters {
    Eigen::MatrixXd q; // K x K
    Eigen::MatrixXd r; // K x M
    Eigen::MatrixXd t; // M x M

    int k() const { return static_cast<int>(q.rows()); }
    int m() const { return static_cast<int>(t.rows()); }
};

struct GenErrorReport {
    double analytic = 0.0;
    double mc_mean = 0.0;
    double mc_stderr = 0.0;
    long long samples = 0;
};

/// Joint covariance of the inner potentials (d, y) plus a factor usable for
/// sampling even when the covariance is rank-deficient (eigenvalues below
/// 1e-10 are clamped to zero). cov == transform * transform^T up to clamping.
struct CovarianceFactor {
    Eigen::MatrixXd cov;
    Eigen::MatrixXd transform;
};

/// Exact dot products of the current weights.
OrderParameters measure(const TeacherNetwork& teacher, const StudentNetwork& student);

/// Closed-form generalization error: the bilinear arcsine form
///   (1/pi) [ sum_nm v_n v_m asin(T_nm / sqrt((1+T_nn)(1+T_mm)))
///          + sum_ij w_i w_j asin(Q_ij / sqrt((1+Q_ii)(1+Q_jj)))
///          - 2 sum_in w_i v_n asin(R_in / sqrt((1+Q_ii)(1+T_nn))) ].
/// asin arguments are clamped into [-1, 1] within 1e-9; larger excursions
/// are treated as corrupted state and rejected.
double analytic_generalization_error(const OrderParameters& op, const Eigen::VectorXd& v,
                                     const Eigen::VectorXd& w);

/// Monte-Carlo estimate of the same quantity: draws (d, y) jointly Gaussian
/// with the block covariance and averages the squared output difference.
/// Sampling is chunked with one derived substream per chunk, so the result
/// is identical for any thread count.
GenErrorReport monte_carlo_generalization_error(const OrderParameters& op,
                                                const Eigen::VectorXd& v,
                                                const Eigen::VectorXd& w, long long samples,
                                                Rng& rng);

CovarianceFactor assemble_covariance(const OrderParameters& op);

/// Exact order-parameter recurrences for the rank-one weight update
/// J_i += (eta/N) f_i xi described by `stats`:
///   R'_in = R_in + (eta/N) f_i d_n
///   Q'_ij = Q_ij + (eta/N)(f_i y_j + f_j y_i) + (eta/N)^2 f_i f_j |xi|^2
/// T is unchanged.
void incremental_update_inplace(OrderParameters& op, const StepStats& stats, double eta, int n);
OrderParameters incremental_update(const OrderParameters& op, const StepStats& stats, double eta,
                                   int n);

/// Learning rule selector shared by the backends.
struct RuleSpec {
    bool dropout = false;
    double p = 1.0;
    MaskMode mask_mode = MaskMode::FixedSize;
};

struct ThermoStepInfo {
    double delta = 0.0;
};

/// One step of the N -> infinity backend: draws (d, y) from the Gaussian
/// with the block covariance, forms the same error signal and f as the
/// finite-N rules, and applies the incremental recurrences with |xi|^2/N at
/// its limit value 1. `n` is the nominal scale: one call advances t by 1/n.
/// Masks for the dropout rule come from mask_rng, potentials from pot_rng.
ThermoStepInfo thermo_limit_step(OrderParameters& op, Eigen::VectorXd& w,
                                 const Eigen::VectorXd& v, double eta, int n,
                                 const RuleSpec& rule, WUpdate w_update, Rng& pot_rng,
                                 Rng& mask_rng);

/// Smallest eigenvalue of the block covariance.
double min_covariance_eigenvalue(const OrderParameters& op);

/// Symmetry, PSD and Cauchy-Schwarz checks; throws ConfigError on violation.
void check_order_parameters(const OrderParameters& op, double tol = 1e-9);

} // namespace sim
