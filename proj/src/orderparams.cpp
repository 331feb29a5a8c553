#include "sim/orderparams.hpp"

#include "sim/errors.hpp"
#include "sim/kernels.hpp"
#include "sim/parallel.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace sim {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kAsinTol = 1e-9;
constexpr double kEigReject = -1e-6;
constexpr double kEigClamp = 1e-10;
constexpr long long kMcChunk = 8192;

double clamped_asin(double num, double den) {
    double arg = num / den;
    if (arg > 1.0 || arg < -1.0) {
        if (arg > 1.0 + kAsinTol || arg < -1.0 - kAsinTol) {
            throw ConfigError("analytic_generalization_error: asin argument " +
                              std::to_string(arg) + " outside [-1,1]; order parameters corrupt");
        }
        arg = arg > 0.0 ? 1.0 : -1.0;
    }
    return std::asin(arg);
}

} // namespace

OrderParameters measure(const TeacherNetwork& teacher, const StudentNetwork& student) {
    if (teacher.n != student.n) {
        throw std::invalid_argument("measure: teacher and student N differ");
    }
    const int k = student.k;
    const int m = teacher.m;
    OrderParameters op;
    op.q.resize(k, k);
    op.r.resize(k, m);
    op.t.resize(m, m);
    for (int i = 0; i < k; ++i) {
        for (int j = i; j < k; ++j) {
            const double v = kernels::dot(student.row(i), student.row(j));
            op.q(i, j) = v;
            op.q(j, i) = v;
        }
    }
    for (int i = 0; i < k; ++i) {
        for (int nn = 0; nn < m; ++nn) {
            op.r(i, nn) = kernels::dot(student.row(i), teacher.row(nn));
        }
    }
    for (int a = 0; a < m; ++a) {
        for (int b = a; b < m; ++b) {
            const double v = kernels::dot(teacher.row(a), teacher.row(b));
            op.t(a, b) = v;
            op.t(b, a) = v;
        }
    }
    return op;
}

double analytic_generalization_error(const OrderParameters& op, const Eigen::VectorXd& v,
                                     const Eigen::VectorXd& w) {
    const int k = op.k();
    const int m = op.m();
    if (v.size() != m || w.size() != k || op.r.rows() != k || op.r.cols() != m) {
        throw std::invalid_argument("analytic_generalization_error: dimension mismatch");
    }
    double teacher_term = 0.0;
    for (int a = 0; a < m; ++a) {
        for (int b = 0; b < m; ++b) {
            teacher_term += v[a] * v[b] *
                            clamped_asin(op.t(a, b),
                                         std::sqrt((1.0 + op.t(a, a)) * (1.0 + op.t(b, b))));
        }
    }
    double student_term = 0.0;
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
            student_term += w[i] * w[j] *
                            clamped_asin(op.q(i, j),
                                         std::sqrt((1.0 + op.q(i, i)) * (1.0 + op.q(j, j))));
        }
    }
    double cross_term = 0.0;
    for (int i = 0; i < k; ++i) {
        for (int a = 0; a < m; ++a) {
            cross_term += w[i] * v[a] *
                          clamped_asin(op.r(i, a),
                                       std::sqrt((1.0 + op.q(i, i)) * (1.0 + op.t(a, a))));
        }
    }
    double eg = (teacher_term + student_term - 2.0 * cross_term) / kPi;
    if (eg < 0.0) {
        if (eg < -kAsinTol) {
            throw ConfigError("analytic_generalization_error: negative value " +
                              std::to_string(eg) + "; order parameters corrupt");
        }
        eg = 0.0; // rounding noise around a perfect student
    }
    return eg;
}

CovarianceFactor assemble_covariance(const OrderParameters& op) {
    const int k = op.k();
    const int m = op.m();
    const int dim = m + k;
    CovarianceFactor f;
    f.cov.resize(dim, dim);
    f.cov.topLeftCorner(m, m) = op.t;
    f.cov.topRightCorner(m, k) = op.r.transpose();
    f.cov.bottomLeftCorner(k, m) = op.r;
    f.cov.bottomRightCorner(k, k) = op.q;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(f.cov);
    if (es.info() != Eigen::Success) {
        throw ConfigError("assemble_covariance: eigendecomposition failed");
    }
    const Eigen::VectorXd& eig = es.eigenvalues();
    if (eig.minCoeff() < kEigReject) {
        throw ConfigError("assemble_covariance: covariance eigenvalue " +
                          std::to_string(eig.minCoeff()) + " below tolerance");
    }
    Eigen::VectorXd root(dim);
    for (int i = 0; i < dim; ++i) {
        root[i] = eig[i] < kEigClamp ? 0.0 : std::sqrt(eig[i]);
    }
    f.transform = es.eigenvectors() * root.asDiagonal();
    return f;
}

GenErrorReport monte_carlo_generalization_error(const OrderParameters& op,
                                                const Eigen::VectorXd& v,
                                                const Eigen::VectorXd& w, long long samples,
                                                Rng& rng) {
    if (samples < 2) {
        throw ConfigError("monte_carlo_generalization_error: need at least 2 samples");
    }
    const CovarianceFactor factor = assemble_covariance(op);
    const int m = op.m();
    const int k = op.k();
    const int dim = m + k;

    const std::uint64_t base = rng.next_u64();
    const long long nchunks = (samples + kMcChunk - 1) / kMcChunk;
    std::vector<double> sum(static_cast<std::size_t>(nchunks), 0.0);
    std::vector<double> sum_sq(static_cast<std::size_t>(nchunks), 0.0);

    par::for_index(static_cast<int>(nchunks), [&](int c) {
        Rng crng(Rng::derive(base, static_cast<std::uint64_t>(c)));
        const long long begin = static_cast<long long>(c) * kMcChunk;
        const long long len = std::min(kMcChunk, samples - begin);
        Eigen::VectorXd g(dim);
        Eigen::VectorXd z(dim);
        double s = 0.0;
        double s2 = 0.0;
        for (long long it = 0; it < len; ++it) {
            for (int a = 0; a < dim; ++a) {
                g[a] = crng.normal();
            }
            z.noalias() = factor.transform * g;
            double teacher_out = 0.0;
            for (int a = 0; a < m; ++a) {
                teacher_out += v[a] * activation(z[a]);
            }
            double student_out = 0.0;
            for (int i = 0; i < k; ++i) {
                student_out += w[i] * activation(z[m + i]);
            }
            const double e = squared_error(teacher_out, student_out);
            s += e;
            s2 += e * e;
        }
        sum[static_cast<std::size_t>(c)] = s;
        sum_sq[static_cast<std::size_t>(c)] = s2;
    });

    double total = 0.0;
    double total_sq = 0.0;
    for (long long c = 0; c < nchunks; ++c) {
        total += sum[static_cast<std::size_t>(c)];
        total_sq += sum_sq[static_cast<std::size_t>(c)];
    }
    GenErrorReport rep;
    rep.samples = samples;
    rep.mc_mean = total / static_cast<double>(samples);
    const double var =
        std::max(0.0, (total_sq - total * total / static_cast<double>(samples)) /
                          static_cast<double>(samples - 1));
    rep.mc_stderr = std::sqrt(var / static_cast<double>(samples));
    rep.analytic = analytic_generalization_error(op, v, w);
    return rep;
}

void incremental_update_inplace(OrderParameters& op, const StepStats& stats, double eta, int n) {
    const int k = op.k();
    const int m = op.m();
    if (stats.f.size() != k || stats.y.size() != k || stats.d.size() != m) {
        throw std::invalid_argument("incremental_update: stats dimensions mismatch");
    }
    const double a = eta / static_cast<double>(n);
    for (int i = 0; i < k; ++i) {
        if (stats.f[i] == 0.0) {
            continue;
        }
        for (int nn = 0; nn < m; ++nn) {
            op.r(i, nn) += a * stats.f[i] * stats.d[nn];
        }
    }
    for (int i = 0; i < k; ++i) {
        for (int j = i; j < k; ++j) {
            const double incr = a * (stats.f[i] * stats.y[j] + stats.f[j] * stats.y[i]) +
                                a * a * stats.f[i] * stats.f[j] * stats.norm_sq;
            if (incr != 0.0) {
                op.q(i, j) += incr;
                if (i != j) {
                    op.q(j, i) = op.q(i, j);
                }
            }
        }
    }
}

OrderParameters incremental_update(const OrderParameters& op, const StepStats& stats, double eta,
                                   int n) {
    OrderParameters out = op;
    incremental_update_inplace(out, stats, eta, n);
    return out;
}

ThermoStepInfo thermo_limit_step(OrderParameters& op, Eigen::VectorXd& w,
                                 const Eigen::VectorXd& v, double eta, int n,
                                 const RuleSpec& rule, WUpdate w_update, Rng& pot_rng,
                                 Rng& mask_rng) {
    const int k = op.k();
    const int m = op.m();
    if (w.size() != k || v.size() != m) {
        throw std::invalid_argument("thermo_limit_step: dimension mismatch");
    }
    const CovarianceFactor factor = assemble_covariance(op);
    const int dim = m + k;
    Eigen::VectorXd g(dim);
    for (int a = 0; a < dim; ++a) {
        g[a] = pot_rng.normal();
    }
    const Eigen::VectorXd z = factor.transform * g;

    const DropoutMask mask = rule.dropout ? draw_mask(k, rule.p, rule.mask_mode, mask_rng)
                                          : DropoutMask::full(k);

    double teacher_out = 0.0;
    for (int a = 0; a < m; ++a) {
        teacher_out += v[a] * activation(z[a]);
    }
    double student_out = 0.0;
    for (int i = 0; i < k; ++i) {
        if (mask.selected[static_cast<std::size_t>(i)]) {
            student_out += w[i] * activation(z[m + i]);
        }
    }
    const double delta = teacher_out - student_out;
    if (!std::isfinite(delta)) {
        throw DivergenceError();
    }

    const double a = eta / static_cast<double>(n);
    Eigen::VectorXd f(k);
    Eigen::VectorXd w_incr(k);
    for (int i = 0; i < k; ++i) {
        if (mask.selected[static_cast<std::size_t>(i)]) {
            f[i] = delta * w[i] * activation_deriv(z[m + i]);
            w_incr[i] =
                a * delta * (w_update == WUpdate::Gradient ? activation(z[m + i]) : z[m + i]);
        } else {
            f[i] = 0.0;
            w_incr[i] = 0.0;
        }
    }
    // Same recurrences as the finite-N tracker with |xi|^2 -> N.
    for (int i = 0; i < k; ++i) {
        if (f[i] == 0.0) {
            continue;
        }
        for (int nn = 0; nn < m; ++nn) {
            op.r(i, nn) += a * f[i] * z[nn];
        }
    }
    const double norm_sq_limit = static_cast<double>(n);
    for (int i = 0; i < k; ++i) {
        for (int j = i; j < k; ++j) {
            const double incr = a * (f[i] * z[m + j] + f[j] * z[m + i]) +
                                a * a * f[i] * f[j] * norm_sq_limit;
            if (incr != 0.0) {
                op.q(i, j) += incr;
                if (i != j) {
                    op.q(j, i) = op.q(i, j);
                }
            }
        }
    }
    for (int i = 0; i < k; ++i) {
        if (w_incr[i] != 0.0) {
            w[i] += w_incr[i];
        }
    }
    return {delta};
}

double min_covariance_eigenvalue(const OrderParameters& op) {
    const int k = op.k();
    const int m = op.m();
    Eigen::MatrixXd cov(m + k, m + k);
    cov.topLeftCorner(m, m) = op.t;
    cov.topRightCorner(m, k) = op.r.transpose();
    cov.bottomLeftCorner(k, m) = op.r;
    cov.bottomRightCorner(k, k) = op.q;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

void check_order_parameters(const OrderParameters& op, double tol) {
    const int k = op.k();
    const int m = op.m();
    if ((op.q - op.q.transpose()).cwiseAbs().maxCoeff() > tol) {
        throw ConfigError("order parameters: Q not symmetric");
    }
    if ((op.t - op.t.transpose()).cwiseAbs().maxCoeff() > tol) {
        throw ConfigError("order parameters: T not symmetric");
    }
    const double min_eig = min_covariance_eigenvalue(op);
    if (min_eig < -tol) {
        throw ConfigError("order parameters: block covariance eigenvalue " +
                          std::to_string(min_eig));
    }
    for (int i = 0; i < k; ++i) {
        for (int nn = 0; nn < m; ++nn) {
            if (op.r(i, nn) * op.r(i, nn) > op.q(i, i) * op.t(nn, nn) + tol) {
                throw ConfigError("order parameters: Cauchy-Schwarz violated at R(" +
                                  std::to_string(i) + "," + std::to_string(nn) + ")");
            }
        }
    }
}

} // namespace sim
