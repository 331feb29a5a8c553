#include "sim/model.hpp"

#include "sim/errors.hpp"
#include "sim/kernels.hpp"

#include <cmath>
#include <stdexcept>

namespace sim {

namespace {

void fill_gaussian_rows(std::vector<double>& mat, int rows, int n, double sigma, Rng& rng) {
    mat.resize(static_cast<std::size_t>(rows) * n);
    for (double& entry : mat) {
        entry = sigma * rng.normal();
    }
}

// Modified Gram-Schmidt followed by row normalization.
void orthonormalize_rows(std::vector<double>& mat, int rows, int n) {
    if (rows > n) {
        throw ConfigError("orthonormalize: more rows than dimensions");
    }
    for (int r = 0; r < rows; ++r) {
        double* row_r = mat.data() + static_cast<std::size_t>(r) * n;
        for (int s = 0; s < r; ++s) {
            const double* row_s = mat.data() + static_cast<std::size_t>(s) * n;
            double proj = 0.0;
            for (int c = 0; c < n; ++c) {
                proj += row_r[c] * row_s[c];
            }
            for (int c = 0; c < n; ++c) {
                row_r[c] -= proj * row_s[c];
            }
        }
        double norm_sq = 0.0;
        for (int c = 0; c < n; ++c) {
            norm_sq += row_r[c] * row_r[c];
        }
        if (norm_sq <= 0.0) {
            throw ConfigError("orthonormalize: linearly dependent teacher rows");
        }
        const double inv = 1.0 / std::sqrt(norm_sq);
        for (int c = 0; c < n; ++c) {
            row_r[c] *= inv;
        }
    }
}

} // namespace

TeacherNetwork make_teacher(int m, int n, TeacherKind kind, Rng& rng, double v_out,
                            bool orthonormalize) {
    if (m < 1 || n < 1) {
        throw ConfigError("make_teacher: M and N must be >= 1");
    }
    if (kind == TeacherKind::Singular && m != 2) {
        throw ConfigError("make_teacher: Singular teacher requires M = 2");
    }
    if (kind == TeacherKind::Singular && orthonormalize) {
        throw ConfigError("make_teacher: Singular teacher cannot be orthonormalized");
    }
    TeacherNetwork t;
    t.m = m;
    t.n = n;
    t.kind = kind;
    const double sigma = 1.0 / std::sqrt(static_cast<double>(n));
    if (kind == TeacherKind::Singular) {
        fill_gaussian_rows(t.b, 1, n, sigma, rng);
        t.b.resize(static_cast<std::size_t>(2) * n);
        std::copy(t.b.begin(), t.b.begin() + n, t.b.begin() + n);
    } else {
        fill_gaussian_rows(t.b, m, n, sigma, rng);
        if (orthonormalize) {
            orthonormalize_rows(t.b, m, n);
        }
    }
    t.v = Eigen::VectorXd::Constant(m, v_out);
    return t;
}

StudentNetwork make_student(int k, int n, Rng& rng) {
    if (k < 1 || n < 1) {
        throw ConfigError("make_student: K and N must be >= 1");
    }
    StudentNetwork s;
    s.k = k;
    s.n = n;
    fill_gaussian_rows(s.j, k, n, 1.0 / std::sqrt(static_cast<double>(n)), rng);
    const double sigma_w = std::sqrt(0.1);
    s.w.resize(k);
    for (int i = 0; i < k; ++i) {
        s.w[i] = sigma_w * rng.normal();
    }
    return s;
}

void sample_input_into(InputSample& out, int n, InputDist dist, Rng& rng) {
    out.xi.resize(n);
    if (dist == InputDist::Gaussian) {
        for (double& x : out.xi) {
            x = rng.normal();
        }
    } else {
        for (double& x : out.xi) {
            x = (rng.next_u64() & 1u) ? 1.0 : -1.0;
        }
    }
    out.norm_sq = kernels::dot(out.xi, out.xi);
}

InputSample sample_input(int n, InputDist dist, Rng& rng) {
    if (n < 1) {
        throw ConfigError("sample_input: N must be >= 1");
    }
    InputSample s;
    sample_input_into(s, n, dist, rng);
    return s;
}

void inner_potentials_into(Eigen::VectorXd& out, std::span<const double> w_rowmajor, int rows,
                           int n, const InputSample& input) {
    if (static_cast<int>(input.xi.size()) != n ||
        w_rowmajor.size() != static_cast<std::size_t>(rows) * n) {
        throw std::invalid_argument("inner_potentials: dimension mismatch");
    }
    out.resize(rows);
    for (int r = 0; r < rows; ++r) {
        out[r] = kernels::dot(w_rowmajor.subspan(static_cast<std::size_t>(r) * n,
                                                 static_cast<std::size_t>(n)),
                              input.xi);
    }
}

Eigen::VectorXd inner_potentials(std::span<const double> w_rowmajor, int rows, int n,
                                 const InputSample& input) {
    Eigen::VectorXd out;
    inner_potentials_into(out, w_rowmajor, rows, n, input);
    return out;
}

Eigen::VectorXd teacher_potentials(const TeacherNetwork& t, const InputSample& input) {
    return inner_potentials(t.b, t.m, t.n, input);
}

Eigen::VectorXd student_potentials(const StudentNetwork& s, const InputSample& input) {
    return inner_potentials(s.j, s.k, s.n, input);
}

double forward(const Eigen::VectorXd& out_weights, const Eigen::VectorXd& potentials) {
    if (out_weights.size() != potentials.size()) {
        throw std::invalid_argument("forward: dimension mismatch");
    }
    double s = 0.0;
    for (Eigen::Index r = 0; r < out_weights.size(); ++r) {
        s += out_weights[r] * activation(potentials[r]);
    }
    return s;
}

} // namespace sim
