#pragma once

#include "sim/mathfn.hpp"
#include "sim/rng.hpp"

#include <Eigen/Core>

#include <cmath>
#include <span>
#include <vector>

namespace sim {

enum class TeacherKind { Orthogonal, Singular };
enum class InputDist { Gaussian, Rademacher };

/// Hidden-unit activation g(x) = erf(x / sqrt(2)); odd, range (-1, 1).
inline double activation(double x) {
    return mathfn::erf(x * 0.7071067811865475244);
}

/// g'(x) = sqrt(2/pi) exp(-x^2 / 2).
inline double activation_deriv(double x) {
    return 0.7978845608028653559 * std::exp(-0.5 * x * x);
}

/// Fixed reference network. B is M x N row-major; immutable once built.
struct TeacherNetwork {
    int m = 0;
    int n = 0;
    TeacherKind kind = TeacherKind::Orthogonal;
    std::vector<double> b;
    Eigen::VectorXd v;

    std::span<const double> row(int r) const {
        return {b.data() + static_cast<std::size_t>(r) * n, static_cast<std::size_t>(n)};
    }
};

/// Learnable network. J is K x N row-major; mutated only by learning steps.
struct StudentNetwork {
    int k = 0;
    int n = 0;
    std::vector<double> j;
    Eigen::VectorXd w;

    std::span<double> row(int i) {
        return {j.data() + static_cast<std::size_t>(i) * n, static_cast<std::size_t>(n)};
    }
    std::span<const double> row(int i) const {
        return {j.data() + static_cast<std::size_t>(i) * n, static_cast<std::size_t>(n)};
    }
};

struct InputSample {
    std::vector<double> xi;
    double norm_sq = 0.0;
};

/// Teacher with B entries i.i.d. N(0, 1/N) and v_r = v_out (0.5 by default).
/// Singular kind copies row 1 into row 2 exactly and requires M = 2.
/// `orthonormalize` applies Gram-Schmidt to the rows (rejected for Singular).
/// RNG consumption: row 0 first, entry by entry, then row 1, ...
TeacherNetwork make_teacher(int m, int n, TeacherKind kind, Rng& rng, double v_out = 0.5,
                            bool orthonormalize = false);

/// Student with J entries i.i.d. N(0, 1/N) and w entries i.i.d. N(0, 0.1).
/// RNG consumption: all of J row by row, then w.
StudentNetwork make_student(int k, int n, Rng& rng);

InputSample sample_input(int n, InputDist dist, Rng& rng);

/// Same as sample_input but reuses the buffer in `out`.
void sample_input_into(InputSample& out, int n, InputDist dist, Rng& rng);

/// Component r = row_r . xi for a rows x n row-major matrix.
Eigen::VectorXd inner_potentials(std::span<const double> w_rowmajor, int rows, int n,
                                 const InputSample& input);
void inner_potentials_into(Eigen::VectorXd& out, std::span<const double> w_rowmajor, int rows,
                           int n, const InputSample& input);

Eigen::VectorXd teacher_potentials(const TeacherNetwork& t, const InputSample& input);
Eigen::VectorXd student_potentials(const StudentNetwork& s, const InputSample& input);

/// sum_r out_weights_r * g(potentials_r).
double forward(const Eigen::VectorXd& out_weights, const Eigen::VectorXd& potentials);

} // namespace sim
