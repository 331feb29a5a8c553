#include "sim/learning.hpp"

#include "sim/errors.hpp"
#include "sim/kernels.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace sim {

int DropoutMask::count() const {
    int c = 0;
    for (char s : selected) {
        c += s != 0;
    }
    return c;
}

DropoutMask DropoutMask::full(int k) {
    DropoutMask m;
    m.selected.assign(static_cast<std::size_t>(k), 1);
    m.keep_prob = 1.0;
    return m;
}

DropoutMask draw_mask(int k, double p, MaskMode mode, Rng& rng) {
    if (k < 1) {
        throw ConfigError("draw_mask: K must be >= 1");
    }
    if (!(p > 0.0) || p > 1.0) {
        throw ConfigError("draw_mask: keep probability must be in (0, 1]");
    }
    DropoutMask m;
    m.keep_prob = p;
    m.selected.assign(static_cast<std::size_t>(k), 0);
    if (mode == MaskMode::FixedSize) {
        long count = std::lround(p * k);
        if (count < 1) count = 1;
        if (count > k) count = k;
        std::vector<int> idx(static_cast<std::size_t>(k));
        std::iota(idx.begin(), idx.end(), 0);
        for (long t = 0; t < count; ++t) {
            const auto j = t + static_cast<long>(rng.bounded(static_cast<std::uint64_t>(k - t)));
            std::swap(idx[static_cast<std::size_t>(t)], idx[static_cast<std::size_t>(j)]);
            m.selected[static_cast<std::size_t>(idx[static_cast<std::size_t>(t)])] = 1;
        }
    } else {
        bool any = false;
        while (!any) {
            for (int i = 0; i < k; ++i) {
                const bool sel = rng.uniform() < p;
                m.selected[static_cast<std::size_t>(i)] = sel ? 1 : 0;
                any = any || sel;
            }
        }
    }
    return m;
}

namespace {

// Shared body of sgd_step and dropout_step; sgd is the full-mask case.
void core_step(StudentNetwork& s, const TeacherNetwork& t, const InputSample& input, double eta,
               const DropoutMask& mask, WUpdate w_update, StepStats& out) {
    if (s.n != t.n || static_cast<int>(input.xi.size()) != s.n) {
        throw std::invalid_argument("learning step: dimension mismatch");
    }
    if (static_cast<int>(mask.selected.size()) != s.k) {
        throw std::invalid_argument("learning step: mask length != K");
    }
    if (eta < 0.0) {
        throw ConfigError("learning step: eta must be >= 0");
    }

    inner_potentials_into(out.d, t.b, t.m, t.n, input);
    inner_potentials_into(out.y, s.j, s.k, s.n, input);

    double teacher_out = 0.0;
    for (int r = 0; r < t.m; ++r) {
        teacher_out += t.v[r] * activation(out.d[r]);
    }
    double student_out = 0.0;
    for (int i = 0; i < s.k; ++i) {
        if (mask.selected[static_cast<std::size_t>(i)]) {
            student_out += s.w[i] * activation(out.y[i]);
        }
    }
    out.delta = teacher_out - student_out;
    if (!std::isfinite(out.delta)) {
        throw DivergenceError();
    }

    const double scale = eta / static_cast<double>(s.n);
    out.f.resize(s.k);
    out.w_incr.resize(s.k);
    for (int i = 0; i < s.k; ++i) {
        if (mask.selected[static_cast<std::size_t>(i)]) {
            out.f[i] = out.delta * s.w[i] * activation_deriv(out.y[i]);
            out.w_incr[i] = scale * out.delta *
                            (w_update == WUpdate::Gradient ? activation(out.y[i]) : out.y[i]);
        } else {
            out.f[i] = 0.0;
            out.w_incr[i] = 0.0;
        }
    }
    // All increments are derived from the pre-update state; apply them last.
    for (int i = 0; i < s.k; ++i) {
        const double alpha = scale * out.f[i];
        if (alpha != 0.0) {
            kernels::axpy(alpha, input.xi, s.row(i));
        }
        if (out.w_incr[i] != 0.0) {
            s.w[i] += out.w_incr[i];
        }
    }
    out.mask = mask;
    out.norm_sq = input.norm_sq;
}

} // namespace

void sgd_step(StudentNetwork& student, const TeacherNetwork& teacher, const InputSample& input,
              double eta, StepStats& out, WUpdate w_update) {
    core_step(student, teacher, input, eta, DropoutMask::full(student.k), w_update, out);
}

StepStats sgd_step(StudentNetwork& student, const TeacherNetwork& teacher,
                   const InputSample& input, double eta, WUpdate w_update) {
    StepStats out;
    sgd_step(student, teacher, input, eta, out, w_update);
    return out;
}

void dropout_step(StudentNetwork& student, const TeacherNetwork& teacher, const InputSample& input,
                  double eta, const DropoutMask& mask, StepStats& out, WUpdate w_update) {
    core_step(student, teacher, input, eta, mask, w_update, out);
}

StepStats dropout_step(StudentNetwork& student, const TeacherNetwork& teacher,
                       const InputSample& input, double eta, const DropoutMask& mask,
                       WUpdate w_update) {
    StepStats out;
    dropout_step(student, teacher, input, eta, mask, out, w_update);
    return out;
}

double dropout_inference(const StudentNetwork& student, const DropoutMask& mask,
                         const InputSample& input, const Eigen::VectorXd& prev_outputs,
                         InferenceMode mode) {
    if (static_cast<int>(mask.selected.size()) != student.k) {
        throw std::invalid_argument("dropout_inference: mask length != K");
    }
    if (mode == InferenceMode::PaperLiteral && prev_outputs.size() != student.k) {
        throw std::invalid_argument("dropout_inference: prev_outputs length != K");
    }
    const Eigen::VectorXd y = student_potentials(student, input);
    double sum = 0.0;
    if (mode == InferenceMode::Rescaled) {
        for (int i = 0; i < student.k; ++i) {
            sum += student.w[i] * activation(y[i]);
        }
    } else {
        for (int i = 0; i < student.k; ++i) {
            sum += mask.selected[static_cast<std::size_t>(i)]
                       ? student.w[i] * activation(y[i])
                       : student.w[i] * prev_outputs[i];
        }
    }
    return mask.keep_prob * sum;
}

} // namespace sim
