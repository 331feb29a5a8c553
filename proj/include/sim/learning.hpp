#pragma once

#include "sim/model.hpp"
#include "sim/rng.hpp"

#include <Eigen/Core>

#include <vector>

namespace sim {

enum class MaskMode { FixedSize, Bernoulli };
enum class InferenceMode { Rescaled, PaperLiteral };

/// Hidden-to-output update form. Gradient descends the squared error
/// (increment proportional to g(y_i)); PaperLiteral uses the raw potential
/// y_i instead.
enum class WUpdate { Gradient, PaperLiteral };

struct DropoutMask {
    std::vector<char> selected; // one entry per student hidden unit
    double keep_prob = 1.0;

    int count() const;
    static DropoutMask full(int k);
};

/// Everything a single learning step did, in terms that the order-parameter
/// recurrences can consume. The realized weight change is exactly
/// J_i += (eta/N) * f_i * xi, and f_i = 0 for units not updated.
struct StepStats {
    double delta = 0.0;     // global error signal (delta or delta^D)
    Eigen::VectorXd d;      // teacher inner potentials
    Eigen::VectorXd y;      // student inner potentials, pre-update
    Eigen::VectorXd f;      // delta * w_i * g'(y_i) on updated units, else 0
    Eigen::VectorXd w_incr; // applied hidden-to-output increments
    DropoutMask mask;
    double norm_sq = 0.0;   // cached |xi|^2
};

/// FixedSize: uniformly random subset of exactly round(p*K) units, never
/// empty (round(p*K) is clamped to >= 1). Bernoulli: each unit kept with
/// probability p, redrawn whole if empty.
DropoutMask draw_mask(int k, double p, MaskMode mode, Rng& rng);

/// One online SGD step (all units updated). Potentials, the error signal and
/// all increments are computed from pre-update weights, then applied.
/// Throws DivergenceError on non-finite intermediates.
void sgd_step(StudentNetwork& student, const TeacherNetwork& teacher, const InputSample& input,
              double eta, StepStats& out, WUpdate w_update = WUpdate::Gradient);
StepStats sgd_step(StudentNetwork& student, const TeacherNetwork& teacher,
                   const InputSample& input, double eta, WUpdate w_update = WUpdate::Gradient);

/// One dropout step: the error signal omits unselected units from the
/// student sum and only selected units are updated. With a full mask this is
/// bit-identical to sgd_step.
void dropout_step(StudentNetwork& student, const TeacherNetwork& teacher,
                  const InputSample& input, double eta, const DropoutMask& mask, StepStats& out,
                  WUpdate w_update = WUpdate::Gradient);
StepStats dropout_step(StudentNetwork& student, const TeacherNetwork& teacher,
                       const InputSample& input, double eta, const DropoutMask& mask,
                       WUpdate w_update = WUpdate::Gradient);

/// Evaluation-time output of a dropout-trained student.
/// Rescaled: p * sum over all units of w_i g(y_i) under the current input.
/// PaperLiteral: p * [selected units under the current input + unselected
/// units contributing w_j * prev_outputs_j], where prev_outputs caches the
/// g(y_j) values of the previous step.
double dropout_inference(const StudentNetwork& student, const DropoutMask& mask,
                         const InputSample& input, const Eigen::VectorXd& prev_outputs,
                         InferenceMode mode);

inline double squared_error(double t_out, double s_out) {
    const double diff = t_out - s_out;
    return 0.5 * diff * diff;
}

} // namespace sim
