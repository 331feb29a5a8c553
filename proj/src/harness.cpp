#include "sim/harness.hpp"

#include "sim/errors.hpp"
#include "sim/kernels.hpp"
#include "sim/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace sim {

namespace {

constexpr long long kRemeasureInterval = 100000;

// Trailing window of per-step errors; mean() sums oldest-to-newest so the
// value matches windowed_mse() exactly.
class TrailingWindow {
public:
    explicit TrailingWindow(long long window) : buf_(static_cast<std::size_t>(window)) {}

    void push(double v) {
        buf_[static_cast<std::size_t>(pos_)] = v;
        pos_ = (pos_ + 1) % static_cast<long long>(buf_.size());
        if (count_ < static_cast<long long>(buf_.size())) {
            ++count_;
        }
    }

    double mean() const {
        if (count_ == 0) {
            return 0.0;
        }
        const long long size = static_cast<long long>(buf_.size());
        const long long start = count_ < size ? 0 : pos_;
        double s = 0.0;
        for (long long i = 0; i < count_; ++i) {
            s += buf_[static_cast<std::size_t>((start + i) % size)];
        }
        return s / static_cast<double>(count_);
    }

private:
    std::vector<double> buf_;
    long long pos_ = 0;
    long long count_ = 0;
};

TrajectoryRecord snapshot(double t, double mse_w, double eg, const Eigen::VectorXd& w,
                          const Eigen::MatrixXd& q, const Eigen::MatrixXd& r) {
    TrajectoryRecord rec;
    rec.t = t;
    rec.mse_window = mse_w;
    rec.eg_analytic = eg;
    rec.w = w;
    const int k = static_cast<int>(q.rows());
    const int m = static_cast<int>(r.cols());
    rec.q_upper.reserve(static_cast<std::size_t>(k) * (k + 1) / 2);
    for (int i = 0; i < k; ++i) {
        for (int j = i; j < k; ++j) {
            rec.q_upper.push_back(q(i, j));
        }
    }
    rec.r.reserve(static_cast<std::size_t>(k) * m);
    for (int i = 0; i < k; ++i) {
        for (int nn = 0; nn < m; ++nn) {
            rec.r.push_back(r(i, nn));
        }
    }
    return rec;
}

RunSummary summarize(const SimConfig& cfg, const std::vector<TrajectoryRecord>& records,
                     bool diverged, long long diverged_step, double max_drift) {
    RunSummary s;
    s.final_record = records.back();
    s.diverged = diverged;
    s.diverged_step = diverged_step;
    s.max_tracking_drift = max_drift;

    std::vector<std::pair<double, double>> mse_series;
    mse_series.reserve(records.size());
    for (const TrajectoryRecord& rec : records) {
        mse_series.emplace_back(rec.t, rec.mse_window);
    }
    if (mse_series.size() >= 3) {
        s.plateaus = detect_plateaus(mse_series, cfg.plateau_slope_tol, cfg.plateau_min_duration);
    }
    s.symmetry_break_t = detect_symmetry_break(mse_series, cfg.symmetry_drop_factor);
    if (cfg.teacher_kind == TeacherKind::Singular) {
        std::vector<std::pair<double, double>> metric;
        metric.reserve(records.size());
        for (const TrajectoryRecord& rec : records) {
            double mx = 0.0;
            for (double x : rec.r) {
                mx = std::max(mx, std::abs(x));
            }
            metric.emplace_back(rec.t, mx);
        }
        s.singular_dwell = singular_dwell_metric(metric, cfg.singular_band_lo,
                                                 cfg.singular_band_hi);
    }
    return s;
}

RunResult run_direct(const SimConfig& cfg) {
    Rng teacher_rng = Rng::substream(cfg.seed, stream::teacher);
    Rng student_rng = Rng::substream(cfg.seed, stream::student);
    Rng input_rng = Rng::substream(cfg.seed, stream::input);
    Rng mask_rng = Rng::substream(cfg.seed, stream::mask);

    const TeacherNetwork teacher =
        make_teacher(cfg.m, cfg.n, cfg.teacher_kind, teacher_rng, cfg.teacher_v,
                     cfg.orthonormalize);
    StudentNetwork student = make_student(cfg.k, cfg.n, student_rng);
    OrderParameters op = measure(teacher, student);

    const long long sample_every = cfg.effective_sample_every();
    TrailingWindow window(cfg.effective_window());

    RunResult result;
    result.teacher_overlap = op.t;
    const double eg0 = analytic_generalization_error(op, teacher.v, student.w);
    result.records.push_back(snapshot(0.0, eg0, eg0, student.w, op.q, op.r));

    bool diverged = false;
    long long diverged_step = -1;
    double max_drift = 0.0;
    StepStats stats;
    InputSample input;
    for (long long step = 1; step <= cfg.steps; ++step) {
        sample_input_into(input, cfg.n, cfg.input_dist, input_rng);
        try {
            if (cfg.use_dropout) {
                const DropoutMask mask =
                    draw_mask(cfg.k, cfg.dropout.p, cfg.dropout.mask_mode, mask_rng);
                dropout_step(student, teacher, input, cfg.eta, mask, stats, cfg.w_update);
            } else {
                sgd_step(student, teacher, input, cfg.eta, stats, cfg.w_update);
            }
        } catch (const DivergenceError&) {
            diverged = true;
            diverged_step = step;
            break;
        }
        incremental_update_inplace(op, stats, cfg.eta, cfg.n);
        window.push(0.5 * stats.delta * stats.delta);

        if (step % kRemeasureInterval == 0) {
            OrderParameters measured = measure(teacher, student);
            const double drift =
                std::max((op.q - measured.q).cwiseAbs().maxCoeff(),
                         (op.r - measured.r).cwiseAbs().maxCoeff());
            max_drift = std::max(max_drift, drift);
            op = std::move(measured);
        }
        if (step % sample_every == 0) {
            double eg = 0.0;
            try {
                eg = analytic_generalization_error(op, teacher.v, student.w);
            } catch (const ConfigError&) {
                diverged = true;
                diverged_step = step;
                break;
            }
            result.records.push_back(snapshot(static_cast<double>(step) / cfg.n, window.mean(),
                                              eg, student.w, op.q, op.r));
        }
    }
    result.summary = summarize(cfg, result.records, diverged, diverged_step, max_drift);
    return result;
}

RunResult run_thermo(const SimConfig& cfg) {
    Rng student_rng = Rng::substream(cfg.seed, stream::student);
    Rng pot_rng = Rng::substream(cfg.seed, stream::potentials);
    Rng mask_rng = Rng::substream(cfg.seed, stream::mask);

    OrderParameters op;
    op.q = Eigen::MatrixXd::Identity(cfg.k, cfg.k);
    op.r = Eigen::MatrixXd::Zero(cfg.k, cfg.m);
    op.t = cfg.teacher_kind == TeacherKind::Singular ? Eigen::MatrixXd::Ones(2, 2)
                                                     : Eigen::MatrixXd::Identity(cfg.m, cfg.m);
    const Eigen::VectorXd v = Eigen::VectorXd::Constant(cfg.m, cfg.teacher_v);
    Eigen::VectorXd w(cfg.k);
    const double sigma_w = std::sqrt(0.1);
    for (int i = 0; i < cfg.k; ++i) {
        w[i] = sigma_w * student_rng.normal();
    }

    const long long sample_every = cfg.effective_sample_every();
    TrailingWindow window(cfg.effective_window());
    const RuleSpec rule = cfg.rule_spec();

    RunResult result;
    result.teacher_overlap = op.t;
    const double eg0 = analytic_generalization_error(op, v, w);
    result.records.push_back(snapshot(0.0, eg0, eg0, w, op.q, op.r));

    bool diverged = false;
    long long diverged_step = -1;
    for (long long step = 1; step <= cfg.steps; ++step) {
        ThermoStepInfo info;
        try {
            info = thermo_limit_step(op, w, v, cfg.eta, cfg.n, rule, cfg.w_update, pot_rng,
                                     mask_rng);
        } catch (const DivergenceError&) {
            diverged = true;
            diverged_step = step;
            break;
        } catch (const ConfigError&) { // covariance drifted past tolerance
            diverged = true;
            diverged_step = step;
            break;
        }
        window.push(0.5 * info.delta * info.delta);
        if (step % sample_every == 0) {
            double eg = 0.0;
            try {
                eg = analytic_generalization_error(op, v, w);
            } catch (const ConfigError&) {
                diverged = true;
                diverged_step = step;
                break;
            }
            result.records.push_back(snapshot(static_cast<double>(step) / cfg.n, window.mean(),
                                              eg, w, op.q, op.r));
        }
    }
    result.summary = summarize(cfg, result.records, diverged, diverged_step, 0.0);
    return result;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::optional<double> median_optional(const std::vector<std::optional<double>>& vals) {
    std::vector<double> present;
    for (const auto& v : vals) {
        if (v.has_value()) {
            present.push_back(*v);
        }
    }
    if (present.empty()) {
        return std::nullopt;
    }
    return median(std::move(present));
}

bool same_rule(const SimConfig& a, const SimConfig& b) {
    if (a.use_dropout != b.use_dropout) {
        return false;
    }
    if (!a.use_dropout) {
        return true;
    }
    return a.dropout.p == b.dropout.p && a.dropout.mask_mode == b.dropout.mask_mode &&
           a.dropout.inference_mode == b.dropout.inference_mode;
}

void require_equal_except_rule(const SimConfig& a, const SimConfig& b) {
    const bool equal =
        a.n == b.n && a.m == b.m && a.k == b.k && a.eta == b.eta &&
        a.teacher_kind == b.teacher_kind && a.backend == b.backend &&
        a.input_dist == b.input_dist && a.w_update == b.w_update && a.steps == b.steps &&
        a.sample_every == b.sample_every && a.window == b.window && a.seed == b.seed &&
        a.teacher_v == b.teacher_v && a.orthonormalize == b.orthonormalize &&
        a.plateau_slope_tol == b.plateau_slope_tol &&
        a.plateau_min_duration == b.plateau_min_duration &&
        a.singular_band_lo == b.singular_band_lo && a.singular_band_hi == b.singular_band_hi &&
        a.symmetry_drop_factor == b.symmetry_drop_factor;
    if (!equal) {
        throw ConfigError("compare: configs must differ only in the learning rule");
    }
}

} // namespace

RuleSpec SimConfig::rule_spec() const {
    RuleSpec r;
    r.dropout = use_dropout;
    r.p = use_dropout ? dropout.p : 1.0;
    r.mask_mode = dropout.mask_mode;
    return r;
}

void SimConfig::validate() const {
    if (m < 1) throw ConfigError("config: M must be >= 1");
    if (k < 1) throw ConfigError("config: K must be >= 1");
    if (n < 1) throw ConfigError("config: N must be >= 1");
    if (!(eta > 0.0)) throw ConfigError("config: eta must be > 0");
    if (steps < 0) throw ConfigError("config: steps must be >= 0");
    if (use_dropout && (!(dropout.p > 0.0) || dropout.p > 1.0)) {
        throw ConfigError("config: rule.dropout.p must be in (0, 1]");
    }
    if (sample_every != -1 && sample_every < 1) {
        throw ConfigError("config: sample_every must be >= 1");
    }
    if (window != -1 && window < 1) {
        throw ConfigError("config: window must be >= 1");
    }
    if (teacher_kind == TeacherKind::Singular && m != 2) {
        throw ConfigError("config: singular teacher requires M = 2");
    }
    if (teacher_kind == TeacherKind::Singular && orthonormalize) {
        throw ConfigError("config: singular teacher cannot be orthonormalized");
    }
    if (!(plateau_slope_tol > 0.0)) throw ConfigError("config: plateau_slope_tol must be > 0");
    if (!(plateau_min_duration > 0.0)) {
        throw ConfigError("config: plateau_min_duration must be > 0");
    }
    if (!(singular_band_lo > 0.0 && singular_band_lo < singular_band_hi &&
          singular_band_hi < 1.0)) {
        throw ConfigError("config: singular band must satisfy 0 < lo < hi < 1");
    }
    if (!(symmetry_drop_factor > 0.0 && symmetry_drop_factor < 1.0)) {
        throw ConfigError("config: symmetry_drop_factor must be in (0, 1)");
    }
}

RunResult run(const SimConfig& config) {
    config.validate();
    return config.backend == Backend::Direct ? run_direct(config) : run_thermo(config);
}

std::vector<double> windowed_mse(const std::vector<double>& errors, long long window) {
    if (errors.empty()) {
        throw ConfigError("windowed_mse: empty series");
    }
    if (window < 1) {
        throw ConfigError("windowed_mse: window must be >= 1");
    }
    std::vector<double> out(errors.size());
    for (std::size_t i = 0; i < errors.size(); ++i) {
        const std::size_t start =
            i + 1 >= static_cast<std::size_t>(window) ? i + 1 - static_cast<std::size_t>(window)
                                                      : 0;
        double s = 0.0;
        for (std::size_t j = start; j <= i; ++j) {
            s += errors[j];
        }
        out[i] = s / static_cast<double>(i - start + 1);
    }
    return out;
}

std::vector<PlateauInterval> detect_plateaus(const std::vector<std::pair<double, double>>& series,
                                             double slope_tol, double min_duration) {
    if (series.size() < 3) {
        throw ConfigError("detect_plateaus: need at least 3 points");
    }
    if (!(slope_tol > 0.0) || !(min_duration > 0.0)) {
        throw ConfigError("detect_plateaus: slope_tol and min_duration must be > 0");
    }
    const std::size_t n = series.size();
    const double half_w = min_duration / 4.0;

    std::vector<double> logs(n);
    for (std::size_t i = 0; i < n; ++i) {
        logs[i] = std::log(std::max(series[i].second, 1e-300));
    }

    std::vector<char> flat(n, 0);
    std::size_t lo = 0;
    std::size_t hi = 0;
    for (std::size_t i = 0; i < n; ++i) {
        while (lo < n && series[lo].first < series[i].first - half_w) {
            ++lo;
        }
        if (hi < lo) {
            hi = lo;
        }
        while (hi < n && series[hi].first <= series[i].first + half_w) {
            ++hi;
        }
        const std::size_t cnt = hi - lo;
        if (cnt < 2) {
            continue;
        }
        double st = 0.0;
        double sy = 0.0;
        for (std::size_t j = lo; j < hi; ++j) {
            st += series[j].first;
            sy += logs[j];
        }
        const double tbar = st / static_cast<double>(cnt);
        const double ybar = sy / static_cast<double>(cnt);
        double sxx = 0.0;
        double sxy = 0.0;
        for (std::size_t j = lo; j < hi; ++j) {
            const double dx = series[j].first - tbar;
            sxx += dx * dx;
            sxy += dx * (logs[j] - ybar);
        }
        if (sxx <= 0.0) {
            continue;
        }
        flat[i] = std::abs(sxy / sxx) <= slope_tol;
    }

    std::vector<PlateauInterval> out;
    std::size_t i = 0;
    while (i < n) {
        if (!flat[i]) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < n && flat[j + 1]) {
            ++j;
        }
        // The slope window hides min_duration/4 on each side of a run; give it back.
        double t_start = std::max(series.front().first, series[i].first - half_w);
        double t_end = std::min(series.back().first, series[j].first + half_w);
        if (!out.empty()) {
            t_start = std::max(t_start, out.back().t_end);
        }
        if (t_end - t_start >= min_duration) {
            double level = 0.0;
            for (std::size_t a = i; a <= j; ++a) {
                level += series[a].second;
            }
            out.push_back({t_start, t_end, level / static_cast<double>(j - i + 1)});
        }
        i = j + 1;
    }
    return out;
}

std::optional<double> detect_symmetry_break(const std::vector<std::pair<double, double>>& series,
                                            double drop_factor) {
    if (series.empty()) {
        throw ConfigError("detect_symmetry_break: empty series");
    }
    if (!(drop_factor > 0.0 && drop_factor < 1.0)) {
        throw ConfigError("detect_symmetry_break: drop_factor must be in (0, 1)");
    }
    constexpr std::size_t kRefWindow = 16;
    for (std::size_t i = 1; i < series.size(); ++i) {
        const std::size_t lo = i > kRefWindow ? i - kRefWindow : 0;
        double ref = 0.0;
        for (std::size_t j = lo; j < i; ++j) {
            ref += series[j].second;
        }
        ref /= static_cast<double>(i - lo);
        if (ref > 0.0 && series[i].second < drop_factor * ref) {
            return series[i].first;
        }
    }
    return std::nullopt;
}

double singular_dwell_metric(const std::vector<std::pair<double, double>>& series, double lo,
                             double hi) {
    if (series.empty()) {
        throw ConfigError("singular_dwell: empty series");
    }
    if (!(lo > 0.0 && lo < hi && hi < 1.0)) {
        throw ConfigError("singular_dwell: band must satisfy 0 < lo < hi < 1");
    }
    double dwell = 0.0;
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (series[i].second > hi) {
            break;
        }
        if (i + 1 < series.size() && series[i].second >= lo) {
            dwell += series[i + 1].first - series[i].first;
        }
    }
    return dwell;
}

double singular_dwell(const std::vector<std::pair<double, Eigen::MatrixXd>>& r_series, double lo,
                      double hi) {
    std::vector<std::pair<double, double>> metric;
    metric.reserve(r_series.size());
    for (const auto& [t, r] : r_series) {
        metric.emplace_back(t, r.size() == 0 ? 0.0 : r.cwiseAbs().maxCoeff());
    }
    return singular_dwell_metric(metric, lo, hi);
}

CompareReport compare(const SimConfig& base, const SimConfig& variant,
                      const std::vector<std::uint64_t>& seeds) {
    base.validate();
    variant.validate();
    if (seeds.size() < 3) {
        throw ConfigError("compare: need at least 3 seeds");
    }
    require_equal_except_rule(base, variant);
    if (same_rule(base, variant)) {
        throw ConfigError("compare: base and variant have identical rules");
    }

    const int s = static_cast<int>(seeds.size());
    CompareReport report;
    report.seeds = seeds;
    report.base.resize(seeds.size());
    report.variant.resize(seeds.size());

    par::for_index(2 * s, [&](int idx) {
        const bool is_variant = idx >= s;
        SimConfig cfg = is_variant ? variant : base;
        cfg.seed = seeds[static_cast<std::size_t>(idx % s)];
        const RunResult res = run(cfg);
        CompareMetrics mtr;
        mtr.final_mse = res.summary.final_record.mse_window;
        mtr.symmetry_break_t = res.summary.symmetry_break_t;
        mtr.singular_dwell = res.summary.singular_dwell;
        mtr.diverged = res.summary.diverged;
        (is_variant ? report.variant : report.base)[static_cast<std::size_t>(idx % s)] = mtr;
    });

    auto fill_median = [](const std::vector<CompareMetrics>& ms) {
        CompareMetrics out;
        std::vector<double> mse;
        std::vector<std::optional<double>> sym;
        std::vector<std::optional<double>> dwell;
        for (const CompareMetrics& mtr : ms) {
            mse.push_back(mtr.final_mse);
            sym.push_back(mtr.symmetry_break_t);
            dwell.push_back(mtr.singular_dwell);
        }
        out.final_mse = median(std::move(mse));
        out.symmetry_break_t = median_optional(sym);
        out.singular_dwell = median_optional(dwell);
        return out;
    };
    report.base_median = fill_median(report.base);
    report.variant_median = fill_median(report.variant);
    return report;
}

VerifyReport verify_generalization_error(int trials, int max_m, int max_k, long long samples,
                                         std::uint64_t seed) {
    if (trials < 1) {
        throw ConfigError("verify: trials must be >= 1");
    }
    if (max_m < 1 || max_k < 1) {
        throw ConfigError("verify: max_M and max_K must be >= 1");
    }
    VerifyReport report;
    report.trials.resize(static_cast<std::size_t>(trials));
    report.samples = samples;
    report.seed = seed;

    constexpr int kTrialN = 400;
    par::for_index(trials, [&](int tr) {
        Rng rng = Rng::substream(seed, 0x76657200ull + static_cast<std::uint64_t>(tr));
        const int m = 1 + static_cast<int>(rng.bounded(static_cast<std::uint64_t>(max_m)));
        const int k = 1 + static_cast<int>(rng.bounded(static_cast<std::uint64_t>(max_k)));
        const bool singular = m == 2 && rng.bounded(4) == 0;
        const double v_out = 0.3 + 0.5 * rng.uniform();
        const TeacherNetwork teacher = make_teacher(
            m, kTrialN, singular ? TeacherKind::Singular : TeacherKind::Orthogonal, rng, v_out);
        StudentNetwork student = make_student(k, kTrialN, rng);
        // Mix teacher directions into the student so R and Q are non-trivial.
        for (int i = 0; i < k; ++i) {
            auto row = student.row(i);
            const double scale = 0.3 + rng.uniform();
            for (double& x : row) {
                x *= scale;
            }
            for (int nn = 0; nn < m; ++nn) {
                if (rng.uniform() < 0.5) {
                    kernels::axpy(0.8 * (2.0 * rng.uniform() - 1.0), teacher.row(nn), row);
                }
            }
        }
        for (int i = 0; i < k; ++i) {
            student.w[i] = 0.5 * rng.normal();
        }
        const OrderParameters op = measure(teacher, student);
        const GenErrorReport rep =
            monte_carlo_generalization_error(op, teacher.v, student.w, samples, rng);
        VerifyTrial& out = report.trials[static_cast<std::size_t>(tr)];
        out.m = m;
        out.k = k;
        out.singular = singular;
        out.analytic = rep.analytic;
        out.mc_mean = rep.mc_mean;
        out.mc_stderr = rep.mc_stderr;
        out.z = rep.mc_stderr > 0.0 ? (rep.mc_mean - rep.analytic) / rep.mc_stderr : 0.0;
        out.pass = std::abs(out.z) <= 5.0;
    });

    report.pass_count = 0;
    for (const VerifyTrial& t : report.trials) {
        report.pass_count += t.pass ? 1 : 0;
    }
    return report;
}

SimConfig scenario(const std::string& name) {
    SimConfig cfg;
    cfg.n = 1000;
    cfg.m = 2;
    cfg.eta = 0.005;
    cfg.seed = 1;
    cfg.steps = 20'000'000; // t = 20000
    if (name == "learnable_sgd") {
        cfg.k = 2;
    } else if (name == "redundant_sgd") {
        cfg.k = 4;
    } else if (name == "redundant_dropout") {
        cfg.k = 4;
        cfg.use_dropout = true;
    } else if (name == "singular_sgd") {
        cfg.k = 4;
        cfg.teacher_kind = TeacherKind::Singular;
    } else if (name == "singular_dropout") {
        cfg.k = 4;
        cfg.teacher_kind = TeacherKind::Singular;
        cfg.use_dropout = true;
    } else {
        std::string known;
        for (const std::string& s : scenario_names()) {
            known += known.empty() ? s : ", " + s;
        }
        throw ConfigError("unknown scenario '" + name + "' (known: " + known + ")");
    }
    return cfg;
}

std::vector<std::string> scenario_names() {
    return {"learnable_sgd", "redundant_sgd", "redundant_dropout", "singular_sgd",
            "singular_dropout"};
}

} // namespace sim
