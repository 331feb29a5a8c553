#include "sim/output.hpp"

#include "sim/errors.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace sim {

namespace fs = std::filesystem;

std::string format_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string trajectory_csv(const std::vector<TrajectoryRecord>& records, int k, int m) {
    std::string out = "t,mse_window,eg_analytic";
    for (int i = 1; i <= k; ++i) {
        out += ",w_" + std::to_string(i);
    }
    for (int i = 1; i <= k; ++i) {
        for (int j = i; j <= k; ++j) {
            out += ",Q_" + std::to_string(i) + std::to_string(j);
        }
    }
    for (int i = 1; i <= k; ++i) {
        for (int nn = 1; nn <= m; ++nn) {
            out += ",R_" + std::to_string(i) + std::to_string(nn);
        }
    }
    out += "\n";
    for (const TrajectoryRecord& rec : records) {
        out += format_g17(rec.t);
        out += ',';
        out += format_g17(rec.mse_window);
        out += ',';
        out += format_g17(rec.eg_analytic);
        for (Eigen::Index i = 0; i < rec.w.size(); ++i) {
            out += ',';
            out += format_g17(rec.w[i]);
        }
        for (double q : rec.q_upper) {
            out += ',';
            out += format_g17(q);
        }
        for (double r : rec.r) {
            out += ',';
            out += format_g17(r);
        }
        out += '\n';
    }
    return out;
}

namespace {

std::string optional_cell(const std::optional<double>& v) {
    return v.has_value() ? format_g17(*v) : std::string();
}

} // namespace

std::string compare_csv(const CompareReport& report) {
    std::string out =
        "seed,base_final_mse,variant_final_mse,base_symmetry_break_t,"
        "variant_symmetry_break_t,base_singular_dwell,variant_singular_dwell\n";
    for (std::size_t i = 0; i < report.seeds.size(); ++i) {
        const CompareMetrics& b = report.base[i];
        const CompareMetrics& v = report.variant[i];
        out += std::to_string(report.seeds[i]);
        out += ',' + format_g17(b.final_mse);
        out += ',' + format_g17(v.final_mse);
        out += ',' + optional_cell(b.symmetry_break_t);
        out += ',' + optional_cell(v.symmetry_break_t);
        out += ',' + optional_cell(b.singular_dwell);
        out += ',' + optional_cell(v.singular_dwell);
        out += '\n';
    }
    return out;
}

std::string verify_csv(const VerifyReport& report) {
    std::string out = "trial,M,K,singular,analytic,mc_mean,mc_stderr,z,pass\n";
    for (std::size_t i = 0; i < report.trials.size(); ++i) {
        const VerifyTrial& t = report.trials[i];
        out += std::to_string(i);
        out += ',' + std::to_string(t.m);
        out += ',' + std::to_string(t.k);
        out += ',' + std::string(t.singular ? "1" : "0");
        out += ',' + format_g17(t.analytic);
        out += ',' + format_g17(t.mc_mean);
        out += ',' + format_g17(t.mc_stderr);
        out += ',' + format_g17(t.z);
        out += ',' + std::string(t.pass ? "1" : "0");
        out += '\n';
    }
    return out;
}

void write_file_atomic(const fs::path& path, std::string_view content) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw IoError("cannot open '" + tmp.string() + "' for writing");
        }
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            std::error_code ec;
            fs::remove(tmp, ec);
            throw IoError("short write to '" + tmp.string() + "'");
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        std::error_code ec2;
        fs::remove(tmp, ec2);
        throw IoError("cannot rename '" + tmp.string() + "' to '" + path.string() +
                      "': " + ec.message());
    }
}

namespace {

struct ChartSeries {
    std::string label;
    std::vector<std::pair<double, double>> points;
};

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                          "#8c564b", "#17becf", "#bcbd22", "#e377c2", "#7f7f7f"};
constexpr int kPaletteSize = 10;

constexpr double kW = 860.0;
constexpr double kH = 520.0;
constexpr double kLeft = 72.0;
constexpr double kRight = 840.0;
constexpr double kTop = 34.0;
constexpr double kBottom = 468.0;

std::string fmt2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string fmt_tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::vector<double> nice_ticks(double lo, double hi, int target) {
    std::vector<double> ticks;
    if (!(hi > lo)) {
        ticks.push_back(lo);
        return ticks;
    }
    const double raw = (hi - lo) / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double r = raw / mag;
    const double step = (r < 1.5 ? 1.0 : r < 3.5 ? 2.0 : r < 7.5 ? 5.0 : 10.0) * mag;
    double v = std::ceil(lo / step) * step;
    while (v <= hi + 0.5 * step) {
        ticks.push_back(v);
        v += step;
    }
    return ticks;
}

std::string line_chart(const std::string& title, const std::string& y_label,
                       const std::vector<ChartSeries>& series, bool log_y) {
    constexpr double kLogFloor = 1e-16;
    double xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;
    bool first = true;
    auto ty = [&](double v) { return log_y ? std::log10(std::max(v, kLogFloor)) : v; };
    for (const ChartSeries& s : series) {
        for (const auto& [x, y] : s.points) {
            if (!std::isfinite(x) || !std::isfinite(y)) {
                continue;
            }
            const double yy = ty(y);
            if (first) {
                xmin = xmax = x;
                ymin = ymax = yy;
                first = false;
            } else {
                xmin = std::min(xmin, x);
                xmax = std::max(xmax, x);
                ymin = std::min(ymin, yy);
                ymax = std::max(ymax, yy);
            }
        }
    }
    if (xmax <= xmin) {
        xmax = xmin + 1.0;
    }
    if (ymax <= ymin) {
        ymax = ymin + 1.0;
    }
    const double ypad = 0.04 * (ymax - ymin);
    ymin -= ypad;
    ymax += ypad;

    auto px = [&](double x) { return kLeft + (x - xmin) / (xmax - xmin) * (kRight - kLeft); };
    auto py = [&](double y) { return kBottom - (ty(y) - ymin) / (ymax - ymin) * (kBottom - kTop); };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
        << "\" viewBox=\"0 0 " << kW << " " << kH << "\">\n";
    svg << "<rect width=\"" << kW << "\" height=\"" << kH << "\" fill=\"white\"/>\n";
    svg << "<text x=\"" << (kLeft + kRight) / 2 << "\" y=\"20\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"15\">" << title << "</text>\n";

    // axes
    svg << "<line x1=\"" << kLeft << "\" y1=\"" << kBottom << "\" x2=\"" << kRight << "\" y2=\""
        << kBottom << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\""
        << kBottom << "\" stroke=\"black\"/>\n";

    for (double t : nice_ticks(xmin, xmax, 6)) {
        const double x = px(t);
        svg << "<line x1=\"" << fmt2(x) << "\" y1=\"" << kBottom << "\" x2=\"" << fmt2(x)
            << "\" y2=\"" << kBottom + 5 << "\" stroke=\"black\"/>\n";
        svg << "<text x=\"" << fmt2(x) << "\" y=\"" << kBottom + 20
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
            << fmt_tick(t) << "</text>\n";
    }
    if (log_y) {
        for (int d = static_cast<int>(std::ceil(ymin)); d <= static_cast<int>(std::floor(ymax));
             ++d) {
            const double y = kBottom - (d - ymin) / (ymax - ymin) * (kBottom - kTop);
            svg << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << fmt2(y) << "\" x2=\"" << kLeft
                << "\" y2=\"" << fmt2(y) << "\" stroke=\"black\"/>\n";
            svg << "<text x=\"" << kLeft - 8 << "\" y=\"" << fmt2(y + 4)
                << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">1e"
                << d << "</text>\n";
        }
    } else {
        for (double t : nice_ticks(ymin, ymax, 6)) {
            const double y = kBottom - (t - ymin) / (ymax - ymin) * (kBottom - kTop);
            svg << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << fmt2(y) << "\" x2=\"" << kLeft
                << "\" y2=\"" << fmt2(y) << "\" stroke=\"black\"/>\n";
            svg << "<text x=\"" << kLeft - 8 << "\" y=\"" << fmt2(y + 4)
                << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">"
                << fmt_tick(t) << "</text>\n";
        }
    }
    svg << "<text x=\"" << (kLeft + kRight) / 2 << "\" y=\"" << kH - 8
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">t</text>\n";
    svg << "<text x=\"16\" y=\"" << (kTop + kBottom) / 2
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
        << "transform=\"rotate(-90 16 " << (kTop + kBottom) / 2 << ")\">" << y_label
        << "</text>\n";

    for (std::size_t si = 0; si < series.size(); ++si) {
        const char* color = kPalette[si % kPaletteSize];
        std::ostringstream pts;
        for (const auto& [x, y] : series[si].points) {
            if (!std::isfinite(x) || !std::isfinite(y)) {
                continue;
            }
            pts << fmt2(px(x)) << ',' << fmt2(py(y)) << ' ';
        }
        svg << "<polyline fill=\"none\" stroke=\"" << color
            << "\" stroke-width=\"1.2\" points=\"" << pts.str() << "\"/>\n";
        const double ly = kTop + 14.0 * static_cast<double>(si);
        svg << "<line x1=\"" << kRight - 130 << "\" y1=\"" << fmt2(ly) << "\" x2=\""
            << kRight - 110 << "\" y2=\"" << fmt2(ly) << "\" stroke=\"" << color
            << "\" stroke-width=\"2\"/>\n";
        svg << "<text x=\"" << kRight - 104 << "\" y=\"" << fmt2(ly + 4)
            << "\" font-family=\"sans-serif\" font-size=\"11\">" << series[si].label
            << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

} // namespace

std::string mse_chart_svg(const std::vector<TrajectoryRecord>& records) {
    ChartSeries mse{"mse_window", {}};
    ChartSeries eg{"eg_analytic", {}};
    for (const TrajectoryRecord& rec : records) {
        mse.points.emplace_back(rec.t, rec.mse_window);
        eg.points.emplace_back(rec.t, rec.eg_analytic);
    }
    return line_chart("MSE", "error", {mse, eg}, true);
}

std::string w_chart_svg(const std::vector<TrajectoryRecord>& records, int k) {
    std::vector<ChartSeries> series(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
        series[static_cast<std::size_t>(i)].label = "w_" + std::to_string(i + 1);
    }
    for (const TrajectoryRecord& rec : records) {
        for (int i = 0; i < k; ++i) {
            series[static_cast<std::size_t>(i)].points.emplace_back(rec.t, rec.w[i]);
        }
    }
    return line_chart("hidden-to-output weights", "w", series, false);
}

std::string qr_chart_svg(const std::vector<TrajectoryRecord>& records, int k, int m) {
    std::vector<ChartSeries> series;
    for (int i = 1; i <= k; ++i) {
        for (int j = i; j <= k; ++j) {
            series.push_back({"Q_" + std::to_string(i) + std::to_string(j), {}});
        }
    }
    for (int i = 1; i <= k; ++i) {
        for (int nn = 1; nn <= m; ++nn) {
            series.push_back({"R_" + std::to_string(i) + std::to_string(nn), {}});
        }
    }
    const std::size_t nq = static_cast<std::size_t>(k) * (k + 1) / 2;
    for (const TrajectoryRecord& rec : records) {
        for (std::size_t qi = 0; qi < rec.q_upper.size(); ++qi) {
            series[qi].points.emplace_back(rec.t, rec.q_upper[qi]);
        }
        for (std::size_t ri = 0; ri < rec.r.size(); ++ri) {
            series[nq + ri].points.emplace_back(rec.t, rec.r[ri]);
        }
    }
    return line_chart("order parameters", "Q, R", series, false);
}

} // namespace sim
