#include "sim/commands.hpp"

#include "sim/config_io.hpp"
#include "sim/errors.hpp"
#include "sim/harness.hpp"
#include "sim/output.hpp"
#include "sim/parallel.hpp"

#include <filesystem>
#include <functional>
#include <iostream>

namespace sim::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int guard(const std::function<int()>& fn) {
    try {
        return fn();
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const DivergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDiverged;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

json resolve_config_doc(const RunArgs& args) {
    const bool have_file = !args.config_path.empty();
    const bool have_scenario = !args.scenario_name.empty();
    if (have_file == have_scenario) {
        throw ConfigError("exactly one of --config and --scenario is required");
    }
    if (have_file) {
        return load_config_doc(args.config_path, args.overrides);
    }
    json doc = config_to_json(scenario(args.scenario_name));
    for (const std::string& expr : args.overrides) {
        apply_override_expr(doc, expr);
    }
    return doc;
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
    }
}

void write_run_outputs(const fs::path& dir, const SimConfig& cfg, const RunResult& res) {
    write_file_atomic(dir / "trajectory.csv", trajectory_csv(res.records, cfg.k, cfg.m));
    write_file_atomic(dir / "summary.json", summary_to_json(res.summary, cfg).dump(2) + "\n");
    write_file_atomic(dir / "mse.svg", mse_chart_svg(res.records));
    write_file_atomic(dir / "w.svg", w_chart_svg(res.records, cfg.k));
    write_file_atomic(dir / "qr.svg", qr_chart_svg(res.records, cfg.k, cfg.m));
}

} // namespace

int run_command(const RunArgs& args) {
    return guard([&] {
        const SimConfig cfg = parse_config_json(resolve_config_doc(args));
        ensure_dir(args.out_dir);
        const RunResult res = run(cfg);
        write_run_outputs(args.out_dir, cfg, res);
        if (res.summary.diverged) {
            std::cerr << "run diverged at step " << res.summary.diverged_step << "\n";
            return kExitDiverged;
        }
        return kExitOk;
    });
}

int compare_command(const RunArgs& base_args, const std::string& variant_path,
                    const std::vector<std::uint64_t>& seeds) {
    return guard([&] {
        const SimConfig base = parse_config_json(resolve_config_doc(base_args));
        const SimConfig variant = load_config_file(variant_path, base_args.overrides);
        const CompareReport report = compare(base, variant, seeds);
        ensure_dir(base_args.out_dir);
        const fs::path dir(base_args.out_dir);
        write_file_atomic(dir / "compare.csv", compare_csv(report));
        write_file_atomic(dir / "compare.json", compare_to_json(report).dump(2) + "\n");
        for (std::size_t i = 0; i < report.seeds.size(); ++i) {
            if (report.base[i].diverged || report.variant[i].diverged) {
                std::cerr << "at least one run diverged (seed " << report.seeds[i] << ")\n";
                return kExitDiverged;
            }
        }
        return kExitOk;
    });
}

int verify_command(const std::string& out_dir, int trials, int max_m, int max_k,
                   long long samples, std::uint64_t seed) {
    return guard([&] {
        const VerifyReport report =
            verify_generalization_error(trials, max_m, max_k, samples, seed);
        ensure_dir(out_dir);
        const fs::path dir(out_dir);
        write_file_atomic(dir / "verify.json", verify_to_json(report).dump(2) + "\n");
        write_file_atomic(dir / "verify.csv", verify_csv(report));
        std::cout << "verify: " << report.pass_count << "/" << report.trials.size()
                  << " trials within 5 standard errors\n";
        return kExitOk;
    });
}

int sweep_command(const RunArgs& args, const std::string& param,
                  const std::vector<std::string>& values) {
    return guard([&] {
        if (param.empty() || values.empty()) {
            throw ConfigError("sweep: --param and --values are required");
        }
        const json base_doc = resolve_config_doc(args);
        const std::string leaf = param.find('.') == std::string::npos
                                     ? param
                                     : param.substr(param.rfind('.') + 1);

        // Validate every grid point before running anything.
        std::vector<SimConfig> cfgs(values.size());
        std::vector<fs::path> dirs(values.size());
        for (std::size_t i = 0; i < values.size(); ++i) {
            json doc = base_doc;
            apply_override(doc, param, values[i]);
            cfgs[i] = parse_config_json(doc);
            dirs[i] = fs::path(args.out_dir) / (leaf + "=" + values[i]);
        }
        ensure_dir(args.out_dir);

        struct PointOutcome {
            int exit = kExitOk;
            std::string error;
            RunSummary summary;
        };
        std::vector<PointOutcome> outcomes(values.size());
        par::for_index(static_cast<int>(values.size()), [&](int i) {
            PointOutcome& out = outcomes[static_cast<std::size_t>(i)];
            try {
                ensure_dir(dirs[static_cast<std::size_t>(i)]);
                const RunResult res = run(cfgs[static_cast<std::size_t>(i)]);
                write_run_outputs(dirs[static_cast<std::size_t>(i)],
                                  cfgs[static_cast<std::size_t>(i)], res);
                out.summary = res.summary;
                out.exit = res.summary.diverged ? kExitDiverged : kExitOk;
            } catch (const IoError& e) {
                out.exit = kExitIo;
                out.error = e.what();
            }
        });

        std::string index = "value,dir,final_mse,final_eg,symmetry_break_t,singular_dwell,"
                            "diverged\n";
        for (std::size_t i = 0; i < values.size(); ++i) {
            const RunSummary& s = outcomes[i].summary;
            index += values[i];
            index += ',' + dirs[i].filename().string();
            index += ',' + format_g17(s.final_record.mse_window);
            index += ',' + format_g17(s.final_record.eg_analytic);
            index += ',' + (s.symmetry_break_t ? format_g17(*s.symmetry_break_t) : "");
            index += ',' + (s.singular_dwell ? format_g17(*s.singular_dwell) : "");
            index += ',' + std::string(s.diverged ? "1" : "0");
            index += '\n';
        }
        write_file_atomic(fs::path(args.out_dir) / "index.csv", index);

        for (const PointOutcome& out : outcomes) {
            if (out.exit == kExitIo) {
                std::cerr << "error: " << out.error << "\n";
                return kExitIo;
            }
        }
        for (const PointOutcome& out : outcomes) {
            if (out.exit == kExitDiverged) {
                return kExitDiverged;
            }
        }
        return kExitOk;
    });
}

} // namespace sim::cli
