#include "sim/config_io.hpp"

#include "sim/errors.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace sim {

using nlohmann::json;

namespace {

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "N",
        "M",
        "K",
        "eta",
        "rule",
        "teacher_kind",
        "backend",
        "input_dist",
        "w_update",
        "steps",
        "sample_every",
        "window",
        "seed",
        "teacher_v",
        "orthonormalize",
        "plateau_slope_tol",
        "plateau_min_duration",
        "singular_band_lo",
        "singular_band_hi",
        "symmetry_drop_factor",
    };
    return keys;
}

template <typename T>
T get_as(const json& doc, const std::string& key) {
    try {
        return doc.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config: key '" + key + "' has the wrong type");
    }
}

std::string get_enum_string(const json& doc, const std::string& key) {
    if (!doc.at(key).is_string()) {
        throw ConfigError("config: key '" + key + "' must be a string");
    }
    return doc.at(key).get<std::string>();
}

[[noreturn]] void bad_enum(const std::string& key, const std::string& got,
                           const std::string& expected) {
    throw ConfigError("config: key '" + key + "' has invalid value '" + got + "' (expected " +
                      expected + ")");
}

void parse_rule(const json& rule, SimConfig& cfg) {
    if (rule.is_string()) {
        const std::string s = rule.get<std::string>();
        if (s == "sgd") {
            cfg.use_dropout = false;
        } else if (s == "dropout") {
            cfg.use_dropout = true;
        } else {
            bad_enum("rule", s, "\"sgd\", \"dropout\" or {\"dropout\": {...}}");
        }
        return;
    }
    if (!rule.is_object()) {
        throw ConfigError("config: key 'rule' must be a string or an object");
    }
    for (const auto& [key, value] : rule.items()) {
        if (key != "dropout") {
            throw ConfigError("config: unknown key 'rule." + key + "'");
        }
    }
    if (!rule.contains("dropout")) {
        throw ConfigError("config: rule object must contain 'dropout'");
    }
    const json& d = rule.at("dropout");
    if (!d.is_object()) {
        throw ConfigError("config: key 'rule.dropout' must be an object");
    }
    cfg.use_dropout = true;
    for (const auto& [key, value] : d.items()) {
        if (key == "p") {
            try {
                cfg.dropout.p = value.get<double>();
            } catch (const json::exception&) {
                throw ConfigError("config: key 'rule.dropout.p' has the wrong type");
            }
        } else if (key == "mask_mode") {
            if (!value.is_string()) {
                throw ConfigError("config: key 'rule.dropout.mask_mode' must be a string");
            }
            const std::string s = value.get<std::string>();
            if (s == "fixed_size") {
                cfg.dropout.mask_mode = MaskMode::FixedSize;
            } else if (s == "bernoulli") {
                cfg.dropout.mask_mode = MaskMode::Bernoulli;
            } else {
                bad_enum("rule.dropout.mask_mode", s, "fixed_size|bernoulli");
            }
        } else if (key == "inference_mode") {
            if (!value.is_string()) {
                throw ConfigError("config: key 'rule.dropout.inference_mode' must be a string");
            }
            const std::string s = value.get<std::string>();
            if (s == "rescaled") {
                cfg.dropout.inference_mode = InferenceMode::Rescaled;
            } else if (s == "paper_literal") {
                cfg.dropout.inference_mode = InferenceMode::PaperLiteral;
            } else {
                bad_enum("rule.dropout.inference_mode", s, "rescaled|paper_literal");
            }
        } else {
            throw ConfigError("config: unknown key 'rule.dropout." + key + "'");
        }
    }
    if (!(cfg.dropout.p > 0.0) || cfg.dropout.p > 1.0) {
        throw ConfigError("config: rule.dropout.p must be in (0, 1]");
    }
}

} // namespace

SimConfig parse_config(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: malformed JSON: ") + e.what());
    }
    return parse_config_json(doc);
}

SimConfig parse_config_json(const json& doc) {
    if (!doc.is_object()) {
        throw ConfigError("config: top level must be a JSON object");
    }
    for (const auto& [key, value] : doc.items()) {
        if (known_keys().count(key) == 0) {
            throw ConfigError("config: unknown key '" + key + "'");
        }
    }
    std::string missing;
    for (const char* req : {"M", "K", "steps", "seed", "rule"}) {
        if (!doc.contains(req)) {
            missing += missing.empty() ? req : std::string(", ") + req;
        }
    }
    if (!missing.empty()) {
        throw ConfigError("config: missing required keys " + missing);
    }

    SimConfig cfg;
    cfg.m = get_as<int>(doc, "M");
    cfg.k = get_as<int>(doc, "K");
    cfg.steps = get_as<long long>(doc, "steps");
    cfg.seed = get_as<std::uint64_t>(doc, "seed");
    parse_rule(doc.at("rule"), cfg);

    if (doc.contains("N")) cfg.n = get_as<int>(doc, "N");
    if (doc.contains("eta")) cfg.eta = get_as<double>(doc, "eta");
    if (doc.contains("sample_every")) cfg.sample_every = get_as<long long>(doc, "sample_every");
    if (doc.contains("window")) cfg.window = get_as<long long>(doc, "window");
    if (doc.contains("teacher_v")) cfg.teacher_v = get_as<double>(doc, "teacher_v");
    if (doc.contains("orthonormalize")) cfg.orthonormalize = get_as<bool>(doc, "orthonormalize");
    if (doc.contains("plateau_slope_tol")) {
        cfg.plateau_slope_tol = get_as<double>(doc, "plateau_slope_tol");
    }
    if (doc.contains("plateau_min_duration")) {
        cfg.plateau_min_duration = get_as<double>(doc, "plateau_min_duration");
    }
    if (doc.contains("singular_band_lo")) {
        cfg.singular_band_lo = get_as<double>(doc, "singular_band_lo");
    }
    if (doc.contains("singular_band_hi")) {
        cfg.singular_band_hi = get_as<double>(doc, "singular_band_hi");
    }
    if (doc.contains("symmetry_drop_factor")) {
        cfg.symmetry_drop_factor = get_as<double>(doc, "symmetry_drop_factor");
    }
    if (doc.contains("teacher_kind")) {
        const std::string s = get_enum_string(doc, "teacher_kind");
        if (s == "orthogonal") {
            cfg.teacher_kind = TeacherKind::Orthogonal;
        } else if (s == "singular") {
            cfg.teacher_kind = TeacherKind::Singular;
        } else {
            bad_enum("teacher_kind", s, "orthogonal|singular");
        }
    }
    if (doc.contains("backend")) {
        const std::string s = get_enum_string(doc, "backend");
        if (s == "direct") {
            cfg.backend = Backend::Direct;
        } else if (s == "thermo_limit") {
            cfg.backend = Backend::ThermoLimit;
        } else {
            bad_enum("backend", s, "direct|thermo_limit");
        }
    }
    if (doc.contains("input_dist")) {
        const std::string s = get_enum_string(doc, "input_dist");
        if (s == "gaussian") {
            cfg.input_dist = InputDist::Gaussian;
        } else if (s == "rademacher") {
            cfg.input_dist = InputDist::Rademacher;
        } else {
            bad_enum("input_dist", s, "gaussian|rademacher");
        }
    }
    if (doc.contains("w_update")) {
        const std::string s = get_enum_string(doc, "w_update");
        if (s == "gradient") {
            cfg.w_update = WUpdate::Gradient;
        } else if (s == "paper_literal") {
            cfg.w_update = WUpdate::PaperLiteral;
        } else {
            bad_enum("w_update", s, "gradient|paper_literal");
        }
    }
    cfg.validate();
    return cfg;
}

json config_to_json(const SimConfig& cfg) {
    json doc;
    doc["N"] = cfg.n;
    doc["M"] = cfg.m;
    doc["K"] = cfg.k;
    doc["eta"] = cfg.eta;
    if (cfg.use_dropout) {
        doc["rule"] = {{"dropout",
                        {{"p", cfg.dropout.p},
                         {"mask_mode", cfg.dropout.mask_mode == MaskMode::FixedSize
                                           ? "fixed_size"
                                           : "bernoulli"},
                         {"inference_mode",
                          cfg.dropout.inference_mode == InferenceMode::Rescaled
                              ? "rescaled"
                              : "paper_literal"}}}};
    } else {
        doc["rule"] = "sgd";
    }
    doc["teacher_kind"] = cfg.teacher_kind == TeacherKind::Orthogonal ? "orthogonal" : "singular";
    doc["backend"] = cfg.backend == Backend::Direct ? "direct" : "thermo_limit";
    doc["input_dist"] = cfg.input_dist == InputDist::Gaussian ? "gaussian" : "rademacher";
    doc["w_update"] = cfg.w_update == WUpdate::Gradient ? "gradient" : "paper_literal";
    doc["steps"] = cfg.steps;
    doc["sample_every"] = cfg.effective_sample_every();
    doc["window"] = cfg.effective_window();
    doc["seed"] = cfg.seed;
    doc["teacher_v"] = cfg.teacher_v;
    doc["orthonormalize"] = cfg.orthonormalize;
    doc["plateau_slope_tol"] = cfg.plateau_slope_tol;
    doc["plateau_min_duration"] = cfg.plateau_min_duration;
    doc["singular_band_lo"] = cfg.singular_band_lo;
    doc["singular_band_hi"] = cfg.singular_band_hi;
    doc["symmetry_drop_factor"] = cfg.symmetry_drop_factor;
    return doc;
}

void apply_override(json& doc, const std::string& key_path, const std::string& value) {
    if (key_path.empty()) {
        throw ConfigError("override: empty key path");
    }
    std::vector<std::string> parts;
    std::stringstream ss(key_path);
    std::string part;
    while (std::getline(ss, part, '.')) {
        if (part.empty()) {
            throw ConfigError("override: bad key path '" + key_path + "'");
        }
        parts.push_back(part);
    }
    json* cur = &doc;
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
        if (!cur->contains(parts[i]) || !(*cur)[parts[i]].is_object()) {
            (*cur)[parts[i]] = json::object();
        }
        cur = &(*cur)[parts[i]];
    }
    json parsed;
    try {
        parsed = json::parse(value);
    } catch (const json::parse_error&) {
        parsed = value; // plain string, e.g. rule=sgd
    }
    (*cur)[parts.back()] = parsed;
}

void apply_override_expr(json& doc, const std::string& expr) {
    const std::size_t eq = expr.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw ConfigError("override: expected key=value, got '" + expr + "'");
    }
    apply_override(doc, expr.substr(0, eq), expr.substr(eq + 1));
}

json load_config_doc(const std::string& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("config: cannot read file '" + path + "'");
    }
    std::stringstream buf;
    buf << in.rdbuf();
    json doc;
    try {
        doc = json::parse(buf.str());
    } catch (const json::parse_error& e) {
        throw ConfigError("config: malformed JSON in '" + path + "': " + e.what());
    }
    for (const std::string& expr : overrides) {
        apply_override_expr(doc, expr);
    }
    return doc;
}

SimConfig load_config_file(const std::string& path, const std::vector<std::string>& overrides) {
    return parse_config_json(load_config_doc(path, overrides));
}

namespace {

json optional_to_json(const std::optional<double>& v) {
    return v.has_value() ? json(*v) : json(nullptr);
}

json record_to_json(const TrajectoryRecord& rec) {
    json out;
    out["t"] = rec.t;
    out["mse_window"] = rec.mse_window;
    out["eg_analytic"] = rec.eg_analytic;
    out["w"] = std::vector<double>(rec.w.data(), rec.w.data() + rec.w.size());
    out["q_upper"] = rec.q_upper;
    out["r"] = rec.r;
    return out;
}

} // namespace

json summary_to_json(const RunSummary& summary, const SimConfig& cfg) {
    json out;
    out["config"] = config_to_json(cfg);
    out["final_record"] = record_to_json(summary.final_record);
    json plateaus = json::array();
    for (const PlateauInterval& p : summary.plateaus) {
        plateaus.push_back({{"t_start", p.t_start}, {"t_end", p.t_end}, {"level", p.level}});
    }
    out["plateaus"] = plateaus;
    out["symmetry_break_t"] = optional_to_json(summary.symmetry_break_t);
    out["singular_dwell"] = optional_to_json(summary.singular_dwell);
    out["diverged"] = summary.diverged;
    out["diverged_step"] = summary.diverged ? json(summary.diverged_step) : json(nullptr);
    out["max_tracking_drift"] = summary.max_tracking_drift;
    return out;
}

json compare_to_json(const CompareReport& report) {
    auto metrics_to_json = [](const CompareMetrics& m) {
        json out;
        out["final_mse"] = m.final_mse;
        out["symmetry_break_t"] = optional_to_json(m.symmetry_break_t);
        out["singular_dwell"] = optional_to_json(m.singular_dwell);
        out["diverged"] = m.diverged;
        return out;
    };
    json out;
    out["seeds"] = report.seeds;
    json base = json::array();
    json variant = json::array();
    for (std::size_t i = 0; i < report.seeds.size(); ++i) {
        json b = metrics_to_json(report.base[i]);
        b["seed"] = report.seeds[i];
        base.push_back(b);
        json v = metrics_to_json(report.variant[i]);
        v["seed"] = report.seeds[i];
        variant.push_back(v);
    }
    out["base"] = base;
    out["variant"] = variant;
    out["medians"] = {{"base", metrics_to_json(report.base_median)},
                      {"variant", metrics_to_json(report.variant_median)}};
    return out;
}

json verify_to_json(const VerifyReport& report) {
    json out;
    out["seed"] = report.seed;
    out["samples"] = report.samples;
    out["trials"] = json::array();
    for (const VerifyTrial& t : report.trials) {
        out["trials"].push_back({{"M", t.m},
                                 {"K", t.k},
                                 {"singular", t.singular},
                                 {"analytic", t.analytic},
                                 {"mc_mean", t.mc_mean},
                                 {"mc_stderr", t.mc_stderr},
                                 {"z", t.z},
                                 {"pass", t.pass}});
    }
    out["pass_count"] = report.pass_count;
    out["trial_count"] = static_cast<int>(report.trials.size());
    return out;
}

} // namespace sim
