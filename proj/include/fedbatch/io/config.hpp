#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fedbatch/growth.hpp"
#include "fedbatch/io/json.hpp"
#include "fedbatch/policy.hpp"
#include "fedbatch/process.hpp"
#include "fedbatch/regularized.hpp"
#include "fedbatch/simulate.hpp"

namespace fedbatch::io {

inline constexpr int kConfigVersion = 1;

struct InspectConfig {
    std::size_t resolution = 1000;  ///< mu grid has resolution + 1 rows over [0, S_in]
    std::size_t grid_points = 2048;
};

/// A policy as written in the config; `arc` picks the k-th maximum of mu (1-based).
struct PolicySpec {
    std::string kind = "singular_synthesis";
    double value = 0.0;
    std::optional<int> arc;
    std::vector<double> breaks;
    std::vector<double> flows;
};

struct SimulateConfig {
    PolicySpec policy;
    PlanarState initial{0.1, 50.0};
    bool full = false;  ///< integrate (S, B, V) instead of the reduced plane
    StopSpec stop;
    SimulationOptions options;
};

struct AlphaSpec {
    std::string mode = "adaptive";  ///< "adaptive" or "uniform"
    std::size_t count = 64;
    double lo = std::numbers::pi / 2.0;
    double hi = std::numbers::pi;
};

struct FieldConfig {
    std::vector<double> epsilons{0.01};
    AlphaSpec alpha;
    double step = 0.005;
    std::optional<StopRules> stop;
    JacobianMode jacobian = JacobianMode::analytic;
};

struct CurveConfig {
    std::vector<double> V0;
    std::size_t scan_points = 64;
    double tol = 1e-6;
};

struct ReportConfig {
    std::vector<double> epsilons{0.02, 0.01, 0.005};
    double tracking_tol = 0.05;
    std::size_t hull_curve_points = 21;
    bool write_fields = false;
};

struct RunConfig {
    ProcessParams process;
    GrowthModel growth;
    InspectConfig inspect;
    SimulateConfig simulate;
    FieldConfig field;
    CurveConfig curve_i;
    ReportConfig report;
};

inline GrowthModel parse_growth(const json& j, const std::string& where) {
    check_keys(j, {"terms"}, where);
    if (!j.contains("terms") || !j.at("terms").is_array()) {
        throw ConfigError(where + ".terms must be an array");
    }
    std::vector<HaldaneTerm> terms;
    for (const auto& t : j.at("terms")) {
        const std::string w = where + ".terms[]";
        check_keys(t, {"mu_bar", "K", "L"}, w);
        terms.push_back({get_number(t, "mu_bar", w), get_number(t, "K", w), get_number(t, "L", w)});
    }
    return GrowthModel(std::move(terms));
}

inline ProcessParams parse_process(const json& j) {
    check_keys(j, {"S_in", "S_ref", "V_max", "Q_max", "M0", "y"}, "process");
    ProcessParams p;
    p.S_in = get_number(j, "S_in", "process");
    p.S_ref = get_number(j, "S_ref", "process");
    p.V_max = get_number(j, "V_max", "process");
    p.Q_max = get_number(j, "Q_max", "process");
    p.M0 = get_number(j, "M0", "process");
    p.y = get_number_or(j, "y", 1.0, "process");
    p.validate();
    return p;
}

inline std::vector<double> parse_grid(const json& j, const std::string& where) {
    std::vector<double> out;
    if (j.is_number()) return {j.get<double>()};
    if (j.is_array()) {
        for (const auto& v : j) {
            if (!v.is_number()) throw ConfigError(where + " entries must be numbers");
            out.push_back(v.get<double>());
        }
        return out;
    }
    check_keys(j, {"from", "to", "count"}, where);
    const double a = get_number(j, "from", where);
    const double b = get_number(j, "to", where);
    const auto n = static_cast<long>(get_number(j, "count", where));
    if (n < 1) throw ConfigError(where + ".count must be >= 1");
    for (long k = 0; k < n; ++k) {
        out.push_back(n == 1 ? a : a + (b - a) * static_cast<double>(k) / static_cast<double>(n - 1));
    }
    return out;
}

inline PolicySpec parse_policy(const json& j) {
    check_keys(j, {"kind", "Q", "threshold", "S_bar", "arc", "breaks", "flows"}, "simulate.policy");
    PolicySpec s;
    if (!j.contains("kind") || !j.at("kind").is_string()) {
        throw ConfigError("simulate.policy.kind must be a string");
    }
    s.kind = j.at("kind").get<std::string>();
    const std::string w = "simulate.policy";
    if (s.kind == "constant") {
        s.value = get_number(j, "Q", w);
    } else if (s.kind == "bang") {
        s.value = get_number(j, "threshold", w);
    } else if (s.kind == "singular_synthesis") {
        if (j.contains("arc")) {
            s.arc = static_cast<int>(get_number(j, "arc", w));
        } else {
            s.value = get_number(j, "S_bar", w);
        }
    } else if (s.kind == "piecewise_constant") {
        s.breaks = parse_grid(j.value("breaks", json::array()), w + ".breaks");
        s.flows = parse_grid(j.value("flows", json::array()), w + ".flows");
    } else {
        throw ConfigError("unknown policy kind '" + s.kind + "'");
    }
    return s;
}

/// Resolves `arc` references against the maxima of mu on (0, S_in).
inline FeedbackPolicy make_policy(const PolicySpec& s, const GrowthModel& model,
                                  const ProcessParams& p) {
    if (s.kind == "constant") return FeedbackPolicy::constant(s.value);
    if (s.kind == "bang") return FeedbackPolicy::bang(s.value);
    if (s.kind == "piecewise_constant") return FeedbackPolicy::piecewise_constant(s.breaks, s.flows);
    double level = s.value;
    if (s.arc) {
        const auto mx = find_local_maxima(model, 0.0, p.S_in).maxima;
        if (*s.arc < 1 || static_cast<std::size_t>(*s.arc) > mx.size()) {
            throw ConfigError("policy arc index " + std::to_string(*s.arc) + " but mu has " +
                              std::to_string(mx.size()) + " maxima");
        }
        level = mx[static_cast<std::size_t>(*s.arc - 1)].S_bar;
    }
    return FeedbackPolicy::singular_synthesis(level);
}

inline RunConfig parse_config(const json& j, const std::filesystem::path& base = {}) {
    check_keys(j, {"version", "process", "growth", "inspect", "simulate", "field", "curve_i", "report"},
               "config");
    if (!j.contains("version") || !j.at("version").is_number_integer() ||
        j.at("version").get<int>() != kConfigVersion) {
        throw ConfigError("config.version must be " + std::to_string(kConfigVersion));
    }
    RunConfig c;
    if (!j.contains("process")) throw ConfigError("config is missing 'process'");
    c.process = parse_process(j.at("process"));
    if (!j.contains("growth")) throw ConfigError("config is missing 'growth'");
    const json& g = j.at("growth");
    if (g.is_string()) {
        const auto path = base / g.get<std::string>();
        c.growth = parse_growth(read_json_file(path.string()), path.filename().string());
    } else {
        c.growth = parse_growth(g, "growth");
    }

    if (j.contains("inspect")) {
        const json& s = j.at("inspect");
        check_keys(s, {"resolution", "grid_points"}, "inspect");
        c.inspect.resolution = static_cast<std::size_t>(get_number_or(s, "resolution", 1000, "inspect"));
        c.inspect.grid_points = static_cast<std::size_t>(get_number_or(s, "grid_points", 2048, "inspect"));
        if (c.inspect.resolution < 1) throw ConfigError("inspect.resolution must be >= 1");
    }

    if (j.contains("simulate")) {
        const json& s = j.at("simulate");
        check_keys(s, {"policy", "initial", "dynamics", "stop", "t_max", "rtol", "atol"}, "simulate");
        if (s.contains("policy")) c.simulate.policy = parse_policy(s.at("policy"));
        if (s.contains("initial")) {
            check_keys(s.at("initial"), {"S", "V"}, "simulate.initial");
            c.simulate.initial = {get_number(s.at("initial"), "S", "simulate.initial"),
                                  get_number(s.at("initial"), "V", "simulate.initial")};
        }
        const std::string dyn = s.value("dynamics", std::string("planar"));
        if (dyn != "planar" && dyn != "full") {
            throw ConfigError("simulate.dynamics must be 'planar' or 'full'");
        }
        c.simulate.full = dyn == "full";
        if (s.contains("stop")) {
            const json& st = s.at("stop");
            check_keys(st, {"at_Sref", "Sref_only_at_Vmax", "at_Vmax", "at_S_level"}, "simulate.stop");
            c.simulate.stop.at_Sref = st.value("at_Sref", true);
            c.simulate.stop.Sref_only_at_Vmax = st.value("Sref_only_at_Vmax", false);
            c.simulate.stop.at_Vmax = st.value("at_Vmax", false);
            if (st.contains("at_S_level")) {
                c.simulate.stop.at_S_level = get_number(st, "at_S_level", "simulate.stop");
            }
        }
        if (s.contains("t_max")) c.simulate.options.t_max = get_number(s, "t_max", "simulate");
        c.simulate.options.rtol = get_number_or(s, "rtol", 1e-9, "simulate");
        c.simulate.options.atol = get_number_or(s, "atol", 1e-11, "simulate");
    }

    if (j.contains("field")) {
        const json& s = j.at("field");
        check_keys(s, {"epsilon", "alpha", "step", "stop", "jacobian"}, "field");
        if (s.contains("epsilon")) c.field.epsilons = parse_grid(s.at("epsilon"), "field.epsilon");
        for (double e : c.field.epsilons) {
            if (e == 0.0 || !std::isfinite(e)) throw ConfigError("field.epsilon must be nonzero");
        }
        if (s.contains("alpha")) {
            const json& a = s.at("alpha");
            check_keys(a, {"mode", "count", "lo", "hi"}, "field.alpha");
            c.field.alpha.mode = a.value("mode", std::string("adaptive"));
            if (c.field.alpha.mode != "adaptive" && c.field.alpha.mode != "uniform") {
                throw ConfigError("field.alpha.mode must be 'adaptive' or 'uniform'");
            }
            c.field.alpha.count = static_cast<std::size_t>(get_number_or(a, "count", 64, "field.alpha"));
            c.field.alpha.lo = get_number_or(a, "lo", c.field.alpha.lo, "field.alpha");
            c.field.alpha.hi = get_number_or(a, "hi", c.field.alpha.hi, "field.alpha");
            if (!(c.field.alpha.hi > c.field.alpha.lo) || c.field.alpha.count < 1) {
                throw ConfigError("field.alpha needs lo < hi and count >= 1");
            }
        }
        c.field.step = get_number_or(s, "step", 0.005, "field");
        if (!(c.field.step > 0.0)) throw ConfigError("field.step must be positive");
        if (s.contains("stop")) {
            const json& st = s.at("stop");
            check_keys(st, {"v_min", "S_max", "t_back_max"}, "field.stop");
            StopRules r = default_stop_rules(c.process);
            r.v_min = get_number_or(st, "v_min", r.v_min, "field.stop");
            r.S_max = get_number_or(st, "S_max", r.S_max, "field.stop");
            r.t_back_max = get_number_or(st, "t_back_max", r.t_back_max, "field.stop");
            c.field.stop = r;
        }
        const std::string jac = s.value("jacobian", std::string("analytic"));
        if (jac == "analytic") {
            c.field.jacobian = JacobianMode::analytic;
        } else if (jac == "finite_difference") {
            c.field.jacobian = JacobianMode::finite_difference;
        } else {
            throw ConfigError("field.jacobian must be 'analytic' or 'finite_difference'");
        }
    }

    if (j.contains("curve_i")) {
        const json& s = j.at("curve_i");
        check_keys(s, {"V0", "scan_points", "tol"}, "curve_i");
        if (s.contains("V0")) c.curve_i.V0 = parse_grid(s.at("V0"), "curve_i.V0");
        c.curve_i.scan_points = static_cast<std::size_t>(get_number_or(s, "scan_points", 64, "curve_i"));
        c.curve_i.tol = get_number_or(s, "tol", 1e-6, "curve_i");
        if (c.curve_i.scan_points < 2) throw ConfigError("curve_i.scan_points must be >= 2");
    }
    if (c.curve_i.V0.empty()) {
        for (int k = 1; k <= 20; ++k) c.curve_i.V0.push_back(c.process.V_max * k / 20.0 - 0.5 * c.process.V_max / 20.0);
    }

    if (j.contains("report")) {
        const json& s = j.at("report");
        check_keys(s, {"epsilon", "tracking_tol", "hull_curve_points", "write_fields"}, "report");
        if (s.contains("epsilon")) c.report.epsilons = parse_grid(s.at("epsilon"), "report.epsilon");
        c.report.tracking_tol = get_number_or(s, "tracking_tol", 0.05, "report");
        c.report.hull_curve_points =
            static_cast<std::size_t>(get_number_or(s, "hull_curve_points", 21, "report"));
        c.report.write_fields = s.value("write_fields", false);
        if (c.report.hull_curve_points < 2) throw ConfigError("report.hull_curve_points must be >= 2");
    }
    return c;
}

inline RunConfig load_config(const std::string& path) {
    const json j = read_json_file(path);
    return parse_config(j, std::filesystem::path(path).parent_path());
}

}  // namespace fedbatch::io
