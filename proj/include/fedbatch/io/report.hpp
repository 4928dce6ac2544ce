#pragma once

#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "fedbatch/io/json.hpp"
#include "fedbatch/pmp.hpp"
#include "fedbatch/synthesis.hpp"

namespace fedbatch::io {

inline json to_json(const ProcessParams& p) {
    return {{"S_in", p.S_in}, {"S_ref", p.S_ref}, {"V_max", p.V_max},
            {"Q_max", p.Q_max}, {"M0", p.M0},     {"y", p.y}};
}

inline json to_json(const GrowthModel& m) {
    json terms = json::array();
    for (const auto& t : m.terms()) terms.push_back({{"mu_bar", t.mu_bar}, {"K", t.K}, {"L", t.L}});
    return {{"terms", terms}};
}

inline json to_json(const CriticalPoint& c) {
    return {{"S_bar", c.S_bar}, {"mu", c.mu_value}, {"mu_second", c.mu_second}};
}

inline json to_json(const std::vector<CriticalPoint>& v) {
    json a = json::array();
    for (const auto& c : v) a.push_back(to_json(c));
    return a;
}

inline json to_json(const CriticalPointSet& s) {
    return {{"maxima", to_json(s.maxima)}, {"minima", to_json(s.minima)},
            {"degenerate", to_json(s.degenerate)}};
}

/// mu(0) = 0 and mu > 0 on the scan grid of (0, S_in].
inline json assumption1_json(const GrowthModel& m, const ProcessParams& p, std::size_t n) {
    const double mu0 = m.mu(0.0);
    double min_mu = std::numeric_limits<double>::infinity();
    double arg = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
        const double S = p.S_in * static_cast<double>(i) / static_cast<double>(n);
        const double v = m.mu(S);
        if (v < min_mu) {
            min_mu = v;
            arg = S;
        }
    }
    return {{"holds", mu0 == 0.0 && min_mu > 0.0}, {"mu_at_zero", mu0},
            {"min_positive_grid_mu", min_mu}, {"argmin_S", arg}};
}

inline json to_json(const Assumption2Report& r) {
    return {{"holds", r.holds}, {"maxima", to_json(r.maxima.maxima)}, {"violations", r.violations}};
}

inline json to_json(const Assumption3Report& r) {
    return {{"holds", r.holds},       {"defined", r.defined},
            {"max_required_flow", r.max_required_flow},
            {"argmax_S", r.argmax_S}, {"S_lo", r.S_lo},
            {"S_hi", r.S_hi}};
}

inline json assumptions_json(const GrowthModel& m, const ProcessParams& p, const ScanOptions& scan) {
    return {{"assumption1", assumption1_json(m, p, scan.grid_points)},
            {"assumption2", to_json(check_assumption2(m, p, scan))},
            {"assumption3", to_json(check_assumption3(p, m, scan))}};
}

inline json to_json(const PlanarState& z) { return {{"S", z.S}, {"V", z.V}}; }
inline json to_json(const FullState& x) { return {{"S", x.S}, {"B", x.B}, {"V", x.V}}; }

template <class State>
json events_json(const BasicTrajectory<State>& tr) {
    json a = json::array();
    for (const auto& e : tr.events) {
        a.push_back({{"t", e.t}, {"kind", to_string(e.kind)}, {"state", to_json(e.state)}});
    }
    return a;
}

inline json to_json(const Extremal& e, const std::string& file) {
    return {{"alpha", e.config.alpha},
            {"file", file},
            {"stop", to_string(e.stop)},
            {"samples", e.samples.size()},
            {"duration", e.duration()},
            {"H0", e.H0},
            {"max_H_residual", e.max_H_residual()},
            {"end", to_json(e.samples.back().state())}};
}

inline json to_json(const IntersectionRecord& r) {
    return {{"alpha_i", r.alpha_i}, {"alpha_j", r.alpha_j}, {"S", r.point.S},
            {"V", r.point.V},       {"t_back_i", r.t_back_i}, {"t_back_j", r.t_back_j}};
}

inline json to_json(const std::vector<IntersectionRecord>& v) {
    json a = json::array();
    for (const auto& r : v) a.push_back(to_json(r));
    return a;
}

inline json to_json(const RegionMap& r) {
    json per = json::array();
    json counts = json::object();
    for (auto l : {ExtremalLabel::tracks_S1, ExtremalLabel::tracks_S2, ExtremalLabel::boundary_direct,
                   ExtremalLabel::unlabeled}) {
        counts[label_name(l)] = 0;
    }
    for (std::size_t i = 0; i < r.alphas.size(); ++i) {
        json e = {{"alpha", r.alphas[i]}, {"label", label_name(r.labels[i])}};
        if (r.tracking[i]) {
            e["tracking"] = {{"t_start", r.tracking[i]->t_start}, {"t_end", r.tracking[i]->t_end}};
        }
        per.push_back(e);
        counts[label_name(r.labels[i])] = counts[label_name(r.labels[i])].get<int>() + 1;
    }
    return {{"counts", counts}, {"extremals", per}, {"A1", r.A1}, {"A2", r.A2}, {"reports", r.reports}};
}

inline json hull_json(const RegionMap& r) {
    json a = json::array();
    for (const auto& q : r.B_hull) a.push_back({{"S", q.x}, {"V", q.y}});
    return a;
}

inline json to_json(const IndifferenceCurve& c) {
    json s = json::array();
    for (const auto& x : c.samples) {
        s.push_back({{"V0", x.V0},
                     {"S_star", x.S_star},
                     {"T", x.T},
                     {"T1", x.T1},
                     {"T2", x.T2},
                     {"residual", x.residual},
                     {"bracket", {x.bracket_lo, x.bracket_hi}},
                     {"iterations", x.iterations}});
    }
    json o = json::array();
    for (const auto& x : c.omitted) o.push_back({{"V0", x.V0}, {"reason", x.reason}});
    return {{"samples", s}, {"omitted", o}, {"multiple_roots", c.multiple_roots}};
}

inline json to_json(const HausdorffReport& h) {
    json per = json::array();
    for (const auto& [v, d] : h.per_V0) per.push_back({{"V0", v}, {"distance", d}});
    return {{"hull_to_curve", h.hull_to_curve},
            {"curve_to_hull", h.curve_to_hull},
            {"symmetric", h.symmetric},
            {"per_V0", per}};
}

/// Minimal CSV builder: every number at 17 significant digits.
class Csv {
public:
    explicit Csv(const std::string& header) : text_(header + "\n") {}

    void row(std::initializer_list<double> values) {
        bool first = true;
        for (double v : values) {
            if (!first) text_ += ',';
            first = false;
            text_ += std::isfinite(v) ? number17(v) : std::string("nan");
        }
        text_ += '\n';
    }
    const std::string& str() const { return text_; }

private:
    std::string text_;
};

inline std::string trajectory_csv(const Trajectory& tr) {
    Csv c("t,S,V,Q");
    for (const auto& s : tr.samples) c.row({s.t, s.state.S, s.state.V, s.Q});
    return c.str();
}

inline std::string trajectory_csv(const FullTrajectory& tr) {
    Csv c("t,S,B,V,Q");
    for (const auto& s : tr.samples) c.row({s.t, s.state.S, s.state.B, s.state.V, s.Q});
    return c.str();
}

inline std::string extremal_csv(const Extremal& e) {
    Csv c("t_back,S,V,pS,pV,u1,u2,H_residual");
    for (const auto& s : e.samples) c.row({s.t_back, s.S, s.V, s.pS, s.pV, s.u1, s.u2, s.H_residual});
    return c.str();
}

inline std::string curve_csv(const IndifferenceCurve& curve) {
    Csv c("V0,S_star,T,residual");
    for (const auto& s : curve.samples) c.row({s.V0, s.S_star, s.T, s.residual});
    return c.str();
}

/// resolution + 1 rows over [0, S_in].
inline std::string mu_grid_csv(const GrowthModel& m, const ProcessParams& p, std::size_t resolution) {
    Csv c("S,mu,mu_prime,mu_second");
    for (std::size_t i = 0; i <= resolution; ++i) {
        const double S = i == resolution ? p.S_in
                                         : p.S_in * static_cast<double>(i) / static_cast<double>(resolution);
        c.row({S, m.mu(S), m.mu_prime(S), m.mu_second(S)});
    }
    return c.str();
}

inline std::string format_g(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

inline std::string extremal_file_name(double alpha, double epsilon) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "extremal_a%.6f_e%g.csv", alpha, epsilon);
    return buf;
}

}  // namespace fedbatch::io
