#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <boost/numeric/odeint/stepper/runge_kutta_fehlberg78.hpp>

#include "fedbatch/dynamics.hpp"
#include "fedbatch/error.hpp"
#include "fedbatch/growth.hpp"

namespace fedbatch {

using Vec2 = std::array<double, 2>;
/// J[i][j] = d f_i / d xi_j with xi = (S, V).
using Mat2 = std::array<Vec2, 2>;

/// Rescaled flow u1 = 2Q/Q_max - 1 and the fictitious control u2, on the unit disc.
struct AugmentedControls {
    double u1 = 0.0;
    double u2 = 0.0;

    double Q(const ProcessParams& p) const { return p.Q_max * (u1 + 1.0) / 2.0; }
};

/// Dynamics at the mid flow Q_max/2, so that F + G1 u1 spans Q in [0, Q_max].
inline Vec2 drift_F(const ProcessParams& p, const GrowthModel& model, const PlanarState& z) {
    const double X = biomass_X(p, z);
    const double h = 0.5 * p.Q_max;
    return {-model.mu(z.S) * X + h * (p.S_in - z.S) / z.V, h};
}

inline Vec2 control_field_G1(const ProcessParams& p, const PlanarState& z) {
    if (!(z.V > 0.0)) throw DomainError("control_field_G1 needs V > 0");
    const double h = 0.5 * p.Q_max;
    return {h * (p.S_in - z.S) / z.V, h};
}

inline Vec2 control_field_G2(const PlanarState& = {}) { return {1.0, 0.0}; }

inline Mat2 drift_jacobian(const ProcessParams& p, const GrowthModel& model, const PlanarState& z) {
    const double X = biomass_X(p, z);
    const double mu = model.mu(z.S);
    const double h = 0.5 * p.Q_max;
    const double V2 = z.V * z.V;
    return {{{-model.mu_prime(z.S) * X + mu - h / z.V, mu * p.M0 / V2 - h * (p.S_in - z.S) / V2},
             {0.0, 0.0}}};
}

inline Mat2 control_jacobian_G1(const ProcessParams& p, const PlanarState& z) {
    const double h = 0.5 * p.Q_max;
    return {{{-h / z.V, -h * (p.S_in - z.S) / (z.V * z.V)}, {0.0, 0.0}}};
}

/// Central differences of drift_F with step h_rel * max(1, |xi_j|).
inline Mat2 drift_jacobian_fd(const ProcessParams& p, const GrowthModel& model,
                              const PlanarState& z, double h_rel = 1e-6) {
    Mat2 J{};
    const double hS = h_rel * std::max(1.0, std::abs(z.S));
    const double hV = h_rel * std::max(1.0, std::abs(z.V));
    const Vec2 fSp = drift_F(p, model, {z.S + hS, z.V});
    const Vec2 fSm = drift_F(p, model, {std::max(z.S - hS, 0.0), z.V});
    const double dS = z.S + hS - std::max(z.S - hS, 0.0);
    const Vec2 fVp = drift_F(p, model, {z.S, z.V + hV});
    const Vec2 fVm = drift_F(p, model, {z.S, z.V - hV});
    for (int i = 0; i < 2; ++i) {
        J[i][0] = (fSp[i] - fSm[i]) / dS;
        J[i][1] = (fVp[i] - fVm[i]) / (2.0 * hV);
    }
    return J;
}

/// Unique maximizer of p.(G1 u1 + eps G2 u2) over the unit disc.
inline AugmentedControls maximizing_controls(const ProcessParams& p, const PlanarState& z,
                                             const Vec2& pv, double epsilon) {
    const Vec2 g1 = control_field_G1(p, z);
    const double a = pv[0] * g1[0] + pv[1] * g1[1];
    const double b = epsilon * pv[0];
    const double rho = std::hypot(a, b);
    if (!(rho >= 1e-30)) {
        throw DegeneracyError("maximizing controls undefined: |(p.G1, eps p.G2)| < 1e-30");
    }
    return {a / rho, b / rho};
}

/// H_eps without the constant cost multiplier: p.F + |(p.G1, eps p.G2)|.
inline double regularized_hamiltonian(const ProcessParams& p, const GrowthModel& model,
                                      const PlanarState& z, const Vec2& pv, double epsilon) {
    const Vec2 F = drift_F(p, model, z);
    const Vec2 g1 = control_field_G1(p, z);
    const double a = pv[0] * g1[0] + pv[1] * g1[1];
    return pv[0] * F[0] + pv[1] * F[1] + std::hypot(a, epsilon * pv[0]);
}

enum class JacobianMode { analytic, finite_difference };

/// Adjoint right-hand side for given controls. G2 is constant, so neither eps
/// nor u2 enter it.
inline Vec2 adjoint_rate(const ProcessParams& p, const GrowthModel& model, const PlanarState& z,
                         const Vec2& pv, const AugmentedControls& u,
                         JacobianMode mode = JacobianMode::analytic) {
    const Mat2 JF = mode == JacobianMode::analytic ? drift_jacobian(p, model, z)
                                                   : drift_jacobian_fd(p, model, z);
    const Mat2 JG = control_jacobian_G1(p, z);
    Vec2 r{};
    for (int j = 0; j < 2; ++j) {
        r[j] = -(pv[0] * (JF[0][j] + u.u1 * JG[0][j]) + pv[1] * (JF[1][j] + u.u1 * JG[1][j]));
    }
    return r;
}

struct StopRules {
    double v_min = 1.0;         ///< defaults to 0.02 V_max via default_stop_rules
    double S_max = 10.0 - 1e-6;
    double t_back_max = 200.0;
};

inline StopRules default_stop_rules(const ProcessParams& p) {
    return {0.02 * p.V_max, p.S_in - 1e-6, 200.0};
}

struct ExtremalConfig {
    double epsilon = 0.01;
    double alpha = 3.0;
    /// Fixed step of the 8th-order integrator. Extremals from nearby angles then
    /// differ smoothly, which the intersection search relies on.
    double step = 0.005;
    StopRules stop;
    JacobianMode jacobian = JacobianMode::analytic;
};

enum class ExtremalStop { min_volume, max_substrate, zero_substrate, max_time };

inline const char* to_string(ExtremalStop s) {
    switch (s) {
        case ExtremalStop::min_volume: return "min_volume";
        case ExtremalStop::max_substrate: return "max_substrate";
        case ExtremalStop::zero_substrate: return "zero_substrate";
        case ExtremalStop::max_time: return "max_time";
    }
    return "?";
}

struct ExtremalSample {
    double t_back = 0.0;
    double S = 0.0;
    double V = 0.0;
    double pS = 0.0;
    double pV = 0.0;
    double u1 = 0.0;
    double u2 = 0.0;
    double H_residual = 0.0;

    PlanarState state() const { return {S, V}; }
};

struct Extremal {
    ExtremalConfig config;
    std::vector<ExtremalSample> samples;
    ExtremalStop stop = ExtremalStop::max_time;
    double H0 = 0.0;

    double max_H_residual() const {
        double m = 0.0;
        for (const auto& s : samples) m = std::max(m, s.H_residual);
        return m;
    }
    double duration() const { return samples.back().t_back; }
};

namespace detail {

using Vec4 = std::array<double, 4>;

struct BackwardFlow {
    const ProcessParams& p;
    const GrowthModel& m;
    double eps;
    JacobianMode jac;

    AugmentedControls controls(const Vec4& y) const {
        return maximizing_controls(p, {y[0], y[1]}, {y[2], y[3]}, eps);
    }

    void operator()(const Vec4& y, Vec4& dy, double) const {
        const PlanarState z{std::max(y[0], 0.0), y[1]};
        const Vec2 pv{y[2], y[3]};
        const AugmentedControls u = controls(y);
        const Vec2 F = drift_F(p, m, z);
        const Vec2 G1 = control_field_G1(p, z);
        const Vec2 pd = adjoint_rate(p, m, z, pv, u, jac);
        dy[0] = -(F[0] + G1[0] * u.u1 + eps * u.u2);
        dy[1] = -(F[1] + G1[1] * u.u1);
        dy[2] = -pd[0];
        dy[3] = -pd[1];
    }
};

}  // namespace detail

/// Integrates state and adjoint backward from (S_ref, V_max) with p_f = (cos a, sin a).
inline Extremal backward_extremal(const ProcessParams& p, const GrowthModel& model,
                                  const ExtremalConfig& cfg) {
    namespace odeint = boost::numeric::odeint;
    if (cfg.epsilon == 0.0 || !std::isfinite(cfg.epsilon)) {
        throw ConfigError("regularization epsilon must be finite and nonzero");
    }
    if (!(cfg.step > 0.0)) throw ConfigError("extremal step must be positive");
    using detail::Vec4;
    detail::BackwardFlow flow{p, model, cfg.epsilon, cfg.jacobian};
    odeint::runge_kutta_fehlberg78<Vec4> rk;

    Extremal ex;
    ex.config = cfg;
    Vec4 y{p.S_ref, p.V_max, std::cos(cfg.alpha), std::sin(cfg.alpha)};
    ex.H0 = regularized_hamiltonian(p, model, {y[0], y[1]}, {y[2], y[3]}, cfg.epsilon);

    auto record = [&](double t, const Vec4& s) {
        const auto u = flow.controls(s);
        const PlanarState z{std::max(s[0], 0.0), s[1]};
        const double H = regularized_hamiltonian(p, model, z, {s[2], s[3]}, cfg.epsilon);
        if (!std::isfinite(H) || !std::isfinite(s[0]) || !std::isfinite(s[1])) {
            throw NumericalError("non-finite extremal state at t_back = " + std::to_string(t));
        }
        ex.samples.push_back({t, s[0], s[1], s[2], s[3], u.u1, u.u2, std::abs(H - ex.H0)});
    };
    record(0.0, y);

    const StopRules& st = cfg.stop;
    // Each stop rule as g(t, y) <= 0 once triggered.
    auto crossed = [&](double t, const Vec4& s) -> std::optional<ExtremalStop> {
        if (s[1] <= st.v_min) return ExtremalStop::min_volume;
        if (s[0] >= st.S_max) return ExtremalStop::max_substrate;
        if (s[0] <= 0.0) return ExtremalStop::zero_substrate;
        if (t >= st.t_back_max) return ExtremalStop::max_time;
        return std::nullopt;
    };

    double t = 0.0;
    while (true) {
        double h = std::min(cfg.step, st.t_back_max - t);
        Vec4 y1 = y;
        rk.do_step(flow, y1, t, h);
        const auto hit = crossed(t + h, y1);
        if (!hit) {
            y = y1;
            t += h;
            record(t, y);
            continue;
        }
        // Re-step from the last accepted point with a bisected step to land on the event.
        double lo = 0.0;
        double hi = h;
        Vec4 y_hi = y1;
        ExtremalStop kind = *hit;
        if (kind != ExtremalStop::max_time) {
            for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, t); ++it) {
                const double mid = 0.5 * (lo + hi);
                Vec4 ym = y;
                rk.do_step(flow, ym, t, mid);
                if (const auto c = crossed(t + mid, ym); c && *c != ExtremalStop::max_time) {
                    hi = mid;
                    y_hi = ym;
                    kind = *c;
                } else {
                    lo = mid;
                }
            }
        }
        t += hi;
        y = y_hi;
        if (kind == ExtremalStop::zero_substrate) y[0] = 0.0;
        record(t, y);
        ex.stop = kind;
        return ex;
    }
}

inline double pi() { return std::numbers::pi; }

/// n angles evenly spaced strictly inside (lo, hi).
inline std::vector<double> uniform_alpha_grid(std::size_t n, double lo, double hi) {
    std::vector<double> g(n);
    for (std::size_t k = 0; k < n; ++k) {
        g[k] = lo + (hi - lo) * static_cast<double>(k + 1) / static_cast<double>(n + 1);
    }
    return g;
}

struct FieldOptions {
    double step = 0.005;
    std::optional<StopRules> stop;
    JacobianMode jacobian = JacobianMode::analytic;
    unsigned threads = 1;
};

struct FieldFailure {
    double alpha = 0.0;
    std::string message;
};

struct ExtremalField {
    double epsilon = 0.0;
    std::vector<Extremal> extremals;  ///< ordered by the input angle list
    std::vector<FieldFailure> failures;
};

namespace detail {

template <class F>
void parallel_for(std::size_t n, unsigned threads, F&& body) {
    const unsigned w = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
    if (w <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned k = 0; k < w; ++k) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) body(i);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace detail

inline ExtremalField extremal_field(const ProcessParams& p, const GrowthModel& model,
                                    double epsilon, const std::vector<double>& alphas,
                                    const FieldOptions& opt = {}) {
    std::vector<std::optional<Extremal>> slots(alphas.size());
    std::vector<std::string> errors(alphas.size());
    const StopRules stop = opt.stop.value_or(default_stop_rules(p));
    detail::parallel_for(alphas.size(), opt.threads, [&](std::size_t i) {
        ExtremalConfig cfg{epsilon, alphas[i], opt.step, stop, opt.jacobian};
        try {
            slots[i] = backward_extremal(p, model, cfg);
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    });
    ExtremalField field;
    field.epsilon = epsilon;
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        if (slots[i]) {
            field.extremals.push_back(std::move(*slots[i]));
        } else {
            field.failures.push_back({alphas[i], errors[i]});
        }
    }
    return field;
}

struct AdaptiveGridOptions {
    double lo = std::numbers::pi / 2.0;
    double hi = std::numbers::pi;
    std::size_t scan_points = 64;
    double jump_tol = 0.05;       ///< normalized end-point/duration change that calls for refinement
    std::size_t max_evaluations = 4000;
    double min_offset = 1e-13;    ///< closest angle placed next to a critical angle
    double max_offset = 1e-3;
    std::size_t max_per_side = 10;
    double angle_weight = 0.5;   ///< share of plain angle spacing in the equidistribution
};

/// Angles where the end point of the extremal jumps at double resolution.
/// These are the extremals that ride a singular arc for the longest time.
namespace detail {

struct Signature {
    double S = 0.0;
    double V = 0.0;
    double T = 0.0;
};

}  // namespace detail

struct CriticalAngles {
    std::vector<double> alphas;
    /// Every evaluated angle with the end point of its extremal, sorted by angle.
    std::vector<std::pair<double, detail::Signature>> scan;
    double t_scale = 1.0;
    double jump_tol = 0.05;
    std::size_t evaluations = 0;
};

namespace detail {

inline Signature signature(const ProcessParams& p, const Extremal& e) {
    const auto& s = e.samples.back();
    return {s.S / p.S_in, s.V / p.V_max, s.t_back};
}

}  // namespace detail

inline CriticalAngles find_critical_angles(const ProcessParams& p, const GrowthModel& model,
                                           double epsilon, const AdaptiveGridOptions& ag,
                                           const FieldOptions& fo = {}) {
    CriticalAngles out;
    const StopRules stop = fo.stop.value_or(default_stop_rules(p));
    auto sig = [&](double a) {
        ++out.evaluations;
        const auto s = detail::signature(
            p, backward_extremal(p, model, {epsilon, a, fo.step, stop, fo.jacobian}));
        out.scan.emplace_back(a, s);
        return s;
    };
    const double t_scale = p.V_max / p.Q_max;
    out.t_scale = t_scale;
    out.jump_tol = ag.jump_tol;
    auto dist = [&](const detail::Signature& a, const detail::Signature& b) {
        return std::hypot(a.S - b.S, a.V - b.V, (a.T - b.T) / t_scale);
    };

    std::vector<double> grid;
    grid.push_back(ag.lo + 1e-9 * (ag.hi - ag.lo));
    for (double a : uniform_alpha_grid(ag.scan_points, ag.lo, ag.hi)) grid.push_back(a);
    grid.push_back(ag.hi - 1e-9 * (ag.hi - ag.lo));
    std::vector<detail::Signature> sigs(grid.size());
    detail::parallel_for(grid.size(), fo.threads, [&](std::size_t i) {
        sigs[i] = detail::signature(
            p, backward_extremal(p, model, {epsilon, grid[i], fo.step, stop, fo.jacobian}));
    });
    out.evaluations += grid.size();
    for (std::size_t i = 0; i < grid.size(); ++i) out.scan.emplace_back(grid[i], sigs[i]);

    // Depth-first subdivision of every interval whose end signatures differ.
    struct Item {
        double a, b;
        detail::Signature sa, sb;
    };
    std::vector<Item> stack;
    for (std::size_t i = grid.size() - 1; i-- > 0;) {
        stack.push_back({grid[i], grid[i + 1], sigs[i], sigs[i + 1]});
    }
    while (!stack.empty() && out.evaluations < ag.max_evaluations) {
        Item it = stack.back();
        stack.pop_back();
        if (dist(it.sa, it.sb) <= ag.jump_tol) continue;
        const double m = 0.5 * (it.a + it.b);
        if (!(m > it.a && m < it.b) || it.b - it.a <= 8.0 * std::numeric_limits<double>::epsilon() * std::abs(m)) {
            if (out.alphas.empty() || m - out.alphas.back() > 1e-12) out.alphas.push_back(m);
            continue;
        }
        const auto sm = sig(m);
        stack.push_back({m, it.b, sm, it.sb});
        stack.push_back({it.a, m, it.sa, sm});
    }
    std::sort(out.alphas.begin(), out.alphas.end());
    std::sort(out.scan.begin(), out.scan.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    return out;
}

/// n angles: log-spaced offsets on both sides of every critical angle, the rest uniform.
inline std::vector<double> adaptive_alpha_grid(const CriticalAngles& crit, std::size_t n,
                                               const AdaptiveGridOptions& ag) {
    std::vector<double> out;
    const std::size_t nc = crit.alphas.size();
    std::size_t per_side = 0;
    if (nc > 0) per_side = std::min(ag.max_per_side, n / (4 * nc));
    if (per_side > 0) {
        for (double c : crit.alphas) {
            for (std::size_t k = 0; k < per_side; ++k) {
                const double e = per_side == 1
                                     ? std::log10(ag.min_offset)
                                     : std::log10(ag.min_offset) +
                                           (std::log10(ag.max_offset) - std::log10(ag.min_offset)) *
                                               static_cast<double>(k) /
                                               static_cast<double>(per_side - 1);
                const double d = std::pow(10.0, e);
                out.push_back(c - d);
                out.push_back(c + d);
            }
        }
    }
    const std::size_t rest = n > out.size() ? n - out.size() : 0;
    if (crit.scan.size() < 2) {
        for (double a : uniform_alpha_grid(rest, ag.lo, ag.hi)) out.push_back(a);
    } else {
        // Spread the remaining angles evenly in end-point variation plus a share of
        // plain angle. An unresolved jump counts as one jump tolerance.
        const auto& sc = crit.scan;
        std::vector<double> cum(sc.size(), 0.0);
        const double span = sc.back().first - sc.front().first;
        for (std::size_t i = 1; i < sc.size(); ++i) {
            const auto& a = sc[i - 1].second;
            const auto& b = sc[i].second;
            const double d = std::hypot(a.S - b.S, a.V - b.V, (a.T - b.T) / crit.t_scale);
            cum[i] = cum[i - 1] + std::min(d, crit.jump_tol) +
                     ag.angle_weight * (sc[i].first - sc[i - 1].first) / span;
        }
        for (std::size_t k = 0; k < rest; ++k) {
            const double target = cum.back() * static_cast<double>(k + 1) / static_cast<double>(rest + 1);
            const auto it = std::upper_bound(cum.begin(), cum.end(), target);
            const std::size_t j = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(it - cum.begin(), 1, static_cast<std::ptrdiff_t>(cum.size() - 1)));
            const double w = cum[j] > cum[j - 1] ? (target - cum[j - 1]) / (cum[j] - cum[j - 1]) : 0.5;
            out.push_back(sc[j - 1].first + w * (sc[j].first - sc[j - 1].first));
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    out.erase(std::remove_if(out.begin(), out.end(),
                             [&](double a) { return !(a > ag.lo && a < ag.hi); }),
              out.end());
    return out;
}

struct MinTimeEstimate {
    double T_hat = 0.0;
    double nearest_alpha = 0.0;
    double distance = std::numeric_limits<double>::infinity();  ///< normalized coordinates
    double side = 0.0;  ///< sign of the cross product (segment direction, z0 - foot point)
};

namespace detail {

struct Foot {
    double dist2 = std::numeric_limits<double>::infinity();
    double T = 0.0;
    double cross = 0.0;
};

inline Foot project_on_extremal(const ProcessParams& p, const Extremal& e, const PlanarState& z0) {
    const double zs = z0.S / p.S_in;
    const double zv = z0.V / p.V_max;
    Foot best;
    const auto& s = e.samples;
    if (s.size() == 1) {
        const double ds = s[0].S / p.S_in - zs;
        const double dv = s[0].V / p.V_max - zv;
        best.dist2 = ds * ds + dv * dv;
        best.T = s[0].t_back;
        return best;
    }
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
        const double ax = s[i].S / p.S_in, ay = s[i].V / p.V_max;
        const double bx = s[i + 1].S / p.S_in, by = s[i + 1].V / p.V_max;
        const double dx = bx - ax, dy = by - ay;
        const double L2 = dx * dx + dy * dy;
        double u = L2 > 0.0 ? ((zs - ax) * dx + (zv - ay) * dy) / L2 : 0.0;
        u = std::clamp(u, 0.0, 1.0);
        const double fx = ax + u * dx - zs, fy = ay + u * dy - zv;
        const double d2 = fx * fx + fy * fy;
        if (d2 < best.dist2) {
            best.dist2 = d2;
            best.T = s[i].t_back + u * (s[i + 1].t_back - s[i].t_back);
            best.cross = dx * (zv - (ay + u * dy)) - dy * (zs - (ax + u * dx));
        }
    }
    return best;
}

}  // namespace detail

/// Reads the backward time at the field point closest to z0 in (S/S_in, V/V_max).
/// Distances are measured to the polyline segments and the time is interpolated
/// along the closest one.
inline MinTimeEstimate approximate_min_time(const ProcessParams& p, const ExtremalField& field,
                                            const PlanarState& z0) {
    MinTimeEstimate best;
    double best2 = std::numeric_limits<double>::infinity();
    for (const auto& e : field.extremals) {
        const auto f = detail::project_on_extremal(p, e, z0);
        if (f.dist2 < best2) {
            best2 = f.dist2;
            best.T_hat = f.T;
            best.nearest_alpha = e.config.alpha;
            best.side = f.cross;
        }
    }
    best.distance = std::sqrt(best2);
    return best;
}

struct RefineOptions {
    double tol = 1e-7;          ///< normalized distance at which the search stops
    int max_iterations = 80;
};

/// Narrows the angle between the two neighbouring extremals of the field that
/// pass on opposite sides of z0, until one passes through z0 within `tol`.
/// Falls back to the plain estimate when no such pair exists.
inline MinTimeEstimate refine_min_time(const ProcessParams& p, const GrowthModel& model,
                                       const ExtremalField& field, const PlanarState& z0,
                                       const RefineOptions& ro = {}, const FieldOptions& fo = {}) {
    MinTimeEstimate best = approximate_min_time(p, field, z0);
    if (best.distance <= ro.tol || field.extremals.size() < 2) return best;

    const auto& ex = field.extremals;
    std::vector<detail::Foot> feet(ex.size());
    for (std::size_t i = 0; i < ex.size(); ++i) feet[i] = detail::project_on_extremal(p, ex[i], z0);
    std::optional<std::size_t> pick;
    double pick_score = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < ex.size(); ++i) {
        if ((feet[i].cross < 0.0) == (feet[i + 1].cross < 0.0)) continue;
        const double score = std::sqrt(feet[i].dist2) + std::sqrt(feet[i + 1].dist2);
        if (score < pick_score) {
            pick_score = score;
            pick = i;
        }
    }
    if (!pick) return best;

    const StopRules stop = fo.stop.value_or(default_stop_rules(p));
    double a = ex[*pick].config.alpha;
    double b = ex[*pick + 1].config.alpha;
    const bool neg_a = feet[*pick].cross < 0.0;
    for (int it = 0; it < ro.max_iterations; ++it) {
        const double m = 0.5 * (a + b);
        if (!(m > a && m < b)) break;
        const Extremal e = backward_extremal(p, model, {field.epsilon, m, fo.step, stop, fo.jacobian});
        const auto f = detail::project_on_extremal(p, e, z0);
        const double d = std::sqrt(f.dist2);
        if (d < best.distance) {
            best = {f.T, m, d, f.cross};
        }
        if (d <= ro.tol) break;
        ((f.cross < 0.0) == neg_a ? a : b) = m;
    }
    return best;
}

}  // namespace fedbatch
