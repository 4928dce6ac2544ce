#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/tools/minima.hpp>
#include <boost/numeric/odeint.hpp>

#include "fedbatch/dynamics.hpp"
#include "fedbatch/growth.hpp"
#include "fedbatch/simulate.hpp"

namespace fedbatch {

/// Costates of (S, V) and the cost multiplier, normalized to -1 for normal extremals.
struct Adjoint {
    double lambda_S = 0.0;
    double lambda_V = 0.0;
    double lambda_0 = -1.0;
};

inline double hamiltonian(const ProcessParams& p, const GrowthModel& model, const PlanarState& z,
                          const Adjoint& a, double Q) {
    const double X = biomass_X(p, z);
    return a.lambda_0 - a.lambda_S * model.mu(z.S) * X +
           Q * (a.lambda_S * (p.S_in - z.S) / z.V + a.lambda_V);
}

/// phi = dH/dQ. Positive means feed at Q_max, negative means stop feeding.
inline double switching_function(const ProcessParams& p, const PlanarState& z, const Adjoint& a) {
    if (!(z.V > 0.0)) throw DomainError("switching_function needs V > 0");
    return a.lambda_S * (p.S_in - z.S) / z.V + a.lambda_V;
}

struct AdjointRate {
    double dlambda_S = 0.0;
    double dlambda_V = 0.0;
};

inline AdjointRate adjoint_field(const ProcessParams& p, const GrowthModel& model,
                                 const PlanarState& z, const Adjoint& a, double Q) {
    const double X = biomass_X(p, z);
    const double mu = model.mu(z.S);
    return {a.lambda_S * (model.mu_prime(z.S) * X - mu + Q / z.V),
            a.lambda_S * (-mu * p.M0 + Q * (p.S_in - z.S)) / (z.V * z.V)};
}

/// Time derivative of the switching function along any state-adjoint pair. The
/// flow Q cancels out.
inline double switching_rate(const ProcessParams& p, const GrowthModel& model,
                             const PlanarState& z, const Adjoint& a) {
    return a.lambda_S * (p.S_in - z.S) * model.mu_prime(z.S) * biomass_X(p, z) / z.V;
}

struct SingularArc {
    double S_bar = 0.0;
    double mu_value = 0.0;
};

inline SingularArc make_singular_arc(const ProcessParams& p, const GrowthModel& model,
                                     double S_bar) {
    if (!(S_bar > p.S_ref && S_bar < p.S_in) || !is_local_maximum(model, S_bar)) {
        throw DomainError("S_bar = " + std::to_string(S_bar) +
                          " is not a local maximum of mu inside (S_ref, S_in)");
    }
    return {S_bar, model.mu(S_bar)};
}

struct SingularFlow {
    double value = 0.0;
    bool clamped = false;  ///< the unclamped value exceeds Q_max
};

/// Flow keeping S on the arc S = S_bar: mu(S_bar) (M0/(S_in - S_bar) + V).
inline SingularFlow singular_flow_Qs(const ProcessParams& p, const GrowthModel& model,
                                     double S_bar, double V) {
    const SingularArc arc = make_singular_arc(p, model, S_bar);
    if (!(V > 0.0)) throw DomainError("singular_flow_Qs needs V > 0");
    const double q = arc.mu_value * (p.M0 / (p.S_in - S_bar) + V);
    return {q, q > p.Q_max};
}

/// Volume along the arc started at (S_bar, V1) at time t1.
inline double singular_volume(const ProcessParams& p, const GrowthModel& model, double S_bar,
                              double V1, double t1, double t) {
    const double mu = model.mu(S_bar);
    const double e = std::exp(mu * (t - t1));
    return V1 * e + p.M0 / (p.S_in - S_bar) * (e - 1.0);
}

/// Time spent on the arc to go from V0 to V1 under the unclamped flow.
inline double singular_duration(const ProcessParams& p, const GrowthModel& model, double S_bar,
                                double V0, double V1) {
    const double c = p.M0 / (p.S_in - S_bar);
    return std::log((V1 + c) / (V0 + c)) / model.mu(S_bar);
}

enum class FoldClass { elliptic, hyperbolic, degenerate };

inline const char* to_string(FoldClass f) {
    switch (f) {
        case FoldClass::elliptic: return "elliptic";
        case FoldClass::hyperbolic: return "hyperbolic";
        case FoldClass::degenerate: return "degenerate";
    }
    return "?";
}

inline FoldClass classify_fold(const GrowthModel& model, double S_bar) {
    const double d1 = model.mu_prime(S_bar);
    const double d2 = model.mu_second(S_bar);
    const bool critical = std::abs(d1) <= 1e-9 ||
                          (d2 != 0.0 && std::abs(d1 / d2) <= 1e-6 * std::max(1.0, S_bar));
    if (!critical) {
        throw DomainError("mu'(" + std::to_string(S_bar) + ") = " + std::to_string(d1) +
                          " is not zero");
    }
    if (std::abs(d2) < 1e-10) return FoldClass::degenerate;
    return d2 > 0.0 ? FoldClass::elliptic : FoldClass::hyperbolic;
}

struct Assumption3Report {
    bool holds = false;
    bool defined = false;             ///< false when mu has no interior maximum
    double max_required_flow = 0.0;   ///< max of mu(S)(M0/(S_in - S) + V_max) over [S-, S+]
    double argmax_S = 0.0;
    double S_lo = 0.0;
    double S_hi = 0.0;
};

/// Q_max must beat the arc flow at full volume everywhere between the extreme maxima.
inline Assumption3Report check_assumption3(const ProcessParams& p, const GrowthModel& model,
                                           const ScanOptions& opt = {}) {
    Assumption3Report r;
    const auto cps = find_local_maxima(model, 0.0, p.S_in, opt);
    if (cps.maxima.empty()) return r;
    r.defined = true;
    r.S_lo = cps.maxima.front().S_bar;
    r.S_hi = cps.maxima.back().S_bar;
    auto need = [&](double S) { return model.mu(S) * (p.M0 / (p.S_in - S) + p.V_max); };
    if (r.S_hi <= r.S_lo) {
        r.argmax_S = r.S_lo;
        r.max_required_flow = need(r.S_lo);
    } else {
        const std::size_t n = std::max<std::size_t>(opt.grid_points, 3);
        const double h = (r.S_hi - r.S_lo) / static_cast<double>(n - 1);
        std::size_t best = 0;
        double best_v = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            const double S = i + 1 == n ? r.S_hi : r.S_lo + h * static_cast<double>(i);
            const double v = need(S);
            if (v > best_v) {
                best_v = v;
                best = i;
            }
        }
        const double a = r.S_lo + h * static_cast<double>(best == 0 ? 0 : best - 1);
        const double b = std::min(r.S_hi, r.S_lo + h * static_cast<double>(best + 1));
        const auto [S_star, neg] =
            boost::math::tools::brent_find_minima([&](double S) { return -need(S); }, a, b, 52);
        r.argmax_S = S_star;
        r.max_required_flow = -neg;
        if (best_v > r.max_required_flow) {
            r.max_required_flow = best_v;
            r.argmax_S = best + 1 == n ? r.S_hi : r.S_lo + h * static_cast<double>(best);
        }
    }
    r.holds = p.Q_max > r.max_required_flow;
    return r;
}

struct SigmaCurve {
    std::vector<PlanarState> samples;  ///< (sigma(V), V), from V_max downwards
    bool increasing = false;           ///< sigma strictly increasing in V over the samples
    bool hit_zero = false;             ///< stopped because sigma reached 0
};

struct SigmaOptions {
    double v_min_fraction = 0.02;
    double rtol = 1e-10;
    double atol = 1e-12;
};

/// The full-feed trajectory ending at (S_ref, V_max), parameterized by volume.
inline SigmaCurve sigma_curve(const ProcessParams& p, const GrowthModel& model,
                              const SigmaOptions& opt = {}) {
    namespace odeint = boost::numeric::odeint;
    p.validate();
    using Vec = std::array<double, 1>;
    const double v_min = opt.v_min_fraction * p.V_max;
    // w = V_max - v runs forward while v runs down.
    auto rhs = [&](const Vec& s, Vec& ds, double w) {
        const double v = p.V_max - w;
        const double sig = std::max(s[0], 0.0);
        ds[0] = (model.mu(sig) / p.Q_max) * (p.M0 / v + p.S_in - sig) - (p.S_in - sig) / v;
    };
    SigmaCurve out;
    out.samples.push_back({p.S_ref, p.V_max});
    auto stepper = odeint::make_dense_output(opt.atol, opt.rtol, odeint::runge_kutta_dopri5<Vec>());
    const double w_end = p.V_max - v_min;
    stepper.initialize(Vec{p.S_ref}, 0.0, 1e-4);
    while (stepper.current_time() < w_end) {
        stepper.do_step(rhs);
        double w1 = stepper.current_time();
        Vec s1 = stepper.current_state();
        if (s1[0] <= 0.0) {
            double lo = stepper.previous_time();
            double hi = w1;
            while (hi - lo > 1e-12 * p.V_max) {
                const double mid = 0.5 * (lo + hi);
                Vec y;
                stepper.calc_state(mid, y);
                (y[0] > 0.0 ? lo : hi) = mid;
            }
            out.samples.push_back({0.0, p.V_max - hi});
            out.hit_zero = true;
            break;
        }
        if (w1 >= w_end) {
            stepper.calc_state(w_end, s1);
            w1 = w_end;
        }
        out.samples.push_back({s1[0], p.V_max - w1});
    }
    out.increasing = true;
    for (std::size_t i = 1; i < out.samples.size(); ++i) {
        if (!(out.samples[i].S < out.samples[i - 1].S)) out.increasing = false;
    }
    return out;
}

struct TargetTime {
    double T = 0.0;
    Trajectory trajectory;
    bool saturated = false;
    double fill_time = 0.0;    ///< phase (i): bang feeding or batch toward the arc
    double arc_time = 0.0;     ///< phase (ii): on S = S_bar
    double batch_time = 0.0;   ///< phase (iii): at V_max down to S_ref
    double batch_quadrature = 0.0;
};

/// Time to reach (S_ref, V_max) under the feedback built on the arc S = S_bar.
inline TargetTime time_to_target(const ProcessParams& p, const GrowthModel& model, double S_bar,
                                 const PlanarState& z0, const SimulationOptions& opt = {}) {
    if (!in_working_domain(p, z0)) {
        throw DomainError("time_to_target start (S=" + std::to_string(z0.S) + ", V=" +
                          std::to_string(z0.V) + ") outside [S_ref, S_in) x (0, V_max]");
    }
    make_singular_arc(p, model, S_bar);
    TargetTime r;
    StopSpec stop;
    stop.at_Sref = true;
    stop.Sref_only_at_Vmax = true;
    r.trajectory = simulate(p, model, FeedbackPolicy::singular_synthesis(S_bar), z0, stop, opt);
    if (r.trajectory.stop_event != EventKind::hit_Sref) {
        if (r.trajectory.stop_event == EventKind::left_domain) {
            throw NumericalError("trajectory left the domain before reaching the target");
        }
        throw TimeoutError("target not reached within t_max = " +
                           std::to_string(r.trajectory.final_time()));
    }
    r.T = r.trajectory.final_time();
    r.saturated = r.trajectory.saturated;

    const auto arc = r.trajectory.first(EventKind::hit_Smax_arc);
    const auto full = r.trajectory.first(EventKind::hit_Vmax);
    const bool starts_on_arc = std::abs(z0.S - S_bar) <= FeedbackPolicy::pin_tolerance(p);
    const double t_full = z0.V >= p.V_max ? 0.0 : (full ? full->t : r.T);
    double t_arc = t_full;
    if (starts_on_arc) {
        t_arc = 0.0;
    } else if (arc && arc->t <= t_full) {
        t_arc = arc->t;
    }
    r.fill_time = t_arc;
    r.arc_time = t_full - t_arc;
    r.batch_time = r.T - t_full;
    const double S_exit = z0.V >= p.V_max ? z0.S : (full ? full->state.S : p.S_ref);
    r.batch_quadrature = S_exit > p.S_ref ? fedbatch::batch_time(p, model, p.S_ref, S_exit, p.V_max)
                                          : 0.0;
    return r;
}

}  // namespace fedbatch
