#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "fedbatch/dynamics.hpp"
#include "fedbatch/error.hpp"
#include "fedbatch/numerics/quadrature.hpp"
#include "fedbatch/policy.hpp"

namespace fedbatch {

enum class EventKind { hit_Smax_arc, hit_Vmax, hit_Sref, left_domain };

inline const char* to_string(EventKind k) {
    switch (k) {
        case EventKind::hit_Smax_arc: return "hit_Smax_arc";
        case EventKind::hit_Vmax: return "hit_Vmax";
        case EventKind::hit_Sref: return "hit_Sref";
        case EventKind::left_domain: return "left_domain";
    }
    return "?";
}

template <class State>
struct TrajectorySample {
    double t = 0.0;
    State state;
    double Q = 0.0;  ///< flow applied on the step that ends at t (the initial flow at t = 0)
};

template <class State>
struct TrajectoryEvent {
    double t = 0.0;
    EventKind kind = EventKind::hit_Vmax;
    State state;
};

template <class State>
struct BasicTrajectory {
    std::vector<TrajectorySample<State>> samples;
    std::vector<TrajectoryEvent<State>> events;
    std::optional<EventKind> stop_event;  ///< empty when the run ended at t_max
    bool saturated = false;               ///< the arc flow hit Q_max at some point

    double final_time() const { return samples.back().t; }
    const State& final_state() const { return samples.back().state; }

    std::optional<TrajectoryEvent<State>> first(EventKind k) const {
        for (const auto& e : events) {
            if (e.kind == k) return e;
        }
        return std::nullopt;
    }
};

using Trajectory = BasicTrajectory<PlanarState>;
using FullTrajectory = BasicTrajectory<FullState>;

/// Which events end a run. Leaving the domain (S >= S_in or S <= 0) always does.
struct StopSpec {
    bool at_Sref = true;
    bool Sref_only_at_Vmax = false;  ///< ignore S_ref crossings below V_max (target set semantics)
    bool at_Vmax = false;
    std::optional<double> at_S_level;
};

struct SimulationOptions {
    double rtol = 1e-9;
    double atol = 1e-11;
    double event_tol = 1e-10;
    std::optional<double> t_max;
    std::vector<double> output_times;  ///< extra samples read off the dense output, sorted
};

/// Batch time at fixed volume from S_hi down to S_lo: integral of dS / (mu(S) X(S, V)).
inline double batch_time(const ProcessParams& p, const GrowthModel& model, double S_lo, double S_hi,
                         double V) {
    if (!(S_hi >= S_lo)) throw DomainError("batch_time needs S_hi >= S_lo");
    auto f = [&](double S) { return 1.0 / (model.mu(S) * (p.M0 / V + p.S_in - S)); };
    return numerics::integrate(f, S_lo, S_hi, 1e-10);
}

/// Fill-time bound plus the batch time from S_in to S_ref at full volume.
inline double default_t_max(const ProcessParams& p, const GrowthModel& model) {
    ProcessParams q = p;
    q.M0 = std::max(p.M0, 1e-3 * p.S_in * p.V_max);
    return 10.0 * p.V_max / p.Q_max + batch_time(q, model, p.S_ref, p.S_in, p.V_max);
}

namespace detail {

struct PlanarSystem {
    static constexpr std::size_t N = 2;
        static constexpr std::size_t iV = 1;
    using Vec = std::array<double, 2>;
    using State = PlanarState;

    const ProcessParams& p;
    const GrowthModel& m;

    static Vec pack(const PlanarState& z) { return {z.S, z.V}; }
    static PlanarState unpack(const Vec& x) { return {x[0], x[1]}; }
    static double S(const Vec& x) { return x[0]; }
    static void set_S(Vec& x, double S) { x[0] = S; }
    static void set_V(Vec& x, double V) { x[1] = V; }

    double biomass(const Vec& x) const { return p.M0 / x[1] + p.S_in - x[0]; }

    void rhs(const Vec& x, Vec& dx, double Q, bool pinned) const {
        const double S = std::max(x[0], 0.0);
        dx[0] = pinned ? 0.0 : -m.mu(S) * biomass(x) + Q / x[1] * (p.S_in - x[0]);
        dx[1] = Q;
    }
};

// Integrated in mass coordinates (V S, V B, V): the conserved quantity is linear there,
// so Runge-Kutta steps and their dense output keep it to round-off.
struct FullSystem {
    static constexpr std::size_t N = 3;
    static constexpr std::size_t iV = 2;
    using Vec = std::array<double, 3>;
    using State = FullState;

    const ProcessParams& p;
    const GrowthModel& m;

    static Vec pack(const FullState& x) { return {x.S * x.V, x.B * x.V, x.V}; }
    static FullState unpack(const Vec& x) { return {x[0] / x[2], x[1] / x[2], x[2]}; }
    static double S(const Vec& x) { return x[0] / x[2]; }
    static void set_S(Vec& x, double S) { x[0] = S * x[2]; }
    static void set_V(Vec& x, double V) {
        x[0] *= V / x[2];
        x[1] *= V / x[2];
        x[2] = V;
    }

    double biomass(const Vec& x) const { return x[1] / (x[2] * p.y); }

    void rhs(const Vec& x, Vec& dx, double Q, bool pinned) const {
        const double S = x[0] / x[2];
        const double growth = m.mu(std::max(S, 0.0)) * x[1];
        dx[0] = pinned ? S * Q : -growth / p.y + Q * p.S_in;
        dx[1] = growth;
        dx[2] = Q;
    }
};

enum class GuardType { S_level, V_level, time, saturation };
enum class GuardAction { switch_mode, stop };

struct Guard {
    GuardType type;
    double level;
    GuardAction action;
    std::optional<EventKind> event;
    int direction = 0;  ///< +1 fires on upward crossings only, -1 downward only, 0 both
};

struct Mode {
    bool pinned = false;
    double Q = 0.0;
    std::vector<Guard> guards;
};

template <class Sys>
class Engine {
public:
    using Vec = typename Sys::Vec;
    using State = typename Sys::State;

    Engine(const Sys& sys, const FeedbackPolicy& policy, const StopSpec& stop,
           const SimulationOptions& opt, double t_max)
        : sys_(sys), p_(sys.p), policy_(policy), stop_(stop), opt_(opt), t_max_(t_max) {}

    BasicTrajectory<State> run(Vec x) {
        BasicTrajectory<State> traj;
        double t = 0.0;
        Mode mode = select(t, x, traj);
        traj.samples.push_back({t, Sys::unpack(x), flow(mode, x)});
        int stalls = 0;
        while (true) {
            if (target_reached(x)) {
                record_event(traj, t, x, EventKind::hit_Sref);
                traj.stop_event = EventKind::hit_Sref;
                return traj;
            }
            const double t_start = t;
            const auto outcome = integrate_mode(mode, t, x, traj);
            if (outcome == Outcome::stopped) return traj;
            stalls = (t - t_start <= opt_.event_tol) ? stalls + 1 : 0;
            if (stalls > 8) {
                throw NumericalError("feedback switching stalled at t = " + std::to_string(t));
            }
            mode = select(t, x, traj);
        }
    }

private:
    enum class Outcome { switched, stopped };

    double qeq(const Vec& x, double level) const {
        Vec y = x;
        Sys::set_S(y, level);
        return sys_.m.mu(level) * sys_.biomass(y) * x[Sys::iV] / (p_.S_in - level);
    }

    double flow(const Mode& mode, const Vec& x) const {
        return mode.pinned ? std::min(qeq(x, policy_.value()), p_.Q_max) : mode.Q;
    }

    bool target_reached(const Vec& x) const {
        if (!stop_.at_Sref || Sys::S(x) > p_.S_ref) return false;
        return !stop_.Sref_only_at_Vmax || x[Sys::iV] >= p_.V_max;
    }

    Mode select(double t, const Vec& x, BasicTrajectory<State>& traj) const {
        Mode mode;
        const double S = Sys::S(x);
        const double V = x[Sys::iV];
        const bool full = V >= p_.V_max;
        switch (policy_.kind()) {
            case PolicyKind::constant: mode.Q = full ? 0.0 : policy_.value(); break;
            case PolicyKind::piecewise_constant: {
                const std::size_t k = policy_.piece(t);
                mode.Q = full ? 0.0 : policy_.flows()[k];
                if (k < policy_.breaks().size()) {
                    mode.guards.push_back({GuardType::time, policy_.breaks()[k],
                                           GuardAction::switch_mode, std::nullopt, +1});
                }
                break;
            }
            case PolicyKind::bang:
            case PolicyKind::singular_synthesis: {
                const double level = policy_.value();
                if (full) {
                    mode.Q = 0.0;
                } else if (std::abs(S - level) <= FeedbackPolicy::pin_tolerance(p_)) {
                    if (qeq(x, level) <= p_.Q_max) {
                        mode.pinned = true;
                        mode.guards.push_back({GuardType::saturation, 0.0, GuardAction::switch_mode,
                                               std::nullopt, +1});
                    } else {
                        mode.Q = p_.Q_max;
                        traj.saturated = true;
                    }
                } else if (S < level) {
                    mode.Q = p_.Q_max;
                    mode.guards.push_back({GuardType::S_level, level, GuardAction::switch_mode,
                                           EventKind::hit_Smax_arc, +1});
                } else {
                    mode.Q = 0.0;
                    mode.guards.push_back({GuardType::S_level, level, GuardAction::switch_mode,
                                           EventKind::hit_Smax_arc, -1});
                }
                break;
            }
        }
        check_flow(p_, mode.Q);
        if (!full && (mode.pinned || mode.Q > 0.0)) {
            mode.guards.push_back({GuardType::V_level, p_.V_max,
                                   stop_.at_Vmax ? GuardAction::stop : GuardAction::switch_mode,
                                   EventKind::hit_Vmax, +1});
        }
        if (stop_.at_Sref && (!stop_.Sref_only_at_Vmax || full)) {
            mode.guards.push_back(
                {GuardType::S_level, p_.S_ref, GuardAction::stop, EventKind::hit_Sref, -1});
        }
        if (stop_.at_S_level) {
            mode.guards.push_back({GuardType::S_level, *stop_.at_S_level, GuardAction::stop,
                                   EventKind::hit_Smax_arc, 0});
        }
        mode.guards.push_back(
            {GuardType::S_level, p_.S_in, GuardAction::stop, EventKind::left_domain, +1});
        mode.guards.push_back({GuardType::S_level, 0.0, GuardAction::stop, EventKind::left_domain, -1});
        return mode;
    }

    double eval(const Guard& g, double t, const Vec& x) const {
        switch (g.type) {
            case GuardType::S_level: return Sys::S(x) - g.level;
            case GuardType::V_level: return x[Sys::iV] - g.level;
            case GuardType::time: return t - g.level;
            case GuardType::saturation: return qeq(x, policy_.value()) - p_.Q_max;
        }
        return 0.0;
    }

    static bool fires(const Guard& g, double g0, double g1) {
        if (g0 == 0.0) return false;
        const bool up = g0 < 0.0 && g1 >= 0.0;
        const bool down = g0 > 0.0 && g1 <= 0.0;
        return (g.direction >= 0 && up) || (g.direction <= 0 && down);
    }

    void record_event(BasicTrajectory<State>& traj, double t, const Vec& x, EventKind k) const {
        traj.events.push_back({t, k, Sys::unpack(x)});
    }

    void push_sample(BasicTrajectory<State>& traj, double t, const Vec& x, double Q) const {
        if (!std::isfinite(x[0]) || !std::isfinite(x[Sys::iV])) {
            throw NumericalError("non-finite state at t = " + std::to_string(t));
        }
        if (t > traj.samples.back().t) traj.samples.push_back({t, Sys::unpack(x), Q});
    }

    Outcome integrate_mode(const Mode& mode, double& t, Vec& x, BasicTrajectory<State>& traj) {
        namespace odeint = boost::numeric::odeint;
        auto rhs = [this, &mode](const Vec& y, Vec& dy, double) {
            sys_.rhs(y, dy, mode.pinned ? std::min(qeq(y, policy_.value()), p_.Q_max) : mode.Q,
                     mode.pinned);
        };
        auto stepper = odeint::make_dense_output(opt_.atol, opt_.rtol,
                                                 odeint::runge_kutta_dopri5<Vec>());
        stepper.initialize(x, t, 1e-4);

        std::vector<double> g_old(mode.guards.size());
        for (std::size_t i = 0; i < mode.guards.size(); ++i) g_old[i] = eval(mode.guards[i], t, x);

        while (true) {
            Vec x0 = stepper.current_state();
            try {
                stepper.do_step(rhs);
            } catch (const odeint::odeint_error& e) {
                throw StiffnessError(std::string("step size control failed: ") + e.what(),
                                     stepper.current_time(), {x0.begin(), x0.end()});
            }
            const double t0 = stepper.previous_time();
            const double t1 = stepper.current_time();
            if (!(t1 - t0 > 1e-14 * std::max(1.0, std::abs(t1)))) {
                throw StiffnessError("step size underflow", t0, {x0.begin(), x0.end()});
            }
            const Vec x1 = stepper.current_state();

            // Earliest guard crossing inside (t0, t1].
            std::optional<std::size_t> hit;
            double t_hit = std::numeric_limits<double>::infinity();
            Vec x_hit{};
            for (std::size_t i = 0; i < mode.guards.size(); ++i) {
                const Guard& g = mode.guards[i];
                const double g1 = eval(g, t1, x1);
                if (!fires(g, g_old[i], g1)) continue;
                double lo = t0;
                double hi = t1;
                Vec xm = x1;
                if (g.type == GuardType::time) {
                    hi = g.level;
                    stepper.calc_state(hi, xm);
                } else {
                    const bool neg0 = g_old[i] < 0.0;
                    while (hi - lo > opt_.event_tol) {
                        const double mid = 0.5 * (lo + hi);
                        Vec y;
                        stepper.calc_state(mid, y);
                        const double gm = eval(g, mid, y);
                        const bool same = neg0 ? gm < 0.0 : gm > 0.0;
                        if (same) {
                            lo = mid;
                        } else {
                            hi = mid;
                            xm = y;
                        }
                    }
                }
                if (hi < t_hit) {
                    t_hit = hi;
                    x_hit = xm;
                    hit = i;
                }
            }

            const double t_end = std::min(hit ? t_hit : t1, t_max_);
            auto it = std::upper_bound(opt_.output_times.begin(), opt_.output_times.end(), t0);
            for (; it != opt_.output_times.end() && *it < t_end; ++it) {
                Vec y;
                stepper.calc_state(*it, y);
                push_sample(traj, *it, y, flow(mode, y));
            }

            if (!hit && t1 >= t_max_) {
                Vec xe;
                stepper.calc_state(t_max_, xe);
                push_sample(traj, t_max_, xe, flow(mode, xe));
                t = t_max_;
                x = xe;
                return Outcome::stopped;
            }
            if (!hit) {
                push_sample(traj, t1, x1, flow(mode, x1));
                for (std::size_t i = 0; i < mode.guards.size(); ++i) {
                    g_old[i] = eval(mode.guards[i], t1, x1);
                }
                continue;
            }

            const Guard& g = mode.guards[*hit];
            if (g.type == GuardType::S_level) Sys::set_S(x_hit, g.level);
            if (g.type == GuardType::V_level) Sys::set_V(x_hit, g.level);
            if (t_hit > t_max_) {
                Vec xe;
                stepper.calc_state(t_max_, xe);
                push_sample(traj, t_max_, xe, flow(mode, xe));
                t = t_max_;
                x = xe;
                return Outcome::stopped;
            }
            push_sample(traj, t_hit, x_hit, flow(mode, x_hit));
            t = t_hit;
            x = x_hit;
            if (g.event) record_event(traj, t, x, *g.event);
            if (g.type == GuardType::saturation) traj.saturated = true;
            if (g.action == GuardAction::stop) {
                traj.stop_event = g.event;
                return Outcome::stopped;
            }
            return Outcome::switched;
        }
    }

    const Sys& sys_;
    const ProcessParams& p_;
    const FeedbackPolicy& policy_;
    StopSpec stop_;
    SimulationOptions opt_;
    double t_max_;
};

inline void check_policy(const ProcessParams& p, const GrowthModel& model,
                         const FeedbackPolicy& policy) {
    switch (policy.kind()) {
        case PolicyKind::constant: check_flow(p, policy.value()); break;
        case PolicyKind::piecewise_constant:
            for (double q : policy.flows()) check_flow(p, q);
            break;
        case PolicyKind::bang:
            if (!(policy.value() > 0.0 && policy.value() < p.S_in)) {
                throw DomainError("bang threshold must lie in (0, S_in)");
            }
            break;
        case PolicyKind::singular_synthesis:
            if (!(policy.value() > 0.0 && policy.value() < p.S_in) ||
                !is_local_maximum(model, policy.value())) {
                throw DomainError("singular synthesis level " + std::to_string(policy.value()) +
                                  " is not a local maximum of mu inside (0, S_in)");
            }
            break;
    }
}

}  // namespace detail

/// Event-driven planar simulation. The integrator restarts at every switch of the feedback law.
inline Trajectory simulate(const ProcessParams& p, const GrowthModel& model,
                           const FeedbackPolicy& policy, const PlanarState& z0,
                           const StopSpec& stop = {}, const SimulationOptions& opt = {}) {
    p.validate();
    if (!(z0.S >= 0.0 && z0.S < p.S_in && z0.V > 0.0 && z0.V <= p.V_max)) {
        throw DomainError("initial state (S=" + std::to_string(z0.S) + ", V=" +
                          std::to_string(z0.V) + ") outside [0, S_in) x (0, V_max]");
    }
    detail::check_policy(p, model, policy);
    const double t_max = opt.t_max.value_or(default_t_max(p, model));
    detail::PlanarSystem sys{p, model};
    detail::Engine<detail::PlanarSystem> engine(sys, policy, stop, opt, t_max);
    return engine.run(detail::PlanarSystem::pack(z0));
}

/// Three-state simulation. The mass offset M0 is taken from the initial state.
inline FullTrajectory simulate_full(const ProcessParams& params, const GrowthModel& model,
                                    const FeedbackPolicy& policy, const FullState& x0,
                                    const StopSpec& stop = {}, const SimulationOptions& opt = {}) {
    params.validate();
    if (!(x0.S >= 0.0 && x0.S < params.S_in && x0.B >= 0.0 && x0.V > 0.0 &&
          x0.V <= params.V_max)) {
        throw DomainError("initial three-state point outside the domain");
    }
    ProcessParams p = params;
    p.M0 = conserved_M(params, x0);
    detail::check_policy(p, model, policy);
    const double t_max = opt.t_max.value_or(default_t_max(p, model));
    detail::FullSystem sys{p, model};
    detail::Engine<detail::FullSystem> engine(sys, policy, stop, opt, t_max);
    return engine.run(detail::FullSystem::pack(x0));
}

}  // namespace fedbatch
