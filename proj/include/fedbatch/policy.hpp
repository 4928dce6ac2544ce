#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "fedbatch/dynamics.hpp"

namespace fedbatch {

enum class PolicyKind { constant, bang, singular_synthesis, piecewise_constant };

inline const char* to_string(PolicyKind k) {
    switch (k) {
        case PolicyKind::constant: return "constant";
        case PolicyKind::bang: return "bang";
        case PolicyKind::singular_synthesis: return "singular_synthesis";
        case PolicyKind::piecewise_constant: return "piecewise_constant";
    }
    return "?";
}

/// Feed-rate law Q(t, S, V).
///
/// Every law feeds nothing once the tank is full. `bang(th)` and
/// `singular_synthesis(S_bar)` share the switching rule: Q_max below the level,
/// zero above it, and on the level the flow that keeps S fixed (clamped to
/// Q_max). The singular variant additionally requires the level to be a local
/// maximum of the growth rate.
class FeedbackPolicy {
public:
    static FeedbackPolicy constant(double Q) { return FeedbackPolicy(PolicyKind::constant, Q); }
    static FeedbackPolicy bang(double threshold) { return FeedbackPolicy(PolicyKind::bang, threshold); }
    static FeedbackPolicy singular_synthesis(double S_bar) {
        return FeedbackPolicy(PolicyKind::singular_synthesis, S_bar);
    }
    /// flows[k] is applied on [breaks[k-1], breaks[k]) with breaks[-1] = 0, breaks[n] = inf.
    static FeedbackPolicy piecewise_constant(std::vector<double> breaks, std::vector<double> flows) {
        if (flows.size() != breaks.size() + 1) {
            throw ConfigError("piecewise_constant needs one more flow than break times");
        }
        if (!std::is_sorted(breaks.begin(), breaks.end()) ||
            std::adjacent_find(breaks.begin(), breaks.end()) != breaks.end()) {
            throw ConfigError("piecewise_constant break times must be strictly increasing");
        }
        FeedbackPolicy p(PolicyKind::piecewise_constant, 0.0);
        p.breaks_ = std::move(breaks);
        p.flows_ = std::move(flows);
        return p;
    }

    PolicyKind kind() const noexcept { return kind_; }
    /// Q for `constant`, the switching level for `bang` and `singular_synthesis`.
    double value() const noexcept { return value_; }
    const std::vector<double>& breaks() const noexcept { return breaks_; }
    const std::vector<double>& flows() const noexcept { return flows_; }

    bool has_level() const noexcept {
        return kind_ == PolicyKind::bang || kind_ == PolicyKind::singular_synthesis;
    }

    /// Index of the schedule piece active at time t.
    std::size_t piece(double t) const {
        return static_cast<std::size_t>(std::upper_bound(breaks_.begin(), breaks_.end(), t) -
                                        breaks_.begin());
    }

    /// Pointwise value of the law on the planar state.
    double flow(const ProcessParams& p, const GrowthModel& model, double t,
                const PlanarState& z) const {
        if (z.V >= p.V_max) return 0.0;
        switch (kind_) {
            case PolicyKind::constant: return value_;
            case PolicyKind::piecewise_constant: return flows_[piece(t)];
            case PolicyKind::bang:
            case PolicyKind::singular_synthesis: {
                if (std::abs(z.S - value_) <= pin_tolerance(p)) {
                    const double q = model.mu(value_) * biomass_X(p, {value_, z.V}) * z.V /
                                     (p.S_in - value_);
                    return std::min(q, p.Q_max);
                }
                return z.S < value_ ? p.Q_max : 0.0;
            }
        }
        return 0.0;
    }

    /// Band around the switching level inside which the state is held on it.
    static double pin_tolerance(const ProcessParams& p) { return 1e-9 * p.S_in; }

private:
    FeedbackPolicy(PolicyKind k, double v) : kind_(k), value_(v) {}

    PolicyKind kind_ = PolicyKind::constant;
    double value_ = 0.0;
    std::vector<double> breaks_;
    std::vector<double> flows_;
};

}  // namespace fedbatch
