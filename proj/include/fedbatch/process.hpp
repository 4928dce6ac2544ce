#pragma once

#include <cmath>
#include <string>

#include "fedbatch/error.hpp"

namespace fedbatch {

/// Operating constants of the reactor.
///
/// M0 = V0 (X0 + S0 - S_in) is the conserved mass offset of the planar reduction.
/// The yield y only enters the three-state model.
struct ProcessParams {
    double S_in = 10.0;
    double S_ref = 0.1;
    double V_max = 50.0;
    double Q_max = 5.0;
    double M0 = 170.0;
    double y = 5.0;

    void validate() const {
        auto finite = [](double v) { return std::isfinite(v); };
        if (!finite(S_in) || !finite(S_ref) || !finite(V_max) || !finite(Q_max) || !finite(M0) ||
            !finite(y)) {
            throw ConfigError("process parameters must be finite");
        }
        if (!(S_ref > 0.0) || !(S_in > S_ref)) throw ConfigError("need S_in > S_ref > 0");
        if (!(V_max > 0.0)) throw ConfigError("need V_max > 0");
        if (!(Q_max > 0.0)) throw ConfigError("need Q_max > 0");
        if (!(y > 0.0)) throw ConfigError("need y > 0");
    }
};

struct PlanarState {
    double S = 0.0;
    double V = 0.0;
};

struct FullState {
    double S = 0.0;
    double B = 0.0;
    double V = 0.0;
};

/// Membership in the working domain [S_ref, S_in) x (0, V_max].
inline bool in_working_domain(const ProcessParams& p, const PlanarState& z) {
    return z.S >= p.S_ref && z.S < p.S_in && z.V > 0.0 && z.V <= p.V_max;
}

/// Map (S, V) to the unit square (S / S_in, V / V_max).
inline PlanarState normalize(const ProcessParams& p, const PlanarState& z) {
    return {z.S / p.S_in, z.V / p.V_max};
}

inline PlanarState denormalize(const ProcessParams& p, const PlanarState& u) {
    return {u.S * p.S_in, u.V * p.V_max};
}

}  // namespace fedbatch
