#pragma once

#include <array>
#include <cmath>
#include <string>

#include "fedbatch/error.hpp"
#include "fedbatch/growth.hpp"
#include "fedbatch/process.hpp"

namespace fedbatch {

/// Biomass concentration recovered from the conserved mass: X = M0/V + S_in - S.
inline double biomass_X(const ProcessParams& p, const PlanarState& z) {
    if (!(z.V > 0.0)) throw DomainError("biomass_X needs V > 0");
    return p.M0 / z.V + p.S_in - z.S;
}

inline void check_flow(const ProcessParams& p, double Q) {
    if (!(Q >= 0.0) || !(Q <= p.Q_max)) {
        throw ControlError("flow Q = " + std::to_string(Q) + " outside [0, Q_max]");
    }
}

struct PlanarRate {
    double dS = 0.0;
    double dV = 0.0;
};

struct FullRate {
    double dS = 0.0;
    double dB = 0.0;
    double dV = 0.0;
};

inline PlanarRate planar_vector_field(const ProcessParams& p, const GrowthModel& model,
                                      const PlanarState& z, double Q) {
    check_flow(p, Q);
    const double X = biomass_X(p, z);
    return {-model.mu(z.S) * X + Q / z.V * (p.S_in - z.S), Q};
}

inline FullRate full_vector_field(const ProcessParams& p, const GrowthModel& model,
                                  const FullState& x, double Q) {
    check_flow(p, Q);
    if (!(x.V > 0.0)) throw DomainError("full_vector_field needs V > 0");
    const double mu = model.mu(x.S);
    const double D = Q / x.V;
    return {-mu * x.B / p.y + D * (p.S_in - x.S), mu * x.B - D * x.B, Q};
}

/// M = V (B/y + S - S_in), invariant along the three-state flow.
inline double conserved_M(const ProcessParams& p, const FullState& x) {
    return x.V * (x.B / p.y + x.S - p.S_in);
}

/// Three-state point consistent with a planar state under the process's M0.
inline FullState lift_state(const ProcessParams& p, const PlanarState& z) {
    return {z.S, p.y * biomass_X(p, z), z.V};
}

}  // namespace fedbatch
