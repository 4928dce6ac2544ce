#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fedbatch/io/config.hpp"
#include "fedbatch/synthesis.hpp"

namespace fedbatch::app {

struct FieldRun {
    ExtremalField field;
    std::optional<CriticalAngles> critical;  ///< set for the adaptive grid
    std::vector<double> alphas;
};

inline FieldRun build_field(const ProcessParams& p, const GrowthModel& m, double epsilon,
                            const io::FieldConfig& fc, unsigned threads) {
    FieldOptions fo;
    fo.step = fc.step;
    fo.stop = fc.stop;
    fo.jacobian = fc.jacobian;
    fo.threads = threads;
    FieldRun run;
    if (fc.alpha.mode == "uniform") {
        run.alphas = uniform_alpha_grid(fc.alpha.count, fc.alpha.lo, fc.alpha.hi);
    } else {
        AdaptiveGridOptions ag;
        ag.lo = fc.alpha.lo;
        ag.hi = fc.alpha.hi;
        run.critical = find_critical_angles(p, m, epsilon, ag, fo);
        run.alphas = adaptive_alpha_grid(*run.critical, fc.alpha.count, ag);
    }
    run.field = extremal_field(p, m, epsilon, run.alphas, fo);
    return run;
}

struct SynthesisRun {
    double epsilon = 0.0;
    FieldRun field;
    std::vector<IntersectionRecord> intersections;
    RegionMap regions;
    std::optional<IndifferenceCurve> curve;
    std::optional<HausdorffReport> hausdorff;
    std::string note;  ///< why the curve or the comparison is missing
};

/// Up to two arcs: the maxima of mu on (0, S_in) in increasing order.
inline std::vector<double> singular_levels(const GrowthModel& m, const ProcessParams& p) {
    std::vector<double> out;
    for (const auto& c : find_local_maxima(m, 0.0, p.S_in).maxima) out.push_back(c.S_bar);
    return out;
}

/// V0 slices evenly spread over the volume range of B_hull, capped at V_max.
inline std::vector<double> hull_volume_grid(const ProcessParams& p, const RegionMap& r, std::size_t n) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& q : r.B_hull) {
        lo = std::min(lo, q.y);
        hi = std::max(hi, q.y);
    }
    lo = std::max(lo, 1e-6 * p.V_max);
    hi = std::min(hi, p.V_max);
    std::vector<double> g;
    if (!(hi > lo)) return g;
    for (std::size_t k = 0; k < n; ++k) {
        g.push_back(lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1));
    }
    return g;
}

inline SynthesisRun synthesis_run(const ProcessParams& p, const GrowthModel& m, double epsilon,
                                  const io::RunConfig& cfg, unsigned threads) {
    const auto arcs = singular_levels(m, p);
    if (arcs.empty() || arcs.size() > 2) {
        throw DomainError("the synthesis report needs one or two maxima of mu, found " +
                          std::to_string(arcs.size()));
    }
    SynthesisRun run;
    run.epsilon = epsilon;
    run.field = build_field(p, m, epsilon, cfg.field, threads);
    run.intersections = detect_intersections(p, run.field.field.extremals);
    LabelOptions lo;
    lo.tracking_tol = cfg.report.tracking_tol;
    run.regions = label_extremals(p, run.field.field.extremals, arcs, run.intersections, lo);
    if (arcs.size() < 2) {
        run.note = "single arc: no indifference curve";
        return run;
    }
    if (run.regions.B_hull.empty()) {
        run.note = "no crossings: B_hull is empty";
        return run;
    }
    IndifferenceOptions io;
    io.scan_points = cfg.curve_i.scan_points;
    io.tol = cfg.curve_i.tol;
    io.threads = threads;
    const auto grid = hull_volume_grid(p, run.regions, cfg.report.hull_curve_points);
    if (grid.empty()) {
        run.note = "B_hull has no volume extent";
        return run;
    }
    run.curve = indifference_curve(p, m, arcs[0], arcs[1], grid, io);
    if (run.curve->samples.empty()) {
        run.note = "curve I has no samples over the B_hull volume range";
        return run;
    }
    run.hausdorff = compare_B_to_I(p, run.regions, *run.curve);
    return run;
}

}  // namespace fedbatch::app
