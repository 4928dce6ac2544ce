#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "fedbatch/geometry.hpp"
#include "fedbatch/pmp.hpp"
#include "fedbatch/regularized.hpp"

namespace fedbatch {

struct IntersectionRecord {
    double alpha_i = 0.0;
    double alpha_j = 0.0;
    PlanarState point;
    double t_back_i = 0.0;
    double t_back_j = 0.0;
};

struct IntersectionOptions {
    double exclusion_radius = 1e-3;  ///< normalized radius around (S_ref, V_max)
    double snap = 1e-12;             ///< normalized orientation tolerance
    double merge = 1e-8;             ///< normalized distance under which records merge
    std::size_t cells = 256;         ///< bucket grid per axis
};

namespace detail {

struct Seg {
    std::size_t line;
    std::size_t k;  ///< segment between samples k and k+1
};

}  // namespace detail

/// Crossings between different polylines of the field, strictly inside the
/// working domain, in (S/S_in, V/V_max) coordinates.
inline std::vector<IntersectionRecord> detect_intersections(const ProcessParams& p,
                                                            const std::vector<Extremal>& field,
                                                            const IntersectionOptions& opt = {}) {
    using geometry::Point;
    std::vector<std::vector<Point>> lines(field.size());
    for (std::size_t i = 0; i < field.size(); ++i) {
        for (const auto& s : field[i].samples) lines[i].push_back({s.S / p.S_in, s.V / p.V_max});
    }
    const std::size_t nc = opt.cells;
    auto cell_of = [nc](double v) {
        const double c = std::floor(v * static_cast<double>(nc));
        return static_cast<long>(std::clamp(c, -1.0, static_cast<double>(nc)));
    };
    std::map<std::pair<long, long>, std::vector<detail::Seg>> buckets;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        for (std::size_t k = 0; k + 1 < lines[i].size(); ++k) {
            const Point& a = lines[i][k];
            const Point& b = lines[i][k + 1];
            const long x0 = cell_of(std::min(a.x, b.x)), x1 = cell_of(std::max(a.x, b.x));
            const long y0 = cell_of(std::min(a.y, b.y)), y1 = cell_of(std::max(a.y, b.y));
            for (long x = x0; x <= x1; ++x) {
                for (long y = y0; y <= y1; ++y) buckets[{x, y}].push_back({i, k});
            }
        }
    }

    const Point zf{p.S_ref / p.S_in, 1.0};
    const double s_lo = p.S_ref / p.S_in;
    std::vector<IntersectionRecord> raw;
    std::vector<Point> raw_pts;
    for (const auto& [key, segs] : buckets) {
        for (std::size_t u = 0; u < segs.size(); ++u) {
            for (std::size_t v = u + 1; v < segs.size(); ++v) {
                detail::Seg s1 = segs[u];
                detail::Seg s2 = segs[v];
                if (s1.line == s2.line) continue;
                if (s2.line < s1.line) std::swap(s1, s2);
                const Point& a = lines[s1.line][s1.k];
                const Point& b = lines[s1.line][s1.k + 1];
                const Point& c = lines[s2.line][s2.k];
                const Point& d = lines[s2.line][s2.k + 1];
                Point at;
                if (!geometry::segments_cross(a, b, c, d, opt.snap, &at)) continue;
                // Count a crossing once: in the bucket that holds it.
                if (cell_of(at.x) != key.first || cell_of(at.y) != key.second) continue;
                if (!(at.x > s_lo && at.x < 1.0 && at.y > 0.0 && at.y < 1.0)) continue;
                if (geometry::dist(at, zf) <= opt.exclusion_radius) continue;
                auto t_at = [&](const detail::Seg& s, const Point& q) {
                    const auto& A = field[s.line].samples[s.k];
                    const auto& B = field[s.line].samples[s.k + 1];
                    const Point& P = lines[s.line][s.k];
                    const Point& Q = lines[s.line][s.k + 1];
                    const double L = geometry::dist(P, Q);
                    const double w = L > 0.0 ? geometry::dist(P, q) / L : 0.0;
                    return A.t_back + w * (B.t_back - A.t_back);
                };
                raw.push_back({field[s1.line].config.alpha, field[s2.line].config.alpha,
                               {at.x * p.S_in, at.y * p.V_max}, t_at(s1, at), t_at(s2, at)});
                raw_pts.push_back(at);
            }
        }
    }

    // Deterministic order, then merge near-duplicates.
    std::vector<std::size_t> idx(raw.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return std::tie(raw[a].alpha_i, raw[a].alpha_j, raw_pts[a].x, raw_pts[a].y) <
               std::tie(raw[b].alpha_i, raw[b].alpha_j, raw_pts[b].x, raw_pts[b].y);
    });
    std::vector<IntersectionRecord> out;
    std::vector<Point> kept;
    for (std::size_t i : idx) {
        bool dup = false;
        for (std::size_t j = kept.size(); j-- > 0;) {
            if (out[j].alpha_i != raw[i].alpha_i || out[j].alpha_j != raw[i].alpha_j) break;
            if (geometry::dist(kept[j], raw_pts[i]) <= opt.merge) {
                dup = true;
                break;
            }
        }
        if (!dup) {
            out.push_back(raw[i]);
            kept.push_back(raw_pts[i]);
        }
    }
    return out;
}

enum class ExtremalLabel { tracks_S1, tracks_S2, boundary_direct, unlabeled };

inline std::string label_name(ExtremalLabel l) {
    switch (l) {
        case ExtremalLabel::tracks_S1: return "tracks_S1";
        case ExtremalLabel::tracks_S2: return "tracks_S2";
        case ExtremalLabel::boundary_direct: return "boundary_direct";
        case ExtremalLabel::unlabeled: return "unlabeled";
    }
    return "?";
}

struct TrackingSegment {
    double t_start = 0.0;
    double t_end = 0.0;
};

struct LabelOptions {
    double tracking_tol = 0.05;   ///< band half-width as a fraction of S_in
    double min_fraction = 0.1;    ///< share of the extremal's duration spent in the band
    double hull_inflation = 1e-3; ///< normalized
};

struct RegionMap {
    std::vector<double> alphas;
    std::vector<ExtremalLabel> labels;
    std::vector<std::optional<TrackingSegment>> tracking;  ///< the segment behind the label
    std::vector<geometry::Point> B_hull;                    ///< (S, V), counter-clockwise
    std::vector<double> A1;  ///< angles of S1-trackers with no crossing up to the end of tracking
    std::vector<double> A2;
    std::vector<std::string> reports;
};

namespace detail {

/// Longest contiguous backward-time interval with |S - level| <= band.
inline std::optional<TrackingSegment> longest_band_stay(const Extremal& e, double level,
                                                        double band) {
    std::optional<TrackingSegment> best;
    std::optional<double> start;
    const auto& s = e.samples;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const bool in = std::abs(s[i].S - level) <= band;
        if (in && !start) start = s[i].t_back;
        const bool close = start && (!in || i + 1 == s.size());
        if (close) {
            const double end = in ? s[i].t_back : s[i - 1].t_back;
            if (!best || end - *start > best->t_end - best->t_start) best = TrackingSegment{*start, end};
            start.reset();
        }
    }
    return best;
}

}  // namespace detail

/// Tags each extremal by the singular arc it rides and builds the crossing region B.
inline RegionMap label_extremals(const ProcessParams& p, const std::vector<Extremal>& field,
                                 const std::vector<double>& arcs,
                                 const std::vector<IntersectionRecord>& crossings,
                                 const LabelOptions& opt = {}) {
    if (arcs.empty() || arcs.size() > 2) {
        throw DomainError("label_extremals handles one or two singular arcs");
    }
    RegionMap r;
    const double band = opt.tracking_tol * p.S_in;
    for (const auto& e : field) {
        r.alphas.push_back(e.config.alpha);
        std::vector<std::optional<TrackingSegment>> hits;
        for (double a : arcs) {
            auto seg = detail::longest_band_stay(e, a, band);
            if (seg && seg->t_end - seg->t_start >= opt.min_fraction * e.duration() &&
                seg->t_end > seg->t_start) {
                hits.push_back(seg);
            } else {
                hits.push_back(std::nullopt);
            }
        }
        const std::size_t n_hit = std::count_if(hits.begin(), hits.end(), [](const auto& h) { return h.has_value(); });
        if (n_hit > 1) {
            r.labels.push_back(ExtremalLabel::unlabeled);
            r.tracking.push_back(std::nullopt);
            char buf[128];
            std::snprintf(buf, sizeof buf, "alpha %.17g tracks both arcs", e.config.alpha);
            r.reports.emplace_back(buf);
        } else if (n_hit == 1) {
            const bool first = hits[0].has_value();
            r.labels.push_back(first ? ExtremalLabel::tracks_S1 : ExtremalLabel::tracks_S2);
            r.tracking.push_back(first ? hits[0] : hits[1]);
        } else if (e.stop == ExtremalStop::min_volume) {
            r.labels.push_back(ExtremalLabel::boundary_direct);
            r.tracking.push_back(std::nullopt);
        } else {
            r.labels.push_back(ExtremalLabel::unlabeled);
            r.tracking.push_back(std::nullopt);
        }
    }

    for (std::size_t i = 0; i < field.size(); ++i) {
        if (r.labels[i] != ExtremalLabel::tracks_S1 && r.labels[i] != ExtremalLabel::tracks_S2) continue;
        const double a = field[i].config.alpha;
        const double t_end = r.tracking[i]->t_end;
        const bool crossed = std::any_of(crossings.begin(), crossings.end(), [&](const auto& c) {
            return (c.alpha_i == a && c.t_back_i <= t_end) || (c.alpha_j == a && c.t_back_j <= t_end);
        });
        if (crossed) continue;
        (r.labels[i] == ExtremalLabel::tracks_S1 ? r.A1 : r.A2).push_back(a);
    }

    std::vector<geometry::Point> pts;
    for (const auto& c : crossings) pts.push_back({c.point.S / p.S_in, c.point.V / p.V_max});
    for (const auto& q : geometry::inflated_hull(pts, opt.hull_inflation)) {
        r.B_hull.push_back({q.x * p.S_in, q.y * p.V_max});
    }
    return r;
}

struct IndifferenceSample {
    double V0 = 0.0;
    double S_star = 0.0;
    double T = 0.0;         ///< mean of the two times at S_star
    double T1 = 0.0;
    double T2 = 0.0;
    double residual = 0.0;  ///< |T1 - T2| at S_star
    double bracket_lo = 0.0;
    double bracket_hi = 0.0;
    int iterations = 0;
};

struct OmittedSlice {
    double V0 = 0.0;
    std::string reason;
};

struct IndifferenceCurve {
    std::vector<IndifferenceSample> samples;  ///< ordered by V0, then S_star
    std::vector<OmittedSlice> omitted;
    std::vector<double> multiple_roots;       ///< V0 slices with more than one sign change
};

struct IndifferenceOptions {
    std::size_t scan_points = 64;
    double tol = 1e-6;  ///< bracket width as a fraction of S_in
    unsigned threads = 1;
    SimulationOptions sim;
};

/// Points where the syntheses built on the two arcs take the same time.
inline IndifferenceCurve indifference_curve(const ProcessParams& p, const GrowthModel& model,
                                            double S1, double S2, const std::vector<double>& V0_grid,
                                            const IndifferenceOptions& opt = {}) {
    make_singular_arc(p, model, S1);
    make_singular_arc(p, model, S2);
    if (!(S1 < S2)) throw DomainError("indifference_curve needs S1 < S2");
    for (double v : V0_grid) {
        if (!(v > 0.0 && v <= p.V_max)) throw DomainError("V0 outside (0, V_max]");
    }
    struct Slice {
        std::vector<IndifferenceSample> samples;
        std::optional<std::string> omitted;
        bool multiple = false;
    };
    std::vector<Slice> slices(V0_grid.size());
    detail::parallel_for(V0_grid.size(), opt.threads, [&](std::size_t s) {
        const double V0 = V0_grid[s];
        Slice& out = slices[s];
        try {
            auto g = [&](double S0) {
                const double t1 = time_to_target(p, model, S1, {S0, V0}, opt.sim).T;
                const double t2 = time_to_target(p, model, S2, {S0, V0}, opt.sim).T;
                return std::array<double, 3>{t1 - t2, t1, t2};
            };
            const std::size_t n = opt.scan_points;
            std::vector<double> xs(n);
            std::vector<double> gs(n);
            double scale = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                xs[k] = S1 + (S2 - S1) * static_cast<double>(k + 1) / static_cast<double>(n + 1);
                const auto r = g(xs[k]);
                gs[k] = r[0];
                scale = std::max(scale, r[1]);
            }
            if (std::all_of(gs.begin(), gs.end(), [&](double v) { return std::abs(v) <= 1e-12 * scale; })) {
                out.omitted = "both syntheses coincide on this slice";
                return;
            }
            for (std::size_t k = 0; k + 1 < n; ++k) {
                if ((gs[k] < 0.0) == (gs[k + 1] < 0.0)) continue;
                double a = xs[k], b = xs[k + 1];
                const bool neg_a = gs[k] < 0.0;
                int it = 0;
                while (b - a > opt.tol * p.S_in) {
                    const double m = 0.5 * (a + b);
                    ((g(m)[0] < 0.0) == neg_a ? a : b) = m;
                    ++it;
                }
                const double S_star = 0.5 * (a + b);
                const auto r = g(S_star);
                out.samples.push_back({V0, S_star, 0.5 * (r[1] + r[2]), r[1], r[2], std::abs(r[0]),
                                       a, b, it});
            }
            if (out.samples.empty()) {
                out.omitted = gs.front() < 0.0 ? "S1 synthesis faster across the slice"
                                               : "S2 synthesis faster across the slice";
            }
            out.multiple = out.samples.size() > 1;
        } catch (const TimeoutError& e) {
            out.omitted = std::string("timeout: ") + e.what();
            out.samples.clear();
        }
    });
    IndifferenceCurve curve;
    for (std::size_t s = 0; s < slices.size(); ++s) {
        for (auto& smp : slices[s].samples) curve.samples.push_back(smp);
        if (slices[s].omitted) curve.omitted.push_back({V0_grid[s], *slices[s].omitted});
        if (slices[s].multiple) curve.multiple_roots.push_back(V0_grid[s]);
    }
    std::stable_sort(curve.samples.begin(), curve.samples.end(), [](const auto& a, const auto& b) {
        return a.V0 < b.V0 || (a.V0 == b.V0 && a.S_star < b.S_star);
    });
    return curve;
}

struct HausdorffReport {
    double hull_to_curve = 0.0;  ///< directed, from the B_hull boundary to curve I
    double curve_to_hull = 0.0;
    double symmetric = 0.0;
    std::vector<std::pair<double, double>> per_V0;  ///< (V0, distance of the curve sample to the boundary)
};

/// Compares the B_hull boundary with curve I in (S/S_in, V/V_max).
inline HausdorffReport compare_B_to_I(const ProcessParams& p, const RegionMap& region,
                                      const IndifferenceCurve& curve, double spacing = 1e-3) {
    if (region.B_hull.empty()) throw DomainError("B_hull is empty: no crossings to compare");
    if (curve.samples.empty()) throw DomainError("indifference curve has no samples");
    using geometry::Point;
    std::vector<Point> hull;
    for (const auto& q : region.B_hull) hull.push_back({q.x / p.S_in, q.y / p.V_max});
    const auto boundary = geometry::closed(hull);
    std::vector<Point> line;
    for (const auto& s : curve.samples) line.push_back({s.S_star / p.S_in, s.V0 / p.V_max});
    HausdorffReport r;
    r.hull_to_curve = geometry::directed_hausdorff(boundary, line, spacing);
    r.curve_to_hull = geometry::directed_hausdorff(line, boundary, spacing);
    r.symmetric = std::max(r.hull_to_curve, r.curve_to_hull);
    const auto bl = geometry::polyline(boundary);
    for (const auto& s : curve.samples) {
        const Point q{s.S_star / p.S_in, s.V0 / p.V_max};
        r.per_V0.emplace_back(s.V0, geometry::bg::distance(q, bl));
    }
    return r;
}

}  // namespace fedbatch
