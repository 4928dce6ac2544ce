#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <boost/geometry.hpp>
#include <boost/geometry/geometries/register/point.hpp>

namespace fedbatch::geometry {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

}  // namespace fedbatch::geometry

BOOST_GEOMETRY_REGISTER_POINT_2D(fedbatch::geometry::Point, double,
                                 boost::geometry::cs::cartesian, x, y)

namespace fedbatch::geometry {

namespace bg = boost::geometry;
using Polyline = bg::model::linestring<Point>;
using Polygon = bg::model::polygon<Point, false, true>;

inline double dist(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// Signed distance of c from the line through a and b (positive on the left).
inline double orientation(const Point& a, const Point& b, const Point& c) {
    const double L = dist(a, b);
    if (!(L > 0.0)) return 0.0;
    return ((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)) / L;
}

/// Proper crossing of segments ab and cd. Each endpoint must sit farther than
/// `snap` from the other segment's line, on opposite sides. Touching and
/// collinear overlaps are not crossings.
inline bool segments_cross(const Point& a, const Point& b, const Point& c, const Point& d,
                           double snap, Point* at = nullptr) {
    const double o1 = orientation(a, b, c);
    const double o2 = orientation(a, b, d);
    if (!(std::abs(o1) > snap && std::abs(o2) > snap) || (o1 > 0.0) == (o2 > 0.0)) return false;
    const double o3 = orientation(c, d, a);
    const double o4 = orientation(c, d, b);
    if (!(std::abs(o3) > snap && std::abs(o4) > snap) || (o3 > 0.0) == (o4 > 0.0)) return false;
    if (at) {
        const double t = o3 / (o3 - o4);
        *at = {a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)};
    }
    return true;
}

inline Polyline polyline(const std::vector<Point>& pts) { return Polyline(pts.begin(), pts.end()); }

/// Counter-clockwise hull vertices, without the closing repeat.
inline std::vector<Point> convex_hull(const std::vector<Point>& pts) {
    if (pts.size() < 3) return pts;
    bg::model::multi_point<Point> mp(pts.begin(), pts.end());
    Polygon hull;
    bg::convex_hull(mp, hull);
    std::vector<Point> out(hull.outer().begin(), hull.outer().end());
    if (out.size() > 1) out.pop_back();
    return out;
}

/// Hull of the points grown by a disc of radius r (circumscribed 32-gon per point).
inline std::vector<Point> inflated_hull(const std::vector<Point>& pts, double r) {
    if (pts.empty()) return {};
    constexpr int n = 32;
    const double R = r / std::cos(std::numbers::pi / n);
    std::vector<Point> grown;
    for (const auto& p : convex_hull(pts)) {
        for (int k = 0; k < n; ++k) {
            const double a = 2.0 * std::numbers::pi * k / n;
            grown.push_back({p.x + R * std::cos(a), p.y + R * std::sin(a)});
        }
    }
    return convex_hull(grown);
}

inline Polygon polygon(const std::vector<Point>& ring) {
    Polygon poly;
    poly.outer().assign(ring.begin(), ring.end());
    if (!ring.empty()) poly.outer().push_back(ring.front());
    return poly;
}

inline bool covered_by(const Point& p, const std::vector<Point>& ring) {
    if (ring.size() < 3) return false;
    return bg::covered_by(p, polygon(ring));
}

/// Closed boundary of a polygon as a polyline.
inline std::vector<Point> closed(const std::vector<Point>& ring) {
    std::vector<Point> c = ring;
    if (!c.empty()) c.push_back(c.front());
    return c;
}

/// Directed discrete Hausdorff distance after densifying both polylines to spacing h.
inline double directed_hausdorff(const std::vector<Point>& a, const std::vector<Point>& b,
                                 double h) {
    auto dense = [h](const std::vector<Point>& pts) {
        Polyline out;
        if (pts.size() < 2) return polyline(pts);
        bg::densify(polyline(pts), out, h);
        return out;
    };
    const Polyline da = dense(a);
    const Polyline db = dense(b);
    if (db.size() == 1) {
        double d = 0.0;
        for (const auto& p : da) d = std::max(d, dist(p, db.front()));
        return d;
    }
    if (da.size() == 1) {
        return bg::discrete_hausdorff_distance(da.front(), bg::model::multi_point<Point>(db.begin(), db.end()));
    }
    return bg::discrete_hausdorff_distance(da, db);
}

}  // namespace fedbatch::geometry
