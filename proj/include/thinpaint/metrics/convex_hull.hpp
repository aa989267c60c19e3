#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

namespace thinpaint {

struct Point2 {
    double x = 0.0;
    double y = 0.0;
    bool operator<(const Point2& o) const { return x < o.x || (x == o.x && y < o.y); }
    bool operator==(const Point2& o) const { return x == o.x && y == o.y; }
};

inline double cross(const Point2& o, const Point2& a, const Point2& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

/// Convex hull by Andrew's monotone chain, counter-clockwise, no collinear points
/// on the boundary. Duplicate input points are ignored.
inline std::vector<Point2> convex_hull(std::vector<Point2> pts) {
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    const std::size_t n = pts.size();
    if (n < 3) return pts;

    std::vector<Point2> hull(2 * n);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    const std::size_t lower = k + 1;
    for (std::size_t i = n - 1; i-- > 0;) {
        while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull;
}

/// Shoelace area of a simple polygon given in order.
inline double polygon_area(const std::vector<Point2>& poly) {
    if (poly.size() < 3) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Point2& a = poly[i];
        const Point2& b = poly[(i + 1) % poly.size()];
        acc += a.x * b.y - b.x * a.y;
    }
    return std::abs(acc) / 2.0;
}

inline double convex_hull_area(const std::vector<Point2>& pts) {
    return polygon_area(convex_hull(pts));
}

} // namespace thinpaint
