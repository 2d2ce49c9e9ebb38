#include "cardlv/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cardlv/errors.hpp"

namespace cardlv {

double distance(Point a, Point b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

Contour make_contour(std::vector<Point> points, double pixel_spacing, bool closed) {
    if (closed && points.size() < 3)
        throw InputError("contour: closed contour needs at least 3 points, got " +
                         std::to_string(points.size()));
    if (points.empty())
        throw InputError("contour: empty point list");
    if (pixel_spacing <= 0.0)
        throw InputError("contour: pixel_spacing must be positive");
    for (std::size_t i = 1; i < points.size(); ++i) {
        if (points[i].x == points[i - 1].x && points[i].y == points[i - 1].y)
            throw InputError("contour: consecutive duplicate point at index " + std::to_string(i));
    }
    for (const Point& p : points) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y))
            throw InputError("contour: non-finite coordinate");
    }
    Contour c;
    c.points = std::move(points);
    c.pixel_spacing = pixel_spacing;
    c.closed = closed;
    return c;
}

double contour_length(const Contour& c) {
    const auto& pts = c.points;
    if (pts.size() < 2) return 0.0;
    double len = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) len += distance(pts[i - 1], pts[i]);
    if (c.closed) len += distance(pts.back(), pts.front());
    return len;
}

double contour_area(const Contour& c) {
    const auto& pts = c.points;
    if (pts.size() < 3) return 0.0;
    double twice = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const Point& a = pts[i];
        const Point& b = pts[(i + 1) % pts.size()];
        twice += a.x * b.y - b.x * a.y;
    }
    return std::abs(twice) * 0.5;
}

Point contour_centroid(const Contour& c) {
    const auto& pts = c.points;
    double twice = 0.0, cx = 0.0, cy = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const Point& a = pts[i];
        const Point& b = pts[(i + 1) % pts.size()];
        const double cross = a.x * b.y - b.x * a.y;
        twice += cross;
        cx += (a.x + b.x) * cross;
        cy += (a.y + b.y) * cross;
    }
    if (std::abs(twice) < 1e-12) {
        // Degenerate polygon: vertex mean.
        double sx = 0.0, sy = 0.0;
        for (const Point& p : pts) { sx += p.x; sy += p.y; }
        return {sx / static_cast<double>(pts.size()), sy / static_cast<double>(pts.size())};
    }
    const double scale = 1.0 / (3.0 * twice);
    return {cx * scale, cy * scale};
}

Contour resample_arclength(const Contour& c, int n) {
    if (n < 3) throw InputError("resample_arclength: need n >= 3");
    const auto& pts = c.points;
    if (pts.empty()) throw InputError("resample_arclength: empty contour");

    // Cumulative arc length over the closed polyline.
    std::vector<Point> ring = pts;
    if (c.closed) ring.push_back(pts.front());
    std::vector<double> cum(ring.size(), 0.0);
    for (std::size_t i = 1; i < ring.size(); ++i)
        cum[i] = cum[i - 1] + distance(ring[i - 1], ring[i]);
    const double total = cum.back();
    if (total <= 0.0) throw InputError("resample_arclength: zero-length contour");

    std::vector<Point> out;
    out.reserve(static_cast<std::size_t>(n));
    std::size_t seg = 0;
    for (int k = 0; k < n; ++k) {
        const double target = total * static_cast<double>(k) / static_cast<double>(n);
        while (seg + 1 < cum.size() - 1 && cum[seg + 1] < target) ++seg;
        const double seg_len = cum[seg + 1] - cum[seg];
        const double t = seg_len > 0.0 ? (target - cum[seg]) / seg_len : 0.0;
        out.push_back(ring[seg] + (ring[seg + 1] - ring[seg]) * t);
    }
    // Arc-length sampling can land twice on the same spot for tiny segments.
    std::vector<Point> dedup;
    dedup.reserve(out.size());
    for (const Point& p : out) {
        if (dedup.empty() || p.x != dedup.back().x || p.y != dedup.back().y) dedup.push_back(p);
    }
    Contour r;
    r.points = std::move(dedup);
    r.pixel_spacing = c.pixel_spacing;
    r.closed = c.closed;
    return r;
}

Contour translate(const Contour& c, double dx, double dy) {
    Contour out = c;
    for (Point& p : out.points) {
        p.x += dx;
        p.y += dy;
    }
    return out;
}

double point_segment_distance(Point p, Point a, Point b) {
    const double vx = b.x - a.x, vy = b.y - a.y;
    const double len2 = vx * vx + vy * vy;
    if (len2 <= 0.0) return distance(p, a);
    double t = ((p.x - a.x) * vx + (p.y - a.y) * vy) / len2;
    t = std::clamp(t, 0.0, 1.0);
    return std::hypot(p.x - (a.x + t * vx), p.y - (a.y + t * vy));
}

double point_contour_distance(Point p, const Contour& c) {
    const auto& pts = c.points;
    if (pts.empty()) throw InputError("point_contour_distance: empty contour");
    if (pts.size() == 1) return distance(p, pts[0]);
    double best = std::numeric_limits<double>::infinity();
    const std::size_t n = pts.size();
    const std::size_t last = c.closed ? n : n - 1;
    for (std::size_t i = 0; i < last; ++i) {
        best = std::min(best, point_segment_distance(p, pts[i], pts[(i + 1) % n]));
    }
    return best;
}

} // namespace cardlv
