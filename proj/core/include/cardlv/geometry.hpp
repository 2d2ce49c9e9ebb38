#pragma once

#include <vector>

namespace cardlv {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

inline Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
inline Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
inline Point operator*(Point a, double s) { return {a.x * s, a.y * s}; }

double distance(Point a, Point b);

/// Ordered subpixel polyline on one slice. Coordinates are pixel units
/// (x = column, y = row); pixel_spacing converts to millimetres.
struct Contour {
    std::vector<Point> points;
    double pixel_spacing = 1.0;
    bool closed = true;
};

/// Validates the contour invariants (>= 3 points when closed, no consecutive
/// duplicates, positive spacing) and returns the contour.
Contour make_contour(std::vector<Point> points, double pixel_spacing = 1.0, bool closed = true);

/// Total polyline length in pixel units (includes the closing edge).
double contour_length(const Contour& c);

/// Enclosed area in px^2 by the shoelace formula, always nonnegative.
double contour_area(const Contour& c);

/// Area centroid of the enclosed polygon. Falls back to the vertex mean for
/// degenerate (near zero area) contours.
Point contour_centroid(const Contour& c);

/// Resamples the contour to exactly n points uniformly spaced by arc length.
Contour resample_arclength(const Contour& c, int n);

Contour translate(const Contour& c, double dx, double dy);

double point_segment_distance(Point p, Point a, Point b);

/// Minimum distance from p to any segment of the (closed) polyline, px units.
double point_contour_distance(Point p, const Contour& c);

} // namespace cardlv
