#pragma once

#include <string>
#include <vector>

#include "cardlv/geometry.hpp"

namespace cardlv {

/// Observed per-slice contour centers, base -> apex order; slice i gets index
/// i+1 in the quadratic model unless explicit stack indices are supplied
/// (used when some slices of a stack are missing).
struct CenterSeries {
    std::vector<Point> observed;
    std::vector<int> indices;  ///< empty = 1..n
    int size() const { return static_cast<int>(observed.size()); }
    double index_of(int k) const {
        return indices.empty() ? static_cast<double>(k + 1) : static_cast<double>(indices[k]);
    }
};

struct QuadraticFit {
    double ax = 0, bx = 0, cx = 0;  ///< x(i) = ax i^2 + bx i + cx
    double ay = 0, by = 0, cy = 0;
    double residual_rms_x = 0;
    double residual_rms_y = 0;
};

/// Misalignment standard deviations estimated from the fit residuals with the
/// n-3 degrees-of-freedom correction. Diagnostic only.
struct NoiseModel {
    double sigma_w = 0;  ///< x axis
    double sigma_v = 0;  ///< y axis
};

/// Per-axis ordinary least squares on the basis (i^2, i, 1), normal equations
/// solved with partial pivoting. Requires n >= 3.
QuadraticFit fit_quadratic(const CenterSeries& series);

/// Evaluates the fitted polynomials at i = 1..n.
std::vector<Point> corrected_centers(const QuadraticFit& fit, int n);

NoiseModel estimate_noise(const CenterSeries& series, const QuadraticFit& fit);

/// Translates contour i by (corrected[i] - observed[i]); pure translation of
/// vertex coordinates.
std::vector<Contour> align_contours(const std::vector<Contour>& contours,
                                    const std::vector<Point>& observed,
                                    const std::vector<Point>& corrected);

struct AlignmentReport {
    std::vector<Point> observed;
    std::vector<Point> corrected;
    std::vector<Point> residuals;  ///< observed - corrected
    QuadraticFit fit;
    NoiseModel noise;
    bool passthrough = false;  ///< n < 3: corrected = observed, no fit
};

/// Fits and evaluates in one step; fewer than 3 centers pass through unchanged
/// with the passthrough flag raised.
AlignmentReport align_centers(const std::vector<Point>& observed);

/// Same with explicit stack indices for the design matrix.
AlignmentReport align_centers(const std::vector<Point>& observed,
                              const std::vector<int>& indices);

/// CSV report: slice, observed, corrected, residual columns plus a trailing
/// comment row with the noise estimates.
void write_alignment_csv(const AlignmentReport& report, const std::string& path);

} // namespace cardlv
