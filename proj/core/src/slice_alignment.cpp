#include "cardlv/slice_alignment.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <fstream>

#include "cardlv/errors.hpp"

namespace cardlv {

namespace {

// One-axis least squares on (i^2, i, 1) over the series' slice indices.
void fit_axis(const CenterSeries& series, bool x_axis, double& a, double& b, double& c,
              double& rms) {
    const std::vector<Point>& pts = series.observed;
    const int n = static_cast<int>(pts.size());
    Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
    Eigen::Vector3d atb = Eigen::Vector3d::Zero();
    for (int k = 0; k < n; ++k) {
        const double i = series.index_of(k);
        const Eigen::Vector3d row(i * i, i, 1.0);
        ata += row * row.transpose();
        atb += row * (x_axis ? pts[k].x : pts[k].y);
    }
    const Eigen::Vector3d sol = ata.partialPivLu().solve(atb);
    if (!sol.allFinite()) throw NumericError("fit_quadratic: singular normal equations");
    a = sol[0];
    b = sol[1];
    c = sol[2];
    double ssr = 0.0;
    for (int k = 0; k < n; ++k) {
        const double i = series.index_of(k);
        const double fit = a * i * i + b * i + c;
        const double r = (x_axis ? pts[k].x : pts[k].y) - fit;
        ssr += r * r;
    }
    rms = std::sqrt(ssr / n);
}

} // namespace

QuadraticFit fit_quadratic(const CenterSeries& series) {
    if (series.size() < 3)
        throw InputError("fit_quadratic: need at least 3 slices, got " +
                         std::to_string(series.size()));
    if (!series.indices.empty() &&
        series.indices.size() != series.observed.size())
        throw InputError("fit_quadratic: indices/observed length mismatch");
    QuadraticFit fit;
    fit_axis(series, true, fit.ax, fit.bx, fit.cx, fit.residual_rms_x);
    fit_axis(series, false, fit.ay, fit.by, fit.cy, fit.residual_rms_y);
    return fit;
}

std::vector<Point> corrected_centers(const QuadraticFit& fit, int n) {
    std::vector<Point> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int k = 1; k <= n; ++k) {
        const double i = static_cast<double>(k);
        out.push_back({fit.ax * i * i + fit.bx * i + fit.cx,
                       fit.ay * i * i + fit.by * i + fit.cy});
    }
    return out;
}

NoiseModel estimate_noise(const CenterSeries& series, const QuadraticFit& fit) {
    const int n = series.size();
    NoiseModel nm;
    if (n <= 3) return nm;  // saturated fit: no residual degrees of freedom
    double ssx = 0.0, ssy = 0.0;
    for (int k = 0; k < n; ++k) {
        const double i = series.index_of(k);
        const double rx = series.observed[k].x - (fit.ax * i * i + fit.bx * i + fit.cx);
        const double ry = series.observed[k].y - (fit.ay * i * i + fit.by * i + fit.cy);
        ssx += rx * rx;
        ssy += ry * ry;
    }
    nm.sigma_w = std::sqrt(ssx / (n - 3));
    nm.sigma_v = std::sqrt(ssy / (n - 3));
    return nm;
}

std::vector<Contour> align_contours(const std::vector<Contour>& contours,
                                    const std::vector<Point>& observed,
                                    const std::vector<Point>& corrected) {
    if (contours.size() != observed.size() || contours.size() != corrected.size())
        throw InputError("align_contours: list length mismatch");
    std::vector<Contour> out;
    out.reserve(contours.size());
    for (std::size_t i = 0; i < contours.size(); ++i)
        out.push_back(translate(contours[i], corrected[i].x - observed[i].x,
                                corrected[i].y - observed[i].y));
    return out;
}

AlignmentReport align_centers(const std::vector<Point>& observed,
                              const std::vector<int>& indices) {
    AlignmentReport rep;
    rep.observed = observed;
    if (observed.size() < 3) {
        rep.corrected = observed;
        rep.residuals.assign(observed.size(), Point{0.0, 0.0});
        rep.passthrough = true;
        return rep;
    }
    CenterSeries series{observed, indices};
    rep.fit = fit_quadratic(series);
    rep.corrected.reserve(observed.size());
    for (int k = 0; k < series.size(); ++k) {
        const double i = series.index_of(k);
        rep.corrected.push_back({rep.fit.ax * i * i + rep.fit.bx * i + rep.fit.cx,
                                 rep.fit.ay * i * i + rep.fit.by * i + rep.fit.cy});
    }
    rep.noise = estimate_noise(series, rep.fit);
    rep.residuals.reserve(observed.size());
    for (std::size_t i = 0; i < observed.size(); ++i)
        rep.residuals.push_back(observed[i] - rep.corrected[i]);
    return rep;
}

AlignmentReport align_centers(const std::vector<Point>& observed) {
    return align_centers(observed, {});
}

void write_alignment_csv(const AlignmentReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw LoadError("write_alignment_csv: cannot write " + path);
    out << "slice,observed_x,observed_y,corrected_x,corrected_y,residual_x,residual_y\n";
    char buf[256];
    for (std::size_t i = 0; i < report.observed.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%zu,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n", i + 1,
                      report.observed[i].x, report.observed[i].y, report.corrected[i].x,
                      report.corrected[i].y, report.residuals[i].x, report.residuals[i].y);
        out << buf;
    }
    std::snprintf(buf, sizeof(buf), "# sigma_w=%.6f sigma_v=%.6f passthrough=%d\n",
                  report.noise.sigma_w, report.noise.sigma_v, report.passthrough ? 1 : 0);
    out << buf;
}

} // namespace cardlv
