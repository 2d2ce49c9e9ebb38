#include "cardlv/signed_distance.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "cardlv/errors.hpp"

namespace cardlv {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Finite stand-in for "no seed"; keeps parabola intersections well defined in
// columns that contain no seed at all.
constexpr double kFar = 1e15;

// Felzenszwalb-Huttenlocher 1D squared distance transform over f[0..n).
void dt1d(const double* f, double* d, int n, std::vector<int>& v, std::vector<double>& z) {
    int k = 0;
    v[0] = 0;
    z[0] = -kInf;
    z[1] = kInf;
    for (int q = 1; q < n; ++q) {
        double s;
        for (;;) {
            const int p = v[k];
            s = ((f[q] + static_cast<double>(q) * q) - (f[p] + static_cast<double>(p) * p)) /
                (2.0 * (q - p));
            if (s > z[k]) break;
            --k;
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = kInf;
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (z[k + 1] < q) ++k;
        const double dq = q - v[k];
        d[q] = dq * dq + f[v[k]];
    }
}

// Squared Euclidean distance from every pixel to the nearest seed; seeds carry
// 0 in grid, everything else kFar.
void edt_squared(std::vector<double>& grid, int h, int w) {
    const int m = std::max(h, w);
    std::vector<double> f(m), d(m), z(m + 1);
    std::vector<int> v(m);
    for (int c = 0; c < w; ++c) {
        for (int r = 0; r < h; ++r) f[r] = grid[static_cast<std::size_t>(r) * w + c];
        dt1d(f.data(), d.data(), h, v, z);
        for (int r = 0; r < h; ++r) grid[static_cast<std::size_t>(r) * w + c] = d[r];
    }
    for (int r = 0; r < h; ++r) {
        double* row = grid.data() + static_cast<std::size_t>(r) * w;
        dt1d(row, d.data(), w, v, z);
        for (int c = 0; c < w; ++c) row[c] = d[c];
    }
}

} // namespace

LevelSetField signed_distance(const BinaryMask& mask) {
    const long fg = mask.count_foreground();
    if (fg == 0 || fg == static_cast<long>(mask.size()))
        throw DegenerateError("signed_distance: mask has no boundary (all " +
                              std::string(fg == 0 ? "background" : "foreground") + ")");

    const int h = mask.height, w = mask.width;
    std::vector<double> to_fg(mask.size()), to_bg(mask.size());
    for (std::size_t i = 0; i < mask.size(); ++i) {
        to_fg[i] = mask.data[i] ? 0.0 : kFar;
        to_bg[i] = mask.data[i] ? kFar : 0.0;
    }
    edt_squared(to_fg, h, w);
    edt_squared(to_bg, h, w);

    LevelSetField phi(h, w);
    for (std::size_t i = 0; i < mask.size(); ++i)
        phi.data[i] = std::sqrt(to_fg[i]) - std::sqrt(to_bg[i]);
    return phi;
}

} // namespace cardlv
