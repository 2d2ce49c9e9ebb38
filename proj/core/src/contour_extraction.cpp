#include "cardlv/contour_extraction.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <unordered_map>

#include "cardlv/errors.hpp"

namespace cardlv {

namespace {

// Border value for the one-pixel outside pad; large so that frame-closure
// vertices land on the frame itself.
constexpr double kOutside = 1e9;

enum Edge : int { kTop = 0, kRight = 1, kBottom = 2, kLeft = 3 };

struct Segment {
    std::int64_t e0, e1;  // global edge ids of the two endpoints
};

struct Tracer {
    int ph, pw;                  // padded dimensions
    std::vector<double> f;       // padded field
    std::vector<Segment> segs;
    std::unordered_map<std::int64_t, std::array<int, 2>> edge_segs;

    double val(int r, int c) const { return f[static_cast<std::size_t>(r) * pw + c]; }
    static bool inside(double v) { return v <= 0.0; }

    // Global id of a cell-local edge. Horizontal edges use axis 0, vertical 1.
    std::int64_t edge_id(int cell_r, int cell_c, int which) const {
        const std::int64_t n = static_cast<std::int64_t>(ph) * pw;
        switch (which) {
            case kTop: return 0 * n + static_cast<std::int64_t>(cell_r) * pw + cell_c;
            case kBottom: return 0 * n + static_cast<std::int64_t>(cell_r + 1) * pw + cell_c;
            case kLeft: return n + static_cast<std::int64_t>(cell_r) * pw + cell_c;
            default: return n + static_cast<std::int64_t>(cell_r) * pw + (cell_c + 1);
        }
    }

    // Subpixel crossing point of a global edge, in padded coordinates.
    Point edge_point(std::int64_t id) const {
        const std::int64_t n = static_cast<std::int64_t>(ph) * pw;
        const bool vertical = id >= n;
        const std::int64_t rc = vertical ? id - n : id;
        const int r = static_cast<int>(rc / pw);
        const int c = static_cast<int>(rc % pw);
        const double va = val(r, c);
        const double vb = vertical ? val(r + 1, c) : val(r, c + 1);
        const double t = va / (va - vb);
        return vertical ? Point{static_cast<double>(c), r + t} : Point{c + t, static_cast<double>(r)};
    }

    void add_segment(int cell_r, int cell_c, int ea, int eb) {
        const int idx = static_cast<int>(segs.size());
        const Segment s{edge_id(cell_r, cell_c, ea), edge_id(cell_r, cell_c, eb)};
        segs.push_back(s);
        for (std::int64_t e : {s.e0, s.e1}) {
            auto [it, fresh] = edge_segs.try_emplace(e, std::array<int, 2>{-1, -1});
            if (fresh)
                it->second[0] = idx;
            else
                it->second[1] = idx;
        }
    }

    void build_cells() {
        for (int r = 0; r + 1 < ph; ++r) {
            for (int c = 0; c + 1 < pw; ++c) {
                const double vtl = val(r, c), vtr = val(r, c + 1);
                const double vbl = val(r + 1, c), vbr = val(r + 1, c + 1);
                const int code = (inside(vtl) ? 1 : 0) | (inside(vtr) ? 2 : 0) |
                                 (inside(vbr) ? 4 : 0) | (inside(vbl) ? 8 : 0);
                switch (code) {
                    case 0:
                    case 15: break;
                    case 1:
                    case 14: add_segment(r, c, kTop, kLeft); break;
                    case 2:
                    case 13: add_segment(r, c, kTop, kRight); break;
                    case 3:
                    case 12: add_segment(r, c, kLeft, kRight); break;
                    case 4:
                    case 11: add_segment(r, c, kRight, kBottom); break;
                    case 6:
                    case 9: add_segment(r, c, kTop, kBottom); break;
                    case 7:
                    case 8: add_segment(r, c, kLeft, kBottom); break;
                    case 5:   // tl+br inside
                    case 10:  // tr+bl inside: saddle, decide by corner average
                    {
                        const bool center_in = inside(0.25 * (vtl + vtr + vbl + vbr));
                        const bool tl_in = (code == 5);
                        if (tl_in == center_in) {
                            // Inside corners joined through the cell center.
                            add_segment(r, c, kTop, kRight);
                            add_segment(r, c, kLeft, kBottom);
                        } else {
                            add_segment(r, c, kTop, kLeft);
                            add_segment(r, c, kRight, kBottom);
                        }
                        break;
                    }
                    default: break;
                }
            }
        }
    }

    std::vector<std::vector<std::int64_t>> trace_loops() {
        std::vector<std::vector<std::int64_t>> loops;
        std::vector<bool> used(segs.size(), false);
        for (std::size_t start = 0; start < segs.size(); ++start) {
            if (used[start]) continue;
            std::vector<std::int64_t> loop;
            int cur = static_cast<int>(start);
            std::int64_t enter = segs[start].e0;
            while (cur >= 0 && !used[cur]) {
                used[cur] = true;
                const std::int64_t exit = (segs[cur].e0 == enter) ? segs[cur].e1 : segs[cur].e0;
                loop.push_back(exit);
                const auto& pair = edge_segs.at(exit);
                const int next = (pair[0] == cur) ? pair[1] : pair[0];
                enter = exit;
                cur = next;
            }
            loops.push_back(std::move(loop));
        }
        return loops;
    }
};

} // namespace

std::vector<Contour> extract_zero_contours(const LevelSetField& field, double pixel_spacing) {
    if (field.height < 1 || field.width < 1)
        throw DimensionError("extract_zero_contour: empty field");

    Tracer tr;
    tr.ph = field.height + 2;
    tr.pw = field.width + 2;
    tr.f.assign(static_cast<std::size_t>(tr.ph) * tr.pw, kOutside);
    bool any_inside = false, any_outside = false;
    for (int r = 0; r < field.height; ++r) {
        for (int c = 0; c < field.width; ++c) {
            const double v = field.at(r, c);
            tr.f[static_cast<std::size_t>(r + 1) * tr.pw + (c + 1)] = v;
            (v <= 0.0 ? any_inside : any_outside) = true;
        }
    }
    if (!any_inside || !any_outside)
        throw NoContourError("extract_zero_contour: field has no sign change");

    tr.build_cells();
    auto loops = tr.trace_loops();

    std::vector<Contour> out;
    for (const auto& loop : loops) {
        std::vector<Point> pts;
        pts.reserve(loop.size());
        for (std::int64_t e : loop) {
            Point p = tr.edge_point(e);
            p.x = std::clamp(p.x - 1.0, 0.0, static_cast<double>(field.width - 1));
            p.y = std::clamp(p.y - 1.0, 0.0, static_cast<double>(field.height - 1));
            if (!pts.empty() && p.x == pts.back().x && p.y == pts.back().y) continue;
            pts.push_back(p);
        }
        while (pts.size() > 1 && pts.front().x == pts.back().x && pts.front().y == pts.back().y)
            pts.pop_back();
        if (pts.size() < 3) continue;

        // Normalize orientation: positive signed area.
        double twice = 0.0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const Point& a = pts[i];
            const Point& b = pts[(i + 1) % pts.size()];
            twice += a.x * b.y - b.x * a.y;
        }
        if (twice < 0.0) std::reverse(pts.begin(), pts.end());

        Contour c;
        c.points = std::move(pts);
        c.pixel_spacing = pixel_spacing;
        c.closed = true;
        out.push_back(std::move(c));
    }
    if (out.empty()) throw NoContourError("extract_zero_contour: no traceable zero level set");

    std::sort(out.begin(), out.end(), [](const Contour& a, const Contour& b) {
        return contour_area(a) > contour_area(b);
    });
    return out;
}

Contour extract_zero_contour(const LevelSetField& field, double pixel_spacing) {
    return extract_zero_contours(field, pixel_spacing).front();
}

} // namespace cardlv
