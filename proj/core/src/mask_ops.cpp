#include "cardlv/mask_ops.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "cardlv/errors.hpp"

namespace cardlv {

BinaryMask rasterize_polygon(const Contour& contour, int height, int width) {
    if (contour.points.size() < 3) throw InputError("rasterize_polygon: need >= 3 points");
    BinaryMask mask(height, width);
    const auto& pts = contour.points;
    const std::size_t n = pts.size();
    std::vector<double> xs;
    for (int r = 0; r < height; ++r) {
        const double y = static_cast<double>(r);
        xs.clear();
        for (std::size_t i = 0; i < n; ++i) {
            const Point& a = pts[i];
            const Point& b = pts[(i + 1) % n];
            // Half-open rule keeps vertices from being counted twice.
            if ((a.y <= y && y < b.y) || (b.y <= y && y < a.y)) {
                xs.push_back(a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y));
            }
        }
        std::sort(xs.begin(), xs.end());
        for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
            const int c0 = std::max(0, static_cast<int>(std::ceil(xs[k])));
            const int c1 = std::min(width - 1, static_cast<int>(std::floor(xs[k + 1])));
            for (int c = c0; c <= c1; ++c) mask.at(r, c) = 1;
        }
    }
    return mask;
}

BinaryMask rasterize_contour_line(const Contour& contour, int height, int width) {
    BinaryMask mask(height, width);
    const double len = contour_length(contour);
    const int samples = std::max<int>(16, static_cast<int>(std::ceil(len * 4.0)));
    const Contour dense = resample_arclength(contour, samples);
    for (const Point& p : dense.points) {
        const int c = static_cast<int>(std::lround(p.x));
        const int r = static_cast<int>(std::lround(p.y));
        if (r >= 0 && r < height && c >= 0 && c < width) mask.at(r, c) = 1;
    }
    return mask;
}

BinaryMask dilate3x3(const BinaryMask& mask) {
    BinaryMask out(mask.height, mask.width);
    for (int r = 0; r < mask.height; ++r) {
        for (int c = 0; c < mask.width; ++c) {
            if (!mask.at(r, c)) continue;
            for (int dr = -1; dr <= 1; ++dr) {
                for (int dc = -1; dc <= 1; ++dc) {
                    const int rr = r + dr, cc = c + dc;
                    if (rr >= 0 && rr < mask.height && cc >= 0 && cc < mask.width)
                        out.at(rr, cc) = 1;
                }
            }
        }
    }
    return out;
}

BinaryMask erode3x3(const BinaryMask& mask) {
    BinaryMask out(mask.height, mask.width);
    for (int r = 0; r < mask.height; ++r) {
        for (int c = 0; c < mask.width; ++c) {
            bool keep = true;
            for (int dr = -1; dr <= 1 && keep; ++dr) {
                for (int dc = -1; dc <= 1 && keep; ++dc) {
                    const int rr = r + dr, cc = c + dc;
                    if (rr < 0 || rr >= mask.height || cc < 0 || cc >= mask.width ||
                        !mask.at(rr, cc))
                        keep = false;
                }
            }
            out.at(r, c) = keep ? 1 : 0;
        }
    }
    return out;
}

BinaryMask close3x3(const BinaryMask& mask) { return erode3x3(dilate3x3(mask)); }

namespace {

// Iterative flood fill (4-connectivity) marking reachable pixels of `value`.
void flood(const BinaryMask& mask, std::vector<std::uint8_t>& visited, int sr, int sc,
           std::uint8_t value) {
    std::vector<std::pair<int, int>> stack;
    const auto push = [&](int r, int c) {
        if (r < 0 || r >= mask.height || c < 0 || c >= mask.width) return;
        const std::size_t i = static_cast<std::size_t>(r) * mask.width + c;
        if (visited[i] || mask.data[i] != value) return;
        visited[i] = 1;
        stack.emplace_back(r, c);
    };
    push(sr, sc);
    while (!stack.empty()) {
        auto [r, c] = stack.back();
        stack.pop_back();
        push(r - 1, c);
        push(r + 1, c);
        push(r, c - 1);
        push(r, c + 1);
    }
}

} // namespace

BinaryMask fill_holes(const BinaryMask& mask) {
    std::vector<std::uint8_t> outside(mask.size(), 0);
    for (int r = 0; r < mask.height; ++r) {
        flood(mask, outside, r, 0, 0);
        flood(mask, outside, r, mask.width - 1, 0);
    }
    for (int c = 0; c < mask.width; ++c) {
        flood(mask, outside, 0, c, 0);
        flood(mask, outside, mask.height - 1, c, 0);
    }
    BinaryMask out(mask.height, mask.width);
    for (std::size_t i = 0; i < mask.size(); ++i)
        out.data[i] = (mask.data[i] || !outside[i]) ? 1 : 0;
    return out;
}

BinaryMask largest_component(const BinaryMask& mask) {
    std::vector<std::uint8_t> visited(mask.size(), 0);
    BinaryMask best(mask.height, mask.width);
    long best_count = 0;
    std::vector<std::pair<int, int>> stack;
    std::vector<std::size_t> current;
    for (int r0 = 0; r0 < mask.height; ++r0) {
        for (int c0 = 0; c0 < mask.width; ++c0) {
            const std::size_t i0 = static_cast<std::size_t>(r0) * mask.width + c0;
            if (!mask.data[i0] || visited[i0]) continue;
            current.clear();
            stack.clear();
            visited[i0] = 1;
            stack.emplace_back(r0, c0);
            while (!stack.empty()) {
                auto [r, c] = stack.back();
                stack.pop_back();
                current.push_back(static_cast<std::size_t>(r) * mask.width + c);
                const int nb[4][2] = {{r - 1, c}, {r + 1, c}, {r, c - 1}, {r, c + 1}};
                for (auto& [rr, cc] : nb) {
                    if (rr < 0 || rr >= mask.height || cc < 0 || cc >= mask.width) continue;
                    const std::size_t i = static_cast<std::size_t>(rr) * mask.width + cc;
                    if (mask.data[i] && !visited[i]) {
                        visited[i] = 1;
                        stack.emplace_back(rr, cc);
                    }
                }
            }
            if (static_cast<long>(current.size()) > best_count) {
                best_count = static_cast<long>(current.size());
                std::fill(best.data.begin(), best.data.end(), 0);
                for (std::size_t i : current) best.data[i] = 1;
            }
        }
    }
    return best;
}

} // namespace cardlv
