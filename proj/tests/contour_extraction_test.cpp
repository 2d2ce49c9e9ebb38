#include <doctest.h>

#include <cmath>

#include "cardlv/contour_extraction.hpp"
#include "cardlv/errors.hpp"
#include "cardlv/mask_ops.hpp"
#include "cardlv/signed_distance.hpp"
#include "test_util.hpp"

using namespace cardlv;

TEST_CASE("extract_zero_contour: disk radius recovered") {
    BinaryMask disk = testutil::disk_mask(64, 64, 32, 32, 10);
    LevelSetField phi = signed_distance(disk);
    Contour c = extract_zero_contour(phi, 1.25);
    CHECK(c.pixel_spacing == 1.25);
    CHECK(c.closed);
    REQUIRE(c.points.size() >= 8);
    double mean_r = 0.0;
    for (const Point& p : c.points) mean_r += std::hypot(p.x - 32.0, p.y - 32.0);
    mean_r /= static_cast<double>(c.points.size());
    CHECK(std::abs(mean_r - 10.0) <= 0.5);
    for (const Point& p : c.points)
        CHECK(std::abs(std::hypot(p.x - 32.0, p.y - 32.0) - 10.0) <= 1.0);
}

TEST_CASE("extract_zero_contour: invariant under positive scaling") {
    BinaryMask disk = testutil::disk_mask(40, 40, 20, 18, 7);
    LevelSetField phi = signed_distance(disk);
    LevelSetField scaled = phi;
    for (double& v : scaled.data) v *= 3.0;
    Contour a = extract_zero_contour(phi);
    Contour b = extract_zero_contour(scaled);
    REQUIRE(a.points.size() == b.points.size());
    for (std::size_t i = 0; i < a.points.size(); ++i) {
        CHECK(a.points[i].x == doctest::Approx(b.points[i].x).epsilon(1e-12));
        CHECK(a.points[i].y == doctest::Approx(b.points[i].y).epsilon(1e-12));
    }
}

TEST_CASE("extract_zero_contour: half-plane closed along the frame") {
    LevelSetField phi(32, 32);
    for (int r = 0; r < 32; ++r)
        for (int c = 0; c < 32; ++c) phi.at(r, c) = c - 15.5;  // negative left half
    Contour ct = extract_zero_contour(phi);
    CHECK(ct.closed);
    // Half of the 32x32 frame, closed along the image edge.
    CHECK(contour_area(ct) == doctest::Approx(15.5 * 31.0).epsilon(0.05));
    for (const Point& p : ct.points) {
        CHECK(p.x >= 0.0);
        CHECK(p.x <= 31.0);
        CHECK(p.y >= 0.0);
        CHECK(p.y <= 31.0);
    }
}

TEST_CASE("extract_zero_contour: no sign change rejected") {
    LevelSetField pos(16, 16, 2.0), neg(16, 16, -2.0);
    CHECK_THROWS_AS(extract_zero_contour(pos), NoContourError);
    CHECK_THROWS_AS(extract_zero_contour(neg), NoContourError);
}

TEST_CASE("extract_zero_contour: largest loop wins") {
    BinaryMask mask(64, 64);
    for (int r = 0; r < 64; ++r)
        for (int c = 0; c < 64; ++c) {
            if (std::hypot(r - 32.0, c - 20.0) <= 12.0) mask.at(r, c) = 1;
            if (std::hypot(r - 32.0, c - 52.0) <= 4.0) mask.at(r, c) = 1;
        }
    LevelSetField phi = signed_distance(mask);
    auto loops = extract_zero_contours(phi);
    REQUIRE(loops.size() >= 2);
    CHECK(contour_area(loops[0]) > contour_area(loops[1]));
    Point c0 = contour_centroid(loops[0]);
    CHECK(c0.x == doctest::Approx(20.0).epsilon(0.05));
}

TEST_CASE("round trip mask -> sdf -> contour -> mask within perimeter slack") {
    BinaryMask mask(80, 80);
    for (int r = 0; r < 80; ++r)
        for (int c = 0; c < 80; ++c) {
            if (std::hypot(r - 40.0, c - 35.0) <= 14.0) mask.at(r, c) = 1;
            if (std::hypot(r - 36.0, c - 48.0) <= 9.0) mask.at(r, c) = 1;
        }
    LevelSetField phi = signed_distance(mask);
    Contour ct = extract_zero_contour(phi);
    BinaryMask back = rasterize_polygon(ct, 80, 80);

    long perimeter = 0, diff = 0;
    for (int r = 0; r < 80; ++r)
        for (int c = 0; c < 80; ++c) {
            if (mask.at(r, c)) {
                const bool edge = (r == 0 || !mask.at(r - 1, c)) || (r == 79 || !mask.at(r + 1, c)) ||
                                  (c == 0 || !mask.at(r, c - 1)) || (c == 79 || !mask.at(r, c + 1));
                if (edge) ++perimeter;
            }
            if (mask.at(r, c) != back.at(r, c)) ++diff;
        }
    CHECK(diff <= perimeter);
}
